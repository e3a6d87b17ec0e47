//! The printable-ASCII password alphabet and its shift-key structure.

/// Number of characters in the alphabet (0x21..=0x7E).
pub const SIZE: usize = 94;

const FIRST: u8 = 0x21;
const LAST: u8 = 0x7E;

/// Unshifted / shifted symbol pairs on an ANSI keyboard.
const SYMBOL_PAIRS: [(char, char); 21] = [
    ('`', '~'),
    ('1', '!'),
    ('2', '@'),
    ('3', '#'),
    ('4', '$'),
    ('5', '%'),
    ('6', '^'),
    ('7', '&'),
    ('8', '*'),
    ('9', '('),
    ('0', ')'),
    ('-', '_'),
    ('=', '+'),
    ('[', '{'),
    (']', '}'),
    ('\\', '|'),
    (';', ':'),
    ('\'', '"'),
    (',', '<'),
    ('.', '>'),
    ('/', '?'),
];

/// Returns true if `c` is in the password alphabet.
pub fn contains(c: char) -> bool {
    (FIRST as char..=LAST as char).contains(&c)
}

/// Dense index of `c` in `0..SIZE`.
pub fn index(c: char) -> Option<usize> {
    contains(c).then(|| c as usize - FIRST as usize)
}

/// Character at dense index `i`.
///
/// # Panics
///
/// Panics if `i >= SIZE`.
pub fn char_at(i: usize) -> char {
    assert!(i < SIZE, "alphabet index {i} out of range");
    (FIRST + i as u8) as char
}

/// All alphabet characters in ascending code order.
pub fn chars() -> impl Iterator<Item = char> + Clone {
    (FIRST..=LAST).map(|b| b as char)
}

/// The unshifted key that produces `c`, or `None` if `c` is off-alphabet.
pub fn base_key(c: char) -> Option<char> {
    if !contains(c) {
        return None;
    }
    if c.is_ascii_uppercase() {
        return Some(c.to_ascii_lowercase());
    }
    if let Some(&(base, _)) = SYMBOL_PAIRS.iter().find(|(_, s)| *s == c) {
        return Some(base);
    }
    Some(c)
}

/// Whether `c` needs the shift modifier.
pub fn is_shifted(c: char) -> bool {
    base_key(c).is_some_and(|b| b != c)
}

/// The shifted character on base key `base`.
pub fn shifted(base: char) -> Option<char> {
    if base.is_ascii_lowercase() {
        return Some(base.to_ascii_uppercase());
    }
    SYMBOL_PAIRS.iter().find(|(b, _)| *b == base).map(|&(_, s)| s)
}

/// The character on key `base` typed with the given shift state.
pub fn with_shift(base: char, shift: bool) -> Option<char> {
    if shift {
        shifted(base)
    } else {
        (base_key(base) == Some(base)).then_some(base)
    }
}

/// The 47 unshifted keys, in ascending code order.
pub fn base_keys() -> impl Iterator<Item = char> {
    chars().filter(|&c| base_key(c) == Some(c))
}
