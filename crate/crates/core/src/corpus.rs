//! Password corpora: cleaning rules, newline-delimited corpus files, and a
//! seeded generator of human-like synthetic passwords so nothing in the
//! build depends on leaked data.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::alphabet;
use crate::rng::{seeded, SimRng};

/// Entry filter applied before training or evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cleaning {
    pub min_len: usize,
    pub max_len: usize,
}

impl Default for Cleaning {
    /// Printable ASCII, 5 to 30 characters.
    fn default() -> Self {
        Self { min_len: 5, max_len: 30 }
    }
}

impl Cleaning {
    /// Alphabet check only, any non-empty length.
    pub fn alphabet_only() -> Self {
        Self { min_len: 1, max_len: usize::MAX }
    }

    pub fn accepts(&self, pw: &str) -> bool {
        let len = pw.chars().count();
        len >= self.min_len && len <= self.max_len && pw.chars().all(alphabet::contains)
    }

    pub fn apply<'a, I, S>(&self, entries: I) -> Vec<String>
    where
        I: IntoIterator<Item = &'a S>,
        S: AsRef<str> + 'a + ?Sized,
    {
        entries
            .into_iter()
            .map(AsRef::as_ref)
            .filter(|pw| self.accepts(pw))
            .map(str::to_string)
            .collect()
    }
}

/// Splits a corpus file into entries, one password per line.
pub fn parse_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

/// Uniform random strings over the alphabet, one per entry of `like`, with
/// matching lengths.
pub fn random_like(like: &[String], rng: &mut SimRng) -> Vec<String> {
    like.iter()
        .map(|pw| {
            (0..pw.chars().count())
                .map(|_| alphabet::char_at(rng.gen_range(0..alphabet::SIZE)))
                .collect()
        })
        .collect()
}

const WORDS: &[&str] = &[
    "password", "dragon", "monkey", "shadow", "master", "sunshine", "princess", "football",
    "baseball", "welcome", "letmein", "michael", "jessica", "charlie", "summer", "winter",
    "flower", "hunter", "soccer", "killer", "purple", "orange", "banana", "cookie", "pepper",
    "ginger", "silver", "golden", "tiger", "lover", "angel", "james", "bond", "john", "mary",
    "anna", "alex", "daniel", "thomas", "robert", "jordan", "hannah", "maggie", "buster",
    "ranger", "batman", "superman", "starwars", "pokemon", "matrix", "freedom", "computer",
    "internet", "secret", "access", "family", "friend", "happy", "lucky", "music", "guitar",
    "spring", "autumn", "coffee", "chicken", "cheese", "rocket", "falcon", "eagle", "wolf",
    "bear", "lion", "apple", "cherry", "lemon", "peach", "love", "iloveyou", "sweet", "honey",
    "sugar", "blue", "red", "green", "black", "white", "star", "moon", "sun", "sky", "ocean",
    "river", "mountain", "forest", "garden", "house", "school", "london", "paris", "berlin",
    "tokyo", "boston", "chicago", "texas", "florida", "hello", "world", "admin", "login",
    "dream", "magic", "ninja", "pirate", "zombie", "vampire", "butterfly", "rainbow", "thunder",
    "storm", "victoria", "jennifer", "andrew", "joshua", "ashley", "nicole", "samantha",
    "christopher", "elizabeth", "alexander", "jonathan", "benjamin", "william", "charlotte",
    "isabella", "mother", "father", "sister", "brother", "baby", "jesus", "heaven", "forever",
    "nothing", "player", "gamer", "hockey", "tennis", "racing", "summer", "beach", "island",
    "snow", "fire", "water", "earth", "light", "night", "queen", "king", "prince", "knight",
];

const KEY_WALKS: &[&str] = &[
    "qwerty", "qwertyuiop", "asdfgh", "asdfghjkl", "zxcvbn", "1qaz2wsx", "qazwsx", "1q2w3e4r",
    "zaq12wsx", "poiuytrewq",
];

const DIGIT_RUNS: &[&str] = &[
    "123", "1234", "12345", "123456", "1234567", "12345678", "123456789", "111111", "654321",
    "000", "007", "69", "99", "01", "11", "12", "13", "21", "22", "23", "2000", "666", "777",
    "101", "100", "1", "2", "7",
];

const SYMBOLS: &[char] = &['!', '@', '#', '$', '.', '_', '*', '-', '&', '?'];

/// Seeded generator of human-like passwords: dictionary words, names,
/// years, digit runs, keyboard walks, leet substitutions and symbols.
pub struct SyntheticCorpus {
    rng: SimRng,
}

impl SyntheticCorpus {
    pub fn new(seed: u64) -> Self {
        Self { rng: seeded(seed) }
    }

    /// `count` passwords, all accepted by the default cleaning rules.
    pub fn generate(&mut self, count: usize) -> Vec<String> {
        let cleaning = Cleaning::default();
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let pw = self.one();
            if cleaning.accepts(&pw) {
                out.push(pw);
            }
        }
        out
    }

    fn word(&mut self) -> String {
        WORDS.choose(&mut self.rng).unwrap().to_string()
    }

    fn capitalized(&mut self) -> String {
        let w = self.word();
        let mut cs = w.chars();
        let first = cs.next().unwrap().to_ascii_uppercase();
        std::iter::once(first).chain(cs).collect()
    }

    fn digits(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => format!("{}", self.rng.gen_range(1950..2025)),
            1 => format!("{:02}", self.rng.gen_range(0..100)),
            2 => format!("{:02}{:02}", self.rng.gen_range(1..32), self.rng.gen_range(1..13)),
            _ => DIGIT_RUNS.choose(&mut self.rng).unwrap().to_string(),
        }
    }

    fn symbol(&mut self) -> char {
        *SYMBOLS.choose(&mut self.rng).unwrap()
    }

    fn leet(&mut self, w: &str) -> String {
        w.chars()
            .map(|c| match c {
                'a' if self.rng.gen_bool(0.6) => '@',
                'e' if self.rng.gen_bool(0.6) => '3',
                'o' if self.rng.gen_bool(0.6) => '0',
                'i' if self.rng.gen_bool(0.5) => '1',
                's' if self.rng.gen_bool(0.5) => '$',
                _ => c,
            })
            .collect()
    }

    fn one(&mut self) -> String {
        match self.rng.gen_range(0..100) {
            0..=19 => format!("{}{}", self.word(), self.digits()),
            20..=31 => format!("{}{}", self.capitalized(), self.digits()),
            32..=41 => format!("{}{}", self.word(), self.word()),
            42..=49 => format!("{}{}{}", self.capitalized(), self.symbol(), self.digits()),
            50..=57 => {
                let target = self.rng.gen_range(5..11);
                let mut s = String::new();
                while s.len() < target {
                    s.push_str(&self.digits());
                }
                s
            }
            58..=65 => format!("{}{}{}", self.word(), self.word(), self.digits()),
            66..=71 => format!("{}{}{}{}", self.capitalized(), self.symbol(), self.word(), self.digits()),
            72..=77 => {
                let w = self.word();
                format!("{}{}", self.leet(&w), self.digits())
            }
            78..=83 => format!("{}{}", KEY_WALKS.choose(&mut self.rng).unwrap(), self.digits()),
            84..=89 => format!("{}{}{}", self.word(), self.word(), self.word()),
            90..=94 => self.word(),
            _ => format!("{}{}{}{}", self.capitalized(), self.capitalized(), self.digits(), self.symbol()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cleaning_rules() {
        let c = Cleaning::default();
        assert!(c.accepts("hello"));
        assert!(!c.accepts("abcd"));
        assert!(!c.accepts(&"a".repeat(31)));
        assert!(c.accepts(&"a".repeat(30)));
        assert!(!c.accepts("p\u{e4}sswort"));
        assert!(!c.accepts("pass word"));
        let kept = c.apply(["hello", "hi", "pässwort", "Jamesbond007"].iter().copied());
        assert_eq!(kept, vec!["hello", "Jamesbond007"]);
    }

    #[test]
    fn parse_lines_handles_crlf() {
        assert_eq!(parse_lines("abc\r\n\r\ndef\n"), vec!["abc", "def"]);
    }

    #[test]
    fn synthetic_corpus_is_clean_and_seeded() {
        let a = SyntheticCorpus::new(3).generate(500);
        let b = SyntheticCorpus::new(3).generate(500);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| Cleaning::default().accepts(p)));
        assert!(a.iter().any(|p| p.len() > 16));
        assert!(a.iter().any(|p| p.len() < 10));
        assert_ne!(a, SyntheticCorpus::new(4).generate(500));
    }

    #[test]
    fn random_like_matches_lengths() {
        let human = SyntheticCorpus::new(1).generate(50);
        let random = random_like(&human, &mut seeded(9));
        assert!(human.iter().zip(&random).all(|(h, r)| h.len() == r.len()));
        assert!(random.iter().all(|r| r.chars().all(alphabet::contains)));
    }
}
