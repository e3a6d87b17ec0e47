//! Keyboard plane geometry: key coordinates, distances, adjacency and
//! cursor-travel overhead.
//!
//! Coordinates are in key-pitch units. Shifted characters share the
//! coordinate of their base key, so typing `Q` costs the same travel as `q`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::alphabet;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: character {ch:?} is not in the password alphabet")]
    UnknownCharacter { line: usize, ch: char },
    #[error("keys {a:?} and {b:?} share coordinate ({x}, {y})")]
    DuplicateCoordinate { a: char, b: char, x: f64, y: f64 },
    #[error("line {line}: {ch:?} is listed twice")]
    DuplicateEntry { line: usize, ch: char },
    #[error("line {line}: shifted {ch:?} must share the coordinate of its base key")]
    ShiftMismatch { line: usize, ch: char },
    #[error("no coordinate for key {0:?}")]
    MissingKey(char),
    #[error("character {ch:?} at index {index} is not on the layout")]
    OffLayout { ch: char, index: usize },
    #[error("adjacency radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("original must have at least 2 characters to compute a ratio")]
    OriginalTooShort,
}

/// A planar point in key-pitch units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Key coordinates for every character of the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyboardLayout {
    name: String,
    pitch: f64,
    coords: Vec<Point>,
}

/// Base-key rows of the built-in ANSI QWERTY table: (y, x offset, keys).
const DEFAULT_ROWS: [(f64, f64, &str); 4] = [
    (-1.0, -1.5, "`1234567890-="),
    (0.0, 0.0, "qwertyuiop[]\\"),
    (1.0, 0.25, "asdfghjkl;'"),
    (2.0, 0.75, "zxcvbnm,./"),
];

impl Default for KeyboardLayout {
    fn default() -> Self {
        let mut entries = Vec::with_capacity(alphabet::SIZE / 2 + 1);
        for (y, offset, keys) in DEFAULT_ROWS {
            for (col, ch) in keys.chars().enumerate() {
                entries.push((ch, Point { x: offset + col as f64, y }));
            }
        }
        Self::from_base_keys("ansi-qwerty", &entries).expect("built-in layout is valid")
    }
}

impl KeyboardLayout {
    /// Loads a layout document, or the built-in ANSI QWERTY layout when
    /// `source` is `None`.
    ///
    /// The document holds one `<char>\t<x>\t<y>` record per line; lines
    /// starting with `#` and blank lines are ignored. Every base key must be
    /// present. Shifted characters may be listed but must repeat their base
    /// key's coordinate.
    pub fn load(source: Option<&str>) -> Result<Self, LayoutError> {
        match source {
            None => Ok(Self::default()),
            Some(doc) => Self::parse(doc),
        }
    }

    fn parse(doc: &str) -> Result<Self, LayoutError> {
        let mut base: Vec<(char, Point)> = Vec::new();
        let mut shifted: Vec<(usize, char, Point)> = Vec::new();
        let mut seen = [false; alphabet::SIZE];
        let mut name = String::from("custom");

        for (i, raw) in doc.lines().enumerate() {
            let line = i + 1;
            if let Some(comment) = raw.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("name:") {
                    name = n.trim().to_string();
                }
                continue;
            }
            if raw.trim().is_empty() {
                continue;
            }
            let malformed = |reason: &str| LayoutError::Malformed {
                line,
                reason: reason.to_string(),
            };
            let mut fields = raw.split('\t');
            let key = fields.next().ok_or_else(|| malformed("missing key"))?;
            let mut key_chars = key.chars();
            let ch = match (key_chars.next(), key_chars.next()) {
                (Some(c), None) => c,
                _ => return Err(malformed("key field must be exactly one character")),
            };
            let mut coord = || -> Result<f64, LayoutError> {
                let text = fields.next().ok_or_else(|| malformed("expected 3 tab-separated fields"))?;
                let v: f64 = text
                    .trim()
                    .parse()
                    .map_err(|_| malformed(&format!("bad coordinate {text:?}")))?;
                if !v.is_finite() {
                    return Err(malformed("coordinate is not finite"));
                }
                Ok(v)
            };
            let p = Point { x: coord()?, y: coord()? };
            if fields.next().is_some() {
                return Err(malformed("expected 3 tab-separated fields"));
            }
            let idx = alphabet::index(ch).ok_or(LayoutError::UnknownCharacter { line, ch })?;
            if std::mem::replace(&mut seen[idx], true) {
                return Err(LayoutError::DuplicateEntry { line, ch });
            }
            if alphabet::is_shifted(ch) {
                shifted.push((line, ch, p));
            } else {
                base.push((ch, p));
            }
        }

        let layout = Self::from_base_keys(&name, &base)?;
        for (line, ch, p) in shifted {
            if layout.coord(ch) != Some(p) {
                return Err(LayoutError::ShiftMismatch { line, ch });
            }
        }
        Ok(layout)
    }

    fn from_base_keys(name: &str, entries: &[(char, Point)]) -> Result<Self, LayoutError> {
        let mut by_key: Vec<Option<Point>> = vec![None; alphabet::SIZE];
        for &(ch, p) in entries {
            by_key[alphabet::index(ch).expect("base key in alphabet")] = Some(p);
        }
        let keys: Vec<char> = alphabet::base_keys().collect();
        for (i, &a) in keys.iter().enumerate() {
            let pa = by_key[alphabet::index(a).unwrap()].ok_or(LayoutError::MissingKey(a))?;
            for &b in &keys[..i] {
                let pb = by_key[alphabet::index(b).unwrap()].unwrap();
                if pa == pb {
                    return Err(LayoutError::DuplicateCoordinate { a: b, b: a, x: pa.x, y: pa.y });
                }
            }
        }
        let coords = alphabet::chars()
            .map(|c| by_key[alphabet::index(alphabet::base_key(c).unwrap()).unwrap()].unwrap())
            .collect();
        Ok(Self {
            name: name.to_string(),
            pitch: 1.0,
            coords,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Unit distance between horizontally adjacent keys.
    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    /// Coordinate of the key producing `c`.
    pub fn coord(&self, c: char) -> Option<Point> {
        alphabet::index(c).map(|i| self.coords[i])
    }

    fn coord_at(&self, c: char, index: usize) -> Result<Point, LayoutError> {
        self.coord(c).ok_or(LayoutError::OffLayout { ch: c, index })
    }

    /// Euclidean distance between the keys producing `a` and `b`.
    pub fn key_distance(&self, a: char, b: char) -> Result<f64, LayoutError> {
        Ok(self.coord_at(a, 0)?.distance(self.coord_at(b, 1)?))
    }

    /// Total cursor travel to type `text`, summing the distance between
    /// consecutive keys.
    pub fn path_distance(&self, text: &str) -> Result<f64, LayoutError> {
        let mut total = 0.0;
        let mut prev: Option<Point> = None;
        for (i, c) in text.chars().enumerate() {
            let p = self.coord_at(c, i)?;
            if let Some(q) = prev {
                total += q.distance(p);
            }
            prev = Some(p);
        }
        Ok(total)
    }

    /// Every alphabet character whose key lies at distance in `(0, radius]`
    /// from the key producing `c`.
    pub fn adjacent_keys(&self, c: char, radius: f64) -> Result<BTreeSet<char>, LayoutError> {
        if !(radius > 0.0) {
            return Err(LayoutError::InvalidRadius(radius));
        }
        let origin = self.coord_at(c, 0)?;
        Ok(alphabet::chars()
            .filter(|&o| {
                let d = origin.distance(self.coord(o).unwrap());
                d > 0.0 && d <= radius
            })
            .collect())
    }

    /// Unshifted keys within `(0, radius]` of `c`'s key.
    pub fn adjacent_base_keys(&self, c: char, radius: f64) -> Result<Vec<char>, LayoutError> {
        Ok(self
            .adjacent_keys(c, radius)?
            .into_iter()
            .filter(|&o| !alphabet::is_shifted(o))
            .collect())
    }

    /// Cursor-travel overhead of typing `ghost` instead of `original`.
    pub fn overhead(&self, original: &str, ghost: &str) -> Result<OverheadReport, LayoutError> {
        if original.chars().count() < 2 {
            return Err(LayoutError::OriginalTooShort);
        }
        let original_distance = self.path_distance(original)?;
        let ghost_distance = self.path_distance(ghost)?;
        let absolute_overhead = ghost_distance - original_distance;
        let relative_overhead =
            (original_distance > 0.0).then(|| absolute_overhead / original_distance);
        Ok(OverheadReport {
            original_distance,
            ghost_distance,
            absolute_overhead,
            relative_overhead,
        })
    }

    /// Serializes the base keys as a layout document.
    pub fn to_document(&self) -> String {
        let mut out = format!("# name: {}\n# char\tx\ty\n", self.name);
        for c in alphabet::base_keys() {
            let p = self.coord(c).unwrap();
            writeln!(out, "{c}\t{}\t{}", p.x, p.y).unwrap();
        }
        out
    }
}

/// Cursor travel of a ghost password relative to its original.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverheadReport {
    pub original_distance: f64,
    pub ghost_distance: f64,
    pub absolute_overhead: f64,
    /// `None` when the original requires no cursor movement.
    pub relative_overhead: Option<f64>,
}
