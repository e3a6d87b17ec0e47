//! Order-k character model over the password alphabet.
//!
//! Every password is left-padded with `order` begin-of-string sentinels, so
//! the first characters are modeled and a context shorter than `order` is
//! read as the start of a string. Probabilities use additive smoothing:
//!
//! `P(c | ctx) = (count(ctx, c) + δ) / (total(ctx) + δ·|Σ|)`
//!
//! which falls back to the uniform distribution for unseen contexts.

use std::collections::HashMap;

use rand::Rng;
use thiserror::Error;

use crate::alphabet;
use crate::codec::{CodecError, Decoder, Encoder};
use crate::corpus::Cleaning;
use crate::rng::SimRng;

pub const DEFAULT_ORDER: u8 = 3;
pub const DEFAULT_SMOOTHING: f64 = 0.01;
pub const MAX_ORDER: u8 = 8;

/// Begin-of-string padding byte. Outside the alphabet, never sampled.
const SENTINEL: u8 = 0x02;

const MAGIC: &[u8; 4] = b"VRSM";
const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum MarkovError {
    #[error("corpus is empty after cleaning")]
    EmptyCorpus,
    #[error("order must be in 1..={MAX_ORDER}, got {0}")]
    InvalidOrder(u8),
    #[error("smoothing must be finite and positive, got {0}")]
    InvalidSmoothing(f64),
    #[error("text is empty")]
    EmptyText,
    #[error("character {ch:?} at index {index} is not in the alphabet")]
    OffAlphabet { ch: char, index: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// The trailing `order` characters of a string, packed one byte per
/// character with the oldest character in the highest byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextKey(u64);

impl ContextKey {
    pub fn start(order: u8) -> Self {
        let mut k = 0u64;
        for _ in 0..order {
            k = (k << 8) | SENTINEL as u64;
        }
        Self(k)
    }

    /// Shifts `c` into the context.
    pub fn push(self, c: char, order: u8) -> Self {
        let mask = if order >= 8 { u64::MAX } else { (1u64 << (8 * order as u32)) - 1 };
        Self(((self.0 << 8) | (c as u64 & 0xFF)) & mask)
    }

    /// The last two context characters as `(older, newer)`, `None` standing
    /// for the start-of-string padding. For order 1 the older slot is
    /// always `None`.
    pub fn tail(self, order: u8) -> (Option<char>, Option<char>) {
        let sym = |b: u8| (b != SENTINEL && b != 0).then_some(b as char);
        let older = if order >= 2 { sym((self.0 >> 8) as u8) } else { None };
        (older, sym(self.0 as u8))
    }

    fn bytes(self, order: u8) -> Vec<u8> {
        (0..order).rev().map(|i| (self.0 >> (8 * i as u32)) as u8).collect()
    }

    fn from_bytes(bytes: &[u8]) -> Self {
        Self(bytes.iter().fold(0u64, |k, &b| (k << 8) | b as u64))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Row {
    total: u64,
    /// (alphabet index, count), sorted by index.
    counts: Vec<(u8, u64)>,
}

impl Row {
    fn count(&self, idx: usize) -> u64 {
        self.counts
            .binary_search_by_key(&(idx as u8), |&(i, _)| i)
            .map(|p| self.counts[p].1)
            .unwrap_or(0)
    }

    fn add(&mut self, idx: usize) {
        match self.counts.binary_search_by_key(&(idx as u8), |&(i, _)| i) {
            Ok(p) => self.counts[p].1 += 1,
            Err(p) => self.counts.insert(p, (idx as u8, 1)),
        }
        self.total += 1;
    }
}

/// A frozen order-k character model.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    order: u8,
    smoothing: f64,
    total_trained: u64,
    rows: HashMap<ContextKey, Row>,
}

impl MarkovModel {
    /// Trains on `corpus` after the default cleaning (printable ASCII,
    /// length 5 to 30).
    pub fn train<S: AsRef<str>>(corpus: &[S], order: u8, smoothing: f64) -> Result<Self, MarkovError> {
        Self::train_with(corpus, order, smoothing, Cleaning::default())
    }

    pub fn train_with<S: AsRef<str>>(
        corpus: &[S],
        order: u8,
        smoothing: f64,
        cleaning: Cleaning,
    ) -> Result<Self, MarkovError> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(MarkovError::InvalidOrder(order));
        }
        if !(smoothing.is_finite() && smoothing > 0.0) {
            return Err(MarkovError::InvalidSmoothing(smoothing));
        }
        let mut rows: HashMap<ContextKey, Row> = HashMap::new();
        let mut total_trained = 0;
        for pw in corpus.iter().map(AsRef::as_ref).filter(|pw| cleaning.accepts(pw)) {
            let mut ctx = ContextKey::start(order);
            for c in pw.chars() {
                rows.entry(ctx).or_default().add(alphabet::index(c).unwrap());
                ctx = ctx.push(c, order);
            }
            total_trained += 1;
        }
        if total_trained == 0 {
            return Err(MarkovError::EmptyCorpus);
        }
        Ok(Self { order, smoothing, total_trained, rows })
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Number of corpus entries that survived cleaning.
    pub fn total_trained(&self) -> u64 {
        self.total_trained
    }

    pub fn context_count(&self) -> usize {
        self.rows.len()
    }

    /// Context key for the string `context`, read as a string prefix.
    pub fn context_key(&self, context: &str) -> ContextKey {
        context
            .chars()
            .fold(ContextKey::start(self.order), |k, c| k.push(c, self.order))
    }

    /// Raw occurrence count of `c` following `context`.
    pub fn count(&self, context: &str, c: char) -> u64 {
        match (self.rows.get(&self.context_key(context)), alphabet::index(c)) {
            (Some(row), Some(i)) => row.count(i),
            _ => 0,
        }
    }

    /// Smoothed probability of the character with alphabet index `idx`.
    pub fn prob_at(&self, key: ContextKey, idx: usize) -> f64 {
        let denom_smooth = self.smoothing * alphabet::SIZE as f64;
        match self.rows.get(&key) {
            Some(row) => (row.count(idx) as f64 + self.smoothing) / (row.total as f64 + denom_smooth),
            None => 1.0 / alphabet::SIZE as f64,
        }
    }

    pub fn prob(&self, context: &str, c: char) -> f64 {
        alphabet::index(c).map_or(0.0, |i| self.prob_at(self.context_key(context), i))
    }

    /// Smoothed next-character distribution, indexed by alphabet position.
    pub fn distribution_at(&self, key: ContextKey) -> Vec<f64> {
        let Some(row) = self.rows.get(&key) else {
            return vec![1.0 / alphabet::SIZE as f64; alphabet::SIZE];
        };
        let denom = row.total as f64 + self.smoothing * alphabet::SIZE as f64;
        let mut dist = vec![self.smoothing / denom; alphabet::SIZE];
        for &(i, n) in &row.counts {
            dist[i as usize] = (n as f64 + self.smoothing) / denom;
        }
        dist
    }

    /// Every trained context with the smoothed probabilities of the
    /// characters observed after it. Unlisted characters have probability
    /// `smoothing / (total + smoothing·|Σ|)`, and unseen contexts are uniform.
    pub fn observed_contexts(&self) -> impl Iterator<Item = (ContextKey, Vec<(usize, f64)>)> + '_ {
        self.rows.iter().map(|(&key, row)| {
            let denom = row.total as f64 + self.smoothing * alphabet::SIZE as f64;
            let probs = row
                .counts
                .iter()
                .map(|&(i, n)| (i as usize, (n as f64 + self.smoothing) / denom))
                .collect();
            (key, probs)
        })
    }

    /// Next-character distribution given the trailing `order` characters of
    /// `context`.
    pub fn next_char_distribution(&self, context: &str) -> Vec<f64> {
        self.distribution_at(self.context_key(context))
    }

    /// Mean per-character negative log-likelihood of `text`, in nats.
    pub fn sequence_nll(&self, text: &str) -> Result<f64, MarkovError> {
        let mut ctx = ContextKey::start(self.order);
        let mut sum = 0.0;
        let mut n = 0usize;
        for (index, ch) in text.chars().enumerate() {
            let i = alphabet::index(ch).ok_or(MarkovError::OffAlphabet { ch, index })?;
            sum += self.prob_at(ctx, i).ln();
            ctx = ctx.push(ch, self.order);
            n += 1;
        }
        if n == 0 {
            return Err(MarkovError::EmptyText);
        }
        Ok(-sum / n as f64)
    }

    /// Draws the next character given `context`.
    pub fn sample_next(&self, context: &str, rng: &mut SimRng) -> char {
        sample_index(&self.next_char_distribution(context), rng)
            .map(alphabet::char_at)
            .expect("smoothed distribution has positive mass")
    }

    /// Serialized model. Contexts are written in sorted order so equal
    /// models serialize to identical bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut e = Encoder::new(MAGIC, FORMAT_VERSION);
        e.u8(self.order);
        e.f64(self.smoothing);
        e.u64(self.total_trained);
        e.u16(alphabet::SIZE as u16);
        for c in alphabet::chars() {
            e.u8(c as u8);
        }
        let mut keys: Vec<&ContextKey> = self.rows.keys().collect();
        keys.sort();
        e.u32(keys.len() as u32);
        for key in keys {
            let row = &self.rows[key];
            e.bytes(&key.bytes(self.order));
            e.u16(row.counts.len() as u16);
            for &(i, n) in &row.counts {
                e.u8(alphabet::char_at(i as usize) as u8);
                e.u64(n);
            }
        }
        e.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, MarkovError> {
        let invalid = |m: &str| MarkovError::Codec(CodecError::Invalid(m.to_string()));
        let (mut d, _version) = Decoder::open(data, MAGIC, FORMAT_VERSION)?;
        let order = d.u8()?;
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(MarkovError::InvalidOrder(order));
        }
        let smoothing = d.f64()?;
        if !(smoothing.is_finite() && smoothing > 0.0) {
            return Err(MarkovError::InvalidSmoothing(smoothing));
        }
        let total_trained = d.u64()?;
        let alpha_len = d.u16()? as usize;
        let listed = d.take(alpha_len)?;
        if !listed.iter().map(|&b| b as char).eq(alphabet::chars()) {
            return Err(invalid("alphabet differs from printable ASCII"));
        }
        let n_ctx = d.u32()? as usize;
        let mut rows = HashMap::with_capacity(n_ctx);
        for _ in 0..n_ctx {
            let bytes = d.take(order as usize)?;
            if bytes.iter().any(|&b| b != SENTINEL && !alphabet::contains(b as char)) {
                return Err(invalid("context byte outside alphabet"));
            }
            let key = ContextKey::from_bytes(bytes);
            let n = d.u16()? as usize;
            let mut row = Row::default();
            for _ in 0..n {
                let c = d.u8()? as char;
                let idx = alphabet::index(c).ok_or_else(|| invalid("count for character outside alphabet"))?;
                if row.counts.last().is_some_and(|&(p, _)| p as usize >= idx) {
                    return Err(invalid("count entries not sorted"));
                }
                let count = d.u64()?;
                row.counts.push((idx as u8, count));
                row.total += count;
            }
            if rows.insert(key, row).is_some() {
                return Err(invalid("duplicate context"));
            }
        }
        d.finish()?;
        Ok(Self { order, smoothing, total_trained, rows })
    }

    /// CRC-32 of the serialized model, used to bind calibrations to models.
    pub fn checksum(&self) -> u32 {
        let bytes = self.to_bytes();
        u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap())
    }
}

/// Inverse-CDF draw from non-negative `weights`. `None` if all weights are
/// zero.
pub fn sample_index(weights: &[f64], rng: &mut SimRng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last_positive
}
