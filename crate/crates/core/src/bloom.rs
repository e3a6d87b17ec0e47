//! Bloom filter with SHA-256 double hashing.
//!
//! Sizing follows the textbook optimum for `n` elements at false-positive
//! rate `p`: `m = ⌈-n·ln p / (ln 2)²⌉` bits and `h = round(m/n · ln 2)`
//! hash functions. The `h` probe positions of an element are
//! `g_i = (h1 + i·h2) mod m`, where `h1` and `h2` are the first two
//! little-endian 64-bit words of `SHA-256(seed_le ‖ element)`.

use std::f64::consts::LN_2;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{CodecError, Decoder, Encoder};

const MAGIC: &[u8; 4] = b"VRBF";
const VERSION: u16 = 1;

/// Default ceiling on the bit array, in bytes.
pub const DEFAULT_MEMORY_CAP: u64 = 512 * 1024 * 1024;

#[derive(Debug, Error, PartialEq)]
pub enum BloomError {
    #[error("expected_n must be at least 1")]
    InvalidExpected,
    #[error("target false-positive rate {0} must lie strictly between 0 and 1")]
    InvalidFpr(f64),
    #[error("filter needs {bytes} bytes, above the memory cap of {cap}")]
    MemoryCap { bytes: u64, cap: u64 },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BloomConfig {
    pub expected_n: u64,
    pub target_fpr: f64,
    /// Bits in the array.
    pub m: u64,
    /// Number of hash functions.
    pub h: u16,
    pub hash_seed: u64,
}

/// Sizes a filter under [`DEFAULT_MEMORY_CAP`].
pub fn bf_params(expected_n: u64, target_fpr: f64) -> Result<BloomConfig, BloomError> {
    BloomConfig::sized(expected_n, target_fpr, DEFAULT_MEMORY_CAP)
}

impl BloomConfig {
    pub fn sized(expected_n: u64, target_fpr: f64, memory_cap: u64) -> Result<Self, BloomError> {
        if expected_n == 0 {
            return Err(BloomError::InvalidExpected);
        }
        if !(target_fpr > 0.0 && target_fpr < 1.0) {
            return Err(BloomError::InvalidFpr(target_fpr));
        }
        let n = expected_n as f64;
        let m = (-n * target_fpr.ln() / (LN_2 * LN_2)).ceil();
        let bytes = (m / 8.0).ceil();
        if bytes > memory_cap as f64 {
            return Err(BloomError::MemoryCap { bytes: bytes.min(u64::MAX as f64) as u64, cap: memory_cap });
        }
        let m = m as u64;
        let h = ((m as f64 / n) * LN_2).round().clamp(1.0, u16::MAX as f64) as u16;
        Ok(Self { expected_n, target_fpr, m, h, hash_seed: 0 })
    }

    pub fn with_seed(self, hash_seed: u64) -> Self {
        Self { hash_seed, ..self }
    }

    /// `(1 - e^{-h·n/m})^h` after `n` insertions.
    pub fn analytic_fpr(&self, n: u64) -> f64 {
        let h = self.h as f64;
        (1.0 - (-h * n as f64 / self.m as f64).exp()).powf(h)
    }

    pub fn storage_bytes(&self) -> u64 {
        self.m.div_ceil(8)
    }

    /// Storage in decimal megabytes (10⁶ bytes).
    pub fn storage_mb(&self) -> f64 {
        self.storage_bytes() as f64 / 1e6
    }

    /// Storage in mebibytes (2²⁰ bytes).
    pub fn storage_mib(&self) -> f64 {
        self.storage_bytes() as f64 / (1024.0 * 1024.0)
    }
}

/// Outcome of an insertion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertStatus {
    Ok,
    /// More than `expected_n` elements are stored; the false-positive rate
    /// now exceeds its target and the filter should be rebuilt.
    Saturated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BloomFilter {
    config: BloomConfig,
    bits: Vec<u64>,
    inserted: u64,
}

impl BloomFilter {
    pub fn new(config: BloomConfig) -> Self {
        let words = config.m.div_ceil(64) as usize;
        Self { config, bits: vec![0; words], inserted: 0 }
    }

    pub fn config(&self) -> &BloomConfig {
        &self.config
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn is_saturated(&self) -> bool {
        self.inserted > self.config.expected_n
    }

    /// Fraction of set bits.
    pub fn fill_ratio(&self) -> f64 {
        let ones: u64 = self.bits.iter().map(|w| w.count_ones() as u64).sum();
        ones as f64 / self.config.m as f64
    }

    fn probes(&self, element: &[u8]) -> impl Iterator<Item = u64> {
        let digest = Sha256::new()
            .chain_update(self.config.hash_seed.to_le_bytes())
            .chain_update(element)
            .finalize();
        let h1 = u64::from_le_bytes(digest[..8].try_into().unwrap()) as u128;
        let h2 = u64::from_le_bytes(digest[8..16].try_into().unwrap()) as u128;
        let m = self.config.m as u128;
        (0..self.config.h as u128).map(move |i| ((h1 + i * h2) % m) as u64)
    }

    pub fn insert(&mut self, element: &[u8]) -> InsertStatus {
        let positions: Vec<u64> = self.probes(element).collect();
        for g in positions {
            self.bits[(g / 64) as usize] |= 1 << (g % 64);
        }
        self.inserted += 1;
        if self.is_saturated() {
            InsertStatus::Saturated
        } else {
            InsertStatus::Ok
        }
    }

    pub fn contains(&self, element: &[u8]) -> bool {
        self.probes(element)
            .all(|g| self.bits[(g / 64) as usize] & (1 << (g % 64)) != 0)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut e = Encoder::new(MAGIC, VERSION);
        e.u64(c.expected_n);
        e.f64(c.target_fpr);
        e.u64(c.m);
        e.u16(c.h);
        e.u64(c.hash_seed);
        e.u64(self.inserted);
        let raw: Vec<u8> = self.bits.iter().flat_map(|w| w.to_le_bytes()).collect();
        e.bytes(&raw[..c.storage_bytes() as usize]);
        e.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, BloomError> {
        let (mut d, _) = Decoder::open(data, MAGIC, VERSION)?;
        let expected_n = d.u64()?;
        let target_fpr = d.f64()?;
        let m = d.u64()?;
        let h = d.u16()?;
        let hash_seed = d.u64()?;
        let inserted = d.u64()?;
        if m == 0 || h == 0 || expected_n == 0 {
            return Err(CodecError::Invalid("zero-sized filter parameters".into()).into());
        }
        let len = usize::try_from(m.div_ceil(8)).map_err(|_| CodecError::Truncated)?;
        let raw = d.take(len)?;
        d.finish()?;
        let mut bits = vec![0u64; m.div_ceil(64) as usize];
        for (i, chunk) in raw.chunks(8).enumerate() {
            let mut word = [0u8; 8];
            word[..chunk.len()].copy_from_slice(chunk);
            bits[i] = u64::from_le_bytes(word);
        }
        let config = BloomConfig { expected_n, target_fpr, m, h, hash_seed };
        Ok(Self { config, bits, inserted })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn params_for_small_inputs() {
        let c = bf_params(1, 0.5).unwrap();
        assert_eq!((c.m, c.h), (2, 1));
        // m = ⌈1e5 · ln(1000) / ln²2⌉ computed independently.
        let c = bf_params(100_000, 1e-3).unwrap();
        assert_eq!(c.m, 1_437_759);
        assert_eq!(c.h, 10);
    }

    #[test]
    fn params_for_a_million_at_1e_minus_30() {
        let c = bf_params(1_000_000, 1e-30).unwrap();
        assert!((c.m as f64 / 1.438e8 - 1.0).abs() < 0.01, "m = {}", c.m);
        assert_eq!(c.h, 100);
        assert!((c.storage_mb() - 17.97).abs() < 0.01);
        assert!((c.storage_mib() - 17.14).abs() < 0.01);
    }

    #[test]
    fn invalid_params() {
        assert_eq!(bf_params(0, 0.1), Err(BloomError::InvalidExpected));
        assert_eq!(bf_params(10, 0.0), Err(BloomError::InvalidFpr(0.0)));
        assert_eq!(bf_params(10, 1.0), Err(BloomError::InvalidFpr(1.0)));
        assert!(matches!(
            BloomConfig::sized(1_000_000_000, 1e-300, 1 << 20),
            Err(BloomError::MemoryCap { .. })
        ));
    }

    #[test]
    fn lookup_and_saturation() {
        let mut f = BloomFilter::new(bf_params(2, 0.01).unwrap());
        assert!(!f.contains(b"x"));
        assert_eq!(f.insert(b"x"), InsertStatus::Ok);
        assert!(f.contains(b"x"));
        assert_eq!(f.insert(b"y"), InsertStatus::Ok);
        assert_eq!(f.insert(b"z"), InsertStatus::Saturated);
        assert!(f.is_saturated());
        assert!(f.contains(b"z"));
    }

    #[test]
    fn seeds_change_positions() {
        let c = bf_params(100, 0.01).unwrap();
        let mut a = BloomFilter::new(c.clone());
        let mut b = BloomFilter::new(c.with_seed(7));
        a.insert(b"hello");
        b.insert(b"hello");
        assert_ne!(a.bits, b.bits);
    }

    #[test]
    fn empirical_fpr_near_target() {
        let mut f = BloomFilter::new(bf_params(20_000, 1e-2).unwrap());
        for i in 0..20_000u32 {
            f.insert(&i.to_le_bytes());
        }
        let fp = (0..20_000u32).filter(|i| f.contains(&(i + 1_000_000).to_le_bytes())).count();
        let rate = fp as f64 / 20_000.0;
        assert!(rate < 0.02, "fpr {rate}");
    }

    #[test]
    fn snapshot_round_trip() {
        let mut f = BloomFilter::new(bf_params(1000, 1e-4).unwrap().with_seed(99));
        for w in ["alpha", "beta", "gamma"] {
            f.insert(w.as_bytes());
        }
        let bytes = f.to_bytes();
        let back = BloomFilter::from_bytes(&bytes).unwrap();
        assert_eq!(back, f);
        assert!(back.contains(b"beta"));

        let mut bad = bytes.clone();
        bad[50] ^= 0x10;
        assert!(matches!(BloomFilter::from_bytes(&bad), Err(BloomError::Codec(CodecError::Checksum { .. }))));
        assert!(BloomFilter::from_bytes(&bytes[..bytes.len() - 9]).is_err());
    }

    proptest! {
        #[test]
        fn analytic_fpr_within_twice_target(n in 1u64..10_000_000, exp in 1i32..40) {
            let target = 10f64.powi(-exp);
            let c = bf_params(n, target).unwrap();
            prop_assert!(c.analytic_fpr(n) <= 2.0 * target, "{} vs {}", c.analytic_fpr(n), target);
        }

        #[test]
        fn no_false_negatives(elements in proptest::collection::vec(any::<Vec<u8>>(), 1..200), seed in any::<u64>()) {
            let mut f = BloomFilter::new(bf_params(200, 1e-3).unwrap().with_seed(seed));
            for e in &elements {
                f.insert(e);
            }
            for e in &elements {
                prop_assert!(f.contains(e));
            }
        }
    }
}
