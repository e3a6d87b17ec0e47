//! Randomness meter: maps a (partial) password to a score in (0, 1), higher
//! meaning more machine-like.
//!
//! The score is a logistic transform of the per-character negative
//! log-likelihood under a [`MarkovModel`]:
//! `score = 1 / (1 + exp(-a · (nll - b)))`. Calibration places the midpoint
//! `b` halfway between the mean nll of a human corpus and of a uniform random
//! corpus, and sets `a = 4 / gap` so the two means land near 0.12 and 0.88.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::markov::{MarkovError, MarkovModel};

#[derive(Debug, Error, PartialEq)]
pub enum MeterError {
    #[error("{0} corpus is empty")]
    EmptyCorpus(&'static str),
    #[error("corpora are not separable: random mean nll {random} <= human mean nll {human}")]
    Inseparable { human: f64, random: f64 },
    #[error(transparent)]
    Model(#[from] MarkovError),
    #[error("calibration file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("calibration was made for model crc {expected:08x}, got {found:08x}")]
    ModelMismatch { expected: u32, found: u32 },
}

#[derive(Debug, Clone)]
pub struct MeterCalibration {
    scale: f64,
    midpoint: f64,
    model: Arc<MarkovModel>,
}

fn mean_nll(model: &MarkovModel, corpus: &[String]) -> Result<f64, MarkovError> {
    let mut sum = 0.0;
    for s in corpus {
        sum += model.sequence_nll(s)?;
    }
    Ok(sum / corpus.len() as f64)
}

impl MeterCalibration {
    pub fn calibrate(
        model: Arc<MarkovModel>,
        human: &[String],
        random: &[String],
    ) -> Result<Self, MeterError> {
        if human.is_empty() {
            return Err(MeterError::EmptyCorpus("human"));
        }
        if random.is_empty() {
            return Err(MeterError::EmptyCorpus("random"));
        }
        let h = mean_nll(&model, human)?;
        let r = mean_nll(&model, random)?;
        let gap = r - h;
        if !(gap > 0.0) {
            return Err(MeterError::Inseparable { human: h, random: r });
        }
        Ok(Self { scale: 4.0 / gap, midpoint: (h + r) / 2.0, model })
    }

    /// Builds a meter from explicit parameters.
    pub fn from_parts(model: Arc<MarkovModel>, scale: f64, midpoint: f64) -> Self {
        Self { scale, midpoint, model }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn midpoint(&self) -> f64 {
        self.midpoint
    }

    pub fn model(&self) -> &Arc<MarkovModel> {
        &self.model
    }

    /// Randomness score of `text`. The empty string scores 0.5.
    pub fn eval(&self, text: &str) -> Result<f64, MeterError> {
        if text.is_empty() {
            return Ok(0.5);
        }
        Ok(self.score_nll(self.model.sequence_nll(text)?))
    }

    /// Logistic transform of a per-character nll, kept strictly inside (0, 1).
    pub fn score_nll(&self, nll: f64) -> f64 {
        let s = 1.0 / (1.0 + (-self.scale * (nll - self.midpoint)).exp());
        s.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# randomness meter calibration\nversion=1\n");
        writeln!(out, "scale={:?}", self.scale).unwrap();
        writeln!(out, "midpoint={:?}", self.midpoint).unwrap();
        writeln!(out, "model_crc32={:08x}", self.model.checksum()).unwrap();
        out
    }

    /// Parses a calibration file and binds it to `model`, which must be the
    /// model the calibration was computed against.
    pub fn from_text(text: &str, model: Arc<MarkovModel>) -> Result<Self, MeterError> {
        let (mut scale, mut midpoint, mut crc) = (None, None, None);
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let parse_err = |reason: String| MeterError::Parse { line: line_no, reason };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected key=value".into()))?;
            let float = |v: &str| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| parse_err(format!("bad number {v:?}")))
            };
            match k {
                "version" if v == "1" => {}
                "version" => return Err(parse_err(format!("unsupported version {v}"))),
                "scale" => scale = Some(float(v)?),
                "midpoint" => midpoint = Some(float(v)?),
                "model_crc32" => {
                    crc = Some(u32::from_str_radix(v, 16).map_err(|_| parse_err(format!("bad crc {v:?}")))?)
                }
                _ => return Err(parse_err(format!("unknown key {k:?}"))),
            }
        }
        let missing = |what: &str| MeterError::Parse { line: 0, reason: format!("missing {what}") };
        let scale = scale.ok_or_else(|| missing("scale"))?;
        let midpoint = midpoint.ok_or_else(|| missing("midpoint"))?;
        let expected = crc.ok_or_else(|| missing("model_crc32"))?;
        let found = model.checksum();
        if expected != found {
            return Err(MeterError::ModelMismatch { expected, found });
        }
        if !(scale > 0.0) {
            return Err(MeterError::Parse { line: 0, reason: "scale must be positive".into() });
        }
        Ok(Self { scale, midpoint, model })
    }
}
