//! Built-in resources and named generator presets.
//!
//! The default model and meter are trained from the seeded synthetic corpus,
//! so a fresh checkout can run every tool without external data.

use std::sync::Arc;

use crate::corpus::{random_like, SyntheticCorpus};
use crate::generator::{Constraint, GeneratorConfig, Selection};
use crate::layout::KeyboardLayout;
use crate::markov::MarkovModel;
use crate::meter::MeterCalibration;
use crate::rng::seeded;

pub const TRAIN_SEED: u64 = 1;
pub const TRAIN_SIZE: usize = 20_000;
pub const HUMAN_SEED: u64 = 2;
pub const HUMAN_SIZE: usize = 2_000;
pub const RANDOM_SEED: u64 = 3;
pub const ORDER: u8 = 3;
pub const SMOOTHING: f64 = 0.01;

/// Model, meter and layout bundled for a generator or evaluation run.
#[derive(Debug, Clone)]
pub struct Resources {
    pub model: Arc<MarkovModel>,
    pub meter: MeterCalibration,
    pub layout: KeyboardLayout,
}

impl Resources {
    /// Order-3 model and meter trained on the default synthetic corpora.
    pub fn default_trained() -> Self {
        let model = Arc::new(default_model());
        let meter = default_meter(model.clone());
        Self { model, meter, layout: KeyboardLayout::default() }
    }
}

pub fn default_model() -> MarkovModel {
    let corpus = SyntheticCorpus::new(TRAIN_SEED).generate(TRAIN_SIZE);
    MarkovModel::train(&corpus, ORDER, SMOOTHING).expect("synthetic corpus is non-empty")
}

/// Calibrates `model` against the default human and random corpora.
pub fn default_meter(model: Arc<MarkovModel>) -> MeterCalibration {
    let human = SyntheticCorpus::new(HUMAN_SEED).generate(HUMAN_SIZE);
    let random = random_like(&human, &mut seeded(RANDOM_SEED));
    MeterCalibration::calibrate(model, &human, &random).expect("synthetic corpora separate")
}

pub const PRESET_NAMES: &[&str] = &["default", "experiment2", "soft", "hard", "uniform"];

/// A named generator configuration. `experiment2` uses p0 = 0.5,
/// Δp = 0.05, α = 0.1 at r = 0.5.
pub fn generator_preset(name: &str) -> Option<GeneratorConfig> {
    let base = GeneratorConfig::default();
    Some(match name {
        "default" | "experiment2" => base,
        "soft" => GeneratorConfig { constraint: Constraint::Soft { lambda: 0.5 }, ..base },
        "hard" => GeneratorConfig { constraint: Constraint::Hard { tau: 3.0 }, ..base },
        "uniform" => GeneratorConfig { selection: Selection::Uniform, ..base },
        _ => return None,
    })
}
