//! Desk-scale adversary and evaluation harness.
//!
//! The simulated attacker sees every keystroke position but misreads each
//! key, with a small probability, as one of its neighbours. It then ranks
//! readings of the observed string with the subsequence oracle.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::alphabet;
use crate::bloom::BloomConfig;
use crate::detector::{DetectorConfig, DetectorError, DetectorStore, LoginVerdict};
use crate::generator::{generate, Constraint, GeneratorConfig, GeneratorError};
use crate::layout::{KeyboardLayout, LayoutError};
use crate::oracle::{GuessOracle, OracleError};
use crate::presets::Resources;
use crate::rng::{derive, seeded};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error("invalid evaluation input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Per-keystroke probability of a misread.
    pub char_error_rate: f64,
    /// Neighbour radius in key pitches.
    pub radius: f64,
    pub rng_seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { char_error_rate: 0.05, radius: 1.2, rng_seed: 0 }
    }
}

/// What the attacker reads from watching `typed` being entered. Each
/// keystroke is independently replaced, with probability
/// `char_error_rate`, by a uniformly chosen neighbouring key pressed with
/// the same shift state. Keys without neighbours are kept.
pub fn simulate_inference(layout: &KeyboardLayout, typed: &str, noise: &NoiseConfig) -> Result<String, AttackError> {
    if !(0.0..=1.0).contains(&noise.char_error_rate) {
        return Err(AttackError::Invalid(format!("error rate {}", noise.char_error_rate)));
    }
    let mut rng = seeded(noise.rng_seed);
    let mut out = String::with_capacity(typed.len());
    for (index, c) in typed.chars().enumerate() {
        if !alphabet::contains(c) {
            return Err(LayoutError::OffLayout { ch: c, index }.into());
        }
        let u: f64 = rng.gen();
        if u >= noise.char_error_rate {
            out.push(c);
            continue;
        }
        let neighbours = layout.adjacent_base_keys(c, noise.radius)?;
        match neighbours.choose(&mut rng) {
            Some(&n) => out.push(alphabet::with_shift(n, alphabet::is_shifted(c)).unwrap()),
            None => out.push(c),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LengthBand {
    /// Fewer than 10 characters.
    Short,
    /// 10 to 16 characters.
    Medium,
    /// More than 16 characters.
    Long,
}

impl LengthBand {
    pub const ALL: [LengthBand; 3] = [LengthBand::Short, LengthBand::Medium, LengthBand::Long];

    pub fn of(len: usize) -> Self {
        match len {
            0..=9 => LengthBand::Short,
            10..=16 => LengthBand::Medium,
            _ => LengthBand::Long,
        }
    }
}

impl fmt::Display for LengthBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LengthBand::Short => "short",
            LengthBand::Medium => "medium",
            LengthBand::Long => "long",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PasswordCategory {
    /// Number of classes among digits, letters and symbols.
    pub class_count: u8,
    pub band: LengthBand,
}

pub fn categorize(password: &str) -> PasswordCategory {
    let has = |f: fn(&char) -> bool| password.chars().any(|c| f(&c)) as u8;
    PasswordCategory {
        class_count: has(char::is_ascii_digit) + has(char::is_ascii_alphabetic) + has(char::is_ascii_punctuation),
        band: LengthBand::of(password.chars().count()),
    }
}

/// One password pushed through generation, observation and guessing.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub category: PasswordCategory,
    pub ghost_len: usize,
    pub ghost_count: usize,
    /// 1-based rank of the original among the attacker's guesses. `None`
    /// when it is not within the largest budget or the observation was too
    /// long to enumerate.
    pub rank: Option<usize>,
    pub too_long: bool,
    pub absolute_overhead: f64,
    pub relative_overhead: Option<f64>,
}

/// Runs one password through the pipeline. Seeds: the generator uses
/// `derive(config.rng_seed, index)`, the noise `derive(noise.rng_seed, index)`.
pub fn run_trial(
    password: &str,
    index: u64,
    config: &GeneratorConfig,
    noise: &NoiseConfig,
    max_budget: usize,
    res: &Resources,
    oracle: &GuessOracle,
) -> Result<Trial, AttackError> {
    let cfg = GeneratorConfig { rng_seed: derive(config.rng_seed, index), ..config.clone() };
    let ghost = generate(&cfg, password, &res.model, &res.meter, &res.layout)?;
    let noise = NoiseConfig { rng_seed: derive(noise.rng_seed, index), ..noise.clone() };
    let observed = simulate_inference(&res.layout, &ghost.ghost, &noise)?;
    let (rank, too_long) = match oracle.enumerate(&observed, max_budget) {
        Ok(guesses) => (guesses.iter().position(|g| g.text == password).map(|p| p + 1), false),
        Err(OracleError::TooLong { .. }) => (None, true),
        Err(e) => return Err(e.into()),
    };
    let overhead = res.layout.overhead(password, &ghost.ghost)?;
    Ok(Trial {
        category: categorize(password),
        ghost_len: ghost.ghost.chars().count(),
        ghost_count: ghost.ghost_count(),
        rank,
        too_long,
        absolute_overhead: overhead.absolute_overhead,
        relative_overhead: overhead.relative_overhead,
    })
}

pub const METRICS_HEADER: &str =
    "r,constraint,lambda_or_tau,selection,category_class,category_len,budget,accuracy,mean_abs_overhead,mean_rel_overhead,n";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub r: f64,
    pub constraint: &'static str,
    pub lambda_or_tau: f64,
    pub selection: String,
    /// `None` aggregates over classes.
    pub class_count: Option<u8>,
    /// `None` aggregates over length bands.
    pub band: Option<LengthBand>,
    pub budget: usize,
    pub accuracy: f64,
    pub mean_abs_overhead: f64,
    /// `None` when no password in the cell has a nonzero original distance.
    pub mean_rel_overhead: Option<f64>,
    pub n: usize,
}

impl MetricsRow {
    pub fn to_csv(&self) -> String {
        let class = self.class_count.map_or("all".to_string(), |c| c.to_string());
        let band = self.band.map_or("all".to_string(), |b| b.to_string());
        let rel = self.mean_rel_overhead.map_or(String::new(), |v| format!("{v:.6}"));
        format!(
            "{},{},{},{},{class},{band},{},{:.6},{:.6},{rel},{}",
            self.r,
            self.constraint,
            self.lambda_or_tau,
            self.selection,
            self.budget,
            self.accuracy,
            self.mean_abs_overhead,
            self.n
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenseReport {
    pub configs: Vec<GeneratorConfig>,
    pub budgets: Vec<usize>,
    /// `trials[c][i]`: password `i` under `configs[c]`.
    pub trials: Vec<Vec<Trial>>,
    pub rows: Vec<MetricsRow>,
}

impl DefenseReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }

    /// The row for `config_index` at `budget` in the given cell.
    pub fn row(&self, config_index: usize, budget: usize, class: Option<u8>, band: Option<LengthBand>) -> Option<&MetricsRow> {
        let c = &self.configs[config_index];
        self.rows.iter().find(|row| {
            row.r == c.r
                && row.constraint == c.constraint.kind()
                && row.lambda_or_tau == c.constraint.parameter()
                && row.selection == c.selection.to_string()
                && row.budget == budget
                && row.class_count == class
                && row.band == band
        })
    }
}

fn cell_row(config: &GeneratorConfig, budget: usize, class: Option<u8>, band: Option<LengthBand>, trials: &[&Trial]) -> MetricsRow {
    let n = trials.len();
    let hits = trials.iter().filter(|t| t.rank.is_some_and(|r| r <= budget)).count();
    let rel: Vec<f64> = trials.iter().filter_map(|t| t.relative_overhead).collect();
    MetricsRow {
        r: config.r,
        constraint: config.constraint.kind(),
        lambda_or_tau: config.constraint.parameter(),
        selection: config.selection.to_string(),
        class_count: class,
        band,
        budget,
        accuracy: hits as f64 / n as f64,
        mean_abs_overhead: trials.iter().map(|t| t.absolute_overhead).sum::<f64>() / n as f64,
        mean_rel_overhead: (!rel.is_empty()).then(|| rel.iter().sum::<f64>() / rel.len() as f64),
        n,
    }
}

/// Accuracy and overhead of every generator config against the simulated
/// attacker. Emits, per config and budget, one row per non-empty
/// (class, length) cell, then per-class, per-length and overall aggregates.
pub fn evaluate_defense(
    corpus: &[String],
    configs: &[GeneratorConfig],
    noise: &NoiseConfig,
    budgets: &[usize],
    res: &Resources,
    oracle: &GuessOracle,
) -> Result<DefenseReport, AttackError> {
    if corpus.is_empty() || configs.is_empty() || budgets.is_empty() || budgets.contains(&0) {
        return Err(AttackError::Invalid("corpus, configs and budgets must be non-empty, budgets positive".into()));
    }
    let max_budget = *budgets.iter().max().unwrap();
    let mut budgets = budgets.to_vec();
    budgets.sort_unstable();
    budgets.dedup();

    let mut all_trials = Vec::with_capacity(configs.len());
    let mut rows = Vec::new();
    for config in configs {
        let trials = corpus
            .iter()
            .enumerate()
            .map(|(i, pw)| run_trial(pw, i as u64, config, noise, max_budget, res, oracle))
            .collect::<Result<Vec<_>, _>>()?;

        let mut cells: BTreeMap<(Option<u8>, Option<LengthBand>), Vec<&Trial>> = BTreeMap::new();
        for t in &trials {
            let (c, b) = (Some(t.category.class_count), Some(t.category.band));
            for key in [(c, b), (c, None), (None, b), (None, None)] {
                cells.entry(key).or_default().push(t);
            }
        }
        for &budget in &budgets {
            let ordered = cells
                .iter()
                .filter(|((c, b), _)| c.is_some() && b.is_some())
                .chain(cells.iter().filter(|((c, b), _)| c.is_some() && b.is_none()))
                .chain(cells.iter().filter(|((c, b), _)| c.is_none() && b.is_some()))
                .chain(cells.iter().filter(|((c, b), _)| c.is_none() && b.is_none()));
            for (&(class, band), members) in ordered {
                rows.push(cell_row(config, budget, class, band, members));
            }
        }
        all_trials.push(trials);
    }
    Ok(DefenseReport { configs: configs.to_vec(), budgets, trials: all_trials, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorRow {
    pub r: f64,
    pub attempts: usize,
    /// Fraction of accounts where an attempt raised an alarm before any
    /// attempt succeeded.
    pub detection_rate: f64,
    /// Fraction of accounts the attacker logged into unnoticed.
    pub attacker_success_rate: f64,
    pub n: usize,
}

pub const DETECTOR_HEADER: &str = "r,attempts,detection_rate,attacker_success_rate,n";

impl DetectorRow {
    pub fn to_csv(&self) -> String {
        format!("{},{},{:.6},{:.6},{}", self.r, self.attempts, self.detection_rate, self.attacker_success_rate, self.n)
    }
}

/// Per-account outcome of a detector run: the 1-based attempt that raised
/// the first alarm and the one that first got in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttackOutcome {
    pub first_alarm: Option<usize>,
    pub first_success: Option<usize>,
    /// The legitimate login was accepted without an alarm.
    pub legit_ok: bool,
}

/// The attacker's login attempts for an observation: the observed string
/// itself, then the oracle's guesses, without repeats.
pub fn attacker_submissions(observed: &str, oracle: &GuessOracle, attempts: usize) -> Result<Vec<String>, AttackError> {
    let mut out = vec![observed.to_string()];
    match oracle.enumerate(observed, attempts) {
        Ok(guesses) => out.extend(guesses.into_iter().map(|g| g.text)),
        Err(OracleError::TooLong { .. } | OracleError::EmptyCandidateSet { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    let mut seen = HashSet::new();
    out.retain(|s| seen.insert(s.clone()));
    out.truncate(attempts);
    Ok(out)
}

pub struct DetectorEval {
    pub rows: Vec<DetectorRow>,
    /// `outcomes[c][i]`: account `i` under config `c`.
    pub outcomes: Vec<Vec<AttackOutcome>>,
}

impl DetectorEval {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(DETECTOR_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }
}

/// Detection rates against the simulated attacker. Every account makes one
/// legitimate ghost-typed login, storing its honeywords; the attacker then
/// replays its readings of the observed keystrokes.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_detector(
    corpus: &[String],
    configs: &[GeneratorConfig],
    honeyword_count: usize,
    attempts: &[usize],
    noise: &NoiseConfig,
    res: &Resources,
    oracle: &GuessOracle,
    iterations: u32,
) -> Result<DetectorEval, AttackError> {
    if corpus.is_empty() || attempts.is_empty() || attempts.contains(&0) || honeyword_count == 0 {
        return Err(AttackError::Invalid("corpus and attempts must be non-empty and positive".into()));
    }
    let max_attempts = *attempts.iter().max().unwrap();
    let mut attempts = attempts.to_vec();
    attempts.sort_unstable();
    attempts.dedup();
    let expected_n = (corpus.len() * honeyword_count) as u64;
    let bloom = BloomConfig::sized(expected_n, 1e-9, crate::bloom::DEFAULT_MEMORY_CAP)
        .map_err(DetectorError::from)?;

    let mut rows = Vec::new();
    let mut outcomes = Vec::new();
    for config in configs {
        let store_config = DetectorConfig { honeyword_count, iterations, bloom: bloom.clone() };
        let mut store = DetectorStore::in_memory(store_config, config.rng_seed).with_clock(|| 0);
        let mut per_account = Vec::with_capacity(corpus.len());
        for (i, pw) in corpus.iter().enumerate() {
            let user = format!("user{i}");
            store.register(&user, pw)?;
            let cfg = GeneratorConfig { rng_seed: derive(config.rng_seed, i as u64), ..config.clone() };
            let ghost = generate(&cfg, pw, &res.model, &res.meter, &res.layout)?;
            let legit = store.check_login_attempt(&user, pw, Some(&ghost.ghost), oracle)?;

            let noise = NoiseConfig { rng_seed: derive(noise.rng_seed, i as u64), ..noise.clone() };
            let observed = simulate_inference(&res.layout, &ghost.ghost, &noise)?;
            let mut outcome = AttackOutcome { first_alarm: None, first_success: None, legit_ok: legit == LoginVerdict::Success };
            for (k, guess) in attacker_submissions(&observed, oracle, max_attempts)?.iter().enumerate() {
                match store.check_login_attempt(&user, guess, None, oracle)? {
                    LoginVerdict::FailAlarm => {
                        outcome.first_alarm = Some(k + 1);
                        break;
                    }
                    LoginVerdict::Success => {
                        outcome.first_success = Some(k + 1);
                        break;
                    }
                    LoginVerdict::FailBenign => {}
                }
            }
            per_account.push(outcome);
        }
        let n = per_account.len();
        for &a in &attempts {
            let detected = per_account.iter().filter(|o| o.first_alarm.is_some_and(|k| k <= a)).count();
            let broke_in = per_account.iter().filter(|o| o.first_success.is_some_and(|k| k <= a)).count();
            rows.push(DetectorRow {
                r: config.r,
                attempts: a,
                detection_rate: detected as f64 / n as f64,
                attacker_success_rate: broke_in as f64 / n as f64,
                n,
            });
        }
        outcomes.push(per_account);
    }
    Ok(DetectorEval { rows, outcomes })
}

/// Randomness levels swept by the trade-off evaluation.
pub const SWEEP_R: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];

/// Constraint settings compared at r = 0.4.
pub const CONSTRAINT_VARIANTS: [Constraint; 4] = [
    Constraint::Soft { lambda: 0.2 },
    Constraint::Soft { lambda: 0.5 },
    Constraint::Hard { tau: 3.0 },
    Constraint::Hard { tau: 6.0 },
];

/// The evaluation grid: every r in [`SWEEP_R`] without a constraint, then
/// each of [`CONSTRAINT_VARIANTS`] at r = 0.4. All other parameters are
/// the defaults.
pub fn default_grid(seed: u64) -> Vec<GeneratorConfig> {
    let base = GeneratorConfig { rng_seed: seed, ..Default::default() };
    SWEEP_R
        .iter()
        .map(|&r| GeneratorConfig { r, ..base.clone() })
        .chain(CONSTRAINT_VARIANTS.iter().map(|&constraint| GeneratorConfig { r: 0.4, constraint, ..base.clone() }))
        .collect()
}

/// Published detection rates (percent) with 20 honeywords, keyed by
/// (r, attempts). Reference values only; they came from a learned guesser.
pub const PUBLISHED_DETECTION: [(f64, usize, f64); 6] =
    [(0.3, 1, 57.18), (0.3, 10, 86.32), (0.5, 1, 54.76), (0.5, 10, 85.36), (0.7, 1, 42.20), (0.7, 10, 78.04)];

pub fn published_detection(r: f64, attempts: usize) -> Option<f64> {
    PUBLISHED_DETECTION.iter().find(|&&(pr, pa, _)| pr == r && pa == attempts).map(|&(_, _, v)| v)
}

/// Published accuracy (percent) at the largest budget for r = 0.3 ... 0.7,
/// medium-length passwords, no constraint.
pub const PUBLISHED_ACCURACY_MEDIUM: [f64; 5] = [73.22, 62.68, 40.28, 3.08, 0.00];
