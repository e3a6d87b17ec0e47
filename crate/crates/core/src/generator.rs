//! Adaptive ghost-character injection.
//!
//! A pointer walks the password. At every step a Bernoulli trial with the
//! current injection probability `p` decides between appending a ghost
//! character and copying the next real one. After each appended character
//! the randomness meter scores the whole augmented string, an exponential
//! moving average of that score is compared with the target level `r`, and
//! `p` moves by `±Δp` (up while the string is not random enough).
//!
//! Two limits bound the output: at most `max_consecutive_ghost` ghosts in a
//! row, and at least `min_total_ghost` ghosts overall. The minimum is topped
//! up with trailing ghosts once the password ends, because an interactive
//! session cannot know the password length in advance.
//!
//! [`generate`] runs the loop in one call. [`Session`] runs the same loop one
//! keystroke at a time: the caller polls for the next [`Action`] and feeds
//! the key the user pressed. With equal seeds both produce identical
//! results.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use crate::alphabet;
use crate::layout::{KeyboardLayout, LayoutError};
use crate::markov::{sample_index, ContextKey, MarkovModel};
use crate::meter::{MeterCalibration, MeterError};
use crate::rng::{seeded, SimRng};

/// Accepted password lengths.
pub const MIN_PASSWORD_LEN: usize = 5;
pub const MAX_PASSWORD_LEN: usize = 30;

/// Record separator of the [`GhostResult`] wire form.
pub const UNIT_SEPARATOR: char = '\u{1F}';

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("password length {0} outside {MIN_PASSWORD_LEN}..={MAX_PASSWORD_LEN}")]
    PasswordLength(usize),
    #[error("character {ch:?} at index {index} is not in the alphabet")]
    OffAlphabet { ch: char, index: usize },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("no ghost candidate satisfies the distance constraint")]
    NoCandidates,
    #[error("expected ghost character {expected:?}, got {got:?}")]
    GhostMismatch { expected: char, got: char },
    #[error("no pending action; poll before feeding a key")]
    NotPolled,
    #[error("session is finalized")]
    Finalized,
    #[error("a ghost prompt for {0:?} is outstanding")]
    GhostPromptOutstanding(char),
    #[error("session is not finished")]
    NotFinished,
    #[error("mask has {mask} entries but ghost has {ghost} characters")]
    MaskLength { mask: usize, ghost: usize },
    #[error("malformed ghost record: {0}")]
    Wire(String),
    #[error(transparent)]
    Meter(#[from] MeterError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// How ghost characters are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// Uniform over the alphabet.
    Uniform,
    /// From the Markov model's next-character distribution.
    Markov,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selection::Uniform => "uniform",
            Selection::Markov => "markov",
        })
    }
}

/// Distance-aware reweighting of ghost candidates, relative to the
/// previously typed key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    None,
    /// `P'(c) ∝ P(c) · exp(-λ · d(c, prev))`.
    Soft { lambda: f64 },
    /// `P'(c) ∝ P(c)` if `d(c, prev) <= τ`, else 0.
    Hard { tau: f64 },
}

impl Constraint {
    pub fn kind(&self) -> &'static str {
        match self {
            Constraint::None => "none",
            Constraint::Soft { .. } => "soft",
            Constraint::Hard { .. } => "hard",
        }
    }

    /// λ or τ, 0 when unconstrained.
    pub fn parameter(&self) -> f64 {
        match *self {
            Constraint::None => 0.0,
            Constraint::Soft { lambda } => lambda,
            Constraint::Hard { tau } => tau,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    /// Initial injection probability.
    pub p0: f64,
    /// Step applied to `p` after every appended character.
    pub delta_p: f64,
    /// EMA smoothing factor for the meter output.
    pub alpha: f64,
    /// Target randomness level.
    pub r: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub max_consecutive_ghost: usize,
    /// `None` selects `max(2, ⌈0.15 · len⌉)` for a password of length `len`.
    pub min_total_ghost: Option<usize>,
    /// Hard cap on the number of ghosts in one result.
    pub max_total_ghost: usize,
    pub selection: Selection,
    pub constraint: Constraint,
    pub rng_seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            p0: 0.5,
            delta_p: 0.05,
            alpha: 0.1,
            r: 0.5,
            p_min: 0.0,
            p_max: 0.9,
            max_consecutive_ghost: 3,
            min_total_ghost: None,
            max_total_ghost: 120,
            selection: Selection::Markov,
            constraint: Constraint::None,
            rng_seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::InvalidConfig(m));
        let probs = [self.p0, self.p_min, self.p_max];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return bad("p0, p_min and p_max must lie in [0, 1]".into());
        }
        if !(self.p_min <= self.p0 && self.p0 <= self.p_max) {
            return bad(format!("need p_min <= p0 <= p_max, got {} {} {}", self.p_min, self.p0, self.p_max));
        }
        if !(self.delta_p >= 0.0 && self.delta_p.is_finite()) {
            return bad(format!("delta_p must be non-negative, got {}", self.delta_p));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return bad(format!("alpha must lie in (0, 1], got {}", self.alpha));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return bad(format!("r must lie in (0, 1), got {}", self.r));
        }
        if self.max_consecutive_ghost < 1 {
            return bad("max_consecutive_ghost must be at least 1".into());
        }
        let min = self.min_ghosts(MAX_PASSWORD_LEN);
        if min >= self.max_total_ghost {
            return bad(format!("min_total_ghost {min} must be below the cap {}", self.max_total_ghost));
        }
        match self.constraint {
            Constraint::Soft { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                bad(format!("lambda must be non-negative, got {lambda}"))
            }
            Constraint::Hard { tau } if !(tau >= 0.0) => bad(format!("tau must be non-negative, got {tau}")),
            _ => Ok(()),
        }
    }

    /// Minimum ghost count for a password of `len` characters.
    pub fn min_ghosts(&self, len: usize) -> usize {
        self.min_total_ghost
            .unwrap_or_else(|| 2.max((0.15 * len as f64 - 1e-9).ceil() as usize))
    }
}

/// An augmented password together with its ghost mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GhostResult {
    pub original: String,
    pub ghost: String,
    /// `true` at ghost positions of `ghost`.
    pub mask: Vec<bool>,
}

impl GhostResult {
    pub fn ghost_count(&self) -> usize {
        self.mask.iter().filter(|&&g| g).count()
    }

    /// Longest run of consecutive ghosts.
    pub fn longest_ghost_run(&self) -> usize {
        self.mask
            .iter()
            .fold((0, 0), |(best, cur), &g| {
                let cur = if g { cur + 1 } else { 0 };
                (best.max(cur), cur)
            })
            .0
    }

    /// Wire form `original<US>ghost<US>mask-bits`.
    pub fn to_wire(&self) -> String {
        let bits: String = self.mask.iter().map(|&g| if g { '1' } else { '0' }).collect();
        format!("{}{UNIT_SEPARATOR}{}{UNIT_SEPARATOR}{bits}", self.original, self.ghost)
    }

    pub fn from_wire(record: &str) -> Result<Self, GeneratorError> {
        let parts: Vec<&str> = record.split(UNIT_SEPARATOR).collect();
        let [original, ghost, bits] = parts[..] else {
            return Err(GeneratorError::Wire(format!("expected 3 fields, got {}", parts.len())));
        };
        let mask = bits
            .chars()
            .map(|b| match b {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(GeneratorError::Wire(format!("bad mask bit {other:?}"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let result = Self { original: original.into(), ghost: ghost.into(), mask };
        if extract_real(&result)? != result.original {
            return Err(GeneratorError::Wire("unmasked characters do not spell the original".into()));
        }
        Ok(result)
    }
}

/// The real characters of `result`: its ghost string with masked positions
/// dropped. An empty mask means no ghosts.
pub fn extract_real(result: &GhostResult) -> Result<String, GeneratorError> {
    if result.mask.is_empty() {
        return Ok(result.ghost.clone());
    }
    let n = result.ghost.chars().count();
    if result.mask.len() != n {
        return Err(GeneratorError::MaskLength { mask: result.mask.len(), ghost: n });
    }
    Ok(result
        .ghost
        .chars()
        .zip(&result.mask)
        .filter(|(_, &g)| !g)
        .map(|(c, _)| c)
        .collect())
}

/// Two-pointer subsequence test.
pub fn is_subsequence(needle: &str, haystack: &str) -> bool {
    let mut hay = haystack.chars();
    needle.chars().all(|c| hay.any(|h| h == c))
}

/// Normalized ghost-candidate distribution over the alphabet for the
/// augmented string `context`.
pub fn ghost_distribution(
    context: &str,
    model: &MarkovModel,
    layout: &KeyboardLayout,
    selection: Selection,
    constraint: Constraint,
) -> Result<Vec<f64>, GeneratorError> {
    let mut weights = match selection {
        Selection::Uniform => vec![1.0; alphabet::SIZE],
        Selection::Markov => model.next_char_distribution(context),
    };
    if let Some(prev) = context.chars().last() {
        let origin = layout
            .coord(prev)
            .ok_or(LayoutError::OffLayout { ch: prev, index: context.chars().count() - 1 })?;
        for (i, w) in weights.iter_mut().enumerate() {
            let d = origin.distance(layout.coord(alphabet::char_at(i)).unwrap());
            match constraint {
                Constraint::None => {}
                Constraint::Soft { lambda } => *w *= (-lambda * d).exp(),
                Constraint::Hard { tau } => {
                    if d > tau {
                        *w = 0.0
                    }
                }
            }
        }
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(GeneratorError::NoCandidates);
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Draws one ghost character to follow `context`.
pub fn inject_char(
    context: &str,
    model: &MarkovModel,
    layout: &KeyboardLayout,
    selection: Selection,
    constraint: Constraint,
    rng: &mut SimRng,
) -> Result<char, GeneratorError> {
    let dist = ghost_distribution(context, model, layout, selection, constraint)?;
    sample_index(&dist, rng)
        .map(alphabet::char_at)
        .ok_or(GeneratorError::NoCandidates)
}

/// Live state of the injection loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub p: f64,
    pub r_ema: f64,
    pub ghost_so_far: String,
    pub mask_so_far: Vec<bool>,
    pub consecutive_ghosts: usize,
    pub total_ghosts: usize,
    pub finalized: bool,
}

/// Loop machinery shared by batch and interactive generation.
struct Engine<'a> {
    cfg: GeneratorConfig,
    model: &'a MarkovModel,
    meter: &'a MeterCalibration,
    layout: &'a KeyboardLayout,
    rng: SimRng,
    state: SessionState,
    real: String,
    nll_sum: f64,
    meter_ctx: ContextKey,
}

impl<'a> Engine<'a> {
    fn new(
        cfg: &GeneratorConfig,
        model: &'a MarkovModel,
        meter: &'a MeterCalibration,
        layout: &'a KeyboardLayout,
    ) -> Result<Self, GeneratorError> {
        cfg.validate()?;
        Ok(Self {
            rng: seeded(cfg.rng_seed),
            state: SessionState {
                p: cfg.p0,
                r_ema: cfg.r,
                ghost_so_far: String::new(),
                mask_so_far: Vec::new(),
                consecutive_ghosts: 0,
                total_ghosts: 0,
                finalized: false,
            },
            cfg: cfg.clone(),
            model,
            meter,
            layout,
            real: String::new(),
            nll_sum: 0.0,
            meter_ctx: ContextKey::start(meter.model().order()),
        })
    }

    /// One Bernoulli trial. A uniform draw is consumed even when the
    /// injection limits force a copy.
    ///
    /// Besides the run and total caps, the ghost count may not exceed
    /// `k · real + min_ghosts(real)` for the `real` characters seen so far,
    /// so ghosts after the last real character cannot push the output past
    /// `len · (1 + k) + min` whatever the password length turns out to be.
    fn decide_inject(&mut self) -> bool {
        let u: f64 = self.rng.gen();
        let st = &self.state;
        let real = st.mask_so_far.len() - st.total_ghosts;
        let budget = real * self.cfg.max_consecutive_ghost + self.cfg.min_ghosts(real);
        let allowed = st.consecutive_ghosts < self.cfg.max_consecutive_ghost
            && st.total_ghosts < self.cfg.max_total_ghost
            && st.total_ghosts < budget;
        allowed && u < st.p
    }

    fn pick_ghost(&mut self) -> Result<char, GeneratorError> {
        inject_char(
            &self.state.ghost_so_far,
            self.model,
            self.layout,
            self.cfg.selection,
            self.cfg.constraint,
            &mut self.rng,
        )
    }

    /// Appends a character, then runs the meter / EMA / `p` update.
    fn push(&mut self, c: char, is_ghost: bool) -> Result<(), GeneratorError> {
        let st = &mut self.state;
        st.ghost_so_far.push(c);
        st.mask_so_far.push(is_ghost);
        if is_ghost {
            st.consecutive_ghosts += 1;
            st.total_ghosts += 1;
        } else {
            st.consecutive_ghosts = 0;
            self.real.push(c);
        }

        // Incremental form of meter.eval(ghost_so_far): same terms, same order.
        let model = self.meter.model();
        let idx = alphabet::index(c).expect("validated character");
        self.nll_sum += model.prob_at(self.meter_ctx, idx).ln();
        self.meter_ctx = self.meter_ctx.push(c, model.order());
        let n = st.mask_so_far.len() as f64;
        let score = self.meter.score_nll(-self.nll_sum / n);

        st.r_ema = (1.0 - self.cfg.alpha) * st.r_ema + self.cfg.alpha * score;
        st.p = if st.r_ema < self.cfg.r { st.p + self.cfg.delta_p } else { st.p - self.cfg.delta_p };
        st.p = st.p.clamp(self.cfg.p_min, self.cfg.p_max);
        Ok(())
    }

    fn min_ghosts(&self) -> usize {
        self.cfg.min_ghosts(self.real.chars().count())
    }

    fn into_result(mut self) -> GhostResult {
        self.state.finalized = true;
        GhostResult {
            original: self.real,
            ghost: self.state.ghost_so_far,
            mask: self.state.mask_so_far,
        }
    }
}

fn check_password(password: &str) -> Result<(), GeneratorError> {
    let len = password.chars().count();
    if !(MIN_PASSWORD_LEN..=MAX_PASSWORD_LEN).contains(&len) {
        return Err(GeneratorError::PasswordLength(len));
    }
    if let Some((index, ch)) = password.chars().enumerate().find(|&(_, c)| !alphabet::contains(c)) {
        return Err(GeneratorError::OffAlphabet { ch, index });
    }
    Ok(())
}

/// Generates a ghost password for `password` in one call.
pub fn generate(
    config: &GeneratorConfig,
    password: &str,
    model: &MarkovModel,
    meter: &MeterCalibration,
    layout: &KeyboardLayout,
) -> Result<GhostResult, GeneratorError> {
    check_password(password)?;
    let mut engine = Engine::new(config, model, meter, layout)?;
    let mut real = password.chars();
    loop {
        if engine.decide_inject() {
            let g = engine.pick_ghost()?;
            engine.push(g, true)?;
        } else if let Some(c) = real.next() {
            engine.push(c, false)?;
        } else {
            break;
        }
    }
    while engine.state.total_ghosts < engine.min_ghosts() {
        let g = engine.pick_ghost()?;
        engine.push(g, true)?;
    }
    Ok(engine.into_result())
}

/// What the keyboard must accept next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    /// Any key; the next real password character.
    AwaitReal,
    /// Only this key is enabled.
    RequireGhost(char),
    /// The session is complete.
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Typing,
    /// Password ended; the loop still runs its trials until a copy decision.
    Closing,
    /// Loop finished; trailing ghosts until the minimum is met.
    TopUp,
    Done,
}

/// Interactive, keystroke-at-a-time generation.
pub struct Session<'a> {
    engine: Engine<'a>,
    pending: Option<Action>,
    phase: Phase,
}

impl<'a> Session<'a> {
    pub fn new(
        config: &GeneratorConfig,
        model: &'a MarkovModel,
        meter: &'a MeterCalibration,
        layout: &'a KeyboardLayout,
    ) -> Result<Self, GeneratorError> {
        Ok(Self {
            engine: Engine::new(config, model, meter, layout)?,
            pending: None,
            phase: Phase::Typing,
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.engine.state
    }

    /// Number of real characters fed so far.
    pub fn real_len(&self) -> usize {
        self.engine.real.chars().count()
    }

    /// The next action. Repeated polls return the same pending action
    /// without consuming randomness.
    pub fn poll(&mut self) -> Result<Action, GeneratorError> {
        if let Some(a) = self.pending {
            return Ok(a);
        }
        let action = match self.phase {
            Phase::Done => return Ok(Action::Done),
            Phase::Typing => {
                if self.engine.decide_inject() {
                    Action::RequireGhost(self.engine.pick_ghost()?)
                } else {
                    Action::AwaitReal
                }
            }
            Phase::Closing => {
                if self.engine.decide_inject() {
                    Action::RequireGhost(self.engine.pick_ghost()?)
                } else {
                    self.phase = Phase::TopUp;
                    return self.poll();
                }
            }
            Phase::TopUp => {
                if self.engine.state.total_ghosts < self.engine.min_ghosts() {
                    Action::RequireGhost(self.engine.pick_ghost()?)
                } else {
                    self.phase = Phase::Done;
                    self.engine.state.finalized = true;
                    return Ok(Action::Done);
                }
            }
        };
        self.pending = Some(action);
        Ok(action)
    }

    /// Records the key the user pressed. After `RequireGhost(g)` the key
    /// must be `g`; on mismatch the state is unchanged.
    pub fn feed(&mut self, c: char) -> Result<(), GeneratorError> {
        if self.phase == Phase::Done {
            return Err(GeneratorError::Finalized);
        }
        match self.pending {
            None => Err(GeneratorError::NotPolled),
            Some(Action::RequireGhost(g)) => {
                if c != g {
                    return Err(GeneratorError::GhostMismatch { expected: g, got: c });
                }
                self.engine.push(g, true)?;
                self.pending = None;
                Ok(())
            }
            Some(Action::AwaitReal) => {
                let index = self.real_len();
                if !alphabet::contains(c) {
                    return Err(GeneratorError::OffAlphabet { ch: c, index });
                }
                if index >= MAX_PASSWORD_LEN {
                    return Err(GeneratorError::PasswordLength(index + 1));
                }
                self.engine.push(c, false)?;
                self.pending = None;
                Ok(())
            }
            Some(Action::Done) => Err(GeneratorError::Finalized),
        }
    }

    /// Marks the end of the real password and returns the next action:
    /// remaining ghost prompts, or `Done`.
    pub fn finalize(&mut self) -> Result<Action, GeneratorError> {
        match (self.phase, self.pending) {
            (_, Some(Action::RequireGhost(g))) => Err(GeneratorError::GhostPromptOutstanding(g)),
            (Phase::Typing, pending) => {
                let len = self.real_len();
                if len < MIN_PASSWORD_LEN {
                    return Err(GeneratorError::PasswordLength(len));
                }
                // A pending copy decision at the end of input ends the loop.
                self.phase = if pending == Some(Action::AwaitReal) { Phase::TopUp } else { Phase::Closing };
                self.pending = None;
                self.poll()
            }
            _ => self.poll(),
        }
    }

    /// The finished result, available once an action returned `Done`.
    pub fn result(self) -> Result<GhostResult, GeneratorError> {
        if self.phase != Phase::Done {
            return Err(GeneratorError::NotFinished);
        }
        Ok(self.engine.into_result())
    }
}
