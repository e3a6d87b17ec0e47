//! Subsequence guessing oracle.
//!
//! Given an observed keystroke string of length `n`, the candidates for the
//! real password are its distinct subsequences with length in
//! `[min_len, max_len]`. A candidate `s` of length `L` scores
//!
//! ```text
//! score(s) = -nll(s) + ln C(n, n-L) + (n-L)·ln ρ + L·ln(1-ρ)
//! ```
//!
//! where `nll` is the model's mean per-character negative log-likelihood and
//! `ρ` the expected ghost fraction. Ties are broken by ascending string.
//!
//! The top-`B` list is exact. It is found by a best-first search over
//! distinct subsequences built left to right. Each step jumps to the leftmost
//! next occurrence of a character, so every distinct string has exactly one
//! path. A node's priority bounds the best score reachable from it using a
//! relaxed model whose context is only the last two characters, with each
//! probability replaced by its maximum over the dropped older characters.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use thiserror::Error;

use crate::alphabet;
use crate::markov::{ContextKey, MarkovError, MarkovModel};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("observed string has {len} characters, above the enumeration cap of {max}")]
    TooLong { len: usize, max: usize },
    #[error("no subsequence of a {len}-character string reaches the minimum length {min}")]
    EmptyCandidateSet { len: usize, min: usize },
    #[error("guess budget must be at least 1")]
    ZeroBudget,
    #[error("invalid oracle config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] MarkovError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub min_len: usize,
    pub max_len: usize,
    /// Expected fraction of ghost characters in an observation.
    pub rho: f64,
    pub max_observed_len: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { min_len: 5, max_len: 30, rho: 0.25, max_observed_len: 24 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Guess {
    pub text: String,
    pub score: f64,
}

/// Deletion prior `ln C(n, n-len) + (n-len)·ln ρ + len·ln(1-ρ)`.
pub fn length_prior(n: usize, len: usize, rho: f64) -> f64 {
    let ln_fact = |k: usize| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
    let d = n - len;
    ln_fact(n) - ln_fact(d) - ln_fact(len) + d as f64 * rho.ln() + len as f64 * (1.0 - rho).ln()
}

/// Symbols of the relaxed bound: the 94 characters plus start padding.
const SYMS: usize = alphabet::SIZE + 1;
const PAD: usize = alphabet::SIZE;

/// A ranked-guess generator bound to one model.
#[derive(Debug, Clone)]
pub struct GuessOracle {
    model: Arc<MarkovModel>,
    config: OracleConfig,
    /// `relaxed[(a·SYMS + b)·|Σ| + c]` = max over contexts ending in `a b`
    /// of `ln P(c | context)`.
    relaxed: Vec<f64>,
}

impl GuessOracle {
    pub fn new(model: Arc<MarkovModel>, config: OracleConfig) -> Result<Self, OracleError> {
        if config.min_len < 1 || config.min_len > config.max_len {
            return Err(OracleError::InvalidConfig(format!(
                "length bounds [{}, {}]",
                config.min_len, config.max_len
            )));
        }
        if !(config.rho > 0.0 && config.rho < 1.0) {
            return Err(OracleError::InvalidConfig(format!("rho {} outside (0, 1)", config.rho)));
        }
        if config.max_observed_len > 63 {
            return Err(OracleError::InvalidConfig("max_observed_len above 63".into()));
        }
        let relaxed = relaxed_table(&model);
        Ok(Self { model, config, relaxed })
    }

    pub fn config(&self) -> &OracleConfig {
        &self.config
    }

    pub fn model(&self) -> &Arc<MarkovModel> {
        &self.model
    }

    /// Score of `candidate` as a reading of an `n`-character observation.
    pub fn score(&self, candidate: &str, n: usize) -> Result<f64, OracleError> {
        let len = candidate.chars().count();
        Ok(-self.model.sequence_nll(candidate)? + length_prior(n, len, self.config.rho))
    }

    /// The `budget` best-scoring distinct subsequences of `observed`, best
    /// first. Larger budgets extend smaller ones.
    pub fn enumerate(&self, observed: &str, budget: usize) -> Result<Vec<Guess>, OracleError> {
        if budget == 0 {
            return Err(OracleError::ZeroBudget);
        }
        let obs: Vec<char> = observed.chars().collect();
        let n = obs.len();
        if n > self.config.max_observed_len {
            return Err(OracleError::TooLong { len: n, max: self.config.max_observed_len });
        }
        if n < self.config.min_len {
            return Err(OracleError::EmptyCandidateSet { len: n, min: self.config.min_len });
        }
        if let Some((index, &ch)) = obs.iter().enumerate().find(|(_, c)| !alphabet::contains(**c)) {
            return Err(MarkovError::OffAlphabet { ch, index }.into());
        }
        Search::new(self, &obs).run(budget)
    }
}

/// Convenience wrapper building a one-off [`GuessOracle`].
pub fn enumerate_guesses(
    observed: &str,
    model: Arc<MarkovModel>,
    budget: usize,
    config: OracleConfig,
) -> Result<Vec<Guess>, OracleError> {
    GuessOracle::new(model, config)?.enumerate(observed, budget)
}

fn sym(c: Option<char>) -> usize {
    c.map_or(PAD, |c| alphabet::index(c).unwrap())
}

fn relaxed_table(model: &MarkovModel) -> Vec<f64> {
    let uniform = -(alphabet::SIZE as f64).ln();
    let mut table = vec![uniform; SYMS * SYMS * alphabet::SIZE];
    let order = model.order();
    for (key, probs) in model.observed_contexts() {
        let (older, newer) = key.tail(order);
        let b = sym(newer);
        let rows: Vec<usize> = if order == 1 { (0..SYMS).collect() } else { vec![sym(older)] };
        for a in rows {
            let base = (a * SYMS + b) * alphabet::SIZE;
            for &(c, p) in &probs {
                let slot = &mut table[base + c];
                *slot = slot.max(p.ln());
            }
        }
    }
    table
}

#[derive(Clone, Copy)]
struct Node {
    parent: u32,
    /// Index of the last chosen character in the observation.
    pos: u8,
    len: u8,
    ctx: ContextKey,
    /// Sum of log-probabilities of the chosen characters.
    logp: f64,
}

#[derive(PartialEq)]
struct Entry {
    priority: f64,
    node: u32,
    complete: bool,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.node.cmp(&self.node))
            .then_with(|| self.complete.cmp(&other.complete))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Slack absorbing rounding differences between bounds and exact scores.
const EPS: f64 = 1e-9;

struct Search<'a> {
    oracle: &'a GuessOracle,
    obs: &'a [char],
    idx: Vec<usize>,
    n: usize,
    min_len: usize,
    max_len: usize,
    prior: Vec<f64>,
    /// `next[i][c]`: first position `>= i` holding alphabet index `c`.
    next: Vec<Vec<u8>>,
    distinct: Vec<usize>,
    /// `bound[(p·n + q)·(n+1) + r]`: best relaxed log-probability of `r`
    /// more characters after position `q`, whose predecessor sits at `p`
    /// (`p == n` meaning padding).
    bound: Vec<f64>,
    nodes: Vec<Node>,
}

const NONE: u8 = u8::MAX;

impl<'a> Search<'a> {
    fn new(oracle: &'a GuessOracle, obs: &'a [char]) -> Self {
        let n = obs.len();
        let cfg = &oracle.config;
        let idx: Vec<usize> = obs.iter().map(|&c| alphabet::index(c).unwrap()).collect();
        let mut next = vec![vec![NONE; alphabet::SIZE]; n + 1];
        for i in (0..n).rev() {
            next[i] = next[i + 1].clone();
            next[i][idx[i]] = i as u8;
        }
        let mut distinct = idx.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let prior = (0..=n).map(|len| length_prior(n, len, cfg.rho)).collect();
        let mut s = Self {
            oracle,
            obs,
            idx,
            n,
            min_len: cfg.min_len,
            max_len: cfg.max_len.min(n),
            prior,
            next,
            distinct,
            bound: Vec::new(),
            nodes: Vec::new(),
        };
        s.bound = s.relaxed_bounds();
        s
    }

    fn relaxed(&self, a: usize, b: usize, c: usize) -> f64 {
        self.oracle.relaxed[(a * SYMS + b) * alphabet::SIZE + c]
    }

    fn sym_at(&self, p: usize) -> usize {
        if p == self.n {
            PAD
        } else {
            self.idx[p]
        }
    }

    fn bound_at(&self, p: usize, q: usize, r: usize) -> f64 {
        self.bound[(p * self.n + q) * (self.n + 1) + r]
    }

    fn relaxed_bounds(&self) -> Vec<f64> {
        let n = self.n;
        let mut b = vec![f64::NEG_INFINITY; (n + 1) * n * (n + 1)];
        let at = |p: usize, q: usize, r: usize| (p * n + q) * (n + 1) + r;
        for r in 0..n {
            for q in (0..n).rev() {
                for p in (0..q).chain(std::iter::once(n)) {
                    let v = if r == 0 {
                        0.0
                    } else {
                        let (sa, sb) = (self.sym_at(p), self.idx[q]);
                        (q + 1..=n - r)
                            .map(|k| self.relaxed(sa, sb, self.idx[k]) + b[at(q, k, r - 1)])
                            .fold(f64::NEG_INFINITY, f64::max)
                    };
                    b[at(p, q, r)] = v;
                }
            }
        }
        b
    }

    /// Upper bound on the score of any candidate in the subtree of `node`.
    /// Includes the node's own string when its length is admissible.
    fn priority(&self, node: &Node) -> f64 {
        let model = &self.oracle.model;
        let len = node.len as usize;
        let start = if len == 0 { 0 } else { node.pos as usize + 1 };
        let mut best = if len >= self.min_len { node.logp / len as f64 + self.prior[len] } else { f64::NEG_INFINITY };
        let last = if len == 0 { self.n } else { node.pos as usize };
        let first: Vec<(usize, f64)> = (start..self.n)
            .map(|k| (k, model.prob_at(node.ctx, self.idx[k]).ln()))
            .collect();
        let lo = (len + 1).max(self.min_len);
        let hi = self.max_len.min(len + self.n - start);
        for target in lo..=hi {
            let r = target - len;
            let tail = first
                .iter()
                .filter(|&&(k, _)| k + r <= self.n)
                .map(|&(k, lp)| lp + self.bound_at(last, k, r - 1))
                .fold(f64::NEG_INFINITY, f64::max);
            best = best.max((node.logp + tail) / target as f64 + self.prior[target]);
        }
        best
    }

    fn text(&self, mut id: u32) -> String {
        let mut out = Vec::new();
        while id != 0 {
            let node = self.nodes[id as usize];
            out.push(self.obs[node.pos as usize]);
            id = node.parent;
        }
        out.iter().rev().collect()
    }

    fn run(mut self, budget: usize) -> Result<Vec<Guess>, OracleError> {
        let order = self.oracle.model.order();
        let root = Node { parent: 0, pos: 0, len: 0, ctx: ContextKey::start(order), logp: 0.0 };
        self.nodes.push(root);
        let mut heap = BinaryHeap::new();
        heap.push(Entry { priority: self.priority(&root) + EPS, node: 0, complete: false });
        let mut found: Vec<Guess> = Vec::new();
        let mut kth = f64::NEG_INFINITY;

        while let Some(top) = heap.pop() {
            if found.len() >= budget && top.priority < kth - 2.0 * EPS {
                break;
            }
            let node = self.nodes[top.node as usize];
            if top.complete {
                found.push(Guess { text: self.text(top.node), score: top.priority });
                if found.len() == budget {
                    kth = found.iter().map(|g| g.score).fold(f64::INFINITY, f64::min);
                }
                continue;
            }
            let len = node.len as usize;
            if len >= self.min_len {
                let score = node.logp / len as f64 + self.prior[len];
                heap.push(Entry { priority: score, node: top.node, complete: true });
            }
            if len == self.max_len {
                continue;
            }
            let from = if len == 0 { 0 } else { node.pos as usize + 1 };
            for &c in &self.distinct {
                let k = self.next[from][c];
                if k == NONE {
                    continue;
                }
                let k = k as usize;
                // Enough characters must remain to reach the minimum length.
                if len + 1 + (self.n - 1 - k) < self.min_len {
                    continue;
                }
                let child = Node {
                    parent: top.node,
                    pos: k as u8,
                    len: node.len + 1,
                    ctx: node.ctx.push(self.obs[k], order),
                    logp: node.logp + self.oracle.model.prob_at(node.ctx, c).ln(),
                };
                let priority = self.priority(&child) + EPS;
                if found.len() >= budget && priority < kth - 2.0 * EPS {
                    continue;
                }
                self.nodes.push(child);
                heap.push(Entry { priority, node: (self.nodes.len() - 1) as u32, complete: false });
            }
        }

        found.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text)));
        found.truncate(budget);
        Ok(found)
    }
}
