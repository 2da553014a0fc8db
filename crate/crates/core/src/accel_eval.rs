//! Crude Monte Carlo and importance-sampling estimators with a relative
//! half-width stopping rule, cross-entropy tuning of accelerated
//! distributions, and a side-by-side comparison harness.
//!
//! Sample `i` of a run always draws from its own stream
//! `rng::stream(seed, purpose, i)`. Blocks of samples are evaluated in
//! parallel and folded in index order, so results do not depend on the
//! number of worker threads.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{likelihood_ratio, Dist, DistError, Piece, Univariate, WeightShift};
use crate::optim::find_root;
use crate::rng::{self, purpose};
use crate::scenario::{simulate, LaneChangeEvent, ScenarioError, ScenarioModel};
use crate::special::z_two_sided;
use crate::stats::{relative_half_width, RunningStats};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    NotTunable(String),
    #[error("cross-entropy made no progress for {stalled} iterations; levels so far {levels:?}")]
    NoProgress { stalled: usize, levels: Vec<f64> },
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Stop once the relative half-width of the `100(1 − α)%` interval is at
/// most `β`, checking every `cadence` samples between `min_samples` and
/// `max_samples`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoppingRule {
    pub alpha: f64,
    pub beta: f64,
    pub cadence: u64,
    pub min_samples: u64,
    pub max_samples: u64,
}

impl Default for StoppingRule {
    fn default() -> Self {
        Self { alpha: 0.2, beta: 0.2, cadence: 100, min_samples: 500, max_samples: 100_000_000 }
    }
}

impl StoppingRule {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EvalError::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(EvalError::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if self.cadence == 0 {
            return Err(EvalError::Config("cadence must be positive".into()));
        }
        if self.min_samples < 2 || self.min_samples > self.max_samples {
            return Err(EvalError::Config(format!(
                "need 2 <= min_samples <= max_samples, got {} and {}",
                self.min_samples, self.max_samples
            )));
        }
        Ok(())
    }
}

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: u64,
    pub estimate: f64,
    pub rel_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimate: f64,
    pub std_error: f64,
    pub rel_half_width: f64,
    pub samples: u64,
    pub hits: u64,
    pub converged: bool,
    pub seed: u64,
    pub wall_time_secs: f64,
    pub trace: Vec<TraceRow>,
}

/// An estimation target: which inputs can be accelerated and how one
/// sample turns into an event indicator and a severity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    /// Cut-in crash probability. Slots are the per-segment `TTC⁻¹` laws
    /// followed by the `R⁻¹` law.
    Scenario {
        model: ScenarioModel,
        #[serde(default)]
        severity: Severity,
    },
    /// `P(X > threshold)`; severity is `threshold − X`.
    Tail { dist: Dist, threshold: f64 },
    /// A coin with success probability `p`; nothing to accelerate.
    Bernoulli { p: f64 },
}

/// How close a non-crash encounter came, for ranking cross-entropy elites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// `1 − peak required deceleration / max braking`; reaches zero exactly
    /// when the crash becomes unavoidable.
    #[default]
    RequiredDecel,
    /// Smallest range over the run (m).
    MinRange,
}

/// Outcome of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub hit: bool,
    /// Nonnegative distance to the event; zero on hits.
    pub severity: f64,
    /// Likelihood ratio of the whole sample (1 when not computed).
    pub weight: f64,
    values: [(usize, f64); 2],
    len: usize,
}

impl Draw {
    /// `(slot, value)` pairs drawn from accelerated laws.
    pub fn values(&self) -> &[(usize, f64)] {
        &self.values[..self.len]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weighting {
    Off,
    OnHit,
    Always,
}

impl Problem {
    pub fn validate(&self) -> Result<(), EvalError> {
        match self {
            Problem::Scenario { model, .. } => model.validate()?,
            Problem::Tail { threshold, .. } if !threshold.is_finite() => {
                return Err(EvalError::Config("tail threshold must be finite".into()))
            }
            Problem::Tail { .. } => {}
            Problem::Bernoulli { p } if !(0.0..=1.0).contains(p) => {
                return Err(EvalError::Config(format!("bernoulli p must lie in [0, 1], got {p}")))
            }
            Problem::Bernoulli { .. } => {}
        }
        Ok(())
    }

    /// Original laws of the accelerable inputs.
    pub fn slots(&self) -> Vec<&Dist> {
        match self {
            Problem::Scenario { model, .. } => {
                let mut v = model.ttc_dists();
                v.push(&model.range_inv);
                v
            }
            Problem::Tail { dist, .. } => vec![dist],
            Problem::Bernoulli { .. } => Vec::new(),
        }
    }

    fn draw(
        &self,
        proposals: &[&Dist],
        originals: &[&Dist],
        rng: &mut impl rand::Rng,
        weighting: Weighting,
    ) -> Result<Draw, EvalError> {
        let mut values = [(0, 0.0); 2];
        let (hit, severity, len) = match self {
            Problem::Scenario { model, severity } => {
                let k = model.segments.len();
                let (v, seg, t, r) = model.sample_inputs_with(rng, &proposals[..k], proposals[k]);
                let out = simulate(&LaneChangeEvent::from_inverses(v, t, r), &model.ego);
                values = [(seg, t), (k, r)];
                let sev = match severity {
                    _ if out.crashed => 0.0,
                    Severity::MinRange => out.min_range,
                    Severity::RequiredDecel => (1.0 - out.peak_required_decel / model.ego.max_decel).max(0.0),
                };
                (out.crashed, sev, 2)
            }
            Problem::Tail { threshold, .. } => {
                let x = proposals[0].sample_one(rng);
                values[0] = (0, x);
                let hit = x > *threshold;
                (hit, if hit { 0.0 } else { threshold - x }, 1)
            }
            Problem::Bernoulli { p } => {
                let u: f64 = rng.gen();
                let hit = u < *p;
                (hit, if hit { 0.0 } else { u - p }, 0)
            }
        };
        let mut weight = 1.0;
        if weighting == Weighting::Always || (weighting == Weighting::OnHit && hit) {
            for &(slot, x) in &values[..len] {
                weight *= likelihood_ratio(originals[slot], proposals[slot], x)?;
            }
        }
        Ok(Draw { hit, severity, weight, values, len })
    }
}

fn check_cover(original: &Dist, proposal: &Dist) -> Result<(), EvalError> {
    let (a, b) = original.support();
    let (c, d) = proposal.support();
    if c > a || d < b {
        return Err(EvalError::Config(format!(
            "accelerated support [{c}, {d}] does not cover original support [{a}, {b}]"
        )));
    }
    Ok(())
}

fn draw_range(
    problem: &Problem,
    proposals: &[&Dist],
    originals: &[&Dist],
    weighting: Weighting,
    seed: u64,
    purpose: u64,
    range: std::ops::Range<u64>,
) -> Result<Vec<Draw>, EvalError> {
    range
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, purpose, i);
            problem.draw(proposals, originals, &mut rng, weighting)
        })
        .collect()
}

fn estimate(
    problem: &Problem,
    accelerated: Option<&[Dist]>,
    rule: &StoppingRule,
    seed: u64,
) -> Result<EstimationResult, EvalError> {
    rule.validate()?;
    problem.validate()?;
    let start = Instant::now();
    let originals = problem.slots();
    let proposals: Vec<&Dist> = match accelerated {
        Some(acc) => {
            if acc.len() != originals.len() {
                return Err(EvalError::Config(format!(
                    "expected {} accelerated distributions, got {}",
                    originals.len(),
                    acc.len()
                )));
            }
            for (o, p) in originals.iter().zip(acc) {
                check_cover(o, p)?;
            }
            acc.iter().collect()
        }
        None => originals.clone(),
    };
    let weighting = if accelerated.is_some() { Weighting::OnHit } else { Weighting::Off };

    let block = rule.cadence * (8192 / rule.cadence).max(1);
    let mut stats = RunningStats::default();
    let mut trace = Vec::new();
    let (mut n, mut hits) = (0u64, 0u64);
    let mut converged = false;
    'outer: while n < rule.max_samples {
        let end = (n + block).min(rule.max_samples);
        let draws = draw_range(problem, &proposals, &originals, weighting, seed, purpose::ESTIMATE, n..end)?;
        for d in draws {
            stats.push(if d.hit { d.weight } else { 0.0 });
            hits += d.hit as u64;
            n += 1;
            if n % rule.cadence == 0 || n == rule.max_samples {
                let rhw = relative_half_width(&stats, rule.alpha);
                trace.push(TraceRow { n, estimate: stats.mean(), rel_half_width: rhw });
                if n >= rule.min_samples && rhw <= rule.beta {
                    converged = true;
                    break 'outer;
                }
            }
        }
    }
    Ok(EstimationResult {
        estimate: stats.mean(),
        std_error: stats.std_error(),
        rel_half_width: relative_half_width(&stats, rule.alpha),
        samples: n,
        hits,
        converged,
        seed,
        wall_time_secs: start.elapsed().as_secs_f64(),
        trace,
    })
}

/// Crude Monte Carlo: the sample mean of the event indicator under the
/// original laws.
pub fn crude_mc(problem: &Problem, rule: &StoppingRule, seed: u64) -> Result<EstimationResult, EvalError> {
    estimate(problem, None, rule, seed)
}

/// Importance sampling: draws the accelerable inputs from `accelerated`
/// (one law per slot, see [`Problem::slots`]) and weights each hit by the
/// product of likelihood ratios.
pub fn is_estimate(
    problem: &Problem,
    accelerated: &[Dist],
    rule: &StoppingRule,
    seed: u64,
) -> Result<EstimationResult, EvalError> {
    estimate(problem, Some(accelerated), rule, seed)
}

/// Crude sample size needed to reach relative half-width `β`:
/// `z²_{α/2} (1 − P) / (β² P)`.
pub fn crude_sample_size(p: f64, alpha: f64, beta: f64) -> Result<f64, EvalError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(EvalError::Config(format!("probability must lie in (0, 1), got {p}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0) {
        return Err(EvalError::Config(format!("invalid alpha {alpha} or beta {beta}")));
    }
    let z = z_two_sided(alpha);
    Ok(z * z * (1.0 - p) / (beta * beta * p))
}

/// Parametric family searched by cross-entropy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProposalFamily {
    /// Exponential tilt of the original law, one `θ` per piece, with
    /// optionally re-estimated piece weights.
    #[default]
    Tilt,
    /// A single unbounded exponential per slot, ignoring the original shape.
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CEConfig {
    pub batch: u64,
    pub rho: f64,
    pub smoothing: f64,
    pub max_iter: usize,
    pub family: ProposalFamily,
    /// Re-estimate piece weights `π*` along with the tilts.
    pub tune_weights: bool,
    /// Accelerated piece weights never drop below this fraction of
    /// `max(π_i, 1/k)`, so that every piece keeps being explored.
    pub weight_floor: f64,
    /// Bound on `|θ|·(γ_i − γ_{i−1})` for bounded pieces, which bounds the
    /// likelihood ratio inside a piece by `exp(max_tilt_span)`.
    pub max_tilt_span: f64,
    pub stall_limit: usize,
}

impl Default for CEConfig {
    fn default() -> Self {
        Self {
            batch: 1000,
            rho: 0.1,
            smoothing: 0.7,
            max_iter: 30,
            family: ProposalFamily::Tilt,
            tune_weights: true,
            weight_floor: 0.1,
            max_tilt_span: 5.0,
            stall_limit: 3,
        }
    }
}

impl CEConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(EvalError::Config(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(EvalError::Config(format!("smoothing must lie in (0, 1], got {}", self.smoothing)));
        }
        if self.batch < 10 || ((self.batch as f64) * self.rho) < 1.0 {
            return Err(EvalError::Config("batch too small for the elite fraction".into()));
        }
        if self.max_iter == 0 || self.stall_limit == 0 {
            return Err(EvalError::Config("max_iter and stall_limit must be positive".into()));
        }
        if !(self.max_tilt_span > 0.0) {
            return Err(EvalError::Config("max_tilt_span must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.weight_floor) {
            return Err(EvalError::Config("weight_floor must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CeResult {
    /// One accelerated law per slot.
    pub accelerated: Vec<Dist>,
    pub iterations: usize,
    /// Elite severity threshold per iteration.
    pub levels: Vec<f64>,
    /// The elite threshold reached the event.
    pub reached: bool,
    /// The event was already frequent under the original laws, so they are
    /// returned unchanged.
    pub already_common: bool,
}

#[derive(Debug, Clone)]
enum SlotState {
    Tilt { theta: Vec<f64>, weights: Vec<f64> },
    Exponential { rate: f64 },
}

fn pieces_of(d: &Dist) -> Result<(Vec<Piece>, Vec<f64>), EvalError> {
    match d {
        Dist::Piecewise(pw) => Ok((pw.pieces().to_vec(), pw.weights().to_vec())),
        other => match other.as_piece() {
            Some(p) => Ok((vec![p], vec![1.0])),
            None => Err(EvalError::NotTunable(format!("cannot tilt a {} law", other.kind()))),
        },
    }
}

impl SlotState {
    fn initial(original: &Dist, family: ProposalFamily) -> Result<Self, EvalError> {
        Ok(match family {
            ProposalFamily::Tilt => {
                let (pieces, weights) = pieces_of(original)?;
                SlotState::Tilt { theta: vec![0.0; pieces.len()], weights }
            }
            ProposalFamily::Exponential => {
                let m = original.mean();
                if !(m > 0.0 && m.is_finite()) {
                    return Err(EvalError::NotTunable(format!("original mean {m} is not positive")));
                }
                SlotState::Exponential { rate: 1.0 / m }
            }
        })
    }

    fn proposal(&self, original: &Dist) -> Result<Dist, EvalError> {
        Ok(match self {
            SlotState::Tilt { theta, weights } => {
                let shift = match original {
                    Dist::Piecewise(_) => WeightShift::Explicit(weights.clone()),
                    _ => WeightShift::Keep,
                };
                Dist::Tilted(original.tilt_with(theta.clone(), shift)?)
            }
            SlotState::Exponential { rate } => {
                Dist::BoundedExponential(crate::dist::BoundedExponential::standard(*rate)?)
            }
        })
    }
}

/// Tilt `θ` whose tilted piece has mean `target`.
fn solve_tilt(piece: &Piece, target: f64) -> Option<f64> {
    let (lo, hi) = piece.support();
    if !(target > lo && target < hi) {
        return None;
    }
    if let Piece::Exponential(e) = piece {
        if hi.is_infinite() {
            return Some(e.rate() - 1.0 / (target - lo));
        }
    }
    let f = |t: f64| piece.tilted(t).map(|p| p.mean() - target).unwrap_or(f64::NAN);
    let f0 = f(0.0);
    if f0 == 0.0 {
        return Some(0.0);
    }
    let scale = if hi.is_finite() { hi - lo } else { (piece.mean() - lo).max(1e-12) };
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    let (mut a, mut fa) = (0.0, f0);
    let mut step = 1.0 / scale;
    for _ in 0..80 {
        let b = dir * step;
        let fb = f(b);
        if fb.is_nan() {
            return None;
        }
        if fb.signum() != fa.signum() {
            let (l, r) = if a < b { (a, b) } else { (b, a) };
            return find_root(f, l, r, 1e-12 * (1.0 + r.abs()), 200);
        }
        a = b;
        fa = fb;
        step *= 2.0;
    }
    None
}

/// Keeps likelihood ratios bounded: limited tilts on bounded pieces, and
/// only tail-fattening tilts on pieces unbounded above.
fn clamp_tilt(piece: &Piece, theta: f64, max_span: f64) -> f64 {
    let (lo, hi) = piece.support();
    if hi.is_infinite() {
        theta.max(0.0)
    } else {
        let cap = max_span / (hi - lo);
        theta.clamp(-cap, cap)
    }
}

fn update_slot(
    state: &SlotState,
    original: &Dist,
    elites: &[(f64, f64)],
    cfg: &CEConfig,
) -> Result<SlotState, EvalError> {
    let s = cfg.smoothing;
    let total: f64 = elites.iter().map(|e| e.1).sum();
    if !(total > 0.0) {
        return Ok(state.clone());
    }
    Ok(match state {
        SlotState::Exponential { rate } => {
            let wx: f64 = elites.iter().map(|&(x, w)| w * x).sum();
            if !(wx > 0.0) {
                return Ok(state.clone());
            }
            SlotState::Exponential { rate: s * (total / wx) + (1.0 - s) * rate }
        }
        SlotState::Tilt { theta, weights } => {
            let (pieces, base_weights) = pieces_of(original)?;
            let k = pieces.len();
            let mut w_sum = vec![0.0; k];
            let mut wx_sum = vec![0.0; k];
            for &(x, w) in elites {
                let i = match original {
                    Dist::Piecewise(pw) => match pw.piece_index(x) {
                        Some(i) => i,
                        None => continue,
                    },
                    _ => 0,
                };
                w_sum[i] += w;
                wx_sum[i] += w * x;
            }
            let mut new_theta = theta.clone();
            for i in 0..k {
                if w_sum[i] > 0.0 {
                    if let Some(t) = solve_tilt(&pieces[i], wx_sum[i] / w_sum[i]) {
                        let t = clamp_tilt(&pieces[i], t, cfg.max_tilt_span);
                        new_theta[i] = s * t + (1.0 - s) * theta[i];
                    }
                }
            }
            let new_weights = if cfg.tune_weights && k > 1 {
                let floored: Vec<f64> = (0..k)
                    .map(|i| (w_sum[i] / total).max(cfg.weight_floor * base_weights[i].max(1.0 / k as f64)))
                    .collect();
                let z: f64 = floored.iter().sum();
                let mixed: Vec<f64> =
                    (0..k).map(|i| s * floored[i] / z + (1.0 - s) * weights[i]).collect();
                let z: f64 = mixed.iter().sum();
                mixed.iter().map(|w| w / z).collect()
            } else {
                weights.clone()
            };
            SlotState::Tilt { theta: new_theta, weights: new_weights }
        }
    })
}

/// Multi-level cross-entropy search for accelerated laws.
///
/// Each iteration samples a batch under the current laws, takes the
/// `ρ`-quantile of severity as the elite threshold (floored at the event),
/// refits every slot to the likelihood-ratio-weighted elite values, and
/// smooths with the previous parameters. Stops after the first update with
/// the threshold at the event.
pub fn cross_entropy_tune(problem: &Problem, cfg: &CEConfig, seed: u64) -> Result<CeResult, EvalError> {
    cfg.validate()?;
    problem.validate()?;
    let originals = problem.slots();
    if originals.is_empty() {
        return Err(EvalError::NotTunable("the problem has no accelerable inputs".into()));
    }
    let mut states = originals
        .iter()
        .map(|o| SlotState::initial(o, cfg.family))
        .collect::<Result<Vec<_>, _>>()?;
    let mut levels = Vec::new();
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let elite_count = ((cfg.batch as f64 * cfg.rho).ceil() as usize).max(1);

    for it in 0..cfg.max_iter {
        let proposals = states
            .iter()
            .zip(&originals)
            .map(|(s, o)| s.proposal(o))
            .collect::<Result<Vec<_>, _>>()?;
        let props: Vec<&Dist> = proposals.iter().collect();
        let start = it as u64 * cfg.batch;
        let draws = draw_range(
            problem,
            &props,
            &originals,
            Weighting::Always,
            seed,
            purpose::CROSS_ENTROPY,
            start..start + cfg.batch,
        )?;
        let mut sev: Vec<f64> = draws.iter().map(|d| d.severity).collect();
        sev.sort_by(f64::total_cmp);
        let q = sev[elite_count - 1];
        let frequent = draws.iter().filter(|d| d.hit).count() >= elite_count;
        if it == 0 && frequent && cfg.family == ProposalFamily::Tilt {
            return Ok(CeResult {
                accelerated: proposals,
                iterations: 1,
                levels: vec![0.0],
                reached: true,
                already_common: true,
            });
        }
        let reached = frequent || q <= 0.0;
        let level = if reached { 0.0 } else { q };
        levels.push(level);
        if level < best {
            best = level;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= cfg.stall_limit {
                return Err(EvalError::NoProgress { stalled, levels });
            }
        }

        let mut per_slot: Vec<Vec<(f64, f64)>> = vec![Vec::new(); originals.len()];
        for d in &draws {
            let elite = if reached { d.hit } else { d.severity <= level };
            if elite {
                for &(slot, x) in d.values() {
                    per_slot[slot].push((x, d.weight));
                }
            }
        }
        for (slot, state) in states.iter_mut().enumerate() {
            *state = update_slot(state, originals[slot], &per_slot[slot], cfg)?;
        }
        if reached {
            let accelerated = states
                .iter()
                .zip(&originals)
                .map(|(s, o)| s.proposal(o))
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(CeResult { accelerated, iterations: it + 1, levels, reached: true, already_common: false });
        }
    }
    let accelerated = states
        .iter()
        .zip(&originals)
        .map(|(s, o)| s.proposal(o))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CeResult { accelerated, iterations: cfg.max_iter, levels, reached: false, already_common: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    PiecewiseIs,
    SingleIs,
    Crude,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::PiecewiseIs => "Piecewise",
            Method::SingleIs => "Single",
            Method::Crude => "Crude",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareConfig {
    pub methods: Vec<Method>,
    pub repeats: usize,
    pub rule: StoppingRule,
    pub ce: CEConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::PiecewiseIs, Method::SingleIs, Method::Crude],
            repeats: 10,
            rule: StoppingRule::default(),
            ce: CEConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: Method,
    pub label: String,
    pub mean_samples: f64,
    pub mean_estimate: f64,
    /// `mean_samples` over the piecewise row's `mean_samples`.
    pub ratio: Option<f64>,
    pub converged_runs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<CeResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub runs: Vec<EstimationResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub seed: u64,
    pub rows: Vec<CompareRow>,
}

/// Seed of repeat `r` in a comparison; shared by all methods.
pub fn repeat_seed(seed: u64, r: usize) -> u64 {
    rng::derive(seed, purpose::COMPARE).wrapping_add(r as u64)
}

fn run_method(
    problem: &Problem,
    method: Method,
    cfg: &CompareConfig,
    seed: u64,
) -> Result<(Option<CeResult>, Vec<EstimationResult>), EvalError> {
    let tuning = match method {
        Method::Crude => None,
        Method::PiecewiseIs | Method::SingleIs => {
            let family = if method == Method::PiecewiseIs {
                ProposalFamily::Tilt
            } else {
                ProposalFamily::Exponential
            };
            let ce = CEConfig { family, ..cfg.ce };
            Some(cross_entropy_tune(problem, &ce, rng::derive(seed, purpose::CROSS_ENTROPY))?)
        }
    };
    let runs = (0..cfg.repeats)
        .map(|r| {
            let s = repeat_seed(seed, r);
            match &tuning {
                Some(t) => is_estimate(problem, &t.accelerated, &cfg.rule, s),
                None => crude_mc(problem, &cfg.rule, s),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((tuning, runs))
}

/// Runs every method `repeats` times on shared seeds and tabulates mean
/// samples to convergence and mean estimates. A failing method yields a
/// row carrying its error; the others still run.
pub fn compare_harness(problem: &Problem, cfg: &CompareConfig, seed: u64) -> Result<ComparisonTable, EvalError> {
    cfg.rule.validate()?;
    cfg.ce.validate()?;
    problem.validate()?;
    if cfg.repeats == 0 {
        return Err(EvalError::Config("repeats must be positive".into()));
    }
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        let row = match run_method(problem, method, cfg, seed) {
            Ok((tuning, runs)) => {
                let k = runs.len() as f64;
                CompareRow {
                    method,
                    label: method.label().into(),
                    mean_samples: runs.iter().map(|r| r.samples as f64).sum::<f64>() / k,
                    mean_estimate: runs.iter().map(|r| r.estimate).sum::<f64>() / k,
                    ratio: None,
                    converged_runs: runs.iter().filter(|r| r.converged).count(),
                    tuning,
                    error: None,
                    runs,
                }
            }
            Err(e) => CompareRow {
                method,
                label: method.label().into(),
                mean_samples: f64::NAN,
                mean_estimate: f64::NAN,
                ratio: None,
                converged_runs: 0,
                tuning: None,
                error: Some(e.to_string()),
                runs: Vec::new(),
            },
        };
        rows.push(row);
    }
    let base = rows
        .iter()
        .find(|r| r.method == Method::PiecewiseIs && r.error.is_none())
        .map(|r| r.mean_samples);
    if let Some(b) = base {
        for r in rows.iter_mut().filter(|r| r.error.is_none()) {
            r.ratio = Some(r.mean_samples / b);
        }
    }
    Ok(ComparisonTable { seed, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::BoundedExponential;

    fn exp_tail() -> Problem {
        Problem::Tail { dist: BoundedExponential::standard(1.0).unwrap().into(), threshold: 4.0 }
    }

    #[test]
    fn sure_event_converges_at_min_samples() {
        let r = crude_mc(&Problem::Bernoulli { p: 1.0 }, &StoppingRule::default(), 1).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert!(r.converged);
        assert_eq!(r.samples, 500);
    }

    #[test]
    fn impossible_event_runs_to_max() {
        let rule = StoppingRule { max_samples: 2_000, ..Default::default() };
        let r = crude_mc(&Problem::Bernoulli { p: 0.0 }, &rule, 1).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert!(!r.converged);
        assert_eq!(r.samples, 2_000);
        assert!(r.rel_half_width.is_infinite());
    }

    #[test]
    fn coin_flip_estimate() {
        let rule = StoppingRule { beta: 1e-9, max_samples: 10_000, ..Default::default() };
        let r = crude_mc(&Problem::Bernoulli { p: 0.5 }, &rule, 3).unwrap();
        assert_eq!(r.samples, 10_000);
        assert!((r.estimate - 0.5).abs() < 0.02);
    }

    #[test]
    fn converged_runs_meet_the_target() {
        let rule = StoppingRule::default();
        for seed in 0..5 {
            let r = crude_mc(&Problem::Bernoulli { p: 0.05 }, &rule, seed).unwrap();
            assert!(r.converged);
            assert!(r.rel_half_width <= rule.beta);
            assert!(r.samples >= rule.min_samples);
            assert_eq!(r.samples % rule.cadence, 0);
        }
    }

    #[test]
    fn sample_size_formula() {
        let n = crude_sample_size(0.5, 0.2, 0.2).unwrap();
        let z = 1.281_551_565_544_600_5f64;
        assert!((n - z * z * 0.5 / (0.04 * 0.5)).abs() < 1e-9);
        let half = crude_sample_size(0.01, 0.2, 0.4).unwrap();
        assert!((crude_sample_size(0.01, 0.2, 0.2).unwrap() / half - 4.0).abs() < 1e-12);
        assert!(crude_sample_size(0.0, 0.2, 0.2).is_err());
        assert!(crude_sample_size(1.0, 0.2, 0.2).is_err());
    }

    #[test]
    fn identity_measure_matches_crude() {
        let p = exp_tail();
        let rule = StoppingRule { max_samples: 20_000, ..Default::default() };
        let crude = crude_mc(&p, &rule, 9).unwrap();
        let is = is_estimate(&p, &[BoundedExponential::standard(1.0).unwrap().into()], &rule, 9).unwrap();
        assert_eq!(crude.trace, is.trace);
        assert_eq!(crude.samples, is.samples);
    }

    #[test]
    fn narrower_proposal_is_rejected() {
        let p = exp_tail();
        let narrow: Dist = BoundedExponential::new(1.0, 0.0, 10.0).unwrap().into();
        assert!(is_estimate(&p, &[narrow], &StoppingRule::default(), 0).is_err());
    }

    #[test]
    fn ce_on_the_exponential_tail() {
        let r = cross_entropy_tune(&exp_tail(), &CEConfig::default(), 5).unwrap();
        assert!(r.reached);
        let rate = match &r.accelerated[0] {
            Dist::Tilted(t) => t.realized().mean().recip(),
            other => panic!("unexpected {other:?}"),
        };
        assert!((0.2..=0.35).contains(&rate), "rate {rate}");
        let again = cross_entropy_tune(&exp_tail(), &CEConfig::default(), 5).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn ce_returns_original_for_common_events() {
        let p = Problem::Tail { dist: BoundedExponential::standard(1.0).unwrap().into(), threshold: 1.2 };
        let r = cross_entropy_tune(&p, &CEConfig::default(), 1).unwrap();
        assert!(r.already_common);
        assert_eq!(r.iterations, 1);
        match &r.accelerated[0] {
            Dist::Tilted(t) => assert_eq!(t.theta(), &[0.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ce_needs_inputs() {
        assert!(cross_entropy_tune(&Problem::Bernoulli { p: 0.1 }, &CEConfig::default(), 0).is_err());
    }

    #[test]
    fn solve_tilt_hits_target_means() {
        let e = Piece::Exponential(BoundedExponential::new(2.0, 1.0, 3.0).unwrap());
        for target in [1.1, 1.5, 2.0, 2.9] {
            let t = solve_tilt(&e, target).unwrap();
            assert!((e.tilted(t).unwrap().mean() - target).abs() < 1e-9);
        }
        assert!(solve_tilt(&e, 3.5).is_none());
    }

    #[test]
    fn ratio_of_piecewise_to_itself_is_one() {
        let cfg = CompareConfig {
            methods: vec![Method::PiecewiseIs, Method::Crude],
            repeats: 2,
            ..Default::default()
        };
        let t = compare_harness(&exp_tail(), &cfg, 2).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].ratio, Some(1.0));
        assert!(t.rows[1].ratio.unwrap() > 1.0);
    }

    #[test]
    fn failing_method_keeps_other_rows() {
        let cfg = CompareConfig { methods: vec![Method::PiecewiseIs, Method::Crude], repeats: 1, ..Default::default() };
        let t = compare_harness(&Problem::Bernoulli { p: 0.3 }, &cfg, 0).unwrap();
        assert!(t.rows[0].error.is_some());
        assert!(t.rows[1].error.is_none());
        assert!(t.rows[0].ratio.is_none() && t.rows[1].ratio.is_none());
    }
}
