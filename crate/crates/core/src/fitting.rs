//! Maximum-likelihood fitting: piece weights, bounded exponential and
//! bounded normal pieces, mixtures of bounded normals by EM, whole
//! piecewise mixtures, and the single-distribution baselines.
//!
//! The bounded-piece likelihoods depend on the data only through one
//! sufficient statistic (mean offset from the lower bound for the
//! exponential, mean square for the zero-location normal), so every MLE
//! here reduces to a one-dimensional search in log-parameter space:
//! a bracket grown from a moment guess, Brent minimization, then a root
//! polish on the score.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dist::{
    ln_partial_integral, BoundedExponential, BoundedNormal, Dist, DistError, MixtureBoundedNormal,
    ParetoBaseline, Piece, PiecewiseMixture,
};
use crate::optim::{bracket_minimum, find_root, minimize};
use crate::rng::{self, purpose};
use crate::special::{ln_interval_mass, LN_SQRT_2PI};
use crate::stats::Neumaier;

#[derive(Debug, Error)]
pub enum FitError {
    #[error("no data to fit")]
    Empty,
    #[error("need at least {need} observations, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("observation {x} lies outside [{lower}, {upper})")]
    OutOfBounds { x: f64, lower: f64, upper: f64 },
    #[error("observation {0} is not positive")]
    NonPositive(f64),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("likelihood has no interior maximum: {0}")]
    NoInteriorOptimum(String),
    #[error("piece {index} on [{lower}, {upper}) holds no data")]
    EmptyPiece { index: usize, lower: f64, upper: f64 },
    #[error("{components} mixture components requested but the data has only {distinct} distinct values")]
    TooManyComponents { components: usize, distinct: usize },
    #[error("invalid fit configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// How the interior cut points of a piecewise fit are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutRule {
    /// Use these values.
    Explicit(Vec<f64>),
    /// Cut at these empirical quantiles of the data.
    Quantiles(Vec<f64>),
}

impl Default for CutRule {
    fn default() -> Self {
        CutRule::Quantiles(vec![0.8, 0.99])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceFamily {
    Exponential,
    Normal,
    NormalMixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub cuts: CutRule,
    /// One family per piece; empty means bounded exponential everywhere.
    pub families: Vec<PieceFamily>,
    /// Components of every normal-mixture piece.
    pub components: usize,
    /// EM stops once the log-likelihood gains less than this per observation.
    pub ll_tol: f64,
    /// EM also stops once no weight or log-scale moves by more than this.
    pub param_tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            cuts: CutRule::default(),
            families: Vec::new(),
            components: 2,
            ll_tol: 1e-10,
            param_tol: 1e-10,
            max_iter: 2000,
            restarts: 5,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), FitError> {
        if !(self.ll_tol > 0.0 && self.param_tol > 0.0) {
            return Err(FitError::Config("tolerances must be positive".into()));
        }
        if self.components == 0 {
            return Err(FitError::Config("mixture needs at least one component".into()));
        }
        if self.restarts == 0 || self.max_iter == 0 {
            return Err(FitError::Config("restarts and max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub distribution: Dist,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Observations per piece, `|S_i|`.
    pub piece_counts: Vec<usize>,
    /// Log-likelihood after every EM iteration (empty for closed-form fits).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log_likelihood_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pieces: Vec<FitReport>,
}

fn check_data(data: &[f64], lower: f64, upper: f64, need: usize) -> Result<(), FitError> {
    if data.is_empty() {
        return Err(FitError::Empty);
    }
    if data.len() < need {
        return Err(FitError::TooFewSamples { need, got: data.len() });
    }
    if let Some(&x) = data.iter().find(|&&x| !(x >= lower && x < upper)) {
        return Err(FitError::OutOfBounds { x, lower, upper });
    }
    if data.iter().all(|&x| x == data[0]) {
        return Err(FitError::Degenerate(format!("all {} observations equal {}", data.len(), data[0])));
    }
    Ok(())
}

fn mean_of(data: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut s = Neumaier::default();
    for &x in data {
        s.add(f(x));
    }
    s.total() / data.len() as f64
}

/// Counts `|S_i|` of observations in each interval `[γ_{i-1}, γ_i)`.
pub fn piece_counts(data: &[f64], cuts: &[f64]) -> Result<Vec<usize>, FitError> {
    if data.is_empty() {
        return Err(FitError::Empty);
    }
    if cuts.iter().any(|c| !(c.is_finite() && *c > 0.0)) || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FitError::Config(format!(
            "cut points must be finite, positive and strictly increasing: {cuts:?}"
        )));
    }
    let mut counts = vec![0usize; cuts.len() + 1];
    for &x in data {
        if !(0.0..f64::INFINITY).contains(&x) {
            return Err(FitError::OutOfBounds { x, lower: 0.0, upper: f64::INFINITY });
        }
        counts[cuts.partition_point(|&c| c <= x)] += 1;
    }
    Ok(counts)
}

/// `π̂_i = |S_i| / n`.
pub fn fit_piece_weights(data: &[f64], cuts: &[f64]) -> Result<Vec<f64>, FitError> {
    let counts = piece_counts(data, cuts)?;
    let n = data.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Rate MLE of an exponential on `[lower, lower + len)` from the mean
/// offset `m` of the data above `lower`.
pub(crate) fn exponential_mle(m: f64, len: f64) -> Result<f64, FitError> {
    if !(m > 0.0) {
        return Err(FitError::Degenerate("every observation sits on the lower bound".into()));
    }
    if len.is_infinite() {
        return Ok(1.0 / m);
    }
    if m >= 0.5 * len {
        return Err(FitError::NoInteriorOptimum(format!(
            "mean offset {m} is at least half the interval length {len}, \
             so the likelihood keeps rising as the rate drops to zero"
        )));
    }
    // per-observation negative log-likelihood in t = ln λ
    let objective = |t: f64| {
        let r = t.exp();
        r * m + ln_partial_integral(r, len)
    };
    let (lo, _, hi) = bracket_minimum(objective, -m.ln(), 1.0, 80).ok_or_else(|| {
        FitError::NoInteriorOptimum(format!("no bracket for the rate (mean offset {m}, length {len})"))
    })?;
    let (t, _) = minimize(objective, lo, hi, 1e-10, 300);
    let score = |t: f64| exponential_offset_mean(t.exp(), len) - m;
    let t = find_root(score, lo, hi, 1e-15, 300).unwrap_or(t);
    Ok(t.exp())
}

fn exponential_offset_mean(rate: f64, len: f64) -> f64 {
    use crate::dist::Univariate;
    BoundedExponential::with_any_rate(rate, 0.0, len).map(|d| d.mean()).unwrap_or(f64::NAN)
}

/// MLE of a bounded exponential on `[lower, upper)`.
pub fn fit_bounded_exponential(
    data: &[f64],
    lower: f64,
    upper: f64,
) -> Result<BoundedExponential, FitError> {
    check_data(data, lower, upper, 2)?;
    let m = mean_of(data, |x| x - lower);
    let rate = exponential_mle(m, upper - lower)?;
    Ok(BoundedExponential::new(rate, lower, upper)?)
}

/// `E[X²]` of a zero-location normal with scale `σ` truncated to `[lower, upper)`.
pub(crate) fn normal_second_moment(sigma: f64, lower: f64, upper: f64) -> f64 {
    let (a, b) = (lower / sigma, upper / sigma);
    let ln_mass = ln_interval_mass(a, b);
    let term = |z: f64| {
        if z == 0.0 || z.is_infinite() {
            0.0
        } else {
            z * (-0.5 * z * z - LN_SQRT_2PI - ln_mass).exp()
        }
    };
    sigma * sigma * (1.0 + term(a) - term(b))
}

/// Scale MLE of a zero-location normal on `[lower, upper)` from the mean
/// square `m2` of the data.
pub(crate) fn normal_mle(m2: f64, lower: f64, upper: f64) -> Result<f64, FitError> {
    if !(m2 > lower * lower) {
        return Err(FitError::Degenerate("every observation sits on the lower bound".into()));
    }
    if lower == 0.0 && upper.is_infinite() {
        return Ok(m2.sqrt());
    }
    if upper.is_finite() {
        // a flat density on the interval is the σ → ∞ limit
        let flat = (upper * upper + upper * lower + lower * lower) / 3.0;
        if m2 >= flat {
            return Err(FitError::NoInteriorOptimum(format!(
                "mean square {m2} is at least that of a flat density on [{lower}, {upper}) ({flat}), \
                 so the likelihood keeps rising as σ grows"
            )));
        }
    }
    // per-observation negative log-likelihood in s = ln σ, constants dropped
    let objective = |s: f64| {
        let sigma = s.exp();
        s + ln_interval_mass(lower / sigma, upper / sigma) + 0.5 * m2 / (sigma * sigma)
    };
    let (lo, _, hi) = bracket_minimum(objective, 0.5 * m2.ln(), 0.5, 120).ok_or_else(|| {
        FitError::NoInteriorOptimum(format!("no bracket for σ (mean square {m2} on [{lower}, {upper}))"))
    })?;
    let (s, _) = minimize(objective, lo, hi, 1e-10, 300);
    let score = |s: f64| m2 - normal_second_moment(s.exp(), lower, upper);
    let s = find_root(score, lo, hi, 1e-15, 300).unwrap_or(s);
    Ok(s.exp())
}

/// MLE of a zero-location bounded normal on `[lower, upper)`.
pub fn fit_bounded_normal(data: &[f64], lower: f64, upper: f64) -> Result<BoundedNormal, FitError> {
    check_data(data, lower, upper, 2)?;
    let m2 = mean_of(data, |x| x * x);
    let sigma = normal_mle(m2, lower, upper)?;
    Ok(BoundedNormal::new(sigma, lower, upper)?)
}

/// `Σ_i τ_ij ln f_j(x_i)` as a function of `σ_j`, constants dropped.
fn component_objective(sigma: f64, w: f64, s2: f64, lower: f64, upper: f64) -> f64 {
    -w * (sigma.ln() + ln_interval_mass(lower / sigma, upper / sigma)) - 0.5 * s2 / (sigma * sigma)
}

struct EmRun {
    weights: Vec<f64>,
    sigmas: Vec<f64>,
    log_likelihood: f64,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// E step: returns the log-likelihood and fills the responsibility sums
/// `W_j = Σ τ_ij` and `S2_j = Σ τ_ij x_i²`.
fn e_step(
    data: &[f64],
    lower: f64,
    upper: f64,
    weights: &[f64],
    sigmas: &[f64],
    w: &mut [f64],
    s2: &mut [f64],
) -> f64 {
    let m = weights.len();
    let (consts, halves): (Vec<f64>, Vec<f64>) = weights
        .iter()
        .zip(sigmas)
        .map(|(&p, &s)| {
            let c = if p > 0.0 {
                p.ln() - s.ln() - ln_interval_mass(lower / s, upper / s) - LN_SQRT_2PI
            } else {
                f64::NEG_INFINITY
            };
            (c, 0.5 / (s * s))
        })
        .unzip();
    let mut ll = Neumaier::default();
    let mut ws = vec![Neumaier::default(); m];
    let mut ss = vec![Neumaier::default(); m];
    let mut a = vec![0.0; m];
    for &x in data {
        let x2 = x * x;
        let mut top = f64::NEG_INFINITY;
        for j in 0..m {
            a[j] = consts[j] - x2 * halves[j];
            top = top.max(a[j]);
        }
        let mut total = 0.0;
        for aj in a.iter_mut() {
            *aj = (*aj - top).exp();
            total += *aj;
        }
        ll.add(top + total.ln());
        for j in 0..m {
            let tau = a[j] / total;
            ws[j].add(tau);
            ss[j].add(tau * x2);
        }
    }
    for j in 0..m {
        w[j] = ws[j].total();
        s2[j] = ss[j].total();
    }
    ll.total()
}

fn em_run(
    data: &[f64],
    lower: f64,
    upper: f64,
    mut weights: Vec<f64>,
    mut sigmas: Vec<f64>,
    config: &FitConfig,
) -> EmRun {
    let n = data.len() as f64;
    let m = weights.len();
    let mut w = vec![0.0; m];
    let mut s2 = vec![0.0; m];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut last_step = f64::INFINITY;
    loop {
        let ll = e_step(data, lower, upper, &weights, &sigmas, &mut w, &mut s2);
        trace.push(ll);
        if let [.., prev, cur] = trace[..] {
            if cur - prev < config.ll_tol * n || last_step < config.param_tol {
                converged = true;
                break;
            }
        }
        if iterations == config.max_iter {
            break;
        }
        iterations += 1;
        last_step = 0.0;
        for j in 0..m {
            let p = w[j] / n;
            last_step = last_step.max((p - weights[j]).abs());
            weights[j] = p;
            if !(w[j] > 0.0) {
                continue;
            }
            // keep the old σ unless the weighted MLE strictly helps
            if let Ok(cand) = normal_mle(s2[j] / w[j], lower, upper) {
                let old = component_objective(sigmas[j], w[j], s2[j], lower, upper);
                let new = component_objective(cand, w[j], s2[j], lower, upper);
                if new >= old {
                    last_step = last_step.max((cand / sigmas[j]).ln().abs());
                    sigmas[j] = cand;
                }
            }
        }
    }
    let log_likelihood = *trace.last().expect("at least one E step");
    EmRun { weights, sigmas, log_likelihood, trace, iterations, converged }
}

fn finish_mixture(
    run: EmRun,
    lower: f64,
    upper: f64,
    n: usize,
) -> Result<(MixtureBoundedNormal, FitReport), FitError> {
    let mut order: Vec<usize> = (0..run.sigmas.len()).collect();
    order.sort_by(|&a, &b| run.sigmas[a].total_cmp(&run.sigmas[b]));
    let total: f64 = run.weights.iter().sum();
    let weights: Vec<f64> = order.iter().map(|&j| run.weights[j] / total).collect();
    let sigmas: Vec<f64> = order.iter().map(|&j| run.sigmas[j]).collect();
    let mixture = MixtureBoundedNormal::new(weights, &sigmas, lower, upper)?;
    let report = FitReport {
        distribution: Dist::NormalMixture(mixture.clone()),
        log_likelihood: run.log_likelihood,
        iterations: run.iterations,
        converged: run.converged,
        piece_counts: vec![n],
        log_likelihood_trace: run.trace,
        pieces: Vec::new(),
    };
    Ok((mixture, report))
}

fn check_mixture_data(data: &[f64], lower: f64, upper: f64, m: usize) -> Result<(), FitError> {
    check_data(data, lower, upper, 2 * m.max(1))?;
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if m > sorted.len() {
        return Err(FitError::TooManyComponents { components: m, distinct: sorted.len() });
    }
    Ok(())
}

/// EM for an `m`-component mixture of zero-location normals on
/// `[lower, upper)`, best of `config.restarts` starts. Components come back
/// sorted by `σ`. Running out of iterations is reported through
/// `FitReport::converged`, not as an error.
pub fn fit_mixture_em(
    data: &[f64],
    lower: f64,
    upper: f64,
    m: usize,
    config: &FitConfig,
) -> Result<(MixtureBoundedNormal, FitReport), FitError> {
    config.validate()?;
    if m == 0 {
        return Err(FitError::Config("mixture needs at least one component".into()));
    }
    check_mixture_data(data, lower, upper, m)?;
    let rms = mean_of(data, |x| x * x).sqrt();
    let (lo, hi) = ((0.5 * rms).ln(), (2.0 * rms).ln());
    let mut best: Option<EmRun> = None;
    for restart in 0..config.restarts {
        let mut log_sigmas: Vec<f64> = if restart == 0 {
            if m == 1 {
                vec![rms.ln()]
            } else {
                (0..m).map(|j| lo + (hi - lo) * j as f64 / (m - 1) as f64).collect()
            }
        } else {
            let mut rng = rng::stream(config.seed, purpose::EM_RESTART, restart as u64);
            (0..m).map(|_| rng.gen_range(lo..hi)).collect()
        };
        log_sigmas.sort_by(f64::total_cmp);
        let sigmas = log_sigmas.into_iter().map(f64::exp).collect();
        let run = em_run(data, lower, upper, vec![1.0 / m as f64; m], sigmas, config);
        if best.as_ref().is_none_or(|b| run.log_likelihood > b.log_likelihood) {
            best = Some(run);
        }
    }
    finish_mixture(best.expect("at least one restart"), lower, upper, data.len())
}

/// EM from a given start, without restarts.
pub fn fit_mixture_em_from(
    data: &[f64],
    lower: f64,
    upper: f64,
    weights: &[f64],
    sigmas: &[f64],
    config: &FitConfig,
) -> Result<(MixtureBoundedNormal, FitReport), FitError> {
    config.validate()?;
    // validates the start
    MixtureBoundedNormal::new(weights.to_vec(), sigmas, lower, upper)?;
    check_mixture_data(data, lower, upper, weights.len())?;
    let run = em_run(data, lower, upper, weights.to_vec(), sigmas.to_vec(), config);
    finish_mixture(run, lower, upper, data.len())
}

/// Cut points for `data` under `rule`. Quantile cuts take the order
/// statistic `x_(⌈qn⌉)`.
pub fn resolve_cuts(data: &[f64], rule: &CutRule) -> Result<Vec<f64>, FitError> {
    let cuts = match rule {
        CutRule::Explicit(c) => c.clone(),
        CutRule::Quantiles(qs) => {
            if data.is_empty() {
                return Err(FitError::Empty);
            }
            if qs.iter().any(|q| !(*q > 0.0 && *q < 1.0)) || qs.windows(2).any(|w| w[0] >= w[1]) {
                return Err(FitError::Config(format!(
                    "cut quantiles must lie in (0, 1) and increase: {qs:?}"
                )));
            }
            let mut sorted = data.to_vec();
            sorted.sort_by(f64::total_cmp);
            let n = sorted.len();
            qs.iter()
                .map(|q| {
                    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
                    sorted[rank - 1]
                })
                .collect()
        }
    };
    if cuts.iter().any(|c| !(c.is_finite() && *c > 0.0)) || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FitError::Config(format!(
            "cut points must be finite, positive and strictly increasing: {cuts:?}"
        )));
    }
    Ok(cuts)
}

/// Fits one piece of family `family` on `[lower, upper)`.
pub fn fit_piece(
    data: &[f64],
    lower: f64,
    upper: f64,
    family: PieceFamily,
    config: &FitConfig,
) -> Result<(Piece, FitReport), FitError> {
    let (piece, ll, report) = match family {
        PieceFamily::Exponential => {
            let d = fit_bounded_exponential(data, lower, upper)?;
            let ll = d.log_likelihood(data);
            (Piece::Exponential(d), ll, None)
        }
        PieceFamily::Normal => {
            let d = fit_bounded_normal(data, lower, upper)?;
            let mut s = Neumaier::default();
            for &x in data {
                s.add(d.ln_pdf(x));
            }
            (Piece::Normal(d), s.total(), None)
        }
        PieceFamily::NormalMixture => {
            let (d, report) = fit_mixture_em(data, lower, upper, config.components, config)?;
            (Piece::NormalMixture(d), report.log_likelihood, Some(report))
        }
    };
    let report = report.unwrap_or_else(|| FitReport {
        distribution: Dist::from_piece(piece.clone()),
        log_likelihood: ll,
        iterations: 0,
        converged: true,
        piece_counts: vec![data.len()],
        log_likelihood_trace: Vec::new(),
        pieces: Vec::new(),
    });
    Ok((piece, report))
}

/// Full piecewise fit: cuts from the config, weights `|S_i|/n`, and each
/// piece fitted on its own interval's data by its family's MLE.
pub fn fit_piecewise(
    data: &[f64],
    config: &FitConfig,
) -> Result<(PiecewiseMixture, FitReport), FitError> {
    config.validate()?;
    let cuts = resolve_cuts(data, &config.cuts)?;
    let k = cuts.len() + 1;
    if data.len() < 10 * k {
        return Err(FitError::TooFewSamples { need: 10 * k, got: data.len() });
    }
    let families = if config.families.is_empty() {
        vec![PieceFamily::Exponential; k]
    } else if config.families.len() == k {
        config.families.clone()
    } else {
        return Err(FitError::Config(format!(
            "{} piece families given for {k} pieces",
            config.families.len()
        )));
    };
    let counts = piece_counts(data, &cuts)?;
    let bound = |i: usize| crate::dist::bound(&cuts, i);
    if let Some(i) = counts.iter().position(|&c| c == 0) {
        return Err(FitError::EmptyPiece { index: i + 1, lower: bound(i), upper: bound(i + 1) });
    }
    let weights = fit_piece_weights(data, &cuts)?;
    let mut per_piece: Vec<Vec<f64>> = counts.iter().map(|&c| Vec::with_capacity(c)).collect();
    for &x in data {
        per_piece[cuts.partition_point(|&c| c <= x)].push(x);
    }
    let mut pieces = Vec::with_capacity(k);
    let mut reports = Vec::with_capacity(k);
    let mut ll = Neumaier::default();
    for (i, subset) in per_piece.iter().enumerate() {
        let (piece, report) = fit_piece(subset, bound(i), bound(i + 1), families[i], config)?;
        ll.add(counts[i] as f64 * weights[i].ln());
        ll.add(report.log_likelihood);
        pieces.push(piece);
        reports.push(report);
    }
    let mixture = PiecewiseMixture::new(cuts, weights, pieces)?;
    let report = FitReport {
        distribution: Dist::Piecewise(mixture.clone()),
        log_likelihood: ll.total(),
        iterations: reports.iter().map(|r| r.iterations).sum(),
        converged: reports.iter().all(|r| r.converged),
        piece_counts: counts,
        log_likelihood_trace: Vec::new(),
        pieces: reports,
    };
    Ok((mixture, report))
}

/// Closed-form single-distribution baselines: exponential with `λ = 1/mean`
/// and Pareto with `x_m = min`, `a = n / Σ ln(X/x_m)`.
pub fn fit_single_baselines(data: &[f64]) -> Result<(BoundedExponential, ParetoBaseline), FitError> {
    if data.is_empty() {
        return Err(FitError::Empty);
    }
    if data.len() < 2 {
        return Err(FitError::TooFewSamples { need: 2, got: data.len() });
    }
    if let Some(&x) = data.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
        return Err(FitError::NonPositive(x));
    }
    let mean = mean_of(data, |x| x);
    let exponential = BoundedExponential::standard(1.0 / mean)?;
    let scale = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let log_sum = mean_of(data, |x| (x / scale).ln()) * data.len() as f64;
    if !(log_sum > 0.0) {
        return Err(FitError::Degenerate("all observations are equal".into()));
    }
    let pareto = ParetoBaseline::new(scale, data.len() as f64 / log_sum)?;
    Ok((exponential, pareto))
}

/// Exponential log-likelihood `ℓ(λ)` of `data` on `[lower, upper)`.
pub fn exponential_log_likelihood(data: &[f64], rate: f64, lower: f64, upper: f64) -> f64 {
    let m = mean_of(data, |x| x - lower);
    -(data.len() as f64) * (rate * m + ln_partial_integral(rate, upper - lower))
}

/// Zero-location normal log-likelihood `ℓ(σ)` of `data` on `[lower, upper)`.
pub fn normal_log_likelihood(data: &[f64], sigma: f64, lower: f64, upper: f64) -> f64 {
    let n = data.len() as f64;
    let m2 = mean_of(data, |x| x * x);
    -n * (sigma.ln() + LN_SQRT_2PI + ln_interval_mass(lower / sigma, upper / sigma))
        - 0.5 * n * m2 / (sigma * sigma)
}

/// Mixture log-likelihood of `data`.
pub fn mixture_log_likelihood(data: &[f64], mixture: &MixtureBoundedNormal) -> f64 {
    let m = mixture.weights().len();
    let (mut w, mut s2) = (vec![0.0; m], vec![0.0; m]);
    e_step(data, mixture.lower(), mixture.upper(), mixture.weights(), &mixture.sigmas(), &mut w, &mut s2)
}
