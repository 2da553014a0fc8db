#![allow(dead_code)]

use pwaccel::accel_eval::Problem;
use pwaccel::dist::{
    likelihood_ratio, BoundedExponential, BoundedNormal, Dist, MixtureBoundedNormal, ParetoBaseline, Piece,
    PiecewiseMixture, Univariate, WeightShift,
};
use pwaccel::rng;

pub const LN5: f64 = 1.6094379124341003;
pub const LN100: f64 = 4.605170185988092;

/// Adaptive Simpson on `[a, b]`, with `x = a + t/(1 − t)` when `b = ∞`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b.is_infinite() {
        let g = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            f(a + t / s) / (s * s)
        };
        return integrate_finite(&g, 0.0, 1.0);
    }
    integrate_finite(f, a, b)
}

fn integrate_finite(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    // a fixed pre-split keeps narrow peaks from being stepped over
    let parts = 64;
    let h = (b - a) / parts as f64;
    (0..parts)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, if i + 1 == parts { b } else { a + (i + 1) as f64 * h });
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson(f, lo, hi, fa, fm, fb, whole, 1e-14, 48)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || !delta.is_finite() || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Support bounds plus every point where the density may jump.
pub fn breakpoints(d: &Dist) -> Vec<f64> {
    let (lo, hi) = d.support();
    let mut pts = vec![lo];
    match d {
        Dist::Piecewise(pw) => pts.extend_from_slice(pw.cuts()),
        Dist::Tilted(t) => return breakpoints(t.realized()),
        _ => {}
    }
    pts.push(hi);
    pts
}

/// `∫ g(x) f(x) dx` over the support of `d`, split at its cut points.
pub fn expect(d: &Dist, g: &dyn Fn(f64) -> f64) -> f64 {
    let pts = breakpoints(d);
    pts.windows(2).map(|w| integrate(&|x| g(x) * d.pdf(x), w[0], w[1])).sum()
}

pub fn total_mass(d: &Dist) -> f64 {
    expect(d, &|_| 1.0)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous cdf.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

pub fn exp_piece(rate: f64, lower: f64, upper: f64) -> Piece {
    Piece::Exponential(BoundedExponential::new(rate, lower, upper).unwrap())
}

/// `Exp(1)` written as a three-piece exponential mixture cut at its 0.8 and
/// 0.99 quantiles.
pub fn exp1_piecewise() -> Dist {
    PiecewiseMixture::new(
        vec![LN5, LN100],
        vec![0.8, 0.19, 0.01],
        vec![exp_piece(1.0, 0.0, LN5), exp_piece(1.0, LN5, LN100), exp_piece(1.0, LN100, f64::INFINITY)],
    )
    .unwrap()
    .into()
}

pub fn exp_tail_problem(piecewise: bool) -> Problem {
    let dist = if piecewise { exp1_piecewise() } else { BoundedExponential::standard(1.0).unwrap().into() };
    Problem::Tail { dist, threshold: 4.0 }
}

/// A three-piece law like a fitted `TTC⁻¹` model: normal-mixture body,
/// normal middle, exponential tail.
pub fn three_piece() -> PiecewiseMixture {
    let body = MixtureBoundedNormal::new(vec![0.6, 0.4], &[0.05, 0.12], 0.0, 0.2).unwrap();
    PiecewiseMixture::new(
        vec![0.2, 0.5],
        vec![0.7, 0.2, 0.1],
        vec![
            Piece::NormalMixture(body),
            Piece::Normal(BoundedNormal::new(0.3, 0.2, 0.5).unwrap()),
            exp_piece(8.0, 0.5, f64::INFINITY),
        ],
    )
    .unwrap()
}

/// One representative of every distribution kind, tilted ones included.
pub fn zoo() -> Vec<(&'static str, Dist)> {
    let pw: Dist = three_piece().into();
    let exp_pw: Dist = PiecewiseMixture::new(
        vec![0.02, 0.1],
        vec![0.05, 0.55, 0.4],
        vec![exp_piece(1.0, 0.0, 0.02), exp_piece(5.0, 0.02, 0.1), exp_piece(10.0, 0.1, f64::INFINITY)],
    )
    .unwrap()
    .into();
    let mixture: Dist = MixtureBoundedNormal::new(vec![0.6, 0.4], &[0.5, 2.0], 0.0, f64::INFINITY).unwrap().into();
    vec![
        ("exponential", BoundedExponential::standard(2.0).unwrap().into()),
        ("bounded exponential", BoundedExponential::new(3.0, 1.0, 2.0).unwrap().into()),
        ("half normal", BoundedNormal::new(1.0, 0.0, f64::INFINITY).unwrap().into()),
        ("bounded normal", BoundedNormal::new(1.5, 0.5, 3.0).unwrap().into()),
        ("normal mixture", mixture.clone()),
        ("bounded normal mixture", MixtureBoundedNormal::new(vec![0.3, 0.7], &[0.2, 1.0], 0.1, 2.5).unwrap().into()),
        ("piecewise", pw.clone()),
        ("piecewise exponential", exp_pw.clone()),
        ("pareto", ParetoBaseline::new(1.0, 2.5).unwrap().into()),
        ("tilted bounded exponential", BoundedExponential::new(1.0, 1.0, 2.0).unwrap().into_tilted(0.3)),
        ("tilted bounded exponential, rising", BoundedExponential::new(1.0, 1.0, 2.0).unwrap().into_tilted(2.5)),
        ("tilted half normal", BoundedNormal::new(1.0, 0.0, f64::INFINITY).unwrap().into_tilted(1.2)),
        ("tilted normal mixture", mixture.tilt(vec![0.4]).unwrap().into()),
        ("tilted piecewise", pw.tilt(vec![-3.0, 4.0, 3.0]).unwrap().into()),
        (
            "tilted piecewise, explicit weights",
            pw.tilt_with(vec![5.0, 2.0, 6.0], WeightShift::Explicit(vec![0.3, 0.3, 0.4])).unwrap().into(),
        ),
        ("tilted piecewise, mgf weights", exp_pw.tilt_with(vec![4.0; 3], WeightShift::MomentGenerating).unwrap().into()),
    ]
}

trait IntoTilted {
    fn into_tilted(self, theta: f64) -> Dist;
}

impl<T: Into<Dist>> IntoTilted for T {
    fn into_tilted(self, theta: f64) -> Dist {
        self.into().tilt(vec![theta]).unwrap().into()
    }
}

/// Pairs of (original, accelerated) laws for likelihood-ratio checks.
pub fn measure_pairs() -> Vec<(&'static str, Dist, Dist)> {
    let pw: Dist = three_piece().into();
    let exp1: Dist = BoundedExponential::standard(1.0).unwrap().into();
    let half: Dist = BoundedNormal::new(1.0, 0.0, f64::INFINITY).unwrap().into();
    vec![
        ("exponential", exp1.clone(), BoundedExponential::standard(0.5).unwrap().into()),
        ("tilted exponential", exp1.clone(), exp1.tilt(vec![0.6]).unwrap().into()),
        ("tilted half normal", half.clone(), half.tilt(vec![1.0]).unwrap().into()),
        (
            "tilted piecewise",
            pw.clone(),
            pw.tilt_with(vec![-2.0, 3.0, 4.0], WeightShift::Explicit(vec![0.4, 0.3, 0.3])).unwrap().into(),
        ),
        ("piecewise exponential tail", exp1_piecewise(), exp1_piecewise().tilt(vec![0.5, 0.7, 0.75]).unwrap().into()),
    ]
}

/// Mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

pub fn sample(d: &Dist, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, 100, 0);
    d.sample(&mut rng, n)
}

/// Checks a suite of named outcomes; `Err` lists the failures.
pub fn collect(results: Vec<(String, bool)>) -> Result<usize, String> {
    let failed: Vec<_> = results.iter().filter(|(_, ok)| !ok).map(|(m, _)| m.clone()).collect();
    if failed.is_empty() {
        Ok(results.len())
    } else {
        Err(failed.join("; "))
    }
}

/// Normalization, quantile round trip, piecewise cumulative weights at
/// cuts, KS sampling at `n_ks` draws and the weight law at `n_lr` draws.
pub fn distribution_suite(n_ks: usize, n_lr: usize) -> Vec<(String, bool)> {
    let mut out = Vec::new();
    for (name, d) in zoo() {
        let mass = total_mass(&d);
        out.push((format!("{name}: mass {mass}"), (mass - 1.0).abs() <= 1e-8));
        let worst = (1..2000)
            .map(|i| {
                let y = i as f64 / 2000.0;
                (d.cdf(d.inverse_cdf(y).unwrap()) - y).abs()
            })
            .fold(0.0, f64::max);
        out.push((format!("{name}: round trip error {worst:e}"), worst <= 1e-9));
        let realized = match &d {
            Dist::Tilted(t) => t.realized().clone(),
            other => other.clone(),
        };
        if let Dist::Piecewise(pw) = &realized {
            for (i, &c) in pw.cuts().iter().enumerate() {
                let below = d.cdf(c.next_down());
                let cum: f64 = pw.weights()[..=i].iter().sum();
                out.push((format!("{name}: cdf below cut {c} is {below}, weights give {cum}"), (below - cum).abs() <= 1e-9));
            }
        }
        let mut xs = sample(&d, n_ks, 11);
        let ks = ks_statistic(&mut xs, |x| d.cdf(x));
        out.push((format!("{name}: KS {ks:.5}"), ks < ks_critical_1pct(n_ks)));
    }
    for (name, original, accelerated) in measure_pairs() {
        let xs = sample(&accelerated, n_lr, 12);
        let w: Vec<f64> = xs.iter().map(|&x| likelihood_ratio(&original, &accelerated, x).unwrap()).collect();
        let (m, se) = mean_se(&w);
        out.push((format!("{name}: mean weight {m:.5} (se {se:.5})"), (m - 1.0).abs() <= 3.0 * se));
    }
    out
}

/// Bootstrap standard errors of `fit` (a parameter vector) over
/// `resamples` resamples of `data`.
pub fn bootstrap_se(data: &[f64], resamples: usize, fit: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
    use rand::Rng;
    let n = data.len();
    let mut buf = vec![0.0; n];
    let fits: Vec<Vec<f64>> = (0..resamples)
        .map(|b| {
            let mut rng = rng::stream(2024, rng::purpose::BOOTSTRAP, b as u64);
            for slot in buf.iter_mut() {
                *slot = data[rng.gen_range(0..n)];
            }
            fit(&buf)
        })
        .collect();
    (0..fits[0].len())
        .map(|j| {
            let col: Vec<f64> = fits.iter().map(|f| f[j]).collect();
            mean_se(&col).1 * (resamples as f64).sqrt()
        })
        .collect()
}

fn recovery(name: &str, truth: &[f64], estimate: &[f64], se: &[f64], out: &mut Vec<(String, bool)>) {
    for j in 0..truth.len() {
        let z = (estimate[j] - truth[j]) / se[j];
        out.push((
            format!("{name} parameter {j}: {:.5} vs {} (bootstrap se {:.2e}, z {z:.2})", estimate[j], truth[j], se[j]),
            z.abs() <= 3.0,
        ));
    }
}

/// Parameter recovery within 3 bootstrap standard errors for every kind,
/// EM ascent, and exact piece weights.
pub fn fitting_suite(n: usize, resamples: usize) -> Vec<(String, bool)> {
    use pwaccel::fitting::*;
    let mut out = Vec::new();
    let draw = |d: Dist, seed: u64| sample(&d, n, seed);

    type Fit = Box<dyn Fn(&[f64]) -> Vec<f64>>;
    let cases: Vec<(&str, Dist, Fit, Vec<f64>)> = vec![
        (
            "exponential",
            BoundedExponential::standard(2.0).unwrap().into(),
            Box::new(|x| vec![fit_bounded_exponential(x, 0.0, f64::INFINITY).unwrap().rate()]),
            vec![2.0],
        ),
        (
            "bounded exponential",
            BoundedExponential::new(3.0, 1.0, 2.0).unwrap().into(),
            Box::new(|x| vec![fit_bounded_exponential(x, 1.0, 2.0).unwrap().rate()]),
            vec![3.0],
        ),
        (
            "half normal",
            BoundedNormal::new(1.0, 0.0, f64::INFINITY).unwrap().into(),
            Box::new(|x| vec![fit_bounded_normal(x, 0.0, f64::INFINITY).unwrap().sigma()]),
            vec![1.0],
        ),
        (
            "bounded normal",
            BoundedNormal::new(1.5, 0.5, 3.0).unwrap().into(),
            Box::new(|x| vec![fit_bounded_normal(x, 0.5, 3.0).unwrap().sigma()]),
            vec![1.5],
        ),
        (
            "pareto",
            ParetoBaseline::new(1.0, 2.5).unwrap().into(),
            Box::new(|x| vec![fit_single_baselines(x).unwrap().1.shape()]),
            vec![2.5],
        ),
    ];
    for (i, (name, d, fit, truth)) in cases.into_iter().enumerate() {
        let data = draw(d, 40 + i as u64);
        let est = fit(&data);
        let se = bootstrap_se(&data, resamples, &*fit);
        recovery(name, &truth, &est, &se, &mut out);
    }

    // mixture: bootstrap refits start from the point estimate
    let truth: Dist = MixtureBoundedNormal::new(vec![0.6, 0.4], &[0.5, 2.0], 0.0, f64::INFINITY).unwrap().into();
    let data = draw(truth, 50);
    let cfg = FitConfig::default();
    let (fitted, report) = fit_mixture_em(&data, 0.0, f64::INFINITY, 2, &cfg).unwrap();
    let est = vec![fitted.weights()[0], fitted.sigmas()[0], fitted.sigmas()[1]];
    let start = (fitted.weights().to_vec(), fitted.sigmas());
    let refit = |x: &[f64]| {
        let (m, _) = fit_mixture_em_from(x, 0.0, f64::INFINITY, &start.0, &start.1, &cfg).unwrap();
        vec![m.weights()[0], m.sigmas()[0], m.sigmas()[1]]
    };
    let se = bootstrap_se(&data, resamples, &refit);
    recovery("normal mixture", &[0.6, 0.5, 2.0], &est, &se, &mut out);
    let drops = report.log_likelihood_trace.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    out.push((
        format!("EM ascent over {} iterations: largest drop {drops:e}", report.log_likelihood_trace.len()),
        drops <= 1e-10,
    ));

    // piecewise: weights are exact counts and are recovered
    let pw = three_piece();
    let data = draw(pw.clone().into(), 60);
    let config = FitConfig {
        cuts: CutRule::Explicit(vec![0.2, 0.5]),
        families: vec![PieceFamily::NormalMixture, PieceFamily::Normal, PieceFamily::Exponential],
        ..FitConfig::default()
    };
    let (fitted, _) = fit_piecewise(&data, &config).unwrap();
    let counts = piece_counts(&data, &[0.2, 0.5]).unwrap();
    let exact = fitted.weights().iter().zip(&counts).all(|(w, &c)| *w == c as f64 / n as f64);
    out.push((format!("piece weights equal counts / n: {:?}", fitted.weights()), exact));
    let weights_of = |x: &[f64]| fit_piece_weights(x, &[0.2, 0.5]).unwrap();
    let se = bootstrap_se(&data, resamples, &weights_of);
    recovery("piece weights", &[0.7, 0.2, 0.1], fitted.weights(), &se, &mut out);
    out
}

/// 100 encounters drawn from the common preset.
pub fn probe_events() -> Vec<pwaccel::scenario::LaneChangeEvent> {
    use pwaccel::scenario::{sample_event, synthetic_model};
    let model = synthetic_model("desk-common", 0).unwrap();
    let mut rng = rng::stream(77, 100, 0);
    (0..100).map(|_| sample_event(&model, &mut rng)).collect()
}

/// Step halving, crash monotonicity in the initial range and determinism.
pub fn simulator_suite() -> Vec<(String, bool)> {
    use pwaccel::scenario::{simulate, EgoConfig, LaneChangeEvent};
    let ego = EgoConfig::default();
    let mut out = Vec::new();

    let events = probe_events();
    let (mut worst, mut flips) = (0.0f64, 0);
    for e in &events {
        let (a, b) = (simulate(e, &ego), simulate(e, &ego.halved()));
        flips += usize::from(a.crashed != b.crashed);
        worst = worst.max((a.min_range - b.min_range).abs());
    }
    let crashes = events.iter().filter(|e| simulate(e, &ego).crashed).count();
    out.push((
        format!("step halving on {} events ({crashes} crashes): largest min_range change {worst:.2e} m, {flips} outcome flips", events.len()),
        worst < 0.05 && flips == 0,
    ));

    // at a fixed closing speed a shorter initial range can only be worse
    let ranges: Vec<f64> = (1..=300).map(|i| 0.5 * i as f64).collect();
    let mut violations = 0;
    let mut grid = 0;
    for v_l in [8.0, 20.0, 32.0] {
        for closing in [2.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0] {
            let crashed: Vec<bool> = ranges
                .iter()
                .map(|&r| simulate(&LaneChangeEvent { v_l, r_l: r, ttc_l: r / closing }, &ego).crashed)
                .collect();
            violations += crashed.windows(2).filter(|w| w[1] && !w[0]).count();
            grid += crashed.len();
        }
    }
    out.push((format!("crash monotone in R_L at fixed closing speed: {violations} violations on {grid} grid points"), violations == 0));

    // at a fixed TTC the closing speed grows with R_L, so the direction flips
    let mut violations = 0;
    for v_l in [8.0, 20.0, 32.0] {
        for ttc in [0.3, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let crashed: Vec<bool> =
                ranges.iter().map(|&r| simulate(&LaneChangeEvent { v_l, r_l: r, ttc_l: ttc }, &ego).crashed).collect();
            violations += crashed.windows(2).filter(|w| w[0] && !w[1]).count();
        }
    }
    out.push((format!("crash monotone (increasing) in R_L at fixed TTC: {violations} violations"), violations == 0));

    let repeat_equal = events.iter().all(|e| {
        let (a, b) = (simulate(e, &ego), simulate(e, &ego));
        a.min_range.to_bits() == b.min_range.to_bits()
            && a.time.to_bits() == b.time.to_bits()
            && a.peak_required_decel.to_bits() == b.peak_required_decel.to_bits()
            && a == b
    });
    out.push(("repeated runs are bit-identical".into(), repeat_equal));
    let sane = events.iter().all(|e| {
        let o = simulate(e, &ego);
        o.min_range <= e.r_l && (o.crashed == (o.min_range <= 0.0))
    });
    out.push(("min_range ≤ R_L and crashed ⟺ min_range ≤ 0".into(), sane));
    out
}
