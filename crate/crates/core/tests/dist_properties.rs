mod common;

use common::*;
use proptest::prelude::*;
use pwaccel::dist::{
    likelihood_ratio, BoundedExponential, BoundedNormal, Dist, MixtureBoundedNormal, Piece, PiecewiseMixture,
    Univariate, WeightShift,
};
use pwaccel::special::phi;

#[test]
fn suite_at_reduced_sample_sizes() {
    let results = distribution_suite(20_000, 200_000);
    if let Err(failed) = collect(results) {
        panic!("{failed}");
    }
}

#[test]
fn piecewise_density_example() {
    let pw: Dist = PiecewiseMixture::new(
        vec![1.0],
        vec![0.5, 0.5],
        vec![exp_piece(1.0, 0.0, 1.0), exp_piece(1.0, 1.0, f64::INFINITY)],
    )
    .unwrap()
    .into();
    let expected = 0.5 * (-0.5f64).exp() / (1.0 - (-1.0f64).exp());
    assert!((pw.pdf(0.5) - expected).abs() < 1e-12);
    assert!((total_mass(&pw) - 1.0).abs() < 1e-10);
    assert_eq!(pw.cdf(1.0), 0.5);
    assert_eq!(pw.inverse_cdf(0.5).unwrap(), 1.0);
    assert_eq!(pw.pdf(-1.0), 0.0);
}

#[test]
fn tilted_bounded_exponential_normalizer() {
    let d: Dist = BoundedExponential::new(1.0, 1.0, 2.0).unwrap().into();
    let t: Dist = d.tilt(vec![0.3]).unwrap().into();
    let z = integrate(&|x| (-0.7 * x).exp(), 1.0, 2.0);
    for x in [1.0, 1.25, 1.5, 1.99] {
        assert!((t.pdf(x) - (-0.7 * x).exp() / z).abs() < 1e-10 * t.pdf(x));
    }
    assert!((total_mass(&t) - 1.0).abs() < 1e-10);
}

#[test]
fn tilted_normal_has_shifted_location() {
    let (sigma, theta) = (1.5, 0.8);
    let d: Dist = BoundedNormal::new(sigma, 0.5, 3.0).unwrap().into();
    let t: Dist = d.tilt(vec![theta]).unwrap().into();
    let mu = theta * sigma * sigma;
    let ratio = |x: f64| t.pdf(x) / phi((x - mu) / sigma);
    let r0 = ratio(0.5);
    for x in [0.7, 1.2, 2.0, 2.9] {
        assert!((ratio(x) / r0 - 1.0).abs() < 1e-10);
    }
    let first_moment = expect(&t, &|x| x);
    assert!((first_moment - t.mean()).abs() < 1e-9);
}

#[test]
fn moment_generating_weights_reproduce_a_global_tilt() {
    let theta = 0.6;
    let single: Dist = BoundedExponential::standard(1.0).unwrap().into();
    let global: Dist = single.tilt(vec![theta]).unwrap().into();
    let pw = exp1_piecewise().tilt_with(vec![theta; 3], WeightShift::MomentGenerating).unwrap();
    let pw: Dist = pw.into();
    for x in [0.1, 1.0, LN5 + 0.1, 3.0, 6.0] {
        assert!((pw.pdf(x) - global.pdf(x)).abs() < 1e-12 * global.pdf(x), "x {x}");
    }
}

#[test]
fn mixture_quantile_round_trip_is_tight() {
    let d: Dist = MixtureBoundedNormal::new(vec![0.5, 0.3, 0.2], &[0.1, 0.7, 3.0], 0.05, 8.0).unwrap().into();
    for i in 1..10_000 {
        let y = i as f64 / 10_000.0;
        assert!((d.cdf(d.quantile(y)) - y).abs() < 1e-10);
    }
}

fn bounded_piece() -> impl Strategy<Value = Piece> {
    (0.01f64..5.0, 0u8..3).prop_map(|(p, kind)| match kind {
        0 => Piece::Exponential(BoundedExponential::new(p, 0.0, 1.0).unwrap()),
        1 => Piece::Normal(BoundedNormal::new(p, 0.0, 1.0).unwrap()),
        _ => Piece::NormalMixture(MixtureBoundedNormal::new(vec![0.5, 0.5], &[p, 2.0 * p], 0.0, 1.0).unwrap()),
    })
}

fn random_piecewise() -> impl Strategy<Value = PiecewiseMixture> {
    (proptest::collection::vec(0.05f64..1.0, 3), 0.01f64..2.0, 0.5f64..5.0, 0.1f64..5.0, bounded_piece()).prop_map(
        |(raw, gap, second, tail_rate, first)| {
            let total: f64 = raw.iter().sum();
            let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
            let c1 = 1.0;
            let c2 = c1 + gap;
            let first = match first {
                Piece::Exponential(e) => exp_piece(e.rate(), 0.0, c1),
                other => other,
            };
            PiecewiseMixture::new(
                vec![c1, c2],
                weights,
                vec![first, exp_piece(second, c1, c2), exp_piece(tail_rate, c2, f64::INFINITY)],
            )
            .unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quantile_inverts_cdf(pw in random_piecewise(), y in 0.0f64..0.999_999) {
        let d: Dist = pw.into();
        let x = d.inverse_cdf(y).unwrap();
        prop_assert!((d.cdf(x) - y).abs() <= 1e-9);
    }

    #[test]
    fn cdf_is_monotone_and_density_nonnegative(pw in random_piecewise(), a in 0.0f64..6.0, b in 0.0f64..6.0) {
        let d: Dist = pw.into();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.cdf(lo) <= d.cdf(hi));
        prop_assert!(d.pdf(lo) >= 0.0 && d.pdf(hi) >= 0.0);
        prop_assert!((0.0..=1.0).contains(&d.cdf(hi)));
    }

    #[test]
    fn cdf_at_cuts_is_cumulative_weight(pw in random_piecewise()) {
        let mut acc = 0.0;
        let d: Dist = pw.clone().into();
        for (i, &c) in pw.cuts().iter().enumerate() {
            acc += pw.weights()[i];
            prop_assert!((d.cdf(c) - acc).abs() <= 1e-12);
        }
    }

    #[test]
    fn identity_change_of_measure_has_unit_weight(pw in random_piecewise(), y in 0.0f64..0.999) {
        let d: Dist = pw.into();
        let x = d.quantile(y);
        prop_assert_eq!(likelihood_ratio(&d, &d, x).unwrap(), 1.0);
    }

    #[test]
    fn tilting_keeps_a_density(pw in random_piecewise(), t0 in -4.0f64..4.0, t1 in -4.0f64..4.0, t2 in 0.0f64..0.09) {
        let tail_rate = match &pw.pieces()[2] { Piece::Exponential(e) => e.rate(), _ => unreachable!() };
        let theta = vec![t0, t1, t2 * tail_rate * 10.0];
        let t: Dist = Dist::from(pw).tilt(theta).unwrap().into();
        prop_assert!((total_mass(&t) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn json_round_trip_is_exact(pw in random_piecewise(), t0 in -2.0f64..2.0) {
        let d: Dist = pw.into();
        let tilted: Dist = d.tilt(vec![t0, 0.0, 0.0]).unwrap().into();
        for x in [d, tilted] {
            prop_assert_eq!(Dist::from_json(&x.to_json()).unwrap(), x);
        }
    }
}
