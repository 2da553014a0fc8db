//! Standard normal special functions with tail-accurate interval masses.
//!
//! Everything here works on the standardized variable `z`. Interval masses
//! `Φ(b) − Φ(a)` are evaluated through whichever tail keeps the two terms
//! small, and fall back to log space once the tails underflow.

use libm::erfc;

pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Standard normal density.
#[inline]
pub fn phi(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

/// Upper tail `Q(z) = 1 − Φ(z)`.
#[inline]
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Mills ratio `Q(z)/φ(z)` for large positive `z` (continued fraction).
fn mills_ratio(z: f64) -> f64 {
    // Lentz evaluation of 1/(z + 1/(z + 2/(z + 3/(z + ...))))
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..500 {
        let a = k as f64;
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    1.0 / f
}

/// `ln Q(z)`, finite for every finite `z`.
pub fn ln_norm_sf(z: f64) -> f64 {
    if z == f64::INFINITY {
        f64::NEG_INFINITY
    } else if z < 5.0 {
        norm_sf(z).ln()
    } else {
        -0.5 * z * z - LN_SQRT_2PI + mills_ratio(z).ln()
    }
}

/// `ln(Φ(b) − Φ(a))` for `a < b`, either end possibly infinite.
pub fn ln_interval_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        upper_tail_difference(a, b)
    } else if b <= 0.0 {
        upper_tail_difference(-b, -a)
    } else {
        // straddles zero: both tails are at most one half
        (1.0 - norm_sf(-a) - norm_sf(b)).ln()
    }
}

// ln(Q(a) − Q(b)) with 0 ≤ a < b
fn upper_tail_difference(a: f64, b: f64) -> f64 {
    let la = ln_norm_sf(a);
    let lb = ln_norm_sf(b);
    la + (-(lb - la).exp()).ln_1p()
}

/// `Φ(b) − Φ(a)` for `a < b`.
pub fn interval_mass(a: f64, b: f64) -> f64 {
    ln_interval_mass(a, b).exp()
}

/// Inverse of the standard normal CDF.
pub fn norm_ppf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.5 {
        lower_quantile(p)
    } else {
        -lower_quantile(1.0 - p)
    }
}

/// Inverse of the upper tail: `z` with `Q(z) = q`.
pub fn norm_isf(q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return f64::NEG_INFINITY;
    }
    if q <= 0.5 {
        -lower_quantile(q)
    } else {
        lower_quantile(1.0 - q)
    }
}

// Quantile for p ≤ 1/2: Acklam's rational approximation refined by Halley
// steps against the libm erfc.
fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let mut x = if p < 0.024_25 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let density = phi(x);
        if density == 0.0 || !density.is_finite() {
            break;
        }
        let u = (norm_cdf(x) - p) / density;
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// `z` with `ln Q(z) = lq`, usable far beyond the range where `Q` itself is
/// representable.
pub fn norm_isf_ln(lq: f64) -> f64 {
    if lq > -700.0 {
        let z = norm_isf(lq.exp());
        return polish_ln_sf(z, lq);
    }
    // asymptotic start: ln Q(z) ≈ −z²/2 − ln(z√2π)
    let mut z = (-2.0 * lq).sqrt();
    for _ in 0..4 {
        z = (-2.0 * (lq + LN_SQRT_2PI + z.ln())).sqrt();
    }
    polish_ln_sf(z, lq)
}

// Newton on ln Q(z) − lq; d/dz ln Q = −φ(z)/Q(z) = −1/mills(z).
fn polish_ln_sf(mut z: f64, lq: f64) -> f64 {
    if !z.is_finite() {
        return z;
    }
    for _ in 0..3 {
        let lz = ln_norm_sf(z);
        let inv_mills = (-0.5 * z * z - LN_SQRT_2PI - lz).exp();
        if !inv_mills.is_finite() || inv_mills == 0.0 {
            break;
        }
        let step = (lz - lq) / inv_mills;
        z += step;
        if step.abs() <= 1e-15 * z.abs().max(1.0) {
            break;
        }
    }
    z
}

/// Two-sided critical value `z_{α/2}`, the `1 − α/2` normal quantile.
pub fn z_two_sided(alpha: f64) -> f64 {
    norm_isf(alpha / 2.0)
}
