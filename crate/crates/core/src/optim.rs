//! One-dimensional root finding and minimization.

/// Brent's root finder on a bracket `[a, b]` with `f(a)` and `f(b)` of
/// opposite sign (or one of them zero). Bisection safeguarded by secant and
/// inverse quadratic steps.
///
/// Returns `None` when the bracket does not contain a sign change.
pub fn find_root<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Some(b)
}

/// Brent's derivative-free minimizer on `[a, b]`. Returns `(x, f(x))`.
pub fn minimize<F>(mut f: F, a: f64, b: f64, rel_tol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    let rel_tol = rel_tol.max(2.0 * f64::EPSILON);
    let abs_tol = 1e-300;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = rel_tol * x.abs() + abs_tol;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if !(p.abs() >= (0.5 * q * etemp).abs() || p <= q * (a - x) || p >= q * (b - x)) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Grows a bracket `(lo, mid, hi)` around a minimum of `f`, starting at
/// `x0` with initial half-width `step`, expanding geometrically.
///
/// Returns `None` when `f` keeps decreasing toward one side for
/// `max_expansions` doublings (no interior minimum).
pub fn bracket_minimum<F>(
    mut f: F,
    x0: f64,
    step: f64,
    max_expansions: usize,
) -> Option<(f64, f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let mut lo = x0 - step;
    let mut hi = x0 + step;
    let mut mid = x0;
    let mut f_lo = f(lo);
    let mut f_mid = f(mid);
    let mut f_hi = f(hi);
    let mut width = step;
    for _ in 0..max_expansions {
        if f_mid <= f_lo && f_mid <= f_hi {
            return Some((lo, mid, hi));
        }
        width *= 2.0;
        if f_lo < f_hi {
            hi = mid;
            f_hi = f_mid;
            mid = lo;
            f_mid = f_lo;
            lo = mid - width;
            f_lo = f(lo);
        } else {
            lo = mid;
            f_lo = f_mid;
            mid = hi;
            f_mid = f_hi;
            hi = mid + width;
            f_hi = f(hi);
        }
        if !f_lo.is_finite() && !f_hi.is_finite() {
            return None;
        }
    }
    None
}
