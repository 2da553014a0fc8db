//! Running sums for Monte Carlo estimators and the relative half-width of
//! their confidence intervals.

use serde::{Deserialize, Serialize};

use crate::special::z_two_sided;

/// Compensated (Neumaier) summation.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neumaier {
    sum: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.c
    }
}

/// Count, sum and sum of squares of estimator terms.
#[derive(Debug, Default, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    n: u64,
    sum: Neumaier,
    sum_sq: Neumaier,
}

impl RunningStats {
    pub fn push(&mut self, term: f64) {
        self.n += 1;
        self.sum.add(term);
        self.sum_sq.add(term * term);
    }

    pub fn from_terms(terms: &[f64]) -> Self {
        let mut s = Self::default();
        for &t in terms {
            s.push(t);
        }
        s
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum.total() / self.n as f64
        }
    }

    /// Variance with divisor `n`; for 0/1 terms this is `p̂(1 − p̂)`.
    pub fn variance(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let m = self.mean();
        (self.sum_sq.total() / self.n as f64 - m * m).max(0.0)
    }

    /// Standard error of the mean, `sqrt(var / n)`.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// `z_{α/2} · sd / (√N · P̂)`; `+∞` while `P̂ = 0` or `N < 2`.
pub fn relative_half_width(stats: &RunningStats, alpha: f64) -> f64 {
    let p = stats.mean();
    if stats.count() < 2 || !(p > 0.0) {
        return f64::INFINITY;
    }
    z_two_sided(alpha) * stats.std_error() / p
}
