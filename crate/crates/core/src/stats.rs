//! Streaming moment accumulators.

use serde::Serialize;

/// Welford accumulator that also keeps the raw sum of squares, so the
/// second moment can be obtained along two independent routes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    sum_sq: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
        self.sum_sq += x * x;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Variance with denominator `n`.
    pub fn population_variance(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.m2 / self.n as f64
        }
    }

    /// Variance with denominator `n - 1`.
    pub fn sample_variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// `Σx² / n`, accumulated directly rather than from the centred moments.
    pub fn raw_second_moment(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.sum_sq / self.n as f64
        }
    }

    /// Standard error of the mean, `s / sqrt(n)`.
    pub fn standard_error(&self) -> f64 {
        (self.sample_variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean(),
            se: self.standard_error(),
            n: self.n,
        }
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: u64,
}

impl Estimate {
    /// `|mean| / se`.
    pub fn z(&self) -> f64 {
        self.mean.abs() / self.se
    }

    pub fn within_band(&self, multiple: f64) -> bool {
        self.mean.abs() <= multiple * self.se
    }

    pub fn beyond_band(&self, multiple: f64) -> bool {
        self.mean.abs() > multiple * self.se
    }
}
