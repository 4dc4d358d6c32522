//! Order-fixed summary statistics for per-replication volumes.

use serde::{Deserialize, Serialize};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const PAIRWISE_BLOCK: usize = 32;

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        xs.iter().sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

fn pairwise_map(xs: &[f64], f: impl Fn(f64) -> f64 + Copy) -> f64 {
    if xs.len() <= PAIRWISE_BLOCK {
        xs.iter().map(|&x| f(x)).sum()
    } else {
        let mid = xs.len() / 2;
        pairwise_map(&xs[..mid], f) + pairwise_map(&xs[mid..], f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    /// Bessel-corrected.
    pub variance: f64,
    /// Mean of the squares.
    pub second_moment: f64,
    /// Sample variance of the squares, Bessel-corrected.
    pub second_moment_variance: f64,
    /// Central fourth moment, `(1/N) Σ (x - mean)^4`.
    pub fourth_central: f64,
}

impl SampleMoments {
    pub fn from_slice(xs: &[f64]) -> Self {
        let count = xs.len();
        assert!(count >= 2, "need at least two samples");
        let nf = count as f64;
        let mean = pairwise_sum(xs) / nf;
        let ss = pairwise_map(xs, |x| (x - mean) * (x - mean));
        let m4 = pairwise_map(xs, |x| (x - mean).powi(4)) / nf;
        let second_moment = pairwise_map(xs, |x| x * x) / nf;
        let sq_var = pairwise_map(xs, |x| (x * x - second_moment).powi(2)) / (nf - 1.0);
        SampleMoments {
            count,
            mean,
            variance: ss / (nf - 1.0),
            second_moment,
            second_moment_variance: sq_var,
            fourth_central: m4,
        }
    }

    pub fn mean_std_error(&self) -> f64 {
        (self.variance / self.count as f64).sqrt()
    }

    pub fn second_moment_std_error(&self) -> f64 {
        (self.second_moment_variance / self.count as f64).sqrt()
    }

    /// Asymptotic standard error of the sample variance, `√((μ₄ - σ⁴)/N)`.
    pub fn variance_std_error(&self) -> f64 {
        let s2 = self.variance;
        ((self.fourth_central - s2 * s2).max(0.0) / self.count as f64).sqrt()
    }
}
