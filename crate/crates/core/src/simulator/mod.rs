//! Monte Carlo simulation of the zero cell inside a truncation ball.
//!
//! Only hyperplanes at distance `t ≤ R` can meet `B_R`, so sampling those
//! gives `Z_0 ∩ B_R` exactly in law. The remaining error `V(Z_0) - V(Z_0 ∩ B_R)`
//! is bounded analytically by [`truncation_bias`].

pub mod geometry;
pub mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::mean_volume;
use crate::special::{gamma_q, kappa, ln_c, ln_gamma, ModelParams};
use geometry::{clip_to_disc, AreaBracket, Polygon};
use stats::{SampleMoments, Z95};

pub const DEFAULT_EPS_BIAS: f64 = 1e-4;
pub const MIN_REPS: usize = 100;
pub const MIN_POINTS: usize = 100;

const UNIT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    u: Vec<f64>,
    t: f64,
}

impl Hyperplane {
    pub fn new(u: Vec<f64>, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParams(format!("hyperplane distance must be positive, got {t}")));
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if u.is_empty() || !((norm - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::InvalidParams(format!("hyperplane normal must be a unit vector (norm {norm})")));
        }
        Ok(Hyperplane { u, t })
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `⟨x, u⟩ ≤ t`.
    pub fn contains(&self, x: &[f64]) -> bool {
        dot(&self.u, x) <= self.t
    }
}

/// The planes of one realization that meet `B_R`, sorted by distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroCellRealization {
    n: u32,
    radius: f64,
    planes: Vec<Hyperplane>,
}

impl ZeroCellRealization {
    pub fn new(n: u32, radius: f64, mut planes: Vec<Hyperplane>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("dimension must be at least 2, got {n}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParams(format!("truncation radius must be positive, got {radius}")));
        }
        if let Some(h) = planes.iter().find(|h| h.u.len() != n as usize || h.t > radius) {
            return Err(Error::InvalidParams(format!(
                "plane (dim {}, t = {}) incompatible with n = {n}, R = {radius}",
                h.u.len(),
                h.t
            )));
        }
        planes.sort_by(|a, b| a.t.total_cmp(&b.t));
        Ok(ZeroCellRealization { n, radius, planes })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn planes(&self) -> &[Hyperplane] {
        &self.planes
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.planes.iter().all(|h| h.contains(x))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Independent generator for replication `rep` of a run seeded with `seed`.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Uniform in `(0, 1]`.
fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

fn unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R, buf: &mut Vec<f64>) {
    loop {
        buf.clear();
        buf.extend((0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let norm = buf.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-150 {
            buf.iter_mut().for_each(|x| *x /= norm);
            return;
        }
    }
}

/// Draws the hyperplanes of the process that meet `B_R`.
pub fn sample_process<R: Rng + ?Sized>(p: &ModelParams, radius: f64, rng: &mut R) -> Result<ZeroCellRealization> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParams(format!("truncation radius must be positive, got {radius}")));
    }
    let n = p.n() as usize;
    let r = p.r();
    let expected = 2.0 * p.gamma() * radius.powf(r) / r;
    let count = if expected > 0.0 {
        let dist = Poisson::new(expected).map_err(|e| Error::Simulation(format!("Poisson({expected}): {e}")))?;
        dist.sample(rng) as usize
    } else {
        0
    };
    let mut planes = Vec::with_capacity(count);
    let mut buf = Vec::with_capacity(n);
    for _ in 0..count {
        unit_vector(n, rng, &mut buf);
        let t = radius * open_unit(rng).powf(1.0 / r);
        planes.push(Hyperplane { u: buf.clone(), t });
    }
    planes.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(ZeroCellRealization { n: p.n(), radius, planes })
}

/// `x ∈ Z_0` iff no sampled plane separates `x` from the origin.
pub fn membership(cell: &ZeroCellRealization, x: &[f64]) -> bool {
    cell.contains(x)
}

/// The cell clipped to the inscribed and circumscribed polygons of `B_R`.
pub fn cell_polygons_2d(cell: &ZeroCellRealization) -> Result<(Polygon, Polygon)> {
    if cell.n != 2 {
        return Err(Error::InvalidParams(format!("planar clipping needs n = 2, got {}", cell.n)));
    }
    let planes = cell.planes.iter().map(|h| ([h.u[0], h.u[1]], h.t));
    Ok(clip_to_disc(planes, cell.radius))
}

/// Area of `Z_0 ∩ B_R` for `n = 2`; use [`AreaBracket::midpoint`] as the estimate.
pub fn exact_area_2d(cell: &ZeroCellRealization) -> Result<AreaBracket> {
    let (inner, outer) = cell_polygons_2d(cell)?;
    assert!(!inner.is_empty(), "origin lies inside every half-plane");
    Ok(AreaBracket { inner: inner.area(), outer: outer.area() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HitMissEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: usize,
    pub points: usize,
}

impl HitMissEstimate {
    pub fn hit_fraction(&self) -> f64 {
        self.hits as f64 / self.points as f64
    }
}

/// Volume of `Z_0 ∩ B_R` from `m` uniform points in `B_R`.
pub fn hitmiss_volume<R: Rng + ?Sized>(cell: &ZeroCellRealization, m: usize, rng: &mut R) -> Result<HitMissEstimate> {
    if m < MIN_POINTS {
        return Err(Error::InvalidParams(format!("hit-or-miss needs at least {MIN_POINTS} points, got {m}")));
    }
    let n = cell.n as usize;
    let inv_n = 1.0 / n as f64;
    let mut g = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..m {
        let mut sq = 0.0;
        for gi in g.iter_mut() {
            *gi = rng.sample::<f64, _>(StandardNormal);
            sq += *gi * *gi;
        }
        if !(sq > 0.0) {
            continue;
        }
        let rho = cell.radius * open_unit(rng).powf(inv_n);
        let scale = rho / sq.sqrt();
        if cell.planes.iter().all(|h| dot(&h.u, &g) * scale <= h.t) {
            hits += 1;
        }
    }
    let ball = kappa(cell.n).to_f64() * cell.radius.powi(cell.n as i32);
    let f = hits as f64 / m as f64;
    Ok(HitMissEstimate { estimate: ball * f, std_error: ball * (f * (1.0 - f) / m as f64).sqrt(), hits, points: m })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationBias {
    /// Bound on `E[V(Z_0)] - E[V(Z_0 ∩ B_R)]`.
    pub mean: f64,
    /// Bound on `E[V(Z_0)²] - E[V(Z_0 ∩ B_R)²]`.
    pub second: f64,
}

/// `β` in `P(x ∈ Z_0) = exp(-β ‖x‖^r)`.
fn ln_beta_rate(p: &ModelParams) -> f64 {
    (2.0 * p.gamma()).ln() + ln_c(p.n(), p.r()) - p.dim().ln() - kappa(p.n()).ln() - p.r().ln()
}

/// `ln` of the bias bounds relative to `E[V]` and `E[V]²`, at `s = βR^r`.
///
/// With `q = n/r`, `∫_{‖x‖>R} P dx = E[V] Q(q, s)`. For the second moment,
/// `V² - V_R² ≤ 2VW` with `W = V(Z_0 \ B_R)`, Cauchy–Schwarz and
/// `P(x, y ∈ Z_0) ≤ √(P(x)P(y))` give `2 √(U_2) · 2^q E[V] Q(q, s/2)`, where
/// `U_2 = Γ(2q+1) κ_n² L^{2q}` is the second-moment upper bound.
fn ln_relative_biases(q: f64, s: f64) -> Result<(f64, f64)> {
    let mean = gamma_q(q, s)?.ln();
    let second = 2f64.ln() + q * 2f64.ln() + 0.5 * ln_gamma(2.0 * q + 1.0) - ln_gamma(q + 1.0)
        + gamma_q(q, 0.5 * s)?.ln();
    Ok((mean, second))
}

pub fn truncation_bias(p: &ModelParams, radius: f64) -> Result<TruncationBias> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParams(format!("truncation radius must be positive, got {radius}")));
    }
    let q = p.dim() / p.r();
    let s = (ln_beta_rate(p) + p.r() * radius.ln()).exp();
    let (lm, ls) = ln_relative_biases(q, s)?;
    let ln_mean = mean_volume(p).ln();
    Ok(TruncationBias { mean: (lm + ln_mean).exp(), second: (ls + 2.0 * ln_mean).exp() })
}

/// Smallest radius (to bisection precision) whose bias bounds are at most
/// `eps · E[V]` and `eps · E[V]²`; the latter never exceeds `eps · E[V²]`.
pub fn choose_radius(p: &ModelParams, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParams(format!("eps_bias must lie in (0, 1), got {eps}")));
    }
    let q = p.dim() / p.r();
    let target = eps.ln();
    let ok = |s: f64| -> Result<bool> {
        let (m, sec) = ln_relative_biases(q, s)?;
        Ok(m <= target && sec <= target)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while !ok(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::NoConvergence("choose_radius"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(((hi.ln() - ln_beta_rate(p)) / p.r()).exp())
}

/// Volume measured in one replication.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepVolume {
    pub rep: u64,
    pub volume: f64,
    /// Half the polygon bracket gap (`n = 2`) or the binomial standard error.
    pub error: f64,
    pub planes: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub reps: usize,
    pub mean_est: f64,
    pub mean_ci_half_width: f64,
    pub second_moment_est: f64,
    pub second_moment_ci_half_width: f64,
    pub var_est: f64,
    pub var_ci_half_width: f64,
    pub truncation_bias_bound_mean: f64,
    pub truncation_bias_bound_second: f64,
    /// Bound on the measurement error of the mean (polygon brackets, `n = 2`).
    pub geometric_error_mean: f64,
    /// Bound on the measurement error of the second moment.
    pub geometric_error_second: f64,
    /// Mean hit-or-miss noise variance removed from `var_est` and `second_moment_est`.
    pub noise_variance: f64,
    pub radius: f64,
    pub points: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationRun {
    pub summary: SimulationSummary,
    pub volumes: Vec<RepVolume>,
}

fn simulate_rep(p: &ModelParams, radius: f64, m_points: usize, seed: u64, rep: u64) -> Result<(RepVolume, f64)> {
    let mut rng = rep_rng(seed, rep);
    let cell = sample_process(p, radius, &mut rng)?;
    let planes = cell.planes.len();
    if p.n() == 2 {
        let b = exact_area_2d(&cell)?;
        Ok((RepVolume { rep, volume: b.midpoint(), error: 0.5 * b.gap(), planes }, 0.0))
    } else {
        let h = hitmiss_volume(&cell, m_points, &mut rng)?;
        let ball = h.estimate / h.hit_fraction().max(f64::MIN_POSITIVE);
        let f = h.hit_fraction();
        // unbiased estimate of the binomial noise variance of this rep
        let noise = ball * ball * f * (1.0 - f) / (m_points as f64 - 1.0);
        let noise = if h.hits == 0 { 0.0 } else { noise };
        Ok((RepVolume { rep, volume: h.estimate, error: h.std_error, planes }, noise))
    }
}

/// Runs `reps` independent replications; `m_points` is ignored for `n = 2`.
pub fn run_simulation_detailed(
    p: &ModelParams,
    reps: usize,
    m_points: usize,
    eps_bias: f64,
    seed: u64,
) -> Result<SimulationRun> {
    if reps < MIN_REPS {
        return Err(Error::InvalidParams(format!("need at least {MIN_REPS} replications, got {reps}")));
    }
    if p.n() > 2 && m_points < MIN_POINTS {
        return Err(Error::InvalidParams(format!("need at least {MIN_POINTS} points, got {m_points}")));
    }
    let radius = choose_radius(p, eps_bias)?;
    let bias = truncation_bias(p, radius)?;
    let results = (0..reps as u64)
        .into_par_iter()
        .map(|rep| simulate_rep(p, radius, m_points, seed, rep))
        .collect::<Result<Vec<_>>>()?;
    let (volumes, noise): (Vec<RepVolume>, Vec<f64>) = results.into_iter().unzip();
    let values: Vec<f64> = volumes.iter().map(|v| v.volume).collect();
    let m = SampleMoments::from_slice(&values);
    let noise_variance = stats::pairwise_sum(&noise) / reps as f64;
    let (geometric_error_mean, geometric_error_second) = if p.n() == 2 {
        let errs: Vec<f64> = volumes.iter().map(|v| v.error).collect();
        let sec: Vec<f64> = volumes.iter().map(|v| v.error * (2.0 * v.volume + v.error)).collect();
        (stats::pairwise_sum(&errs) / reps as f64, stats::pairwise_sum(&sec) / reps as f64)
    } else {
        (0.0, 0.0)
    };
    let summary = SimulationSummary {
        reps,
        mean_est: m.mean,
        mean_ci_half_width: Z95 * m.mean_std_error(),
        second_moment_est: (m.second_moment - noise_variance).max(0.0),
        second_moment_ci_half_width: Z95 * m.second_moment_std_error(),
        var_est: (m.variance - noise_variance).max(0.0),
        var_ci_half_width: Z95 * m.variance_std_error(),
        truncation_bias_bound_mean: bias.mean,
        truncation_bias_bound_second: bias.second,
        geometric_error_mean,
        geometric_error_second,
        noise_variance,
        radius,
        points: if p.n() == 2 { 0 } else { m_points },
        seed,
    };
    Ok(SimulationRun { summary, volumes })
}

pub fn run_simulation(p: &ModelParams, reps: usize, m_points: usize, eps_bias: f64, seed: u64) -> Result<SimulationSummary> {
    run_simulation_detailed(p, reps, m_points, eps_bias, seed).map(|r| r.summary)
}

/// One estimate compared with its exact counterpart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub estimate: f64,
    pub exact: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Comparison {
    fn new(estimate: f64, exact: f64, tolerance: f64) -> Self {
        let deviation = (estimate - exact).abs();
        Comparison { estimate, exact, deviation, tolerance, pass: deviation <= tolerance }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub mean: Comparison,
    pub variance: Comparison,
}

impl CrossValidation {
    pub fn pass(&self) -> bool {
        self.mean.pass && self.variance.pass
    }
}

/// Number of standard errors allowed on each side.
pub const CV_SIGMAS: f64 = 3.0;

/// Compares simulated moments with exact ones; the tolerance is
/// `3 · standard error` plus the truncation, measurement and quadrature budgets.
pub fn cross_validate(s: &SimulationSummary, exact_mean: f64, exact_var: f64, exact_var_error: f64) -> CrossValidation {
    let se_mean = s.mean_ci_half_width / Z95;
    let se_var = s.var_ci_half_width / Z95;
    let mean_tol = CV_SIGMAS * se_mean + s.truncation_bias_bound_mean + s.geometric_error_mean;
    // |Var - Var_R| ≤ (E V² - E V_R²) + (E V)² - (E V_R)²
    let var_budget = s.truncation_bias_bound_second
        + 2.0 * exact_mean * s.truncation_bias_bound_mean
        + s.geometric_error_second
        + 2.0 * exact_mean * s.geometric_error_mean;
    let var_tol = CV_SIGMAS * se_var + var_budget + exact_var_error;
    CrossValidation {
        mean: Comparison::new(s.mean_est, exact_mean, mean_tol),
        variance: Comparison::new(s.var_est, exact_var, var_tol),
    }
}
