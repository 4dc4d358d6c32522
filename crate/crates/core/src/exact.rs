//! Closed-form moments, the variance double integral and the bounds built on it.
//!
//! Throughout, `p = 2n/r` and `L = nκ_n r / (2γ c(n,r))`, so that the mean is
//! `Γ(n/r + 1) κ_n L^{n/r}`.

use std::f64::consts::{FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate_2d_iterated, Grading, Interval, QuadConfig, QuadResult};
use crate::special::{b_n2, c_const, cos_tail, kappa, ln_c, ln_gamma, LogValue, ModelParams};

/// Coarse grid used to locate the peak of a log-integrand before integrating.
const SHIFT_GRID: usize = 33;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentBounds {
    pub k: u32,
    pub lower: LogValue,
    pub upper: LogValue,
    pub exact: Option<LogValue>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub mean: LogValue,
    pub variance: LogValue,
    pub second_moment: LogValue,
    /// Absolute error estimate of `variance` (saturating).
    pub quad_error: f64,
    pub quad_rel_error: f64,
    #[serde(rename = "E_nr")]
    pub e_nr: f64,
    pub e_nr_error: f64,
    #[serde(rename = "D_nr")]
    pub d_nr: LogValue,
    pub sandwich_lower: LogValue,
    pub sandwich_upper: LogValue,
    pub converged: bool,
}

/// `α(t, φ) = arctan((t - cos φ) / sin φ)`.
pub fn alpha_fn(t: f64, phi: f64) -> Result<f64> {
    check_t_phi("alpha_fn", t, phi)?;
    Ok(alpha(t, phi))
}

/// `F_r(t, φ) = t^r (1 - M(α, r)) + M(α - φ, r)`.
pub fn f_fn(t: f64, phi: f64, r: f64) -> Result<f64> {
    check_t_phi("f_fn", t, phi)?;
    check_r("f_fn", r)?;
    Ok(f_by_definition(t, phi, r))
}

fn check_t_phi(func: &'static str, t: f64, phi: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(domain(func, format!("t = {t} outside [0, 1]")));
    }
    if !(phi > 0.0 && phi < PI) {
        return Err(domain(func, format!("phi = {phi} outside (0, π)")));
    }
    Ok(())
}

fn check_r(func: &'static str, r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(domain(func, format!("r = {r} must be positive")));
    }
    Ok(())
}

fn check_n_r(func: &'static str, n: u32, r: f64) -> Result<()> {
    if n < 2 {
        return Err(domain(func, format!("n = {n} must be at least 2")));
    }
    check_r(func, r)
}

pub(crate) fn alpha(t: f64, phi: f64) -> f64 {
    (t - phi.cos()).atan2(phi.sin())
}

pub(crate) fn f_by_definition(t: f64, phi: f64, r: f64) -> f64 {
    let a = alpha(t, phi);
    t.powf(r) * (1.0 - cos_tail(a, r)) + cos_tail(a - phi, r)
}

/// `t^r + 1 - F_r(t, φ) = t^r M(α, r) + M(φ - α, r)`, free of cancellation.
pub(crate) fn deficit(t: f64, phi: f64, r: f64) -> f64 {
    let a = alpha(t, phi);
    t.powf(r) * cos_tail(a, r) + cos_tail(phi - a, r)
}

/// `ln L` with `L = nκ_n r / (2γ c(n, r))`.
fn ln_scale(p: &ModelParams) -> f64 {
    let n = p.dim();
    n.ln() + kappa(p.n()).ln() + p.r().ln() - (2.0 * p.gamma()).ln() - ln_c(p.n(), p.r())
}

/// `E[V_n(Z_0)] = Γ(n/r + 1) κ_n L^{n/r}`.
pub fn mean_volume(p: &ModelParams) -> LogValue {
    let q = p.dim() / p.r();
    LogValue::from_ln(ln_gamma(q + 1.0) + q * ln_scale(p)) * kappa(p.n())
}

/// Lower and upper bounds on `E[V_n(Z_0)^k]`; they coincide with the mean for `k = 1`.
pub fn moment_bounds(p: &ModelParams, k: u32) -> Result<MomentBounds> {
    if k == 0 {
        return Err(domain("moment_bounds", String::from("k must be at least 1")));
    }
    let mean = mean_volume(p);
    if k == 1 {
        return Ok(MomentBounds { k, lower: mean, upper: mean, exact: Some(mean) });
    }
    let kf = f64::from(k);
    let q = kf * p.dim() / p.r();
    let upper = LogValue::from_ln(ln_gamma(q + 1.0) + q * ln_scale(p)) * kappa(p.n()).powf(kf);
    Ok(MomentBounds { k, lower: mean.powf(kf), upper, exact: None })
}

/// Prefactor `(8π b_{n,2} / r) Γ(2n/r) L^{2n/r}` shared by the second moment and the variance.
fn moment2_prefactor(p: &ModelParams) -> Result<LogValue> {
    let pw = 2.0 * p.dim() / p.r();
    let c = LogValue::from_f64(8.0 * PI / p.r()) * b_n2(p.n())?;
    Ok(c * LogValue::from_ln(ln_gamma(pw) + pw * ln_scale(p)))
}

/// `ln(t^{n-1} sin^{n-2} φ)`.
fn ln_weight(n: f64, t: f64, phi: f64) -> f64 {
    let wt = (n - 1.0) * t.ln();
    if n == 2.0 {
        wt
    } else {
        wt + (n - 2.0) * phi.sin().ln()
    }
}

/// `ln(F^{-p} - (1 + t^r)^{-p})` computed from `B = 1 + t^r` and the deficit
/// `h = B - F`.
pub(crate) fn ln_power_gap(pw: f64, b: f64, h: f64) -> f64 {
    if h <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let l1 = (-h / b).ln_1p();
    let d = -pw * l1;
    if d <= 30.0 {
        -pw * b.ln() + d.exp_m1().ln()
    } else {
        -pw * (b.ln() + l1) + (-(-d).exp_m1()).ln()
    }
}

/// Integrand of the variance double integral, in log form.
fn ln_variance_integrand(n: f64, r: f64, t: f64, phi: f64) -> f64 {
    let pw = 2.0 * n / r;
    let b = 1.0 + t.powf(r);
    ln_power_gap(pw, b, deficit(t, phi, r)) + ln_weight(n, t, phi)
}

fn ln_second_moment_integrand(n: f64, r: f64, t: f64, phi: f64) -> f64 {
    let pw = 2.0 * n / r;
    let f = 1.0 + t.powf(r) - deficit(t, phi, r);
    -pw * f.ln() + ln_weight(n, t, phi)
}

/// `∫_0^π ∫_0^1 exp(g(t, φ)) dt dφ` for a log-integrand `g`. The integrand is
/// rescaled by its largest value on a coarse grid so that neither overflow nor
/// underflow can occur in linear space.
fn log_double_integral<G>(g: G, cfg: &QuadConfig) -> Result<QuadResult>
where
    G: Fn(f64, f64) -> f64,
{
    let mut shift = f64::NEG_INFINITY;
    for i in 0..SHIFT_GRID {
        let phi = PI * (i as f64 + 0.5) / SHIFT_GRID as f64;
        for j in 0..SHIFT_GRID {
            let t = (j as f64 + 0.5) / SHIFT_GRID as f64;
            let v = g(t, phi);
            if v > shift {
                shift = v;
            }
        }
    }
    if shift == f64::NEG_INFINITY {
        shift = 0.0;
    }
    let f = |t: f64, phi: f64| (g(t, phi) - shift).exp();
    let res = integrate_2d_iterated(
        f,
        Interval::graded(0.0, 1.0, Grading::BOTH),
        Interval::graded(0.0, PI, Grading::BOTH),
        cfg,
    )?;
    Ok(res.scaled(LogValue::from_ln(shift)))
}

/// `E[V_n(Z_0)^2]` by quadrature of the second-moment double integral.
pub fn second_moment(p: &ModelParams, cfg: &QuadConfig) -> Result<QuadResult> {
    let (n, r) = (p.dim(), p.r());
    let integral = log_double_integral(|t, phi| ln_second_moment_integrand(n, r, t, phi), cfg)?;
    Ok(integral.scaled(moment2_prefactor(p)?))
}

/// `Var[V_n(Z_0)]` from the difference integrand, with `E(n,r)`, `D(n,r)` and the
/// two-sided bound `E·D ≤ Var ≤ E·D·4^{2n/r+1}`.
pub fn variance(p: &ModelParams, cfg: &QuadConfig) -> Result<VarianceReport> {
    let var = variance_integral(p, cfg)?;
    let e = e_factor(p.n(), p.r(), cfg)?;
    let mean = mean_volume(p);
    let d = d_factor(p);
    let (lower, upper) = sandwich_from(p, e.value, d);
    let converged = var.converged && e.converged;
    Ok(VarianceReport {
        mean,
        variance: var.value,
        second_moment: mean * mean + var.value,
        quad_error: var.abs_error_estimate,
        quad_rel_error: var.rel_error_estimate,
        e_nr: e.estimate(),
        e_nr_error: e.abs_error_estimate,
        d_nr: d,
        sandwich_lower: lower,
        sandwich_upper: upper,
        converged,
    })
}

/// The variance double integral alone, times its prefactor.
pub fn variance_integral(p: &ModelParams, cfg: &QuadConfig) -> Result<QuadResult> {
    let (n, r) = (p.dim(), p.r());
    let integral = log_double_integral(|t, phi| ln_variance_integrand(n, r, t, phi), cfg)?;
    let res = integral.scaled(moment2_prefactor(p)?);
    if res.value.sign() < 0 && res.value.abs().to_f64() > res.abs_error_estimate {
        return Err(Error::NegativeVariance { value: res.estimate(), error: res.abs_error_estimate });
    }
    Ok(res)
}

/// Pointwise value of the variance integrand `(F^{-2n/r} - (1+t^r)^{-2n/r}) t^{n-1} sin^{n-2} φ`.
pub fn variance_integrand(n: u32, r: f64, t: f64, phi: f64) -> Result<f64> {
    check_n_r("variance_integrand", n, r)?;
    check_t_phi("variance_integrand", t, phi)?;
    Ok(ln_variance_integrand(f64::from(n), r, t, phi).exp())
}

/// `D(n, r) = (nκ_n²/r) Γ(2n/r + 1) (nκ_n r / (4γ c(n,r)))^{2n/r}`.
pub fn d_factor(p: &ModelParams) -> LogValue {
    let pw = 2.0 * p.dim() / p.r();
    let k = kappa(p.n());
    LogValue::from_f64(p.dim() / p.r())
        * k
        * k
        * LogValue::from_ln(ln_gamma(pw + 1.0) + pw * (ln_scale(p) - 2f64.ln()))
}

fn e_prefactor(n: u32) -> LogValue {
    LogValue::from_ln(f64::from(n).ln() - ln_c(2, f64::from(n) - 2.0))
}

/// `E(n, r) = (n / c(2, n-2)) ∫∫ sin^{n-2} φ t^{n-1} (t^r M(α, r) + M(φ - α, r)) dt dφ`.
pub fn e_factor(n: u32, r: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    check_n_r("e_factor", n, r)?;
    let nf = f64::from(n);
    let integral = log_double_integral(
        |t, phi| {
            let h = deficit(t, phi, r);
            if h > 0.0 {
                h.ln() + ln_weight(nf, t, phi)
            } else {
                f64::NEG_INFINITY
            }
        },
        cfg,
    )?;
    Ok(integral.scaled(e_prefactor(n)))
}

/// `E(n, r)` from its definition with `1 + t^r - F_r`, where `F_r` is assembled
/// from its two tail integrals.
pub fn e_factor_by_definition(n: u32, r: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    check_n_r("e_factor_by_definition", n, r)?;
    let nf = f64::from(n);
    let f = |t: f64, phi: f64| {
        let gap = 1.0 + t.powf(r) - f_by_definition(t, phi, r);
        gap * ln_weight(nf, t, phi).exp()
    };
    let integral = integrate_2d_iterated(
        f,
        Interval::graded(0.0, 1.0, Grading::BOTH),
        Interval::graded(0.0, PI, Grading::BOTH),
        cfg,
    )?;
    Ok(integral.scaled(e_prefactor(n)))
}

/// The explicit constant `M(π/4, r) / (2(1 + r))`, a lower bound for `E(n, r)` for every `n`.
pub fn e_factor_lower_constant(r: f64) -> Result<f64> {
    check_r("e_factor_lower_constant", r)?;
    Ok(cos_tail(FRAC_PI_4, r) / (2.0 * (1.0 + r)))
}

fn sandwich_from(p: &ModelParams, e: LogValue, d: LogValue) -> (LogValue, LogValue) {
    let lower = e * d;
    let pw = 2.0 * p.dim() / p.r();
    (lower, lower * LogValue::from_ln((pw + 1.0) * 4f64.ln()))
}

/// `(E·D, E·D·4^{2n/r+1})`.
pub fn variance_sandwich(p: &ModelParams, cfg: &QuadConfig) -> Result<(LogValue, LogValue)> {
    let e = e_factor(p.n(), p.r(), cfg)?;
    if !e.converged {
        return Err(Error::NoConvergence("E(n, r) quadrature"));
    }
    Ok(sandwich_from(p, e.value, d_factor(p)))
}

/// Intensity `γ̂` with `E[V_n(Z_0)] = 1/λ`, in log form.
pub fn calibrated_intensity_log(n: u32, r: f64, lambda: f64) -> Result<LogValue> {
    check_n_r("calibrated_intensity", n, r)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(domain("calibrated_intensity", format!("lambda = {lambda} must be positive")));
    }
    let nf = f64::from(n);
    let ln_k = kappa(n).ln();
    let ln_front = nf.ln() + ln_k + r.ln() - 2f64.ln() - ln_c(n, r);
    let ln_back = (r / nf) * (lambda.ln() + ln_gamma(nf / r + 1.0) + ln_k);
    Ok(LogValue::from_ln(ln_front + ln_back))
}

/// Plain-real [`calibrated_intensity_log`]; errors when `γ̂` is not a finite `f64`.
pub fn calibrated_intensity(n: u32, r: f64, lambda: f64) -> Result<f64> {
    let g = calibrated_intensity_log(n, r, lambda)?;
    g.try_to_f64().ok_or(Error::Overflow(g.log_abs()))
}

/// `c(2, r)` as a plain real; convenience for oracles.
pub fn c2(r: f64) -> Result<f64> {
    Ok(c_const(2, r)?.to_f64())
}
