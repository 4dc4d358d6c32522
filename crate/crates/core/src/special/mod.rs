//! Log-space special functions and the geometric constants of the model.

mod beta;
mod gamma;
mod log_value;

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub use beta::{betainc, betainc_complement};
pub use gamma::{gamma_p, gamma_q, log_gamma_fn};
pub use log_value::LogValue;

pub(crate) use gamma::ln_gamma;

/// The triple `(n, r, γ)`: dimension, distance exponent and intensity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: u32,
    r: f64,
    gamma: f64,
}

impl ModelParams {
    pub fn new(n: u32, r: f64, gamma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("dimension n = {n} must be at least 2")));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidParams(format!("distance exponent r = {r} must be positive")));
        }
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("intensity gamma = {gamma} must be positive")));
        }
        Ok(ModelParams { n, r, gamma })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }

    /// Same `(n, r)` with a different intensity.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.n, self.r, gamma)
    }
}

/// Volume of the unit ball in `ℝ^k`, `κ_k = π^{k/2} / Γ(k/2 + 1)`.
pub fn kappa(k: u32) -> LogValue {
    let k = f64::from(k);
    LogValue::from_ln(0.5 * k * PI.ln() - ln_gamma(0.5 * k + 1.0))
}

/// Surface area of the unit sphere `S^{k-1}`, `ω_k = k κ_k`.
pub fn omega(k: u32) -> LogValue {
    assert!(k >= 1, "omega(k) needs k >= 1");
    LogValue::from_f64(f64::from(k)) * kappa(k)
}

/// `c(n, r) = ∫_{S^{n-1}} ⟨e, u⟩_+^r du = π^{(n-1)/2} Γ((r+1)/2) / Γ((r+n)/2)`.
pub fn c_const(n: u32, r: f64) -> Result<LogValue> {
    if n < 2 {
        return Err(domain("c_const", format!("n = {n} must be at least 2")));
    }
    if !(r > 0.0) {
        return Err(domain("c_const", format!("r = {r} must be positive")));
    }
    Ok(LogValue::from_ln(ln_c(n, r)))
}

/// `ln c(n, r)`, valid for any `r > -1`; `c(2, n - 2)` with `n = 2` needs `r = 0`.
pub(crate) fn ln_c(n: u32, r: f64) -> f64 {
    debug_assert!(r > -1.0);
    let n = f64::from(n);
    0.5 * (n - 1.0) * PI.ln() + ln_gamma(0.5 * (r + 1.0)) - ln_gamma(0.5 * (r + n))
}

/// `b_{n,2} = ω_{n-1} ω_n / (4π)`.
pub fn b_n2(n: u32) -> Result<LogValue> {
    if n < 2 {
        return Err(domain("b_n2", format!("n = {n} must be at least 2")));
    }
    Ok(omega(n - 1) * omega(n) / LogValue::from_f64(4.0 * PI))
}

/// Normalized tail `M(v, r) = (1/c(2,r)) ∫_v^{π/2} cos^r θ dθ` for `v ∈ [-π/2, π/2]`.
pub fn cos_power_tail(v: f64, r: f64) -> Result<f64> {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&v) {
        return Err(domain("cos_power_tail", format!("v = {v} outside [-π/2, π/2]")));
    }
    if !(r > 0.0) {
        return Err(domain("cos_power_tail", format!("r = {r} must be positive")));
    }
    Ok(cos_tail(v, r))
}

/// Unchecked [`cos_power_tail`]; arguments a rounding step outside `[-π/2, π/2]`
/// are clamped.
///
/// With `s = sin θ` the tail is a regularized incomplete beta integral:
/// `M(v, r) = ½ I_{cos² v}((r+1)/2, ½)` for `v ≥ 0` and `1 - M(-v, r)` otherwise.
pub(crate) fn cos_tail(v: f64, r: f64) -> f64 {
    if v >= FRAC_PI_2 {
        return 0.0;
    }
    if v <= -FRAC_PI_2 {
        return 1.0;
    }
    let (s, c) = v.sin_cos();
    let a = 0.5 * (r + 1.0);
    // Arguments are inside the domain by construction; the continued fraction
    // converges for every a, b > 0.
    if v >= 0.0 {
        0.5 * betainc_complement(a, 0.5, c * c, s * s).expect("incomplete beta in cos_tail")
    } else {
        0.5 + 0.5 * betainc_complement(0.5, a, s * s, c * c).expect("incomplete beta in cos_tail")
    }
}
