//! High-dimensional behaviour: growth and decay rates, the Stirling brackets
//! behind them, and per-dimension regime tables.

use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::exact::{calibrated_intensity_log, mean_volume, moment_bounds, variance, VarianceReport};
use crate::quadrature::QuadConfig;
use crate::special::{kappa, ln_c, ln_gamma, LogValue, ModelParams};

/// Largest dimension for which the variance is computed by quadrature.
pub const QUADRATURE_CEILING: u32 = 40;
/// Above this dimension the quadrature tolerance is relaxed to [`RELAXED_REL_TOL`].
pub const RELAXED_ABOVE: u32 = 25;
pub const RELAXED_REL_TOL: f64 = 1e-6;

fn positive(func: &'static str, name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(func, format!("{name} = {x} must be positive")))
    }
}

/// `A(r) = π^{(r+1)/2} / (e Γ((r+1)/2))`, the growth rate for fixed `r`.
pub fn a_rate(r: f64) -> Result<f64> {
    positive("a_rate", "r", r)?;
    let h = 0.5 * (r + 1.0);
    Ok((h * PI.ln() - 1.0 - ln_gamma(h)).exp())
}

/// `B(a) = 2πe (a+1)^{(a+1)/a} / a`, the rate for `r = an`.
pub fn b_rate(a: f64) -> Result<f64> {
    positive("b_rate", "a", a)?;
    Ok(2.0 * PI * E * (((a + 1.0) / a) * a.ln_1p() - a.ln()).exp())
}

/// `4 (a+1)^{a+1} / (a+2)^{a+2}`, the per-dimension variance factor under
/// calibrated intensity (raised to the power `n/2`).
pub fn decay_base(a: f64) -> Result<f64> {
    positive("decay_base", "a", a)?;
    Ok((4f64.ln() + (a + 1.0) * a.ln_1p() - (a + 2.0) * (a + 2.0).ln()).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: LogValue,
    pub exact: LogValue,
    /// Absent when only a one-sided bound is known.
    pub upper: Option<LogValue>,
}

impl Bracket {
    /// True when `lower ≤ exact ≤ upper`, with a relative slack of `rel` on the
    /// logarithms to absorb rounding.
    pub fn contains(&self, rel: f64) -> bool {
        let slack = |x: LogValue| rel * (1.0 + x.log_abs().abs());
        let lo_ok = self.lower.log_abs() <= self.exact.log_abs() + slack(self.exact);
        let up_ok = self.upper.is_none_or(|u| self.exact.log_abs() <= u.log_abs() + slack(self.exact));
        lo_ok && up_ok
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StirlingBrackets {
    /// Brackets `nκ_n r / (2c(n,r))`.
    pub scale: Bracket,
    /// Brackets `Γ(kn/r + 1) κ_n^k`.
    pub upper_moment: Bracket,
    /// Lower bound for `Γ(n/r + 1)^k κ_n^k`.
    pub lower_moment: Bracket,
}

/// The three Stirling-type estimates used to turn the moment bounds into rates.
pub fn stirling_brackets(n: u32, r: f64, k: u32) -> Result<StirlingBrackets> {
    if n < 2 {
        return Err(domain("stirling_brackets", format!("n = {n} must be at least 2")));
    }
    positive("stirling_brackets", "r", r)?;
    if k == 0 {
        return Err(domain("stirling_brackets", String::from("k must be at least 1")));
    }
    let nf = f64::from(n);
    let kf = f64::from(k);
    let ln_kappa = kappa(n).ln();
    let ln2e_pi = 0.5 * (2.0 * E * PI).ln();

    let scale_core = 0.5 * PI.ln() + r.ln() - ln_gamma(0.5 * (r + 1.0)) - 0.5 * r * (2.0 * E).ln()
        + 0.5 * (nf - 1.0) * ((nf + r) / nf).ln()
        + 0.5 * r * (nf + r).ln();
    let scale = Bracket {
        lower: LogValue::from_ln(scale_core - 1.0 / (6.0 * nf)),
        exact: LogValue::from_ln(nf.ln() + ln_kappa + r.ln() - 2f64.ln() - ln_c(n, r)),
        upper: Some(LogValue::from_ln(scale_core + 1.0 / (6.0 * (nf + r)))),
    };

    let up_core = 0.5 * (2.0 * PI / (r * E * E)).ln() + 0.5 * kf * (E * E / PI).ln() + 0.5 * (kf * nf + r).ln()
        - 0.5 * kf * (nf + 2.0).ln()
        + nf * kf * (ln2e_pi - (r * E / kf).ln() / r)
        + nf * kf * ((nf + r / kf).ln() / r - 0.5 * (nf + 2.0).ln());
    let upper_moment = Bracket {
        lower: LogValue::from_ln(up_core - kf / (6.0 * (nf + 2.0))),
        exact: LogValue::from_ln(ln_gamma(kf * nf / r + 1.0) + kf * ln_kappa),
        upper: Some(LogValue::from_ln(up_core + r / (12.0 * (kf * nf + r)))),
    };

    let low_core = 0.5 * kf * (2.0 / r).ln() + 0.5 * kf * ((nf + r) / (nf + 2.0)).ln()
        + nf * kf * (ln2e_pi - (r * E).ln() / r)
        - kf / (6.0 * (nf + 2.0))
        + nf * kf * ((nf + r).ln() / r - 0.5 * (nf + 2.0).ln());
    let lower_moment = Bracket {
        lower: LogValue::from_ln(low_core),
        exact: LogValue::from_ln(kf * (ln_gamma(nf / r + 1.0) + ln_kappa)),
        upper: None,
    };

    Ok(StirlingBrackets { scale, upper_moment, lower_moment })
}

/// The `r`- and `n`-dependent profile of the two-sided estimate of `E(n, r)` for
/// `n ≥ 3`, without its unspecified constants: returns `(lower, upper)` profiles
/// `(1+r/n)^{-1/2} G` and `(1+r/n) G` with
/// `G = 2^{n/2} (1+r/(2n))^{-n/2} (1+n/(n+r))^{-(n+r)/2} / √(r+1)`.
pub fn e_growth_profile(n: u32, r: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return Err(domain("e_growth_profile", format!("n = {n} must be at least 3")));
    }
    positive("e_growth_profile", "r", r)?;
    let nf = f64::from(n);
    let ln_g = 0.5 * nf * 2f64.ln() - 0.5 * nf * (r / (2.0 * nf)).ln_1p() - 0.5 * (nf + r) * (nf / (nf + r)).ln_1p()
        - 0.5 * r.ln_1p();
    let ln_ratio = (r / nf).ln_1p();
    Ok(((ln_g - 0.5 * ln_ratio).exp(), (ln_g + ln_ratio).exp()))
}

/// `ln E[V_n] - (n/r) ln(A(r) n (1 + r/n)^{n/2} / γ)`, bounded in `n` for fixed `r`.
pub fn fixed_r_mean_residual(p: &ModelParams) -> Result<f64> {
    let (n, r) = (p.dim(), p.r());
    let rate = a_rate(r)?.ln() + n.ln() + 0.5 * n * (r / n).ln_1p() - p.gamma().ln();
    Ok(mean_volume(p).ln() - (n / r) * rate)
}

/// `ln E[V_n] - [(1/a - 1/2) ln n + (n/2) ln(B(a)/n) - (1/a) ln γ]`, bounded in
/// `n` for `r = an`.
pub fn proportional_mean_residual(n: u32, a: f64, gamma: f64) -> Result<f64> {
    let nf = f64::from(n);
    let p = ModelParams::new(n, a * nf, gamma)?;
    let shape = (1.0 / a - 0.5) * nf.ln() + 0.5 * nf * (b_rate(a)?.ln() - nf.ln()) - gamma.ln() / a;
    Ok(mean_volume(&p).ln() - shape)
}

/// `ln Var + ½ ln n - (n/2) ln decay_base(a) + 2 ln λ`, bounded in `n` under
/// calibrated intensity with `r = an`.
pub fn calibrated_variance_residual(n: u32, a: f64, lambda: f64, var: LogValue) -> Result<f64> {
    let nf = f64::from(n);
    Ok(var.ln() + 0.5 * nf.ln() - 0.5 * nf * decay_base(a)?.ln() + 2.0 * lambda.ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum ExponentRule {
    FixedR(f64),
    Proportional(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum IntensityRule {
    Constant(f64),
    Calibrated(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub mode: ExponentRule,
    pub intensity_rule: IntensityRule,
}

impl RegimeSpec {
    pub fn new(mode: ExponentRule, intensity_rule: IntensityRule) -> Result<Self> {
        match mode {
            ExponentRule::FixedR(r) => positive("RegimeSpec", "r", r)?,
            ExponentRule::Proportional(a) => positive("RegimeSpec", "a", a)?,
        }
        match intensity_rule {
            IntensityRule::Constant(g) => positive("RegimeSpec", "gamma", g)?,
            IntensityRule::Calibrated(l) => positive("RegimeSpec", "lambda", l)?,
        }
        Ok(RegimeSpec { mode, intensity_rule })
    }

    pub fn exponent(&self, n: u32) -> f64 {
        match self.mode {
            ExponentRule::FixedR(r) => r,
            ExponentRule::Proportional(a) => a * f64::from(n),
        }
    }

    /// Resolved intensity for dimension `n`.
    pub fn params(&self, n: u32) -> Result<ModelParams> {
        let r = self.exponent(n);
        let gamma = match self.intensity_rule {
            IntensityRule::Constant(g) => g,
            IntensityRule::Calibrated(lambda) => {
                let g = calibrated_intensity_log(n, r, lambda)?;
                g.try_to_f64().ok_or(Error::Overflow(g.log_abs()))?
            }
        };
        ModelParams::new(n, r, gamma)
    }

    fn decaying(&self) -> Option<f64> {
        match (self.mode, self.intensity_rule) {
            (ExponentRule::Proportional(a), IntensityRule::Calibrated(_)) => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    NotConverged,
    /// Above the quadrature ceiling; closed forms only.
    BoundsOnly,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub n: u32,
    pub r: f64,
    pub gamma: f64,
    pub mean: Option<LogValue>,
    pub k2_lower: Option<LogValue>,
    pub k2_upper: Option<LogValue>,
    pub variance: Option<VarianceReport>,
    /// `Var(n+1)/Var(n)` and `Var(n+2)/Var(n)` where both rows have a variance.
    pub ratio_step1: Option<f64>,
    pub ratio_step2: Option<f64>,
    /// Predicted `√q √(n/(n+1))` and `q √(n/(n+2))` with `q = decay_base(a)`,
    /// present under calibrated intensity with `r = an`.
    pub predicted_step1: Option<f64>,
    pub predicted_step2: Option<f64>,
    pub status: RowStatus,
}

/// One row per `n` in `n_min..=n_max`, in order of `n`.
pub fn regime_report(spec: &RegimeSpec, n_min: u32, n_max: u32, cfg: &QuadConfig) -> Result<Vec<RegimeRow>> {
    if n_min < 2 || n_min > n_max {
        return Err(Error::InvalidParams(format!("dimension range {n_min}..={n_max} must satisfy 2 <= min <= max")));
    }
    let mut rows: Vec<RegimeRow> = (n_min..=n_max).into_par_iter().map(|n| regime_row(spec, n, cfg)).collect();

    let var_of = |row: &RegimeRow| row.variance.as_ref().map(|v| v.variance);
    for i in 0..rows.len() {
        let here = var_of(&rows[i]);
        let step = |j: usize| -> Option<f64> {
            let there = rows.get(j).and_then(var_of)?;
            let h = here?;
            if h.is_zero() {
                None
            } else {
                Some((there / h).to_f64())
            }
        };
        let (s1, s2) = (step(i + 1), step(i + 2));
        rows[i].ratio_step1 = s1;
        rows[i].ratio_step2 = s2;
        if let Some(a) = spec.decaying() {
            let q = decay_base(a)?;
            let nf = f64::from(rows[i].n);
            rows[i].predicted_step1 = Some(q.sqrt() * (nf / (nf + 1.0)).sqrt());
            rows[i].predicted_step2 = Some(q * (nf / (nf + 2.0)).sqrt());
        }
    }
    Ok(rows)
}

fn regime_row(spec: &RegimeSpec, n: u32, cfg: &QuadConfig) -> RegimeRow {
    let r = spec.exponent(n);
    let mut row = RegimeRow {
        n,
        r,
        gamma: f64::NAN,
        mean: None,
        k2_lower: None,
        k2_upper: None,
        variance: None,
        ratio_step1: None,
        ratio_step2: None,
        predicted_step1: None,
        predicted_step2: None,
        status: RowStatus::Ok,
    };
    let p = match spec.params(n) {
        Ok(p) => p,
        Err(e) => {
            row.status = RowStatus::Failed(e.to_string());
            return row;
        }
    };
    row.gamma = p.gamma();
    row.mean = Some(mean_volume(&p));
    if let Ok(b) = moment_bounds(&p, 2) {
        row.k2_lower = Some(b.lower);
        row.k2_upper = Some(b.upper);
    }
    if n > QUADRATURE_CEILING {
        row.status = RowStatus::BoundsOnly;
        return row;
    }
    let cfg = if n > RELAXED_ABOVE { cfg.with_rel_tol(cfg.rel_tol.max(RELAXED_REL_TOL)) } else { *cfg };
    match variance(&p, &cfg) {
        Ok(v) => {
            if !v.converged {
                row.status = RowStatus::NotConverged;
            }
            row.variance = Some(v);
        }
        Err(e) => row.status = RowStatus::Failed(e.to_string()),
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::e_factor;
    use approx::assert_relative_eq;

    #[test]
    fn rate_examples() {
        assert_relative_eq!(a_rate(1.0).unwrap(), PI / E, max_relative = 1e-14);
        assert_relative_eq!(a_rate(3.0).unwrap(), PI * PI / E, max_relative = 1e-14);
        assert!(a_rate(1.0).unwrap() < a_rate(3.0).unwrap());
        assert_relative_eq!(b_rate(1.0).unwrap(), 8.0 * PI * E, max_relative = 1e-14);
        assert_relative_eq!(b_rate(2.0).unwrap(), PI * E * 3f64.powf(1.5), max_relative = 1e-14);
        assert_relative_eq!(b_rate(1e6).unwrap(), 2.0 * PI * E, max_relative = 1e-4);
        assert!(a_rate(0.0).is_err() && b_rate(-1.0).is_err() && decay_base(0.0).is_err());
    }

    #[test]
    fn decay_base_examples() {
        assert_relative_eq!(decay_base(1.0).unwrap(), 16.0 / 27.0, max_relative = 1e-14);
        assert_relative_eq!(decay_base(2.0).unwrap(), 27.0 / 64.0, max_relative = 1e-14);
        assert!((decay_base(1e-6).unwrap() - 1.0).abs() < 1e-5);
        for a in [0.1, 0.5, 1.0, 2.0, 10.0] {
            let q = decay_base(a).unwrap();
            assert!(q > 0.0 && q < 1.0);
        }
    }

    #[test]
    fn stirling_brackets_hold() {
        for n in 2..=20u32 {
            let nf = f64::from(n);
            for r in [0.5, 1.0, nf, 2.0 * nf] {
                for k in 1..=3 {
                    let b = stirling_brackets(n, r, k).unwrap();
                    assert!(b.scale.contains(1e-13), "scale n={n} r={r}: {:?}", b.scale);
                    assert!(b.upper_moment.contains(1e-13), "upper n={n} r={r} k={k}: {:?}", b.upper_moment);
                    assert!(b.lower_moment.contains(1e-13), "lower n={n} r={r} k={k}: {:?}", b.lower_moment);
                    assert!(b.lower_moment.upper.is_none());
                }
            }
        }
    }

    fn spread(xs: &[f64]) -> f64 {
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    #[test]
    fn fixed_r_mean_residual_is_bounded() {
        for r in [1.0, 2.0] {
            let res: Vec<f64> = (2..=25)
                .map(|n| fixed_r_mean_residual(&ModelParams::new(n, r, 1.0).unwrap()).unwrap())
                .collect();
            assert!(spread(&res) < 50f64.ln(), "r={r}: {res:?}");
        }
    }

    #[test]
    fn proportional_mean_residual_is_bounded() {
        for a in [0.5, 1.0, 2.0] {
            let res: Vec<f64> = (2..=60).map(|n| proportional_mean_residual(n, a, 1.0).unwrap()).collect();
            assert!(spread(&res) < 50f64.ln(), "a={a}: {res:?}");
        }
    }

    #[test]
    fn e_growth_residual_is_bounded() {
        let cfg = QuadConfig::default().with_rel_tol(1e-7);
        for a in [0.5, 1.0, 2.0] {
            let mut res = Vec::new();
            for n in (3..=25u32).step_by(2) {
                let r = a * f64::from(n);
                let e = e_factor(n, r, &cfg).unwrap();
                let (lo, hi) = e_growth_profile(n, r).unwrap();
                res.push(e.estimate().ln() - lo.ln());
                assert!(lo < hi);
            }
            assert!(spread(&res) < 50f64.ln(), "a={a}: {res:?}");
        }
    }

    #[test]
    fn regime_report_calibrated_mean_is_one() {
        let spec = RegimeSpec::new(ExponentRule::Proportional(1.0), IntensityRule::Calibrated(1.0)).unwrap();
        let rows = regime_report(&spec, 2, 12, &QuadConfig::default()).unwrap();
        assert_eq!(rows.len(), 11);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.n, 2 + i as u32);
            assert_eq!(row.status, RowStatus::Ok);
            assert!((row.mean.unwrap().to_f64() - 1.0).abs() < 1e-12);
        }
        let q = decay_base(1.0).unwrap();
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio_step2).collect();
        assert_eq!(ratios.len(), 9);
        for row in &rows {
            let nf = f64::from(row.n);
            assert_relative_eq!(row.predicted_step2.unwrap(), q * (nf / (nf + 2.0)).sqrt(), max_relative = 1e-14);
        }
    }

    #[test]
    fn calibrated_variance_decays_at_predicted_rate() {
        let spec = RegimeSpec::new(ExponentRule::Proportional(1.0), IntensityRule::Calibrated(1.0)).unwrap();
        let rows = regime_report(&spec, 4, 24, &QuadConfig::default()).unwrap();
        let res: Vec<f64> = rows
            .iter()
            .map(|row| calibrated_variance_residual(row.n, 1.0, 1.0, row.variance.unwrap().variance).unwrap())
            .collect();
        assert!(spread(&res) < 50f64.ln(), "{res:?}");
        let at20 = rows.iter().find(|row| row.n == 20).unwrap();
        let ratio = at20.ratio_step2.unwrap();
        assert!((ratio / (16.0 / 27.0) - 1.0).abs() < 0.1, "Var(22)/Var(20) = {ratio}");
    }

    #[test]
    fn fixed_r_variance_grows() {
        let spec = RegimeSpec::new(ExponentRule::FixedR(1.0), IntensityRule::Constant(1.0)).unwrap();
        let rows = regime_report(&spec, 2, 8, &QuadConfig::default()).unwrap();
        for w in rows.windows(2) {
            let a = w[0].variance.unwrap().variance;
            let b = w[1].variance.unwrap().variance;
            assert!(b > a);
        }
        assert!(rows.iter().all(|r| r.predicted_step1.is_none()));
    }

    #[test]
    fn bounds_only_above_ceiling() {
        let spec = RegimeSpec::new(ExponentRule::Proportional(1.0), IntensityRule::Calibrated(1.0)).unwrap();
        let rows = regime_report(&spec, 41, 43, &QuadConfig::default()).unwrap();
        for row in rows {
            assert_eq!(row.status, RowStatus::BoundsOnly);
            assert!(row.variance.is_none() && row.k2_upper.is_some());
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(RegimeSpec::new(ExponentRule::FixedR(0.0), IntensityRule::Constant(1.0)).is_err());
        assert!(RegimeSpec::new(ExponentRule::Proportional(1.0), IntensityRule::Calibrated(-1.0)).is_err());
        let spec = RegimeSpec::new(ExponentRule::FixedR(1.0), IntensityRule::Constant(1.0)).unwrap();
        assert!(regime_report(&spec, 5, 3, &QuadConfig::default()).is_err());
    }
}
