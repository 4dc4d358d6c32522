use anyhow::Context;
use rayon::prelude::*;
use serde_json::json;
use zerocell::asymptotics::{decay_base, regime_report, ExponentRule, IntensityRule, RegimeSpec, RowStatus};
use zerocell::exact::{self, VarianceReport};
use zerocell::simulator::{self, DEFAULT_EPS_BIAS};
use zerocell::special::kappa;
use zerocell::{Error, LogValue, ModelParams, QuadConfig, Rule};

use crate::args::{
    AsymptArgs, CalibrateArgs, MomentsArgs, ModelArgs, QuadArgs, RuleArg, SimulateArgs, SweepArgs, SweepMode, VarianceArgs,
};
use crate::output::{log_json, log_num, num, opt_log, opt_num, Table};
use crate::UsageError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_CROSS_VALIDATION: i32 = 4;
pub const EXIT_FAILURE: i32 = 1;

/// What a command produced; written by the caller.
pub struct Report {
    pub table: Table,
    pub json: serde_json::Value,
    pub code: i32,
}

pub const SWEEP_HEADER: [&str; 10] = ["n", "r", "gamma", "mean", "var", "var_lower", "var_upper", "E_nr", "quad_err", "converged"];

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn require<T>(v: Option<T>, flag: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| usage(format!("missing required flag --{flag}")))
}

/// Model parameters together with the calibration target, if any.
struct Resolved {
    params: ModelParams,
    lambda: Option<f64>,
}

impl Resolved {
    fn new(n: u32, r: f64, gamma: Option<f64>, lambda: Option<f64>) -> anyhow::Result<Self> {
        let gamma = match (gamma, lambda) {
            (Some(g), None) => g,
            (None, Some(l)) => exact::calibrated_intensity(n, r, l)?,
            (Some(_), Some(_)) => return Err(usage("--gamma and --lambda are mutually exclusive")),
            (None, None) => return Err(usage("one of --gamma or --lambda is required")),
        };
        Ok(Resolved { params: ModelParams::new(n, r, gamma)?, lambda })
    }

    fn from_model(m: &ModelArgs) -> anyhow::Result<Self> {
        Resolved::new(require(m.n, "n")?, require(m.r, "r")?, m.gamma, m.lambda)
    }

    /// `1/λ` under calibration, where it holds by construction.
    fn mean(&self) -> LogValue {
        match self.lambda {
            Some(l) => LogValue::from_f64(1.0 / l),
            None => exact::mean_volume(&self.params),
        }
    }
}

pub fn quad_config(q: &QuadArgs) -> anyhow::Result<QuadConfig> {
    let mut cfg = QuadConfig::default();
    if let Some(t) = q.rel_tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(usage(format!("--rel-tol must lie in (0, 1), got {t}")));
        }
        cfg.rel_tol = t;
    }
    if let Some(m) = q.max_subdivisions {
        if m == 0 {
            return Err(usage("--max-subdivisions must be positive"));
        }
        cfg.max_subdivisions = m;
    }
    if let Some(rule) = q.rule {
        cfg.rule = match rule {
            RuleArg::Gk15 => Rule::GaussKronrod15,
            RuleArg::Gk31 => Rule::GaussKronrod31,
        };
    }
    Ok(cfg)
}

pub fn moments(a: &MomentsArgs) -> anyhow::Result<Report> {
    let res = Resolved::from_model(&a.model)?;
    let k = a.k.unwrap_or(1);
    let p = &res.params;
    let b = exact::moment_bounds(p, k)?;
    let mean = res.mean();
    let (lower, upper) = if k == 1 { (mean, mean) } else { (b.lower, b.upper) };
    let mut table = Table::new(&[
        "n", "r", "gamma", "k", "mean", "ln_mean", "moment_lower", "ln_moment_lower", "moment_upper", "ln_moment_upper",
    ]);
    table.push(vec![
        p.n().to_string(),
        num(p.r()),
        num(p.gamma()),
        k.to_string(),
        log_num(mean),
        num(mean.ln()),
        log_num(lower),
        num(lower.ln()),
        log_num(upper),
        num(upper.ln()),
    ]);
    let json = json!({
        "n": p.n(), "r": p.r(), "gamma": p.gamma(), "k": k,
        "mean": log_json(mean), "moment_lower": log_json(lower), "moment_upper": log_json(upper),
    });
    Ok(Report { table, json, code: EXIT_OK })
}

/// Outcome of one grid point.
enum RowOutcome {
    Done(Box<VarianceReport>),
    Failed(Error),
}

fn variance_point(res: &Resolved, cfg: &QuadConfig) -> RowOutcome {
    match exact::variance(&res.params, cfg) {
        Ok(mut v) => {
            if res.lambda.is_some() {
                v.mean = res.mean();
            }
            RowOutcome::Done(Box::new(v))
        }
        Err(e) => RowOutcome::Failed(e),
    }
}

fn sweep_cells(p: &ModelParams, out: &RowOutcome) -> Vec<String> {
    let mut row = vec![p.n().to_string(), num(p.r()), num(p.gamma())];
    match out {
        RowOutcome::Done(v) => row.extend([
            log_num(v.mean),
            log_num(v.variance),
            log_num(v.sandwich_lower),
            log_num(v.sandwich_upper),
            num(v.e_nr),
            num(v.quad_error),
            v.converged.to_string(),
        ]),
        RowOutcome::Failed(_) => {
            row.extend(std::iter::repeat_n(String::new(), 6));
            row.push(String::from("false"));
        }
    }
    row
}

fn variance_json(p: &ModelParams, out: &RowOutcome) -> serde_json::Value {
    match out {
        RowOutcome::Done(v) => json!({
            "n": p.n(), "r": p.r(), "gamma": p.gamma(),
            "mean": log_json(v.mean), "variance": log_json(v.variance),
            "second_moment": log_json(v.second_moment),
            "var_lower": log_json(v.sandwich_lower), "var_upper": log_json(v.sandwich_upper),
            "E_nr": v.e_nr, "E_nr_error": v.e_nr_error, "D_nr": log_json(v.d_nr),
            "quad_err": v.quad_error, "quad_rel_err": v.quad_rel_error, "converged": v.converged,
        }),
        RowOutcome::Failed(e) => json!({ "n": p.n(), "r": p.r(), "gamma": p.gamma(), "error": e.to_string() }),
    }
}

/// Worst exit code over a set of rows.
fn rows_code<'a>(outs: impl IntoIterator<Item = &'a RowOutcome>) -> i32 {
    let mut code = EXIT_OK;
    for o in outs {
        match o {
            RowOutcome::Done(v) if !v.converged => code = code.max(EXIT_NOT_CONVERGED),
            RowOutcome::Failed(Error::NoConvergence(_)) => code = code.max(EXIT_NOT_CONVERGED),
            RowOutcome::Failed(_) => return EXIT_FAILURE,
            RowOutcome::Done(_) => {}
        }
    }
    code
}

pub fn variance(a: &VarianceArgs) -> anyhow::Result<Report> {
    let res = Resolved::from_model(&a.model)?;
    let cfg = quad_config(&a.quad)?;
    let out = variance_point(&res, &cfg);
    if let RowOutcome::Failed(e) = out {
        return Err(e.into());
    }
    let mut header = SWEEP_HEADER.to_vec();
    header.extend(["second_moment", "D_nr"]);
    let mut table = Table::new(&header);
    let mut row = sweep_cells(&res.params, &out);
    if let RowOutcome::Done(v) = &out {
        row.extend([log_num(v.second_moment), log_num(v.d_nr)]);
    }
    table.push(row);
    let code = rows_code([&out]);
    Ok(Report { table, json: variance_json(&res.params, &out), code })
}

fn parse_pair(s: &str) -> anyhow::Result<(u32, f64)> {
    let (n, r) = s.split_once(':').ok_or_else(|| usage(format!("grid entry `{s}` is not of the form n:r")))?;
    let n = n.trim().parse().map_err(|_| usage(format!("bad dimension in `{s}`")))?;
    let r = r.trim().parse().map_err(|_| usage(format!("bad exponent in `{s}`")))?;
    Ok((n, r))
}

/// `"2.5"` is a fixed exponent, `"0.5n"` or `"n"` ties it to the dimension.
pub fn parse_r_rule(s: &str) -> anyhow::Result<ExponentRule> {
    let s = s.trim();
    let bad = || usage(format!("bad exponent rule `{s}`; expected e.g. `1`, `0.5n`, `n`, `2n`"));
    match s.strip_suffix('n') {
        Some("") => Ok(ExponentRule::Proportional(1.0)),
        Some(a) => Ok(ExponentRule::Proportional(a.trim_end_matches('*').parse().map_err(|_| bad())?)),
        None => Ok(ExponentRule::FixedR(s.parse().map_err(|_| bad())?)),
    }
}

fn default_fig1_r() -> Vec<f64> {
    std::iter::once(0.5).chain((1..=100).map(f64::from)).collect()
}

fn sweep_grid(a: &SweepArgs) -> anyhow::Result<Vec<(u32, f64)>> {
    let mode = a.mode.unwrap_or(SweepMode::Fig1);
    let grid: Vec<(u32, f64)> = match mode {
        SweepMode::Fig1 => {
            let ns = a.n_values.clone().unwrap_or_else(|| vec![2, 3, 4]);
            let rs = a.r_values.clone().unwrap_or_else(default_fig1_r);
            ns.iter().flat_map(|&n| rs.iter().map(move |&r| (n, r))).collect()
        }
        SweepMode::Fig2 => {
            let rule = parse_r_rule(a.r_rule.as_deref().unwrap_or("n"))?;
            let (lo, hi) = (a.n_min.unwrap_or(2), a.n_max.unwrap_or(20));
            if lo > hi {
                return Err(usage(format!("--n-min {lo} exceeds --n-max {hi}")));
            }
            (lo..=hi)
                .map(|n| {
                    let r = match rule {
                        ExponentRule::FixedR(r) => r,
                        ExponentRule::Proportional(c) => c * f64::from(n),
                    };
                    (n, r)
                })
                .collect()
        }
        SweepMode::Custom => {
            let g = a.grid.as_ref().ok_or_else(|| usage("custom mode needs --grid n:r,..."))?;
            g.iter().map(|s| parse_pair(s)).collect::<anyhow::Result<_>>()?
        }
    };
    if grid.is_empty() {
        return Err(usage("the sweep grid is empty"));
    }
    Ok(grid)
}

pub fn sweep(a: &SweepArgs) -> anyhow::Result<Report> {
    let mode = a.mode.unwrap_or(SweepMode::Fig1);
    let grid = sweep_grid(a)?;
    let cfg = quad_config(&a.quad)?;
    let gamma = if a.lambda.is_none() { Some(a.gamma.unwrap_or(1.0)) } else { None };
    let points = grid
        .iter()
        .map(|&(n, r)| Resolved::new(n, r, gamma, a.lambda))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let outs: Vec<RowOutcome> = points.par_iter().map(|res| variance_point(res, &cfg)).collect();

    let mut header = SWEEP_HEADER.to_vec();
    if mode == SweepMode::Fig1 {
        header.push("mean_minus_kappa");
    }
    let mut table = Table::new(&header);
    let mut rows_json = Vec::with_capacity(outs.len());
    for (res, out) in points.iter().zip(&outs) {
        let p = &res.params;
        let mut row = sweep_cells(p, out);
        if mode == SweepMode::Fig1 {
            row.push(log_num(res.mean() - kappa(p.n())));
        }
        table.push(row);
        rows_json.push(variance_json(p, out));
    }
    let code = rows_code(&outs);
    Ok(Report { table, json: json!({ "rows": rows_json }), code })
}

pub const SIMULATE_HEADER: [&str; 20] = [
    "n", "r", "gamma", "reps", "points", "seed", "radius", "mean_est", "mean_ci", "mean_exact", "mean_tol", "mean_pass",
    "var_est", "var_ci", "var_exact", "var_tol", "var_pass", "bias_mean", "bias_second", "result",
];

pub fn simulate(a: &SimulateArgs) -> anyhow::Result<Report> {
    let res = Resolved::from_model(&a.model)?;
    let seed = require(a.seed, "seed")?;
    let p = &res.params;
    let reps = a.reps.unwrap_or(10_000);
    let m = a.points.unwrap_or(100_000);
    let eps = a.eps_bias.unwrap_or(DEFAULT_EPS_BIAS);
    let run = simulator::run_simulation_detailed(p, reps, m, eps, seed)?;
    let exact = exact::variance(p, &QuadConfig::default())?;
    if !exact.converged {
        return Err(Error::NoConvergence("exact variance for cross-validation").into());
    }
    let s = &run.summary;
    let cv = simulator::cross_validate(s, res.mean().to_f64(), exact.variance.to_f64(), exact.quad_error);

    if let Some(path) = &a.volumes {
        let mut vt = Table::new(&["rep", "volume", "error", "planes"]);
        for v in &run.volumes {
            vt.push(vec![v.rep.to_string(), num(v.volume), num(v.error), v.planes.to_string()]);
        }
        vt.write_file(path)?;
    }

    let verdict = if cv.pass() { "PASS" } else { "FAIL" };
    let mut table = Table::new(&SIMULATE_HEADER);
    table.push(vec![
        p.n().to_string(),
        num(p.r()),
        num(p.gamma()),
        s.reps.to_string(),
        s.points.to_string(),
        s.seed.to_string(),
        num(s.radius),
        num(s.mean_est),
        num(s.mean_ci_half_width),
        num(cv.mean.exact),
        num(cv.mean.tolerance),
        cv.mean.pass.to_string(),
        num(s.var_est),
        num(s.var_ci_half_width),
        num(cv.variance.exact),
        num(cv.variance.tolerance),
        cv.variance.pass.to_string(),
        num(s.truncation_bias_bound_mean),
        num(s.truncation_bias_bound_second),
        verdict.to_string(),
    ]);
    let json = json!({ "n": p.n(), "r": p.r(), "gamma": p.gamma(), "summary": s, "cross_validation": cv, "result": verdict });
    let code = if cv.pass() { EXIT_OK } else { EXIT_CROSS_VALIDATION };
    Ok(Report { table, json, code })
}

pub fn asympt(a: &AsymptArgs) -> anyhow::Result<Report> {
    let ratio = a.a.unwrap_or(1.0);
    let lambda = a.lambda.unwrap_or(1.0);
    let spec = RegimeSpec::new(ExponentRule::Proportional(ratio), IntensityRule::Calibrated(lambda))?;
    let cfg = quad_config(&a.quad)?;
    let rows = regime_report(&spec, a.n_min.unwrap_or(2), a.n_max.unwrap_or(24), &cfg)?;
    let q = decay_base(ratio)?;
    let mut table = Table::new(&[
        "n", "r", "gamma", "mean", "var", "var_lower", "var_upper", "k2_lower", "k2_upper", "ratio_step1", "ratio_step2",
        "predicted_step1", "predicted_step2", "decay_base", "status",
    ]);
    let mut code = EXIT_OK;
    for row in &rows {
        let v = row.variance.as_ref();
        let status = match &row.status {
            RowStatus::Ok => String::from("ok"),
            RowStatus::NotConverged => {
                code = code.max(EXIT_NOT_CONVERGED);
                String::from("not_converged")
            }
            RowStatus::BoundsOnly => String::from("bounds_only"),
            RowStatus::Failed(msg) => {
                code = EXIT_FAILURE;
                format!("failed: {msg}")
            }
        };
        // the calibration fixes the mean at 1/λ
        let mean = row.mean.map(|_| LogValue::from_f64(1.0 / lambda));
        table.push(vec![
            row.n.to_string(),
            num(row.r),
            num(row.gamma),
            opt_log(mean),
            opt_log(v.map(|v| v.variance)),
            opt_log(v.map(|v| v.sandwich_lower)),
            opt_log(v.map(|v| v.sandwich_upper)),
            opt_log(row.k2_lower),
            opt_log(row.k2_upper),
            opt_num(row.ratio_step1),
            opt_num(row.ratio_step2),
            opt_num(row.predicted_step1),
            opt_num(row.predicted_step2),
            num(q),
            status,
        ]);
    }
    let json = json!({ "a": ratio, "lambda": lambda, "decay_base": q, "rows": rows });
    Ok(Report { table, json, code })
}

pub fn calibrate(a: &CalibrateArgs) -> anyhow::Result<Report> {
    let n = require(a.n, "n")?;
    let r = require(a.r, "r")?;
    let lambda = require(a.lambda, "lambda")?;
    let g = exact::calibrated_intensity_log(n, r, lambda).context("calibrating the intensity")?;
    let mut table = Table::new(&["n", "r", "lambda", "gamma", "ln_gamma", "mean"]);
    table.push(vec![n.to_string(), num(r), num(lambda), log_num(g), num(g.ln()), num(1.0 / lambda)]);
    let json = json!({ "n": n, "r": r, "lambda": lambda, "gamma": log_json(g), "mean": 1.0 / lambda });
    Ok(Report { table, json, code: EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_rules() {
        assert_eq!(parse_r_rule("n").unwrap(), ExponentRule::Proportional(1.0));
        assert_eq!(parse_r_rule("0.5n").unwrap(), ExponentRule::Proportional(0.5));
        assert_eq!(parse_r_rule("2*n").unwrap(), ExponentRule::Proportional(2.0));
        assert_eq!(parse_r_rule("1").unwrap(), ExponentRule::FixedR(1.0));
        assert!(parse_r_rule("xn").is_err());
    }

    #[test]
    fn grid_pairs() {
        assert_eq!(parse_pair("3:2.5").unwrap(), (3, 2.5));
        assert!(parse_pair("3").is_err());
    }

    #[test]
    fn default_fig1_grid() {
        let a = SweepArgs::default();
        let g = sweep_grid(&a).unwrap();
        assert_eq!(g.len(), 3 * 101);
        assert_eq!(g[0], (2, 0.5));
        assert_eq!(g[g.len() - 1], (4, 100.0));
    }

    #[test]
    fn moments_with_lambda_is_exactly_one() {
        let m = ModelArgs { n: Some(2), r: Some(1.0), gamma: None, lambda: Some(1.0) };
        let rep = moments(&MomentsArgs { model: m, k: None }).unwrap();
        assert_eq!(rep.table.rows[0][4], "1");
    }
}
