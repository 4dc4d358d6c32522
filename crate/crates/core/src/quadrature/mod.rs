//! Adaptive Gauss–Kronrod integration in one dimension and iterated over a
//! rectangle.

mod rules;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::LogValue;
use rules::{KronrodTable, GK15, GK31};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    GaussKronrod15,
    GaussKronrod31,
}

impl Rule {
    fn table(self) -> &'static KronrodTable {
        match self {
            Rule::GaussKronrod15 => &GK15,
            Rule::GaussKronrod31 => &GK31,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub rule: Rule,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-9, abs_tol: 0.0, max_subdivisions: 2000, rule: Rule::GaussKronrod15 }
    }
}

impl QuadConfig {
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        QuadConfig { rel_tol, ..self }
    }

    fn validate(&self) -> Result<()> {
        let ok_rel = self.rel_tol > 0.0 && self.rel_tol.is_finite();
        let ok_abs = self.abs_tol > 0.0 && self.abs_tol.is_finite();
        if !(ok_rel || ok_abs) || self.rel_tol < 0.0 || self.abs_tol < 0.0 {
            return Err(Error::InvalidParams(format!(
                "quadrature tolerances rel_tol = {}, abs_tol = {}: need one positive, both non-negative",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParams("max_subdivisions must be positive".into()));
        }
        Ok(())
    }

    fn tolerance(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Which ends of an interval get the geometric initial subdivision
/// `a + (b - a) 2^{-j}`, `j = 1..10`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Grading {
    pub lower: bool,
    pub upper: bool,
}

impl Grading {
    pub const NONE: Grading = Grading { lower: false, upper: false };
    pub const BOTH: Grading = Grading { lower: true, upper: true };
}

const GRADING_LEVELS: i32 = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
    pub grading: Grading,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        Interval { a, b, grading: Grading::NONE }
    }

    pub fn graded(a: f64, b: f64, grading: Grading) -> Self {
        Interval { a, b, grading }
    }

    fn validate(&self) -> Result<()> {
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::InvalidParams(format!(
                "integration interval [{}, {}] must be finite with a < b",
                self.a, self.b
            )));
        }
        Ok(())
    }

    fn initial_points(&self) -> Vec<f64> {
        let (a, b) = (self.a, self.b);
        let w = b - a;
        let mut pts = vec![a, b];
        for j in 1..=GRADING_LEVELS {
            let step = w * 2f64.powi(-j);
            if self.grading.lower {
                pts.push(a + step);
            }
            if self.grading.upper {
                pts.push(b - step);
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: LogValue,
    /// Saturates at `f64::MAX` when the value itself is not representable.
    pub abs_error_estimate: f64,
    pub rel_error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl QuadResult {
    fn from_linear(value: f64, abs_err: f64, evaluations: usize, converged: bool) -> Self {
        let rel = if value == 0.0 {
            if abs_err == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            abs_err / value.abs()
        };
        QuadResult {
            value: LogValue::from_f64(value),
            abs_error_estimate: abs_err,
            rel_error_estimate: rel,
            evaluations,
            converged,
        }
    }

    /// Plain-real value, saturating on overflow.
    pub fn estimate(&self) -> f64 {
        self.value.to_f64()
    }

    /// Multiplies value and error by `factor`, keeping the relative error.
    pub fn scaled(&self, factor: LogValue) -> Self {
        let value = self.value * factor;
        let abs_err = if self.value.is_zero() {
            self.abs_error_estimate * factor.abs().to_f64()
        } else {
            self.rel_error_estimate * value.abs().to_f64()
        };
        QuadResult { value, abs_error_estimate: abs_err.min(f64::MAX), ..*self }
    }
}

/// Integrates `f` over `[a, b]`.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    integrate_1d_graded(f, Interval::new(a, b), cfg)
}

/// Integrates `f` over an interval with optional endpoint grading.
pub fn integrate_1d_graded<F>(f: F, interval: Interval, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    interval.validate()?;
    let g = |x: f64| -> Result<[f64; 2]> {
        let y = f(x);
        if y.is_finite() {
            Ok([y, 0.0])
        } else {
            Err(Error::NonFiniteIntegrand { x, value: y })
        }
    };
    let out = adapt(g, &interval, cfg)?;
    Ok(QuadResult::from_linear(out.value[0], out.error, out.evaluations, out.converged))
}

/// Iterated integral `∫_outer ∫_inner f(x, y) dx dy`, where `x` runs over
/// `inner` and `y` over `outer`.
///
/// Each inner pass runs at one tenth of the outer tolerance. Inner error
/// estimates are integrated along with the values and added to the outer
/// estimate.
pub fn integrate_2d_iterated<F>(f: F, inner: Interval, outer: Interval, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64, f64) -> f64,
{
    cfg.validate()?;
    inner.validate()?;
    outer.validate()?;
    let inner_cfg = QuadConfig {
        rel_tol: cfg.rel_tol / 10.0,
        abs_tol: cfg.abs_tol / (10.0 * (outer.b - outer.a)),
        ..*cfg
    };
    let inner_evals = std::cell::Cell::new(0usize);
    let inner_ok = std::cell::Cell::new(true);
    let g = |y: f64| -> Result<[f64; 2]> {
        let h = |x: f64| -> Result<[f64; 2]> {
            let v = f(x, y);
            if v.is_finite() {
                Ok([v, 0.0])
            } else {
                Err(Error::NonFiniteIntegrand { x, value: v })
            }
        };
        let r = adapt(h, &inner, &inner_cfg)?;
        inner_evals.set(inner_evals.get() + r.evaluations);
        if !r.converged {
            inner_ok.set(false);
        }
        Ok([r.value[0], r.error])
    };
    let out = adapt(g, &outer, cfg)?;
    let carried = out.value[1].abs();
    let total_err = out.error + carried;
    let converged = out.converged && inner_ok.get();
    Ok(QuadResult::from_linear(out.value[0], total_err, inner_evals.get(), converged))
}

struct Adapted {
    value: [f64; 2],
    error: f64,
    evaluations: usize,
    converged: bool,
}

#[derive(Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: [f64; 2],
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Kahan–Babuška accumulator.
#[derive(Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

// Adaptive bisection over a two-channel integrand. Channel 0 drives the error
// control; channel 1 is integrated with the same nodes.
fn adapt<G>(g: G, interval: &Interval, cfg: &QuadConfig) -> Result<Adapted>
where
    G: Fn(f64) -> Result<[f64; 2]>,
{
    let table = cfg.rule.table();
    let evals_per_panel = 2 * table.nodes.len() - 1;
    let pts = interval.initial_points();

    let mut heap = BinaryHeap::with_capacity(cfg.max_subdivisions.max(pts.len()) + 1);
    let mut value = [0.0; 2];
    let mut error = 0.0;
    let mut evaluations = 0;
    for w in pts.windows(2) {
        let p = panel(&g, table, w[0], w[1])?;
        evaluations += evals_per_panel;
        value[0] += p.value[0];
        value[1] += p.value[1];
        error += p.error;
        heap.push(p);
    }

    let mut converged = false;
    let mut steps = 0usize;
    loop {
        if error <= cfg.tolerance(value[0]) {
            converged = true;
            break;
        }
        if heap.len() >= cfg.max_subdivisions {
            break;
        }
        let worst = heap.pop().expect("non-empty panel heap");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            // Cannot bisect further in floating point.
            heap.push(worst);
            break;
        }
        let left = panel(&g, table, worst.a, mid)?;
        let right = panel(&g, table, mid, worst.b)?;
        evaluations += 2 * evals_per_panel;
        for (c, v) in value.iter_mut().enumerate() {
            *v += left.value[c] + right.value[c] - worst.value[c];
        }
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);

        steps += 1;
        if steps.is_multiple_of(64) {
            (value, error) = resum(&heap);
        }
    }

    (value, error) = resum(&heap);
    if !converged {
        converged = error <= cfg.tolerance(value[0]);
    }
    Ok(Adapted { value, error, evaluations, converged })
}

fn resum(heap: &BinaryHeap<Panel>) -> ([f64; 2], f64) {
    let mut v0 = CompensatedSum::default();
    let mut v1 = CompensatedSum::default();
    let mut e = CompensatedSum::default();
    for p in heap.iter() {
        v0.add(p.value[0]);
        v1.add(p.value[1]);
        e.add(p.error);
    }
    ([v0.total(), v1.total()], e.total())
}

fn panel<G>(g: &G, table: &KronrodTable, a: f64, b: f64) -> Result<Panel>
where
    G: Fn(f64) -> Result<[f64; 2]>,
{
    let n = table.nodes.len();
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let mut fvals = [[0.0f64; 2]; 2 * 16];
    let fc = g(center)?;
    let mut kron = [table.kronrod[0] * fc[0], table.kronrod[0] * fc[1]];
    let mut gauss = table.gauss[0] * fc[0];
    let mut resabs = table.kronrod[0] * fc[0].abs();
    for i in 1..n {
        let dx = half * table.nodes[i];
        let f1 = g(center - dx)?;
        let f2 = g(center + dx)?;
        fvals[2 * i] = f1;
        fvals[2 * i + 1] = f2;
        let w = table.kronrod[i];
        kron[0] += w * (f1[0] + f2[0]);
        kron[1] += w * (f1[1] + f2[1]);
        resabs += w * (f1[0].abs() + f2[0].abs());
        if i % 2 == 0 {
            gauss += table.gauss[i / 2] * (f1[0] + f2[0]);
        }
    }
    let mean = 0.5 * kron[0];
    let mut resasc = table.kronrod[0] * (fc[0] - mean).abs();
    for i in 1..n {
        resasc += table.kronrod[i] * ((fvals[2 * i][0] - mean).abs() + (fvals[2 * i + 1][0] - mean).abs());
    }

    let h = half.abs();
    let value = [kron[0] * half, kron[1] * half];
    let error = rescale_error(((kron[0] - gauss) * half).abs(), resabs * h, resasc * h);
    Ok(Panel { a, b, value, error })
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut err = err;
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    err
}
