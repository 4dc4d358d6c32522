use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::Context;
use zerocell::LogValue;

/// A CSV table with a fixed header.
#[derive(Debug, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> anyhow::Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(&self.header)?;
        for row in &self.rows {
            wtr.write_record(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_file(&self, path: &Path) -> anyhow::Result<()> {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        self.write_to(io::BufWriter::new(f))
    }
}

/// Shortest round-trip decimal, switching to exponent form outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Linear value, or `exp(<ln>)` when it does not fit in an `f64`.
pub fn log_num(v: LogValue) -> String {
    match v.try_to_f64() {
        Some(x) => num(x),
        None => {
            let s = if v.sign() < 0 { "-" } else { "" };
            format!("{s}exp({})", num(v.log_abs()))
        }
    }
}

pub fn opt_log(v: Option<LogValue>) -> String {
    v.map(log_num).unwrap_or_default()
}

/// JSON-friendly form of a possibly unrepresentable value.
pub fn log_json(v: LogValue) -> serde_json::Value {
    match v.try_to_f64() {
        Some(x) => serde_json::json!(x),
        None => serde_json::json!({ "sign": v.sign(), "ln_abs": v.log_abs() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(num(15.5), "15.5");
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1e-20), "1e-20");
        assert_eq!(num(2.5e300), "2.5e300");
        assert_eq!(log_num(LogValue::from_ln(1000.0)), "exp(1000)");
        assert_eq!(log_num(-LogValue::from_ln(1000.0)), "-exp(1000)");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        let mut buf = Vec::new();
        t.write_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
