mod common;

use common::{check_golden, code, column, parse_csv, stdout, zerocell};

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

#[test]
fn help_for_every_subcommand() {
    for sub in ["moments", "variance", "sweep", "simulate", "asympt", "calibrate"] {
        let out = zerocell(&[sub, "--help"]);
        assert_eq!(code(&out), 0, "{sub}");
        assert!(stdout(&out).contains("Usage"));
    }
}

#[test]
fn moments_mean_is_pi_cubed_over_two() {
    let out = zerocell(&["moments", "--n", "2", "--r", "1", "--gamma", "1", "--k", "1"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = parse_csv(&stdout(&out));
    let mean = num(&rows[0][column(&h, "mean")]);
    assert!((mean - std::f64::consts::PI.powi(3) / 2.0).abs() < 1e-12);
}

#[test]
fn moments_second_order_bounds() {
    let out = zerocell(&["moments", "--n", "2", "--r", "1", "--gamma", "1", "--k", "2"]);
    let (h, rows) = parse_csv(&stdout(&out));
    let lo = num(&rows[0][column(&h, "moment_lower")]);
    let hi = num(&rows[0][column(&h, "moment_upper")]);
    let mean = num(&rows[0][column(&h, "mean")]);
    assert!((lo - mean * mean).abs() < 1e-9 * lo);
    // Γ(5) κ² L⁴ with L = π/2
    let expected = 24.0 * std::f64::consts::PI.powi(2) * (std::f64::consts::PI / 2.0).powi(4);
    assert!((hi - expected).abs() < 1e-9 * hi);
}

#[test]
fn moments_calibrated_mean_is_one() {
    let out = zerocell(&["moments", "--n", "3", "--r", "2.5", "--lambda", "1"]);
    let (h, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows[0][column(&h, "mean")], "1");
}

#[test]
fn moments_overflow_is_marked() {
    let out = zerocell(&["moments", "--n", "2", "--r", "0.01", "--gamma", "1e-3", "--k", "3"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = parse_csv(&stdout(&out));
    assert!(rows[0][column(&h, "moment_upper")].starts_with("exp("));
    assert!(num(&rows[0][column(&h, "ln_moment_upper")]) > 709.0);
}

#[test]
fn usage_errors_exit_2() {
    let cases: &[&[&str]] = &[
        &["moments", "--n", "2", "--r", "1"],
        &["moments", "--n", "2", "--r", "1", "--gamma", "1", "--lambda", "1"],
        &["moments", "--n", "1", "--r", "1", "--gamma", "1"],
        &["moments", "--n", "2", "--r", "-1", "--gamma", "1"],
        &["variance", "--n", "two"],
        &["simulate", "--n", "2", "--r", "1", "--gamma", "1", "--reps", "100"],
        &["simulate", "--n", "2", "--r", "1", "--gamma", "1", "--reps", "99", "--seed", "1"],
        &["sweep", "--mode", "custom"],
        &["sweep", "--mode", "custom", "--grid", "2-1"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(code(&zerocell(args)), 2, "{args:?}");
    }
}

#[test]
fn nonconvergence_exits_3_with_row() {
    let out = zerocell(&["variance", "--n", "2", "--r", "1", "--gamma", "1", "--max-subdivisions", "1"]);
    assert_eq!(code(&out), 3);
    let (h, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows[0][column(&h, "converged")], "false");
}

#[test]
fn unlucky_sample_exits_4() {
    // 100 replications leave the variance estimate outside 3 standard errors for this seed
    let out = zerocell(&["simulate", "--n", "2", "--r", "2", "--gamma", "1", "--reps", "100", "--seed", "22"]);
    assert_eq!(code(&out), 4);
    let (h, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows[0][column(&h, "result")], "FAIL");
}

#[test]
fn simulate_passes_cross_validation() {
    let out = zerocell(&["simulate", "--n", "2", "--r", "1", "--gamma", "1", "--reps", "10000", "--seed", "42"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let (h, rows) = parse_csv(&stdout(&out));
    assert_eq!(rows[0][column(&h, "result")], "PASS");
}

#[test]
fn variance_row_has_sandwich() {
    let out = zerocell(&["variance", "--n", "2", "--r", "1", "--gamma", "1"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = parse_csv(&stdout(&out));
    let r = &rows[0];
    let var = num(&r[column(&h, "var")]);
    assert!(num(&r[column(&h, "var_lower")]) <= var && var <= num(&r[column(&h, "var_upper")]));
    assert!((var - 309.017955077776).abs() < 1e-8 * var);
    assert_eq!(r[column(&h, "converged")], "true");
}

#[test]
fn variance_decays_with_calibration() {
    let get = |n: &str| {
        let out = zerocell(&["variance", "--n", n, "--r", n, "--lambda", "1"]);
        let (h, rows) = parse_csv(&stdout(&out));
        num(&rows[0][column(&h, "var")])
    };
    assert!(get("10") < get("6"));
}

#[test]
fn variance_large_exponent_stays_finite() {
    let out = zerocell(&["variance", "--n", "2", "--r", "10000", "--gamma", "1"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = parse_csv(&stdout(&out));
    let var = num(&rows[0][column(&h, "var")]);
    assert!(var > 0.0 && var < 1e-6);
}

#[test]
fn lambda_matches_explicit_gamma() {
    let cal = zerocell(&["calibrate", "--n", "3", "--r", "2", "--lambda", "1"]);
    let (h, rows) = parse_csv(&stdout(&cal));
    let gamma = rows[0][column(&h, "gamma")].clone();
    let a = parse_csv(&stdout(&zerocell(&["variance", "--n", "3", "--r", "2", "--lambda", "1"]))).1;
    let b = parse_csv(&stdout(&zerocell(&["variance", "--n", "3", "--r", "2", "--gamma", &gamma]))).1;
    for (x, y) in a[0].iter().zip(&b[0]) {
        match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()), "{x} vs {y}"),
            _ => assert_eq!(x, y),
        }
    }
}

#[test]
fn single_point_sweep_reproduces_variance() {
    let sweep = stdout(&zerocell(&["sweep", "--mode", "custom", "--grid", "2:1.5"]));
    let single = stdout(&zerocell(&["variance", "--n", "2", "--r", "1.5", "--gamma", "1"]));
    let (hs, rs) = parse_csv(&sweep);
    let (hv, rv) = parse_csv(&single);
    assert_eq!(hs[..], hv[..hs.len()]);
    assert_eq!(rs[0][..], rv[0][..hs.len()]);
}

#[test]
fn fig1_variance_vanishes_as_r_grows() {
    let rs = "10,20,30,40,50,60,70,80,90,100";
    let out = zerocell(&["sweep", "--mode", "fig1", "--n-values", "2", "--r-values", rs]);
    assert_eq!(code(&out), 0);
    let (h, rows) = parse_csv(&stdout(&out));
    assert_eq!(h.last().unwrap(), "mean_minus_kappa");
    let var: Vec<f64> = rows.iter().map(|r| num(&r[column(&h, "var")])).collect();
    assert!(var.iter().all(|&v| v.is_finite() && v > 0.0));
    assert!(var.windows(2).all(|w| w[1] < w[0]), "{var:?}");
    assert!(var[var.len() - 1] < 0.02 * var[0]);
}

#[test]
fn fig2_calibrated_variance_decreases() {
    let out = zerocell(&["sweep", "--mode", "fig2", "--r-rule", "n", "--lambda", "1", "--n-min", "4", "--n-max", "12"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = parse_csv(&stdout(&out));
    assert_eq!(h.len(), 10);
    let var: Vec<f64> = rows.iter().map(|r| num(&r[column(&h, "var")])).collect();
    assert!(var.windows(2).all(|w| w[1] < w[0]), "{var:?}");
    assert!(rows.iter().all(|r| r[column(&h, "mean")] == "1"));
}

#[test]
fn asympt_columns() {
    let out = zerocell(&["asympt", "--a", "2", "--lambda", "1", "--n-max", "6"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = parse_csv(&stdout(&out));
    for r in &rows {
        assert!((num(&r[column(&h, "decay_base")]) - 27.0 / 64.0).abs() < 1e-15);
        assert_eq!(r[column(&h, "mean")], "1");
    }
}

#[test]
fn asympt_ratio_tracks_prediction() {
    let out = zerocell(&["asympt", "--a", "1", "--lambda", "1", "--n-min", "4", "--n-max", "16"]);
    let (h, rows) = parse_csv(&stdout(&out));
    for r in rows.iter().filter(|r| !r[column(&h, "ratio_step2")].is_empty()) {
        let got = num(&r[column(&h, "ratio_step2")]);
        let want = num(&r[column(&h, "predicted_step2")]);
        assert!((got / want - 1.0).abs() < 0.05, "{got} vs {want}");
    }
}

#[test]
fn simulate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let csv = dir.path().join(format!("{name}.csv"));
        let vol = dir.path().join(format!("{name}_volumes.csv"));
        let out = zerocell(&[
            "simulate", "--n", "3", "--r", "2", "--gamma", "1", "--reps", "150", "--points", "2000", "--seed", "7",
            "--threads", threads, "--out", csv.to_str().unwrap(), "--volumes", vol.to_str().unwrap(),
        ]);
        assert!(matches!(code(&out), 0 | 4));
        (std::fs::read(csv).unwrap(), std::fs::read(vol).unwrap())
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(String::from_utf8(a.1).unwrap().lines().count(), 151);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 2, "r": 1, "lambda": 2, "k": 2, "json": true}"#).unwrap();
    let out = zerocell(&["moments", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["k"], 2);
    assert_eq!(v["mean"], 0.5);
    // a flag intensity replaces the configured one
    let out = zerocell(&["moments", "--config", cfg.to_str().unwrap(), "--gamma", "1", "--k", "1"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["k"], 1);
    assert!((v["mean"].as_f64().unwrap() - std::f64::consts::PI.powi(3) / 2.0).abs() < 1e-12);
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "nonsense": 1}"#).unwrap();
    assert_eq!(code(&zerocell(&["moments", "--config", bad.to_str().unwrap(), "--r", "1", "--gamma", "1"])), 2);
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(code(&zerocell(&["moments", "--config", bad.to_str().unwrap()])), 2);
}

#[test]
fn golden_sweep() {
    let out = zerocell(&["sweep", "--mode", "custom", "--grid", "2:1,2:2,3:2,4:0.5"]);
    assert_eq!(code(&out), 0);
    check_golden("sweep_custom.csv", &stdout(&out));
}

#[test]
fn golden_fig1() {
    let out = zerocell(&["sweep", "--mode", "fig1", "--n-values", "2,3", "--r-values", "1,4"]);
    check_golden("sweep_fig1.csv", &stdout(&out));
}

#[test]
fn golden_simulate() {
    let out = zerocell(&["simulate", "--n", "2", "--r", "1", "--gamma", "1", "--reps", "500", "--seed", "2024"]);
    assert_eq!(code(&out), 0);
    check_golden("simulate_n2_r1.csv", &stdout(&out));
}
