use std::path::Path;
use std::process::{Command, Output};

fn swingdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swingdyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn unforced_simulation_decays_to_rest() {
    let out = swingdyn(&[
        "simulate",
        "--eps",
        "0",
        "--beta",
        "0.05",
        "--omega",
        "0.8",
        "--theta0",
        "0.5",
        "--periods",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    let first: f64 = rows[0][1].parse().unwrap();
    let last = rows.last().unwrap();
    let (tau, theta): (f64, f64) = (last[0].parse().unwrap(), last[1].parse().unwrap());
    assert_eq!(first, 0.5);
    assert!((tau - 200.0 * std::f64::consts::PI).abs() < 1e-9);
    // Linear decay rate βω/2 = 0.02 over τ ≈ 628: amplitude below 0.5·e^{-12}.
    assert!(theta.abs() < 1e-4, "theta = {theta}");
}

#[test]
fn homoclinic_curve_minimum() {
    let out = swingdyn(&[
        "melnikov",
        "--kind",
        "homoclinic",
        "--omega-min",
        "0.3",
        "--omega-max",
        "3",
        "--n",
        "200",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 200);
    let (omega, min) = rows
        .iter()
        .map(|r| (r[0].parse::<f64>().unwrap(), r[1].parse::<f64>().unwrap()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    assert!((min - 0.948).abs() < 0.01, "min = {min}");
    assert!((omega - 0.82).abs() < 0.02, "omega = {omega}");
}

#[test]
fn melnikov_table_agrees_with_quadrature() {
    let out = swingdyn(&[
        "melnikov", "--kind", "osc", "--q", "2", "--table", "--check", "--tau-n", "8", "--eps",
        "0.1", "--beta", "0.05", "--omega", "0.8",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = csv_rows(&stdout(&out));
    assert_eq!(rows.len(), 8);
    for r in rows {
        let (m, quad): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!((m - quad).abs() < 1e-8 * (1.0 + m.abs()), "{m} vs {quad}");
    }
}

#[test]
fn averaging_json_back_substitutes() {
    let out = swingdyn(&[
        "averaging",
        "--eps",
        "0.3",
        "--beta",
        "0.05",
        "--r",
        "1",
        "--q",
        "1",
        "--omega",
        "0.1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["s0"].as_f64().unwrap() > 0.0);
    assert_eq!(v["exists"], serde_json::json!(true));
    for branch in ["plus", "minus"] {
        let res = v[branch]["residual"].as_f64().unwrap();
        assert!(res.abs() < 1e-10, "{branch}: {res}");
        assert!(v[branch]["stability"].is_string());
    }
}

#[test]
fn classify_reports_rest_without_forcing() {
    let out = swingdyn(&["classify", "--eps", "0", "--beta", "0.1", "--omega", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["kind"], "equilibrium");
}

#[test]
fn sweep_from_config_writes_all_formats() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("smoke.conf");
    std::fs::write(
        &conf,
        "# smoke grid\nomega = 0.5:1:2\neps = 0:0.01:2\nbeta = 0.05\nhomoclinic = true\n",
    )
    .unwrap();
    let out_dir = dir.path().join("maps");
    let out = swingdyn(&[
        "sweep",
        "--config",
        conf.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
        "--jobs",
        "2",
        "--quiet",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for ext in ["csv", "json", "svg"] {
        assert!(Path::new(&out_dir)
            .join(format!("sweep_0.05_2x2.{ext}"))
            .exists());
    }
    let csv = std::fs::read_to_string(out_dir.join("sweep_0.05_2x2.csv")).unwrap();
    let rows = csv_rows(&csv);
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[2] == "equilibrium"), "{csv}");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("p.conf");
    std::fs::write(&conf, "eps = 0.3\nbeta = 0.05\nomega = 0.1\n").unwrap();
    let out = swingdyn(&[
        "averaging",
        "--config",
        conf.to_str().unwrap(),
        "--eps",
        "0.4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["eps"].as_f64(), Some(0.4));
}

#[test]
fn output_file_and_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.json");
    let out = swingdyn(&[
        "melnikov",
        "--kind",
        "rot",
        "--q",
        "1",
        "--n",
        "5",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 5);
}

#[test]
fn elliptic_self_test_passes() {
    let out = swingdyn(&["elliptic-check"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!stdout(&out).contains("false"));
}

#[test]
fn exit_codes() {
    // Unknown flag, missing flag, domain violation, unknown config key.
    assert_eq!(swingdyn(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        swingdyn(&["simulate", "--eps", "0.1"]).status.code(),
        Some(1)
    );
    let bad = swingdyn(&["simulate", "--eps", "1.5", "--beta", "0", "--omega", "1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("eps"));
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("typo.conf");
    std::fs::write(&conf, "kind = homoclinic\nomgea = 1\n").unwrap();
    let typo = swingdyn(&["melnikov", "--config", conf.to_str().unwrap()]);
    assert_eq!(typo.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&typo.stderr).contains("omgea"));
    // Odd q has no closed form.
    assert_eq!(
        swingdyn(&["melnikov", "--kind", "osc", "--q", "3"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(swingdyn(&["--help"]).status.code(), Some(0));
}

#[test]
fn numerical_failure_exits_two() {
    // A start far beyond the blow-up velocity aborts the integration.
    let out = swingdyn(&[
        "simulate",
        "--eps",
        "0.1",
        "--beta",
        "0",
        "--omega",
        "1",
        "--v0",
        "2000",
        "--periods",
        "1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn shipped_recipes_are_accepted() {
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&docs).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if !name.ends_with(".conf") {
            continue;
        }
        seen += 1;
        let conf = path.to_str().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let out = if name.starts_with("sweep_") {
            // Shrink the grid; everything else comes from the recipe.
            swingdyn(&[
                "sweep",
                "--config",
                conf,
                "--omega",
                "0.3:0.4:2",
                "--eps",
                "0:0.01:2",
                "--out-dir",
                dir.path().to_str().unwrap(),
                "--formats",
                "json",
                "--quiet",
            ])
        } else {
            let sub = name.split('_').next().unwrap();
            swingdyn(&[sub, "--config", conf])
        };
        assert_eq!(
            out.status.code(),
            Some(0),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    assert!(seen >= 4);
}
