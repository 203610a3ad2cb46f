//! Black-box tests of the command-line binary: output formats, exit
//! codes, and byte-exact reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn distopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_distopt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const TRACE_HEADER: &str =
    "iteration,comm_rounds,oracle_calls_max,primal_gap,consensus_residual,dual_gap_witness";

fn base_config(graph: &str, algorithm: &str, extra: &str) -> String {
    format!(
        r#"{{
  "problem": {{ "family": "quadratic", "n": 1, "seed": 2, "spread": 1.0, "scale_min": 1.0, "scale_max": 2.0 }},
  "graph": {graph},
  "algorithm": {algorithm}{extra}
}}"#
    )
}

#[test]
fn spectrum_reports_cycle_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &base_config(
            r#"{ "family": "cycle", "m": 4 }"#,
            r#"{ "variant": "case1", "epsilon": 1e-3 }"#,
            "",
        ),
    );
    let out = distopt(&["spectrum", "--config", &cfg]);
    assert!(out.status.success());
    let line = String::from_utf8(out.stdout).unwrap();
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|kv| kv.split('=').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!((vals[0] - 4.0).abs() < 1e-9, "{line}");
    assert!((vals[1] - 2.0).abs() < 1e-9, "{line}");
    assert!((vals[2] - 2.0).abs() < 1e-9, "{line}");
}

#[test]
fn run_writes_trace_and_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &base_config(
            r#"{ "family": "path", "m": 2 }"#,
            r#"{ "variant": "case1", "epsilon": 1e-8 }"#,
            "",
        ),
    );
    let out_dir = dir.path().join("out");
    let out = distopt(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), TRACE_HEADER);
    let gaps: Vec<f64> = lines
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(gaps.len() >= 2);
    // the (signed) primal gap trends toward zero and ends below the target
    assert!(*gaps.last().unwrap() <= 1e-8, "final gap {}", gaps.last().unwrap());
    assert!(gaps.last().unwrap().abs() < gaps[0].abs());

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["certificate"]["satisfied"], true);
    assert_eq!(summary["violation_count"], 0);
    assert_eq!(
        summary["comm_rounds_total"].as_u64().unwrap(),
        summary["N"].as_u64().unwrap()
    );
}

#[test]
fn identical_configs_reproduce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &base_config(
            r#"{ "family": "cycle", "m": 6 }"#,
            r#"{ "variant": "case1", "epsilon": 1e-6 }"#,
            "",
        ),
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(distopt(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(distopt(&["run", "--config", &cfg, "--out", b.to_str().unwrap()]).status.success());
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    let tb = std::fs::read(b.join("trace.csv")).unwrap();
    assert_eq!(ta, tb);
    let sa = std::fs::read(a.join("summary.json")).unwrap();
    let sb = std::fs::read(b.join("summary.json")).unwrap();
    assert_eq!(sa, sb);
}

#[test]
fn truncated_run_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &base_config(
            r#"{ "family": "path", "m": 2 }"#,
            r#"{ "variant": "case1", "epsilon": 1e-8, "N": 2 }"#,
            "",
        ),
    );
    let out_dir = dir.path().join("out");
    let out = distopt(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_tabulates_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cfg.json",
        &base_config(
            r#"{ "family": "cycle", "m": 8 }"#,
            r#"{ "variant": "case1", "epsilon": 1e-6 }"#,
            r#",
  "sweep": { "sizes": [32, 8, 16] }"#,
        ),
    );
    let out_dir = dir.path().join("out");
    let out = distopt(&["sweep", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let sweep = std::fs::read_to_string(out_dir.join("sweep.csv")).unwrap();
    let mut lines = sweep.lines();
    assert_eq!(lines.next().unwrap(), "m,chi,rounds_to_certificate");
    let rows: Vec<(usize, f64, usize)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    // rows are ordered by size regardless of the config order
    assert_eq!(rows.iter().map(|r| r.0).collect::<Vec<_>>(), vec![8, 16, 32]);
    for w in rows.windows(2) {
        assert!(w[1].1 > w[0].1, "chi grows with the cycle size");
        assert!(w[1].2 >= w[0].2, "rounds nondecreasing in m");
    }

    // the chi column agrees with the spectrum command at each size
    for (m, chi, _) in rows {
        let cfg_m = write_config(
            dir.path(),
            &format!("cfg{m}.json"),
            &base_config(
                &format!(r#"{{ "family": "cycle", "m": {m} }}"#),
                r#"{ "variant": "case1", "epsilon": 1e-6 }"#,
                "",
            ),
        );
        let out = distopt(&["spectrum", "--config", &cfg_m]);
        let line = String::from_utf8(out.stdout).unwrap();
        let spec_chi: f64 = line
            .split_whitespace()
            .find(|kv| kv.starts_with("chi="))
            .unwrap()
            .split('=')
            .nth(1)
            .unwrap()
            .parse()
            .unwrap();
        assert!((chi - spec_chi).abs() <= 1e-9 * spec_chi, "m={m}: {chi} vs {spec_chi}");
    }
}

#[test]
fn invalid_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");

    // unknown field
    let bad = write_config(
        dir.path(),
        "bad.json",
        &base_config(
            r#"{ "family": "cycle", "m": 4 }"#,
            r#"{ "variant": "case1", "epsilon": 1e-3, "bogus": 1 }"#,
            "",
        ),
    );
    let out = distopt(&["run", "--config", &bad, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    // single-node graph cannot carry a consensus constraint
    let tiny = write_config(
        dir.path(),
        "tiny.json",
        &base_config(
            r#"{ "family": "cycle", "m": 1 }"#,
            r#"{ "variant": "case1", "epsilon": 1e-3 }"#,
            "",
        ),
    );
    let out = distopt(&["spectrum", "--config", &tiny]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());

    // missing config file
    let out = distopt(&["run", "--config", dir.path().join("nope.json").to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
