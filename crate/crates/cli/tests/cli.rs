use std::process::{Command, Output};

fn quorum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quorum"))
        .args(args)
        .env_remove("QUORUM_SEED")
        .output()
        .expect("run quorum")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data lines (header comments dropped) split into fields.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn continuous_self_matches_closed_form() {
    let o = quorum(&["channel", "--b", "0", "--mode", "continuous-self"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r[0][4], "mean_count");
    let v: f64 = r[1][4].parse().unwrap();
    // Integrating the steady point-source profile (q/2πD)K0(r·sqrt(k/D)) over
    // the receiver disk gives N = (q/k)(1 − α K1(α)) with α = R0·sqrt(k/D).
    let (q, k, d, r0) = (1000.0f64, 10.0f64, 5.5e-10f64, 0.757e-6f64);
    let a = r0 * (k / d).sqrt();
    // K1 by its integral representation ∫_0^∞ cosh(t) e^{−a cosh t} dt.
    let n = 200_000;
    let h = 30.0 / n as f64;
    let k1: f64 = (0..n)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            t.cosh() * (-a * t.cosh()).exp() * h
        })
        .sum();
    let want = q / k * (1.0 - a * k1);
    assert!((v - want).abs() / want < 1e-6, "{v} vs {want}");
}

#[test]
fn empty_sweep_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[sweep]\nparam = \"eta\"\nvalues = []\n").unwrap();
    let o = quorum(&["stats", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = quorum(&["stats", "--sweep", "nonsense", "--values", "1,2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    // Missing time for a time-dependent mode.
    assert_eq!(quorum(&["channel", "--mode", "impulse"]).status.code(), Some(2));
    // Negative diffusion.
    assert_eq!(quorum(&["stats", "--d", "-1"]).status.code(), Some(2));
    // Unwritable output.
    let o = quorum(&["channel", "--mode", "continuous-self", "-o", "/nonexistent-dir/x.csv"]);
    assert_eq!(o.status.code(), Some(4));
    // Unknown flag.
    assert_eq!(quorum(&["stats", "--bogus"]).status.code(), Some(2));
}

#[test]
fn sweep_prepends_a_column() {
    let o = quorum(&["stats", "--eta", "2", "--sweep", "r1_um", "--values", "50,150"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r[0][0], "r1_um");
    assert_eq!(r.len(), 5);
    assert_eq!(r[1][0], "50");
    assert_eq!(r[4][0], "150");
}

#[test]
fn output_file_embeds_config_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("stats.csv");
    let o = quorum(&["stats", "--eta", "3", "--seed", "11", "-o", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let cfg_line = text.lines().find(|l| l.starts_with("# config: ")).expect("config header");
    let cfg: serde_json::Value = serde_json::from_str(&cfg_line["# config: ".len()..]).unwrap();
    assert_eq!(cfg["seed"], 11);
    assert_eq!(cfg["env"]["eta"], 3);
    let res = text.lines().find(|l| l.starts_with("# resolved: ")).expect("resolved header");
    let res: serde_json::Value = serde_json::from_str(&res["# resolved: ".len()..]).unwrap();
    assert_eq!(res["env"]["threshold"], 3);
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("stats.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 11);
    assert_eq!(m["tool"], "quorum");
}

#[test]
fn json_output_parses() {
    let o = quorum(&["coop-prob", "--x", "25", "--y", "25", "--eta", "3", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    let p: Vec<f64> = v["rows"].as_array().unwrap().iter().map(|r| r[3].as_f64().unwrap()).collect();
    assert!(p.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn flags_override_file_and_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 5\n[env]\neta = 4\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_quorum"))
        .args(["stats", "--config", cfg.to_str().unwrap(), "--eta", "2"])
        .env("QUORUM_SEED", "9")
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    let r = rows(&text);
    assert_eq!(r.len(), 3);
    assert!(text.contains("\"seed\":9"));
}

#[test]
fn verify_is_deterministic_and_passes() {
    let a = quorum(&["verify", "--seed", "7"]);
    let b = quorum(&["verify", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn injected_variance_fails_calibration() {
    let o = quorum(&["verify", "--seed", "7", "--inject-variance-scale", "1.1"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("[FAIL] Brownian step variance")), "{text}");
}

#[test]
fn figure_presets_emit_documented_columns() {
    let o = quorum(&["figure", "8", "--realizations", "20", "--eta", "2"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(
        r[0],
        ["r1_um", "eta", "analytic_exact", "analytic_approx", "sim_mean", "ci_low", "ci_high"]
    );
    assert_eq!(r.len(), 1 + 3 * 2);
    let o = quorum(&["figure", "7", "--realizations", "1"]);
    assert!(o.status.success());
    assert_eq!(rows(&stdout(&o))[0], ["x_um", "y_um", "obs", "cooperator"]);
}
