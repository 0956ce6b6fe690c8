use std::path::Path;
use std::process::Command;

use nondipole_tdse::config::parse_config;
use nondipole_tdse::table::read_table;

const BIN: &str = env!("CARGO_BIN_EXE_nondipole-tdse");

const SMALL: &str = r#"
model = "first_order"

[pulse]
shape = "sin2"
omega = 3.5
e0 = 1.0
n_cycles = 2

[basis]
r_max = 40
l_max = 3
m_max = 1
e_cut = 10
symmetry = "reflection_even"

[propagator]
steps_per_cycle = 50

[outputs]
observables = ["ionization", "energy_spectrum", "angular_distribution", "m_population"]
energy_max = 8
n_theta = 12
n_phi = 8
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("run.json")).unwrap()).unwrap()
}

fn checksums(v: &serde_json::Value) -> Vec<String> {
    let mut out: Vec<String> = v["tables"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["sha256"].as_str().unwrap().to_string())
        .collect();
    for job in v["jobs"].as_array().unwrap() {
        for t in job["output"]["tables"].as_array().unwrap() {
            out.push(t["sha256"].as_str().unwrap().to_string());
        }
    }
    out
}

#[test]
fn validate_reports_positions_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "good.toml", SMALL);
    let (code, stdout, _) = run(&["validate", good.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("n_breakpoints = 161"), "{stdout}");

    let bad = write(dir.path(), "bad.toml", &SMALL.replace("e0 = 1.0", "e0 = 1.0\nintensity = 1e16"));
    let (code, _, stderr) = run(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line 8"), "{stderr}");

    let (code, _, _) = run(&["run", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn runs_are_deterministic_and_tables_match_their_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let (code, _, stderr) = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert_eq!(code, 0, "{stderr}");
    }
    let (sa, sb) = (summary(&a), summary(&b));
    assert_eq!(checksums(&sa), checksums(&sb));
    assert_eq!(checksums(&sa).len(), 4);

    let job = &sa["jobs"][0]["output"];
    for t in job["tables"].as_array().unwrap() {
        let table = read_table(Path::new(t["path"].as_str().unwrap())).unwrap();
        assert_eq!(table.render().unwrap().1, t["sha256"].as_str().unwrap());
    }
    let p_ion = job["ionization_probability"].as_f64().unwrap();
    assert!(p_ion > 0.0 && p_ion < 0.01, "{p_ion}");
    assert!((job["final_norm"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(job["gauge_boundary"]["u_is_identity"], true);

    let ion = read_table(&a.join("ionization_first_order.csv")).unwrap();
    assert_eq!(ion.columns, ["e0_au", "p_ion"]);
    assert_eq!(ion.rows, vec![vec![1.0, p_ion]]);
    let dpde = read_table(&a.join("dpde.csv")).unwrap();
    assert_eq!(&dpde.columns[..3], ["energy_au", "dpde_total", "dpde_l0"]);
}

#[test]
fn resolved_echo_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let a = dir.path().join("a");
    assert_eq!(run(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).0, 0);
    let sa = summary(&a);
    let echo = sa["jobs"][0]["resolved_config"].as_str().unwrap();
    parse_config(echo).unwrap();
    let cfg2 = write(dir.path(), "echo.toml", echo);
    let b = dir.path().join("b");
    assert_eq!(run(&["run", cfg2.to_str().unwrap(), "--out", b.to_str().unwrap()]).0, 0);
    let sb = summary(&b);
    assert_eq!(sa["jobs"][0]["config_hash"], sb["jobs"][0]["config_hash"]);
    assert_eq!(checksums(&sa), checksums(&sb));
}

#[test]
fn failing_sweep_point_leaves_siblings_intact() {
    let dir = tempfile::tempdir().unwrap();
    // A two-vector Krylov space cannot reach the tolerance once the field is on.
    let text = SMALL.replace("steps_per_cycle = 50", "steps_per_cycle = 50\nkrylov_dim_max = 2")
        + "\n[sweep]\nparameter = \"e0\"\nvalues = [0.0, 50.0]\n";
    let cfg = write(dir.path(), "s.toml", &text);
    let out = dir.path().join("o");
    let (code, _, stderr) = run(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{stderr}");
    let s = summary(&out);
    let jobs = s["jobs"].as_array().unwrap();
    assert!(jobs[0]["error"].is_null());
    assert!(jobs[0]["output"]["ionization_probability"].as_f64().unwrap().abs() < 1e-12);
    assert!(jobs[1]["output"].is_null());
    assert_eq!(jobs[1]["error"]["numerical"], true);
    let ion = read_table(&out.join("ionization_first_order.csv")).unwrap();
    assert_eq!(ion.rows.len(), 1);
    assert!(out.join("job_000_first_order/dpde.csv").exists());
}

#[test]
fn checkpoint_post_processing_matches_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("steps_per_cycle = 50", "steps_per_cycle = 50\ncheckpoint_every = 25");
    let cfg = write(dir.path(), "c.toml", &text);
    let a = dir.path().join("a");
    assert_eq!(run(&["run", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]).0, 0);
    let b = dir.path().join("b");
    let cp = a.join("state.ndts");
    let (code, stdout, stderr) = run(&["spectrum", cp.to_str().unwrap(), cfg.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code, 0, "{stderr}");
    let s = summary(&a);
    let p = s["jobs"][0]["output"]["ionization_probability"].as_f64().unwrap();
    assert!(stdout.contains(&format!("P_ion = {p:.8}")), "{stdout}");
    let ta = read_table(&a.join("dpde.csv")).unwrap();
    let tb = read_table(&b.join("dpde.csv")).unwrap();
    assert_eq!(ta.rows, tb.rows);

    // A checkpoint is refused for a different pulse.
    let other = write(dir.path(), "o.toml", &text.replace("e0 = 1.0", "e0 = 2.0"));
    let (code, _, _) = run(&["spectrum", cp.to_str().unwrap(), other.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(code, 2);
}
