use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_giant-heom"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap()
}

fn write_config(dir: &Path, json: &str) {
    std::fs::write(dir.join("cfg.json"), json).unwrap();
}

const SMALL: &str = r#"{"omega0_tau_over_2pi": 1, "t_max": 20, "n_points": 41,
    "solvers": ["heom", "exact", "redfield"], "output_prefix": "small"}"#;

#[test]
fn meanforce_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["meanforce", "--eta", "0.05", "--beta-list", "1.0,0.5,0.1", "-o", "mf.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(dir.path(), "mf.csv");
    assert_eq!(header(&csv), "beta_omega0,I1,I2,delta_omega,P_ee_star,P_ee_bare");
    let expected = [0.271, 0.378, 0.475];
    for (line, want) in csv.lines().skip(1).zip(expected) {
        let star: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        assert!((star - want).abs() <= 2e-3, "{line}");
    }
}

#[test]
fn compare_writes_csvs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), SMALL);
    let first = run_in(dir.path(), &["compare", "--config", "cfg.json"]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let summary: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
    assert_eq!(summary["deviations"].as_array().unwrap().len(), 3);
    for s in ["heom", "exact"] {
        let csv = read(dir.path(), &format!("small_{s}.csv"));
        assert_eq!(header(&csv), "t,P_ee,Re_P_eg,Im_P_eg,trace_defect");
        assert_eq!(csv.lines().count(), 42);
        assert!(!csv.contains('\r'));
    }
    let red = read(dir.path(), "small_redfield.csv");
    assert_eq!(header(&red), "t,P_ee,Re_P_eg,Im_P_eg,trace_defect,positivity_defect");
    let combined = read(dir.path(), "small_comparison.csv");
    assert!(header(&combined).starts_with("t,P_ee_heom,P_ee_exact,P_ee_redfield"));

    let before: Vec<String> = ["heom", "exact", "redfield", "comparison"]
        .iter()
        .map(|s| read(dir.path(), &format!("small_{s}.csv")))
        .collect();
    let again = bin()
        .current_dir(dir.path())
        .env("GIANT_HEOM_THREADS", "1")
        .args(["compare", "--config", "cfg.json"])
        .output()
        .unwrap();
    assert_eq!(code(&again), 0, "{}", stderr(&again));
    for (s, old) in ["heom", "exact", "redfield", "comparison"].iter().zip(before) {
        assert_eq!(read(dir.path(), &format!("small_{s}.csv")), old, "{s}");
    }
}

#[test]
fn config_errors_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"eta": 0.01, "tau": 3}"#);
    let o = run_in(dir.path(), &["compare", "--config", "cfg.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`tau`"), "{}", stderr(&o));

    write_config(dir.path(), r#"{"beta_omega0": 1.0, "solvers": ["exact"]}"#);
    assert_eq!(code(&run_in(dir.path(), &["compare", "--config", "cfg.json"])), 2);

    assert_eq!(code(&run_in(dir.path(), &["compare", "--config", "missing.json"])), 2);
    assert_eq!(code(&run_in(dir.path(), &["simulate", "--method", "lindblad"])), 2);
    assert_eq!(
        code(&run_in(dir.path(), &["simulate", "--method", "exact", "--preset", "nope"])),
        2
    );
}

#[test]
fn solver_failures_exit_with_code_three() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"omega0_tau_over_2pi": 0, "t_max": 5, "exact_dt": 2.0}"#);
    let o = run_in(dir.path(), &["simulate", "--config", "cfg.json", "--method", "exact"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("exact solver failed"));
}

#[test]
fn unconverged_fit_exits_with_code_four() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"omega0_tau_over_2pi": 1, "eps_r": 1e-9, "fit_points": 12}"#);
    let o = run_in(dir.path(), &["fit", "--config", "cfg.json", "-o", "fit.json"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(dir.path().join("fit.json").exists());
}

#[test]
fn fit_json_feeds_the_heom_solver() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"omega0_tau_over_2pi": 0, "t_max": 10, "n_points": 11}"#);
    let o = run_in(dir.path(), &["fit", "--config", "cfg.json", "-o", "fit.json"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&read(dir.path(), "fit.json")).unwrap();
    let term = &doc["real"]["terms"][0];
    for k in ["c_re", "c_im", "g_re", "g_im"] {
        assert!(term[k].is_number(), "{k}");
    }
    let a = run_in(
        dir.path(),
        &["simulate", "--config", "cfg.json", "--method", "heom", "--fit", "fit.json", "-o", "a.csv"],
    );
    let b = run_in(dir.path(), &["simulate", "--config", "cfg.json", "--method", "heom", "-o", "b.csv"]);
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    assert_eq!(read(dir.path(), "a.csv"), read(dir.path(), "b.csv"));
}

#[test]
fn exact_rates_and_bcf_tables() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), r#"{"omega0_tau_over_2pi": 1, "t_max": 10, "n_points": 11}"#);
    let o = run_in(
        dir.path(),
        &["simulate", "--config", "cfg.json", "--method", "exact", "--emit-rates", "-o", "ex.csv"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(header(&read(dir.path(), "ex_rates.csv")), "t,gamma_minus,h,undefined_flag");
    let o = run_in(dir.path(), &["bcf", "--config", "cfg.json", "--t-max", "3", "--points", "4", "-o", "c.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(dir.path(), "c.csv");
    assert_eq!(header(&csv), "t,Re_C,Im_C,Re_C_quad,Im_C_quad");
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[1] - v[3]).abs() < 1e-8 && (v[2] - v[4]).abs() < 1e-8, "{line}");
    }
}
