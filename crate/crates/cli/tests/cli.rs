use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_femtherm"));
    for var in ["FEMTHERM_CONFIG", "FEMTHERM_OUT", "FEMTHERM_MODELS", "FEMTHERM_TAU", "FEMTHERM_SEED", "FEMTHERM_EMIT_PLOT_DATA"] {
        c.env_remove(var);
    }
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// A short synthetic dataset plus a run config pointing at it.
fn small_dataset(dir: &Path) -> PathBuf {
    let spec = fs::read_to_string(configs().join("synth/wm1.toml")).unwrap().replace("days = 365", "days = 42");
    fs::write(dir.join("synth.toml"), spec).unwrap();
    let st = bin()
        .args(["synth", "--config"])
        .arg(dir.join("synth.toml"))
        .arg("--out")
        .arg(dir.join("data"))
        .output()
        .unwrap();
    assert!(st.status.success());
    let run = format!(
        "dataset_id = \"small\"\nmodels = [\"wm1\", \"ross\"]\n[data]\npath = \"data/synthetic-wm1.csv\"\nstep_s = 60\n[fem]\ntau_s = 360.0\n[fem.fit]\nmin_samples = 10\n"
    );
    let path = dir.join("run.toml");
    fs::write(&path, run).unwrap();
    path
}

#[test]
fn rc_on_bundled_stack() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["rc", "--config"])
        .arg(configs().join("table1_stack.toml"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("tau0 590.6 s"));
    for f in ["rc_layers.csv", "rc_totals.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn config_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .arg("rc")
        .env("FEMTHERM_CONFIG", configs().join("table1_stack.toml"))
        .env("FEMTHERM_OUT", dir.path())
        .output()
        .unwrap();
    assert!(st.status.success());
    assert!(dir.path().join("rc_totals.csv").exists());
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bin().args(["rc", "--config", "/nonexistent.toml"]).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let empty = dir.path().join("empty.toml");
    fs::write(&empty, "").unwrap();
    let st = bin().args(["rc", "--config"]).arg(&empty).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(st.status.code(), Some(2));

    // data file without the module temperature column
    let run = small_dataset(dir.path());
    let csv = dir.path().join("data/synthetic-wm1.csv");
    let text = fs::read_to_string(&csv).unwrap().replacen("t_module", "t_mod", 1);
    fs::write(&csv, text).unwrap();
    let out = bin().args(["fit", "--config"]).arg(&run).arg("--out").arg(dir.path().join("fit")).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_module"));

    let st = bin().args(["fit", "--models", "nope", "--config"]).arg(&run).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn run_writes_reports_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let run = small_dataset(dir.path());
    let out_dir = dir.path().join("run");
    let out = bin()
        .args(["run", "--emit-plot-data", "--models", "wm1", "--config"])
        .arg(&run)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["kpis.csv", "kpis_wide.csv", "energy.csv", "plot_wm1.csv", "manifest.json"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    assert!(!out_dir.join("plot_ross.csv").exists());
    let kpis = fs::read_to_string(out_dir.join("kpis.csv")).unwrap();
    assert_eq!(kpis.lines().count(), 4);
    assert!(kpis.starts_with("dataset_id,model,variant,rmse,mae,mbe,n_rows"));
}

#[test]
fn fit_uses_tau_override() {
    let dir = tempfile::tempdir().unwrap();
    let run = small_dataset(dir.path());
    let out_dir = dir.path().join("fit");
    let out = bin().args(["fit", "--tau", "420", "--config"]).arg(&run).arg("--out").arg(&out_dir).output().unwrap();
    assert!(matches!(out.status.code(), Some(0 | 1)), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(out_dir.join("rc_summary.csv")).unwrap();
    let mut lines = summary.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "tau_s").unwrap();
    assert_eq!(row[col], "420.0");
}
