use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use selflow::fields::io::save_snapshot;
use selflow::fields::{BcMode, Field, Grid};

fn selflow(args: &[&str], out_env: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_selflow"));
    cmd.args(args).env_remove("SELFLOW_OUT");
    if let Some(p) = out_env {
        cmd.env("SELFLOW_OUT", p);
    }
    cmd.output().expect("spawn selflow")
}

fn write_cfg(dir: &Path, out: &Path, extra: &str) -> String {
    let text = format!(
        "# tiny run\nsim.grid = 12x12\nsim.T = 0.002\nsim.eps = 0.3\nnoise.seed = 5\nout.dir = {}\n{extra}",
        out.display()
    );
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn entries(dir: &Path) -> Vec<std::path::PathBuf> {
    match fs::read_dir(dir) {
        Ok(rd) => rd.map(|e| e.unwrap().path()).collect(),
        Err(_) => Vec::new(),
    }
}

#[test]
fn selftest_passes() {
    let o = selflow(&["selftest"], None);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("8 of 8 checks passed"));
}

#[test]
fn bad_config_exits_one_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_cfg(tmp.path(), &out, "sim.eps = -1\nsim.bogus = 3\n");
    let o = selflow(&["simulate", &cfg], None);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("sim.eps") && err.contains("sim.bogus"),
        "{err}"
    );
    assert!(!out.exists());
}

#[test]
fn unstable_dt_exits_one_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_cfg(tmp.path(), &out, "sim.dt = 0.5\n");
    let o = selflow(&["simulate", &cfg], None);
    assert_eq!(
        o.status.code(),
        Some(1),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert!(!out.exists());
}

#[test]
fn missing_config_is_an_io_error() {
    let o = selflow(&["simulate", "/nonexistent/run.cfg"], None);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(selflow(&["frobnicate"], None).status.code(), Some(1));
    assert_eq!(selflow(&["--help"], None).status.code(), Some(0));
}

#[test]
fn simulate_writes_a_stamped_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_cfg(tmp.path(), &out, "run.mode = ensemble\n");
    let o = selflow(&["simulate", &cfg], None);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let dirs = entries(&out);
    assert_eq!(dirs.len(), 1);
    let run = &dirs[0];
    // the subcommand wins over run.mode
    assert!(run
        .file_name()
        .unwrap()
        .to_string_lossy()
        .starts_with("simulate-"));
    assert_eq!(
        fs::read_to_string(run.join("FORMAT_VERSION"))
            .unwrap()
            .trim(),
        "1"
    );
    let canonical = fs::read_to_string(run.join("config.cfg")).unwrap();
    assert!(canonical.contains("run.mode = simulate"), "{canonical}");
    assert!(canonical.contains("sim.grid = 12x12"));
    let manifest = fs::read_to_string(run.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seeds = 5"));
    assert!(manifest.contains("records.csv"));
    let records = fs::read_to_string(run.join("records.csv")).unwrap();
    assert!(records.lines().next().unwrap().contains("budget_residual"));
    assert!(records.lines().count() >= 2);

    // rerunning the canonical config lands in the same directory
    let o = selflow(
        &["simulate", run.join("config.cfg").to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(entries(&out).len(), 1);
    assert_eq!(
        fs::read_to_string(run.join("records.csv")).unwrap(),
        records
    );
}

#[test]
fn out_env_overrides_the_configured_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let configured = tmp.path().join("configured");
    let env_dir = tmp.path().join("env");
    let cfg = write_cfg(tmp.path(), &configured, "");
    let o = selflow(&["simulate", &cfg], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(!configured.exists());
    assert_eq!(entries(&env_dir).len(), 1);
}

#[test]
fn ensemble_and_sweep_emit_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_cfg(
        tmp.path(),
        &out,
        "ensemble.paths = 3\nsweep.eps = 0.4,0.3,0.2\n",
    );
    assert_eq!(
        selflow(&["--threads", "2", "ensemble", &cfg], None)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(selflow(&["sweep", &cfg], None).status.code(), Some(0));
    let mut dirs = entries(&out);
    dirs.sort();
    assert_eq!(dirs.len(), 2);
    let (ens, sw) = (&dirs[0], &dirs[1]);
    assert_eq!(entries(&ens.join("paths")).len(), 3);
    let stats = fs::read_to_string(ens.join("stats.txt")).unwrap();
    assert!(stats.contains("ledger1_zero_mean_3se"));
    assert!(fs::read_to_string(ens.join("summary.csv"))
        .unwrap()
        .starts_with("t,"));
    let cauchy = fs::read_to_string(sw.join("cauchy.csv")).unwrap();
    assert_eq!(cauchy.lines().count(), 1 + 2 * 3);
    assert!(fs::read_to_string(sw.join("sweep.csv"))
        .unwrap()
        .starts_with("path,eps,"));
}

#[test]
fn diagnose_constant_director_is_all_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("d.fld");
    let g = Grid::unit(24, 24, BcMode::Periodic).unwrap();
    save_snapshot(&p, &Field::constant(g, [0.0, 0.0, 1.0])).unwrap();
    let o = selflow(
        &[
            "diagnose",
            p.to_str().unwrap(),
            "--pohozaev",
            "--eps",
            "0.05",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
    let csv = String::from_utf8(o.stdout).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("x0,y0,r,X,"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    for row in rows {
        for v in row.split(',').skip(4) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{row}");
        }
    }
}

#[test]
fn diagnose_rejects_velocity_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("u.fld");
    let g = Grid::unit(8, 8, BcMode::Periodic).unwrap();
    save_snapshot(&p, &Field::constant(g, [1.0, 0.0])).unwrap();
    assert_eq!(
        selflow(&["diagnose", p.to_str().unwrap()], None)
            .status
            .code(),
        Some(1)
    );
}
