//! Run orchestration and artifact emission.
//!
//! A run is fully validated (grid, initial data, time step) before its
//! directory is created, so bad input never leaves output behind. Each run
//! directory is named `<mode>-<hash>` after the SHA-256 of the canonical
//! configuration and holds `config.cfg`, `manifest.txt` and `FORMAT_VERSION`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use selflow::diagnostics::{
    default_delta0_sq, defect_detect, director_test_functions, energy_budget_residual,
    energy_record, gronwall_bound_check, pohozaev_all, stress_pairing, velocity_test_functions,
    EnergyRecord, GronwallInput, PohozaevReport, SweepOptions, SweepTable, DEFAULT_RADIUS_CELLS,
};
use selflow::dynamics::{stability_dt, Params, SimState};
use selflow::ensemble::{
    coupled_sweep, run_ensemble, run_path_with, EnsembleSpec, Moments, PathConfig,
};
use selflow::fields::io::{load_snapshot, save_snapshot, write_csv, Snapshot};
use selflow::fields::{leray_project, DirectorField, Field, Grid, VectorField};
use selflow::init::{constant_director, director_wave, taylor_green, vortex};
use selflow::noise::{MagneticField, NoiseOperator};

use crate::config::{parse_config, DirectorInit, FieldSpec, Mode, RunConfig, VelocityInit};
use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;

/// Environment variable that overrides `out.dir`.
pub const OUT_ENV: &str = "SELFLOW_OUT";

type CliResult<T> = Result<T, CliError>;

/// What a finished run produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    /// Human-readable summary lines.
    pub summary: String,
}

pub fn load_config(path: &Path) -> CliResult<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

pub fn config_hash(cfg: &RunConfig) -> String {
    Sha256::digest(cfg.canonical().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn grid_of(cfg: &RunConfig) -> CliResult<Grid> {
    Grid::new(cfg.grid.0, cfg.grid.1, cfg.domain.0, cfg.domain.1, cfg.bc).map_err(CliError::setup)
}

fn load_on(path: &Path, grid: &Grid) -> CliResult<Snapshot> {
    let what = path.display().to_string();
    let snap =
        load_snapshot(path, grid.lx(), grid.ly()).map_err(|e| CliError::setup(e).context(&what))?;
    if !snap.grid().conforms(grid) {
        return Err(CliError::Validation(format!(
            "{what}: snapshot is not on the configured {}x{} {} grid",
            grid.nx(),
            grid.ny(),
            grid.mode().name()
        )));
    }
    Ok(snap)
}

fn load_vector(path: &Path, grid: &Grid) -> CliResult<VectorField> {
    load_on(path, grid)?
        .into_vector()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_director(path: &Path, grid: &Grid) -> CliResult<DirectorField> {
    load_on(path, grid)?
        .into_director()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn initial_velocity(cfg: &RunConfig, g: &Grid) -> CliResult<VectorField> {
    Ok(match &cfg.init_u {
        VelocityInit::Zero => VectorField::zeros(*g),
        VelocityInit::TaylorGreen { k, amp } => {
            taylor_green(*g, *k, *amp).map_err(CliError::setup)?
        }
        VelocityInit::File(p) => {
            // loaded velocities are projected so the run starts divergence-free
            let mut u = load_vector(p, g)?;
            u.zero_boundary();
            leray_project(&u).map_err(CliError::setup)?.0
        }
    })
}

fn initial_director(cfg: &RunConfig, g: &Grid) -> CliResult<DirectorField> {
    Ok(match &cfg.init_d {
        DirectorInit::Const(d) => constant_director(*g, *d),
        DirectorInit::Vortex { x0, y0, core } => {
            vortex(*g, *x0, *y0, *core).map_err(CliError::setup)?
        }
        DirectorInit::Wave { k, amp } => director_wave(*g, *k, *amp),
        DirectorInit::File(p) => load_director(p, g)?,
    })
}

fn magnetic(cfg: &RunConfig, g: &Grid) -> CliResult<MagneticField> {
    Ok(match &cfg.field_h {
        FieldSpec::Const(h) => MagneticField::constant(*g, *h),
        FieldSpec::Wave { h0, a } => MagneticField::wave(*g, *h0, *a),
        FieldSpec::File(p) => {
            MagneticField::from_field(load_director(p, g)?).map_err(CliError::setup)?
        }
    })
}

/// Smallest ε the run will step with.
fn eps_floor(cfg: &RunConfig) -> f64 {
    if cfg.mode == Mode::Sweep {
        cfg.sweep_eps.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        cfg.eps
    }
}

/// Builds and validates the path configuration, including the stability
/// check, without touching the file system beyond reading input fields.
pub fn prepare(cfg: &RunConfig) -> CliResult<PathConfig> {
    let g = grid_of(cfg)?;
    let u0 = initial_velocity(cfg, &g)?;
    let d0 = initial_director(cfg, &g)?;
    let h = magnetic(cfg, &g)?;
    let eps_min = eps_floor(cfg);
    let dt = match cfg.dt {
        Some(dt) => dt,
        None => 0.5 * stability_dt(eps_min, &g, cfg.mu, cfg.gamma, u0.max_norm()),
    };
    let params = Params {
        eps: cfg.eps,
        mu: cfg.mu,
        lambda: cfg.lambda,
        gamma: cfg.gamma,
        xi1: cfg.xi1,
        xi2: cfg.xi2,
        dt,
        t_end: cfg.t_end,
        allow_unstable_dt: cfg.allow_unstable_dt,
    };
    let noise = NoiseOperator::new(g, cfg.modes, cfg.sigma0, cfg.q).map_err(CliError::setup)?;
    let mut pc = PathConfig::new(params, noise, h, u0, d0).map_err(CliError::setup)?;
    pc.checkpoint_every = cfg.checkpoint_every;
    pc.track_budget = cfg.track_budget;
    pc.substeps = cfg.substeps;
    pc.monitor_transport = cfg.monitor_transport;
    let state = SimState::new(pc.u0.clone(), pc.d0.clone()).map_err(CliError::setup)?;
    pc.with_eps(eps_min)
        .stepper()
        .and_then(|s| s.check_dt(&state))
        .map_err(|e| CliError::setup(e).context("sim.dt"))?;
    Ok(pc)
}

/// Output root: `$SELFLOW_OUT` if set, otherwise `out.dir`.
pub fn out_root(cfg: &RunConfig) -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| cfg.out_dir.clone(), PathBuf::from)
}

fn create_run_dir(cfg: &RunConfig) -> CliResult<PathBuf> {
    let hash = config_hash(cfg);
    let dir = out_root(cfg).join(format!("{}-{}", cfg.mode.name(), &hash[..16]));
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.cfg"), cfg.canonical())?;
    fs::write(dir.join("FORMAT_VERSION"), format!("{FORMAT_VERSION}\n"))?;
    Ok(dir)
}

fn write_manifest(
    dir: &Path,
    cfg: &RunConfig,
    seeds: &[u64],
    files: &[String],
    notes: &[String],
) -> CliResult<()> {
    let mut m = String::new();
    let _ = writeln!(m, "format_version = {FORMAT_VERSION}");
    let _ = writeln!(m, "selflow_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "mode = {}", cfg.mode.name());
    let _ = writeln!(m, "config_hash = {}", config_hash(cfg));
    let _ = writeln!(m, "config = config.cfg");
    let seeds: Vec<String> = seeds.iter().map(u64::to_string).collect();
    let _ = writeln!(m, "seeds = {}", seeds.join(","));
    let _ = writeln!(m, "files = {}", files.join(","));
    for n in notes {
        let _ = writeln!(m, "{n}");
    }
    fs::write(dir.join("manifest.txt"), m)?;
    Ok(())
}

fn csv_line(values: impl IntoIterator<Item = f64>) -> String {
    values
        .into_iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn records_header(n_u: usize, n_d: usize) -> String {
    let mut cols: Vec<String> = EnergyRecord::COLUMNS
        .iter()
        .map(|c| c.to_string())
        .collect();
    cols.push("budget_residual".into());
    cols.extend((0..n_u).map(|j| format!("weak_u_{j}")));
    cols.extend((0..n_d).map(|j| format!("weak_d_{j}")));
    cols.join(",")
}

fn records_csv(records: &[EnergyRecord], params: &Params) -> String {
    let mut out = records_header(0, 0);
    out.push('\n');
    for r in records {
        let b = energy_budget_residual(&records[0], r, params).unwrap_or(f64::NAN);
        out.push_str(&csv_line(r.values().into_iter().chain([b])));
        out.push('\n');
    }
    out
}

fn save_field<const K: usize>(
    dir: &Path,
    stem: &str,
    f: &Field<K>,
    files: &mut Vec<String>,
) -> CliResult<()> {
    save_snapshot(dir.join(format!("{stem}.fld")), f).map_err(CliError::running)?;
    let mut buf = Vec::new();
    write_csv(&mut buf, f).map_err(CliError::running)?;
    fs::write(dir.join(format!("{stem}.csv")), buf)?;
    files.push(format!("{stem}.fld"));
    files.push(format!("{stem}.csv"));
    Ok(())
}

const SUP_NOTE: &str = "note = suprema in time are taken over checkpoints and under-estimate the continuous-time supremum";

/// Single path with weak-form residuals against the fixed test functions.
pub fn simulate(cfg: &RunConfig) -> CliResult<Outcome> {
    let cfg = RunConfig {
        mode: Mode::Simulate,
        ..cfg.clone()
    };
    let mut pc = prepare(&cfg)?;
    pc.u_tests = velocity_test_functions(pc.grid());
    pc.d_tests = director_test_functions(pc.grid());
    let dir = create_run_dir(&cfg)?;
    let params = pc.params;
    let mut csv = records_header(pc.u_tests.len(), pc.d_tests.len());
    csv.push('\n');
    let mut first: Option<EnergyRecord> = None;
    let path = run_path_with(&pc, cfg.seed, |st, rec, weak| {
        let a = *first.get_or_insert(*rec);
        let b = energy_budget_residual(&a, rec, &params).unwrap_or(f64::NAN);
        let weak_vals = weak
            .residual_u(&st.u)
            .into_iter()
            .chain(weak.residual_d(&st.d));
        csv.push_str(&csv_line(
            rec.values().into_iter().chain([b]).chain(weak_vals),
        ));
        csv.push('\n');
        Ok(())
    })
    .map_err(CliError::running)?;
    fs::write(dir.join("records.csv"), &csv)?;
    let mut files = vec!["records.csv".to_string()];
    save_field(&dir, "final_u", &path.state.u, &mut files)?;
    save_field(&dir, "final_d", &path.state.d, &mut files)?;
    let last = path.records.last().expect("records");
    let m = path.monitors;
    let notes = vec![
        format!("dt = {}", params.dt),
        format!("steps = {}", last.step),
        format!("max_divergence = {:e}", m.max_divergence),
        format!("max_transport = {:e}", m.max_transport),
        "weak_d = director residuals use -f_eps(d) in place of |grad d|^2 d".to_string(),
    ];
    write_manifest(&dir, &cfg, &[cfg.seed], &files, &notes)?;
    let summary = format!(
        "simulated {} steps to t = {:.4}: E {:.6e} -> {:.6e}, budget residual {:.3e}, max div {:.1e}",
        last.step,
        last.t,
        path.records[0].total,
        last.total,
        energy_budget_residual(&path.records[0], last, &params).unwrap_or(f64::NAN),
        m.max_divergence
    );
    Ok(Outcome { dir, summary })
}

fn moments_line(name: &str, m: &Moments) -> String {
    format!(
        "{name} = mean {:e} se {:e} min {:e} max {:e}",
        m.mean,
        m.se(),
        m.min,
        m.max
    )
}

pub fn ensemble(cfg: &RunConfig) -> CliResult<Outcome> {
    let cfg = RunConfig {
        mode: Mode::Ensemble,
        ..cfg.clone()
    };
    let pc = prepare(&cfg)?;
    let dir = create_run_dir(&cfg)?;
    let spec = EnsembleSpec::new(cfg.paths, cfg.seed);
    let res = run_ensemble(&spec, &pc).map_err(CliError::running)?;
    let s = &res.stats;
    let mut files = Vec::new();
    fs::create_dir_all(dir.join("paths"))?;
    for (i, p) in res.paths.iter().enumerate() {
        let name = format!("paths/path_{i:04}.csv");
        fs::write(dir.join(&name), records_csv(&p.records, &pc.params))?;
        files.push(name);
    }
    let mut summary_csv = String::from("t");
    for c in EnergyRecord::COLUMNS.iter().skip(1) {
        for stat in ["mean", "se", "min", "max"] {
            let _ = write!(summary_csv, ",{c}_{stat}");
        }
    }
    summary_csv.push('\n');
    for (t, row) in s.times.iter().zip(&s.per_checkpoint) {
        let vals = row
            .iter()
            .skip(1)
            .flat_map(|m| [m.mean, m.se(), m.min, m.max]);
        summary_csv.push_str(&csv_line(std::iter::once(*t).chain(vals)));
        summary_csv.push('\n');
    }
    fs::write(dir.join("summary.csv"), summary_csv)?;
    files.push("summary.csv".into());

    let [m1, m2] = s.martingale_test(3.0);
    let mut lines = vec![
        format!("paths = {}", s.seeds.len()),
        moments_line("sup_total", &s.sup_total),
        moments_line("sup_energy_plus_dissipation", &s.q),
        moments_line("int_dissipation", &s.dissipation),
        moments_line("ledger1", &s.ledger1),
        moments_line("ledger2", &s.ledger2),
        format!("ledger1_zero_mean_3se = {m1}"),
        format!("ledger2_zero_mean_3se = {m2}"),
        format!("max_divergence = {:e}", s.max_divergence),
        SUP_NOTE.to_string(),
    ];
    if let Some(b) = &s.budget_residual {
        lines.push(moments_line("budget_residual", b));
    }
    if cfg.gronwall {
        let mut short_cfg = pc.clone();
        short_cfg.params.t_end = 0.5 * pc.params.t_end;
        let short = run_ensemble(&spec, &short_cfg).map_err(CliError::running)?;
        let st0 = SimState::new(pc.u0.clone(), pc.d0.clone()).map_err(CliError::running)?;
        let e0 = energy_record(&st0, &pc.params, &pc.noise, &pc.h)
            .map_err(CliError::running)?
            .total;
        let input = GronwallInput::new(
            short_cfg.params.t_end,
            &pc.params,
            &pc.noise,
            &pc.h,
            &pc.d0,
            e0,
        )
        .map_err(CliError::running)?;
        let r = gronwall_bound_check(&short.stats, s, &input).map_err(CliError::running)?;
        lines.push(format!("gronwall_c = {:e}", r.input.c));
        lines.push(format!("gronwall_k = {:e}", r.input.k));
        lines.push(format!("gronwall_log_increase = {:e}", r.log_increase));
        lines.push(format!("gronwall_bound = {:e}", r.bound));
        lines.push(format!("gronwall_growth_ok = {}", r.growth_ok));
        if let Some(z) = r.zero_noise_ok {
            lines.push(format!("gronwall_zero_noise_ok = {z}"));
        }
        lines.push(format!("second_moment_half = {:e}", r.second_moment_half));
        lines.push(format!("second_moment_full = {:e}", r.second_moment_full));
        lines.push(format!("second_moment_ok = {}", r.second_moment_ok));
    }
    let mut stats = lines.join("\n");
    stats.push('\n');
    fs::write(dir.join("stats.txt"), &stats)?;
    files.push("stats.txt".into());
    write_manifest(
        &dir,
        &cfg,
        &s.seeds,
        &files,
        &[format!("dt = {}", pc.params.dt)],
    )?;
    let summary = format!(
        "{} paths: E sup total {:.6e} ± {:.1e}; ledger means within 3 SE of 0: {m1}, {m2}",
        s.seeds.len(),
        s.sup_total.mean,
        s.sup_total.se()
    );
    Ok(Outcome { dir, summary })
}

pub fn sweep_header(n_phi: usize) -> String {
    let mut cols: Vec<String> = vec!["path".into()];
    cols.extend(SweepTable::COLUMNS.iter().map(|c| c.to_string()));
    cols.extend((0..n_phi).map(|j| format!("pairing_{j}")));
    cols.join(",")
}

pub fn sweep(cfg: &RunConfig) -> CliResult<Outcome> {
    let cfg = RunConfig {
        mode: Mode::Sweep,
        ..cfg.clone()
    };
    let pc = prepare(&cfg)?;
    let dir = create_run_dir(&cfg)?;
    let phis = velocity_test_functions(pc.grid());
    let spec = EnsembleSpec::new(cfg.sweep_paths, cfg.seed);
    let opts = SweepOptions {
        radius: cfg.defect_radius,
        delta0_sq: cfg.delta0_sq,
    };
    let res = coupled_sweep(&spec, &pc, &cfg.sweep_eps, &phis, &opts).map_err(CliError::running)?;
    let mut rows = sweep_header(phis.len());
    rows.push('\n');
    let mut integrated = String::from("path,eps,phi,integrated_pairing\n");
    for (p, t) in res.tables.iter().enumerate() {
        for r in &t.rows {
            let _ = write!(
                rows,
                "{p},{:e},{:e},{:e},{:e},{}",
                r.eps, r.t, r.penalty, r.sphere_defect, r.defect_count
            );
            for v in &r.pairings {
                let _ = write!(rows, ",{v:e}");
            }
            rows.push('\n');
        }
        for (e, vals) in t.eps.iter().zip(&t.integrated) {
            for (j, v) in vals.iter().enumerate() {
                let _ = writeln!(integrated, "{p},{e:e},{j},{v:e}");
            }
        }
    }
    let mut cauchy = String::from("eps_a,eps_b,phi,mean_abs_difference,se\n");
    for (k, gap) in res.mean_cauchy.iter().enumerate() {
        for (j, m) in gap.iter().enumerate() {
            let _ = writeln!(
                cauchy,
                "{:e},{:e},{j},{:e},{:e}",
                res.eps[k],
                res.eps[k + 1],
                m.mean,
                m.se()
            );
        }
    }
    fs::write(dir.join("sweep.csv"), rows)?;
    fs::write(dir.join("integrated.csv"), integrated)?;
    fs::write(dir.join("cauchy.csv"), cauchy)?;
    let concentration = res.tables.iter().any(|t| t.concentration);
    let bound = res.tables.iter().all(SweepTable::penalty_bound_holds);
    // a trend needs at least two gaps, i.e. three values of eps
    let decreasing = (res.mean_cauchy.len() >= 2).then(|| {
        let n = (0..phis.len())
            .filter(|&j| {
                res.mean_cauchy
                    .windows(2)
                    .all(|w| w[1][j].mean < w[0][j].mean)
            })
            .count();
        format!("{n}/{}", phis.len())
    });
    let decreasing = decreasing.unwrap_or_else(|| "n/a".to_string());
    let notes = vec![
        format!("dt = {}", pc.params.dt),
        format!("concentration_detected = {concentration}"),
        format!("penalty_bound_holds = {bound}"),
        format!("cauchy_decreasing = {decreasing}"),
        "note = the defect count is a fixed-eps proxy for the concentration set".to_string(),
    ];
    let seeds = spec.seeds();
    let files = ["sweep.csv", "integrated.csv", "cauchy.csv"].map(String::from);
    write_manifest(&dir, &cfg, &seeds, &files, &notes)?;
    let summary =
        format!(
        "swept eps {:?} over {} path(s): Cauchy gaps decreasing for {decreasing} test functions{}",
        cfg.sweep_eps,
        seeds.len(),
        if concentration { " (defects detected: concentration may stall convergence)" } else { "" }
    );
    Ok(Outcome { dir, summary })
}

/// Options of `diagnose`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnoseArgs {
    pub pohozaev: bool,
    pub defects: bool,
    pub pairings: bool,
    pub eps: f64,
    pub domain: (f64, f64),
    pub center: Option<[f64; 2]>,
    pub radius: Option<f64>,
    pub delta0_sq: Option<f64>,
}

impl Default for DiagnoseArgs {
    fn default() -> Self {
        Self {
            pohozaev: false,
            defects: false,
            pairings: false,
            eps: 0.1,
            domain: (1.0, 1.0),
            center: None,
            radius: None,
            delta0_sq: None,
        }
    }
}

/// Diagnostics of a director snapshot as CSV sections separated by blank
/// lines. With no section selected all three are produced.
pub fn diagnose(snapshot: &Path, args: &DiagnoseArgs) -> CliResult<String> {
    if !(args.eps > 0.0) || !(args.domain.0 > 0.0 && args.domain.1 > 0.0) {
        return Err(CliError::Validation(
            "--eps and --domain must be positive".into(),
        ));
    }
    let snap = load_snapshot(snapshot, args.domain.0, args.domain.1)
        .map_err(|e| CliError::setup(e).context(&snapshot.display().to_string()))?;
    let d = snap
        .into_director()
        .map_err(|e| CliError::Validation(format!("{}: {e}", snapshot.display())))?;
    let g = *d.grid();
    let all = !(args.pohozaev || args.defects || args.pairings);
    let mut out = String::new();
    if all || args.pohozaev {
        let center = args.center.unwrap_or([0.5 * g.lx(), 0.5 * g.ly()]);
        let r = args.radius.unwrap_or(0.25 * g.lx().min(g.ly()));
        let reports = pohozaev_all(&d, args.eps, center, r).map_err(CliError::setup)?;
        out.push_str(&PohozaevReport::COLUMNS.join(","));
        out.push('\n');
        for p in reports {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e}",
                p.center[0],
                p.center[1],
                p.radius,
                p.choice.name(),
                p.boundary_flux,
                p.bulk_stress,
                p.bulk_energy,
                p.boundary_energy,
                p.rhs,
                p.residual
            );
        }
    }
    if all || args.defects {
        if !out.is_empty() {
            out.push('\n');
        }
        let r = args.radius.unwrap_or(DEFAULT_RADIUS_CELLS * g.h_min());
        let delta = match args.delta0_sq {
            Some(v) => v,
            None => default_delta0_sq(&g, args.eps, r).map_err(CliError::setup)?,
        };
        let rep = defect_detect(&d, args.eps, r, delta).map_err(CliError::setup)?;
        out.push_str("x,y,local_energy,radius,threshold\n");
        for (c, e) in rep.centers.iter().zip(&rep.energies) {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                c[0], c[1], e, rep.radius, rep.threshold
            );
        }
    }
    if all || args.pairings {
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str("phi,stress_pairing\n");
        for (j, phi) in velocity_test_functions(&g).iter().enumerate() {
            let v = stress_pairing(&d, phi).map_err(CliError::setup)?;
            let _ = writeln!(out, "{j},{v:e}");
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use selflow::fields::BcMode;

    fn small() -> RunConfig {
        RunConfig {
            grid: (12, 12),
            t_end: 0.002,
            eps: 0.3,
            ..RunConfig::default()
        }
    }

    #[test]
    fn hash_follows_canonical_text() {
        let a = small();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
        b.seed += 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }

    #[test]
    fn auto_dt_sits_below_the_stability_bound() {
        let cfg = small();
        let pc = prepare(&cfg).unwrap();
        let limit = stability_dt(cfg.eps, pc.grid(), cfg.mu, cfg.gamma, pc.u0.max_norm());
        assert!((pc.params.dt - 0.5 * limit).abs() <= 1e-15 * limit);
    }

    #[test]
    fn sweep_dt_uses_the_smallest_eps() {
        let cfg = RunConfig {
            mode: Mode::Sweep,
            sweep_eps: vec![0.3, 0.05],
            ..small()
        };
        let pc = prepare(&cfg).unwrap();
        let limit = stability_dt(0.05, pc.grid(), cfg.mu, cfg.gamma, pc.u0.max_norm());
        assert!(pc.params.dt <= 0.5 * limit * (1.0 + 1e-12));
    }

    #[test]
    fn unstable_dt_is_bad_input() {
        let cfg = RunConfig {
            dt: Some(1.0),
            ..small()
        };
        let err = prepare(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
        let ok = RunConfig {
            dt: Some(1e-3),
            allow_unstable_dt: true,
            t_end: 1e-3,
            ..small()
        };
        assert!(prepare(&ok).is_ok());
    }

    #[test]
    fn file_director_must_match_the_grid() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.fld");
        let g = Grid::unit(8, 8, BcMode::Periodic).unwrap();
        save_snapshot(&p, &constant_director(g, [0.0, 0.0, 1.0])).unwrap();
        let cfg = RunConfig {
            init_d: DirectorInit::File(p.clone()),
            ..small()
        };
        assert_eq!(prepare(&cfg).unwrap_err().exit_code(), 1);
        let cfg = RunConfig {
            init_d: DirectorInit::File(p),
            grid: (8, 8),
            ..small()
        };
        let pc = prepare(&cfg).unwrap();
        assert_eq!(pc.d0.at(3, 4), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn file_velocity_is_projected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.fld");
        let g = Grid::unit(12, 12, BcMode::Periodic).unwrap();
        let v: VectorField = Field::from_fn(g, |x, y| [x.sin() + y, (3.0 * x).cos()]);
        save_snapshot(&p, &v).unwrap();
        let cfg = RunConfig {
            init_u: VelocityInit::File(p),
            ..small()
        };
        let pc = prepare(&cfg).unwrap();
        let div = selflow::fields::divergence(&pc.u0, g.velocity_bc()).max_abs();
        assert!(div < 1e-10, "{div}");
    }

    #[test]
    fn constant_director_diagnostics_vanish() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.fld");
        let g = Grid::unit(32, 32, BcMode::NoSlipNeumann).unwrap();
        save_snapshot(&p, &constant_director(g, [0.6, 0.0, 0.8])).unwrap();
        let csv = diagnose(&p, &DiagnoseArgs::default()).unwrap();
        let sections: Vec<&str> = csv.split("\n\n").collect();
        assert_eq!(sections.len(), 3);
        for line in sections[0].lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            for v in &cols[4..] {
                assert_eq!(v.parse::<f64>().unwrap(), 0.0, "{line}");
            }
        }
        assert_eq!(sections[1].lines().count(), 1, "no defects expected");
        for line in sections[2].lines().skip(1) {
            let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn diagnose_selects_sections() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.fld");
        let g = Grid::unit(16, 16, BcMode::Periodic).unwrap();
        save_snapshot(&p, &constant_director(g, [0.0, 0.0, 1.0])).unwrap();
        let args = DiagnoseArgs {
            pairings: true,
            ..DiagnoseArgs::default()
        };
        let csv = diagnose(&p, &args).unwrap();
        assert!(csv.starts_with("phi,stress_pairing\n"));
        assert_eq!(csv.lines().count(), 1 + velocity_test_functions(&g).len());
    }

    #[test]
    fn sweep_header_lists_pairings() {
        assert_eq!(
            sweep_header(2),
            "path,eps,t,penalty,sphere_defect,defect_count,pairing_0,pairing_1"
        );
    }
}
