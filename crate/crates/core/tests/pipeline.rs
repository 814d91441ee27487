//! End-to-end behaviour across modules: stepping, ledgers, ensembles and I/O.

use selflow::diagnostics::{director_test_functions, velocity_test_functions};
use selflow::dynamics::{stability_dt, Params};
use selflow::ensemble::{run_ensemble, run_path, EnsembleSpec, PathConfig};
use selflow::fields::io::{read_snapshot, write_snapshot};
use selflow::fields::{BcMode, Grid};
use selflow::init::{director_wave, taylor_green, vortex};
use selflow::noise::{MagneticField, NoiseOperator};

fn config(n: usize, mode: BcMode, xi: f64, dt_frac: f64, t_end: f64) -> PathConfig {
    let g = Grid::unit(n, n, mode).unwrap();
    let u0 = taylor_green(g, 1.0, 0.3).unwrap();
    let d0 = director_wave(g, 1.0, 0.6);
    let eps = 0.25;
    let dt = dt_frac * stability_dt(eps, &g, 1.0, 1.0, u0.max_norm());
    let params = Params {
        eps,
        xi1: xi,
        xi2: xi,
        dt,
        t_end,
        ..Params::default()
    };
    let noise = NoiseOperator::new(g, 3, 1.0, 1.5).unwrap();
    PathConfig::new(params, noise, MagneticField::wave(g, 1.0, 0.4), u0, d0).unwrap()
}

fn max_weak_residual(cfg: &PathConfig) -> f64 {
    let mut cfg = cfg.clone();
    cfg.u_tests = velocity_test_functions(cfg.grid());
    cfg.d_tests = director_test_functions(cfg.grid());
    let p = run_path(&cfg, 3).unwrap();
    let r = p
        .weak
        .residual_u(&p.state.u)
        .into_iter()
        .chain(p.weak.residual_d(&p.state.d));
    r.map(f64::abs).fold(0.0, f64::max)
}

#[test]
fn deterministic_weak_residuals_are_small_and_stable_in_dt() {
    // left-endpoint integrals match the stepper, so what remains is the gap
    // between discrete operators and their weak forms
    let coarse = max_weak_residual(&config(16, BcMode::Periodic, 0.0, 0.4, 0.01));
    let fine = max_weak_residual(&config(16, BcMode::Periodic, 0.0, 0.2, 0.01));
    assert!(
        coarse < 1e-6 && fine <= 1.1 * coarse,
        "{coarse:e} -> {fine:e}"
    );
}

#[test]
fn noisy_weak_residuals_do_not_grow_on_a_coupled_path() {
    let fine = config(16, BcMode::Periodic, 0.5, 0.2, 0.01);
    let mut coarse = fine.clone();
    coarse.params.dt *= 2.0;
    coarse.substeps = 2;
    let (rc, rf) = (max_weak_residual(&coarse), max_weak_residual(&fine));
    // the stochastic integrals are paired exactly, so only the spatial floor
    // remains and refining dt on the same Brownian path must not raise it
    assert!(rc < 1e-4 && rf <= 1.1 * rc, "{rc:e} -> {rf:e}");
}

#[test]
fn standard_error_shrinks_like_root_m() {
    let cfg = config(12, BcMode::Periodic, 0.5, 0.5, 0.005);
    let se = |m: usize| {
        run_ensemble(&EnsembleSpec::new(m, 21), &cfg)
            .unwrap()
            .stats
            .ledger1
            .se()
    };
    let (a, b) = (se(8), se(32));
    // ratio should be about 2; sample noise at these sizes is large
    assert!(b < a && a / b > 1.2 && a / b < 3.5, "{a:e} {b:e}");
}

#[test]
fn no_slip_runs_are_reproducible_and_divergence_free() {
    let cfg = config(16, BcMode::NoSlipNeumann, 0.5, 0.5, 0.01);
    let a = run_path(&cfg, 9).unwrap();
    let b = run_path(&cfg, 9).unwrap();
    assert_eq!(a.records, b.records);
    assert!(a.monitors.max_divergence <= 1e-10);
}

#[test]
fn deterministic_no_slip_run_keeps_the_director_in_the_ball() {
    let cfg = config(16, BcMode::NoSlipNeumann, 0.0, 0.5, 0.01);
    let p = run_path(&cfg, 0).unwrap();
    assert!(p.records.iter().all(|r| r.max_d <= 1.0 + 1e-12));
}

#[test]
fn snapshots_round_trip_through_bytes() {
    let g = Grid::new(20, 14, 2.0, 1.0, BcMode::NoSlipDirichlet).unwrap();
    let d = vortex(g, 1.0, 0.5, 0.1).unwrap();
    let mut buf = Vec::new();
    write_snapshot(&mut buf, &d).unwrap();
    let back = read_snapshot(buf.as_slice(), 2.0, 1.0)
        .unwrap()
        .into_director()
        .unwrap();
    assert_eq!(back, d);
    assert!(read_snapshot(&buf[..buf.len() - 5], 2.0, 1.0).is_err());
}
