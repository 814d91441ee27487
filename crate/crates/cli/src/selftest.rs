//! Quick invariant checks on small fixtures.

use std::f64::consts::PI;

use selflow::diagnostics::{default_delta0_sq, defect_detect, pohozaev_all, DEFAULT_RADIUS_CELLS};
use selflow::dynamics::{stability_dt, Params};
use selflow::ensemble::{run_path, PathConfig};
use selflow::fields::{
    advect, divergence, inner_product, BcMode, Field, Grid, Projector, VectorField,
};
use selflow::init::{constant_director, director_wave, taylor_green, vortex};
use selflow::noise::{cross, dot, MagneticField, NoiseOperator};
use selflow::Result;

/// Outcome of one named check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> Check {
    match run() {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn rough_velocity(g: Grid) -> VectorField {
    Field::from_fn(g, |x, y| {
        [
            (2.0 * PI * x).sin() + 0.3 * (6.0 * PI * y).cos() + x * y,
            (4.0 * PI * x * y).cos() - 0.5 * (2.0 * PI * y).sin(),
        ]
    })
}

fn projection() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for mode in [BcMode::Periodic, BcMode::NoSlipNeumann] {
        let g = Grid::unit(24, 20, mode)?;
        let u = Projector::new(g).project(&rough_velocity(g))?;
        worst = worst.max(divergence(&u, g.velocity_bc()).max_abs());
    }
    Ok((worst <= 1e-10, format!("max |div u| = {worst:.2e}")))
}

fn transport() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for mode in [BcMode::Periodic, BcMode::NoSlipNeumann] {
        let g = Grid::unit(24, 24, mode)?;
        let u = Projector::new(g).project(&rough_velocity(g))?;
        let t = inner_product(&advect(&u, &u, g.velocity_bc()), &u)?;
        worst = worst.max(t.abs());
    }
    Ok((worst <= 1e-12, format!("max |<adv(u,u),u>| = {worst:.2e}")))
}

fn triple_products() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for k in 0..64 {
        let s = k as f64;
        let a = [
            (1.3 * s).sin(),
            (0.7 * s + 1.0).cos(),
            (2.1 * s).sin() * 2.0,
        ];
        let b = [
            (0.4 * s).cos(),
            (1.9 * s + 0.5).sin(),
            0.3 - (0.2 * s).cos(),
        ];
        let c = cross(a, b);
        worst = worst.max(dot(c, a).abs()).max(dot(c, b).abs());
        worst = worst.max((dot(cross(a, a), b)).abs());
    }
    Ok((worst <= 1e-14, format!("max |(a x b).a| = {worst:.2e}")))
}

fn quiet_path() -> Result<PathConfig> {
    let g = Grid::unit(16, 16, BcMode::Periodic)?;
    let u0 = taylor_green(g, 1.0, 0.5)?;
    let d0 = director_wave(g, 1.0, 0.8);
    let eps = 0.2;
    let dt = 0.5 * stability_dt(eps, &g, 1.0, 1.0, u0.max_norm());
    let params = Params {
        eps,
        xi1: 0.0,
        xi2: 0.0,
        dt,
        t_end: 200.0 * dt,
        ..Params::default()
    };
    let mut cfg = PathConfig::new(
        params,
        NoiseOperator::new(g, 2, 1.0, 1.5)?,
        MagneticField::wave(g, 1.0, 0.5),
        u0,
        d0,
    )?;
    cfg.checkpoint_every = 1;
    Ok(cfg)
}

fn energy_decrease() -> Result<(bool, String)> {
    let p = run_path(&quiet_path()?, 1)?;
    let worst = p
        .records
        .windows(2)
        .map(|w| w[1].total - w[0].total)
        .fold(f64::NEG_INFINITY, f64::max);
    let (e0, e1) = (p.records[0].total, p.records.last().expect("records").total);
    Ok((
        worst <= 1e-14 * e0 && e1 < e0,
        format!("E {e0:.4e} -> {e1:.4e}, max increment {worst:.2e}"),
    ))
}

/// The explicit scheme closes the budget to O(dt): halving the step at a
/// fixed horizon must roughly halve the defect.
fn zero_noise_budget() -> Result<(bool, String)> {
    let coarse = quiet_path()?;
    let mut fine = coarse.clone();
    fine.params.dt *= 0.5;
    let r0 = run_path(&coarse, 1)?.budget_residual(&coarse.params)?;
    let r1 = run_path(&fine, 1)?.budget_residual(&fine.params)?;
    let ratio = r0.abs() / r1.abs().max(f64::MIN_POSITIVE);
    Ok((
        ratio >= 1.6,
        format!("residual {r0:.2e} -> {r1:.2e} at dt/2 (ratio {ratio:.2})"),
    ))
}

fn constant_director_pohozaev() -> Result<(bool, String)> {
    let g = Grid::unit(32, 32, BcMode::Periodic)?;
    let d = constant_director(g, [0.0, 0.6, 0.8]);
    let reports = pohozaev_all(&d, 0.1, [0.5, 0.5], 0.3)?;
    let worst = reports.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    Ok((worst <= 1e-12, format!("max |residual| = {worst:.2e}")))
}

fn vortex_defect() -> Result<(bool, String)> {
    let g = Grid::unit(64, 64, BcMode::NoSlipNeumann)?;
    let eps = 0.05;
    let d = vortex(g, 0.5, 0.5, eps)?;
    let r = DEFAULT_RADIUS_CELLS * g.h_min();
    let rep = defect_detect(&d, eps, r, default_delta0_sq(&g, eps, r)?)?;
    let ok = rep.count() == 1 && {
        let c = rep.centers[0];
        (c[0] - 0.5).hypot(c[1] - 0.5) <= 2.0 * g.h_min()
    };
    Ok((
        ok,
        format!("{} defect(s) at {:?}", rep.count(), rep.centers),
    ))
}

fn reproducibility() -> Result<(bool, String)> {
    let mut cfg = quiet_path()?;
    cfg.params.xi1 = 0.5;
    cfg.params.xi2 = 0.5;
    let a = run_path(&cfg, 77)?;
    let b = run_path(&cfg, 77)?;
    let c = run_path(&cfg, 78)?;
    let same = a.records == b.records && a.state.u == b.state.u && a.state.d == b.state.d;
    let differs = a.records != c.records;
    Ok((
        same && differs,
        format!("same seed identical: {same}, other seed differs: {differs}"),
    ))
}

/// Runs every check in a fixed order.
pub fn run_all() -> Vec<Check> {
    vec![
        check("projection", projection),
        check("transport", transport),
        check("triple_products", triple_products),
        check("energy_decrease", energy_decrease),
        check("zero_noise_budget", zero_noise_budget),
        check("constant_director_pohozaev", constant_director_pohozaev),
        check("vortex_defect", vortex_defect),
        check("reproducibility", reproducibility),
    ]
}
