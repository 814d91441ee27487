//! Initial data.

use std::f64::consts::PI;

use crate::fields::{DirectorField, Field, Grid, Projector, VectorField};
use crate::{Error, Result};

/// Projected Taylor-Green cell `amp (sin ax cos by, −(a/b) cos ax sin by)`
/// with `a = 2πk/lx`, `b = 2πk/ly`.
pub fn taylor_green(grid: Grid, k: f64, amp: f64) -> Result<VectorField> {
    if !(k > 0.0) {
        return Err(Error::Argument(format!(
            "wavenumber must be positive, got {k}"
        )));
    }
    let a = 2.0 * PI * k / grid.lx();
    let b = 2.0 * PI * k / grid.ly();
    let v = Field::from_fn(grid, |x, y| {
        [
            amp * (a * x).sin() * (b * y).cos(),
            -amp * (a / b) * (a * x).cos() * (b * y).sin(),
        ]
    });
    Projector::new(grid).project(&v)
}

pub fn constant_director(grid: Grid, d: [f64; 3]) -> DirectorField {
    Field::constant(grid, d)
}

/// Planar degree-one vortex `((x − x0), (y − y0), 0) / sqrt(r² + a²)` with
/// core size `a`.
pub fn vortex(grid: Grid, x0: f64, y0: f64, core: f64) -> Result<DirectorField> {
    if !(core > 0.0) {
        return Err(Error::Argument(format!(
            "vortex core must be positive, got {core}"
        )));
    }
    Ok(Field::from_fn(grid, |x, y| {
        let (dx, dy) = (x - x0, y - y0);
        let s = 1.0 / (dx * dx + dy * dy + core * core).sqrt();
        [dx * s, dy * s, 0.0]
    }))
}

/// Smooth unit-length in-plane director with angle
/// `amp sin(2πkx/lx) sin(2πky/ly)`.
pub fn director_wave(grid: Grid, k: f64, amp: f64) -> DirectorField {
    let a = 2.0 * PI * k / grid.lx();
    let b = 2.0 * PI * k / grid.ly();
    Field::from_fn(grid, |x, y| {
        let th = amp * (a * x).sin() * (b * y).sin();
        [th.cos(), th.sin(), 0.0]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{divergence, BcMode};

    #[test]
    fn taylor_green_is_discretely_divergence_free() {
        for mode in [BcMode::Periodic, BcMode::NoSlipNeumann] {
            let g = Grid::unit(24, 24, mode).unwrap();
            let u = taylor_green(g, 1.0, 1.0).unwrap();
            assert!(divergence(&u, g.velocity_bc()).max_abs() <= 1e-10);
            assert!(u.max_norm() > 0.5);
        }
    }

    #[test]
    fn vortex_has_unit_length_away_from_core() {
        let g = Grid::unit(33, 33, BcMode::NoSlipNeumann).unwrap();
        let d = vortex(g, 0.5, 0.5, 1e-3).unwrap();
        let v = d.at(0, 16);
        assert!((v[0] * v[0] + v[1] * v[1] - 1.0).abs() < 1e-5);
        assert_eq!(d.at(16, 16), [0.0, 0.0, 0.0]);
        assert!(vortex(g, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn wave_director_is_unit() {
        let g = Grid::unit(16, 16, BcMode::Periodic).unwrap();
        let d = director_wave(g, 1.0, 0.7);
        for v in d.values() {
            assert!((v[0] * v[0] + v[1] * v[1] + v[2] * v[2] - 1.0).abs() < 1e-14);
        }
    }
}
