//! Local energies on disks and a finite-ε proxy for the concentration set.
//!
//! At fixed ε the set returned by [`defect_detect`] is a heuristic: it lists
//! disks whose energy exceeds the threshold, not the limit of such sets as
//! ε → 0.

use super::geometry::ball_quadrature;
use crate::dynamics::penalty_density;
use crate::fields::{gradient, BcMode, DirectorField, Grid, ScalarField};
use crate::init::vortex;
use crate::noise::dot;
use crate::{Error, Result};

/// Default disk radius in grid spacings.
pub const DEFAULT_RADIUS_CELLS: f64 = 8.0;

fn energy_density(d: &DirectorField, eps: f64) -> Result<ScalarField> {
    let gd = gradient(d, d.grid().director_bc());
    let mut e = penalty_density(d, eps)?;
    for (ev, (a, b)) in e
        .values_mut()
        .iter_mut()
        .zip(gd.dx.values().iter().zip(gd.dy.values()))
    {
        ev[0] += 0.5 * (dot(*a, *a) + dot(*b, *b));
    }
    Ok(e)
}

fn ball_integral(e: &ScalarField, center: [f64; 2], r: f64) -> f64 {
    ball_quadrature(e.grid(), center, r)
        .iter()
        .map(|&(n, w, _)| w * e.values()[n][0])
        .sum()
}

/// `∫_{B_r(x0) ∩ D} ½|∇d|² + F_ε(d)`.
pub fn local_energy(d: &DirectorField, eps: f64, center: [f64; 2], r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {r}")));
    }
    Ok(ball_integral(&energy_density(d, eps)?, center, r))
}

/// `0.3 ×` the energy of an isolated vortex with core `max(ε, 2h)` on a disk
/// of radius `r`, at the spacing of `grid`.
pub fn default_delta0_sq(grid: &Grid, eps: f64, r: f64) -> Result<f64> {
    let h = grid.h_min();
    let mut n = (2.0 * r / h).ceil() as usize + 7;
    if n.is_multiple_of(2) {
        n += 1;
    }
    let len = (n - 1) as f64 * h;
    let local = Grid::new(n, n, len, len, BcMode::NoSlipNeumann)?;
    let c = 0.5 * len;
    let v = vortex(local, c, c, eps.max(2.0 * h))?;
    Ok(0.3 * local_energy(&v, eps, [c, c], r)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectCandidate {
    pub center: [f64; 2],
    pub energy: f64,
    pub exceeds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefectReport {
    pub radius: f64,
    pub threshold: f64,
    /// Every scanned lattice disk.
    pub candidates: Vec<DefectCandidate>,
    /// Refined centres of the detected defects.
    pub centers: Vec<[f64; 2]>,
    /// Local energy at each refined centre.
    pub energies: Vec<f64>,
}

impl DefectReport {
    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

fn lattice(len: f64, r: f64, periodic: bool) -> Vec<f64> {
    let s = 0.5 * r;
    if periodic {
        let n = (len / s).ceil().max(1.0) as usize;
        (0..n).map(|i| i as f64 * len / n as f64).collect()
    } else if len < 2.0 * r {
        Vec::new()
    } else {
        let n = ((len - 2.0 * r) / s + 1e-9).floor() as usize + 1;
        let off = 0.5 * (len - 2.0 * r - (n - 1) as f64 * s);
        (0..n).map(|i| r + off + i as f64 * s).collect()
    }
}

fn distance(g: &Grid, a: [f64; 2], b: [f64; 2]) -> f64 {
    let mut dx = (a[0] - b[0]).abs();
    let mut dy = (a[1] - b[1]).abs();
    if g.is_periodic() {
        dx = dx.min(g.lx() - dx);
        dy = dy.min(g.ly() - dy);
    }
    dx.hypot(dy)
}

/// Scans disks of radius `r` centred on a lattice of spacing `r/2`. A lattice
/// disk becomes a defect when its energy exceeds `delta0_sq` and it is the
/// largest (ties broken by scan order) among lattice disks within `2r`; its
/// centre is then refined to the grid node of largest local energy within one
/// lattice cell. Raising the threshold can only remove defects.
pub fn defect_detect(d: &DirectorField, eps: f64, r: f64, delta0_sq: f64) -> Result<DefectReport> {
    if !(r > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {r}")));
    }
    let g = *d.grid();
    let e = energy_density(d, eps)?;
    let xs = lattice(g.lx(), r, g.is_periodic());
    let ys = lattice(g.ly(), r, g.is_periodic());
    let mut candidates = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            let energy = ball_integral(&e, [x, y], r);
            candidates.push(DefectCandidate {
                center: [x, y],
                energy,
                exceeds: energy > delta0_sq,
            });
        }
    }

    let s = 0.5 * r;
    let mut centers = Vec::new();
    let mut energies = Vec::new();
    for (pi, p) in candidates.iter().enumerate() {
        if !p.exceeds {
            continue;
        }
        let is_max = candidates.iter().enumerate().all(|(qi, q)| {
            qi == pi
                || distance(&g, p.center, q.center) > 2.0 * r
                || q.energy < p.energy
                || (q.energy == p.energy && qi > pi)
        });
        if !is_max {
            continue;
        }
        let reach = s * std::f64::consts::SQRT_2;
        let mut best = (p.energy, p.center);
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let node = [g.x(i), g.y(j)];
                if distance(&g, node, p.center) > reach {
                    continue;
                }
                let en = ball_integral(&e, node, r);
                if en > best.0 {
                    best = (en, node);
                }
            }
        }
        centers.push(best.1);
        energies.push(best.0);
    }
    Ok(DefectReport {
        radius: r,
        threshold: delta0_sq,
        candidates,
        centers,
        energies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Field;

    fn box_grid(n: usize) -> Grid {
        Grid::unit(n, n, BcMode::NoSlipNeumann).unwrap()
    }

    #[test]
    fn uniform_director_has_no_energy() {
        let g = box_grid(33);
        let d = Field::constant(g, [1.0, 0.0, 0.0]);
        assert_eq!(local_energy(&d, 0.1, [0.5, 0.5], 0.2).unwrap(), 0.0);
        let rep = defect_detect(&d, 0.1, 0.2, 1e-3).unwrap();
        assert_eq!(rep.count(), 0);
    }

    #[test]
    fn vortex_energy_concentrates_at_the_core() {
        let g = box_grid(65);
        let h = g.hx();
        let r = DEFAULT_RADIUS_CELLS * h;
        let eps = 0.02;
        let d = vortex(g, 0.5, 0.5, eps).unwrap();
        let core = local_energy(&d, eps, [0.5, 0.5], r).unwrap();
        let far = local_energy(&d, eps, [0.5 + 4.0 * r, 0.5], r).unwrap();
        assert!(core >= 5.0 * far, "{core} vs {far}");
        let rep = defect_detect(&d, eps, r, default_delta0_sq(&g, eps, r).unwrap()).unwrap();
        assert_eq!(rep.count(), 1);
        let c = rep.centers[0];
        assert!((c[0] - 0.5).hypot(c[1] - 0.5) <= 2.0 * h, "{c:?}");
    }

    #[test]
    fn threshold_above_total_energy_gives_empty_set() {
        let g = box_grid(33);
        let d = vortex(g, 0.5, 0.5, 0.05).unwrap();
        let total = local_energy(&d, 0.05, [0.5, 0.5], 2.0).unwrap();
        assert_eq!(
            defect_detect(&d, 0.05, 0.15, total * 1.01).unwrap().count(),
            0
        );
    }

    #[test]
    fn detection_is_monotone_in_threshold() {
        let g = Grid::unit(48, 48, BcMode::Periodic).unwrap();
        let d = Field::from_fn(g, |x, y| {
            let th = 3.0 * (2.0 * std::f64::consts::PI * x).sin()
                + 2.0 * (4.0 * std::f64::consts::PI * y).cos();
            [th.cos(), th.sin(), 0.1]
        });
        let r = 0.1;
        let lo = defect_detect(&d, 0.1, r, 0.5).unwrap();
        for thr in [0.8, 1.5, 3.0] {
            let hi = defect_detect(&d, 0.1, r, thr).unwrap();
            assert!(hi.centers.iter().all(|c| lo.centers.contains(c)));
        }
    }
}
