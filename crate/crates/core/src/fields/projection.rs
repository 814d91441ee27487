use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::ops::{divergence, gradient, weighted_dot};
use super::{Bc, Field, Grid, ScalarField, VectorField};
use crate::{Error, Result};

/// Default bound on `max |div u|` after projection.
pub const DEFAULT_PROJ_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionSolver {
    /// Direct solve in Fourier space (periodic grids only).
    Fft,
    /// Conjugate gradients in the quadrature inner product.
    Cg,
}

#[derive(Clone)]
struct FftPlans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

/// Discrete Leray projector.
///
/// The pressure solves `D G p = D v` with the same discrete divergence `D` and
/// gradient `G` used everywhere else, so the projected field `v - G p` has
/// discrete divergence equal to the solver residual.
#[derive(Clone)]
pub struct Projector {
    grid: Grid,
    solver: ProjectionSolver,
    tol: f64,
    max_iter: usize,
    fft: Option<FftPlans>,
}

impl std::fmt::Debug for Projector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Projector")
            .field("grid", &self.grid)
            .field("solver", &self.solver)
            .field("tol", &self.tol)
            .finish()
    }
}

impl Projector {
    /// FFT on periodic grids, CG otherwise.
    pub fn new(grid: Grid) -> Self {
        let solver = if grid.is_periodic() {
            ProjectionSolver::Fft
        } else {
            ProjectionSolver::Cg
        };
        Self::with_solver(grid, solver).expect("solver matches grid")
    }

    pub fn with_solver(grid: Grid, solver: ProjectionSolver) -> Result<Self> {
        let fft = match solver {
            ProjectionSolver::Fft => {
                if !grid.is_periodic() {
                    return Err(Error::Argument(
                        "the FFT projection needs a periodic grid".into(),
                    ));
                }
                let mut planner = FftPlanner::new();
                Some(FftPlans {
                    fwd_x: planner.plan_fft_forward(grid.nx()),
                    inv_x: planner.plan_fft_inverse(grid.nx()),
                    fwd_y: planner.plan_fft_forward(grid.ny()),
                    inv_y: planner.plan_fft_inverse(grid.ny()),
                })
            }
            ProjectionSolver::Cg => None,
        };
        Ok(Self {
            grid,
            solver,
            tol: DEFAULT_PROJ_TOL,
            max_iter: 60 * grid.nx().max(grid.ny()) + 500,
            fft,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn solver(&self) -> ProjectionSolver {
        self.solver
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn project(&self, v: &VectorField) -> Result<VectorField> {
        Ok(self.project_with_potential(v)?.0)
    }

    /// Returns the projected field and the zero-mean potential `p` with
    /// `u = v - G p`.
    pub fn project_with_potential(&self, v: &VectorField) -> Result<(VectorField, ScalarField)> {
        v.ensure_on(&self.grid)?;
        if !v.is_finite() {
            return Err(Error::BlowUp {
                step: 0,
                t: f64::NAN,
            });
        }
        match self.solver {
            ProjectionSolver::Fft => Ok(self.project_fft(v)),
            ProjectionSolver::Cg => self.project_cg(v),
        }
    }

    fn project_fft(&self, v: &VectorField) -> (VectorField, ScalarField) {
        let plans = self.fft.as_ref().expect("fft plans");
        let g = self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let mut vx: Vec<Complex<f64>> =
            v.values().iter().map(|a| Complex::new(a[0], 0.0)).collect();
        let mut vy: Vec<Complex<f64>> =
            v.values().iter().map(|a| Complex::new(a[1], 0.0)).collect();
        fft2(&mut vx, nx, ny, &plans.fwd_x, &plans.fwd_y);
        fft2(&mut vy, nx, ny, &plans.fwd_x, &plans.fwd_y);
        let sx: Vec<f64> = (0..nx)
            .map(|m| (2.0 * std::f64::consts::PI * m as f64 / nx as f64).sin() / g.hx())
            .collect();
        let sy: Vec<f64> = (0..ny)
            .map(|m| (2.0 * std::f64::consts::PI * m as f64 / ny as f64).sin() / g.hy())
            .collect();
        let mut p = vec![Complex::new(0.0, 0.0); nx * ny];
        // symbol of the central gradient is i s, so D G has symbol -|s|^2
        let i_unit = Complex::new(0.0, 1.0);
        for j in 0..ny {
            for i in 0..nx {
                let n = j * nx + i;
                let s2 = sx[i] * sx[i] + sy[j] * sy[j];
                if s2 < 1e-30 * (1.0 / (g.hx() * g.hx())) {
                    continue;
                }
                let sv = vx[n] * sx[i] + vy[n] * sy[j];
                let ph = -i_unit * sv / s2;
                p[n] = ph;
                vx[n] -= i_unit * sx[i] * ph;
                vy[n] -= i_unit * sy[j] * ph;
            }
        }
        fft2(&mut vx, nx, ny, &plans.inv_x, &plans.inv_y);
        fft2(&mut vy, nx, ny, &plans.inv_x, &plans.inv_y);
        fft2(&mut p, nx, ny, &plans.inv_x, &plans.inv_y);
        let norm = 1.0 / (nx * ny) as f64;
        let data: Vec<[f64; 2]> = vx
            .iter()
            .zip(&vy)
            .map(|(a, b)| [a.re * norm, b.re * norm])
            .collect();
        let pd: Vec<[f64; 1]> = p.iter().map(|a| [a.re * norm]).collect();
        (
            Field::from_vec(g, data).expect("shape"),
            Field::from_vec(g, pd).expect("shape"),
        )
    }

    /// `-D Z G p` where `Z` zeroes boundary nodes; symmetric positive
    /// semidefinite in the quadrature inner product.
    fn apply(&self, p: &ScalarField) -> ScalarField {
        let gv = self.pressure_gradient(p);
        let mut out = divergence(&gv, self.grid.velocity_bc());
        out.scale(-1.0);
        out
    }

    fn pressure_gradient(&self, p: &ScalarField) -> VectorField {
        let gp = gradient(p, scalar_bc(&self.grid));
        let mut gv = gp.dx.zip_map(&gp.dy, |a, b| [a[0], b[0]]);
        gv.zero_boundary();
        gv
    }

    fn project_cg(&self, v: &VectorField) -> Result<(VectorField, ScalarField)> {
        let g = self.grid;
        let mut v = v.clone();
        v.zero_boundary();
        let vel_bc = g.velocity_bc();
        let mut b = divergence(&v, vel_bc);
        b.scale(-1.0);
        let mut p = ScalarField::zeros(g);
        let mut r = b.clone();
        let mut iterations = 0;
        let mut res = r.max_abs();
        if res > self.tol {
            let mut d = r.clone();
            let mut rr = weighted_dot(&r, &r);
            while iterations < self.max_iter {
                iterations += 1;
                let ad = self.apply(&d);
                let dad = weighted_dot(&d, &ad);
                if !(dad > 0.0) {
                    break;
                }
                let alpha = rr / dad;
                p.axpy(alpha, &d);
                if iterations % 50 == 0 {
                    r = b.clone();
                    r.axpy(-1.0, &self.apply(&p));
                } else {
                    r.axpy(-alpha, &ad);
                }
                res = r.max_abs();
                if res <= self.tol {
                    break;
                }
                let rr_new = weighted_dot(&r, &r);
                let beta = rr_new / rr;
                rr = rr_new;
                d.scale(beta);
                d.axpy(1.0, &r);
            }
        }
        let mean = p.mean();
        p.values_mut().iter_mut().for_each(|x| x[0] -= mean);
        let mut u = v;
        u.axpy(-1.0, &self.pressure_gradient(&p));
        let achieved = divergence(&u, vel_bc).max_abs();
        if achieved > self.tol {
            return Err(Error::Convergence {
                residual: achieved,
                tol: self.tol,
                iterations,
            });
        }
        Ok((u, p))
    }
}

fn scalar_bc(grid: &Grid) -> Bc {
    if grid.is_periodic() {
        Bc::Periodic
    } else {
        Bc::Neumann
    }
}

fn fft2(
    buf: &mut [Complex<f64>],
    nx: usize,
    ny: usize,
    fx: &Arc<dyn Fft<f64>>,
    fy: &Arc<dyn Fft<f64>>,
) {
    fx.process(buf);
    let mut t = vec![Complex::new(0.0, 0.0); nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            t[i * ny + j] = buf[j * nx + i];
        }
    }
    fy.process(&mut t);
    for j in 0..ny {
        for i in 0..nx {
            buf[j * nx + i] = t[i * ny + j];
        }
    }
}

/// Projects with a freshly built default projector, returning the
/// divergence-free part and the zero-mean potential.
pub fn leray_project(v: &VectorField) -> Result<(VectorField, ScalarField)> {
    Projector::new(*v.grid()).project_with_potential(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{norm_l2, BcMode};
    use std::f64::consts::PI;

    fn rough(g: Grid) -> VectorField {
        Field::from_fn(g, |x, y| {
            [
                (2.0 * PI * x).sin() * (2.0 * PI * y).cos() + 0.4 * (6.0 * PI * y).sin(),
                0.7 * (2.0 * PI * x).cos() + (4.0 * PI * (x + y)).sin(),
            ]
        })
    }

    #[test]
    fn fft_projection_is_divergence_free() {
        let g = Grid::unit(32, 24, BcMode::Periodic).unwrap();
        let (u, p) = leray_project(&rough(g)).unwrap();
        assert!(p.mean().abs() < 1e-12);
        assert!(divergence(&u, Bc::Periodic).max_abs() <= 1e-10);
    }

    #[test]
    fn cg_projection_is_divergence_free() {
        for mode in [BcMode::NoSlipNeumann, BcMode::NoSlipDirichlet] {
            let g = Grid::unit(25, 21, mode).unwrap();
            let (u, p) = leray_project(&rough(g)).unwrap();
            assert!(p.mean().abs() < 1e-12);
            assert!(divergence(&u, Bc::NoSlip).max_abs() <= 1e-10);
            for j in 0..g.ny() {
                for i in 0..g.nx() {
                    if g.is_boundary(i, j) {
                        assert_eq!(u.at(i, j), [0.0, 0.0]);
                    }
                }
            }
        }
    }

    #[test]
    fn solvers_agree_on_periodic_grid() {
        let g = Grid::unit(16, 16, BcMode::Periodic).unwrap();
        let v = rough(g);
        let a = Projector::new(g).project(&v).unwrap();
        let b = Projector::with_solver(g, ProjectionSolver::Cg)
            .unwrap()
            .with_tol(1e-12)
            .project(&v)
            .unwrap();
        let mut e = a.clone();
        e.axpy(-1.0, &b);
        assert!(e.max_norm() < 1e-9, "{}", e.max_norm());
    }

    #[test]
    fn fft_solver_rejects_walls() {
        let g = Grid::unit(9, 9, BcMode::NoSlipNeumann).unwrap();
        assert!(Projector::with_solver(g, ProjectionSolver::Fft).is_err());
    }

    #[test]
    fn projection_is_idempotent_and_kills_gradients() {
        for mode in [BcMode::Periodic, BcMode::NoSlipNeumann] {
            let n = if mode == BcMode::Periodic { 32 } else { 33 };
            let g = Grid::unit(n, n, mode).unwrap();
            let proj = Projector::new(g);
            let u = proj.project(&rough(g)).unwrap();
            let uu = proj.project(&u).unwrap();
            let mut e = uu.clone();
            e.axpy(-1.0, &u);
            assert!(e.max_norm() < 1e-8, "{mode:?}: {}", e.max_norm());

            let phi = Field::from_fn(g, |x, y| [(PI * x).cos() * (2.0 * PI * y).cos()]);
            let gv = proj.pressure_gradient(&phi);
            let killed = proj.project(&gv).unwrap();
            assert!(killed.max_norm() < 1e-8, "{mode:?}: {}", killed.max_norm());
        }
    }

    #[test]
    fn projection_does_not_increase_energy() {
        let g = Grid::unit(24, 24, BcMode::Periodic).unwrap();
        let v = rough(g);
        let (u, _) = leray_project(&v).unwrap();
        assert!(norm_l2(&u) <= norm_l2(&v) + 1e-12);
    }

    #[test]
    fn convergence_failure_reports_residual() {
        let g = Grid::unit(33, 33, BcMode::NoSlipNeumann).unwrap();
        let err = Projector::new(g)
            .with_max_iter(2)
            .project(&rough(g))
            .unwrap_err();
        match err {
            Error::Convergence { residual, tol, .. } => assert!(residual > tol),
            e => panic!("unexpected {e:?}"),
        }
    }
}
