//! Running ledgers for the time-integrated weak formulation.
//!
//! For a divergence-free `φ` the velocity residual is
//!
//! ```text
//! <u(t) − u0, φ> − ∫ [<u⊗u, ∇φ> + μ<u, Δφ> + λ<T, ∇φ>] ds − ∫ <φ, ξ1 S(u) dW1>
//! ```
//!
//! with `T` the traceless elastic stress; for a director test function `ψ`
//!
//! ```text
//! <d(t) − d0, ψ> − ∫ [<u⊗d, ∇ψ> + γ<d, Δψ> − γ<f_ε(d), ψ> + ½ξ2²<(d×h)×h, ψ>] ds
//!     − ξ2 ∫ <d×h, ψ> dW2.
//! ```
//!
//! At finite ε the harmonic-map term `<|∇d|² d, ψ>` appears as `−<f_ε(d), ψ>`.
//! Time integrals use the left endpoint, matching the stepper.

use super::stress::stress_tensor;
use crate::dynamics::{gl_force, strat_correction, Params, StepTrace};
use crate::fields::{
    gradient, laplacian, weighted_dot, Bc, DirectorField, Gradient, Grid, VectorField,
};
use crate::noise::{cross, MagneticField};
use crate::Result;

#[derive(Clone, Debug)]
struct VelocityTest {
    phi: VectorField,
    grad: Gradient<2>,
    lap: VectorField,
    initial: f64,
    drift: f64,
    noise: f64,
    stress: f64,
}

#[derive(Clone, Debug)]
struct DirectorTest {
    psi: DirectorField,
    grad: Gradient<3>,
    lap: DirectorField,
    initial: f64,
    drift: f64,
    noise: f64,
}

#[derive(Clone, Debug, Default)]
pub struct WeakLedgers {
    u_tests: Vec<VelocityTest>,
    d_tests: Vec<DirectorTest>,
}

fn test_bc(grid: &Grid) -> Bc {
    if grid.is_periodic() {
        Bc::Periodic
    } else {
        Bc::Dirichlet
    }
}

impl WeakLedgers {
    pub fn new(
        u_tests: &[VectorField],
        d_tests: &[DirectorField],
        u0: &VectorField,
        d0: &DirectorField,
    ) -> Result<Self> {
        let bc = test_bc(u0.grid());
        let mut out = Self::default();
        for phi in u_tests {
            phi.ensure_conforms(u0)?;
            out.u_tests.push(VelocityTest {
                phi: phi.clone(),
                grad: gradient(phi, bc),
                lap: laplacian(phi, bc),
                initial: weighted_dot(u0, phi),
                drift: 0.0,
                noise: 0.0,
                stress: 0.0,
            });
        }
        for psi in d_tests {
            psi.ensure_conforms(d0)?;
            out.d_tests.push(DirectorTest {
                psi: psi.clone(),
                grad: gradient(psi, bc),
                lap: laplacian(psi, bc),
                initial: weighted_dot(d0, psi),
                drift: 0.0,
                noise: 0.0,
            });
        }
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        self.u_tests.is_empty() && self.d_tests.is_empty()
    }

    /// Adds the contributions of one step, evaluated at its time-`n` fields.
    pub fn record(&mut self, trace: &StepTrace, params: &Params, h: &MagneticField) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        let (u, d, dt) = (&trace.u_prev, &trace.d_prev, trace.dt);
        let g = *u.grid();
        let w = g.weights();
        if !self.u_tests.is_empty() {
            let t = stress_tensor(d);
            for test in &mut self.u_tests {
                let (mut conv, mut stress) = (0.0, 0.0);
                for n in 0..g.len() {
                    let uv = u.values()[n];
                    let (p1, p2) = (test.grad.dx.values()[n], test.grad.dy.values()[n]);
                    // u_a u_b ∂_b φ_a
                    let c = uv[0] * (uv[0] * p1[0] + uv[1] * p2[0])
                        + uv[1] * (uv[0] * p1[1] + uv[1] * p2[1]);
                    let tv = t.values()[n];
                    let s = tv[0] * p1[0] + tv[1] * p2[0] + tv[2] * p1[1] + tv[3] * p2[1];
                    conv += w[n] * c;
                    stress += w[n] * s;
                }
                let visc = params.mu * weighted_dot(u, &test.lap);
                test.drift += dt * (conv + visc + params.lambda * stress);
                test.stress += dt * stress;
                test.noise += weighted_dot(&test.phi, &trace.eta);
            }
        }
        if !self.d_tests.is_empty() {
            let f = gl_force(d, params.eps)?;
            let corr = strat_correction(d, h, params.xi2)?;
            let dh = d.zip_map(h.field(), cross);
            for test in &mut self.d_tests {
                let mut conv = 0.0;
                for n in 0..g.len() {
                    let (uv, dv) = (u.values()[n], d.values()[n]);
                    let (p1, p2) = (test.grad.dx.values()[n], test.grad.dy.values()[n]);
                    let mut c = 0.0;
                    for k in 0..3 {
                        c += dv[k] * (uv[0] * p1[k] + uv[1] * p2[k]);
                    }
                    conv += w[n] * c;
                }
                let lin = params.gamma * (weighted_dot(d, &test.lap) - weighted_dot(&f, &test.psi));
                test.drift += dt * (conv + lin + weighted_dot(&corr, &test.psi));
                if params.xi2 > 0.0 {
                    test.noise += params.xi2 * weighted_dot(&dh, &test.psi) * trace.dw2;
                }
            }
        }
        Ok(())
    }

    /// Velocity residual for every test function at the current velocity.
    pub fn residual_u(&self, u: &VectorField) -> Vec<f64> {
        self.u_tests
            .iter()
            .map(|t| weighted_dot(u, &t.phi) - t.initial - t.drift - t.noise)
            .collect()
    }

    /// Director residual for every test function at the current director.
    pub fn residual_d(&self, d: &DirectorField) -> Vec<f64> {
        self.d_tests
            .iter()
            .map(|t| weighted_dot(d, &t.psi) - t.initial - t.drift - t.noise)
            .collect()
    }

    /// `∫ <T, ∇φ> ds` for every velocity test function.
    pub fn stress_integrals(&self) -> Vec<f64> {
        self.u_tests.iter().map(|t| t.stress).collect()
    }

    /// Accumulated stochastic pairings `∫ <φ, ξ1 S(u) dW1>`.
    pub fn noise_integrals_u(&self) -> Vec<f64> {
        self.u_tests.iter().map(|t| t.noise).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{director_test_functions, velocity_test_functions};
    use crate::dynamics::{SimState, Stepper};
    use crate::fields::{BcMode, Field};
    use crate::noise::{Increments, NoiseOperator};

    #[test]
    fn zero_data_gives_zero_residuals() {
        let g = Grid::unit(16, 16, BcMode::Periodic).unwrap();
        let params = Params {
            eps: 0.5,
            xi1: 0.0,
            xi2: 0.0,
            dt: 1e-3,
            ..Params::default()
        };
        let h = MagneticField::zero(g);
        let stepper = Stepper::new(
            params,
            NoiseOperator::new(g, 1, 1.0, 1.5).unwrap(),
            h.clone(),
        )
        .unwrap();
        let mut st = SimState::new(VectorField::zeros(g), Field::constant(g, [0.0; 3])).unwrap();
        let mut wl = WeakLedgers::new(
            &velocity_test_functions(&g),
            &director_test_functions(&g),
            &st.u,
            &st.d,
        )
        .unwrap();
        for _ in 0..5 {
            let tr = stepper.step(&mut st, &Increments::zero(1)).unwrap();
            wl.record(&tr, &params, &h).unwrap();
        }
        for r in wl.residual_u(&st.u).into_iter().chain(wl.residual_d(&st.d)) {
            assert!(r.abs() < 1e-15, "{r}");
        }
    }
}
