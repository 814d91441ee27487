//! Explicit Euler-Maruyama stepping of the relaxed system in Itô form.
//!
//! Both equations are advanced from the time-`n` fields:
//!
//! ```text
//! d+ = d + dt [-adv(u, d) + γ τ + ½ ξ2² (d×h)×h] + ξ2 (d×h) ΔW2
//! u* = u + dt [-adv(u, u) + μ Δu + F(d, τ)] + ξ1 Σ S(u) e_i ΔB_i
//! u+ = P u*
//! ```
//!
//! with `τ = Δd − f_ε(d)`. The momentum forcing `F` is the discrete adjoint of
//! the director transport, `F = −(λ/2) Σ_k (τ_k ∇d_k − d_k ∇τ_k)`, which
//! differs from `−λ div(∇d ⊙ ∇d)` only by a gradient and makes the transport
//! exchange cancel exactly in the discrete energy.

use crate::fields::{
    advect, dirichlet_form, divergence, gradient, laplacian, weighted_dot, Bc, DirectorField, Grid,
    Projector, ScalarField, VectorField,
};
use crate::noise::{cross, dot, Increments, MagneticField, NoiseOperator, WienerDriver};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub eps: f64,
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub dt: f64,
    pub t_end: f64,
    /// Accept a time step above [`stability_dt`].
    pub allow_unstable_dt: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            eps: 0.1,
            mu: 1.0,
            lambda: 1.0,
            gamma: 1.0,
            xi1: 1.0,
            xi2: 1.0,
            dt: 1e-4,
            t_end: 0.1,
            allow_unstable_dt: false,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps", self.eps),
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
            ("dt", self.dt),
            ("T", self.t_end),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("xi1", self.xi1), ("xi2", self.xi2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Argument(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn deterministic(mut self) -> Self {
        self.xi1 = 0.0;
        self.xi2 = 0.0;
        self
    }

    /// Number of steps to reach `t_end` (the last step may overshoot by less
    /// than one `dt`).
    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as u64
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("eps must be positive, got {eps}")))
    }
}

/// `f_ε(d) = (|d|² − 1) d / ε²`.
pub fn gl_force(d: &DirectorField, eps: f64) -> Result<DirectorField> {
    check_eps(eps)?;
    let s = 1.0 / (eps * eps);
    Ok(d.map(|v| {
        let c = (dot(v, v) - 1.0) * s;
        [c * v[0], c * v[1], c * v[2]]
    }))
}

/// `F_ε(d) = (1 − |d|²)² / (4 ε²)`.
pub fn penalty_density(d: &DirectorField, eps: f64) -> Result<ScalarField> {
    check_eps(eps)?;
    let s = 0.25 / (eps * eps);
    Ok(d.map(|v| {
        let a = 1.0 - dot(v, v);
        [s * a * a]
    }))
}

/// Itô drift of the director noise, `½ ξ2² (d×h)×h`.
pub fn strat_correction(d: &DirectorField, h: &MagneticField, xi2: f64) -> Result<DirectorField> {
    d.ensure_conforms(h.field())?;
    let c = 0.5 * xi2 * xi2;
    Ok(d.zip_map(h.field(), |a, b| {
        let t = cross(cross(a, b), b);
        [c * t[0], c * t[1], c * t[2]]
    }))
}

/// Pointwise drift of `|d|²/2` under the director noise alone, for a
/// spatially constant director at rest: `<d, ½ξ2²(d×h)×h> + ½ξ2²|d×h|²`.
pub fn sphere_generator(d: [f64; 3], h: [f64; 3], xi2: f64) -> f64 {
    let c = 0.5 * xi2 * xi2;
    let dh = cross(d, h);
    c * dot(d, cross(dh, h)) + c * dot(dh, dh)
}

/// `div(∇d ⊙ ∇d)` with `(∇d ⊙ ∇d)_ij = <∂_i d, ∂_j d>`.
pub fn ericksen_stress_div(d: &DirectorField) -> VectorField {
    let g = *d.grid();
    let gd = gradient(d, g.director_bc());
    let s11 = gd.dx.zip_map(&gd.dx, |a, b| [dot(a, b)]);
    let s12 = gd.dx.zip_map(&gd.dy, |a, b| [dot(a, b)]);
    let s22 = gd.dy.zip_map(&gd.dy, |a, b| [dot(a, b)]);
    let bc = if g.is_periodic() {
        Bc::Periodic
    } else {
        Bc::Dirichlet
    };
    let row1 = s11.zip_map(&s12, |a, b| [a[0], b[0]]);
    let row2 = s12.zip_map(&s22, |a, b| [a[0], b[0]]);
    let d1 = divergence(&row1, bc);
    let d2 = divergence(&row2, bc);
    d1.zip_map(&d2, |a, b| [a[0], b[0]])
}

/// `τ = Δd − f_ε(d)`; zero on held (Dirichlet) boundary nodes.
pub fn molecular_field(d: &DirectorField, eps: f64) -> Result<DirectorField> {
    let bc = d.grid().director_bc();
    let mut tau = laplacian(d, bc);
    tau.axpy(-1.0, &gl_force(d, eps)?);
    if bc == Bc::Dirichlet {
        tau.zero_boundary();
    }
    Ok(tau)
}

/// Energy-consistent elastic forcing `−(λ/2) Σ_k (τ_k ∇d_k − d_k ∇τ_k)`,
/// zero on no-slip walls.
pub fn elastic_force(d: &DirectorField, tau: &DirectorField, lambda: f64) -> VectorField {
    let bc = d.grid().director_bc();
    let gd = gradient(d, bc);
    let gt = gradient(tau, bc);
    let mut out = VectorField::zeros(*d.grid());
    let c = -0.5 * lambda;
    for (n, o) in out.values_mut().iter_mut().enumerate() {
        let (dv, tv) = (d.values()[n], tau.values()[n]);
        let (ddx, ddy) = (gd.dx.values()[n], gd.dy.values()[n]);
        let (dtx, dty) = (gt.dx.values()[n], gt.dy.values()[n]);
        o[0] = c * (dot(tv, ddx) - dot(dv, dtx));
        o[1] = c * (dot(tv, ddy) - dot(dv, dty));
    }
    out.zero_boundary();
    out
}

/// Explicit stability bound `min(h²/(8μ), h²/(8γ), ε²/(4γ), h/|u|∞)`.
pub fn stability_dt(eps: f64, grid: &Grid, mu: f64, gamma: f64, u_max: f64) -> f64 {
    let h = grid.h_min();
    let mut dt = (h * h / (8.0 * mu))
        .min(h * h / (8.0 * gamma))
        .min(eps * eps / (4.0 * gamma));
    if u_max > 0.0 {
        dt = dt.min(h / u_max);
    }
    dt
}

/// One path of the coupled system plus its running stochastic ledgers.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub u: VectorField,
    pub d: DirectorField,
    /// `Σ <u_n, ξ1 Σ_i S(u_n) e_i ΔB_i>`.
    pub ledger1: f64,
    /// `Σ <d_n × h, τ_n> ΔW2`, accumulated only while `ξ2 > 0`.
    pub ledger2: f64,
    /// Left-endpoint integral of `μ ||∇u||² + λγ ||τ||²`.
    pub int_dissipation: f64,
    /// Left-endpoint integral of `½ξ1² ||S(u)||²_HS + λ ξ2² strat_drift`.
    pub int_injection: f64,
    /// False once a step ran without accumulating the two integrals.
    pub budget_tracked: bool,
}

impl SimState {
    pub fn new(u: VectorField, d: DirectorField) -> Result<Self> {
        u.ensure_conforms(&d)?;
        if !u.is_finite() || !d.is_finite() {
            return Err(Error::Argument("initial data must be finite".into()));
        }
        Ok(Self {
            t: 0.0,
            step: 0,
            u,
            d,
            ledger1: 0.0,
            ledger2: 0.0,
            int_dissipation: 0.0,
            int_injection: 0.0,
            budget_tracked: true,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }
}

/// `½ [B(d, (d×h)×h) + B(d×h, d×h)]` with the edge Dirichlet form `B`.
pub fn strat_drift(d: &DirectorField, h: &MagneticField) -> Result<f64> {
    if h.is_constant() {
        // with constant h both maps are linear in d, (d×h)×h = A d and
        // d×h = C d with A + CᵀC = 0, so the two forms cancel identically
        return Ok(0.0);
    }
    let dh = d.zip_map(h.field(), cross);
    let dhh = dh.zip_map(h.field(), cross);
    Ok(0.5 * (dirichlet_form(d, &dhh)? + dirichlet_form(&dh, &dh)?))
}

/// Everything [`step_coupled`] used from time `n`, for callers that keep
/// their own ledgers.
#[derive(Clone, Debug)]
pub struct StepTrace {
    pub u_prev: VectorField,
    pub d_prev: DirectorField,
    /// Velocity noise increment `ξ1 Σ_i S(u_n) e_i ΔB_i`.
    pub eta: VectorField,
    pub dw2: f64,
    pub dt: f64,
    /// Pressure `P = p / dt` from the projection.
    pub pressure: ScalarField,
}

/// Parameters, noise operator, magnetic field and projector for one model.
#[derive(Clone, Debug)]
pub struct Stepper {
    params: Params,
    noise: NoiseOperator,
    h: MagneticField,
    projector: Projector,
    track_budget: bool,
}

impl Stepper {
    pub fn new(params: Params, noise: NoiseOperator, h: MagneticField) -> Result<Self> {
        params.validate()?;
        if !noise.grid().conforms(h.field().grid()) {
            return Err(Error::Shape(
                "noise and magnetic field live on different grids".into(),
            ));
        }
        let projector = Projector::new(*noise.grid());
        Ok(Self {
            params,
            noise,
            h,
            projector,
            track_budget: true,
        })
    }

    /// Whether to accumulate the dissipation/injection integrals needed by
    /// the energy budget (costs one projection per noise mode per step).
    pub fn with_budget(mut self, on: bool) -> Self {
        self.track_budget = on;
        self
    }

    pub fn with_projector(mut self, projector: Projector) -> Result<Self> {
        if !projector.grid().conforms(self.grid()) {
            return Err(Error::Shape("projector grid differs".into()));
        }
        self.projector = projector;
        Ok(self)
    }

    pub fn params(&self) -> &Params {
        &self.params
    }

    pub fn noise(&self) -> &NoiseOperator {
        &self.noise
    }

    pub fn magnetic(&self) -> &MagneticField {
        &self.h
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn grid(&self) -> &Grid {
        self.noise.grid()
    }

    pub fn tracks_budget(&self) -> bool {
        self.track_budget
    }

    /// Refuses `dt` above [`stability_dt`] for the given state unless the
    /// override flag is set.
    pub fn check_dt(&self, state: &SimState) -> Result<()> {
        let p = &self.params;
        let limit = stability_dt(p.eps, self.grid(), p.mu, p.gamma, state.u.max_norm());
        if p.dt > limit * (1.0 + 1e-12) && !p.allow_unstable_dt {
            return Err(Error::Stability { dt: p.dt, limit });
        }
        Ok(())
    }

    /// Advances `state` by one step with the given increments.
    pub fn step(&self, state: &mut SimState, inc: &Increments) -> Result<StepTrace> {
        state.u.ensure_on(self.grid())?;
        state.d.ensure_on(self.grid())?;
        let p = &self.params;
        let dt = p.dt;
        let tau = molecular_field(&state.d, p.eps)?;

        let eta = if p.xi1 > 0.0 {
            let mut e = self.noise.apply(&state.u, &inc.db)?;
            e.scale(p.xi1);
            e
        } else {
            if inc.db.len() != self.noise.n_modes() {
                return Err(Error::Argument(
                    "increment count does not match noise modes".into(),
                ));
            }
            VectorField::zeros(*self.grid())
        };
        let d_next = director_update(&state.u, &state.d, &tau, p, &self.h, inc.dw2)?;
        let (u_next, pressure) =
            velocity_update(&state.u, &state.d, &tau, &eta, p, &self.projector).map_err(
                |e| match e {
                    Error::BlowUp { .. } => Error::BlowUp {
                        step: state.step,
                        t: state.t,
                    },
                    e => e,
                },
            )?;
        if !d_next.is_finite() || !u_next.is_finite() {
            return Err(Error::BlowUp {
                step: state.step,
                t: state.t,
            });
        }

        let dh = state.d.zip_map(self.h.field(), cross);
        state.ledger1 += weighted_dot(&state.u, &eta);
        if p.xi2 > 0.0 && inc.dw2 != 0.0 {
            state.ledger2 += weighted_dot(&dh, &tau) * inc.dw2;
        }
        if self.track_budget {
            let diss = p.mu * dirichlet_form(&state.u, &state.u)?
                + p.lambda * p.gamma * weighted_dot(&tau, &tau);
            let mut inj = 0.0;
            if p.xi1 > 0.0 {
                inj += 0.5 * p.xi1 * p.xi1 * self.noise.hs_norm_sq(&state.u)?;
            }
            if p.xi2 > 0.0 {
                inj += p.lambda * p.xi2 * p.xi2 * strat_drift(&state.d, &self.h)?;
            }
            state.int_dissipation += dt * diss;
            state.int_injection += dt * inj;
        } else {
            state.budget_tracked = false;
        }

        let u_prev = std::mem::replace(&mut state.u, u_next);
        let d_prev = std::mem::replace(&mut state.d, d_next);
        state.step += 1;
        state.t += dt;
        Ok(StepTrace {
            u_prev,
            d_prev,
            eta,
            dw2: inc.dw2,
            dt,
            pressure,
        })
    }
}

fn director_update(
    u: &VectorField,
    d: &DirectorField,
    tau: &DirectorField,
    p: &Params,
    h: &MagneticField,
    dw2: f64,
) -> Result<DirectorField> {
    let bc = d.grid().director_bc();
    let mut drift = advect(u, d, bc);
    drift.scale(-1.0);
    drift.axpy(p.gamma, tau);
    if p.xi2 > 0.0 {
        drift.axpy(1.0, &strat_correction(d, h, p.xi2)?);
    }
    let mut next = d.clone();
    next.axpy(p.dt, &drift);
    if p.xi2 > 0.0 && dw2 != 0.0 {
        let c = p.xi2 * dw2;
        for (o, (a, b)) in next
            .values_mut()
            .iter_mut()
            .zip(d.values().iter().zip(h.field().values()))
        {
            let x = cross(*a, *b);
            o[0] += c * x[0];
            o[1] += c * x[1];
            o[2] += c * x[2];
        }
    }
    if bc == Bc::Dirichlet {
        next.copy_boundary_from(d);
    }
    Ok(next)
}

fn velocity_update(
    u: &VectorField,
    d: &DirectorField,
    tau: &DirectorField,
    eta: &VectorField,
    p: &Params,
    projector: &Projector,
) -> Result<(VectorField, ScalarField)> {
    let vbc = u.grid().velocity_bc();
    let mut rhs = advect(u, u, vbc);
    rhs.scale(-1.0);
    rhs.axpy(p.mu, &laplacian(u, vbc));
    rhs.axpy(1.0, &elastic_force(d, tau, p.lambda));
    let mut star = u.clone();
    star.axpy(p.dt, &rhs);
    star.axpy(1.0, eta);
    star.zero_boundary();
    let (next, mut pot) = projector.project_with_potential(&star)?;
    pot.scale(1.0 / p.dt);
    Ok((next, pot))
}

/// Director update alone from the state's time-`n` fields.
pub fn step_director(
    state: &SimState,
    params: &Params,
    h: &MagneticField,
    dw2: f64,
) -> Result<DirectorField> {
    params.validate()?;
    let tau = molecular_field(&state.d, params.eps)?;
    let next = director_update(&state.u, &state.d, &tau, params, h, dw2)?;
    if !next.is_finite() {
        return Err(Error::BlowUp {
            step: state.step,
            t: state.t,
        });
    }
    Ok(next)
}

/// Velocity update alone; returns the projected velocity and the pressure.
pub fn step_velocity(
    state: &SimState,
    params: &Params,
    noise: &NoiseOperator,
    db: &[f64],
) -> Result<(VectorField, ScalarField)> {
    params.validate()?;
    let tau = molecular_field(&state.d, params.eps)?;
    let mut eta = noise.apply(&state.u, db)?;
    eta.scale(params.xi1);
    let projector = Projector::new(*state.grid());
    let out = velocity_update(&state.u, &state.d, &tau, &eta, params, &projector);
    match out {
        Err(Error::BlowUp { .. }) => Err(Error::BlowUp {
            step: state.step,
            t: state.t,
        }),
        Ok((u, _)) if !u.is_finite() => Err(Error::BlowUp {
            step: state.step,
            t: state.t,
        }),
        o => o,
    }
}

/// Samples one set of increments from `driver` and advances `state`.
pub fn step_coupled(
    state: &mut SimState,
    stepper: &Stepper,
    driver: &mut WienerDriver,
) -> Result<StepTrace> {
    let inc = driver.sample(stepper.params().dt)?;
    stepper.step(state, &inc)
}
