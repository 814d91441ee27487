//! Pohozaev-type balance on a disk.
//!
//! Testing `τ = Δd − f_ε(d)` against `X·∇d` on `B = B_r(x0)` and integrating
//! by parts gives
//!
//! ```text
//! ∫_∂B <X·∇d, ∂_ν d> − ∫_B <∇d ⊙ ∇d, ∇X> + ∫_B div X e_ε − ∫_∂B e_ε X·ν
//!     = ∫_B <X·∇d, τ>
//! ```
//!
//! with `e_ε = ½|∇d|² + F_ε(d)`. The residual is left side minus right side.

use std::f64::consts::PI;

use super::geometry::{ball_fits, ball_quadrature, interpolate};
use crate::dynamics::{molecular_field, penalty_density};
use crate::fields::{gradient, DirectorField};
use crate::noise::dot;
use crate::{Error, Result};

/// Choice of the vector field `X`, always centred at the ball centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorFieldChoice {
    /// `X = x − x0`.
    Radial,
    /// `X = (x1 − x0_1, 0)`.
    FirstAxis,
    /// `X = (0, x1 − x0_1)`.
    Shear,
}

impl VectorFieldChoice {
    pub const ALL: [VectorFieldChoice; 3] = [Self::Radial, Self::FirstAxis, Self::Shear];

    pub fn name(self) -> &'static str {
        match self {
            Self::Radial => "radial",
            Self::FirstAxis => "first-axis",
            Self::Shear => "shear",
        }
    }

    fn eval(self, p: [f64; 2]) -> [f64; 2] {
        match self {
            Self::Radial => p,
            Self::FirstAxis => [p[0], 0.0],
            Self::Shear => [0.0, p[0]],
        }
    }

    fn div(self) -> f64 {
        match self {
            Self::Radial => 2.0,
            Self::FirstAxis => 1.0,
            Self::Shear => 0.0,
        }
    }

    /// `<∇d ⊙ ∇d, ∇X>` from the derivatives at a point.
    fn stress(self, d1: [f64; 3], d2: [f64; 3]) -> f64 {
        match self {
            Self::Radial => dot(d1, d1) + dot(d2, d2),
            Self::FirstAxis => dot(d1, d1),
            Self::Shear => dot(d1, d2),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PohozaevReport {
    pub center: [f64; 2],
    pub radius: f64,
    pub choice: VectorFieldChoice,
    /// `∫_∂B <X·∇d, ∂_ν d>`.
    pub boundary_flux: f64,
    /// `−∫_B <∇d ⊙ ∇d, ∇X>`.
    pub bulk_stress: f64,
    /// `∫_B div X e_ε`.
    pub bulk_energy: f64,
    /// `−∫_∂B e_ε X·ν`.
    pub boundary_energy: f64,
    /// `∫_B <X·∇d, τ>`.
    pub rhs: f64,
    pub residual: f64,
}

impl PohozaevReport {
    pub const COLUMNS: [&'static str; 10] = [
        "x0",
        "y0",
        "r",
        "X",
        "boundary_flux",
        "bulk_stress",
        "bulk_energy",
        "boundary_energy",
        "rhs",
        "residual",
    ];
}

/// Evaluates every term of the balance for one choice of `X`.
pub fn pohozaev_residual(
    d: &DirectorField,
    eps: f64,
    center: [f64; 2],
    r: f64,
    choice: VectorFieldChoice,
) -> Result<PohozaevReport> {
    Ok(pohozaev_all_inner(d, eps, center, r, &[choice])?.remove(0))
}

/// All three choices of `X` sharing one set of field evaluations.
pub fn pohozaev_all(
    d: &DirectorField,
    eps: f64,
    center: [f64; 2],
    r: f64,
) -> Result<Vec<PohozaevReport>> {
    pohozaev_all_inner(d, eps, center, r, &VectorFieldChoice::ALL)
}

fn pohozaev_all_inner(
    d: &DirectorField,
    eps: f64,
    center: [f64; 2],
    r: f64,
    choices: &[VectorFieldChoice],
) -> Result<Vec<PohozaevReport>> {
    let g = *d.grid();
    if !ball_fits(&g, center, r, 1.0) {
        return Err(Error::Geometry(format!(
            "ball of radius {r} at ({}, {}) is not inside the domain with a one-cell margin",
            center[0], center[1]
        )));
    }
    let gd = gradient(d, g.director_bc());
    let tau = molecular_field(d, eps)?;
    let mut e = penalty_density(d, eps)?;
    for (ev, (a, b)) in e
        .values_mut()
        .iter_mut()
        .zip(gd.dx.values().iter().zip(gd.dy.values()))
    {
        ev[0] += 0.5 * (dot(*a, *a) + dot(*b, *b));
    }

    let quad = ball_quadrature(&g, center, r);
    let m = ((2.0 * PI * r / g.h_min()).ceil() as usize * 8).max(64);
    let ds = 2.0 * PI * r / m as f64;

    let mut out = Vec::with_capacity(choices.len());
    for &choice in choices {
        let (mut bulk_stress, mut bulk_energy, mut rhs) = (0.0, 0.0, 0.0);
        for &(n, w, p) in &quad {
            let x = choice.eval([p[0] - center[0], p[1] - center[1]]);
            let (d1, d2) = (gd.dx.values()[n], gd.dy.values()[n]);
            bulk_stress -= w * choice.stress(d1, d2);
            bulk_energy += w * choice.div() * e.values()[n][0];
            let t = tau.values()[n];
            rhs += w * (x[0] * dot(d1, t) + x[1] * dot(d2, t));
        }
        let (mut flux, mut benergy) = (0.0, 0.0);
        for k in 0..m {
            let th = 2.0 * PI * (k as f64 + 0.5) / m as f64;
            let nu = [th.cos(), th.sin()];
            let (px, py) = (center[0] + r * nu[0], center[1] + r * nu[1]);
            let x = choice.eval([r * nu[0], r * nu[1]]);
            let d1 = interpolate(&gd.dx, px, py);
            let d2 = interpolate(&gd.dy, px, py);
            let ev = interpolate(&e, px, py)[0];
            let mut xd = [0.0; 3];
            let mut nd = [0.0; 3];
            for c in 0..3 {
                xd[c] = x[0] * d1[c] + x[1] * d2[c];
                nd[c] = nu[0] * d1[c] + nu[1] * d2[c];
            }
            flux += ds * dot(xd, nd);
            benergy -= ds * ev * (x[0] * nu[0] + x[1] * nu[1]);
        }
        out.push(PohozaevReport {
            center,
            radius: r,
            choice,
            boundary_flux: flux,
            bulk_stress,
            bulk_energy,
            boundary_energy: benergy,
            rhs,
            residual: flux + bulk_stress + bulk_energy + benergy - rhs,
        });
    }
    Ok(out)
}
