use crate::dynamics::{molecular_field, penalty_density, strat_drift, Params, SimState};
use crate::fields::{dirichlet_form, integrate, weighted_dot, DirectorField};
use crate::noise::{dot, MagneticField, NoiseOperator};
use crate::{Error, Result};

/// Energies, rates and ledgers of one path at one time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    pub step: u64,
    /// `½ ||u||²`.
    pub kinetic: f64,
    /// `½ ||∇d||²`.
    pub dirichlet: f64,
    /// `∫ F_ε(d)`.
    pub penalty: f64,
    /// `kinetic + λ (dirichlet + penalty)`.
    pub total: f64,
    /// `||∇u||²`.
    pub dissipation_u: f64,
    /// `||Δd − f_ε(d)||²`.
    pub dissipation_d: f64,
    /// `½ ξ1² ||S(u)||²_HS`.
    pub hs: f64,
    /// `½ ∫ <∇d, ∇((d×h)×h)> + |∇(d×h)|²`.
    pub strat_drift: f64,
    pub ledger1: f64,
    pub ledger2: f64,
    pub int_dissipation: f64,
    pub int_injection: f64,
    /// `max |d|`.
    pub max_d: f64,
    /// `|| |d|² − 1 ||`.
    pub sphere_defect: f64,
    /// Whether the path accumulated the dissipation/injection integrals.
    pub budget_tracked: bool,
}

impl EnergyRecord {
    /// Column names, in the order of [`EnergyRecord::values`].
    pub const COLUMNS: [&'static str; 16] = [
        "t",
        "step",
        "kinetic",
        "dirichlet",
        "penalty",
        "total",
        "dissipation_u",
        "dissipation_d",
        "hs",
        "strat_drift",
        "ledger1",
        "ledger2",
        "int_dissipation",
        "int_injection",
        "max_d",
        "sphere_defect",
    ];

    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.step as f64,
            self.kinetic,
            self.dirichlet,
            self.penalty,
            self.total,
            self.dissipation_u,
            self.dissipation_d,
            self.hs,
            self.strat_drift,
            self.ledger1,
            self.ledger2,
            self.int_dissipation,
            self.int_injection,
            self.max_d,
            self.sphere_defect,
        ]
    }
}

pub fn sphere_defect(d: &DirectorField) -> f64 {
    let s = d.map(|v| [dot(v, v) - 1.0]);
    weighted_dot(&s, &s).sqrt()
}

pub fn energy_record(
    state: &SimState,
    params: &Params,
    noise: &NoiseOperator,
    h: &MagneticField,
) -> Result<EnergyRecord> {
    let (u, d) = (&state.u, &state.d);
    u.ensure_conforms(d)?;
    let kinetic = 0.5 * weighted_dot(u, u);
    let dirichlet = 0.5 * dirichlet_form(d, d)?;
    let penalty = integrate(&penalty_density(d, params.eps)?);
    let tau = molecular_field(d, params.eps)?;
    let hs = if params.xi1 > 0.0 {
        0.5 * params.xi1 * params.xi1 * noise.hs_norm_sq(u)?
    } else {
        0.0
    };
    Ok(EnergyRecord {
        t: state.t,
        step: state.step,
        kinetic,
        dirichlet,
        penalty,
        total: kinetic + params.lambda * (dirichlet + penalty),
        dissipation_u: dirichlet_form(u, u)?,
        dissipation_d: weighted_dot(&tau, &tau),
        hs,
        strat_drift: strat_drift(d, h)?,
        ledger1: state.ledger1,
        ledger2: state.ledger2,
        int_dissipation: state.int_dissipation,
        int_injection: state.int_injection,
        max_d: d.max_norm(),
        sphere_defect: sphere_defect(d),
        budget_tracked: state.budget_tracked,
    })
}

/// Discrete energy-budget defect between two records of one path:
///
/// `ΔE + Δ∫(μ||∇u||² + λγ||τ||²) − Δ∫(½ξ1²||S||² + λξ2² strat) − Δledger1
///  + λ ξ2 Δledger2`.
///
/// Sign convention: `ledger2` accumulates `<d×h, τ> ΔW2` and enters the energy
/// with the sign of `−λ <τ, ξ2 (d×h)> dW2`; with all noise off the defect
/// reduces to the deterministic balance.
pub fn energy_budget_residual(a: &EnergyRecord, b: &EnergyRecord, params: &Params) -> Result<f64> {
    if b.t < a.t || b.step < a.step {
        return Err(Error::Argument("records out of order".into()));
    }
    if !a.budget_tracked || !b.budget_tracked {
        return Err(Error::Argument(
            "records carry no dissipation integrals; enable budget tracking".into(),
        ));
    }
    Ok(
        (b.total - a.total) + (b.int_dissipation - a.int_dissipation)
            - (b.int_injection - a.int_injection)
            - (b.ledger1 - a.ledger1)
            + params.lambda * params.xi2 * (b.ledger2 - a.ledger2),
    )
}
