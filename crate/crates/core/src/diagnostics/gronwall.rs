//! Sample-level check of the Gronwall energy bound and the second moment.
//!
//! With `C_S` the linear-growth constant of the velocity noise,
//! `E = ½||u||² + λ(½||∇d||² + ∫F_ε)` satisfies
//!
//! ```text
//! d E[E] ≤ (C E[E] + K) dt,  C = max(ξ1² C_S, 2ξ2² ||h||∞²),
//! K = ½ξ1² C_S + 1.5 λ ξ2² ||∇h||∞² |D| max|d|²,
//! ```
//!
//! the last term bounding the part of the Stratonovich drift that is not
//! controlled by the Dirichlet energy. Over `[T0, 2T0]` this gives
//! `Q(2T0) ≤ (Q(T0) + K T0) e^{C T0}` for `Q = E sup_t [E(t) + ∫_0^t dissipation]`,
//! which is constant without noise. The explicit scheme satisfies this only up to
//! its measured energy-budget defect, which is added to `K T0` as a
//! discretisation allowance.

use crate::dynamics::Params;
use crate::ensemble::{sample_moments, EnsembleStats, Moments};
use crate::fields::DirectorField;
use crate::noise::{MagneticField, NoiseOperator};
use crate::{Error, Result};

/// Constants of the bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GronwallInput {
    /// Short horizon; the long one is `2 t0`.
    pub t0: f64,
    pub c: f64,
    pub k: f64,
    pub initial_energy: f64,
    pub deterministic: bool,
}

impl GronwallInput {
    pub fn new(
        t0: f64,
        params: &Params,
        noise: &NoiseOperator,
        h: &MagneticField,
        d0: &DirectorField,
        initial_energy: f64,
    ) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(Error::Argument(format!(
                "horizon must be positive, got {t0}"
            )));
        }
        let cs = noise.linear_growth_constant();
        let (x1, x2) = (params.xi1 * params.xi1, params.xi2 * params.xi2);
        let hs = h.sup_norm();
        let area = d0.grid().area();
        let md = d0.max_norm().max(1.0);
        Ok(Self {
            t0,
            c: (x1 * cs).max(2.0 * x2 * hs * hs),
            k: 0.5 * x1 * cs + 1.5 * params.lambda * x2 * h.gradient_sup().powi(2) * area * md * md,
            initial_energy,
            deterministic: params.xi1 == 0.0 && params.xi2 == 0.0,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GronwallReport {
    pub input: GronwallInput,
    pub q_short: Moments,
    pub q_long: Moments,
    /// `ln Q(2T0) − ln Q(T0)`.
    pub log_increase: f64,
    /// `C T0 + ln(1 + (K T0 + defect) / Q(T0))` plus three standard errors.
    pub bound: f64,
    pub growth_ok: bool,
    /// Deterministic runs only: the sup-energy never exceeds the initial one.
    pub zero_noise_ok: Option<bool>,
    /// `E (sup E)²` from the first half of the long-horizon paths and from all.
    pub second_moment_half: f64,
    pub second_moment_full: f64,
    pub second_moment_ok: bool,
}

impl GronwallReport {
    pub fn passes(&self) -> bool {
        self.growth_ok && self.second_moment_ok && self.zero_noise_ok.unwrap_or(true)
    }
}

/// Compares ensembles run to `t0` (`short`) and `2 t0` (`long`).
pub fn gronwall_bound_check(
    short: &EnsembleStats,
    long: &EnsembleStats,
    input: &GronwallInput,
) -> Result<GronwallReport> {
    if long.sup_totals.len() < 2 || short.sup_totals.len() < 2 {
        return Err(Error::Argument(
            "the bound check needs at least two paths".into(),
        ));
    }
    let (q1, q2) = (short.q, long.q);
    if !(q1.mean > 0.0 && q2.mean > 0.0) {
        return Err(Error::Argument(
            "energies must be positive for a log comparison".into(),
        ));
    }
    let log_increase = (q2.mean / q1.mean).ln();
    let slack = 3.0 * (q1.se() / q1.mean + q2.se() / q2.mean);
    let defect = long
        .budget_residual
        .map_or(0.0, |m| m.mean.abs() + 3.0 * m.se());
    let bound = input.c * input.t0 + ((input.k * input.t0 + defect) / q1.mean).ln_1p() + slack;
    let zero_noise_ok = input.deterministic.then(|| {
        let tol = 1e-9 * input.initial_energy.abs() + 1e-14;
        short.sup_total.max <= input.initial_energy + tol
            && long.sup_total.max <= input.initial_energy + tol
    });
    let squares: Vec<f64> = long.sup_totals.iter().map(|s| s * s).collect();
    let half = sample_moments(&squares[..squares.len() / 2]).mean;
    let full = sample_moments(&squares).mean;
    let second_moment_ok = half.is_finite() && full.is_finite() && {
        let r = if full > 0.0 { half / full } else { 1.0 };
        (0.5..=2.0).contains(&r)
    };
    Ok(GronwallReport {
        input: *input,
        q_short: q1,
        q_long: q2,
        log_increase,
        bound,
        growth_ok: log_increase.is_finite() && log_increase <= bound,
        zero_noise_ok,
        second_moment_half: half,
        second_moment_full: full,
        second_moment_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::energy_record;
    use crate::dynamics::SimState;
    use crate::ensemble::{run_ensemble, EnsembleSpec, PathConfig};
    use crate::fields::{BcMode, Grid};
    use crate::init::{director_wave, taylor_green};

    fn check(xi: f64) -> GronwallReport {
        let g = Grid::unit(16, 16, BcMode::Periodic).unwrap();
        let params = Params {
            eps: 0.2,
            dt: 2e-4,
            t_end: 0.004,
            xi1: xi,
            xi2: xi,
            ..Params::default()
        };
        let noise = NoiseOperator::new(g, 2, 1.0, 1.5).unwrap();
        let h = MagneticField::wave(g, 1.0, 0.3);
        let (u0, d0) = (
            taylor_green(g, 1.0, 0.5).unwrap(),
            director_wave(g, 1.0, 0.4),
        );
        let mut cfg =
            PathConfig::new(params, noise.clone(), h.clone(), u0.clone(), d0.clone()).unwrap();
        let spec = EnsembleSpec::new(8, 2);
        let short = run_ensemble(&spec, &cfg).unwrap().stats;
        cfg.params.t_end *= 2.0;
        let long = run_ensemble(&spec, &cfg).unwrap().stats;
        let e0 = energy_record(&SimState::new(u0, d0.clone()).unwrap(), &params, &noise, &h)
            .unwrap()
            .total;
        let input = GronwallInput::new(params.t_end, &params, &noise, &h, &d0, e0).unwrap();
        gronwall_bound_check(&short, &long, &input).unwrap()
    }

    #[test]
    fn zero_noise_never_gains_energy() {
        let r = check(0.0);
        assert_eq!(r.zero_noise_ok, Some(true));
        assert_eq!(r.input.c, 0.0);
        assert!(r.passes(), "{r:?}");
    }

    #[test]
    fn noisy_growth_stays_under_the_bound() {
        let r = check(1.0);
        assert_eq!(r.zero_noise_ok, None);
        assert!(r.input.c > 0.0 && r.input.k > 0.0);
        assert!(r.passes(), "{r:?}");
    }
}
