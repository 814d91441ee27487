//! Coupled ε-sweeps: one Wiener path, several penalty parameters.

use super::{default_delta0_sq, defect_detect, stress_pairing, DEFAULT_RADIUS_CELLS};
use crate::ensemble::{run_path_with, PathConfig};
use crate::fields::VectorField;
use crate::{Error, Result};

/// Defect-detection settings; `None` selects the defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SweepOptions {
    pub radius: Option<f64>,
    pub delta0_sq: Option<f64>,
}

/// One checkpoint of one ε.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub t: f64,
    /// Instantaneous stress pairings, one per test function.
    pub pairings: Vec<f64>,
    pub penalty: f64,
    pub sphere_defect: f64,
    pub defect_count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub eps: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// `[ε][φ]`: `∫_0^T <T(d), ∇φ> dt`.
    pub integrated: Vec<Vec<f64>>,
    /// `[gap][φ]`: `|integrated[k] − integrated[k + 1]|`.
    pub cauchy: Vec<Vec<f64>>,
    /// `sup_t ∫F_ε` over checkpoints, per ε.
    pub sup_penalty: Vec<f64>,
    /// `|| |d|² − 1 ||` at the final time, per ε.
    pub final_sphere_defect: Vec<f64>,
    /// Some checkpoint flagged a defect; pairing convergence may then stall.
    pub concentration: bool,
}

impl SweepTable {
    /// Leading CSV columns; one `pairing_<j>` column per test function follows.
    pub const COLUMNS: [&'static str; 5] = ["eps", "t", "penalty", "sphere_defect", "defect_count"];

    /// `|| |d|² − 1 || ≤ 2ε (sup ∫F_ε)^½` at every checkpoint.
    pub fn penalty_bound_holds(&self) -> bool {
        self.rows.iter().all(|r| {
            let k = self
                .eps
                .iter()
                .position(|&e| e == r.eps)
                .expect("row eps listed");
            r.sphere_defect <= 2.0 * r.eps * self.sup_penalty[k].sqrt() * (1.0 + 1e-9) + 1e-14
        })
    }

    /// Cauchy gaps shrink for test function `j` (strictly, up to `slack`).
    pub fn cauchy_decreasing(&self, j: usize, slack: f64) -> bool {
        self.cauchy
            .windows(2)
            .all(|w| w[1][j] < w[0][j] * (1.0 + slack))
    }
}

/// Runs the path of `seed` once per ε in `eps_list` (strictly decreasing)
/// and tabulates pairings against `phis`, the penalty, the sphere defect and
/// the defect count at every checkpoint.
pub fn epsilon_sweep(
    cfg: &PathConfig,
    eps_list: &[f64],
    seed: u64,
    phis: &[VectorField],
    opts: &SweepOptions,
) -> Result<SweepTable> {
    if eps_list.is_empty() {
        return Err(Error::Argument("empty ε list".into()));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Argument(
            "ε list must be positive and strictly decreasing".into(),
        ));
    }
    let grid = *cfg.grid();
    let radius = opts.radius.unwrap_or(DEFAULT_RADIUS_CELLS * grid.h_min());
    let mut rows = Vec::new();
    let mut integrated = Vec::with_capacity(eps_list.len());
    let mut sup_penalty = Vec::with_capacity(eps_list.len());
    let mut final_sphere_defect = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let mut c = cfg.with_eps(eps);
        c.u_tests = phis.to_vec();
        let delta0_sq = match opts.delta0_sq {
            Some(v) => v,
            None => default_delta0_sq(&grid, eps, radius)?,
        };
        let mut sup = 0.0f64;
        let path = run_path_with(&c, seed, |state, rec, _| {
            let pairings = phis
                .iter()
                .map(|phi| stress_pairing(&state.d, phi))
                .collect::<Result<Vec<_>>>()?;
            let defects = defect_detect(&state.d, eps, radius, delta0_sq)?;
            sup = sup.max(rec.penalty);
            rows.push(SweepRow {
                eps,
                t: rec.t,
                pairings,
                penalty: rec.penalty,
                sphere_defect: rec.sphere_defect,
                defect_count: defects.count(),
            });
            Ok(())
        })?;
        integrated.push(path.weak.stress_integrals());
        sup_penalty.push(sup);
        final_sphere_defect.push(path.records.last().expect("records").sphere_defect);
    }
    let cauchy = integrated
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).collect())
        .collect();
    let concentration = rows.iter().any(|r| r.defect_count > 0);
    Ok(SweepTable {
        eps: eps_list.to_vec(),
        rows,
        integrated,
        cauchy,
        sup_penalty,
        final_sphere_defect,
        concentration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::velocity_test_functions;
    use crate::dynamics::Params;
    use crate::fields::{BcMode, Grid};
    use crate::init::{director_wave, taylor_green};
    use crate::noise::{MagneticField, NoiseOperator};

    fn config() -> PathConfig {
        let g = Grid::unit(16, 16, BcMode::Periodic).unwrap();
        let params = Params {
            dt: 2e-4,
            t_end: 0.002,
            xi1: 0.5,
            xi2: 0.5,
            ..Params::default()
        };
        PathConfig::new(
            params,
            NoiseOperator::new(g, 2, 1.0, 1.5).unwrap(),
            MagneticField::constant(g, [0.0, 0.0, 1.0]),
            taylor_green(g, 1.0, 0.3).unwrap(),
            director_wave(g, 1.0, 0.1),
        )
        .unwrap()
    }

    #[test]
    fn rejects_unordered_eps() {
        let c = config();
        let phis = velocity_test_functions(c.grid());
        for bad in [&[][..], &[0.1, 0.2], &[0.2, 0.2], &[0.2, -0.1]] {
            assert!(epsilon_sweep(&c, bad, 1, &phis, &SweepOptions::default()).is_err());
        }
    }

    #[test]
    fn same_seed_same_table() {
        let c = config();
        let phis = velocity_test_functions(c.grid());
        let a = epsilon_sweep(&c, &[0.4, 0.2], 8, &phis, &SweepOptions::default()).unwrap();
        let b = epsilon_sweep(&c, &[0.4, 0.2], 8, &phis, &SweepOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cauchy.len(), 1);
        assert_eq!(
            a.rows.len(),
            2 * (c.params.n_steps() as usize / c.checkpoint_every as usize + 1)
        );
        assert!(a.penalty_bound_holds());
        assert!(!a.concentration);
    }
}
