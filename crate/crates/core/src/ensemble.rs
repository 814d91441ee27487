//! Path runner, reproducible Monte-Carlo ensembles and coupled ε-sweeps.
//!
//! Path seeds come from [`path_seed`], a splitmix64 finaliser applied to
//! `base + φ·(index + 1)` with the 64-bit golden-ratio increment `φ`. Ensemble
//! statistics are merged in a fixed pairwise tree over path indices, so the
//! result does not depend on the order in which paths ran.

use rayon::prelude::*;

use crate::diagnostics::{
    energy_budget_residual, energy_record, epsilon_sweep, EnergyRecord, SweepOptions, SweepTable,
    WeakLedgers,
};
use crate::dynamics::{step_coupled, Params, SimState, Stepper};
use crate::fields::{advect, divergence, weighted_dot, DirectorField, Grid, VectorField};
use crate::noise::{MagneticField, NoiseOperator, WienerDriver};
use crate::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of path `index` in an ensemble with base seed `base`.
pub fn path_seed(base: u64, index: u64) -> u64 {
    splitmix64(base.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Everything needed to run one path, apart from its seed.
#[derive(Clone, Debug)]
pub struct PathConfig {
    pub params: Params,
    pub noise: NoiseOperator,
    pub h: MagneticField,
    pub u0: VectorField,
    pub d0: DirectorField,
    /// Steps between energy records (the final step is always recorded).
    pub checkpoint_every: u64,
    pub track_budget: bool,
    /// Fine Brownian increments summed per step (see [`WienerDriver`]).
    pub substeps: u64,
    pub u_tests: Vec<VectorField>,
    pub d_tests: Vec<DirectorField>,
    /// Evaluate `<adv(u, u), u>` before every step.
    pub monitor_transport: bool,
}

impl PathConfig {
    pub fn new(
        params: Params,
        noise: NoiseOperator,
        h: MagneticField,
        u0: VectorField,
        d0: DirectorField,
    ) -> Result<Self> {
        params.validate()?;
        for g in [h.field().grid(), u0.grid(), d0.grid()] {
            if !g.conforms(noise.grid()) {
                return Err(Error::Shape(
                    "initial data, noise and field grids differ".into(),
                ));
            }
        }
        let n = params.n_steps().max(1);
        Ok(Self {
            params,
            noise,
            h,
            u0,
            d0,
            checkpoint_every: (n / 20).max(1),
            track_budget: true,
            substeps: 1,
            u_tests: Vec::new(),
            d_tests: Vec::new(),
            monitor_transport: false,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.noise.grid()
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        let mut c = self.clone();
        c.params.eps = eps;
        c
    }

    pub fn stepper(&self) -> Result<Stepper> {
        Ok(
            Stepper::new(self.params, self.noise.clone(), self.h.clone())?
                .with_budget(self.track_budget),
        )
    }
}

/// Per-step monitors over a whole path.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Monitors {
    /// `max_n ||div u_n||∞` after each step.
    pub max_divergence: f64,
    /// `max_n |<adv(u_n, u_n), u_n>| / (1 + ||u_n||³)`, when monitored.
    pub max_transport: f64,
}

#[derive(Clone, Debug)]
pub struct PathResult {
    pub seed: u64,
    pub records: Vec<EnergyRecord>,
    pub state: SimState,
    pub weak: WeakLedgers,
    pub monitors: Monitors,
}

impl PathResult {
    /// Budget defect between the first and last record.
    pub fn budget_residual(&self, params: &Params) -> Result<f64> {
        energy_budget_residual(
            &self.records[0],
            self.records.last().expect("records"),
            params,
        )
    }

    pub fn sup_total(&self) -> f64 {
        self.records
            .iter()
            .map(|r| r.total)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn run_path(cfg: &PathConfig, seed: u64) -> Result<PathResult> {
    run_path_with(cfg, seed, |_, _, _| Ok(()))
}

/// Runs one path, calling `observe` with the state, its record and the weak
/// ledgers at every checkpoint (including `t = 0`).
pub fn run_path_with(
    cfg: &PathConfig,
    seed: u64,
    mut observe: impl FnMut(&SimState, &EnergyRecord, &WeakLedgers) -> Result<()>,
) -> Result<PathResult> {
    let stepper = cfg.stepper()?;
    let params = *stepper.params();
    let mut state = SimState::new(cfg.u0.clone(), cfg.d0.clone())?;
    stepper.check_dt(&state)?;
    let mut driver = WienerDriver::new(seed, cfg.noise.n_modes()).with_substeps(cfg.substeps);
    let mut weak = WeakLedgers::new(&cfg.u_tests, &cfg.d_tests, &state.u, &state.d)?;
    let mut monitors = Monitors::default();
    let vbc = cfg.grid().velocity_bc();

    let first = energy_record(&state, &params, &cfg.noise, &cfg.h)?;
    observe(&state, &first, &weak)?;
    let mut records = vec![first];
    let n = params.n_steps();
    let every = cfg.checkpoint_every.max(1);
    for s in 1..=n {
        if cfg.monitor_transport {
            let u = &state.u;
            let a = weighted_dot(&advect(u, u, vbc), u).abs();
            let norm = weighted_dot(u, u).sqrt();
            monitors.max_transport = monitors.max_transport.max(a / (1.0 + norm.powi(3)));
        }
        let trace = step_coupled(&mut state, &stepper, &mut driver)?;
        weak.record(&trace, &params, &cfg.h)?;
        monitors.max_divergence = monitors
            .max_divergence
            .max(divergence(&state.u, vbc).max_abs());
        if s % every == 0 || s == n {
            let rec = energy_record(&state, &params, &cfg.noise, &cfg.h)?;
            observe(&state, &rec, &weak)?;
            records.push(rec);
        }
    }
    Ok(PathResult {
        seed,
        records,
        state,
        weak,
        monitors,
    })
}

/// Count, mean, centred second moment, min and max of a sample; mergeable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Self {
            count: 0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Moments {
    pub fn of(x: f64) -> Self {
        Self {
            count: 1,
            mean: x,
            m2: 0.0,
            min: x,
            max: x,
        }
    }

    pub fn merge(&self, o: &Self) -> Self {
        if self.count == 0 {
            return *o;
        }
        if o.count == 0 {
            return *self;
        }
        let n = (self.count + o.count) as f64;
        let delta = o.mean - self.mean;
        let (na, nb) = (self.count as f64, o.count as f64);
        Self {
            count: self.count + o.count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + o.m2 + delta * delta * na * nb / n,
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn se(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    /// Whether `|mean − target| ≤ k · SE`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se()
    }
}

/// Merges in a fixed balanced binary tree over the slice order.
pub fn tree_reduce(items: &[Moments]) -> Moments {
    match items.len() {
        0 => Moments::default(),
        1 => items[0],
        n => {
            let (a, b) = items.split_at(n / 2);
            tree_reduce(a).merge(&tree_reduce(b))
        }
    }
}

pub fn sample_moments(xs: &[f64]) -> Moments {
    tree_reduce(&xs.iter().map(|&x| Moments::of(x)).collect::<Vec<_>>())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnsembleSpec {
    pub paths: usize,
    pub base_seed: u64,
    /// Execution order of path indices; `None` runs them in index order.
    pub order: Option<Vec<usize>>,
}

impl EnsembleSpec {
    pub fn new(paths: usize, base_seed: u64) -> Self {
        Self {
            paths,
            base_seed,
            order: None,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.paths as u64)
            .map(|i| path_seed(self.base_seed, i))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleStats {
    pub seeds: Vec<u64>,
    pub times: Vec<f64>,
    /// `[checkpoint][column]`, columns as in [`EnergyRecord::COLUMNS`].
    pub per_checkpoint: Vec<Vec<Moments>>,
    /// Path-wise `sup_t total` over checkpoints.
    pub sup_total: Moments,
    pub sup_totals: Vec<f64>,
    /// Final `∫ (μ||∇u||² + λγ||τ||²) dt`.
    pub dissipation: Moments,
    /// Path-wise `sup_t [total(t) + ∫_0^t dissipation]` over checkpoints.
    pub q: Moments,
    pub ledger1: Moments,
    pub ledger2: Moments,
    /// Final budget defect, when the paths tracked it.
    pub budget_residual: Option<Moments>,
    pub max_divergence: f64,
}

impl EnsembleStats {
    /// Martingale check on both ledgers: means within `k` standard errors of 0.
    pub fn martingale_test(&self, k: f64) -> [bool; 2] {
        [self.ledger1.within(0.0, k), self.ledger2.within(0.0, k)]
    }

    /// Checkpoint statistics of one record column by name.
    pub fn column(&self, name: &str) -> Option<Vec<Moments>> {
        let c = EnergyRecord::COLUMNS.iter().position(|n| *n == name)?;
        Some(self.per_checkpoint.iter().map(|row| row[c]).collect())
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleResult {
    pub stats: EnsembleStats,
    /// Per-path results in index order.
    pub paths: Vec<PathResult>,
}

fn run_all<T: Send>(
    spec: &EnsembleSpec,
    f: impl Fn(usize, u64) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let order: Vec<usize> = match &spec.order {
        Some(o) => {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..spec.paths).collect::<Vec<_>>() {
                return Err(Error::Argument(
                    "execution order must permute the path indices".into(),
                ));
            }
            o.clone()
        }
        None => (0..spec.paths).collect(),
    };
    let seeds = spec.seeds();
    let done: Vec<(usize, Result<T>)> = order.par_iter().map(|&i| (i, f(i, seeds[i]))).collect();
    let mut slots: Vec<Option<Result<T>>> = (0..spec.paths).map(|_| None).collect();
    for (i, r) in done {
        slots[i] = Some(r);
    }
    slots
        .into_iter()
        .map(|s| s.expect("every path ran"))
        .collect()
}

/// Runs `spec.paths` independent paths and reduces their statistics.
pub fn run_ensemble(spec: &EnsembleSpec, cfg: &PathConfig) -> Result<EnsembleResult> {
    if spec.paths < 2 {
        return Err(Error::Argument(
            "an ensemble needs at least two paths".into(),
        ));
    }
    let paths = run_all(spec, |_, seed| run_path(cfg, seed))?;
    let n_chk = paths[0].records.len();
    let times = paths[0].records.iter().map(|r| r.t).collect();
    let per_checkpoint = (0..n_chk)
        .map(|c| {
            (0..EnergyRecord::COLUMNS.len())
                .map(|k| {
                    let xs: Vec<f64> = paths.iter().map(|p| p.records[c].values()[k]).collect();
                    sample_moments(&xs)
                })
                .collect()
        })
        .collect();
    let last = |p: &PathResult| *p.records.last().expect("records");
    let sup_totals: Vec<f64> = paths.iter().map(|p| p.sup_total()).collect();
    let diss: Vec<f64> = paths.iter().map(|p| last(p).int_dissipation).collect();
    let q: Vec<f64> = paths
        .iter()
        .map(|p| {
            p.records
                .iter()
                .map(|r| r.total + r.int_dissipation)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let l1: Vec<f64> = paths.iter().map(|p| last(p).ledger1).collect();
    let l2: Vec<f64> = paths.iter().map(|p| last(p).ledger2).collect();
    let budget_residual = if cfg.track_budget {
        let r: Vec<f64> = paths
            .iter()
            .map(|p| p.budget_residual(&cfg.params))
            .collect::<Result<_>>()?;
        Some(sample_moments(&r))
    } else {
        None
    };
    let stats = EnsembleStats {
        seeds: spec.seeds(),
        times,
        per_checkpoint,
        sup_total: sample_moments(&sup_totals),
        sup_totals,
        dissipation: sample_moments(&diss),
        q: sample_moments(&q),
        ledger1: sample_moments(&l1),
        ledger2: sample_moments(&l2),
        budget_residual,
        max_divergence: paths
            .iter()
            .map(|p| p.monitors.max_divergence)
            .fold(0.0, f64::max),
    };
    Ok(EnsembleResult { stats, paths })
}

#[derive(Clone, Debug)]
pub struct CoupledSweep {
    pub eps: Vec<f64>,
    pub tables: Vec<SweepTable>,
    /// `[gap][test function]` statistics of the absolute Cauchy differences
    /// of the time-integrated stress pairings.
    pub mean_cauchy: Vec<Vec<Moments>>,
}

/// [`epsilon_sweep`] on every path of the ensemble, with shared noise across
/// ε within each path.
pub fn coupled_sweep(
    spec: &EnsembleSpec,
    cfg: &PathConfig,
    eps_list: &[f64],
    phis: &[VectorField],
    opts: &SweepOptions,
) -> Result<CoupledSweep> {
    if spec.paths == 0 {
        return Err(Error::Argument("a sweep needs at least one path".into()));
    }
    let tables = run_all(spec, |_, seed| {
        epsilon_sweep(cfg, eps_list, seed, phis, opts)
    })?;
    let gaps = eps_list.len().saturating_sub(1);
    let mean_cauchy = (0..gaps)
        .map(|k| {
            (0..phis.len())
                .map(|j| {
                    let xs: Vec<f64> = tables.iter().map(|t| t.cauchy[k][j]).collect();
                    sample_moments(&xs)
                })
                .collect()
        })
        .collect();
    Ok(CoupledSweep {
        eps: eps_list.to_vec(),
        tables,
        mean_cauchy,
    })
}

#[cfg(test)]
mod tests;
