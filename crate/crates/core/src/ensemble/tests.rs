use super::*;
use crate::diagnostics::velocity_test_functions;
use crate::fields::BcMode;
use crate::init::{director_wave, taylor_green};
use proptest::prelude::*;

fn config(xi: f64, t_end: f64) -> PathConfig {
    let g = Grid::unit(16, 16, BcMode::Periodic).unwrap();
    let params = Params {
        eps: 0.2,
        xi1: xi,
        xi2: xi,
        dt: 2e-4,
        t_end,
        ..Params::default()
    };
    let mut c = PathConfig::new(
        params,
        NoiseOperator::new(g, 3, 1.0, 1.5).unwrap(),
        MagneticField::wave(g, 1.0, 0.3),
        taylor_green(g, 1.0, 0.5).unwrap(),
        director_wave(g, 1.0, 0.4),
    )
    .unwrap();
    c.checkpoint_every = 10;
    c
}

#[test]
fn splitter_seeds_are_distinct() {
    let mut s: Vec<u64> = (0..10_000).map(|i| path_seed(7, i)).collect();
    s.sort_unstable();
    s.dedup();
    assert_eq!(s.len(), 10_000);
}

#[test]
fn same_seed_same_path() {
    let c = config(0.5, 0.004);
    let a = run_path(&c, 11).unwrap();
    let b = run_path(&c, 11).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.state, b.state);
    let z = config(0.0, 0.004);
    assert_eq!(
        run_path(&z, 1).unwrap().records,
        run_path(&z, 2).unwrap().records
    );
}

#[test]
fn unstable_dt_is_refused_unless_overridden() {
    let mut c = config(0.0, 0.01);
    c.params.dt = 5e-3;
    assert!(matches!(run_path(&c, 0), Err(Error::Stability { .. })));
    c.params.allow_unstable_dt = true;
    c.params.t_end = 5e-3;
    assert!(run_path(&c, 0).is_ok());
}

#[test]
fn checkpoints_include_both_ends() {
    let c = config(0.5, 0.005);
    let p = run_path(&c, 3).unwrap();
    let steps: Vec<u64> = p.records.iter().map(|r| r.step).collect();
    assert_eq!(steps, vec![0, 10, 20, 25]);
    assert!(p.monitors.max_divergence < 1e-9);
}

#[test]
fn sup_is_monotone_in_horizon() {
    let (a, b) = (config(1.0, 0.004), config(1.0, 0.008));
    for seed in 0..3 {
        let (pa, pb) = (run_path(&a, seed).unwrap(), run_path(&b, seed).unwrap());
        assert_eq!(pa.records[..], pb.records[..pa.records.len()]);
        assert!(pa.sup_total() <= pb.sup_total());
    }
}

#[test]
fn zero_noise_ensemble_has_zero_variance() {
    let r = run_ensemble(&EnsembleSpec::new(2, 5), &config(0.0, 0.004)).unwrap();
    assert_eq!(r.stats.sup_total.variance(), 0.0);
    for row in &r.stats.per_checkpoint {
        assert!(row.iter().all(|m| m.variance() == 0.0));
    }
}

#[test]
fn execution_order_does_not_change_stats() {
    let c = config(1.0, 0.002);
    let a = run_ensemble(&EnsembleSpec::new(6, 9), &c).unwrap();
    let mut spec = EnsembleSpec::new(6, 9);
    spec.order = Some(vec![4, 1, 5, 0, 3, 2]);
    let b = run_ensemble(&spec, &c).unwrap();
    assert_eq!(a.stats, b.stats);
    spec.order = Some(vec![0, 0, 1, 2, 3, 4]);
    assert!(run_ensemble(&spec, &c).is_err());
}

#[test]
fn ledger_means_vanish_in_expectation() {
    let r = run_ensemble(&EnsembleSpec::new(32, 21), &config(1.0, 0.004)).unwrap();
    assert_eq!(
        r.stats.martingale_test(3.0),
        [true, true],
        "{:?} {:?}",
        r.stats.ledger1,
        r.stats.ledger2
    );
    assert!(r.stats.ledger1.se() > 0.0 && r.stats.ledger2.se() > 0.0);
}

#[test]
fn sweep_of_one_eps_has_no_cauchy_rows() {
    let c = config(0.5, 0.002);
    let phis = velocity_test_functions(c.grid());
    let s = coupled_sweep(
        &EnsembleSpec::new(1, 4),
        &c,
        &[0.2],
        &phis,
        &SweepOptions::default(),
    )
    .unwrap();
    assert!(s.mean_cauchy.is_empty() && s.tables[0].cauchy.is_empty());
}

#[test]
fn single_path_sweep_matches_direct_sweep() {
    let c = config(0.5, 0.002);
    let phis = velocity_test_functions(c.grid());
    let spec = EnsembleSpec::new(1, 4);
    let eps = [0.3, 0.2];
    let s = coupled_sweep(&spec, &c, &eps, &phis, &SweepOptions::default()).unwrap();
    let direct = epsilon_sweep(&c, &eps, spec.seeds()[0], &phis, &SweepOptions::default()).unwrap();
    assert_eq!(s.tables[0], direct);
    for (j, m) in s.mean_cauchy[0].iter().enumerate() {
        assert_eq!(m.mean, direct.cauchy[0][j]);
    }
    assert!(direct.penalty_bound_holds());
}

#[test]
fn moments_match_two_pass_formulas() {
    let xs = [1.0, 4.0, -2.0, 3.5, 0.25];
    let m = sample_moments(&xs);
    let mean = xs.iter().sum::<f64>() / 5.0;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
    assert!((m.mean - mean).abs() < 1e-14 && (m.variance() - var).abs() < 1e-13);
    assert_eq!((m.min, m.max, m.count), (-2.0, 4.0, 5));
    assert_eq!(Moments::default().merge(&m), m);
}

proptest! {
    #[test]
    fn merge_is_associative_up_to_rounding(xs in prop::collection::vec(-1e3f64..1e3, 3..40), cut in 1usize..1000) {
        let k = 1 + cut % (xs.len() - 1);
        let whole = sample_moments(&xs);
        let split = sample_moments(&xs[..k]).merge(&sample_moments(&xs[k..]));
        prop_assert!((whole.mean - split.mean).abs() <= 1e-9 * (1.0 + whole.mean.abs()));
        prop_assert!((whole.variance() - split.variance()).abs() <= 1e-8 * (1.0 + whole.variance()));
        prop_assert!(whole.variance() >= 0.0);
    }
}
