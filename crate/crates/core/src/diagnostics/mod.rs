//! Energies and the stochastic energy budget, Pohozaev residuals, defect
//! detection, stress pairings and weak-form residuals.

mod defects;
mod energy;
mod geometry;
mod gronwall;
mod pohozaev;
mod stress;
mod sweep;
mod weak;

pub use defects::{
    default_delta0_sq, defect_detect, local_energy, DefectReport, DEFAULT_RADIUS_CELLS,
};
pub use energy::{energy_budget_residual, energy_record, sphere_defect, EnergyRecord};
pub use geometry::{ball_fits, ball_quadrature, cell_disk_area, interpolate, QuadPoint};
pub use gronwall::{gronwall_bound_check, GronwallInput, GronwallReport};
pub use pohozaev::{pohozaev_all, pohozaev_residual, PohozaevReport, VectorFieldChoice};
pub use stress::{
    director_test_functions, stream_test_function, stress_pairing, stress_tensor,
    velocity_test_functions,
};
pub use sweep::{epsilon_sweep, SweepOptions, SweepRow, SweepTable};
pub use weak::WeakLedgers;
