//! Grid geometry, field storage and the discrete differential operators.
//!
//! All fields are collocated on grid nodes. Inner products use the trapezoidal
//! rule on non-periodic grids and the rectangle rule on periodic ones; every
//! operator closure is chosen so that the discrete summation-by-parts
//! identities hold with respect to that single weighting.

mod field;
mod grid;
pub mod io;
mod ops;
mod projection;

pub use field::{DirectorField, Field, ScalarField, VectorField};
pub use grid::{Bc, BcMode, Grid};
pub use ops::{
    advect, dirichlet_form, divergence, gradient, inner_product, integrate, laplacian, norm_l2,
    Gradient,
};
pub use projection::{leray_project, ProjectionSolver, Projector, DEFAULT_PROJ_TOL};

pub(crate) use ops::weighted_dot;
