//! Wiener drivers, the noise operator acting on the velocity and the magnetic
//! field acting on the director.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::fields::{DirectorField, Field, Grid, Projector, ScalarField, VectorField};
use crate::{Error, Result};

#[inline]
pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Brownian increments for one step: `db[i]` drives mode `i + 1` of the
/// velocity noise, `dw2` the director noise.
#[derive(Clone, Debug, PartialEq)]
pub struct Increments {
    pub db: Vec<f64>,
    pub dw2: f64,
}

impl Increments {
    pub fn zero(n_modes: usize) -> Self {
        Self {
            db: vec![0.0; n_modes],
            dw2: 0.0,
        }
    }
}

/// Counter-based Gaussian source keyed by `(seed, fine step, mode)`.
///
/// Mode 0 is the director Brownian motion, modes `1..=N` the velocity modes.
/// A driver with `substeps = k` returns at each step the sum of `k` fine
/// increments of length `dt / k`, so a run at `dt` with `k = 2` sees exactly
/// the same Brownian path as a run at `dt / 2` with `k = 1`.
#[derive(Clone, Debug)]
pub struct WienerDriver {
    seed: u64,
    n_modes: usize,
    substeps: u64,
    step: u64,
}

impl WienerDriver {
    pub fn new(seed: u64, n_modes: usize) -> Self {
        Self {
            seed,
            n_modes,
            substeps: 1,
            step: 0,
        }
    }

    pub fn with_substeps(mut self, substeps: u64) -> Self {
        assert!(substeps >= 1, "substeps must be positive");
        self.substeps = substeps;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Steps drawn so far.
    pub fn position(&self) -> u64 {
        self.step
    }

    /// Standard normal draw for one fine step and mode.
    pub fn standard_normal(seed: u64, fine_step: u64, mode: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((fine_step << 16) | mode);
        StandardNormal.sample(&mut rng)
    }

    pub fn sample(&mut self, dt: f64) -> Result<Increments> {
        if !(dt >= 0.0) || !dt.is_finite() {
            return Err(Error::Argument(format!(
                "time step must be nonnegative, got {dt}"
            )));
        }
        let k = self.substeps;
        let scale = (dt / k as f64).sqrt();
        let mut draw = |mode: u64| {
            let mut s = 0.0;
            for sub in 0..k {
                s += Self::standard_normal(self.seed, self.step * k + sub, mode);
            }
            s * scale
        };
        let dw2 = draw(0);
        let db = (1..=self.n_modes as u64).map(&mut draw).collect();
        self.step += 1;
        Ok(Increments { db, dw2 })
    }
}

/// Diagonal noise operator `S(u) e_i = σ0 i^(-q) P(ψ_i u + g_i)`.
#[derive(Clone, Debug)]
pub struct NoiseOperator {
    sigma0: f64,
    q: f64,
    shapes: Vec<ScalarField>,
    additive: Vec<VectorField>,
    projector: Projector,
}

impl NoiseOperator {
    /// Default cosine shapes and no additive part.
    pub fn new(grid: Grid, n_modes: usize, sigma0: f64, q: f64) -> Result<Self> {
        if !(sigma0 >= 0.0) || !q.is_finite() {
            return Err(Error::Argument(
                "noise amplitude must be nonnegative".into(),
            ));
        }
        let shapes = (1..=n_modes).map(|i| default_shape(&grid, i)).collect();
        Ok(Self {
            sigma0,
            q,
            shapes,
            additive: Vec::new(),
            projector: Projector::new(grid),
        })
    }

    pub fn with_shapes(mut self, shapes: Vec<ScalarField>) -> Result<Self> {
        for s in &shapes {
            s.ensure_on(self.projector.grid())?;
        }
        self.shapes = shapes;
        Ok(self)
    }

    /// Additive seeds `g_i`; they are projected so each is divergence-free.
    pub fn with_additive(mut self, seeds: Vec<VectorField>) -> Result<Self> {
        if seeds.len() != self.shapes.len() {
            return Err(Error::Argument(format!(
                "{} additive seeds for {} modes",
                seeds.len(),
                self.shapes.len()
            )));
        }
        self.additive = seeds
            .iter()
            .map(|g| self.projector.project(g))
            .collect::<Result<_>>()?;
        Ok(self)
    }

    pub fn with_projector(mut self, projector: Projector) -> Result<Self> {
        if !projector.grid().conforms(self.projector.grid()) {
            return Err(Error::Shape("projector grid differs".into()));
        }
        self.projector = projector;
        Ok(self)
    }

    pub fn n_modes(&self) -> usize {
        self.shapes.len()
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn grid(&self) -> &Grid {
        self.projector.grid()
    }

    pub fn shapes(&self) -> &[ScalarField] {
        &self.shapes
    }

    fn coefficient(&self, i: usize) -> f64 {
        self.sigma0 * ((i + 1) as f64).powf(-self.q)
    }

    /// Unprojected `ψ_i u + g_i` scaled by `c`, accumulated into `out`.
    fn accumulate(&self, out: &mut VectorField, i: usize, u: &VectorField, c: f64) {
        let psi = self.shapes[i].values();
        for ((o, uv), p) in out.values_mut().iter_mut().zip(u.values()).zip(psi) {
            o[0] += c * p[0] * uv[0];
            o[1] += c * p[0] * uv[1];
        }
        if let Some(g) = self.additive.get(i) {
            out.axpy(c, g);
        }
    }

    /// `S(u) e_i` for `i` counted from zero.
    pub fn mode(&self, u: &VectorField, i: usize) -> Result<VectorField> {
        u.ensure_on(self.grid())?;
        let mut v = VectorField::zeros(*self.grid());
        self.accumulate(&mut v, i, u, self.coefficient(i));
        self.projector.project(&v)
    }

    /// `sum_i S(u) e_i db_i`, computed with a single projection.
    pub fn apply(&self, u: &VectorField, db: &[f64]) -> Result<VectorField> {
        u.ensure_on(self.grid())?;
        if db.len() != self.n_modes() {
            return Err(Error::Argument(format!(
                "{} increments for {} modes",
                db.len(),
                self.n_modes()
            )));
        }
        let mut v = VectorField::zeros(*self.grid());
        for (i, &b) in db.iter().enumerate() {
            if b != 0.0 {
                self.accumulate(&mut v, i, u, self.coefficient(i) * b);
            }
        }
        self.projector.project(&v)
    }

    /// Hilbert-Schmidt norm squared `sum_i ||S(u) e_i||^2`.
    pub fn hs_norm_sq(&self, u: &VectorField) -> Result<f64> {
        let mut s = 0.0;
        for i in 0..self.n_modes() {
            let m = self.mode(u, i)?;
            s += crate::fields::weighted_dot(&m, &m);
        }
        Ok(s)
    }

    /// `C` with `hs_norm_sq(u) <= C (1 + ||u||^2)` for every `u`.
    pub fn linear_growth_constant(&self) -> f64 {
        let mut c = 0.0;
        for i in 0..self.n_modes() {
            let psi = self.shapes[i].max_abs();
            let g = self
                .additive
                .get(i)
                .map(crate::fields::norm_l2)
                .unwrap_or(0.0);
            c += self.coefficient(i).powi(2) * 2.0 * (psi * psi).max(g * g);
        }
        c
    }

    /// Lipschitz constant of `u -> S(u)` in Hilbert-Schmidt norm.
    pub fn lipschitz_constant(&self) -> f64 {
        (0..self.n_modes())
            .map(|i| (self.coefficient(i) * self.shapes[i].max_abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// `cos(i π x / lx) cos(i π y / ly)`, with doubled wavenumber on periodic
/// grids so the shape is continuous across the seam.
pub fn default_shape(grid: &Grid, i: usize) -> ScalarField {
    let m = if grid.is_periodic() { 2.0 } else { 1.0 } * i as f64 * std::f64::consts::PI;
    let (lx, ly) = (grid.lx(), grid.ly());
    Field::from_fn(*grid, |x, y| [(m * x / lx).cos() * (m * y / ly).cos()])
}

/// `(d x h) dw2` pointwise.
pub fn apply_noise_d(d: &DirectorField, h: &MagneticField, dw2: f64) -> Result<DirectorField> {
    d.ensure_conforms(&h.field)?;
    Ok(d.zip_map(&h.field, |a, b| {
        let c = cross(a, b);
        [c[0] * dw2, c[1] * dw2, c[2] * dw2]
    }))
}

/// `sqrt(sum c_i^2 / i^2)`, the weaker norm in which the cylindrical process
/// converges.
pub fn k2_norm(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| c * c / ((i + 1) * (i + 1)) as f64)
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub enum MagneticSpec {
    Const([f64; 3]),
    /// `(a sin(2πy/ly), a cos(2πx/lx), h0)`.
    Wave {
        h0: f64,
        a: f64,
    },
    Field,
}

/// The magnetic field sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MagneticField {
    spec: MagneticSpec,
    field: DirectorField,
}

impl MagneticField {
    pub fn constant(grid: Grid, h: [f64; 3]) -> Self {
        Self {
            spec: MagneticSpec::Const(h),
            field: Field::constant(grid, h),
        }
    }

    pub fn wave(grid: Grid, h0: f64, a: f64) -> Self {
        let tau = 2.0 * std::f64::consts::PI;
        let (lx, ly) = (grid.lx(), grid.ly());
        Self {
            spec: MagneticSpec::Wave { h0, a },
            field: Field::from_fn(grid, |x, y| {
                [a * (tau * y / ly).sin(), a * (tau * x / lx).cos(), h0]
            }),
        }
    }

    pub fn from_field(field: DirectorField) -> Result<Self> {
        if !field.is_finite() {
            return Err(Error::Argument("magnetic field must be finite".into()));
        }
        Ok(Self {
            spec: MagneticSpec::Field,
            field,
        })
    }

    pub fn zero(grid: Grid) -> Self {
        Self::constant(grid, [0.0; 3])
    }

    pub fn field(&self) -> &DirectorField {
        &self.field
    }

    pub fn spec(&self) -> &MagneticSpec {
        &self.spec
    }

    pub fn sup_norm(&self) -> f64 {
        self.field.max_norm()
    }

    pub fn is_constant(&self) -> bool {
        let v = self.field.values();
        v.iter().all(|x| *x == v[0])
    }

    /// Largest forward difference quotient of any component.
    pub fn gradient_sup(&self) -> f64 {
        let g = *self.field.grid();
        let (nx, ny) = (g.nx(), g.ny());
        let v = self.field.values();
        let mut m: f64 = 0.0;
        for j in 0..ny {
            for i in 0..nx {
                let n = j * nx + i;
                let right = if i + 1 < nx {
                    Some(n + 1)
                } else if g.is_periodic() {
                    Some(j * nx)
                } else {
                    None
                };
                let up = if j + 1 < ny {
                    Some(n + nx)
                } else if g.is_periodic() {
                    Some(i)
                } else {
                    None
                };
                let mut sq = 0.0;
                for k in 0..3 {
                    let dx = right.map_or(0.0, |r| (v[r][k] - v[n][k]) / g.hx());
                    let dy = up.map_or(0.0, |u| (v[u][k] - v[n][k]) / g.hy());
                    sq += dx * dx + dy * dy;
                }
                m = m.max(sq.sqrt());
            }
        }
        m
    }
}
