use crate::{Error, Result};

/// Boundary closure applied by a differential operator to one field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Bc {
    Periodic,
    /// Homogeneous Dirichlet for velocity (`u = 0` on the boundary).
    NoSlip,
    /// Zero normal derivative (even reflection of ghost values).
    Neumann,
    /// Boundary values held fixed at their initial data.
    Dirichlet,
}

/// Boundary configuration for the coupled system. Periodicity applies to both
/// velocity and director or to neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcMode {
    Periodic,
    NoSlipNeumann,
    NoSlipDirichlet,
}

impl BcMode {
    pub fn code(self) -> u8 {
        match self {
            BcMode::Periodic => 0,
            BcMode::NoSlipNeumann => 1,
            BcMode::NoSlipDirichlet => 2,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(BcMode::Periodic),
            1 => Ok(BcMode::NoSlipNeumann),
            2 => Ok(BcMode::NoSlipDirichlet),
            other => Err(Error::Format(format!("unknown boundary code {other}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BcMode::Periodic => "periodic",
            BcMode::NoSlipNeumann => "noslip-neumann",
            BcMode::NoSlipDirichlet => "noslip-dirichlet",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "periodic" => Some(BcMode::Periodic),
            "noslip-neumann" | "neumann" => Some(BcMode::NoSlipNeumann),
            "noslip-dirichlet" | "dirichlet" => Some(BcMode::NoSlipDirichlet),
            _ => None,
        }
    }
}

/// Uniform rectangular node grid on `[0, lx] x [0, ly]`.
///
/// Non-periodic grids carry nodes on the boundary (`hx = lx / (nx - 1)`);
/// periodic grids identify `x = 0` with `x = lx` (`hx = lx / nx`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    mode: BcMode,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64, mode: BcMode) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Argument(format!(
                "grid needs at least 4x4 nodes, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Argument(format!(
                "domain lengths must be positive, got {lx} x {ly}"
            )));
        }
        Ok(Grid {
            nx,
            ny,
            lx,
            ly,
            mode,
        })
    }

    /// Unit square with the given node counts.
    pub fn unit(nx: usize, ny: usize, mode: BcMode) -> Result<Self> {
        Grid::new(nx, ny, 1.0, 1.0, mode)
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn mode(&self) -> BcMode {
        self.mode
    }

    #[inline]
    pub fn is_periodic(&self) -> bool {
        self.mode == BcMode::Periodic
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn hx(&self) -> f64 {
        if self.is_periodic() {
            self.lx / self.nx as f64
        } else {
            self.lx / (self.nx - 1) as f64
        }
    }

    #[inline]
    pub fn hy(&self) -> f64 {
        if self.is_periodic() {
            self.ly / self.ny as f64
        } else {
            self.ly / (self.ny - 1) as f64
        }
    }

    pub fn h_min(&self) -> f64 {
        self.hx().min(self.hy())
    }

    pub fn area(&self) -> f64 {
        self.lx * self.ly
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }

    /// Row-major node index (`j` selects the row).
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        !self.is_periodic() && (i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny)
    }

    pub fn velocity_bc(&self) -> Bc {
        match self.mode {
            BcMode::Periodic => Bc::Periodic,
            _ => Bc::NoSlip,
        }
    }

    pub fn director_bc(&self) -> Bc {
        match self.mode {
            BcMode::Periodic => Bc::Periodic,
            BcMode::NoSlipNeumann => Bc::Neumann,
            BcMode::NoSlipDirichlet => Bc::Dirichlet,
        }
    }

    /// Quadrature weight of node `(i, j)`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let mut w = self.hx() * self.hy();
        if !self.is_periodic() {
            if i == 0 || i + 1 == self.nx {
                w *= 0.5;
            }
            if j == 0 || j + 1 == self.ny {
                w *= 0.5;
            }
        }
        w
    }

    /// All quadrature weights in storage order.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                w.push(self.weight(i, j));
            }
        }
        w
    }

    /// Same node layout and spacing.
    pub fn conforms(&self, other: &Grid) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_depends_on_periodicity() {
        let p = Grid::unit(8, 8, BcMode::Periodic).unwrap();
        let n = Grid::unit(9, 9, BcMode::NoSlipNeumann).unwrap();
        assert_eq!(p.hx(), 0.125);
        assert_eq!(n.hx(), 0.125);
    }

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(Grid::unit(3, 8, BcMode::Periodic).is_err());
        assert!(Grid::new(8, 8, 0.0, 1.0, BcMode::Periodic).is_err());
    }

    #[test]
    fn weights_sum_to_area() {
        for mode in [BcMode::Periodic, BcMode::NoSlipNeumann] {
            let g = Grid::new(11, 7, 2.0, 0.5, mode).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "{mode:?}: {s}");
        }
    }

    #[test]
    fn bc_codes_round_trip() {
        for m in [
            BcMode::Periodic,
            BcMode::NoSlipNeumann,
            BcMode::NoSlipDirichlet,
        ] {
            assert_eq!(BcMode::from_code(m.code()).unwrap(), m);
            assert_eq!(BcMode::parse(m.name()), Some(m));
        }
        assert!(BcMode::from_code(9).is_err());
    }
}
