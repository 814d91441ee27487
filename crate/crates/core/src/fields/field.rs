use super::Grid;
use crate::{Error, Result};

/// Grid-attached array of `K`-vectors, one per node, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<const K: usize> {
    grid: Grid,
    data: Vec<[f64; K]>,
}

pub type ScalarField = Field<1>;
pub type VectorField = Field<2>;
pub type DirectorField = Field<3>;

impl<const K: usize> Field<K> {
    pub fn zeros(grid: Grid) -> Self {
        Field {
            grid,
            data: vec![[0.0; K]; grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: [f64; K]) -> Self {
        Field {
            grid,
            data: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(f64, f64) -> [f64; K]) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for j in 0..grid.ny() {
            let y = grid.y(j);
            for i in 0..grid.nx() {
                data.push(f(grid.x(i), y));
            }
        }
        Field { grid, data }
    }

    pub fn from_vec(grid: Grid, data: Vec<[f64; K]>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a {}x{} grid",
                data.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Field { grid, data })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[[f64; K]] {
        &self.data
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [[f64; K]] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; K] {
        self.data[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: [f64; K]) {
        let k = self.grid.idx(i, j);
        self.data[k] = v;
    }

    pub fn ensure_conforms<const M: usize>(&self, other: &Field<M>) -> Result<()> {
        if self.grid.conforms(other.grid()) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "field on {}x{} grid paired with field on {}x{} grid",
                self.grid.nx(),
                self.grid.ny(),
                other.grid().nx(),
                other.grid().ny()
            )))
        }
    }

    pub fn ensure_on(&self, grid: &Grid) -> Result<()> {
        if self.grid.conforms(grid) {
            Ok(())
        } else {
            Err(Error::Shape(
                "field does not live on the requested grid".into(),
            ))
        }
    }

    pub fn map<const M: usize>(&self, mut f: impl FnMut([f64; K]) -> [f64; M]) -> Field<M> {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two conforming fields.
    pub fn zip_map<const L: usize, const M: usize>(
        &self,
        other: &Field<L>,
        mut f: impl FnMut([f64; K], [f64; L]) -> [f64; M],
    ) -> Field<M> {
        debug_assert!(self.grid.conforms(other.grid()));
        Field {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(other.values())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Field<K>) {
        debug_assert!(self.grid.conforms(other.grid()));
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            for c in 0..K {
                s[c] += a * o[c];
            }
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.data {
            for c in v.iter_mut() {
                *c *= a;
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn component(&self, c: usize) -> ScalarField {
        self.map(|v| [v[c]])
    }

    pub fn set_component(&mut self, c: usize, src: &ScalarField) {
        for (d, s) in self.data.iter_mut().zip(src.values()) {
            d[c] = s[0];
        }
    }

    /// Largest pointwise Euclidean magnitude.
    pub fn max_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.iter().all(|c| c.is_finite()))
    }

    /// Zeroes every boundary node (no-op on periodic grids).
    pub fn zero_boundary(&mut self) {
        if self.grid.is_periodic() {
            return;
        }
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for j in 0..ny {
            for i in 0..nx {
                if self.grid.is_boundary(i, j) {
                    self.data[j * nx + i] = [0.0; K];
                }
            }
        }
    }

    /// Copies boundary node values from `src` (no-op on periodic grids).
    pub fn copy_boundary_from(&mut self, src: &Field<K>) {
        if self.grid.is_periodic() {
            return;
        }
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for j in 0..ny {
            for i in 0..nx {
                if self.grid.is_boundary(i, j) {
                    self.data[j * nx + i] = src.data[j * nx + i];
                }
            }
        }
    }
}

impl ScalarField {
    pub fn scalar_at(&self, i: usize, j: usize) -> f64 {
        self.at(i, j)[0]
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().map(|v| v[0].abs()).fold(0.0, f64::max)
    }

    /// Quadrature-weighted mean.
    pub fn mean(&self) -> f64 {
        let g = *self.grid();
        let mut s = 0.0;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                s += g.weight(i, j) * self.scalar_at(i, j);
            }
        }
        s / g.area()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BcMode;

    #[test]
    fn from_fn_is_row_major() {
        let g = Grid::unit(4, 5, BcMode::Periodic).unwrap();
        let f = Field::from_fn(g, |x, y| [x, y]);
        assert_eq!(f.at(1, 2), [0.25, 0.4]);
        assert_eq!(f.values()[2 * 4 + 1], [0.25, 0.4]);
    }

    #[test]
    fn from_vec_checks_length() {
        let g = Grid::unit(4, 4, BcMode::Periodic).unwrap();
        assert!(Field::<1>::from_vec(g, vec![[0.0]; 15]).is_err());
    }

    #[test]
    fn boundary_helpers_leave_interior() {
        let g = Grid::unit(5, 5, BcMode::NoSlipNeumann).unwrap();
        let mut f = Field::constant(g, [1.0, 2.0]);
        f.zero_boundary();
        assert_eq!(f.at(0, 2), [0.0, 0.0]);
        assert_eq!(f.at(2, 2), [1.0, 2.0]);
        let src = Field::constant(g, [7.0, 7.0]);
        f.copy_boundary_from(&src);
        assert_eq!(f.at(4, 4), [7.0, 7.0]);
        assert_eq!(f.at(1, 1), [1.0, 2.0]);
    }
}
