//! Traceless elastic stress and its pairing with test functions.

use crate::fields::{gradient, Bc, DirectorField, Field, Grid, ScalarField, VectorField};
use crate::noise::dot;
use crate::Result;

/// `∇d ⊙ ∇d − ½|∇d|² I` as `[T11, T12, T21, T22]`, so
/// `T11 = −T22 = ½(|∂1 d|² − |∂2 d|²)` and `T12 = T21 = <∂1 d, ∂2 d>`.
pub fn stress_tensor(d: &DirectorField) -> Field<4> {
    let gd = gradient(d, d.grid().director_bc());
    gd.dx.zip_map(&gd.dy, |a, b| {
        let (aa, ab, bb) = (dot(a, a), dot(a, b), dot(b, b));
        [0.5 * (aa - bb), ab, ab, 0.5 * (bb - aa)]
    })
}

fn test_bc(grid: &Grid) -> Bc {
    if grid.is_periodic() {
        Bc::Periodic
    } else {
        Bc::Dirichlet
    }
}

/// `<∇d ⊙ ∇d − ½|∇d|² I, ∇φ>` by quadrature.
pub fn stress_pairing(d: &DirectorField, phi: &VectorField) -> Result<f64> {
    d.ensure_conforms(phi)?;
    let g = *d.grid();
    let t = stress_tensor(d);
    let gp = gradient(phi, test_bc(&g));
    let mut s = 0.0;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            let n = g.idx(i, j);
            let tv = t.values()[n];
            let (p1, p2) = (gp.dx.values()[n], gp.dy.values()[n]);
            // T_ab ∂_b φ_a
            let v = tv[0] * p1[0] + tv[1] * p2[0] + tv[2] * p1[1] + tv[3] * p2[1];
            s += g.weight(i, j) * v;
        }
    }
    Ok(s)
}

/// Smooth bump `exp(1 − 1/(1 − ρ²/R²))` supported in `ρ < R`.
fn bump(grid: &Grid, center: [f64; 2], radius: f64) -> ScalarField {
    Field::from_fn(*grid, |x, y| {
        let q = ((x - center[0]).powi(2) + (y - center[1]).powi(2)) / (radius * radius);
        if q < 1.0 {
            [(1.0 - 1.0 / (1.0 - q)).exp()]
        } else {
            [0.0]
        }
    })
}

/// Discrete curl `(∂_y χ, −∂_x χ)` of a compactly supported stream function
/// `χ = bump · m(x, y)`; central differences commute, so the result is
/// divergence-free to round-off.
pub fn stream_test_function(
    grid: &Grid,
    center: [f64; 2],
    radius: f64,
    modulation: impl Fn(f64, f64) -> f64,
) -> VectorField {
    let b = bump(grid, center, radius);
    let chi = Field::from_fn(*grid, |x, y| [modulation(x, y)]).zip_map(&b, |m, w| [m[0] * w[0]]);
    let gc = gradient(&chi, test_bc(grid));
    gc.dx.zip_map(&gc.dy, |a, b| [b[0], -a[0]])
}

/// Three fixed divergence-free test functions, supported away from the walls.
pub fn velocity_test_functions(grid: &Grid) -> Vec<VectorField> {
    let (lx, ly) = (grid.lx(), grid.ly());
    let l = lx.min(ly);
    let tau = 2.0 * std::f64::consts::PI;
    vec![
        stream_test_function(grid, [0.5 * lx, 0.5 * ly], 0.35 * l, |_, _| 1.0),
        stream_test_function(grid, [0.45 * lx, 0.55 * ly], 0.3 * l, move |x, _| {
            1.0 + x / lx
        }),
        stream_test_function(grid, [0.5 * lx, 0.5 * ly], 0.4 * l, move |x, y| {
            (tau * x / lx).cos() + 0.5 * (tau * y / ly).sin()
        }),
    ]
}

/// Three fixed director test functions, one per component.
pub fn director_test_functions(grid: &Grid) -> Vec<DirectorField> {
    let (lx, ly) = (grid.lx(), grid.ly());
    let l = lx.min(ly);
    let centers = [[0.5, 0.5], [0.4, 0.6], [0.6, 0.45]];
    (0..3)
        .map(|k| {
            let b = bump(grid, [centers[k][0] * lx, centers[k][1] * ly], 0.3 * l);
            b.map(|v| {
                let mut out = [0.0; 3];
                out[k] = v[0];
                out
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{divergence, BcMode};
    use std::f64::consts::PI;

    #[test]
    fn tensor_is_traceless() {
        let g = Grid::unit(24, 24, BcMode::Periodic).unwrap();
        let d = Field::from_fn(g, |x, y| [(3.0 * x).sin(), (2.0 * PI * y).cos() * x, x * y]);
        for v in stress_tensor(&d).values() {
            assert!((v[0] + v[3]).abs() <= 1e-12);
        }
    }

    #[test]
    fn rotating_director_tensor() {
        let g = Grid::unit(64, 64, BcMode::Periodic).unwrap();
        let k = 2.0 * PI;
        let d = Field::from_fn(g, |x, _| [(k * x).cos(), (k * x).sin(), 0.0]);
        let kh = (k * g.hx()).sin() / g.hx();
        for v in stress_tensor(&d).values() {
            assert!((v[0] - 0.5 * kh * kh).abs() < 1e-9);
            assert!((v[3] + 0.5 * kh * kh).abs() < 1e-9);
            assert!(v[1].abs() < 1e-9);
        }
        assert!((0.5 * kh * kh - 0.5 * k * k).abs() < 0.02 * k * k);
    }

    #[test]
    fn constant_director_pairs_to_zero() {
        let g = Grid::unit(24, 24, BcMode::NoSlipNeumann).unwrap();
        let d = Field::constant(g, [0.0, 0.0, 1.0]);
        for phi in velocity_test_functions(&g) {
            assert_eq!(stress_pairing(&d, &phi).unwrap(), 0.0);
        }
    }

    #[test]
    fn test_functions_are_divergence_free() {
        for (g, bc) in [
            (Grid::unit(32, 32, BcMode::Periodic).unwrap(), Bc::Periodic),
            (
                Grid::unit(33, 33, BcMode::NoSlipNeumann).unwrap(),
                Bc::NoSlip,
            ),
        ] {
            for phi in velocity_test_functions(&g) {
                assert!(divergence(&phi, bc).max_abs() <= 1e-10);
                assert!(phi.max_norm() > 0.1);
            }
        }
    }

    #[test]
    fn shear_test_function_sees_only_off_diagonal_term() {
        // φ = (sin 2πy, sin 2πx) has zero diagonal gradient, so only
        // <∂1 d, ∂2 d> contributes; oracle uses the analytic ∇φ
        let g = Grid::unit(64, 64, BcMode::Periodic).unwrap();
        let d = Field::from_fn(g, |x, y| {
            let th = (2.0 * PI * x).sin() + (2.0 * PI * y).cos();
            [th.cos(), th.sin(), 0.0]
        });
        let phi = Field::from_fn(g, |x, y| [(2.0 * PI * y).sin(), (2.0 * PI * x).sin()]);
        let t = stress_tensor(&d);
        let mut oracle = 0.0;
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let (x, y) = (g.x(i), g.y(j));
                let shear = 2.0 * PI * ((2.0 * PI * y).cos() + (2.0 * PI * x).cos());
                oracle += g.weight(i, j) * t.at(i, j)[1] * shear;
            }
        }
        let got = stress_pairing(&d, &phi).unwrap();
        assert!(
            (got - oracle).abs() < 0.01 * oracle.abs().max(1.0),
            "{got} vs {oracle}"
        );
    }
}
