use super::{Bc, Field, ScalarField, VectorField};
use crate::Result;

/// How a one-dimensional derivative treats the first and last node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Closure {
    Wrap,
    /// Ghost `f[-1] = f[1]`: zero normal derivative.
    Even,
    /// Ghost `f[-1] = 2 f[0] - f[1]`: the adjoint closure of the interior
    /// central difference for fields that vanish on the boundary.
    Odd,
    /// Second-order one-sided stencil.
    OneSided,
}

fn gradient_closure(bc: Bc) -> Closure {
    match bc {
        Bc::Periodic => Closure::Wrap,
        Bc::Neumann => Closure::Even,
        Bc::NoSlip | Bc::Dirichlet => Closure::OneSided,
    }
}

fn divergence_closure(bc: Bc) -> Closure {
    match bc {
        Bc::Periodic => Closure::Wrap,
        Bc::Neumann => Closure::Even,
        Bc::NoSlip => Closure::Odd,
        Bc::Dirichlet => Closure::OneSided,
    }
}

#[inline]
fn central(fm: f64, fp: f64, h: f64) -> f64 {
    (fp - fm) / (2.0 * h)
}

/// Derivative at an edge node. `f0` is the edge value, `f1`, `f2` the next
/// two inward values, `sign` is +1 at the low edge and -1 at the high edge.
#[inline]
fn edge_derivative(c: Closure, f0: f64, f1: f64, f2: f64, h: f64, sign: f64) -> f64 {
    match c {
        Closure::Even => 0.0,
        Closure::Odd => sign * (f1 - f0) / h,
        Closure::OneSided => sign * (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h),
        Closure::Wrap => unreachable!("periodic grids have no edges"),
    }
}

fn deriv_x<const K: usize>(f: &Field<K>, c: Closure) -> Field<K> {
    let g = *f.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.hx());
    let v = f.values();
    let mut out = Field::<K>::zeros(g);
    let o = out.values_mut();
    for j in 0..ny {
        let row = j * nx;
        for i in 0..nx {
            let val = &mut o[row + i];
            if c == Closure::Wrap {
                let ip = if i + 1 == nx { 0 } else { i + 1 };
                let im = if i == 0 { nx - 1 } else { i - 1 };
                for k in 0..K {
                    val[k] = central(v[row + im][k], v[row + ip][k], h);
                }
            } else if i == 0 {
                for k in 0..K {
                    val[k] = edge_derivative(c, v[row][k], v[row + 1][k], v[row + 2][k], h, 1.0);
                }
            } else if i + 1 == nx {
                for k in 0..K {
                    val[k] = edge_derivative(
                        c,
                        v[row + i][k],
                        v[row + i - 1][k],
                        v[row + i - 2][k],
                        h,
                        -1.0,
                    );
                }
            } else {
                for k in 0..K {
                    val[k] = central(v[row + i - 1][k], v[row + i + 1][k], h);
                }
            }
        }
    }
    out
}

fn deriv_y<const K: usize>(f: &Field<K>, c: Closure) -> Field<K> {
    let g = *f.grid();
    let (nx, ny, h) = (g.nx(), g.ny(), g.hy());
    let v = f.values();
    let mut out = Field::<K>::zeros(g);
    let o = out.values_mut();
    for j in 0..ny {
        let (jm, jp) = if c == Closure::Wrap {
            (
                if j == 0 { ny - 1 } else { j - 1 },
                if j + 1 == ny { 0 } else { j + 1 },
            )
        } else {
            (j.wrapping_sub(1), j + 1)
        };
        for i in 0..nx {
            let val = &mut o[j * nx + i];
            if c != Closure::Wrap && j == 0 {
                for k in 0..K {
                    val[k] = edge_derivative(c, v[i][k], v[nx + i][k], v[2 * nx + i][k], h, 1.0);
                }
            } else if c != Closure::Wrap && j + 1 == ny {
                for k in 0..K {
                    val[k] = edge_derivative(
                        c,
                        v[j * nx + i][k],
                        v[(j - 1) * nx + i][k],
                        v[(j - 2) * nx + i][k],
                        h,
                        -1.0,
                    );
                }
            } else {
                for k in 0..K {
                    val[k] = central(v[jm * nx + i][k], v[jp * nx + i][k], h);
                }
            }
        }
    }
    out
}

/// Partial derivatives of every component of a field.
#[derive(Clone, Debug)]
pub struct Gradient<const K: usize> {
    pub dx: Field<K>,
    pub dy: Field<K>,
}

impl<const K: usize> Gradient<K> {
    /// `|grad f|^2` summed over components.
    pub fn norm_sq(&self) -> ScalarField {
        self.dx.zip_map(&self.dy, |a, b| {
            let mut s = 0.0;
            for k in 0..K {
                s += a[k] * a[k] + b[k] * b[k];
            }
            [s]
        })
    }
}

/// Central differences in the interior; at non-periodic edges a
/// second-order one-sided stencil, except that Neumann fields reflect their
/// ghost values and so have zero normal derivative.
pub fn gradient<const K: usize>(f: &Field<K>, bc: Bc) -> Gradient<K> {
    let c = gradient_closure(bc);
    Gradient {
        dx: deriv_x(f, c),
        dy: deriv_y(f, c),
    }
}

/// Discrete divergence of a 2-vector field.
///
/// For no-slip velocity the edge closure is the one that makes this operator
/// the exact negative adjoint (under the trapezoidal inner product) of the
/// interior central gradient, for fields vanishing on the boundary.
pub fn divergence(v: &VectorField, bc: Bc) -> ScalarField {
    let c = divergence_closure(bc);
    let vx = v.component(0);
    let vy = v.component(1);
    let mut out = deriv_x(&vx, c);
    out.axpy(1.0, &deriv_y(&vy, c));
    out
}

/// Five-point Laplacian. Neumann fields use reflected ghosts; for no-slip and
/// Dirichlet fields the boundary values are pinned and the Laplacian there is
/// zero.
pub fn laplacian<const K: usize>(f: &Field<K>, bc: Bc) -> Field<K> {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (ihx2, ihy2) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let v = f.values();
    let mut out = Field::<K>::zeros(g);
    let o = out.values_mut();
    let pinned = matches!(bc, Bc::NoSlip | Bc::Dirichlet);
    for j in 0..ny {
        for i in 0..nx {
            let at_edge = i == 0 || j == 0 || i + 1 == nx || j + 1 == ny;
            if pinned && at_edge {
                continue;
            }
            let (im, ip, jm, jp) = match bc {
                Bc::Periodic => (
                    if i == 0 { nx - 1 } else { i - 1 },
                    if i + 1 == nx { 0 } else { i + 1 },
                    if j == 0 { ny - 1 } else { j - 1 },
                    if j + 1 == ny { 0 } else { j + 1 },
                ),
                // reflected ghosts
                _ => (
                    if i == 0 { 1 } else { i - 1 },
                    if i + 1 == nx { nx - 2 } else { i + 1 },
                    if j == 0 { 1 } else { j - 1 },
                    if j + 1 == ny { ny - 2 } else { j + 1 },
                ),
            };
            let c = v[j * nx + i];
            let (l, r, d, u) = (
                v[j * nx + im],
                v[j * nx + ip],
                v[jm * nx + i],
                v[jp * nx + i],
            );
            let val = &mut o[j * nx + i];
            for k in 0..K {
                val[k] = (l[k] - 2.0 * c[k] + r[k]) * ihx2 + (d[k] - 2.0 * c[k] + u[k]) * ihy2;
            }
        }
    }
    out
}

/// Skew-symmetric transport `1/2 [u . grad f + div(u f)]`.
///
/// `f_bc` is the closure of the transported field; the flux divergence uses
/// the velocity closure of the grid. In periodic mode `<advect(u, u), u> = 0`
/// to round-off.
pub fn advect<const K: usize>(u: &VectorField, f: &Field<K>, f_bc: Bc) -> Field<K> {
    debug_assert!(u.grid().conforms(f.grid()));
    let vel_c = divergence_closure(u.grid().velocity_bc());
    let gf = gradient(f, f_bc);
    let flux_x = u.zip_map(f, |uv, fv| {
        let mut o = [0.0; K];
        for k in 0..K {
            o[k] = uv[0] * fv[k];
        }
        o
    });
    let flux_y = u.zip_map(f, |uv, fv| {
        let mut o = [0.0; K];
        for k in 0..K {
            o[k] = uv[1] * fv[k];
        }
        o
    });
    let div_x = deriv_x(&flux_x, vel_c);
    let div_y = deriv_y(&flux_y, vel_c);
    let mut out = Field::<K>::zeros(*f.grid());
    let uv = u.values();
    for (n, o) in out.values_mut().iter_mut().enumerate() {
        let a = gf.dx.values()[n];
        let b = gf.dy.values()[n];
        let dx = div_x.values()[n];
        let dy = div_y.values()[n];
        for k in 0..K {
            o[k] = 0.5 * (uv[n][0] * a[k] + uv[n][1] * b[k] + dx[k] + dy[k]);
        }
    }
    out
}

/// Quadrature inner product summed over components.
pub fn inner_product<const K: usize>(f: &Field<K>, g: &Field<K>) -> Result<f64> {
    f.ensure_conforms(g)?;
    Ok(weighted_dot(f, g))
}

pub(crate) fn weighted_dot<const K: usize>(f: &Field<K>, g: &Field<K>) -> f64 {
    let grid = *f.grid();
    let (fv, gv) = (f.values(), g.values());
    if grid.is_periodic() {
        let mut s = 0.0;
        for (a, b) in fv.iter().zip(gv) {
            for k in 0..K {
                s += a[k] * b[k];
            }
        }
        return s * grid.hx() * grid.hy();
    }
    let mut s = 0.0;
    for j in 0..grid.ny() {
        for i in 0..grid.nx() {
            let n = grid.idx(i, j);
            let mut p = 0.0;
            for k in 0..K {
                p += fv[n][k] * gv[n][k];
            }
            s += grid.weight(i, j) * p;
        }
    }
    s
}

pub fn norm_l2<const K: usize>(f: &Field<K>) -> f64 {
    weighted_dot(f, f).max(0.0).sqrt()
}

/// Quadrature of a scalar field over the whole domain.
pub fn integrate(f: &ScalarField) -> f64 {
    let ones = ScalarField::constant(*f.grid(), [1.0]);
    weighted_dot(f, &ones)
}

/// Edge-based Dirichlet form `B(a, b) ~ int <grad a, grad b>` built from
/// forward differences along grid edges; edges lying on a non-periodic
/// boundary line carry half weight.
///
/// For periodic and Neumann fields `B(a, b) = -<laplacian(a), b>`; with held
/// boundary values its derivative in any interior node is still `-w Δa`, which
/// is what makes the discrete energy law close.
pub fn dirichlet_form<const K: usize>(a: &Field<K>, b: &Field<K>) -> Result<f64> {
    a.ensure_conforms(b)?;
    let g = *a.grid();
    let (nx, ny, hx, hy) = (g.nx(), g.ny(), g.hx(), g.hy());
    let periodic = g.is_periodic();
    let (av, bv) = (a.values(), b.values());
    let edge = |n: usize, m: usize| {
        let mut s = 0.0;
        for k in 0..K {
            s += (av[m][k] - av[n][k]) * (bv[m][k] - bv[n][k]);
        }
        s
    };
    let mut sx = 0.0;
    let mut sy = 0.0;
    for j in 0..ny {
        let wy = if !periodic && (j == 0 || j + 1 == ny) {
            0.5
        } else {
            1.0
        };
        let mut row = 0.0;
        let last = if periodic { nx } else { nx - 1 };
        for i in 0..last {
            let ip = if i + 1 == nx { 0 } else { i + 1 };
            row += edge(j * nx + i, j * nx + ip);
        }
        sx += wy * row;
    }
    for i in 0..nx {
        let wx = if !periodic && (i == 0 || i + 1 == nx) {
            0.5
        } else {
            1.0
        };
        let mut col = 0.0;
        let last = if periodic { ny } else { ny - 1 };
        for j in 0..last {
            let jp = if j + 1 == ny { 0 } else { j + 1 };
            col += edge(j * nx + i, jp * nx + i);
        }
        sy += wx * col;
    }
    Ok(sx * hy / hx + sy * hx / hy)
}
