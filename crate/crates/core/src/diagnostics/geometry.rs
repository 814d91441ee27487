//! Disk quadrature and interpolation on the node grid.

use crate::fields::{Field, Grid};

/// `∫_0^x sqrt(r² − t²) dt` for `|x| ≤ r`.
fn half_disk_primitive(x: f64, r: f64) -> f64 {
    let x = x.clamp(-r, r);
    0.5 * (x * (r * r - x * x).max(0.0).sqrt() + r * r * (x / r).asin())
}

/// Exact area of `[xa, xb] × [ya, yb] ∩ B_r(cx, cy)`.
pub fn cell_disk_area(xa: f64, xb: f64, ya: f64, yb: f64, cx: f64, cy: f64, r: f64) -> f64 {
    let (lo, hi) = ((xa - cx).max(-r), (xb - cx).min(r));
    if hi <= lo || r <= 0.0 {
        return 0.0;
    }
    let far_x = (xa - cx).abs().max((xb - cx).abs());
    let far_y = (ya - cy).abs().max((yb - cy).abs());
    if far_x * far_x + far_y * far_y <= r * r {
        return (xb - xa) * (yb - ya);
    }
    let (ya, yb) = (ya - cy, yb - cy);
    let mut cuts = vec![lo, hi];
    for c in [ya, yb] {
        if c.abs() < r {
            let u = (r * r - c * c).sqrt();
            for p in [-u, u] {
                if p > lo && p < hi {
                    cuts.push(p);
                }
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q <= p {
            continue;
        }
        let m = 0.5 * (p + q);
        let s = (r * r - m * m).max(0.0).sqrt();
        let top_is_arc = s < yb;
        let bottom_is_arc = -s > ya;
        let top = if top_is_arc { s } else { yb };
        let bottom = if bottom_is_arc { -s } else { ya };
        if top <= bottom {
            continue;
        }
        let arc = half_disk_primitive(q, r) - half_disk_primitive(p, r);
        let upper = if top_is_arc { arc } else { yb * (q - p) };
        let lower = if bottom_is_arc { -arc } else { ya * (q - p) };
        area += upper - lower;
    }
    area
}

/// Whether `B_r(center)` plus `margin` cells lies inside a non-periodic
/// domain (always true on the torus as long as the ball is smaller than the
/// period).
pub fn ball_fits(grid: &Grid, center: [f64; 2], r: f64, margin: f64) -> bool {
    if !(r > 0.0) {
        return false;
    }
    if grid.is_periodic() {
        return 2.0 * r < grid.lx().min(grid.ly());
    }
    let (mx, my) = (margin * grid.hx(), margin * grid.hy());
    center[0] - r - mx >= -1e-12
        && center[0] + r + mx <= grid.lx() + 1e-12
        && center[1] - r - my >= -1e-12
        && center[1] + r + my <= grid.ly() + 1e-12
}

/// One node of a ball quadrature: storage index, weight and the node
/// position (unwrapped around the center on the torus).
pub type QuadPoint = (usize, f64, [f64; 2]);

/// Quadrature for `∫_{B_r(center)} f ≈ Σ w_n f_n`: each node carries the
/// exact area of its dual cell (clipped to the domain) intersected with the
/// disk.
pub fn ball_quadrature(grid: &Grid, center: [f64; 2], r: f64) -> Vec<QuadPoint> {
    let (hx, hy) = (grid.hx(), grid.hy());
    let (nx, ny) = (grid.nx() as i64, grid.ny() as i64);
    let i0 = ((center[0] - r) / hx).floor() as i64 - 1;
    let i1 = ((center[0] + r) / hx).ceil() as i64 + 1;
    let j0 = ((center[1] - r) / hy).floor() as i64 - 1;
    let j1 = ((center[1] + r) / hy).ceil() as i64 + 1;
    let mut out = Vec::new();
    for j in j0..=j1 {
        for i in i0..=i1 {
            let (x, y) = (i as f64 * hx, j as f64 * hy);
            let (mut xa, mut xb) = (x - 0.5 * hx, x + 0.5 * hx);
            let (mut ya, mut yb) = (y - 0.5 * hy, y + 0.5 * hy);
            let node = if grid.is_periodic() {
                (j.rem_euclid(ny) * nx + i.rem_euclid(nx)) as usize
            } else {
                if i < 0 || j < 0 || i >= nx || j >= ny {
                    continue;
                }
                xa = xa.max(0.0);
                xb = xb.min(grid.lx());
                ya = ya.max(0.0);
                yb = yb.min(grid.ly());
                (j * nx + i) as usize
            };
            let a = cell_disk_area(xa, xb, ya, yb, center[0], center[1], r);
            if a > 0.0 {
                out.push((node, a, [x, y]));
            }
        }
    }
    out
}

/// Bilinear interpolation; periodic grids wrap, others clamp to the domain.
pub fn interpolate<const K: usize>(f: &Field<K>, x: f64, y: f64) -> [f64; K] {
    let g = f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (sx, sy) = (x / g.hx(), y / g.hy());
    let (i0, j0, tx, ty, i1, j1);
    if g.is_periodic() {
        let fx = sx.floor();
        let fy = sy.floor();
        tx = sx - fx;
        ty = sy - fy;
        i0 = (fx as i64).rem_euclid(nx as i64) as usize;
        j0 = (fy as i64).rem_euclid(ny as i64) as usize;
        i1 = (i0 + 1) % nx;
        j1 = (j0 + 1) % ny;
    } else {
        let cx = sx.clamp(0.0, (nx - 1) as f64);
        let cy = sy.clamp(0.0, (ny - 1) as f64);
        let a = (cx.floor() as usize).min(nx - 2);
        let b = (cy.floor() as usize).min(ny - 2);
        tx = cx - a as f64;
        ty = cy - b as f64;
        i0 = a;
        j0 = b;
        i1 = a + 1;
        j1 = b + 1;
    }
    let v = f.values();
    let (a, b, c, d) = (
        v[j0 * nx + i0],
        v[j0 * nx + i1],
        v[j1 * nx + i0],
        v[j1 * nx + i1],
    );
    let mut out = [0.0; K];
    for k in 0..K {
        out[k] =
            (1.0 - ty) * ((1.0 - tx) * a[k] + tx * b[k]) + ty * ((1.0 - tx) * c[k] + tx * d[k]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::BcMode;
    use std::f64::consts::PI;

    #[test]
    fn full_and_partial_disk_areas() {
        let r = 0.7;
        assert!((cell_disk_area(-1.0, 1.0, -1.0, 1.0, 0.0, 0.0, r) - PI * r * r).abs() < 1e-14);
        assert!(
            (cell_disk_area(0.0, 1.0, -1.0, 1.0, 0.0, 0.0, r) - 0.5 * PI * r * r).abs() < 1e-14
        );
        assert!(
            (cell_disk_area(0.0, 1.0, 0.0, 1.0, 0.0, 0.0, r) - 0.25 * PI * r * r).abs() < 1e-14
        );
        assert!((cell_disk_area(-0.1, 0.1, -0.2, 0.2, 0.0, 0.0, r) - 0.08).abs() < 1e-15);
        assert_eq!(cell_disk_area(2.0, 3.0, 0.0, 1.0, 0.0, 0.0, r), 0.0);
    }

    #[test]
    fn strip_area_matches_segment_formula() {
        // area of the disk above y = c is r² acos(c/r) − c sqrt(r² − c²)
        let (r, c): (f64, f64) = (1.0, 0.4);
        let exact = r * r * (c / r).acos() - c * (r * r - c * c).sqrt();
        let got = cell_disk_area(-2.0, 2.0, c, 2.0, 0.0, 0.0, r);
        assert!((got - exact).abs() < 1e-14);
    }

    #[test]
    fn quadrature_weights_sum_to_disk_area() {
        for mode in [BcMode::Periodic, BcMode::NoSlipNeumann] {
            let g = Grid::unit(40, 40, mode).unwrap();
            let q = ball_quadrature(&g, [0.43, 0.51], 0.2);
            let s: f64 = q.iter().map(|(_, w, _)| w).sum();
            assert!((s - PI * 0.04).abs() < 1e-13);
        }
        let g = Grid::unit(40, 40, BcMode::Periodic).unwrap();
        let q = ball_quadrature(&g, [0.02, 0.97], 0.2);
        let s: f64 = q.iter().map(|(_, w, _)| w).sum();
        assert!((s - PI * 0.04).abs() < 1e-13);
    }

    #[test]
    fn quadrature_is_second_order_for_smooth_integrands() {
        let err = |n: usize| {
            let g = Grid::unit(n, n, BcMode::NoSlipNeumann).unwrap();
            let f = Field::from_fn(g, |x, y| [(x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5)]);
            let s: f64 = ball_quadrature(&g, [0.5, 0.5], 0.3)
                .iter()
                .map(|&(n, w, _)| w * f.values()[n][0])
                .sum();
            (s - PI * 0.3f64.powi(4) / 2.0).abs()
        };
        // boundary-cell errors fluctuate with the lattice, so fit over a 4x span
        let (a, b) = (err(33), err(129));
        let order = (a / b).ln() / 4f64.ln();
        assert!(order > 1.5, "{a} {b} {order}");
    }

    #[test]
    fn bilinear_interpolation_is_exact_on_bilinears() {
        let g = Grid::unit(9, 9, BcMode::NoSlipNeumann).unwrap();
        let f = Field::from_fn(g, |x, y| [1.0 + 2.0 * x - y + 3.0 * x * y]);
        for (x, y) in [(0.13, 0.77), (0.5, 0.5), (1.0, 1.0), (0.0, 0.31)] {
            let v = interpolate(&f, x, y)[0];
            assert!((v - (1.0 + 2.0 * x - y + 3.0 * x * y)).abs() < 1e-13);
        }
        let gp = Grid::unit(8, 8, BcMode::Periodic).unwrap();
        let c = Field::from_fn(gp, |x, _| [x]);
        // between the last node (7/8) and the wrapped first node (0)
        assert!((interpolate(&c, 0.9375, 0.2)[0] - 0.4375).abs() < 1e-14);
    }

    #[test]
    fn containment() {
        let g = Grid::unit(33, 33, BcMode::NoSlipNeumann).unwrap();
        assert!(ball_fits(&g, [0.5, 0.5], 0.4, 1.0));
        assert!(!ball_fits(&g, [0.5, 0.5], 0.49, 1.0));
        assert!(!ball_fits(&g, [0.1, 0.5], 0.2, 0.0));
    }
}
