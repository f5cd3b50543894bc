//! Decrease of `V` along the error system.
//!
//! The target inequality is
//! `dV/dtau <= -M/2 (xi^2 + eta^2) - k1 C1/2 y1 sat(y1) - C2/2 y2 sat(y2)`.
//! It cannot hold arbitrarily close to `y = 0`; the set where it fails is
//! expected to sit inside a box shrinking like `k2^-2` in `y1` and
//! `k2^-3/2` in `y2`.

use super::asymptotics::{logspace, ls_slope};
use super::iss::{iss_bounds, IssMode};
use super::linalg::{mat4_mul, SymMatrix2, SymMatrix4};
use super::lyapunov::{lyapunov_matrix, v_gradient};
use super::riccati::riccati_solve_default;
use crate::controller::{error_system_rhs, sat, synthesize_gains, ErrorSystemState, Gains};
use crate::exec::Exec;
use crate::Result;

/// `(xi, eta, y1, y2)` ordering, as in [`super::lyapunov`].
pub type Point = [f64; 4];

/// Exact `dV/dtau` by the chain rule along the closed-loop error system.
pub fn vdot_exact(z: Point, kappa_r: f64, g: &Gains, p: &SymMatrix2) -> f64 {
    let [xi, eta, y1, y2] = z;
    let f = error_system_rhs(
        &ErrorSystemState {
            y1,
            y2,
            xi,
            eta,
            s: 0.0,
        },
        kappa_r,
        g,
    );
    let gr = v_gradient(z, g, p);
    gr[0] * f.xi + gr[1] * f.eta + gr[2] * f.y1 + gr[3] * f.y2
}

/// Right-hand side of the target inequality.
pub fn decrease_rhs(z: Point, g: &Gains) -> f64 {
    let [xi, eta, y1, y2] = z;
    -0.5 * g.m * (xi * xi + eta * eta) - 0.5 * g.k1 * g.c1 * y1 * sat(y1) - 0.5 * g.c2 * y2 * sat(y2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecreaseCheck {
    pub vdot: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluate the inequality at one point; equality counts as holding, with a
/// rounding allowance relative to the size of the two sides.
pub fn vdot_decrease_check(z: Point, kappa_r: f64, g: &Gains, p: &SymMatrix2) -> DecreaseCheck {
    let vdot = vdot_exact(z, kappa_r, g, p);
    let rhs = decrease_rhs(z, g);
    let tol = 1e-9 * (vdot.abs() + rhs.abs());
    DecreaseCheck {
        vdot,
        rhs,
        holds: vdot <= rhs + tol,
    }
}

/// Linear part of the closed-loop error field in `(xi, eta, y1, y2)` order,
/// valid where no saturation is active.
pub fn linear_field(kappa_r: f64, g: &Gains) -> [[f64; 4]; 4] {
    [
        [0.0, 1.0, -kappa_r * g.c1, 0.0],
        [-g.k1, -g.k2, 0.0, -g.c2],
        [0.0, 0.0, -g.c1, kappa_r],
        [1.0, 0.0, -kappa_r, 0.0],
    ]
}

/// Quadratic form of `dV/dtau - rhs` near the origin:
/// `G = Q F + F^T Q + R` with `R = diag(M/2, M/2, k1 C1/2, C2/2)`.
pub fn gap_matrix(kappa_r: f64, g: &Gains, p: &SymMatrix2) -> SymMatrix4 {
    let q = lyapunov_matrix(g, p).to_full();
    let f = linear_field(kappa_r, g);
    let qf = mat4_mul(&q, &f);
    let mut full = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            full[i][j] = qf[i][j] + qf[j][i];
        }
    }
    full[0][0] += 0.5 * g.m;
    full[1][1] += 0.5 * g.m;
    full[2][2] += 0.5 * g.k1 * g.c1;
    full[3][3] += 0.5 * g.c2;
    SymMatrix4::from_full_symmetrized(&full)
}

/// Largest `|y1|`, `|y2|` at which the linearized inequality fails while
/// `(xi, eta)` stays in the box `[-xi_b, xi_b] x [-eta_b, eta_b]`.
///
/// For fixed `w = (xi, eta)` the failure set in `y` is an ellipse whose
/// extent is positively homogeneous in `w`, so the box boundary suffices.
/// Returns infinities when the `y`-block of the gap is not negative definite.
pub fn violation_extents(gap: &SymMatrix4, xi_b: f64, eta_b: f64, per_edge: usize) -> [f64; 2] {
    let h = SymMatrix2::new(-gap.get(2, 2), -gap.get(2, 3), -gap.get(3, 3));
    if !h.is_positive_definite() {
        return [f64::INFINITY; 2];
    }
    let det = h.det();
    let hi = SymMatrix2::new(h.c / det, -h.b / det, h.a / det);
    let ext = |w: [f64; 2]| -> [f64; 2] {
        let b = [
            gap.get(2, 0) * w[0] + gap.get(2, 1) * w[1],
            gap.get(3, 0) * w[0] + gap.get(3, 1) * w[1],
        ];
        let c = gap.get(0, 0) * w[0] * w[0] + 2.0 * gap.get(0, 1) * w[0] * w[1] + gap.get(1, 1) * w[1] * w[1];
        let y0 = [hi.a * b[0] + hi.b * b[1], hi.b * b[0] + hi.c * b[1]];
        let q = c + b[0] * y0[0] + b[1] * y0[1];
        if q <= 0.0 {
            return [0.0, 0.0];
        }
        [y0[0].abs() + (q * hi.a).sqrt(), y0[1].abs() + (q * hi.c).sqrt()]
    };
    let n = per_edge.max(2);
    let mut best = [0.0f64; 2];
    for k in 0..n {
        let u = -1.0 + 2.0 * k as f64 / (n - 1) as f64;
        for w in [
            [xi_b, u * eta_b],
            [-xi_b, u * eta_b],
            [u * xi_b, eta_b],
            [u * xi_b, -eta_b],
        ] {
            let e = ext(w);
            best[0] = best[0].max(e[0]);
            best[1] = best[1].max(e[1]);
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    /// Points per `y` axis (split evenly between signs, log-spaced).
    pub n_y: usize,
    /// Points per `(xi, eta)` axis, uniform over the ISS box.
    pub n_z: usize,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        // 20 * 20 * 16 * 16 = 102400 points per curvature sign
        GridSpec {
            n_y: 20,
            n_z: 16,
            y_lo: 1e-7,
            y_hi: 1.0,
        }
    }
}

impl GridSpec {
    pub fn points_per_sign(&self) -> usize {
        self.n_y * self.n_y * self.n_z * self.n_z
    }

    fn y_axis(&self) -> Vec<f64> {
        let half = logspace(self.y_lo, self.y_hi, self.n_y / 2);
        let mut v: Vec<f64> = half.iter().rev().map(|x| -x).collect();
        v.extend(half);
        v
    }

    fn z_axis(&self, bound: f64) -> Vec<f64> {
        let n = self.n_z.max(2);
        (0..n).map(|i| bound * (-1.0 + 2.0 * i as f64 / (n - 1) as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScan {
    pub points: usize,
    pub violations: usize,
    /// Largest `|y1|`, `|y2|` among violating points (0 if none).
    pub box_y: [f64; 2],
    pub xi_bound: f64,
    pub eta_bound: f64,
}

/// Evaluate the exact inequality on a grid over `y` and the asymptotic ISS
/// box for `(xi, eta)`, at curvature `+kappa_max` and `-kappa_max`.
pub fn grid_scan(g: &Gains, p: &SymMatrix2, kappa_max: f64, spec: &GridSpec, exec: Exec) -> GridScan {
    let (xb, eb) = iss_bounds(g, kappa_max, IssMode::Asymptotic).expect("asymptotic mode has no hypotheses");
    let ys = spec.y_axis();
    let xs = spec.z_axis(xb);
    let es = spec.z_axis(eb);
    let ny = ys.len();
    let rows: Vec<(usize, usize, [f64; 2])> = exec.map_range(ny * ny, |idx| {
        let y1 = ys[idx / ny];
        let y2 = ys[idx % ny];
        let mut pts = 0;
        let mut bad = 0;
        let mut bx = [0.0f64; 2];
        for &kr in &[kappa_max, -kappa_max] {
            for &xi in &xs {
                for &eta in &es {
                    pts += 1;
                    if !vdot_decrease_check([xi, eta, y1, y2], kr, g, p).holds {
                        bad += 1;
                        bx[0] = bx[0].max(y1.abs());
                        bx[1] = bx[1].max(y2.abs());
                    }
                }
            }
        }
        (pts, bad, bx)
    });
    let mut out = GridScan {
        points: 0,
        violations: 0,
        box_y: [0.0; 2],
        xi_bound: xb,
        eta_bound: eb,
    };
    for (p, b, bx) in rows {
        out.points += p;
        out.violations += b;
        out.box_y[0] = out.box_y[0].max(bx[0]);
        out.box_y[1] = out.box_y[1].max(bx[1]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRow {
    pub k2: f64,
    /// Refined failure-set extents (linearized, ISS box boundary).
    pub extent: [f64; 2],
    pub grid: GridScan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxScaling {
    pub rows: Vec<BoxRow>,
    /// Log-log slopes of the refined extents against `k2`.
    pub exponents: [f64; 2],
    /// Box constants: `|y1| <= c[0] / k2^2`, `|y2| <= c[1] / k2^1.5`.
    pub constants: [f64; 2],
}

impl BoxScaling {
    pub const EXPECTED: [f64; 2] = [-2.0, -1.5];

    /// Relative deviation of each fitted exponent from its expected value.
    pub fn exponent_errors(&self) -> [f64; 2] {
        [0, 1].map(|i| (self.exponents[i] / Self::EXPECTED[i] - 1.0).abs())
    }

    /// Every grid violation lies inside the fitted box.
    pub fn grid_contained(&self) -> bool {
        self.rows.iter().all(|r| self.contains(r.k2, r.grid.box_y))
    }

    pub fn contains(&self, k2: f64, y: [f64; 2]) -> bool {
        let b = self.box_at(k2);
        y[0].abs() <= b[0] && y[1].abs() <= b[1]
    }

    pub fn box_at(&self, k2: f64) -> [f64; 2] {
        [self.constants[0] / (k2 * k2), self.constants[1] / k2.powf(1.5)]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoxScanOptions {
    pub beta: f64,
    pub d_sat: f64,
    pub kappa_max: f64,
    pub grid: GridSpec,
    pub per_edge: usize,
    /// Relative margin added to the fitted box constants.
    pub margin: f64,
}

impl Default for BoxScanOptions {
    fn default() -> Self {
        BoxScanOptions {
            beta: 8.1,
            d_sat: 50.0,
            kappa_max: 0.45,
            grid: GridSpec::default(),
            per_edge: 2000,
            margin: 0.05,
        }
    }
}

/// Theorem-mode gains at each `k2`: refined extents, exact grid scan, and
/// the fitted box with its scaling exponents.
pub fn violation_box_scaling(k2_list: &[f64], opts: &BoxScanOptions, exec: Exec) -> Result<BoxScaling> {
    let mut rows = Vec::with_capacity(k2_list.len());
    for &k2 in k2_list {
        let g = synthesize_gains(k2, opts.beta, opts.d_sat)?;
        let p = riccati_solve_default(g.k1, g.k2)?.p;
        let (xb, eb) = iss_bounds(&g, opts.kappa_max, IssMode::Asymptotic)?;
        let extent = [opts.kappa_max, -opts.kappa_max]
            .map(|kr| violation_extents(&gap_matrix(kr, &g, &p), xb, eb, opts.per_edge))
            .into_iter()
            .fold([0.0f64; 2], |acc, e| [acc[0].max(e[0]), acc[1].max(e[1])]);
        let grid = grid_scan(&g, &p, opts.kappa_max, &opts.grid, exec);
        rows.push(BoxRow { k2, extent, grid });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.k2.ln()).collect();
    let exponents = [0, 1].map(|i| {
        let y: Vec<f64> = rows.iter().map(|r| r.extent[i].ln()).collect();
        ls_slope(&x, &y)
    });
    let powers = [2.0, 1.5];
    let constants = [0, 1].map(|i| {
        let m = rows
            .iter()
            .map(|r| r.extent[i].max(r.grid.box_y[i]) * r.k2.powf(powers[i]))
            .fold(0.0f64, f64::max);
        m * (1.0 + opts.margin)
    });
    Ok(BoxScaling {
        rows,
        exponents,
        constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::riccati::riccati_solve_default;
    use crate::controller::synthesize_gains;
    use approx::assert_relative_eq;

    fn setup(k2: f64) -> (Gains, SymMatrix2) {
        let g = synthesize_gains(k2, 8.1, 50.0).unwrap();
        let p = riccati_solve_default(g.k1, g.k2).unwrap().p;
        (g, p)
    }

    #[test]
    fn origin_holds_with_equality() {
        let (g, p) = setup(200.0);
        let c = vdot_decrease_check([0.0; 4], 0.1, &g, &p);
        assert_eq!(c.vdot, 0.0);
        assert_eq!(c.rhs, 0.0);
        assert!(c.holds);
    }

    #[test]
    fn large_y1_decreases() {
        let (g, p) = setup(400.0);
        let c = vdot_decrease_check([0.0, 0.0, 1.0, 0.0], 0.0, &g, &p);
        assert!(c.holds, "{c:?}");
        assert!(c.vdot < 0.0);
    }

    #[test]
    fn gap_matrix_matches_exact_near_origin() {
        let (g, p) = setup(100.0);
        let gm = gap_matrix(0.2, &g, &p);
        let z = [1e-9, -3e-8, 2e-4, -1e-4];
        let exact = vdot_exact(z, 0.2, &g, &p) - decrease_rhs(z, &g);
        assert_relative_eq!(gm.quad(z), exact, max_relative = 1e-5);
    }

    #[test]
    fn no_violations_on_straight_path() {
        let (g, p) = setup(200.0);
        let gm = gap_matrix(0.0, &g, &p);
        assert!(gm.eigenvalues()[3] < 0.0);
        let (xb, eb) = iss_bounds(&g, 0.01, IssMode::Asymptotic).unwrap();
        assert_eq!(violation_extents(&gm, xb, eb, 100), [0.0, 0.0]);
    }
}
