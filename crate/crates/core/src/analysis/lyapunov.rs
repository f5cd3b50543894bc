//! The quadratic Lyapunov function
//! `V = M z^T P z + k1 (y1^2 + y2^2)/2 + eta y2 + k2 y2 xi`, `z = (xi, eta)`,
//! in coordinates ordered `(xi, eta, y1, y2)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{SymMatrix2, SymMatrix4};
use crate::controller::Gains;

pub const XI: usize = 0;
pub const ETA: usize = 1;
pub const Y1: usize = 2;
pub const Y2: usize = 3;

pub fn lyapunov_matrix(g: &Gains, p: &SymMatrix2) -> SymMatrix4 {
    let mut q = SymMatrix4::zeros();
    q.set(XI, XI, g.m * p.a);
    q.set(XI, ETA, g.m * p.b);
    q.set(ETA, ETA, g.m * p.c);
    q.set(Y1, Y1, 0.5 * g.k1);
    q.set(Y2, Y2, 0.5 * g.k1);
    q.set(ETA, Y2, 0.5);
    q.set(XI, Y2, 0.5 * g.k2);
    q
}

/// `V` evaluated term by term.
pub fn v_direct(z: [f64; 4], g: &Gains, p: &SymMatrix2) -> f64 {
    let [xi, eta, y1, y2] = z;
    g.m * p.quad([xi, eta]) + 0.5 * g.k1 * (y1 * y1 + y2 * y2) + eta * y2 + g.k2 * y2 * xi
}

/// Gradient of `V` in `(xi, eta, y1, y2)` order.
pub fn v_gradient(z: [f64; 4], g: &Gains, p: &SymMatrix2) -> [f64; 4] {
    let [xi, eta, y1, y2] = z;
    [
        2.0 * g.m * (p.a * xi + p.b * eta) + g.k2 * y2,
        2.0 * g.m * (p.b * xi + p.c * eta) + y2,
        g.k1 * y1,
        g.k1 * y2 + eta + g.k2 * xi,
    ]
}

pub fn v_positive_definite(q: &SymMatrix4) -> (f64, bool) {
    let m = q.min_eigenvalue();
    (m, m > 0.0)
}

/// Weights `(sqrt(k2), 1/sqrt(k2), k2, k2)` such that `V` is compared with
/// `k2 xi^2 + eta^2/k2 + k2^2 (y1^2 + y2^2)`.
pub fn sandwich_weights(k2: f64) -> [f64; 4] {
    let r = k2.sqrt();
    [r, 1.0 / r, k2, k2]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    /// Lower constants for the `xi`, `eta`, `y` groups.
    pub lower: [f64; 3],
    /// Upper constants for the same groups.
    pub upper: [f64; 3],
    /// Extreme ratios `V / W` observed on random unit directions.
    pub sampled_min: f64,
    pub sampled_max: f64,
}

impl Sandwich {
    pub fn lower_positive(&self) -> bool {
        self.lower.iter().all(|&a| a > 0.0)
    }
}

/// Fit `a_i W_i <= V <= d_i W_i` with `W = k2 xi^2 + eta^2/k2 + k2^2 |y|^2`.
///
/// In the weighted coordinates `u_i = w_i z_i` the form becomes `u^T Q~ u`
/// and the tightest common constants are the extreme eigenvalues of `Q~`.
/// The bounds are then checked on `samples` random directions.
pub fn sandwich_fit(q: &SymMatrix4, k2: f64, samples: usize, seed: u64) -> Sandwich {
    let w = sandwich_weights(k2);
    let inv = w.map(|x| 1.0 / x);
    let qs = q.scaled(inv);
    let ev = qs.eigenvalues();
    let (lo, hi) = (ev[0], ev[3]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut smin = f64::INFINITY;
    let mut smax = f64::NEG_INFINITY;
    for _ in 0..samples {
        let mut u = [0.0; 4];
        for x in u.iter_mut() {
            *x = rng.gen_range(-1.0..1.0);
        }
        let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            continue;
        }
        let z: [f64; 4] = std::array::from_fn(|i| u[i] / n * inv[i]);
        let wz = k2 * z[0] * z[0] + z[1] * z[1] / k2 + k2 * k2 * (z[2] * z[2] + z[3] * z[3]);
        let r = q.quad(z) / wz;
        smin = smin.min(r);
        smax = smax.max(r);
    }
    Sandwich {
        lower: [lo; 3],
        upper: [hi; 3],
        sampled_min: smin,
        sampled_max: smax,
    }
}
