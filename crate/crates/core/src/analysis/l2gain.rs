//! L2 gain of the double integrator `dZ/dt = A Z + U`, `A = [[0,1],[-k1,-k2]]`.
//!
//! The gain is `sup_w sigma_max((jw I - A)^{-1}) = 1 / sqrt(min_w lambda_min(w))`
//! where `lambda_min(w)` is the smallest eigenvalue of `M(w)^H M(w)`,
//! `M(w) = jw I - A`.

use num_complex::Complex64;

use crate::{Error, Result};

/// Smallest eigenvalue of `M(w)^H M(w)` in closed form (`W = w^2`):
/// trace `1 + k1^2 + k2^2 + 2W`, determinant `W k2^2 + (W - k1)^2`.
pub fn lambda_min_closed(omega: f64, k1: f64, k2: f64) -> f64 {
    let w = omega * omega;
    let tr = 1.0 + k1 * k1 + k2 * k2 + 2.0 * w;
    let det = w * k2 * k2 + (w - k1) * (w - k1);
    // tr^2 - 4 det = (1 - k1^2)^2 + k2^2 (k2^2 + 2 + 2 k1^2) + 4 W (1 + k1)^2,
    // a sum of non-negative terms
    let disc = ((1.0 - k1) * (1.0 + k1)).powi(2)
        + k2 * k2 * (k2 * k2 + 2.0 + 2.0 * k1 * k1)
        + 4.0 * w * (1.0 + k1) * (1.0 + k1);
    2.0 * det / (tr + disc.sqrt())
}

/// The minimizer over `w >= 0` of `lambda_min(w)` together with the minimum.
///
/// Stationary points of the smaller root satisfy `W = lambda + k1 - k2^2 / 2`,
/// which substituted back gives `lambda = k2^2 (k1 - k2^2/4) / (1 + k1)^2`.
/// The minimum is either that interior point (when admissible) or `w = 0`.
pub fn lambda_min_star(k1: f64, k2: f64) -> (f64, f64) {
    let at_zero = lambda_min_at_zero(k1, k2);
    let lam_int = k2 * k2 * (k1 - 0.25 * k2 * k2) / ((1.0 + k1) * (1.0 + k1));
    let w_int = lam_int + k1 - 0.5 * k2 * k2;
    if lam_int > 0.0 && w_int > 0.0 && lam_int < at_zero {
        (w_int.sqrt(), lam_int)
    } else {
        (0.0, at_zero)
    }
}

/// `lambda_min(0) = 2 k1^2 / (T + sqrt(T^2 - 4 k1^2))`, `T = 1 + k1^2 + k2^2`.
fn lambda_min_at_zero(k1: f64, k2: f64) -> f64 {
    let tr = 1.0 + k1 * k1 + k2 * k2;
    let root = ((1.0 - k1) * (1.0 + k1)).hypot(k2 * (k2 * k2 + 2.0 + 2.0 * k1 * k1).sqrt());
    2.0 * k1 * k1 / (tr + root)
}

/// `1 - lambda_min(0)` without cancellation (valid for `k1 > 1`).
fn one_minus_lambda_at_zero(k1: f64, k2: f64) -> f64 {
    let tr = 1.0 + k1 * k1 + k2 * k2;
    let q = k2 * k2 * (k2 * k2 + 2.0 + 2.0 * k1 * k1);
    let root = ((1.0 - k1) * (1.0 + k1)).hypot(q.sqrt());
    // tr + root - 2 k1^2 = k2^2 + (root - (k1^2 - 1))
    let excess = q / (root + (k1 - 1.0) * (k1 + 1.0));
    (k2 * k2 + excess) / (tr + root)
}

/// Exact L2 gain from the closed-form minimum of `lambda_min`.
pub fn l2_gain_closed_form(k1: f64, k2: f64) -> f64 {
    1.0 / lambda_min_star(k1, k2).1.sqrt()
}

/// `gain^2 - 1` computed without cancellation.
pub fn l2_gain_sq_minus_one(k1: f64, k2: f64) -> f64 {
    let (w, lam) = lambda_min_star(k1, k2);
    if w == 0.0 && k1 > 1.0 {
        one_minus_lambda_at_zero(k1, k2) / lam
    } else {
        (1.0 - lam) / lam
    }
}

/// The printed closed-form level
/// `1/2 + (1 + k2^2)/(2 k1^2) + 1/2 sqrt(1 + (2k2/k1)^2 + (2(1+k2^2)/k1^2)^2)`,
/// returned as a gain (square root). It over-estimates the true gain and is
/// the level at which the Riccati construction below is well posed.
pub fn l2_gain_riccati_level(k1: f64, k2: f64) -> f64 {
    (1.0 + riccati_level_sq_minus_one(k1, k2)).sqrt()
}

/// `level^2 - 1` for [`l2_gain_riccati_level`], computed stably.
pub fn riccati_level_sq_minus_one(k1: f64, k2: f64) -> f64 {
    let e = (2.0 * k2 / k1).powi(2) + (2.0 * (1.0 + k2 * k2) / (k1 * k1)).powi(2);
    (1.0 + k2 * k2) / (2.0 * k1 * k1) + 0.5 * e / ((1.0 + e).sqrt() + 1.0)
}

/// Options for the frequency sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub points: usize,
    /// Upper end of the grid as a multiple of `k2`.
    pub span: f64,
    pub refine_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            points: 4001,
            span: 10.0,
            refine_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub upsilon: f64,
    pub lambda_min: f64,
    pub omega_star: f64,
}

/// Smallest eigenvalue of `M^H M` for `M = jw I - A`, evaluated numerically
/// from the complex matrix: `|det M|^2 / lambda_max(M^H M)`.
pub fn lambda_min_numeric(omega: f64, k1: f64, k2: f64) -> f64 {
    let jw = Complex64::new(0.0, omega);
    let m = [
        [jw, Complex64::new(-1.0, 0.0)],
        [Complex64::new(k1, 0.0), jw + k2],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let fro2: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
    let d2 = det.norm_sqr();
    let disc = (fro2 * fro2 - 4.0 * d2).max(0.0);
    let lam_max = 0.5 * (fro2 + disc.sqrt());
    d2 / lam_max
}

/// Frequency-sweep oracle for the L2 gain: dense grid over `[0, span k2]`
/// followed by golden-section refinement around the coarse minimum.
pub fn l2_gain_sweep(k1: f64, k2: f64, opts: &SweepOptions) -> Result<SweepResult> {
    if !(k1 > 0.0 && k2 > 0.0) || !k1.is_finite() || !k2.is_finite() {
        return Err(Error::param(format!(
            "A is not Hurwitz for k1 = {k1}, k2 = {k2}: both must be positive"
        )));
    }
    if opts.points < 3 || opts.span < 10.0 {
        return Err(Error::param("sweep needs >= 3 points over at least [0, 10 k2]"));
    }
    let hi = opts.span * k2;
    let n = opts.points;
    let grid = |i: usize| hi * i as f64 / (n - 1) as f64;
    let (imin, _) = (0..n)
        .map(|i| (i, lambda_min_numeric(grid(i), k1, k2)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let lo = grid(imin.saturating_sub(1));
    let up = grid((imin + 1).min(n - 1));
    let f = |w: f64| lambda_min_numeric(w, k1, k2);
    let (w_star, lam) = golden_min(f, lo, up, opts.refine_tol * hi.max(1.0));
    let (w_star, lam) = if f(0.0) <= lam { (0.0, f(0.0)) } else { (w_star, lam) };
    Ok(SweepResult {
        upsilon: 1.0 / lam.sqrt(),
        lambda_min: lam,
        omega_star: w_star,
    })
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let candidates = [(a, f(a)), (b, f(b)), (c, fc), (d, fd)];
    candidates
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("four candidates")
}
