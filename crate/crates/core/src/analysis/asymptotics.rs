//! Large-`k2` behaviour of the Riccati solution: `P ~ [[F1 k2, F2], [F2, F3/k2]]`.

use super::riccati::riccati_solve_default;
use crate::controller::A;
use crate::{Error, Result};

/// Limit of `cos(phi) * k2`: `sqrt(1 - 2a) / a`.
pub fn c0() -> f64 {
    (1.0 - 2.0 * A).sqrt() / A
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PkSample {
    pub k2: f64,
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub sin_phi: f64,
    pub cos_phi_k2: f64,
    pub residual: f64,
}

impl PkSample {
    pub fn f_det(&self) -> f64 {
        self.f1 * self.f3 - self.f2 * self.f2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PkAsymptotics {
    pub samples: Vec<PkSample>,
    /// Log-log slopes of `(P11, P12, P22)` against `k2`.
    pub slopes: [f64; 3],
    pub slope_tol: f64,
}

impl PkAsymptotics {
    pub const EXPECTED_SLOPES: [f64; 3] = [1.0, 0.0, -1.0];

    pub fn slopes_ok(&self) -> bool {
        self.slopes
            .iter()
            .zip(Self::EXPECTED_SLOPES)
            .all(|(s, e)| (s - e).abs() <= self.slope_tol)
    }

    pub fn f_det_ok(&self) -> bool {
        self.samples.iter().all(|s| s.f_det() > 0.0)
    }

    /// Fitted constants at the largest sampled `k2`.
    pub fn constants(&self) -> (f64, f64, f64) {
        let s = self.samples.last().expect("non-empty");
        (s.f1, s.f2, s.f3)
    }
}

/// Solve the Riccati equation along `k2_list` with `k1 = a k2^2` and fit
/// log-log slopes.
pub fn pk_asymptotics(k2_list: &[f64], slope_tol: f64) -> Result<PkAsymptotics> {
    if k2_list.len() < 2 {
        return Err(Error::param("need at least two k2 samples"));
    }
    if k2_list.iter().any(|&k| k < 100.0) || k2_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("k2 samples must be increasing and >= 100"));
    }
    let mut samples = Vec::with_capacity(k2_list.len());
    for &k2 in k2_list {
        let sol = riccati_solve_default(A * k2 * k2, k2)?;
        let p = sol.p;
        samples.push(PkSample {
            k2,
            p11: p.a,
            p12: p.b,
            p22: p.c,
            f1: p.a / k2,
            f2: p.b,
            f3: p.c * k2,
            sin_phi: sol.sin_phi,
            cos_phi_k2: sol.cos_phi * k2,
            residual: sol.residual,
        });
    }
    let x: Vec<f64> = samples.iter().map(|s| s.k2.ln()).collect();
    let fit = |sel: fn(&PkSample) -> f64| -> f64 {
        let y: Vec<f64> = samples.iter().map(|s| sel(s).abs().ln()).collect();
        ls_slope(&x, &y)
    };
    let slopes = [fit(|s| s.p11), fit(|s| s.p12), fit(|s| s.p22)];
    let out = PkAsymptotics {
        samples,
        slopes,
        slope_tol,
    };
    Ok(out)
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}
