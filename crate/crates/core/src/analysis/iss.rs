//! Input-to-state bounds for `dxi = eta + nu1`, `deta = -k1 xi - k2 eta + nu2`
//! with `|nu1| <= kappa_max C1`, `|nu2| <= C2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::Matrix2;
use crate::controller::Gains;
use crate::exec::Exec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IssMode {
    /// Bound at time `t` from the initial condition `z0`.
    Transient { z0: [f64; 2], t: f64 },
    /// Limit bound for large `t`.
    Asymptotic,
    /// Limit bound given measured tail sups of `|y1|` and `|y2|`.
    Refined { y1_sup: f64, y2_sup: f64 },
}

/// `(xi_bound, eta_bound)` for the chosen mode.
pub fn iss_bounds(g: &Gains, kappa_max: f64, mode: IssMode) -> Result<(f64, f64)> {
    let k2 = g.k2;
    Ok(match mode {
        IssMode::Transient { z0, t } => {
            let tr = exp_a(g.k1, k2, t)?.apply(z0);
            let n = tr[0].hypot(tr[1]);
            (
                4.0 / k2 * (kappa_max * g.c1 + 4.0 * g.c2 / (3.0 * k2)) + n,
                kappa_max * g.c1 + 16.0 * g.c2 / (3.0 * k2) + n,
            )
        }
        IssMode::Asymptotic => (
            8.0 / k2 * (kappa_max * g.c1 + 4.0 * g.c2 / (3.0 * k2)),
            2.0 * kappa_max * g.c1 + 32.0 * g.c2 / (3.0 * k2),
        ),
        IssMode::Refined { y1_sup, y2_sup } => {
            if !(y1_sup >= 0.0 && y2_sup >= 0.0) {
                return Err(Error::param("tail sups must be non-negative"));
            }
            if !(y1_sup < kappa_max && y2_sup < 1.0) {
                return Err(Error::param(format!(
                    "refined bounds need sup|y1| < kappa_max and sup|y2| < 1, got {y1_sup}, {y2_sup}"
                )));
            }
            (
                8.0 / k2 * (g.c1 * y1_sup + 4.0 * g.c2 * y2_sup / (3.0 * k2)),
                2.0 * g.c1 * y1_sup + 32.0 * g.c2 * y2_sup / (3.0 * k2),
            )
        }
    })
}

/// Eigenvalues of `[[0,1],[-k1,-k2]]` when real and distinct, ordered
/// `(slow, fast)`.
pub fn real_eigenvalues(k1: f64, k2: f64) -> Result<(f64, f64)> {
    let disc = k2 * k2 - 4.0 * k1;
    if disc <= 0.0 {
        return Err(Error::param(format!(
            "A has no distinct real eigenvalues for k1 = {k1}, k2 = {k2}"
        )));
    }
    let r = disc.sqrt();
    let fast = -0.5 * (k2 + r);
    // product is k1
    let slow = k1 / fast;
    Ok((slow, fast))
}

/// Characteristic polynomial `s^2 + k2 s + k1` of `A`.
pub fn char_poly(s: f64, k1: f64, k2: f64) -> f64 {
    s * s + k2 * s + k1
}

/// `exp(A t)` by Sylvester's formula for distinct real eigenvalues.
pub fn exp_a(k1: f64, k2: f64, t: f64) -> Result<Matrix2> {
    let (l1, l2) = real_eigenvalues(k1, k2)?;
    let a = Matrix2::companion(k1, k2);
    let i = Matrix2::identity();
    let e1 = (l1 * t).exp();
    let e2 = (l2 * t).exp();
    Ok(((a - i.scale(l2)).scale(e1) - (a - i.scale(l1)).scale(e2)).scale(1.0 / (l1 - l2)))
}

/// Exact zero-order-hold discretization `(Phi, Gamma)` over a step `h`:
/// `z+ = Phi z + Gamma u` for constant `u`.
pub fn zoh(k1: f64, k2: f64, h: f64) -> Result<(Matrix2, Matrix2)> {
    let phi = exp_a(k1, k2, h)?;
    let ainv = Matrix2::companion(k1, k2)
        .inverse()
        .ok_or_else(|| Error::param("A is singular"))?;
    Ok((phi, ainv * (phi - Matrix2::identity())))
}

#[derive(Debug, Clone, Copy)]
pub struct MonteCarloOptions {
    pub runs: usize,
    pub segments: usize,
    /// Sub-steps per unit of `1/(8 k2)`; the sup is tracked at every sub-step.
    pub max_substeps: usize,
    pub seed: u64,
}

impl Default for MonteCarloOptions {
    fn default() -> Self {
        MonteCarloOptions {
            runs: 100,
            segments: 200,
            max_substeps: 40,
            seed: 20_240_601,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub runs: usize,
    pub sup_xi: f64,
    pub sup_eta: f64,
    pub xi_bound: f64,
    pub eta_bound: f64,
    pub violating_runs: usize,
}

impl MonteCarloReport {
    pub fn passed(&self) -> bool {
        self.violating_runs == 0
    }
}

/// Random piecewise-constant disturbances at or inside their bounds, driven
/// from `z0 = 0`; the observed sups are compared with the asymptotic bounds.
/// Each run has its own seeded stream, so results do not depend on `exec`.
pub fn iss_monte_carlo(g: &Gains, kappa_max: f64, opts: &MonteCarloOptions, exec: Exec) -> Result<MonteCarloReport> {
    let (xb, eb) = iss_bounds(g, kappa_max, IssMode::Asymptotic)?;
    let h = 1.0 / (8.0 * g.k2);
    let (phi, gam) = zoh(g.k1, g.k2, h)?;
    let b1 = kappa_max * g.c1;
    let b2 = g.c2;
    let runs = exec.map_range(opts.runs, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut z = [0.0; 2];
        let (mut sx, mut se) = (0.0f64, 0.0f64);
        let draw = |rng: &mut ChaCha8Rng, b: f64| {
            if rng.gen_bool(0.5) {
                if rng.gen_bool(0.5) {
                    b
                } else {
                    -b
                }
            } else {
                rng.gen_range(-b..=b)
            }
        };
        for _ in 0..opts.segments {
            let u = [draw(&mut rng, b1), draw(&mut rng, b2)];
            let steps = rng.gen_range(1..=opts.max_substeps.max(1));
            let gu = gam.apply(u);
            for _ in 0..steps {
                let pz = phi.apply(z);
                z = [pz[0] + gu[0], pz[1] + gu[1]];
                sx = sx.max(z[0].abs());
                se = se.max(z[1].abs());
            }
        }
        (sx, se)
    });
    let mut rep = MonteCarloReport {
        runs: opts.runs,
        sup_xi: 0.0,
        sup_eta: 0.0,
        xi_bound: xb,
        eta_bound: eb,
        violating_runs: 0,
    };
    for (sx, se) in runs {
        rep.sup_xi = rep.sup_xi.max(sx);
        rep.sup_eta = rep.sup_eta.max(se);
        if sx > xb || se > eb {
            rep.violating_runs += 1;
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefinedCheck {
    pub checked: usize,
    pub violations: usize,
    /// Largest observed `sup|xi| / bound` and `sup|eta| / bound`.
    pub worst_ratio: [f64; 2],
    pub hypotheses_ok: bool,
}

/// Compare tail sups of `(xi, eta)` with the refined bounds built from the
/// tail sups of `(y1, y2)`, at every sample from index `start` on.
/// `rows` holds `[y1, y2, xi, eta]`.
pub fn refined_check(rows: &[[f64; 4]], start: usize, g: &Gains, kappa_max: f64) -> RefinedCheck {
    let n = rows.len();
    let mut tail = vec![[0.0f64; 4]; n + 1];
    for i in (0..n).rev() {
        for k in 0..4 {
            tail[i][k] = tail[i + 1][k].max(rows[i][k].abs());
        }
    }
    let mut out = RefinedCheck {
        checked: 0,
        violations: 0,
        worst_ratio: [0.0; 2],
        hypotheses_ok: true,
    };
    for t in tail.iter().take(n).skip(start) {
        match iss_bounds(
            g,
            kappa_max,
            IssMode::Refined {
                y1_sup: t[0],
                y2_sup: t[1],
            },
        ) {
            Ok((xb, eb)) => {
                out.checked += 1;
                let rx = if xb > 0.0 { t[2] / xb } else { f64::INFINITY * t[2] };
                let re = if eb > 0.0 { t[3] / eb } else { f64::INFINITY * t[3] };
                let rx = if rx.is_nan() { 0.0 } else { rx };
                let re = if re.is_nan() { 0.0 } else { re };
                out.worst_ratio[0] = out.worst_ratio[0].max(rx);
                out.worst_ratio[1] = out.worst_ratio[1].max(re);
                if rx > 1.0 || re > 1.0 {
                    out.violations += 1;
                }
            }
            Err(_) => out.hypotheses_ok = false,
        }
    }
    out
}
