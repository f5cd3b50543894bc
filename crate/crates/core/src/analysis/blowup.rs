//! Finite-time escape of the vehicle curvature `kappa`.
//!
//! Along `d kappa' = V (1 + (kd)^2)(sqrt(1 + (kd)^2) omega - kappa)` with
//! `|omega - kappa_r| <= eta_bar`, the growth of `|kappa|` is dominated by
//! `|kappa| V (d eta_bar + d kappa_max - 1 + 1/(1 + (d kappa)^2))`, which is
//! negative above a trap level `K` whenever
//! `margin = 1 - d kappa_max - d eta_bar > 0`.

use crate::model::kappa_dot;
use crate::path::h1_verdict;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupMargin {
    pub margin: f64,
    pub verdict: bool,
    /// `None` when the margin is not positive (no trap level exists).
    pub trap_level: Option<f64>,
}

/// The bracket in the dominating expression, as a function of `|kappa|`.
pub fn trap_function(kappa_abs: f64, d: f64, kappa_max: f64, eta_bar: f64) -> f64 {
    d * eta_bar + d * kappa_max - 1.0 + 1.0 / (1.0 + (d * kappa_abs).powi(2))
}

pub fn blowup_margin(d: f64, kappa_max: f64, eta_bar: f64) -> Result<BlowupMargin> {
    if !(d > 0.0) {
        return Err(Error::param("d must be positive"));
    }
    if !h1_verdict(kappa_max, d).is_ok() {
        return Err(Error::H1Violated(d * kappa_max));
    }
    let margin = 1.0 - d * kappa_max - d * eta_bar;
    let verdict = margin > 0.0;
    let trap_level = verdict.then(|| trap_level_bisect(d, kappa_max, eta_bar));
    Ok(BlowupMargin {
        margin,
        verdict,
        trap_level,
    })
}

/// Root of [`trap_function`] in `|kappa|` by bisection. Requires a positive
/// margin; the function decreases from `d(kappa_max + eta_bar) > 0`.
fn trap_level_bisect(d: f64, kappa_max: f64, eta_bar: f64) -> f64 {
    let f = |k: f64| trap_function(k, d, kappa_max, eta_bar);
    let mut lo = 0.0;
    let mut hi = 1.0 / d;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapRun {
    pub kappa0: f64,
    pub trap_level: f64,
    /// First time `|kappa|` fell below the trap level.
    pub entry_time: Option<f64>,
    pub kappa_final: f64,
}

/// Integrate the curvature dynamics from `|kappa(0)| = factor * K` with the
/// worst-case constant `omega = sign(kappa)(kappa_max + eta_bar)`.
pub fn worst_case_trap_run(
    d: f64,
    kappa_max: f64,
    eta_bar: f64,
    vx: f64,
    factor: f64,
    dt: f64,
    t_end: f64,
) -> Result<TrapRun> {
    let bm = blowup_margin(d, kappa_max, eta_bar)?;
    let k_trap = bm
        .trap_level
        .ok_or_else(|| Error::param("no trap level: blow-up margin is not positive"))?;
    let kappa0 = factor * k_trap;
    let omega = |k: f64| k.signum() * (kappa_max + eta_bar);
    let f = |k: f64| kappa_dot(k, omega(k), vx, d);
    let mut k = kappa0;
    let mut t = 0.0;
    let mut entry = None;
    let n = (t_end / dt).ceil() as usize;
    for _ in 0..n {
        let a = f(k);
        let b = f(k + 0.5 * dt * a);
        let c = f(k + 0.5 * dt * b);
        let e = f(k + dt * c);
        k += dt / 6.0 * (a + 2.0 * b + 2.0 * c + e);
        t += dt;
        if !k.is_finite() {
            return Err(Error::Blowup {
                t,
                component: "kappa".into(),
            });
        }
        if entry.is_none() && k.abs() < k_trap {
            entry = Some(t);
        }
    }
    Ok(TrapRun {
        kappa0,
        trap_level: k_trap,
        entry_time: entry,
        kappa_final: k,
    })
}
