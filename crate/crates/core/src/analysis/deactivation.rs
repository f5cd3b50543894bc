//! Deactivation of the outer saturation in `u2`.
//!
//! With `X = (k1/D) xi`, `Y = (k2/D) eta` and time stretched by `k1/k2`, the
//! `(xi, eta)` loop becomes
//! `X' = Y + (k2 C1/D) d1`, `Y' = -(1/a) sat(X + Y + (C2/D) d2)`,
//! whose residual amplitude is of order `1/(k2 D)`.

use super::asymptotics::ls_slope;
use crate::controller::{sat, synthesize_gains, Gains};
use crate::exec::Exec;
use crate::Result;

/// Default heuristic constant in the predicted limsup.
pub const C_HAT_DEFAULT: f64 = 10.0;

#[derive(Debug, Clone, Copy)]
pub struct XyOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Fraction of the horizon after which the limsup is measured.
    pub tail_from: f64,
}

impl Default for XyOptions {
    fn default() -> Self {
        XyOptions {
            dt: 1e-2,
            t_end: 80.0,
            tail_from: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeactivationReport {
    /// `c_hat / (k2 D) * (d1_inf + d2_inf)`.
    pub predicted: f64,
    /// Tail sup of `|X| + |Y|` under constant worst-case disturbances.
    pub empirical_limsup: f64,
    /// Tail sup of the saturation argument `|X + Y + (C2/D) d2|`.
    pub sat_arg_limsup: f64,
}

pub fn deactivation_bound(g: &Gains, d1_inf: f64, d2_inf: f64, c_hat: f64, opts: &XyOptions) -> DeactivationReport {
    let predicted = c_hat / (g.k2 * g.d_sat) * (d1_inf + d2_inf);
    let (limsup, arg) = simulate_xy(g, d1_inf, d2_inf, opts);
    DeactivationReport {
        predicted,
        empirical_limsup: limsup,
        sat_arg_limsup: arg,
    }
}

/// RK4 on the `(X, Y)` system from the origin with constant disturbances.
/// Returns the tail sups of `|X| + |Y|` and of the saturation argument.
pub fn simulate_xy(g: &Gains, d1: f64, d2: f64, opts: &XyOptions) -> (f64, f64) {
    let a = g.k1 / (g.k2 * g.k2);
    let e1 = g.k2 * g.c1 / g.d_sat * d1;
    let e2 = g.c2 / g.d_sat * d2;
    let f = |z: [f64; 2]| [z[1] + e1, -sat(z[0] + z[1] + e2) / a];
    let n = (opts.t_end / opts.dt).round() as usize;
    let tail = (opts.tail_from * n as f64) as usize;
    let h = opts.dt;
    let mut z = [0.0f64; 2];
    let (mut sup, mut arg) = (0.0f64, 0.0f64);
    for i in 1..=n {
        let k1 = f(z);
        let k2 = f([z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]]);
        let k3 = f([z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]]);
        let k4 = f([z[0] + h * k3[0], z[1] + h * k3[1]]);
        for j in 0..2 {
            z[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if i >= tail {
            sup = sup.max(z[0].abs() + z[1].abs());
            arg = arg.max((z[0] + z[1] + e2).abs());
        }
    }
    (sup, arg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeactivationScaling {
    /// `(k2 D, empirical limsup)` pairs.
    pub rows: Vec<(f64, f64)>,
    pub exponent: f64,
}

/// Empirical limsup for theorem-mode gains at fixed `k2`, `beta` over a list
/// of `D` values, and its log-log slope against `k2 D`.
pub fn deactivation_scaling(
    k2: f64,
    beta: f64,
    d_values: &[f64],
    d1: f64,
    d2: f64,
    opts: &XyOptions,
    exec: Exec,
) -> Result<DeactivationScaling> {
    let gains: Vec<Gains> = d_values
        .iter()
        .map(|&d| synthesize_gains(k2, beta, d))
        .collect::<Result<_>>()?;
    let rows: Vec<(f64, f64)> = exec.map(&gains, |g| (g.k2 * g.d_sat, simulate_xy(g, d1, d2, opts).0));
    let x: Vec<f64> = rows.iter().map(|r| r.0.ln()).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
    Ok(DeactivationScaling {
        exponent: ls_slope(&x, &y),
        rows,
    })
}
