//! The closed-loop error system integrated on its own, in rescaled time.
//!
//! Unlike the full model it has no vehicle curvature state, so it cannot
//! escape through `kappa`; it is the system the decrease and deactivation
//! arguments are stated for.

use std::io::Write;

use super::integrate::{name_component, rk4_step};
use super::{initial_rotated, SimConfig, YBox};
use crate::analysis::decrease::vdot_decrease_check;
use crate::analysis::lyapunov::v_direct;
use crate::analysis::riccati::riccati_solve_default;
use crate::controller::{control_yxe, error_system_rhs, ErrorSystemState, Gains};
use crate::path::PathSpec;
use crate::report::{csv_writer, fmt_f64};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSystemConfig {
    pub gains: Gains,
    pub path: PathSpec,
    pub init: ErrorSystemState,
    pub dtau: f64,
    pub tau_end: f64,
    pub split: f64,
    pub ybox: YBox,
}

/// Error-system counterpart of a simulation config. Rescaled time is
/// approximated by `tau = V_x t` using the initial speed.
pub fn error_system_config(cfg: &SimConfig) -> ErrorSystemConfig {
    let (y1, y2) = initial_rotated(&cfg.init);
    let vx = cfg.speed.value(0.0);
    ErrorSystemConfig {
        gains: cfg.gains,
        path: cfg.path.clone(),
        init: ErrorSystemState {
            y1,
            y2,
            xi: cfg.init.xi0,
            eta: cfg.init.eta0,
            s: cfg.init.s0,
        },
        dtau: cfg.dt * vx,
        tau_end: cfg.t_end * vx,
        split: cfg.monitor.split,
        ybox: cfg.monitor.ybox,
    }
}

pub const ERROR_TRACE_COLUMNS: [&str; 11] =
    ["tau", "s", "kappa_r", "y1", "y2", "xi", "eta", "u1", "u2", "sat_arg", "V"];

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTrace {
    pub rows: Vec<[f64; 11]>,
    /// Decrease failures after the split, outside the y-box.
    pub violations_outside_box: usize,
    /// Decrease failures after the split, anywhere.
    pub violations: usize,
    pub checked: usize,
    /// Largest `|y1|`, `|y2|` among the failures after the split.
    pub violation_extent: [f64; 2],
    /// Start of the final stretch on which `|sat_arg| < 1` throughout.
    pub sat_deactivation_tau: Option<f64>,
}

impl ErrorTrace {
    pub fn column(&self, name: &str) -> Vec<f64> {
        let i = ERROR_TRACE_COLUMNS
            .iter()
            .position(|c| *c == name)
            .unwrap_or_else(|| panic!("unknown error-trace column {name}"));
        self.rows.iter().map(|r| r[i]).collect()
    }

    /// `[y1, y2, xi, eta]` per row.
    pub fn yxe(&self) -> Vec<[f64; 4]> {
        self.rows.iter().map(|r| [r[3], r[4], r[5], r[6]]).collect()
    }

    pub fn final_norm(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r[3].hypot(r[4]))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv_writer(w);
        wr.write_record(ERROR_TRACE_COLUMNS)?;
        for r in &self.rows {
            wr.write_record(r.iter().map(|&v| fmt_f64(v)))?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn run_error_system(cfg: &ErrorSystemConfig) -> Result<ErrorTrace> {
    let g = &cfg.gains;
    let p = riccati_solve_default(g.k1, g.k2)?.p;
    let n = (cfg.tau_end / cfg.dtau).round() as usize;
    let split = cfg.split * cfg.tau_end;
    let mut out = ErrorTrace {
        rows: Vec::with_capacity(n + 1),
        violations_outside_box: 0,
        violations: 0,
        checked: 0,
        violation_extent: [0.0; 2],
        sat_deactivation_tau: None,
    };
    let mut last_sat = None;
    let mut z = cfg.init;
    let f = |_: f64, a: &[f64; 5]| -> Result<[f64; 5]> {
        let z = ErrorSystemState::from_array(a);
        let kr = cfg.path.curvature_at(z.s)?;
        Ok(error_system_rhs(&z, kr, g).to_array())
    };
    for i in 0..=n {
        let tau = i as f64 * cfg.dtau;
        let kr = cfg.path.curvature_at(z.s)?;
        let c = control_yxe(z.y1, z.y2, z.xi, z.eta, g);
        let pt = [z.xi, z.eta, z.y1, z.y2];
        let v = v_direct(pt, g, &p);
        out.rows
            .push([tau, z.s, kr, z.y1, z.y2, z.xi, z.eta, c.u1, c.u2, c.sat_arg, v]);
        if c.sat_arg.abs() >= 1.0 {
            last_sat = Some(tau);
        }
        if tau >= split {
            out.checked += 1;
            if !vdot_decrease_check(pt, kr, g, &p).holds {
                out.violations += 1;
                out.violation_extent[0] = out.violation_extent[0].max(z.y1.abs());
                out.violation_extent[1] = out.violation_extent[1].max(z.y2.abs());
                if !cfg.ybox.contains(g.k2, z.y1, z.y2) {
                    out.violations_outside_box += 1;
                }
            }
        }
        if i == n {
            break;
        }
        let a = rk4_step(&z.to_array(), tau, cfg.dtau, f)
            .map_err(|e| name_component(e, &ErrorSystemState::NAMES))?;
        z = ErrorSystemState::from_array(&a);
    }
    out.sat_deactivation_tau = match last_sat {
        None => Some(0.0),
        Some(t) if t + 0.5 * cfg.dtau < n as f64 * cfg.dtau => Some(t + cfg.dtau),
        Some(_) => None,
    };
    Ok(out)
}
