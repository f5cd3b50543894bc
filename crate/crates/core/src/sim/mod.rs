//! Fixed-step closed-loop simulation with live monitors.

mod integrate;
mod reduced;
mod run;
mod sweep;

pub use integrate::rk4_step;
pub use reduced::{error_system_config, run_error_system, ErrorSystemConfig, ErrorTrace};
pub use run::{run, MonitorReport, SimFailure, SimOutput, Trace, TRACE_COLUMNS};
pub use sweep::{sweep, SweepAxis, SweepRow, SweepTable};

use crate::analysis::decrease::BoxScaling;
use crate::controller::{compute_errors, unrotate, Gains};
use crate::model::{kappa_steady, omega_from_kappa, ClosedLoopState, SpeedProfile};
use crate::path::{validate_h1, H1Verdict, PathSpec};
use crate::{Error, Result};

/// Initial condition in error coordinates plus the reference start pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitSpec {
    pub e_p0: f64,
    pub e_q0: f64,
    pub xi0: f64,
    pub eta0: f64,
    /// When set, the vehicle curvature is taken from here (with zero
    /// curvature rate) and `eta0` is ignored.
    pub kappa0: Option<f64>,
    pub p_r0: f64,
    pub q_r0: f64,
    pub psi_r0: f64,
    pub s0: f64,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            e_p0: 0.0,
            e_q0: 0.0,
            xi0: 0.0,
            eta0: 0.0,
            kappa0: None,
            p_r0: 0.0,
            q_r0: 0.0,
            psi_r0: 0.0,
            s0: 0.0,
        }
    }
}

/// Box `|y1| <= c1 / k2^2`, `|y2| <= c2 / k2^1.5` inside which the decrease
/// monitor does not count violations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YBox {
    pub c1: f64,
    pub c2: f64,
}

impl YBox {
    pub fn from_scaling(s: &BoxScaling) -> Self {
        YBox {
            c1: s.constants[0],
            c2: s.constants[1],
        }
    }

    pub fn contains(&self, k2: f64, y1: f64, y2: f64) -> bool {
        y1.abs() <= self.c1 / (k2 * k2) && y2.abs() <= self.c2 / k2.powf(1.5)
    }
}

impl Default for YBox {
    fn default() -> Self {
        // Fitted from the linearized failure-set extents at kappa_max = 0.45
        // over k2 in {100, 200, 400} with a 5% margin.
        YBox { c1: 892.0, c2: 42.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorOptions {
    /// Fraction of the horizon after which asymptotic monitors apply.
    pub split: f64,
    pub ybox: YBox,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        MonitorOptions {
            split: 0.5,
            ybox: YBox::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub d: f64,
    pub speed: SpeedProfile,
    pub path: PathSpec,
    pub gains: Gains,
    pub init: InitSpec,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub monitor: MonitorOptions,
}

/// Largest admissible `dt * k2 * D` before a warning is raised.
pub const STIFFNESS_LIMIT: f64 = 5.0;

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::config(format!("vehicle.d must be positive, got {}", self.d)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("sim.dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > self.dt && self.t_end.is_finite()) {
            return Err(Error::config(format!(
                "sim.t_end must exceed sim.dt, got t_end = {} with dt = {}",
                self.t_end, self.dt
            )));
        }
        if !(0.0..1.0).contains(&self.monitor.split) {
            return Err(Error::config("sim.monitor_split must be in [0, 1)"));
        }
        if let H1Verdict::Violated { d_kappa_max } = validate_h1(&self.path, self.d) {
            return Err(Error::H1Violated(d_kappa_max));
        }
        Ok(())
    }

    /// Non-fatal advisories about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        let stiff = self.dt * self.gains.k2 * self.gains.d_sat;
        if stiff > STIFFNESS_LIMIT {
            w.push(format!(
                "warning: dt*k2*D = {stiff} exceeds {STIFFNESS_LIMIT}; the saturated eta dynamics may be under-resolved"
            ));
        }
        if self.gains.smallness_warning() {
            w.push(format!(
                "warning: 1/(k2*D) = {} is not small (limit {})",
                self.gains.smallness(),
                crate::controller::SMALLNESS_LIMIT
            ));
        }
        w
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Full closed-loop initial state from error-space initial conditions.
///
/// The target point is placed at the requested errors from the reference;
/// `kappa` is the curvature at which `kappa` is stationary for the requested
/// `omega` (`kappa = omega / sqrt(1 - (omega d)^2)`), and the vehicle sits `d`
/// behind the target point along its heading.
pub fn init_states(cfg: &SimConfig) -> Result<ClosedLoopState> {
    let i = &cfg.init;
    let kappa_r = cfg.path.curvature_at(i.s0)?;
    let (kappa, omega) = match i.kappa0 {
        Some(k) => (k, omega_from_kappa(k, 0.0, cfg.speed.value(0.0), cfg.d)),
        None => {
            let omega = kappa_r + i.eta0;
            (kappa_steady(omega, cfg.d)?, omega)
        }
    };
    let theta = i.psi_r0 + i.xi0;
    let psi = theta - (kappa * cfg.d).atan();
    let p = i.p_r0 + i.e_p0;
    let q = i.q_r0 + i.e_q0;
    let (sp, cp) = psi.sin_cos();
    Ok(ClosedLoopState {
        x: p - cfg.d * cp,
        y: q - cfg.d * sp,
        psi,
        kappa,
        omega,
        p_r: i.p_r0,
        q_r: i.q_r0,
        psi_r: i.psi_r0,
        s: i.s0,
    })
}

/// Errors of a closed-loop state, for convenience.
pub fn state_errors(z: &ClosedLoopState, cfg: &SimConfig) -> Result<crate::controller::ErrorState> {
    let kappa_r = cfg.path.curvature_at(z.s)?;
    Ok(compute_errors(&z.target(cfg.d), &z.reference(), kappa_r))
}

/// Initial rotated errors `(y1, y2)` implied by an [`InitSpec`].
pub fn initial_rotated(i: &InitSpec) -> (f64, f64) {
    crate::controller::rotate(i.e_p0, i.e_q0, i.psi_r0)
}

/// Inverse of [`initial_rotated`], used to express initial errors in the
/// reference frame.
pub fn initial_from_rotated(y1: f64, y2: f64, psi_r0: f64) -> (f64, f64) {
    unrotate(y1, y2, psi_r0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::manual_gains;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    pub(crate) fn reversed_start_config() -> SimConfig {
        SimConfig {
            d: 2.0,
            speed: SpeedProfile::constant(5.0).unwrap(),
            path: PathSpec::line(0.01, 1e-3).unwrap(),
            gains: manual_gains(7500.0, 200.0, 0.1172, 0.5, 50.0, 1620.0).unwrap(),
            init: InitSpec {
                e_p0: 10.0,
                e_q0: 10.0,
                xi0: 0.9 * PI,
                ..Default::default()
            },
            dt: 1e-3,
            t_end: 60.0,
            seed: 0,
            monitor: MonitorOptions::default(),
        }
    }

    #[test]
    fn zero_error_line_start() {
        let mut cfg = reversed_start_config();
        cfg.init = InitSpec::default();
        let z = init_states(&cfg).unwrap();
        assert_eq!((z.x, z.y, z.psi, z.kappa), (-2.0, 0.0, 0.0, 0.0));
        let t = z.target(cfg.d);
        assert_eq!((t.p, t.q, t.theta, t.omega), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn reversed_start_target() {
        let cfg = reversed_start_config();
        let z = init_states(&cfg).unwrap();
        let t = z.target(cfg.d);
        assert_relative_eq!(t.p, 10.0, max_relative = 1e-14);
        assert_relative_eq!(t.q, 10.0, max_relative = 1e-14);
        assert_relative_eq!(t.theta, 0.9 * PI, max_relative = 1e-15);
    }

    #[test]
    fn init_roundtrip_on_curved_path() {
        let mut cfg = reversed_start_config();
        cfg.path = PathSpec::sine(0.2, 0.02).unwrap();
        cfg.init = InitSpec {
            e_p0: 1.5,
            e_q0: -0.7,
            xi0: 0.4,
            eta0: 0.05,
            kappa0: None,
            p_r0: 3.0,
            q_r0: -1.0,
            psi_r0: 0.8,
            s0: 7.0,
        };
        let z = init_states(&cfg).unwrap();
        let e = state_errors(&z, &cfg).unwrap();
        assert_relative_eq!(e.e_p, 1.5, epsilon = 1e-10);
        assert_relative_eq!(e.e_q, -0.7, epsilon = 1e-10);
        assert_relative_eq!(e.xi, 0.4, epsilon = 1e-10);
        assert_relative_eq!(e.eta, 0.05, epsilon = 1e-10);
    }

    #[test]
    fn omega_too_large_is_an_init_error() {
        let mut cfg = reversed_start_config();
        cfg.init.eta0 = 0.6;
        assert!(matches!(init_states(&cfg), Err(Error::Init(_))));
    }

    #[test]
    fn h1_and_step_validation() {
        let mut cfg = reversed_start_config();
        assert!(cfg.validate().is_ok());
        cfg.d = 100.0;
        assert!(matches!(cfg.validate(), Err(Error::H1Violated(_))));
        let mut cfg = reversed_start_config();
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stiffness_warning() {
        // dt*k2*D = 10 at the default step for these gains
        let mut cfg = reversed_start_config();
        assert_eq!(cfg.warnings().len(), 1);
        cfg.dt = 4e-4;
        assert!(cfg.warnings().is_empty());
    }
}
