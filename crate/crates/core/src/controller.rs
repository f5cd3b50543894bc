//! Error coordinates, gain synthesis and the saturated feedback laws.

use crate::model::{kappa_dot, ReferenceState, TargetState};
use crate::{Error, Result};

/// The fixed ratio `k1 / k2^2` used by theorem-mode gains.
pub const A: f64 = 3.0 / 16.0;
/// Smallest `k2` accepted by theorem-mode synthesis.
pub const K2_MIN: f64 = 20.0;
/// `beta` must be strictly above this.
pub const BETA_MIN: f64 = 8.0;
/// Threshold on `1 / (k2 D)` above which synthesis raises a warning flag.
pub const SMALLNESS_LIMIT: f64 = 0.01;

#[inline]
pub fn sat(x: f64) -> f64 {
    x / x.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState {
    pub e_p: f64,
    pub e_q: f64,
    pub xi: f64,
    pub eta: f64,
    pub y1: f64,
    pub y2: f64,
}

pub fn compute_errors(target: &TargetState, r: &ReferenceState, kappa_r: f64) -> ErrorState {
    let e_p = target.p - r.p_r;
    let e_q = target.q - r.q_r;
    let (y1, y2) = rotate(e_p, e_q, r.psi_r);
    ErrorState {
        e_p,
        e_q,
        xi: target.theta - r.psi_r,
        eta: target.omega - kappa_r,
        y1,
        y2,
    }
}

/// Express `(e_p, e_q)` in the frame of heading `psi_r`.
#[inline]
pub fn rotate(e_p: f64, e_q: f64, psi_r: f64) -> (f64, f64) {
    let (s, c) = psi_r.sin_cos();
    (e_p * c + e_q * s, -e_p * s + e_q * c)
}

/// Inverse of [`rotate`].
#[inline]
pub fn unrotate(y1: f64, y2: f64, psi_r: f64) -> (f64, f64) {
    let (s, c) = psi_r.sin_cos();
    (y1 * c - y2 * s, y1 * s + y2 * c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GainMode {
    Theorem,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gains {
    pub a: f64,
    pub k1: f64,
    pub k2: f64,
    pub c1: f64,
    pub c2: f64,
    pub d_sat: f64,
    /// `M / k2`; an input in theorem mode, implied in manual mode.
    pub beta: f64,
    pub m: f64,
    pub mode: GainMode,
}

impl Gains {
    /// True when `1 / (k2 D)` is not small enough for the deactivation argument.
    pub fn smallness_warning(&self) -> bool {
        self.smallness() > SMALLNESS_LIMIT
    }

    pub fn smallness(&self) -> f64 {
        1.0 / (self.k2 * self.d_sat)
    }

    /// Relative deviations of the theorem-mode relations; all zero for
    /// synthesized gains. Order: `k1 = a k2^2`, `2 beta k2 C2 = 1`,
    /// `4 k2 C1 = a C2`, with `beta = M / k2`.
    pub fn relation_residuals(&self) -> [(&'static str, f64); 3] {
        let beta = self.m / self.k2;
        [
            ("k1 = a*k2^2", self.k1 / (A * self.k2 * self.k2) - 1.0),
            ("C2 = 1/(2*beta*k2)", 2.0 * beta * self.k2 * self.c2 - 1.0),
            ("C1 = a*C2/(4*k2)", 4.0 * self.k2 * self.c1 / (A * self.c2) - 1.0),
        ]
    }
}

/// Theorem-mode gains from `(k2, beta, D)`.
pub fn synthesize_gains(k2: f64, beta: f64, d_sat: f64) -> Result<Gains> {
    if !(k2 >= K2_MIN && k2.is_finite()) {
        return Err(Error::param(format!("k2 must be >= {K2_MIN}, got {k2}")));
    }
    if !(beta > BETA_MIN && beta.is_finite()) {
        return Err(Error::param(format!("beta must be > {BETA_MIN}, got {beta}")));
    }
    if !(d_sat > 0.0 && d_sat.is_finite()) {
        return Err(Error::param(format!("D must be positive, got {d_sat}")));
    }
    let c2 = 1.0 / (2.0 * beta * k2);
    Ok(Gains {
        a: A,
        k1: A * k2 * k2,
        k2,
        c1: A * c2 / (4.0 * k2),
        c2,
        d_sat,
        beta,
        m: beta * k2,
        mode: GainMode::Theorem,
    })
}

/// Arbitrary positive gains, e.g. a hand-tuned experiment.
pub fn manual_gains(k1: f64, k2: f64, c1: f64, c2: f64, d_sat: f64, m: f64) -> Result<Gains> {
    for (name, v) in [("k1", k1), ("k2", k2), ("c1", c1), ("c2", c2), ("d_sat", d_sat), ("m", m)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::param(format!("{name} must be positive, got {v}")));
        }
    }
    if c1 >= 1.0 {
        return Err(Error::param(format!("c1 must be < 1, got {c1}")));
    }
    Ok(Gains {
        a: k1 / (k2 * k2),
        k1,
        k2,
        c1,
        c2,
        d_sat,
        beta: m / k2,
        m,
        mode: GainMode::Manual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls {
    pub u1: f64,
    pub u2: f64,
    /// Argument of the outer saturation in `u2`, before saturating.
    pub sat_arg: f64,
}

pub fn control(err: &ErrorState, g: &Gains) -> Controls {
    control_yxe(err.y1, err.y2, err.xi, err.eta, g)
}

#[inline]
pub fn control_yxe(y1: f64, y2: f64, xi: f64, eta: f64, g: &Gains) -> Controls {
    let sat_arg = (g.k1 * xi + g.k2 * eta + g.c2 * sat(y2)) / g.d_sat;
    Controls {
        u1: g.c1 * sat(y1),
        u2: -g.d_sat * sat(sat_arg),
        sat_arg,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalControls {
    /// Reference speed.
    pub u: f64,
    /// Target-point curvature rate per unit length.
    pub rho: f64,
    /// Vehicle steering input.
    pub rho0: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn physical_controls(
    u1: f64,
    u2: f64,
    v_d: f64,
    rho_r: f64,
    kappa: f64,
    omega: f64,
    vx: f64,
    d: f64,
) -> PhysicalControls {
    PhysicalControls {
        u: v_d * (1.0 + u1),
        rho: rho_r * (1.0 + u1) + u2,
        rho0: kappa_dot(kappa, omega, vx, d) / vx,
    }
}

#[inline]
pub fn mu(kappa_r: f64, u1: f64) -> f64 {
    kappa_r * (1.0 + u1)
}

/// State of the rescaled error system: rotated errors, heading and curvature
/// errors, and the reference arclength.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorSystemState {
    pub y1: f64,
    pub y2: f64,
    pub xi: f64,
    pub eta: f64,
    pub s: f64,
}

impl ErrorSystemState {
    pub const NAMES: [&'static str; 5] = ["y1", "y2", "xi", "eta", "s"];

    pub fn to_array(&self) -> [f64; 5] {
        [self.y1, self.y2, self.xi, self.eta, self.s]
    }

    pub fn from_array(a: &[f64; 5]) -> Self {
        ErrorSystemState {
            y1: a[0],
            y2: a[1],
            xi: a[2],
            eta: a[3],
            s: a[4],
        }
    }
}

/// Vector field of the error system in rescaled time `d tau = v_d dt`,
/// with the feedback closed. `kappa_r` is the reference curvature at `s`.
pub fn error_system_rhs(z: &ErrorSystemState, kappa_r: f64, g: &Gains) -> ErrorSystemState {
    let c = control_yxe(z.y1, z.y2, z.xi, z.eta, g);
    let m = mu(kappa_r, c.u1);
    let (sx, cx) = z.xi.sin_cos();
    ErrorSystemState {
        y1: -c.u1 + cos_m1(z.xi, cx) + m * z.y2,
        y2: sx - m * z.y1,
        xi: z.eta - kappa_r * c.u1,
        eta: c.u2,
        s: 1.0 + c.u1,
    }
}

/// `cos(x) - 1` without cancellation for small `x`.
#[inline]
pub fn cos_m1(x: f64, cos_x: f64) -> f64 {
    if x.abs() < 0.5 {
        let h = (0.5 * x).sin();
        -2.0 * h * h
    } else {
        cos_x - 1.0
    }
}
