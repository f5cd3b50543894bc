//! Kinematics of the vehicle, the target point ahead of it, and the virtual
//! reference vehicle moving along the path.

use crate::path::PathSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    /// Heading, not wrapped.
    pub psi: f64,
    /// Geodesic curvature of the vehicle's path.
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TargetState {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReferenceState {
    pub p_r: f64,
    pub q_r: f64,
    pub psi_r: f64,
    pub s: f64,
}

/// Target-point pose and speed derived from a vehicle pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetPose {
    pub p: f64,
    pub q: f64,
    pub theta: f64,
    pub v_d: f64,
}

/// Piecewise-constant forward speed, bounded by `[v_min, v_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    v_min: f64,
    v_max: f64,
    /// `(t_start, speed)` pairs, sorted by `t_start`, first at `t = 0`.
    segments: Vec<(f64, f64)>,
}

impl SpeedProfile {
    pub fn constant(v: f64) -> Result<Self> {
        Self::piecewise(v, v, vec![(0.0, v)])
    }

    pub fn piecewise(v_min: f64, v_max: f64, mut segments: Vec<(f64, f64)>) -> Result<Self> {
        if !(v_min > 0.0 && v_min <= v_max && v_max.is_finite()) {
            return Err(Error::param(format!(
                "speed bounds need 0 < v_min <= v_max, got [{v_min}, {v_max}]"
            )));
        }
        if segments.is_empty() {
            return Err(Error::param("speed profile needs at least one segment"));
        }
        segments.sort_by(|a, b| a.0.total_cmp(&b.0));
        if segments[0].0 > 0.0 {
            return Err(Error::param("speed profile must start at t = 0"));
        }
        for &(t, v) in &segments {
            if !t.is_finite() || !(v_min..=v_max).contains(&v) {
                return Err(Error::param(format!(
                    "speed {v} at t = {t} outside [{v_min}, {v_max}]"
                )));
            }
        }
        Ok(SpeedProfile {
            v_min,
            v_max,
            segments,
        })
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn is_constant(&self) -> bool {
        self.segments.iter().all(|s| s.1 == self.segments[0].1)
    }

    pub fn value(&self, t: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.0 <= t);
        self.segments[i.saturating_sub(1)].1
    }
}

/// `sqrt(1 + (kappa d)^2)`.
#[inline]
pub fn stretch(kappa: f64, d: f64) -> f64 {
    (kappa * d).hypot(1.0)
}

pub fn target_from_vehicle(v: &VehicleState, d: f64, vx: f64) -> TargetPose {
    let (s, c) = v.psi.sin_cos();
    TargetPose {
        p: v.x + d * c,
        q: v.y + d * s,
        theta: v.psi + (v.kappa * d).atan(),
        v_d: vx * stretch(v.kappa, d),
    }
}

/// Time derivative of the vehicle curvature given the target-point curvature
/// `omega`.
pub fn kappa_dot(kappa: f64, omega: f64, vx: f64, d: f64) -> f64 {
    let g = 1.0 + (kappa * d).powi(2);
    vx * g * (g.sqrt() * omega - kappa) / d
}

/// Inverse of [`kappa_dot`] in `omega`.
pub fn omega_from_kappa(kappa: f64, kappa_dot: f64, vx: f64, d: f64) -> f64 {
    let g = 1.0 + (kappa * d).powi(2);
    (kappa + d * kappa_dot / (vx * g)) / g.sqrt()
}

/// Curvature `kappa` at which `kappa_dot` vanishes for a given `omega`.
/// Requires `|omega| d < 1`.
pub fn kappa_steady(omega: f64, d: f64) -> Result<f64> {
    let od = omega * d;
    if od.abs() >= 1.0 {
        return Err(Error::Init(format!(
            "no steady curvature for |omega| d = {} >= 1 (omega = {omega}, d = {d})",
            od.abs()
        )));
    }
    Ok(omega / ((1.0 - od) * (1.0 + od)).sqrt())
}

/// Physical steering input recovered from the curvature rate.
pub fn rho0_recover(kappa_dot: f64, vx: f64) -> f64 {
    kappa_dot / vx
}

/// Composite closed-loop state integrated by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClosedLoopState {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub kappa: f64,
    pub omega: f64,
    pub p_r: f64,
    pub q_r: f64,
    pub psi_r: f64,
    pub s: f64,
}

impl ClosedLoopState {
    pub const DIM: usize = 9;
    pub const NAMES: [&'static str; 9] = ["x", "y", "psi", "kappa", "omega", "p_r", "q_r", "psi_r", "s"];

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.x, self.y, self.psi, self.kappa, self.omega, self.p_r, self.q_r, self.psi_r, self.s,
        ]
    }

    pub fn from_array(a: &[f64; 9]) -> Self {
        ClosedLoopState {
            x: a[0],
            y: a[1],
            psi: a[2],
            kappa: a[3],
            omega: a[4],
            p_r: a[5],
            q_r: a[6],
            psi_r: a[7],
            s: a[8],
        }
    }

    pub fn vehicle(&self) -> VehicleState {
        VehicleState {
            x: self.x,
            y: self.y,
            psi: self.psi,
            kappa: self.kappa,
        }
    }

    pub fn reference(&self) -> ReferenceState {
        ReferenceState {
            p_r: self.p_r,
            q_r: self.q_r,
            psi_r: self.psi_r,
            s: self.s,
        }
    }

    pub fn target(&self, d: f64) -> TargetState {
        let tp = target_from_vehicle(&self.vehicle(), d, 1.0);
        TargetState {
            p: tp.p,
            q: tp.q,
            theta: tp.theta,
            omega: self.omega,
        }
    }
}

/// Inputs of the closed-loop vector field other than the state.
#[derive(Debug, Clone, Copy)]
pub struct LoopInputs<'a> {
    pub u1: f64,
    pub u2: f64,
    pub vx: f64,
    pub d: f64,
    pub path: &'a PathSpec,
}

/// Time derivative of the composite state for given normalized controls.
pub fn closed_loop_rhs(z: &ClosedLoopState, inp: &LoopInputs<'_>) -> Result<ClosedLoopState> {
    let LoopInputs { u1, u2, vx, d, path } = *inp;
    let kappa_r = path.curvature_at(z.s)?;
    let rho_r = path.dcurvature_at(z.s)?;
    let v_d = vx * stretch(z.kappa, d);
    let u = v_d * (1.0 + u1);
    let rho = rho_r * (1.0 + u1) + u2;
    let (sp, cp) = z.psi.sin_cos();
    let (sr, cr) = z.psi_r.sin_cos();
    Ok(ClosedLoopState {
        x: vx * cp,
        y: vx * sp,
        psi: vx * z.kappa,
        kappa: kappa_dot(z.kappa, z.omega, vx, d),
        omega: v_d * rho,
        p_r: u * cr,
        q_r: u * sr,
        psi_r: u * kappa_r,
        s: u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn veh(x: f64, y: f64, psi: f64, kappa: f64) -> VehicleState {
        VehicleState { x, y, psi, kappa }
    }

    #[test]
    fn target_examples() {
        let t = target_from_vehicle(&veh(0.0, 0.0, 0.0, 0.0), 2.0, 5.0);
        assert_eq!((t.p, t.q, t.theta, t.v_d), (2.0, 0.0, 0.0, 5.0));

        let t = target_from_vehicle(&veh(0.0, 0.0, 0.0, 0.5), 2.0, 5.0);
        assert_relative_eq!(t.theta, FRAC_PI_4, max_relative = 1e-15);
        assert_relative_eq!(t.v_d, 5.0 * 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(t.v_d, 7.0711, max_relative = 1e-5);

        let t = target_from_vehicle(&veh(1.0, 1.0, FRAC_PI_2, 0.0), 2.0, 5.0);
        assert_relative_eq!(t.p, 1.0, epsilon = 1e-15);
        assert_relative_eq!(t.q, 3.0);
        assert_relative_eq!(t.theta, FRAC_PI_2);
    }

    #[test]
    fn kappa_dot_examples() {
        assert_eq!(kappa_dot(0.0, 0.0, 5.0, 2.0), 0.0);
        assert_relative_eq!(kappa_dot(0.0, 0.1, 5.0, 2.0), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn kappa_dot_matches_heading_relation() {
        // theta = psi + atan(kappa d) must advance at v_d * omega.
        let (kappa, omega, vx, d) = (0.3, 0.2, 5.0, 2.0);
        let theta = |psi: f64, k: f64| psi + (k * d).atan();
        let kd = kappa_dot(kappa, omega, vx, d);
        let h = 1e-6;
        // psi_dot = vx kappa
        let fwd = theta(vx * kappa * h, kappa + kd * h);
        let bwd = theta(-vx * kappa * h, kappa - kd * h);
        let fd = (fwd - bwd) / (2.0 * h);
        let v_d = vx * stretch(kappa, d);
        assert_relative_eq!(fd, v_d * omega, max_relative = 1e-6);
    }

    #[test]
    fn omega_inverse_examples() {
        assert_eq!(omega_from_kappa(0.0, 0.0, 5.0, 2.0), 0.0);
        assert_relative_eq!(omega_from_kappa(0.0, 0.25, 5.0, 2.0), 0.1, max_relative = 1e-15);
    }

    #[test]
    fn steady_kappa_zeroes_rate() {
        let k = kappa_steady(0.3, 2.0).unwrap();
        assert!(kappa_dot(k, 0.3, 5.0, 2.0).abs() < 1e-13);
        assert!(kappa_steady(0.5, 2.0).is_err());
    }

    #[test]
    fn rho0_examples() {
        assert_eq!(rho0_recover(0.0, 5.0), 0.0);
        assert_relative_eq!(rho0_recover(0.25, 5.0), 0.05);
        assert_relative_eq!(rho0_recover(-1.5, 5.0), -0.3);
    }

    #[test]
    fn speed_profile_lookup() {
        let sp = SpeedProfile::piecewise(4.0, 6.0, vec![(10.0, 6.0), (0.0, 4.0)]).unwrap();
        assert_eq!(sp.value(0.0), 4.0);
        assert_eq!(sp.value(9.99), 4.0);
        assert_eq!(sp.value(10.0), 6.0);
        assert!(SpeedProfile::piecewise(4.0, 6.0, vec![(0.0, 7.0)]).is_err());
        assert!(SpeedProfile::constant(0.0).is_err());
    }
}
