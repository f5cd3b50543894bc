//! Closed-form solution of `P A + A^T P + P^2 / g^2 = -I` for the 2x2
//! companion matrix `A`.
//!
//! Writing `X = P/g + g A`, the equation becomes `X^T X = S` with
//! `S = -I + g^2 A^T A`, so `X = R_phi sqrt(S)` for a rotation `R_phi`
//! chosen to make `P` symmetric. The construction loses digits to
//! cancellation for large `k2`; a few Newton steps on the Riccati map clean
//! it up.

use super::l2gain::riccati_level_sq_minus_one;
use super::linalg::{solve3, Matrix2, SymMatrix2};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiSolution {
    pub p: SymMatrix2,
    /// Operator norm of `P A + A^T P + P^2/g^2 + I` for the returned `P`.
    pub residual: f64,
    /// Same residual for the raw rotation construction, before polishing.
    pub construction_residual: f64,
    /// `|P12 - P21|` of the raw construction.
    pub construction_asymmetry: f64,
    pub sin_phi: f64,
    pub cos_phi: f64,
    /// Level `g` used in the equation.
    pub upsilon: f64,
    pub det_s: f64,
    pub newton_steps: usize,
}

impl RiccatiSolution {
    pub fn is_positive_definite(&self) -> bool {
        self.p.is_positive_definite()
    }
}

/// `P A + A^T P + P^2 / g^2 + I`.
pub fn riccati_map(p: &Matrix2, a: &Matrix2, g2: f64) -> Matrix2 {
    *p * *a + a.transpose() * *p + (*p * *p).scale(1.0 / g2) + Matrix2::identity()
}

pub fn riccati_residual(p: &SymMatrix2, k1: f64, k2: f64, upsilon: f64) -> f64 {
    let a = Matrix2::companion(k1, k2);
    riccati_map(&p.to_matrix(), &a, upsilon * upsilon).op_norm()
}

/// Solve at the printed closed-form level (see
/// [`super::l2gain::l2_gain_riccati_level`]).
pub fn riccati_solve_default(k1: f64, k2: f64) -> Result<RiccatiSolution> {
    let eps = riccati_level_sq_minus_one(k1, k2);
    riccati_solve_with(k1, k2, eps)
}

/// Solve at level `upsilon`.
pub fn riccati_solve(k1: f64, k2: f64, upsilon: f64) -> Result<RiccatiSolution> {
    riccati_solve_with(k1, k2, (upsilon - 1.0) * (upsilon + 1.0))
}

/// Solve at level `g` given as `g^2 - 1`, which keeps `det S` accurate.
pub fn riccati_solve_with(k1: f64, k2: f64, g2_minus_one: f64) -> Result<RiccatiSolution> {
    if !(k1 > 0.0 && k2 > 0.0) {
        return Err(Error::param(format!("A is not Hurwitz for k1 = {k1}, k2 = {k2}")));
    }
    let g2 = 1.0 + g2_minus_one;
    let g = g2.sqrt();
    let a = Matrix2::companion(k1, k2);
    let s = (a.transpose() * a).scale(g2) - Matrix2::identity();
    let det_s = g2_minus_one * (g2 * k1 * k1 - 1.0) - g2 * k2 * k2;
    if !(det_s > 0.0 && s.m[0][0] > 0.0) {
        return Err(Error::Certification(format!(
            "S = -I + g^2 A^T A is not positive definite (det S = {det_s:e})"
        )));
    }
    let sd = det_s.sqrt();
    let root_s = (s + Matrix2::identity().scale(sd)).scale(1.0 / (s.trace() + 2.0 * sd).sqrt());
    let sin_phi = -g * (1.0 + k1) / root_s.trace();
    if sin_phi.abs() > 1.0 {
        return Err(Error::Certification(format!("|sin phi| = {} > 1", sin_phi.abs())));
    }
    let cos_phi = ((1.0 - sin_phi) * (1.0 + sin_phi)).sqrt();
    let rot = Matrix2::new(cos_phi, -sin_phi, sin_phi, cos_phi);
    let raw = (rot * root_s - a.scale(g)).scale(g);
    let construction_asymmetry = raw.asymmetry();
    let construction_residual = riccati_map(&raw, &a, g2).op_norm();

    let mut p = raw.symmetric_part();
    let mut res = riccati_map(&p.to_matrix(), &a, g2).op_norm();
    let mut newton_steps = 0;
    for _ in 0..8 {
        let Some(next) = newton_step(&p, &a, g2) else { break };
        let next_res = riccati_map(&next.to_matrix(), &a, g2).op_norm();
        if !(next_res < res) {
            break;
        }
        p = next;
        res = next_res;
        newton_steps += 1;
    }
    Ok(RiccatiSolution {
        p,
        residual: res,
        construction_residual,
        construction_asymmetry,
        sin_phi,
        cos_phi,
        upsilon: g,
        det_s,
        newton_steps,
    })
}

/// One Newton step: solve `D B + B^T D = -F(P)` for symmetric `D`, with
/// `B = A + P/g^2`.
fn newton_step(p: &SymMatrix2, a: &Matrix2, g2: f64) -> Option<SymMatrix2> {
    let pm = p.to_matrix();
    let f = riccati_map(&pm, a, g2).symmetric_part();
    let b = (*a + pm.scale(1.0 / g2)).m;
    // unknowns (x, y, z) of D = [[x, y], [y, z]]
    let lhs = [
        [2.0 * b[0][0], 2.0 * b[1][0], 0.0],
        [b[0][1], b[1][1] + b[0][0], b[1][0]],
        [0.0, 2.0 * b[0][1], 2.0 * b[1][1]],
    ];
    let rhs = [-f.a, -f.b, -f.c];
    let [x, y, z] = solve3(lhs, rhs)?;
    Some(SymMatrix2::new(p.a + x, p.b + y, p.c + z))
}
