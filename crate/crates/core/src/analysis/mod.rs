//! Numerical checks behind the closed-loop stability argument.

pub mod asymptotics;
pub mod blowup;
pub mod bootstrap;
pub mod certificate;
pub mod deactivation;
pub mod decrease;
pub mod iss;
pub mod l2gain;
pub mod linalg;
pub mod lyapunov;
pub mod riccati;

pub use asymptotics::{pk_asymptotics, PkAsymptotics};
pub use blowup::{blowup_margin, BlowupMargin};
pub use bootstrap::{bootstrap_recursion, Bootstrap};
pub use certificate::{certify, CertifyOptions, CheckRow, GainCertificate};
pub use deactivation::{deactivation_bound, DeactivationReport};
pub use decrease::{vdot_decrease_check, DecreaseCheck};
pub use iss::{iss_bounds, IssMode};
pub use l2gain::{l2_gain_closed_form, l2_gain_sweep};
pub use linalg::{Matrix2, SymMatrix2, SymMatrix4};
pub use lyapunov::{lyapunov_matrix, v_positive_definite};
pub use riccati::{riccati_solve, RiccatiSolution};
