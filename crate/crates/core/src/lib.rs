//! Simulation and numerical certification of a saturated target-point
//! path-following controller for car-like vehicles.
//!
//! The crate is organised bottom-up: [`path`] describes reference curvature
//! profiles, [`model`] holds the vehicle / target-point kinematics,
//! [`controller`] the error coordinates and saturated feedback, [`analysis`]
//! the numerical checks behind the stability argument, and [`sim`] the
//! fixed-step closed-loop integrator with its monitors.

pub mod analysis;
pub mod config;
pub mod controller;
mod error;
pub mod exec;
pub mod model;
pub mod path;
pub mod report;
pub mod sim;

pub use error::{Error, Result};
