//! Reduced-order model of a thruster-assisted quadruped walking a narrow
//! path: forward simulation under a heuristic gait with attitude-stabilizing
//! thrust, plus a direct-collocation optimal-control layer.
//!
//! The crate is organized around the simulation pipeline:
//!
//! - [`model`]: coordinate conventions, rotations, leg kinematics, robot
//!   parameters;
//! - [`contact`]: compliant ground and Stribeck friction;
//! - [`dynamics`]: manipulator-form equations of motion and thruster wrench
//!   condensation/allocation;
//! - [`gait`]: Bezier swing/stance foot trajectories with a diagonal-pair
//!   contact schedule and the joint tracking law;
//! - [`sim`]: RK4 time marching, pose-error thrust controller, trajectory
//!   logging and CSV export;
//! - [`trajopt`]: collocation transcription (linear control and cubic state
//!   interpolants, midpoint defects) and an augmented-Lagrangian solver;
//! - [`config`]: flat key = value run configuration;
//! - [`verify`]: the self-check suite behind `hrom verify`.
//!
//! See the `examples/` directory for runnable entry points per capability.

pub mod config;
pub mod contact;
pub mod dynamics;
pub mod gait;
pub mod model;
pub mod sim;
pub mod trajopt;
pub mod verify;
