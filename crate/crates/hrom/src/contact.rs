//! Compliant ground with Stribeck friction.
//!
//! A foot above the surface carries no force. In contact, the normal force is
//! a spring-damper in the penetration depth (clamped at zero so the ground
//! never pulls), and each tangential axis combines a velocity-dependent
//! Coulomb/static blend with a viscous term:
//!
//! ```text
//! u_z = max(0, -k_gz·z - k_dz·ż)
//! u_x = -s(ẋ)·u_z·sgn(ẋ) - μ_v·ẋ
//! s(v) = μ_c - (μ_c - μ_s)·exp(-v²/v_s²)
//! ```
//!
//! `s` decays from μ_s at rest toward μ_c as the slip speed passes the
//! Stribeck velocity `v_s`. The y axis is treated identically to x.
//!
//! The sign function is realized as a saturating ramp over a thin velocity
//! boundary layer (`slip_regularization`, default 20 mm/s): `sgn(0) = 0`
//! holds, the Coulomb bound `|u_t| ≤ s·u_z` holds for all velocities, and
//! the force law stays differentiable for the optimizer with a boundary-layer
//! mode slow enough for a collocation grid to represent. A loaded foot under
//! a few newtons of tangential load creeps at millimeters per second inside
//! the layer, which keeps per-stance drift well under the slippage budget.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Ground compliance, friction coefficients, and support geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundParams {
    /// Normal spring stiffness, N/m.
    pub k_gz: f64,
    /// Normal damping, N·s/m.
    pub k_dz: f64,
    /// Coulomb friction coefficient.
    pub mu_c: f64,
    /// Static friction coefficient (≥ μ_c).
    pub mu_s: f64,
    /// Viscous friction coefficient, N·s/m.
    pub mu_v: f64,
    /// Stribeck velocity, m/s (> 0).
    pub v_s: f64,
    /// Half-width of the supporting strip, m; infinite for a full plane.
    pub path_half_width: f64,
    /// Surface height, m.
    pub ground_height: f64,
    /// Velocity boundary layer replacing the hard sign function, m/s.
    pub slip_regularization: f64,
}

impl Default for GroundParams {
    fn default() -> Self {
        Self {
            k_gz: 8000.0,
            k_dz: 250.0,
            mu_c: 0.5,
            mu_s: 0.6,
            mu_v: 0.8,
            v_s: 0.01,
            path_half_width: f64::INFINITY,
            ground_height: 0.0,
            slip_regularization: 0.02,
        }
    }
}

impl GroundParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.k_gz > 0.0 && self.k_dz > 0.0) {
            return Err(format!(
                "ground stiffness/damping must be positive: {self:?}"
            ));
        }
        if !(self.v_s > 0.0) {
            return Err(format!(
                "Stribeck velocity must be positive, got {}",
                self.v_s
            ));
        }
        if !(self.slip_regularization > 0.0) {
            return Err(format!(
                "slip regularization must be positive, got {}",
                self.slip_regularization
            ));
        }
        if !(self.mu_s >= self.mu_c && self.mu_c >= 0.0) {
            return Err(format!(
                "need mu_s >= mu_c >= 0, got mu_s={} mu_c={}",
                self.mu_s, self.mu_c
            ));
        }
        Ok(())
    }
}

/// Ground reaction at one foot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundForce {
    /// Inertial-frame contact force, N.
    pub force: Vector3<f64>,
    pub in_contact: bool,
}

impl GroundForce {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            in_contact: false,
        }
    }
}

/// Saturating sign: linear inside the boundary layer, ±1 outside.
fn ramp_sgn(v: f64, layer: f64) -> f64 {
    (v / layer).clamp(-1.0, 1.0)
}

/// Velocity-dependent friction blend `s(v)`, decaying from μ_s to μ_c.
fn stribeck_blend(v: f64, p: &GroundParams) -> f64 {
    p.mu_c - (p.mu_c - p.mu_s) * (-(v * v) / (p.v_s * p.v_s)).exp()
}

/// Contact force at a foot with the given inertial position and velocity.
pub fn ground_reaction(
    foot_pos: &Vector3<f64>,
    foot_vel: &Vector3<f64>,
    params: &GroundParams,
) -> GroundForce {
    let z = foot_pos.z - params.ground_height;
    if z > 0.0 || foot_pos.y.abs() > params.path_half_width {
        return GroundForce::zero();
    }
    let uz = (-params.k_gz * z - params.k_dz * foot_vel.z).max(0.0);
    let tangential = |v: f64| {
        -stribeck_blend(v, params) * uz * ramp_sgn(v, params.slip_regularization) - params.mu_v * v
    };
    GroundForce {
        force: Vector3::new(tangential(foot_vel.x), tangential(foot_vel.y), uz),
        in_contact: true,
    }
}
