//! Body and leg kinematics for the reduced-order model.
//!
//! Conventions used throughout the crate:
//! - inertial frame: x forward, y left, z up;
//! - body frame: same axes fixed to the torso;
//! - attitude: intrinsic Z-Y-X Euler angles (yaw, pitch, roll);
//! - body angular velocity `ω` is expressed in the body frame;
//! - each massless leg is a spherical-joint primitive: sagittal pitch `φ`,
//!   frontal roll `γ`, and prismatic length `l`, with the foot at
//!   `R_y(φ) R_x(γ) [0, 0, -l]ᵀ` relative to its hip.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Full state dimension: body pose (6) + leg joints (12) + velocities (18).
pub const STATE_DIM: usize = 36;

/// Errors from kinematic operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    /// The Euler-rate map is near its pitch singularity and cannot be inverted.
    #[error("euler-rate matrix near singular: |cos(pitch)| = {cos_pitch:.3e} < {guard:.3e}")]
    NearSingular { cos_pitch: f64, guard: f64 },
    /// Inverse kinematics target outside the leg length limits.
    #[error("IK target norm {norm:.4} m outside leg length limits [{min}, {max}] m")]
    Unreachable { norm: f64, min: f64, max: f64 },
    /// Inverse kinematics target too close to the hip to define angles.
    #[error("IK target degenerate: |target| = {0:.3e} m")]
    Degenerate(f64),
}

/// Leg identifiers, in the canonical order used by every 12-entry joint vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LegId {
    /// Front right.
    FR,
    /// Hind right.
    HR,
    /// Front left.
    FL,
    /// Hind left.
    HL,
}

impl LegId {
    /// All legs in canonical order.
    pub const ALL: [LegId; 4] = [LegId::FR, LegId::HR, LegId::FL, LegId::HL];

    /// Index into per-leg arrays.
    pub fn index(self) -> usize {
        match self {
            LegId::FR => 0,
            LegId::HR => 1,
            LegId::FL => 2,
            LegId::HL => 3,
        }
    }

    /// Left-side legs have their hip at positive body y.
    pub fn is_left(self) -> bool {
        matches!(self, LegId::FL | LegId::HL)
    }

    /// The diagonally opposite leg, which shares the gait phase.
    pub fn diagonal(self) -> LegId {
        match self {
            LegId::FR => LegId::HL,
            LegId::HR => LegId::FL,
            LegId::FL => LegId::HR,
            LegId::HL => LegId::FR,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LegId::FR => "FR",
            LegId::HR => "HR",
            LegId::FL => "FL",
            LegId::HL => "HL",
        }
    }
}

/// Wrap an angle to (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut x = a.rem_euclid(2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    }
    x
}

/// Intrinsic Z-Y-X Euler angles, radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerAngles {
    /// Build from raw angles, wrapping each to (-π, π].
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self {
            yaw: wrap_angle(yaw),
            pitch: wrap_angle(pitch),
            roll: wrap_angle(roll),
        }
    }

    pub fn zero() -> Self {
        Self {
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.yaw, self.pitch, self.roll)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self {
            yaw: v.x,
            pitch: v.y,
            roll: v.z,
        }
    }
}

/// Rotation matrix from body to inertial frame: `R_z(yaw)·R_y(pitch)·R_x(roll)`.
pub fn euler_to_rotation(angles: &EulerAngles) -> Matrix3<f64> {
    let (sy, cy) = angles.yaw.sin_cos();
    let (sp, cp) = angles.pitch.sin_cos();
    let (sr, cr) = angles.roll.sin_cos();
    let rz = Matrix3::new(cy, -sy, 0.0, sy, cy, 0.0, 0.0, 0.0, 1.0);
    let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
    rz * ry * rx
}

/// Recover Z-Y-X Euler angles from a rotation matrix.
///
/// Pitch is taken in [-π/2, π/2]; at the gimbal-lock boundary yaw and roll
/// are not separable and roll is reported as 0.
pub fn euler_from_rotation(r: &Matrix3<f64>) -> EulerAngles {
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    if r[(2, 0)].abs() > 1.0 - 1e-12 {
        // Gimbal lock: only yaw ± roll is observable.
        let yaw = (-r[(0, 1)]).atan2(r[(1, 1)]);
        return EulerAngles {
            yaw,
            pitch,
            roll: 0.0,
        };
    }
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    let roll = r[(2, 1)].atan2(r[(2, 2)]);
    EulerAngles { yaw, pitch, roll }
}

/// Euler-rate matrix `E` mapping Z-Y-X angle rates (yaẇ, pitcḣ, rolḣ) to the
/// body-frame angular velocity: `ω = E·Φ̇`. Its determinant is `-cos(pitch)`,
/// so the map degenerates at pitch = ±π/2.
pub fn euler_rate_matrix(angles: &EulerAngles) -> Matrix3<f64> {
    let (sp, cp) = angles.pitch.sin_cos();
    let (sr, cr) = angles.roll.sin_cos();
    Matrix3::new(
        -sp,
        0.0,
        1.0, //
        cp * sr,
        cr,
        0.0, //
        cp * cr,
        -sr,
        0.0,
    )
}

/// Invert the Euler-rate map: angle rates from a body-frame angular velocity.
///
/// Fails with [`KinematicsError::NearSingular`] when `|cos(pitch)| < guard`.
pub fn euler_rates_from_omega(
    angles: &EulerAngles,
    omega: &Vector3<f64>,
    guard: f64,
) -> Result<Vector3<f64>, KinematicsError> {
    let cp = angles.pitch.cos();
    if cp.abs() < guard {
        return Err(KinematicsError::NearSingular {
            cos_pitch: cp.abs(),
            guard,
        });
    }
    let (sr, cr) = angles.roll.sin_cos();
    let tp = angles.pitch.tan();
    let lateral = omega.y * sr + omega.z * cr;
    Ok(Vector3::new(
        lateral / cp,
        omega.y * cr - omega.z * sr,
        omega.x + lateral * tp,
    ))
}

/// Body pose: inertial-frame position plus attitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    pub position: Vector3<f64>,
    pub orientation: EulerAngles,
}

impl BodyPose {
    pub fn identity() -> Self {
        Self {
            position: Vector3::zeros(),
            orientation: EulerAngles::zero(),
        }
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        euler_to_rotation(&self.orientation)
    }
}

/// Body velocity: inertial-frame linear, body-frame angular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl BodyVelocity {
    pub fn zero() -> Self {
        Self {
            linear: Vector3::zeros(),
            angular: Vector3::zeros(),
        }
    }
}

/// Joint coordinates and rates of one leg.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LegJointState {
    /// Sagittal-plane pitch, rad.
    pub phi: f64,
    /// Frontal-plane roll, rad.
    pub gamma: f64,
    /// Prismatic leg length, m.
    pub length: f64,
    pub phi_dot: f64,
    pub gamma_dot: f64,
    pub length_dot: f64,
}

/// Joint states of all four legs, indexed by [`LegId`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegJoints(pub [LegJointState; 4]);

impl LegJoints {
    pub fn get(&self, leg: LegId) -> &LegJointState {
        &self.0[leg.index()]
    }

    pub fn get_mut(&mut self, leg: LegId) -> &mut LegJointState {
        &mut self.0[leg.index()]
    }

    /// Joint positions as the 12-vector [.., φᵢ, γᵢ, lᵢ, ..] in canonical order.
    pub fn positions(&self) -> SVector<f64, 12> {
        let mut q = SVector::<f64, 12>::zeros();
        for (i, s) in self.0.iter().enumerate() {
            q[3 * i] = s.phi;
            q[3 * i + 1] = s.gamma;
            q[3 * i + 2] = s.length;
        }
        q
    }

    /// Joint rates as a 12-vector in canonical order.
    pub fn rates(&self) -> SVector<f64, 12> {
        let mut qd = SVector::<f64, 12>::zeros();
        for (i, s) in self.0.iter().enumerate() {
            qd[3 * i] = s.phi_dot;
            qd[3 * i + 1] = s.gamma_dot;
            qd[3 * i + 2] = s.length_dot;
        }
        qd
    }
}

/// Mass, geometry, and actuator limits of the robot.
///
/// The bundled defaults are placeholders for quantities the hardware
/// documentation does not pin down (mass, inertia, hip geometry); they live
/// in config files, not in code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    /// Body mass, kg.
    pub mass: f64,
    /// Body-frame inertia tensor, kg·m².
    pub inertia: Matrix3<f64>,
    /// Hip positions in the body frame, canonical leg order, m.
    pub hip_offsets: [Vector3<f64>; 4],
    /// Thruster positions in the body frame, canonical order, m.
    pub thruster_positions: [Vector3<f64>; 4],
    /// Common thrust direction in the body frame, unit vector.
    pub thruster_axis: Vector3<f64>,
    /// Gravitational acceleration in the inertial frame, m/s².
    pub gravity: Vector3<f64>,
    /// Per-fan thrust limit, N.
    pub max_thrust_per_edf: f64,
    /// Prismatic leg length limits (min, max), m.
    pub leg_length_limits: (f64, f64),
    /// Euler-rate inversion guard on |cos(pitch)|.
    pub pitch_guard: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            mass: 10.0,
            inertia: Matrix3::from_diagonal(&Vector3::new(0.1, 0.25, 0.3)),
            hip_offsets: [
                Vector3::new(0.15, -0.12, 0.0),  // FR
                Vector3::new(-0.15, -0.12, 0.0), // HR
                Vector3::new(0.15, 0.12, 0.0),   // FL
                Vector3::new(-0.15, 0.12, 0.0),  // HL
            ],
            thruster_positions: [
                Vector3::new(0.15, -0.12, 0.0),
                Vector3::new(-0.15, -0.12, 0.0),
                Vector3::new(0.15, 0.12, 0.0),
                Vector3::new(-0.15, 0.12, 0.0),
            ],
            thruster_axis: Vector3::new(0.0, 0.0, 1.0),
            gravity: Vector3::new(0.0, 0.0, -9.81),
            // 8 kgf total budget split across four fans.
            max_thrust_per_edf: 8.0 * 9.80665 / 4.0,
            leg_length_limits: (0.05, 0.5),
            pitch_guard: 0.1,
        }
    }
}

impl RobotParams {
    /// Total thrust budget, N.
    pub fn thrust_budget(&self) -> f64 {
        4.0 * self.max_thrust_per_edf
    }

    /// Check the structural invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mass > 0.0) {
            return Err(format!("mass must be positive, got {}", self.mass));
        }
        let sym = (self.inertia - self.inertia.transpose()).norm();
        if sym > 1e-9 {
            return Err(format!("inertia not symmetric (skew norm {sym:.3e})"));
        }
        if self.inertia.clone().cholesky().is_none() {
            return Err("inertia not positive definite".into());
        }
        if (self.thruster_axis.norm() - 1.0).abs() > 1e-9 {
            return Err(format!(
                "thruster axis must be unit length, |axis| = {}",
                self.thruster_axis.norm()
            ));
        }
        let (lmin, lmax) = self.leg_length_limits;
        if !(0.0 < lmin && lmin < lmax) {
            return Err(format!("bad leg length limits ({lmin}, {lmax})"));
        }
        // Left/right hips mirror about the body x-z plane.
        for (right, left) in [(LegId::FR, LegId::FL), (LegId::HR, LegId::HL)] {
            let r = self.hip_offsets[right.index()];
            let l = self.hip_offsets[left.index()];
            let mirrored = Vector3::new(l.x, -l.y, l.z);
            if (r - mirrored).norm() > 1e-9 {
                return Err(format!(
                    "hip offsets of {} and {} are not mirror symmetric",
                    right.name(),
                    left.name()
                ));
            }
        }
        Ok(())
    }
}

/// Full system state: body pose, leg joints, and velocities.
///
/// The flattened layout is
/// `[p_B(3), Φ_B(3), q_L(12), ṗ_B(3), ω(3), q̇_L(12)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub pose: BodyPose,
    pub legs: LegJoints,
    pub velocity: BodyVelocity,
}

impl FullState {
    pub fn flatten(&self) -> SVector<f64, STATE_DIM> {
        let mut x = SVector::<f64, STATE_DIM>::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.pose.position);
        x.fixed_rows_mut::<3>(3)
            .copy_from(&self.pose.orientation.as_vector());
        x.fixed_rows_mut::<12>(6).copy_from(&self.legs.positions());
        x.fixed_rows_mut::<3>(18).copy_from(&self.velocity.linear);
        x.fixed_rows_mut::<3>(21).copy_from(&self.velocity.angular);
        x.fixed_rows_mut::<12>(24).copy_from(&self.legs.rates());
        x
    }

    pub fn unflatten(x: &SVector<f64, STATE_DIM>) -> Self {
        let mut legs = [LegJointState::default(); 4];
        for (i, s) in legs.iter_mut().enumerate() {
            s.phi = x[6 + 3 * i];
            s.gamma = x[6 + 3 * i + 1];
            s.length = x[6 + 3 * i + 2];
            s.phi_dot = x[24 + 3 * i];
            s.gamma_dot = x[24 + 3 * i + 1];
            s.length_dot = x[24 + 3 * i + 2];
        }
        Self {
            pose: BodyPose {
                position: Vector3::new(x[0], x[1], x[2]),
                orientation: EulerAngles {
                    yaw: x[3],
                    pitch: x[4],
                    roll: x[5],
                },
            },
            legs: LegJoints(legs),
            velocity: BodyVelocity {
                linear: Vector3::new(x[18], x[19], x[20]),
                angular: Vector3::new(x[21], x[22], x[23]),
            },
        }
    }

    pub fn is_finite(&self) -> bool {
        self.flatten().iter().all(|v| v.is_finite())
    }
}

/// Foot offset from the hip in the body frame: `R_y(φ)·R_x(γ)·[0,0,-l]ᵀ`.
pub fn leg_local_offset(phi: f64, gamma: f64, length: f64) -> Vector3<f64> {
    let (sp, cp) = phi.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    Vector3::new(-length * cg * sp, length * sg, -length * cg * cp)
}

/// Jacobian of [`leg_local_offset`] with respect to (φ, γ, l).
pub fn leg_local_offset_jacobian(phi: f64, gamma: f64, length: f64) -> Matrix3<f64> {
    let (sp, cp) = phi.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    Matrix3::new(
        -length * cg * cp,
        length * sg * sp,
        -cg * sp, //
        0.0,
        length * cg,
        sg, //
        length * cg * sp,
        length * sg * cp,
        -cg * cp,
    )
}

/// Inertial-frame foot position: `p_B + R_B·(hip + leg offset)`.
pub fn foot_position_world(
    pose: &BodyPose,
    params: &RobotParams,
    legs: &LegJoints,
    leg: LegId,
) -> Vector3<f64> {
    let j = legs.get(leg);
    let r = pose.rotation();
    let hip = params.hip_offsets[leg.index()];
    pose.position + r * (hip + leg_local_offset(j.phi, j.gamma, j.length))
}

/// Inertial-frame foot velocity, including body motion and joint rates.
pub fn foot_velocity_world(
    pose: &BodyPose,
    velocity: &BodyVelocity,
    params: &RobotParams,
    legs: &LegJoints,
    leg: LegId,
) -> Vector3<f64> {
    let j = legs.get(leg);
    let r = pose.rotation();
    let rel = params.hip_offsets[leg.index()] + leg_local_offset(j.phi, j.gamma, j.length);
    let joint_rates = Vector3::new(j.phi_dot, j.gamma_dot, j.length_dot);
    let local_vel = leg_local_offset_jacobian(j.phi, j.gamma, j.length) * joint_rates;
    velocity.linear + r * (velocity.angular.cross(&rel) + local_vel)
}

/// Joint coordinates (φ, γ, l) that place the foot at `target`, expressed in
/// the body frame relative to the hip.
///
/// The branch keeps γ in (-π/2, π/2), which is unique for feet below the hip.
pub fn leg_inverse_kinematics(
    target: &Vector3<f64>,
    params: &RobotParams,
) -> Result<(f64, f64, f64), KinematicsError> {
    let norm = target.norm();
    if norm < 1e-9 {
        return Err(KinematicsError::Degenerate(norm));
    }
    let (lmin, lmax) = params.leg_length_limits;
    if norm < lmin || norm > lmax {
        return Err(KinematicsError::Unreachable {
            norm,
            min: lmin,
            max: lmax,
        });
    }
    let planar = (target.x * target.x + target.z * target.z).sqrt();
    let gamma = target.y.atan2(planar);
    // At γ = ±π/2 the sagittal angle is unobservable; report 0.
    let phi = if planar < 1e-12 * norm {
        0.0
    } else {
        (-target.x).atan2(-target.z)
    };
    Ok((phi, gamma, norm))
}

/// Foot-velocity map `∂ṗ_f/∂v` with `v = [ṗ_B; ω]`: a 3×6 matrix whose
/// transpose carries a contact force into generalized coordinates.
pub fn foot_jacobian(
    pose: &BodyPose,
    params: &RobotParams,
    legs: &LegJoints,
    leg: LegId,
) -> SMatrix<f64, 3, 6> {
    let j = legs.get(leg);
    let r = pose.rotation();
    let rel = params.hip_offsets[leg.index()] + leg_local_offset(j.phi, j.gamma, j.length);
    let mut b = SMatrix::<f64, 3, 6>::zeros();
    b.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&Matrix3::identity());
    b.fixed_view_mut::<3, 3>(0, 3)
        .copy_from(&(-r * rel.cross_matrix()));
    b
}
