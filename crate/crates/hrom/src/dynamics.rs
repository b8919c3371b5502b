//! Rigid-body equations of motion and thruster wrench handling.
//!
//! The dynamic coordinates are `v = [ṗ_B; ω]` with `ṗ_B` inertial and `ω`
//! body-frame, so the manipulator-form blocks are
//!
//! ```text
//! D = blkdiag(m·I₃, I_B),   C·v = [0; ω × I_B·ω],   G = [-m·g; 0]
//! ```
//!
//! Thrust is commanded as a wrench at the COM, expressed in the body frame;
//! its force component is rotated to the inertial frame before entering the
//! translational balance while the moment stays in the body frame. The legs
//! are massless and directly acceleration-controlled (`q̈_L = u_L`).

use nalgebra::{Matrix3, SMatrix, SVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::{ground_reaction, GroundForce, GroundParams};
use crate::model::{
    euler_rates_from_omega, foot_jacobian, foot_position_world, foot_velocity_world, FullState,
    KinematicsError, LegId, RobotParams, STATE_DIM,
};

/// Errors from dynamics evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    /// A thruster force outside its admissible interval.
    #[error("thruster force {value:.3} N outside [0, {max:.3}] N (fan {index})")]
    BoundsViolation { index: usize, value: f64, max: f64 },
}

/// Force/moment pair acting at the body COM, both in the body frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

impl Wrench {
    pub fn zero() -> Self {
        Self {
            force: Vector3::zeros(),
            moment: Vector3::zeros(),
        }
    }

    pub fn as_vector(&self) -> Vector6<f64> {
        Vector6::new(
            self.force.x,
            self.force.y,
            self.force.z,
            self.moment.x,
            self.moment.y,
            self.moment.z,
        )
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self {
            force: Vector3::new(v[0], v[1], v[2]),
            moment: Vector3::new(v[3], v[4], v[5]),
        }
    }
}

/// Scalar fan forces in canonical leg/thruster order, N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrusterForces(pub [f64; 4]);

impl ThrusterForces {
    pub fn zero() -> Self {
        Self([0.0; 4])
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Check each fan against [0, max] and the stacked invariant.
    pub fn check_bounds(&self, params: &RobotParams) -> Result<(), DynamicsError> {
        for (i, &f) in self.0.iter().enumerate() {
            if !(0.0..=params.max_thrust_per_edf).contains(&f) {
                return Err(DynamicsError::BoundsViolation {
                    index: i,
                    value: f,
                    max: params.max_thrust_per_edf,
                });
            }
        }
        Ok(())
    }
}

/// Control input: COM thrust wrench plus the 12 joint accelerations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub wrench: Wrench,
    pub joint_accels: SVector<f64, 12>,
}

/// Flattened input dimension: 6 wrench + 12 joint accelerations.
pub const INPUT_DIM: usize = 18;

impl ControlInput {
    pub fn zero() -> Self {
        Self {
            wrench: Wrench::zero(),
            joint_accels: SVector::zeros(),
        }
    }

    pub fn flatten(&self) -> SVector<f64, INPUT_DIM> {
        let mut u = SVector::<f64, INPUT_DIM>::zeros();
        u.fixed_rows_mut::<6>(0).copy_from(&self.wrench.as_vector());
        u.fixed_rows_mut::<12>(6).copy_from(&self.joint_accels);
        u
    }

    pub fn unflatten(u: &SVector<f64, INPUT_DIM>) -> Self {
        Self {
            wrench: Wrench::from_vector(&u.fixed_rows::<6>(0).into()),
            joint_accels: u.fixed_rows::<12>(6).into(),
        }
    }
}

/// Manipulator-form blocks `(D, C·v, G)` for the 6 dynamic coordinates.
pub fn generalized_matrices(
    state: &FullState,
    params: &RobotParams,
) -> (SMatrix<f64, 6, 6>, Vector6<f64>, Vector6<f64>) {
    let mut d = SMatrix::<f64, 6, 6>::zeros();
    d.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(Matrix3::identity() * params.mass));
    d.fixed_view_mut::<3, 3>(3, 3).copy_from(&params.inertia);

    let omega = state.velocity.angular;
    let gyro = omega.cross(&(params.inertia * omega));
    let mut cv = Vector6::zeros();
    cv.fixed_rows_mut::<3>(3).copy_from(&gyro);

    let mut g = Vector6::zeros();
    g.fixed_rows_mut::<3>(0)
        .copy_from(&(-params.mass * params.gravity));
    (d, cv, g)
}

/// Condense four fan forces into a body-frame COM wrench.
pub fn thruster_wrench(
    forces: &ThrusterForces,
    params: &RobotParams,
) -> Result<Wrench, DynamicsError> {
    forces.check_bounds(params)?;
    Ok(condense(&forces.0, params))
}

/// Condensation map without bounds checking; linear in the forces.
fn condense(forces: &[f64; 4], params: &RobotParams) -> Wrench {
    let mut force = Vector3::zeros();
    let mut moment = Vector3::zeros();
    for (i, &f) in forces.iter().enumerate() {
        let fvec = params.thruster_axis * f;
        force += fvec;
        moment += params.thruster_positions[i].cross(&fvec);
    }
    Wrench { force, moment }
}

/// Outcome of mapping a desired wrench onto the four fans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    /// Least-squares fan forces before clamping.
    pub raw: [f64; 4],
    /// Forces clamped to [0, max] per fan.
    pub forces: ThrusterForces,
    /// Body-frame wrench produced by the clamped forces.
    pub applied: Wrench,
    /// True when any fan was clamped.
    pub saturated: bool,
}

/// The 6x4 condensation map from fan forces to the COM wrench.
pub fn allocation_matrix(params: &RobotParams) -> SMatrix<f64, 6, 4> {
    let mut a = SMatrix::<f64, 6, 4>::zeros();
    for i in 0..4 {
        let mut unit = [0.0; 4];
        unit[i] = 1.0;
        let w = condense(&unit, params);
        a.column_mut(i).copy_from(&w.as_vector());
    }
    a
}

/// Pseudo-inverse of the condensation map: wrench to least-squares fan
/// forces. Constant per robot, so callers may precompute it.
pub fn allocation_pinv(params: &RobotParams) -> SMatrix<f64, 4, 6> {
    allocation_matrix(params)
        .svd(true, true)
        .pseudo_inverse(1e-12)
        .expect("svd computed with both sets of singular vectors")
}

/// Least-squares decomposition of a desired COM wrench into fan forces.
///
/// With a single thrust axis only three wrench components are achievable
/// (axis force plus the two transverse moments); the pseudo-inverse solution
/// minimizes the residual over that subspace and is then clamped per fan.
pub fn wrench_allocation(desired: &Wrench, params: &RobotParams) -> Allocation {
    let a = allocation_matrix(params);
    let svd = a.svd(true, true);
    let raw_vec = svd
        .solve(&desired.as_vector(), 1e-12)
        .expect("svd computed with both sets of singular vectors");
    let raw = [raw_vec[0], raw_vec[1], raw_vec[2], raw_vec[3]];

    let mut clamped = raw;
    let mut saturated = false;
    for f in &mut clamped {
        let c = f.clamp(0.0, params.max_thrust_per_edf);
        if (c - *f).abs() > 0.0 {
            saturated = true;
        }
        *f = c;
    }
    Allocation {
        raw,
        forces: ThrusterForces(clamped),
        applied: condense(&clamped, params),
        saturated,
    }
}

/// One dynamics evaluation: state derivative plus the per-foot contact forces.
#[derive(Debug, Clone)]
pub struct RhsEval {
    pub xdot: SVector<f64, STATE_DIM>,
    pub grf: [GroundForce; 4],
}

/// Full state derivative `ẋ = f(x, u)` under gravity, contact, and thrust.
pub fn dynamics_eval(
    state: &FullState,
    input: &ControlInput,
    params: &RobotParams,
    ground: &GroundParams,
) -> Result<RhsEval, DynamicsError> {
    let euler_rates = euler_rates_from_omega(
        &state.pose.orientation,
        &state.velocity.angular,
        params.pitch_guard,
    )?;
    let rotation = state.pose.rotation();
    let (_, cv, g) = generalized_matrices(state, params);

    // Generalized applied forces: contact through each foot map, thrust with
    // its force component rotated into the inertial frame.
    let mut rhs = -cv - g;
    let mut grf = [GroundForce::zero(); 4];
    for leg in LegId::ALL {
        let pos = foot_position_world(&state.pose, params, &state.legs, leg);
        let vel = foot_velocity_world(&state.pose, &state.velocity, params, &state.legs, leg);
        let gf = ground_reaction(&pos, &vel, ground);
        grf[leg.index()] = gf;
        if gf.in_contact {
            let b = foot_jacobian(&state.pose, params, &state.legs, leg);
            rhs += b.transpose() * gf.force;
        }
    }
    let mut thrust_gen = Vector6::zeros();
    thrust_gen
        .fixed_rows_mut::<3>(0)
        .copy_from(&(rotation * input.wrench.force));
    thrust_gen
        .fixed_rows_mut::<3>(3)
        .copy_from(&input.wrench.moment);
    rhs += thrust_gen;

    // D is block diagonal: scale the translational block, solve the inertia
    // block through its Cholesky factor.
    let lin_acc: Vector3<f64> = rhs.fixed_rows::<3>(0) / params.mass;
    let moment_rhs: Vector3<f64> = rhs.fixed_rows::<3>(3).into_owned();
    let ang_acc = params
        .inertia
        .cholesky()
        .expect("inertia validated positive definite")
        .solve(&moment_rhs);

    let mut xdot = SVector::<f64, STATE_DIM>::zeros();
    xdot.fixed_rows_mut::<3>(0)
        .copy_from(&state.velocity.linear);
    xdot.fixed_rows_mut::<3>(3).copy_from(&euler_rates);
    xdot.fixed_rows_mut::<12>(6).copy_from(&state.legs.rates());
    xdot.fixed_rows_mut::<3>(18).copy_from(&lin_acc);
    xdot.fixed_rows_mut::<3>(21).copy_from(&ang_acc);
    xdot.fixed_rows_mut::<12>(24).copy_from(&input.joint_accels);
    Ok(RhsEval { xdot, grf })
}

/// State derivative only; see [`dynamics_eval`] for the contact forces.
pub fn dynamics_rhs(
    state: &FullState,
    input: &ControlInput,
    params: &RobotParams,
    ground: &GroundParams,
) -> Result<SVector<f64, STATE_DIM>, DynamicsError> {
    dynamics_eval(state, input, params, ground).map(|e| e.xdot)
}
