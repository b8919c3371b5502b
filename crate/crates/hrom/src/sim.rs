//! Forward simulation: fixed-step RK4 marching of the full dynamics under
//! the gait tracking law and a pose-error thrust controller, with per-step
//! trajectory logging and CSV export.

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

use crate::contact::{GroundForce, GroundParams};
use crate::dynamics::{
    dynamics_eval, wrench_allocation, ControlInput, DynamicsError, ThrusterForces, Wrench,
};
use crate::gait::{joint_reference, joint_tracking, GaitError, GaitPlan, JointGains};
use crate::model::{
    euler_from_rotation, wrap_angle, BodyPose, BodyVelocity, EulerAngles, FullState, LegId,
    LegJointState, LegJoints, RobotParams, STATE_DIM,
};

/// Errors from time stepping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("non-finite state entry after step at t = {t}")]
    NonFinite { t: f64 },
    #[error("dynamics failure at t = {t}: {source}")]
    Dynamics { t: f64, source: DynamicsError },
    #[error("gait reference failure at t = {t}: {source}")]
    Gait { t: f64, source: GaitError },
    #[error("io: {0}")]
    Io(String),
    #[error("csv parse: {0}")]
    Parse(String),
}

/// Simulation settings: step size, horizon, attitude controller gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Integration step, s.
    pub dt: f64,
    /// Horizon, s.
    pub duration: f64,
    /// Diagonal attitude proportional gains (roll about x, pitch, yaw order
    /// follows the body axes: entries multiply the yaw/pitch/roll error
    /// expressed as a body-frame moment).
    pub kp_att: Vector3<f64>,
    /// Diagonal attitude rate gains.
    pub kd_att: Vector3<f64>,
    /// Attitude setpoint.
    pub reference_attitude: EulerAngles,
    /// Fraction of body weight carried by thrust as a feedforward z-force.
    pub thrust_ff_fraction: f64,
    /// Joint tracking gains.
    pub joint_gains: JointGains,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 3.5,
            kp_att: Vector3::new(30.0, 30.0, 30.0),
            kd_att: Vector3::new(5.0, 5.0, 5.0),
            reference_attitude: EulerAngles::zero(),
            thrust_ff_fraction: 0.3,
            joint_gains: JointGains::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0) {
            return Err(format!("dt must be positive, got {}", self.dt));
        }
        if self.duration < self.dt {
            return Err(format!(
                "duration {} shorter than dt {}",
                self.duration, self.dt
            ));
        }
        Ok(())
    }
}

/// Classical RK4 step of `ẋ = f(x)` with the control held over the step.
pub fn rk4_step<const D: usize, E>(
    f: &dyn Fn(&SVector<f64, D>) -> Result<SVector<f64, D>, E>,
    x: &SVector<f64, D>,
    dt: f64,
) -> Result<SVector<f64, D>, E> {
    let k1 = f(x)?;
    rk4_step_with_k1(f, x, &k1, dt)
}

/// RK4 step reusing an already-evaluated derivative at the step start.
pub fn rk4_step_with_k1<const D: usize, E>(
    f: &dyn Fn(&SVector<f64, D>) -> Result<SVector<f64, D>, E>,
    x: &SVector<f64, D>,
    k1: &SVector<f64, D>,
    dt: f64,
) -> Result<SVector<f64, D>, E> {
    let k2 = f(&(x + k1 * (dt / 2.0)))?;
    let k3 = f(&(x + k2 * (dt / 2.0)))?;
    let k4 = f(&(x + k3 * dt))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Pose-error thrust controller.
///
/// The attitude error comes from Euler angles re-extracted from the rotation
/// matrix; the desired body-frame wrench is a PD moment plus a gravity-share
/// feedforward z-force. The wrench is decomposed onto the four fans, clamped,
/// and recondensed, so the returned wrench is exactly what the clamped fans
/// produce.
pub fn attitude_thrust_controller(
    state: &FullState,
    config: &SimConfig,
    robot: &RobotParams,
) -> (Wrench, ThrusterForces) {
    let current = euler_from_rotation(&state.pose.rotation());
    let error = Vector3::new(
        wrap_angle(config.reference_attitude.yaw - current.yaw),
        wrap_angle(config.reference_attitude.pitch - current.pitch),
        wrap_angle(config.reference_attitude.roll - current.roll),
    );
    // Map (yaw, pitch, roll) error onto body-frame moments: roll error acts
    // about x, pitch about y, yaw about z. Valid near level attitude, which
    // is where the walking controller operates.
    let moment_error = Vector3::new(error.z, error.y, error.x);
    let omega = state.velocity.angular;
    let desired = Wrench {
        force: Vector3::new(
            0.0,
            0.0,
            config.thrust_ff_fraction * robot.mass * robot.gravity.norm(),
        ),
        moment: Vector3::new(
            config.kp_att.x * moment_error.x - config.kd_att.x * omega.x,
            config.kp_att.y * moment_error.y - config.kd_att.y * omega.y,
            config.kp_att.z * moment_error.z - config.kd_att.z * omega.z,
        ),
    };
    let alloc = wrench_allocation(&desired, robot);
    (alloc.applied, alloc.forces)
}

/// One logged simulation step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajRow {
    pub t: f64,
    pub state: FullState,
    pub input: ControlInput,
    pub grf: [GroundForce; 4],
    pub thrusters: ThrusterForces,
}

/// Uniformly sampled simulation log.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub rows: Vec<TrajRow>,
}

/// Why a simulation stopped early.
#[derive(Debug, Clone, PartialEq)]
pub struct SimAbort {
    pub t: f64,
    pub error: SimError,
}

/// Simulation output: the (possibly partial) trajectory plus abort details.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub trajectory: Trajectory,
    pub abort: Option<SimAbort>,
}

/// Standing initial state: all feet straight down at the nominal body
/// height, sunk into the ground by the static four-foot penetration so the
/// start is load-balanced.
pub fn standing_start(
    robot: &RobotParams,
    body_height: f64,
    ground: &GroundParams,
) -> (FullState, f64) {
    let penetration = robot.mass * robot.gravity.norm() / (4.0 * ground.k_gz);
    let state = FullState {
        pose: BodyPose {
            position: Vector3::new(0.0, 0.0, ground.ground_height + body_height - penetration),
            orientation: EulerAngles::zero(),
        },
        legs: LegJoints(
            [LegJointState {
                length: body_height,
                ..Default::default()
            }; 4],
        ),
        velocity: BodyVelocity::zero(),
    };
    (state, penetration)
}

/// Initial state matching a gait plan: each leg holds its foot reference at
/// t = 0 (which may be the narrow stance), with the body sunk by the static
/// four-foot penetration.
pub fn initial_state_from_plan(
    robot: &RobotParams,
    plan: &GaitPlan,
    ground: &GroundParams,
) -> Result<(FullState, f64), GaitError> {
    let (mut state, penetration) = standing_start(robot, plan.params.body_height, ground);
    for leg in LegId::ALL {
        let (target, _) = plan.foot_ref(leg, 0.0);
        let (phi, gamma, length) = crate::model::leg_inverse_kinematics(&target, robot)?;
        let joints = state.legs.get_mut(leg);
        joints.phi = phi;
        joints.gamma = gamma;
        joints.length = length;
    }
    Ok((state, penetration))
}

/// Run the closed-loop simulation: joint tracking + attitude thrust +
/// RK4 marching, logging every step.
///
/// On `NonFinite` or a dynamics/gait failure the partial trajectory is
/// returned with the abort diagnostic.
pub fn simulate(
    config: &SimConfig,
    initial: &FullState,
    plan: &GaitPlan,
    robot: &RobotParams,
    ground: &GroundParams,
) -> SimResult {
    let steps = (config.duration / config.dt).round() as usize;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut x = *initial;

    for k in 0..=steps {
        let t = k as f64 * config.dt;
        let reference = match joint_reference(t, plan, robot) {
            Ok(r) => r,
            Err(e) => {
                return SimResult {
                    trajectory: Trajectory { rows },
                    abort: Some(SimAbort {
                        t,
                        error: SimError::Gait { t, source: e },
                    }),
                }
            }
        };
        let u_l = joint_tracking(
            &x.legs.positions(),
            &x.legs.rates(),
            &reference,
            &config.joint_gains,
        );
        let (wrench, thrusters) = attitude_thrust_controller(&x, config, robot);
        let input = ControlInput {
            wrench,
            joint_accels: u_l,
        };

        let eval = match dynamics_eval(&x, &input, robot, ground) {
            Ok(e) => e,
            Err(e) => {
                return SimResult {
                    trajectory: Trajectory { rows },
                    abort: Some(SimAbort {
                        t,
                        error: SimError::Dynamics { t, source: e },
                    }),
                }
            }
        };
        rows.push(TrajRow {
            t,
            state: x,
            input,
            grf: eval.grf,
            thrusters,
        });

        if k == steps {
            break;
        }
        let f = |xs: &SVector<f64, STATE_DIM>| {
            dynamics_eval(&FullState::unflatten(xs), &input, robot, ground).map(|e| e.xdot)
        };
        let next = match rk4_step_with_k1(&f, &x.flatten(), &eval.xdot, config.dt) {
            Ok(v) => v,
            Err(e) => {
                return SimResult {
                    trajectory: Trajectory { rows },
                    abort: Some(SimAbort {
                        t,
                        error: SimError::Dynamics { t, source: e },
                    }),
                }
            }
        };
        if !next.iter().all(|v| v.is_finite()) {
            return SimResult {
                trajectory: Trajectory { rows },
                abort: Some(SimAbort {
                    t,
                    error: SimError::NonFinite { t: t + config.dt },
                }),
            };
        }
        x = FullState::unflatten(&next);
    }
    SimResult {
        trajectory: Trajectory { rows },
        abort: None,
    }
}

const LEG_NAMES: [&str; 4] = ["fr", "hr", "fl", "hl"];
const JOINT_NAMES: [&str; 3] = ["phi", "gam", "len"];

/// The fixed trajectory CSV header.
pub fn csv_header() -> String {
    let mut h = String::from("t,px,py,pz,yaw,pitch,roll");
    for leg in LEG_NAMES {
        for j in JOINT_NAMES {
            write!(h, ",q_{leg}_{j}").unwrap();
        }
    }
    h.push_str(",vx,vy,vz,wx,wy,wz");
    for leg in LEG_NAMES {
        for j in JOINT_NAMES {
            write!(h, ",qd_{leg}_{j}").unwrap();
        }
    }
    for leg in LEG_NAMES {
        for axis in ["x", "y", "z"] {
            write!(h, ",grf_{leg}_{axis}").unwrap();
        }
    }
    h.push_str(",f1,f2,f3,f4,fx,fy,fz,mx,my,mz");
    h
}

fn push_fields(out: &mut String, values: impl IntoIterator<Item = f64>) {
    for v in values {
        write!(out, ",{v}").unwrap();
    }
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.rows.last().map(|r| r.t).unwrap_or(0.0)
    }

    /// Serialize to the fixed CSV schema. Floats use the shortest
    /// round-trippable representation, so output is deterministic.
    pub fn to_csv(&self) -> String {
        let mut out = csv_header();
        out.push('\n');
        for row in &self.rows {
            write!(out, "{}", row.t).unwrap();
            let x = row.state.flatten();
            push_fields(&mut out, x.iter().copied());
            for g in &row.grf {
                push_fields(&mut out, [g.force.x, g.force.y, g.force.z]);
            }
            push_fields(&mut out, row.thrusters.0);
            push_fields(&mut out, row.input.wrench.as_vector().iter().copied());
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SimError> {
        std::fs::write(path, self.to_csv()).map_err(|e| SimError::Io(e.to_string()))
    }

    /// Parse a trajectory back from the CSV schema. The joint-acceleration
    /// part of the input is not carried by the schema and reads back as zero.
    pub fn from_csv(text: &str) -> Result<Self, SimError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| SimError::Parse("empty file".into()))?;
        if header != csv_header() {
            return Err(SimError::Parse("unexpected header".into()));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| SimError::Parse(format!("line {}: {e}", lineno + 2)))?;
            if vals.len() != 59 {
                return Err(SimError::Parse(format!(
                    "line {}: expected 59 fields, got {}",
                    lineno + 2,
                    vals.len()
                )));
            }
            let mut x = SVector::<f64, STATE_DIM>::zeros();
            for i in 0..STATE_DIM {
                x[i] = vals[1 + i];
            }
            let mut grf = [GroundForce::zero(); 4];
            for (i, g) in grf.iter_mut().enumerate() {
                let base = 37 + 3 * i;
                g.force = Vector3::new(vals[base], vals[base + 1], vals[base + 2]);
                g.in_contact = g.force != Vector3::zeros();
            }
            let thrusters = ThrusterForces([vals[49], vals[50], vals[51], vals[52]]);
            let wrench = Wrench {
                force: Vector3::new(vals[53], vals[54], vals[55]),
                moment: Vector3::new(vals[56], vals[57], vals[58]),
            };
            rows.push(TrajRow {
                t: vals[0],
                state: FullState::unflatten(&x),
                input: ControlInput {
                    wrench,
                    joint_accels: SVector::zeros(),
                },
                grf,
                thrusters,
            });
        }
        Ok(Self { rows })
    }

    /// Forward displacement of the body over the log, m.
    pub fn forward_displacement(&self) -> f64 {
        match (self.rows.first(), self.rows.last()) {
            (Some(a), Some(b)) => b.state.pose.position.x - a.state.pose.position.x,
            _ => 0.0,
        }
    }

    /// Per-figure plot data files, derived from the log.
    pub fn write_plot_files(&self, dir: &Path, robot: &RobotParams) -> Result<(), SimError> {
        let io = |e: std::io::Error| SimError::Io(e.to_string());

        let mut body = String::from("t,px,py,pz,yaw,pitch,roll,vx,vy,vz,wx,wy,wz\n");
        let mut joints = String::from("t");
        for leg in LEG_NAMES {
            for j in JOINT_NAMES {
                write!(joints, ",q_{leg}_{j}").unwrap();
            }
        }
        for leg in LEG_NAMES {
            for j in JOINT_NAMES {
                write!(joints, ",qd_{leg}_{j}").unwrap();
            }
        }
        joints.push('\n');
        let mut feet = String::from("t");
        for leg in LEG_NAMES {
            for a in ["x", "y", "z"] {
                write!(feet, ",foot_{leg}_{a}").unwrap();
            }
        }
        for leg in LEG_NAMES {
            for a in ["x", "y", "z"] {
                write!(feet, ",footv_{leg}_{a}").unwrap();
            }
        }
        feet.push('\n');
        let mut grf = String::from("t");
        for leg in LEG_NAMES {
            for a in ["x", "y", "z"] {
                write!(grf, ",grf_{leg}_{a}").unwrap();
            }
        }
        grf.push('\n');
        let mut thrust = String::from("t,f1,f2,f3,f4,fx,fy,fz,mx,my,mz\n");

        for row in &self.rows {
            let s = &row.state;
            write!(body, "{}", row.t).unwrap();
            push_fields(
                &mut body,
                [
                    s.pose.position.x,
                    s.pose.position.y,
                    s.pose.position.z,
                    s.pose.orientation.yaw,
                    s.pose.orientation.pitch,
                    s.pose.orientation.roll,
                    s.velocity.linear.x,
                    s.velocity.linear.y,
                    s.velocity.linear.z,
                    s.velocity.angular.x,
                    s.velocity.angular.y,
                    s.velocity.angular.z,
                ],
            );
            body.push('\n');

            write!(joints, "{}", row.t).unwrap();
            push_fields(&mut joints, s.legs.positions().iter().copied());
            push_fields(&mut joints, s.legs.rates().iter().copied());
            joints.push('\n');

            write!(feet, "{}", row.t).unwrap();
            for leg in LegId::ALL {
                let p = crate::model::foot_position_world(&s.pose, robot, &s.legs, leg);
                push_fields(&mut feet, [p.x, p.y, p.z]);
            }
            for leg in LegId::ALL {
                let v =
                    crate::model::foot_velocity_world(&s.pose, &s.velocity, robot, &s.legs, leg);
                push_fields(&mut feet, [v.x, v.y, v.z]);
            }
            feet.push('\n');

            write!(grf, "{}", row.t).unwrap();
            for g in &row.grf {
                push_fields(&mut grf, [g.force.x, g.force.y, g.force.z]);
            }
            grf.push('\n');

            write!(thrust, "{}", row.t).unwrap();
            push_fields(&mut thrust, row.thrusters.0);
            push_fields(&mut thrust, row.input.wrench.as_vector().iter().copied());
            thrust.push('\n');
        }

        std::fs::write(dir.join("body_states.csv"), body).map_err(io)?;
        std::fs::write(dir.join("joint_traj.csv"), joints).map_err(io)?;
        std::fs::write(dir.join("foot_states.csv"), feet).map_err(io)?;
        std::fs::write(dir.join("grf.csv"), grf).map_err(io)?;
        std::fs::write(dir.join("thruster_forces.csv"), thrust).map_err(io)?;
        Ok(())
    }
}
