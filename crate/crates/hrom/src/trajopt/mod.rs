//! Direct-collocation trajectory optimization.
//!
//! The decision vector stacks node states, node controls (thrust wrench plus
//! joint accelerations), and the free final time. Controls interpolate
//! linearly and states as cubic Hermite polynomials; dynamics enter only
//! through midpoint defect constraints. The NLP is solved by an
//! augmented-Lagrangian method with projected quasi-Newton inner iterations
//! and finite-difference derivatives.

mod collocation;
mod hermite;
pub mod oracles;
mod solver;

pub use collocation::{CollocationProblem, DecisionVector, DynamicsFn, Transcription};
pub use hermite::{control_interp, hermite_midpoint, state_interp};
pub use solver::{solve, Nlp, SolveOptions, SolveOutput, SolveStatus, SolverReport};

use nalgebra::{DVector, Matrix3, SVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contact::GroundParams;
use crate::dynamics::{
    allocation_matrix, allocation_pinv, dynamics_eval, ControlInput, Wrench, INPUT_DIM,
};
use crate::gait::{joint_reference, joint_tracking, GaitPlan, JointGains};
use crate::model::{
    euler_from_rotation, euler_to_rotation, wrap_angle, EulerAngles, FullState, RobotParams,
    STATE_DIM,
};
use crate::sim::Trajectory;

/// Shared finite-difference step rule: `max(1e-6, 1e-7·|y|)`.
pub(crate) fn solver_fd_step(y: f64) -> f64 {
    (1e-7 * y.abs()).max(1e-6)
}

/// Errors from transcription and solving.
#[derive(Debug, Clone, Error)]
pub enum TrajoptError {
    #[error("time {t} outside interval [{t0}, {t1}]")]
    OutOfRange { t: f64, t0: f64, t1: f64 },
    #[error("degenerate interval [{t0}, {t1}]")]
    DegenerateInterval { t0: f64, t1: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("trajectory too short: covers {available:.3} s, need {needed:.3} s")]
    TooShort { available: f64, needed: f64 },
    #[error("dynamics evaluation failed: {0}")]
    Eval(String),
    #[error("iteration cap reached (|c|inf = {})", .report.constraint_inf_norm)]
    MaxIter {
        best: Box<DecisionVector>,
        report: Box<SolverReport>,
    },
    #[error("line search stalled (|c|inf = {})", .report.constraint_inf_norm)]
    LineSearchFail {
        best: Box<DecisionVector>,
        report: Box<SolverReport>,
    },
    #[error("non-finite values encountered during solve")]
    NonFinite {
        best: Box<DecisionVector>,
        report: Box<SolverReport>,
    },
}

/// Which control quantity the effort term penalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PenalizeMode {
    /// Decompose each node wrench into the four fan forces and penalize
    /// those (R is 4×4).
    EdfForces,
    /// Penalize the wrench vector directly (R is 6×6).
    Wrench,
}

/// Quadratic cost weights: attitude-error weight Q and control-effort
/// weight R (dimension matching the penalized quantity).
#[derive(Debug, Clone, PartialEq)]
pub struct CostWeights {
    pub q_att: Matrix3<f64>,
    pub r: nalgebra::DMatrix<f64>,
    pub penalize: PenalizeMode,
}

impl CostWeights {
    pub fn new(q_scale: f64, r_scale: f64, penalize: PenalizeMode) -> Self {
        let r_dim = match penalize {
            PenalizeMode::EdfForces => 4,
            PenalizeMode::Wrench => 6,
        };
        Self {
            q_att: Matrix3::identity() * q_scale,
            r: nalgebra::DMatrix::identity(r_dim, r_dim) * r_scale,
            penalize,
        }
    }

    pub fn validate(&self) -> Result<(), TrajoptError> {
        let expected = match self.penalize {
            PenalizeMode::EdfForces => 4,
            PenalizeMode::Wrench => 6,
        };
        if self.r.nrows() != expected || self.r.ncols() != expected {
            return Err(TrajoptError::Dimension {
                expected,
                got: self.r.nrows(),
            });
        }
        Ok(())
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        Self::new(50.0, 0.05, PenalizeMode::EdfForces)
    }
}

/// Attitude error of one node state against the reference, extracted from
/// the rotation matrix and wrapped per component.
fn attitude_error(state_euler: &EulerAngles, reference: &EulerAngles) -> Vector3<f64> {
    let principal = euler_from_rotation(&euler_to_rotation(state_euler));
    Vector3::new(
        wrap_angle(principal.yaw - reference.yaw),
        wrap_angle(principal.pitch - reference.pitch),
        wrap_angle(principal.roll - reference.roll),
    )
}

/// Quadratic node-sum cost: attitude error plus thrust effort.
pub fn cost(
    dv: &DecisionVector,
    weights: &CostWeights,
    reference: &EulerAngles,
    robot: &RobotParams,
) -> f64 {
    let pinv = allocation_pinv(robot);
    let mut total = 0.0;
    for i in 0..dv.n() {
        let x = dv.state(i);
        let euler = EulerAngles {
            yaw: x[3],
            pitch: x[4],
            roll: x[5],
        };
        let xe = attitude_error(&euler, reference);
        total += (xe.transpose() * weights.q_att * xe)[0];
        let u = dv.control(i);
        match weights.penalize {
            PenalizeMode::EdfForces => {
                let w = nalgebra::Vector6::new(u[0], u[1], u[2], u[3], u[4], u[5]);
                let f = pinv * w;
                total += (f.transpose() * &weights.r * f)[0];
            }
            PenalizeMode::Wrench => {
                let w = DVector::from_column_slice(u.rows(0, 6).as_slice());
                total += (w.transpose() * &weights.r * &w)[0];
            }
        }
    }
    total
}

/// Which terminal conditions the boundary residual includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminalConditions {
    /// Final attitude equals the reference.
    pub attitude: bool,
    /// Final lateral position is zero.
    pub lateral: bool,
    /// Final forward displacement equals `v_ref · t_f`.
    pub displacement: bool,
}

impl Default for TerminalConditions {
    fn default() -> Self {
        Self {
            attitude: true,
            lateral: true,
            displacement: false,
        }
    }
}

/// Problem data for the walking-robot collocation NLP.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    /// Grid size (n ≥ 2).
    pub n: usize,
    /// Bounds on the free final time, s.
    pub t_f_bounds: (f64, f64),
    /// Pinned initial full state.
    pub initial_state: SVector<f64, STATE_DIM>,
    pub reference_attitude: EulerAngles,
    /// Forward speed used by the displacement condition, m/s.
    pub v_ref: f64,
    pub terminal: TerminalConditions,
    /// When false, joint accelerations follow the gait tracking law instead
    /// of being decision variables.
    pub free_joint_inputs: bool,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), TrajoptError> {
        if self.n < 2 {
            return Err(TrajoptError::Dimension {
                expected: 2,
                got: self.n,
            });
        }
        if !(self.t_f_bounds.0 > 0.0 && self.t_f_bounds.0 <= self.t_f_bounds.1) {
            return Err(TrajoptError::DegenerateInterval {
                t0: self.t_f_bounds.0,
                t1: self.t_f_bounds.1,
            });
        }
        Ok(())
    }

    pub fn n_boundary(&self) -> usize {
        STATE_DIM
            + if self.terminal.attitude { 3 } else { 0 }
            + if self.terminal.lateral { 1 } else { 0 }
            + if self.terminal.displacement { 1 } else { 0 }
    }
}

/// The plant seen by the optimizer: full simulation dynamics, with the
/// joint-acceleration part of the control either taken from the decision
/// vector or regenerated from the gait tracking law.
pub struct HromDynamics<'a> {
    pub robot: &'a RobotParams,
    pub ground: &'a GroundParams,
    pub plan: &'a GaitPlan,
    pub gains: JointGains,
    pub free_joint_inputs: bool,
}

impl HromDynamics<'_> {
    /// Joint accelerations by the tracking law at (t, state).
    fn tracked_joints(&self, t: f64, state: &FullState) -> Result<SVector<f64, 12>, TrajoptError> {
        let tc = t.clamp(0.0, self.plan.params.duration);
        let reference = joint_reference(tc, self.plan, self.robot)
            .map_err(|e| TrajoptError::Eval(e.to_string()))?;
        Ok(joint_tracking(
            &state.legs.positions(),
            &state.legs.rates(),
            &reference,
            &self.gains,
        ))
    }

    /// Dynamics closure for the transcription.
    pub fn dynamics_fn(&self) -> DynamicsFn<'_> {
        Box::new(move |t, x, u| {
            if x.len() != STATE_DIM || u.len() != INPUT_DIM {
                return Err(TrajoptError::Dimension {
                    expected: STATE_DIM,
                    got: x.len(),
                });
            }
            let state = FullState::unflatten(&SVector::from_column_slice(x.as_slice()));
            let wrench = Wrench {
                force: Vector3::new(u[0], u[1], u[2]),
                moment: Vector3::new(u[3], u[4], u[5]),
            };
            let joints = if self.free_joint_inputs {
                SVector::<f64, 12>::from_column_slice(&u.as_slice()[6..18])
            } else {
                self.tracked_joints(t, &state)?
            };
            let input = ControlInput {
                wrench,
                joint_accels: joints,
            };
            let eval = dynamics_eval(&state, &input, self.robot, self.ground)
                .map_err(|e| TrajoptError::Eval(e.to_string()))?;
            Ok(DVector::from_column_slice(eval.xdot.as_slice()))
        })
    }
}

/// Resample a simulated trajectory onto `n` collocation nodes spanning
/// `[0, t_f]` as a warm start. States and controls interpolate linearly
/// between logged rows; an aligned grid copies rows exactly.
pub fn seed_from_simulation(
    trajectory: &Trajectory,
    n: usize,
    t_f: f64,
) -> Result<DecisionVector, TrajoptError> {
    if n < 2 {
        return Err(TrajoptError::Dimension {
            expected: 2,
            got: n,
        });
    }
    let available = trajectory.duration();
    if trajectory.rows.len() < 2 || available + 1e-9 < t_f {
        return Err(TrajoptError::TooShort {
            available,
            needed: t_f,
        });
    }
    let mut dv = DecisionVector::zeros(STATE_DIM, INPUT_DIM, n, t_f);
    let rows = &trajectory.rows;
    for i in 0..n {
        let t = t_f * i as f64 / (n - 1) as f64;
        let k = match rows.binary_search_by(|r| r.t.partial_cmp(&t).unwrap()) {
            Ok(exact) => exact.max(1),
            Err(ins) => ins.clamp(1, rows.len() - 1),
        };
        let (a, b) = (&rows[k - 1], &rows[k]);
        let alpha = ((t - a.t) / (b.t - a.t)).clamp(0.0, 1.0);
        // Snap to a log row when the node lands on the sampling grid.
        let (x, u) = if alpha < 1e-9 {
            (a.state.flatten(), a.input.flatten())
        } else if alpha > 1.0 - 1e-9 {
            (b.state.flatten(), b.input.flatten())
        } else {
            let x = a.state.flatten() + (b.state.flatten() - a.state.flatten()) * alpha;
            let u = a.input.flatten() + (b.input.flatten() - a.input.flatten()) * alpha;
            (x, u)
        };
        dv.set_state(i, &DVector::from_column_slice(x.as_slice()));
        dv.set_control(i, &DVector::from_column_slice(u.as_slice()));
    }
    Ok(dv)
}

/// Assemble the walking-robot collocation problem.
pub fn build_problem<'a>(
    spec: &'a ProblemSpec,
    weights: &'a CostWeights,
    dynamics: &'a HromDynamics<'a>,
    seed: &DecisionVector,
) -> Result<CollocationProblem<'a>, TrajoptError> {
    spec.validate()?;
    weights.validate()?;
    if seed.n() != spec.n || seed.nx != STATE_DIM || seed.nu != INPUT_DIM {
        return Err(TrajoptError::Dimension {
            expected: spec.n,
            got: seed.n(),
        });
    }
    let n = spec.n;
    let robot = dynamics.robot;
    let dim = n * (STATE_DIM + INPUT_DIM) + 1;

    let mut lower = DVector::from_element(dim, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(dim, f64::INFINITY);
    // Control bounds per node: only the axis force and the two transverse
    // moments are achievable; the rest of the wrench is pinned to zero.
    let budget = robot.thrust_budget();
    let mx_max: f64 = 0.5
        * robot.max_thrust_per_edf
        * robot
            .thruster_positions
            .iter()
            .map(|p| p.y.abs())
            .sum::<f64>();
    let my_max: f64 = 0.5
        * robot.max_thrust_per_edf
        * robot
            .thruster_positions
            .iter()
            .map(|p| p.x.abs())
            .sum::<f64>();
    for i in 0..n {
        let base = n * STATE_DIM + i * INPUT_DIM;
        for pinned in [0, 1, 5] {
            lower[base + pinned] = 0.0;
            upper[base + pinned] = 0.0;
        }
        lower[base + 2] = 0.0;
        upper[base + 2] = budget;
        lower[base + 3] = -mx_max;
        upper[base + 3] = mx_max;
        lower[base + 4] = -my_max;
        upper[base + 4] = my_max;
        if !spec.free_joint_inputs {
            // Joint accelerations ride along pinned at the seed values; the
            // dynamics regenerate them from the tracking law.
            for j in 6..INPUT_DIM {
                let v = seed.control(i)[j];
                lower[base + j] = v;
                upper[base + j] = v;
            }
        }
    }
    lower[dim - 1] = spec.t_f_bounds.0;
    upper[dim - 1] = spec.t_f_bounds.1;

    // Fan-space feasibility projection: clip the least-squares decomposition
    // of each node wrench and recondense.
    let a_mat = allocation_matrix(robot);
    let pinv = allocation_pinv(robot);
    let max_f = robot.max_thrust_per_edf;
    let project = move |dv: &mut DecisionVector| {
        for i in 0..dv.n() {
            let u = dv.control(i);
            let w = nalgebra::Vector6::new(u[0], u[1], u[2], u[3], u[4], u[5]);
            let mut f = pinv * w;
            for k in 0..4 {
                f[k] = f[k].clamp(0.0, max_f);
            }
            let wc = a_mat * f;
            let mut u_new = u.clone();
            for k in 0..6 {
                u_new[k] = wc[k];
            }
            dv.set_control(i, &u_new);
        }
    };

    let initial = spec.initial_state;
    let terminal = spec.terminal;
    let v_ref = spec.v_ref;
    let reference = spec.reference_attitude;
    let n_boundary = spec.n_boundary();
    let boundary = move |dv: &DecisionVector| {
        let mut r = DVector::zeros(n_boundary);
        let x0 = dv.state(0);
        let xn = dv.state(dv.n() - 1);
        for k in 0..STATE_DIM {
            r[k] = x0[k] - initial[k];
        }
        let mut row = STATE_DIM;
        if terminal.attitude {
            let euler = EulerAngles {
                yaw: xn[3],
                pitch: xn[4],
                roll: xn[5],
            };
            let xe = attitude_error(&euler, &reference);
            r[row] = xe.x;
            r[row + 1] = xe.y;
            r[row + 2] = xe.z;
            row += 3;
        }
        if terminal.lateral {
            r[row] = xn[1];
            row += 1;
        }
        if terminal.displacement {
            r[row] = (xn[0] - x0[0]) - v_ref * dv.t_f;
        }
        r
    };

    Ok(CollocationProblem {
        trans: Transcription {
            nx: STATE_DIM,
            nu: INPUT_DIM,
            n,
            dynamics: dynamics.dynamics_fn(),
        },
        boundary: Box::new(boundary),
        n_boundary,
        cost: Box::new(move |dv| cost(dv, weights, &spec.reference_attitude, robot)),
        lower,
        upper,
        extra_project: Some(Box::new(project)),
    })
}

/// Solve the walking-robot collocation problem from a warm start.
///
/// The pipeline alternates two phases: a feasibility-restoration rollout
/// that re-solves the defect equations node by node (keeping the controls),
/// and the augmented-Lagrangian polish. The restoration carries the iterate
/// back onto the collocation manifold after the polish has traded
/// feasibility for cost; the best feasible iterate across rounds wins.
///
/// Non-converged statuses are reported as errors carrying the best iterate
/// and the full report, so callers can persist partial results.
pub fn nlp_solve(
    spec: &ProblemSpec,
    weights: &CostWeights,
    dynamics: &HromDynamics,
    initial_guess: &DecisionVector,
    opts: &SolveOptions,
) -> Result<(DecisionVector, SolverReport), TrajoptError> {
    let problem = build_problem(spec, weights, dynamics, initial_guess)?;

    let evaluate = |dv: &DecisionVector| -> Result<(f64, f64), TrajoptError> {
        let defects = problem.trans.defects(dv)?;
        let boundary = (problem.boundary)(dv);
        let c = defects.amax().max(boundary.amax());
        Ok(((problem.cost)(dv), c))
    };

    let rounds = 3;
    let mut incumbent = initial_guess.clone();
    let mut best: Option<(DecisionVector, f64, f64)> = None;
    let mut last: Option<(DecisionVector, SolverReport)> = None;
    for _round in 0..rounds {
        if let Ok(rolled) = problem.trans.rollout(&incumbent, 20) {
            if let Ok((cost_r, c_r)) = evaluate(&rolled) {
                if c_r < opts.tol_c && best.as_ref().map_or(true, |(_, bc, _)| cost_r < *bc) {
                    best = Some((rolled.clone(), cost_r, c_r));
                }
                incumbent = rolled;
            }
        }
        let (sol, raw_last, report) = problem.solve(&incumbent, opts)?;
        if report.constraint_inf_norm < opts.tol_c
            && best.as_ref().map_or(true, |(_, bc, _)| report.cost < *bc)
        {
            best = Some((sol.clone(), report.cost, report.constraint_inf_norm));
        }
        // The next restoration starts from the raw final iterate: the polish
        // typically ends at a low-cost point a rollout can make feasible.
        incumbent = raw_last;
        last = Some((sol, report));
    }
    let (fallback, mut report) = last.expect("at least one solve round ran");
    let mut solution = match best {
        Some((dv, cost, c_norm)) => {
            report.status = SolveStatus::Converged;
            report.cost = cost;
            report.constraint_inf_norm = c_norm;
            dv
        }
        None => fallback,
    };
    if !spec.free_joint_inputs {
        // Export the tracking-law joint accelerations at the solved states.
        let h = solution.t_f / (spec.n - 1) as f64;
        for i in 0..spec.n {
            let state =
                FullState::unflatten(&SVector::from_column_slice(solution.state(i).as_slice()));
            if let Ok(joints) = dynamics.tracked_joints(i as f64 * h, &state) {
                let mut u = solution.control(i);
                for j in 0..12 {
                    u[6 + j] = joints[j];
                }
                solution.set_control(i, &u);
            }
        }
    }
    match report.status {
        SolveStatus::Converged => Ok((solution, report)),
        SolveStatus::MaxIter => Err(TrajoptError::MaxIter {
            best: Box::new(solution),
            report: Box::new(report),
        }),
        SolveStatus::LineSearchFail => Err(TrajoptError::LineSearchFail {
            best: Box::new(solution),
            report: Box::new(report),
        }),
        SolveStatus::NonFinite => Err(TrajoptError::NonFinite {
            best: Box::new(solution),
            report: Box::new(report),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gait::{build_gait, GaitParams};
    use crate::sim::{simulate, standing_start, SimConfig};
    use approx::assert_relative_eq;

    fn short_walk() -> (RobotParams, GroundParams, GaitPlan, Trajectory) {
        let robot = RobotParams::default();
        let ground = GroundParams::default();
        let mut gait = GaitParams::default();
        gait.duration = 1.0;
        let plan = build_gait(&gait, &robot).unwrap();
        let mut config = SimConfig::default();
        config.duration = 1.0;
        let (initial, _) = standing_start(&robot, gait.body_height, &ground);
        let result = simulate(&config, &initial, &plan, &robot, &ground);
        assert!(result.abort.is_none());
        (robot, ground, plan, result.trajectory)
    }

    #[test]
    fn cost_zero_at_reference_with_zero_thrust() {
        let robot = RobotParams::default();
        let dv = DecisionVector::zeros(STATE_DIM, INPUT_DIM, 4, 1.0);
        let j = cost(&dv, &CostWeights::default(), &EulerAngles::zero(), &robot);
        assert_eq!(j, 0.0);
    }

    #[test]
    fn cost_single_node_quadratic_arithmetic() {
        let robot = RobotParams::default();
        let mut dv = DecisionVector::zeros(STATE_DIM, INPUT_DIM, 1, 1.0);
        // Bypass validate(): cost itself has no n >= 2 requirement.
        let mut x = DVector::zeros(STATE_DIM);
        x[3] = 0.1; // yaw error 0.1
        dv.set_state(0, &x);
        let weights = CostWeights::new(1.0, 0.0, PenalizeMode::EdfForces);
        let j = cost(&dv, &weights, &EulerAngles::zero(), &robot);
        assert_relative_eq!(j, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn cost_quadruples_when_thrust_doubles() {
        let robot = RobotParams::default();
        let mut dv = DecisionVector::zeros(STATE_DIM, INPUT_DIM, 3, 1.0);
        for i in 0..3 {
            let mut u = DVector::zeros(INPUT_DIM);
            u[2] = 10.0 + i as f64;
            u[3] = 0.3;
            dv.set_control(i, &u);
        }
        let weights = CostWeights::default();
        let j1 = cost(&dv, &weights, &EulerAngles::zero(), &robot);
        for i in 0..3 {
            dv.set_control(i, &(dv.control(i) * 2.0));
        }
        let j2 = cost(&dv, &weights, &EulerAngles::zero(), &robot);
        assert_relative_eq!(j2, 4.0 * j1, epsilon = 1e-9);
    }

    #[test]
    fn seed_copies_aligned_grid_exactly() {
        let (_, _, _, traj) = short_walk();
        // Node spacing equal to the log spacing over a 10-row window.
        let t_f = traj.rows[10].t;
        let dv = seed_from_simulation(&traj, 11, t_f).unwrap();
        for i in 0..11 {
            let x = dv.state(i);
            let expected = traj.rows[i].state.flatten();
            for k in 0..STATE_DIM {
                assert_eq!(x[k], expected[k], "node {i} entry {k}");
            }
        }
    }

    #[test]
    fn seed_constant_trajectory_gives_constant_nodes() {
        let (_, _, _, mut traj) = short_walk();
        let first = traj.rows[0].clone();
        for (k, row) in traj.rows.iter_mut().enumerate() {
            let t = k as f64 * 1e-3;
            *row = first.clone();
            row.t = t;
        }
        let dv = seed_from_simulation(&traj, 7, 0.5).unwrap();
        for i in 0..7 {
            assert_eq!(dv.state(i), dv.state(0));
            assert_eq!(dv.control(i), dv.control(0));
        }
    }

    #[test]
    fn seed_rejects_short_trajectory() {
        let (_, _, _, traj) = short_walk();
        let err = seed_from_simulation(&traj, 11, 2.0).unwrap_err();
        assert!(matches!(err, TrajoptError::TooShort { .. }));
    }

    #[test]
    fn warm_start_defects_small_on_smooth_trajectory() {
        // Contact-free ballistic flight with idle joints: the resampled log
        // is dynamically consistent and smooth at the collocation grid
        // scale, so defects stay small.
        let robot = RobotParams::default();
        let ground = GroundParams::default();
        let gait = GaitParams::new(0.0, 0.4, 0.05, 0.0, 0.0, 1.0, 0.275);
        let plan = build_gait(&gait, &robot).unwrap();
        let mut config = SimConfig::default();
        config.duration = 1.0;
        config.thrust_ff_fraction = 0.0;
        config.kp_att = nalgebra::Vector3::zeros();
        config.kd_att = nalgebra::Vector3::zeros();
        config.joint_gains = JointGains { kp: 0.0, kd: 0.0 };
        let (mut initial, _) = standing_start(&robot, gait.body_height, &ground);
        initial.pose.position.z = 8.0;
        initial.velocity.linear = nalgebra::Vector3::new(0.3, -0.1, 1.0);
        let result = simulate(&config, &initial, &plan, &robot, &ground);
        assert!(result.abort.is_none());

        let n = 11;
        let dv = seed_from_simulation(&result.trajectory, n, 1.0).unwrap();
        let dynamics = HromDynamics {
            robot: &robot,
            ground: &ground,
            plan: &plan,
            gains: JointGains { kp: 0.0, kd: 0.0 },
            free_joint_inputs: false,
        };
        let trans = Transcription {
            nx: STATE_DIM,
            nu: INPUT_DIM,
            n,
            dynamics: dynamics.dynamics_fn(),
        };
        let defects = trans.defects(&dv).unwrap();
        assert!(
            defects.amax() < 1e-2,
            "warm-start defect {}",
            defects.amax()
        );
    }

    #[test]
    fn warm_start_defects_bounded_on_walking() {
        // Walking logs carry contact and tracking-law transients that a
        // coarse grid cannot resolve; the seed must still be finite and of
        // plant-force scale so the solver has something workable.
        let (robot, ground, plan, traj) = short_walk();
        let n = 11;
        let dv = seed_from_simulation(&traj, n, 1.0).unwrap();
        let dynamics = HromDynamics {
            robot: &robot,
            ground: &ground,
            plan: &plan,
            gains: JointGains::default(),
            free_joint_inputs: false,
        };
        let trans = Transcription {
            nx: STATE_DIM,
            nu: INPUT_DIM,
            n,
            dynamics: dynamics.dynamics_fn(),
        };
        let defects = trans.defects(&dv).unwrap();
        assert!(defects.iter().all(|v| v.is_finite()));
        assert!(defects.amax() < 2e4, "warm-start defect {}", defects.amax());
    }

    #[test]
    fn fd_cost_gradient_matches_richardson_extrapolation() {
        // Guards the finite-difference step rule: the gradient at the
        // working step must agree with the Richardson extrapolation of the
        // same central difference at step and step/2.
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let robot = RobotParams::default();
        let weights = CostWeights::default();
        let reference = EulerAngles::zero();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let n = 4;
        for _ in 0..5 {
            let mut dv = DecisionVector::zeros(STATE_DIM, INPUT_DIM, n, 1.0);
            for i in 0..n {
                dv.set_state(
                    i,
                    &DVector::from_fn(STATE_DIM, |_, _| rng.gen_range(-0.5..0.5)),
                );
                let mut u = DVector::zeros(INPUT_DIM);
                u[2] = rng.gen_range(5.0..40.0);
                u[3] = rng.gen_range(-2.0..2.0);
                u[4] = rng.gen_range(-2.0..2.0);
                dv.set_control(i, &u);
            }
            let y0 = dv.flatten();
            let f = |y: &DVector<f64>| {
                let d = DecisionVector::from_flat(STATE_DIM, INPUT_DIM, n, y).unwrap();
                cost(&d, &weights, &reference, &robot)
            };
            let mut y = y0.clone();
            for _ in 0..20 {
                let idx = rng.gen_range(0..y0.len() - 1);
                let h = solver_fd_step(y0[idx]);
                let mut central = |step: f64| {
                    y[idx] = y0[idx] + step;
                    let fp = f(&y);
                    y[idx] = y0[idx] - step;
                    let fm = f(&y);
                    y[idx] = y0[idx];
                    (fp - fm) / (2.0 * step)
                };
                let g_h = central(h);
                let g_h2 = central(h / 2.0);
                let richardson = (4.0 * g_h2 - g_h) / 3.0;
                let scale = richardson.abs().max(1e-6);
                assert!(
                    (g_h - richardson).abs() / scale < 1e-4,
                    "gradient step pathology at index {idx}: {g_h} vs {richardson}"
                );
            }
        }
    }

    #[test]
    fn free_joint_inputs_promotes_joint_controls() {
        // With joint inputs promoted to decision variables, the defect rows
        // for the joint rates respond to the node joint accelerations; in
        // tracked mode they do not.
        let robot = RobotParams::default();
        let ground = GroundParams::default();
        let gait = GaitParams::default();
        let plan = build_gait(&gait, &robot).unwrap();
        let seed = {
            let mut config = SimConfig::default();
            config.duration = 0.3;
            let (initial, _) = standing_start(&robot, gait.body_height, &ground);
            let result = simulate(&config, &initial, &plan, &robot, &ground);
            seed_from_simulation(&result.trajectory, 5, 0.3).unwrap()
        };
        let defect_shift = |free: bool| {
            let dynamics = HromDynamics {
                robot: &robot,
                ground: &ground,
                plan: &plan,
                gains: JointGains::default(),
                free_joint_inputs: free,
            };
            let trans = Transcription {
                nx: STATE_DIM,
                nu: INPUT_DIM,
                n: 5,
                dynamics: dynamics.dynamics_fn(),
            };
            let base = trans.defects(&seed).unwrap();
            let mut perturbed = seed.clone();
            let mut u = perturbed.control(2);
            u[6] += 1.0; // FR sagittal joint acceleration
            perturbed.set_control(2, &u);
            (trans.defects(&perturbed).unwrap() - base).amax()
        };
        assert!(defect_shift(true) > 0.1);
        assert_eq!(defect_shift(false), 0.0);

        // Promotion also unpins the joint-control bounds.
        let dynamics = HromDynamics {
            robot: &robot,
            ground: &ground,
            plan: &plan,
            gains: JointGains::default(),
            free_joint_inputs: true,
        };
        let spec = ProblemSpec {
            n: 5,
            t_f_bounds: (0.2, 10.0),
            initial_state: SVector::from_column_slice(seed.state(0).as_slice()),
            reference_attitude: EulerAngles::zero(),
            v_ref: 0.1,
            terminal: TerminalConditions::default(),
            free_joint_inputs: true,
        };
        let weights = CostWeights::default();
        let problem = build_problem(&spec, &weights, &dynamics, &seed).unwrap();
        let base = 5 * STATE_DIM + 2 * INPUT_DIM + 6;
        assert!(problem.lower[base] < problem.upper[base]);
    }

    #[test]
    fn projection_clips_to_fan_box() {
        let robot = RobotParams::default();
        let ground = GroundParams::default();
        let gait = GaitParams::default();
        let plan = build_gait(&gait, &robot).unwrap();
        let dynamics = HromDynamics {
            robot: &robot,
            ground: &ground,
            plan: &plan,
            gains: JointGains::default(),
            free_joint_inputs: false,
        };
        let spec = ProblemSpec {
            n: 3,
            t_f_bounds: (0.5, 10.0),
            initial_state: SVector::zeros(),
            reference_attitude: EulerAngles::zero(),
            v_ref: 0.1,
            terminal: TerminalConditions::default(),
            free_joint_inputs: false,
        };
        let seed = DecisionVector::zeros(STATE_DIM, INPUT_DIM, 3, 1.0);
        let weights = CostWeights::default();
        let problem = build_problem(&spec, &weights, &dynamics, &seed).unwrap();
        let mut dv = seed.clone();
        let mut u = DVector::zeros(INPUT_DIM);
        u[2] = 500.0; // far beyond the budget
        u[3] = 30.0;
        dv.set_control(1, &u);
        (problem.extra_project.as_ref().unwrap())(&mut dv);
        let pinv = allocation_pinv(&robot);
        for i in 0..3 {
            let uc = dv.control(i);
            let w = nalgebra::Vector6::new(uc[0], uc[1], uc[2], uc[3], uc[4], uc[5]);
            let f = pinv * w;
            for k in 0..4 {
                assert!(f[k] >= -1e-9 && f[k] <= robot.max_thrust_per_edf + 1e-9);
            }
        }
    }
}
