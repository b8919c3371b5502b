//! Self-check suite behind `hrom verify` and the acceptance test target.
//!
//! Each check pins its thresholds in code and reports one pass/fail line.
//! The walking-scenario checks share a single simulation run; the remaining
//! checks are independent. Checks take the run configuration so parameter
//! tampering is observable (a broken ground model must fail here).

use nalgebra::{DVector, SVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::config::RunConfig;
use crate::contact::{ground_reaction, GroundParams};
use crate::dynamics::{dynamics_eval, ControlInput};
use crate::gait::{build_gait, Phase};
use crate::model::{
    euler_rates_from_omega, foot_jacobian, foot_position_world, leg_inverse_kinematics,
    leg_local_offset, BodyPose, BodyVelocity, EulerAngles, FullState, LegId, LegJointState,
    LegJoints, STATE_DIM,
};
use crate::sim::{initial_state_from_plan, rk4_step, simulate, Trajectory};
use crate::trajopt::{
    self, control_interp, hermite_midpoint, oracles, seed_from_simulation, state_interp,
    CostWeights, DecisionVector, HromDynamics, ProblemSpec, SolveOptions, TerminalConditions,
    Transcription,
};

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }
}

/// All check names, in report order.
pub const CHECK_NAMES: [&str; 11] = [
    "walking_displacement",
    "walking_attitude",
    "thrust_budget",
    "stance_slip",
    "energy_conservation",
    "contact_grf_formula",
    "kinematics",
    "interpolants",
    "optimizer_double_integrator",
    "collocation_smoke",
    "csv_determinism",
];

struct WalkRun {
    trajectory: Trajectory,
    elapsed_s: f64,
    aborted: bool,
}

fn run_walk(config: &RunConfig) -> Result<WalkRun, String> {
    let plan = build_gait(&config.gait, &config.robot).map_err(|e| e.to_string())?;
    let (initial, _) =
        initial_state_from_plan(&config.robot, &plan, &config.ground).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let result = simulate(&config.sim, &initial, &plan, &config.robot, &config.ground);
    Ok(WalkRun {
        trajectory: result.trajectory,
        elapsed_s: start.elapsed().as_secs_f64(),
        aborted: result.abort.is_some(),
    })
}

fn check_walking_displacement(config: &RunConfig, walk: &Result<WalkRun, String>) -> CheckResult {
    let name = "walking_displacement";
    let walk = match walk {
        Ok(w) => w,
        Err(e) => return CheckResult::new(name, false, format!("gait/sim failed: {e}")),
    };
    if walk.aborted {
        return CheckResult::new(name, false, "simulation aborted".into());
    }
    let displacement = walk.trajectory.forward_displacement();
    let target = 0.30;
    let tol = 0.30 * target;
    let in_range = (displacement - target).abs() <= tol;
    let in_time = walk.elapsed_s < 60.0;
    let _ = config;
    CheckResult::new(
        name,
        in_range && in_time,
        format!(
            "forward displacement {displacement:.4} m (target 0.30 ± {tol:.2} m), runtime {:.2} s (< 60 s)",
            walk.elapsed_s
        ),
    )
}

fn check_walking_attitude(walk: &Result<WalkRun, String>) -> CheckResult {
    let name = "walking_attitude";
    let walk = match walk {
        Ok(w) => w,
        Err(e) => return CheckResult::new(name, false, format!("gait/sim failed: {e}")),
    };
    let mut max_roll = 0.0_f64;
    let mut max_pitch = 0.0_f64;
    let mut max_omega = 0.0_f64;
    for row in &walk.trajectory.rows {
        max_roll = max_roll.max(row.state.pose.orientation.roll.abs());
        max_pitch = max_pitch.max(row.state.pose.orientation.pitch.abs());
        max_omega = max_omega.max(row.state.velocity.angular.norm());
    }
    let passed = max_roll < 0.2 && max_pitch < 0.2 && max_omega < 2.0;
    CheckResult::new(
        name,
        passed,
        format!(
            "max |roll| {max_roll:.4} rad, max |pitch| {max_pitch:.4} rad (< 0.2), max |omega| {max_omega:.3} rad/s (< 2)"
        ),
    )
}

fn check_thrust_budget(config: &RunConfig, walk: &Result<WalkRun, String>) -> CheckResult {
    let name = "thrust_budget";
    let walk = match walk {
        Ok(w) => w,
        Err(e) => return CheckResult::new(name, false, format!("gait/sim failed: {e}")),
    };
    let budget = 8.0 * 9.80665;
    let mut max_total = 0.0_f64;
    for row in &walk.trajectory.rows {
        max_total = max_total.max(row.thrusters.total());
    }
    let _ = config;
    CheckResult::new(
        name,
        max_total <= budget + 1e-9,
        format!("max total thrust {max_total:.2} N (budget {budget:.2} N)"),
    )
}

fn check_stance_slip(config: &RunConfig, walk: &Result<WalkRun, String>) -> CheckResult {
    let name = "stance_slip";
    let walk = match walk {
        Ok(w) => w,
        Err(e) => return CheckResult::new(name, false, format!("gait/sim failed: {e}")),
    };
    let plan = match build_gait(&config.gait, &config.robot) {
        Ok(p) => p,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    // Tangential drift of each foot within one stance phase while loaded.
    let mut worst = 0.0_f64;
    for leg in LegId::ALL {
        let mut anchor: Option<(f64, f64)> = None;
        let mut prev_stance = false;
        for row in &walk.trajectory.rows {
            let in_stance = plan.phase(leg, row.t) == Phase::Stance;
            let loaded = row.grf[leg.index()].force.z > 1.0;
            if in_stance && loaded {
                if !prev_stance {
                    anchor = None;
                }
                let p = foot_position_world(&row.state.pose, &config.robot, &row.state.legs, leg);
                match anchor {
                    None => anchor = Some((p.x, p.y)),
                    Some((ax, ay)) => {
                        let drift = ((p.x - ax).powi(2) + (p.y - ay).powi(2)).sqrt();
                        worst = worst.max(drift);
                    }
                }
            } else {
                anchor = None;
            }
            prev_stance = in_stance;
        }
    }
    CheckResult::new(
        name,
        worst < 5e-3,
        format!(
            "worst loaded stance-foot drift {:.3} mm (< 5 mm)",
            worst * 1e3
        ),
    )
}

fn check_energy_conservation(config: &RunConfig) -> CheckResult {
    let name = "energy_conservation";
    let robot = &config.robot;
    let ground = &config.ground;
    // Torque-free, contact-free tumble; the initial pitch offset keeps the
    // Euler chart away from its singularity over the window.
    let mut state = FullState {
        pose: BodyPose {
            position: Vector3::new(0.0, 0.0, 50.0),
            orientation: EulerAngles::new(0.3, -1.2, 0.2),
        },
        legs: LegJoints(
            [LegJointState {
                length: 0.2,
                ..Default::default()
            }; 4],
        ),
        velocity: BodyVelocity {
            linear: Vector3::new(0.5, -0.2, 2.0),
            angular: Vector3::new(0.1, 2.0, 0.1),
        },
    };
    let input = ControlInput::zero();
    let energy = |s: &FullState| {
        0.5 * robot.mass * s.velocity.linear.norm_squared()
            + 0.5
                * s.velocity
                    .angular
                    .dot(&(robot.inertia * s.velocity.angular))
            - robot.mass * s.pose.position.dot(&robot.gravity)
    };
    let e0 = energy(&state);
    let h0 = (robot.inertia * state.velocity.angular).norm();
    let f = |xs: &SVector<f64, STATE_DIM>| {
        dynamics_eval(&FullState::unflatten(xs), &input, robot, ground).map(|e| e.xdot)
    };
    for _ in 0..1000 {
        match rk4_step(&f, &state.flatten(), 1e-3) {
            Ok(next) => state = FullState::unflatten(&next),
            Err(e) => return CheckResult::new(name, false, format!("dynamics failed: {e}")),
        }
    }
    let de = (energy(&state) - e0).abs() / e0.abs();
    let dh = ((robot.inertia * state.velocity.angular).norm() - h0).abs() / h0;
    CheckResult::new(
        name,
        de < 1e-6 && dh < 1e-6,
        format!("relative energy drift {de:.2e}, |I w| drift {dh:.2e} over 1 s (< 1e-6)"),
    )
}

fn check_grf_formula(ground: &GroundParams) -> CheckResult {
    let name = "contact_grf_formula";
    let loaded = ground_reaction(
        &Vector3::new(0.0, 0.0, ground.ground_height - 0.001),
        &Vector3::zeros(),
        ground,
    );
    let airborne = ground_reaction(
        &Vector3::new(0.0, 0.0, ground.ground_height + 0.001),
        &Vector3::new(1.0, -2.0, 0.5),
        ground,
    );
    let expected = ground.k_gz * 0.001;
    let normal_ok = (loaded.force.z - expected).abs() < 1e-12 && (expected - 8.0).abs() < 1e-9;
    let airborne_ok = airborne.force == Vector3::zeros() && !airborne.in_contact;
    CheckResult::new(
        name,
        normal_ok && airborne_ok,
        format!(
            "u_z at 1 mm static penetration = {:.12} N (expect 8), airborne force {:?}",
            loaded.force.z, airborne.force
        ),
    )
}

fn check_kinematics(config: &RunConfig) -> CheckResult {
    let name = "kinematics";
    let robot = &config.robot;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x6b696e);
    let (lmin, lmax) = robot.leg_length_limits;

    let mut worst_ik = 0.0_f64;
    for _ in 0..1000 {
        let dir = Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..-0.05),
        )
        .normalize();
        let target = dir * rng.gen_range(lmin * 1.2..lmax * 0.98);
        match leg_inverse_kinematics(&target, robot) {
            Ok((phi, gamma, len)) => {
                let back = leg_local_offset(phi, gamma, len);
                worst_ik = worst_ik.max((back - target).norm());
            }
            Err(e) => return CheckResult::new(name, false, format!("IK failed: {e}")),
        }
    }

    let mut worst_jac = 0.0_f64;
    let fd = 1e-6;
    for _ in 0..1000 {
        let pose = BodyPose {
            position: Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)),
            orientation: EulerAngles::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ),
        };
        let legs = LegJoints(std::array::from_fn(|_| LegJointState {
            phi: rng.gen_range(-1.0..1.0),
            gamma: rng.gen_range(-1.0..1.0),
            length: rng.gen_range(0.1..0.4),
            ..Default::default()
        }));
        let leg = LegId::ALL[rng.gen_range(0..4)];
        let b = foot_jacobian(&pose, robot, &legs, leg);
        let v = SVector::<f64, 6>::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let rates = match euler_rates_from_omega(
            &pose.orientation,
            &Vector3::new(v[3], v[4], v[5]),
            1e-9,
        ) {
            Ok(r) => r,
            Err(e) => return CheckResult::new(name, false, e.to_string()),
        };
        let shift = |s: f64| {
            let p = BodyPose {
                position: pose.position + s * Vector3::new(v[0], v[1], v[2]),
                orientation: EulerAngles {
                    yaw: pose.orientation.yaw + s * rates.x,
                    pitch: pose.orientation.pitch + s * rates.y,
                    roll: pose.orientation.roll + s * rates.z,
                },
            };
            foot_position_world(&p, robot, &legs, leg)
        };
        let numeric = (shift(fd) - shift(-fd)) / (2.0 * fd);
        let analytic = b * v;
        worst_jac = worst_jac.max((numeric - analytic).norm() / analytic.norm().max(1.0));
    }

    CheckResult::new(
        name,
        worst_ik < 1e-10 && worst_jac < 1e-6,
        format!(
            "FK∘IK worst error {worst_ik:.2e} (< 1e-10) over 1000 targets, jacobian vs FD worst {worst_jac:.2e} (< 1e-6)"
        ),
    )
}

fn check_interpolants(config: &RunConfig) -> CheckResult {
    let name = "interpolants";
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x686572);

    // Hermite endpoint identities.
    let mut worst_endpoint = 0.0_f64;
    for _ in 0..200 {
        let dim = 5;
        let rv = |rng: &mut ChaCha8Rng| DVector::from_fn(dim, |_, _| rng.gen_range(-2.0..2.0));
        let (x0, x1, f0, f1) = (rv(&mut rng), rv(&mut rng), rv(&mut rng), rv(&mut rng));
        let (t0, t1) = (0.2, 0.2 + rng.gen_range(0.1..2.0));
        let (v0, d0) = state_interp(&x0, &x1, &f0, &f1, t0, t1, t0).unwrap();
        let (v1, d1) = state_interp(&x0, &x1, &f0, &f1, t0, t1, t1).unwrap();
        worst_endpoint = worst_endpoint
            .max((v0 - &x0).amax())
            .max((v1 - &x1).amax())
            .max((d0 - &f0).amax())
            .max((d1 - &f1).amax());
        // Midpoint short forms agree with the polynomial.
        let (vm, dm) = state_interp(&x0, &x1, &f0, &f1, t0, t1, 0.5 * (t0 + t1)).unwrap();
        let (vc, dc) = hermite_midpoint(&x0, &x1, &f0, &f1, t1 - t0);
        worst_endpoint = worst_endpoint.max((vm - vc).amax()).max((dm - dc).amax());
        // Linear control interpolation hits the midpoint average.
        let um = control_interp(&x0, &x1, t0, t1, 0.5 * (t0 + t1)).unwrap();
        worst_endpoint = worst_endpoint.max((um - (&x0 + &x1) * 0.5).amax());
    }

    // Exact reproduction of sampled cubics.
    let mut worst_cubic = 0.0_f64;
    for _ in 0..100 {
        let dim = 3;
        let rv = |rng: &mut ChaCha8Rng| DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let (a, b, c, d) = (rv(&mut rng), rv(&mut rng), rv(&mut rng), rv(&mut rng));
        let poly = |t: f64| &a + &b * t + &c * (t * t) + &d * (t * t * t);
        let dpoly = |t: f64| &b + &c * (2.0 * t) + &d * (3.0 * t * t);
        let (t0, t1) = (-0.5, 1.1);
        for i in 0..=10 {
            let t = t0 + (t1 - t0) * i as f64 / 10.0;
            let (v, _) =
                state_interp(&poly(t0), &poly(t1), &dpoly(t0), &dpoly(t1), t0, t1, t).unwrap();
            worst_cubic = worst_cubic.max((v - poly(t)).amax());
        }
    }

    // Defect order under grid refinement on a linear system.
    let dynamics_rule = |x: &DVector<f64>| {
        DVector::from_vec(vec![-0.3 * x[0] + 1.1 * x[1], -1.1 * x[0] - 0.3 * x[1]])
    };
    let rollout = |t_f: f64, steps: usize| {
        let dt = t_f / steps as f64;
        let mut xs = vec![DVector::from_vec(vec![1.0, 0.0])];
        for _ in 0..steps {
            let x = xs.last().unwrap().clone();
            let k1 = dynamics_rule(&x);
            let k2 = dynamics_rule(&(&x + &k1 * (dt / 2.0)));
            let k3 = dynamics_rule(&(&x + &k2 * (dt / 2.0)));
            let k4 = dynamics_rule(&(&x + &k3 * dt));
            xs.push(&x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0));
        }
        xs
    };
    let mut norms = Vec::new();
    for &n in &[11usize, 21, 41] {
        let fine = 100 * (n - 1);
        let samples = rollout(2.0, fine);
        let trans = Transcription {
            nx: 2,
            nu: 1,
            n,
            dynamics: Box::new(move |_, x, _| Ok(dynamics_rule(x))),
        };
        let mut dv = DecisionVector::zeros(2, 1, n, 2.0);
        for i in 0..n {
            dv.set_state(i, &samples[i * fine / (n - 1)]);
        }
        norms.push(trans.defects(&dv).unwrap().amax());
    }
    let order1 = (norms[0] / norms[1]).log2();
    let order2 = (norms[1] / norms[2]).log2();

    let passed = worst_endpoint < 1e-12 && worst_cubic < 1e-11 && order1 >= 3.0 && order2 >= 3.0;
    CheckResult::new(
        name,
        passed,
        format!(
            "endpoint identities {worst_endpoint:.2e} (< 1e-12), cubic reproduction {worst_cubic:.2e}, defect refinement orders {order1:.2}/{order2:.2} (>= 3)"
        ),
    )
}

fn check_double_integrator() -> CheckResult {
    let name = "optimizer_double_integrator";
    let start = Instant::now();
    let n = 11;
    let problem = oracles::double_integrator_problem(n);
    let seed = oracles::double_integrator_seed(n);
    let opts = SolveOptions {
        max_outer: 80,
        max_inner: 200,
        tol_c: 1e-4,
        tol_g: 1e-5,
        ..Default::default()
    };
    let (_, _, report) = match problem.solve(&seed, &opts) {
        Ok(r) => r,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let cost_err =
        (report.cost - oracles::DOUBLE_INTEGRATOR_COST).abs() / oracles::DOUBLE_INTEGRATOR_COST;
    let passed = cost_err < 0.02 && report.constraint_inf_norm < 1e-4 && elapsed < 30.0;
    CheckResult::new(
        name,
        passed,
        format!(
            "cost {:.5} (within 2% of 12: err {:.3}%), |c|inf {:.2e} (< 1e-4), runtime {elapsed:.2} s (< 30 s)",
            report.cost,
            100.0 * cost_err,
            report.constraint_inf_norm
        ),
    )
}

fn check_collocation_smoke(config: &RunConfig, walk: &Result<WalkRun, String>) -> CheckResult {
    let name = "collocation_smoke";
    let walk = match walk {
        Ok(w) => w,
        Err(e) => return CheckResult::new(name, false, format!("walk failed: {e}")),
    };
    let start = Instant::now();
    let n = 21;
    let horizon = 0.35;
    let plan = match build_gait(&config.gait, &config.robot) {
        Ok(p) => p,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    let seed = match seed_from_simulation(&walk.trajectory, n, horizon) {
        Ok(s) => s,
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    let dynamics = HromDynamics {
        robot: &config.robot,
        ground: &config.ground,
        plan: &plan,
        gains: config.sim.joint_gains,
        free_joint_inputs: false,
    };
    let spec = ProblemSpec {
        n,
        t_f_bounds: (0.3, 10.0),
        initial_state: SVector::from_column_slice(seed.state(0).as_slice()),
        reference_attitude: config.sim.reference_attitude,
        v_ref: config.gait.forward_velocity,
        terminal: TerminalConditions {
            attitude: true,
            lateral: true,
            displacement: false,
        },
        free_joint_inputs: false,
    };
    let weights = CostWeights::new(config.opt.q_att, config.opt.r_thrust, config.opt.penalize);
    let warm_cost = trajopt::cost(&seed, &weights, &spec.reference_attitude, &config.robot);
    let opts = SolveOptions {
        tol_c: 1e-3,
        tol_g: 1e-3,
        max_outer: 8,
        max_inner: 40,
        ..Default::default()
    };
    let outcome = trajopt::nlp_solve(&spec, &weights, &dynamics, &seed, &opts);
    let elapsed = start.elapsed().as_secs_f64();
    let (cost, c_norm) = match &outcome {
        Ok((_, report)) => (report.cost, report.constraint_inf_norm),
        Err(
            trajopt::TrajoptError::MaxIter { report, .. }
            | trajopt::TrajoptError::LineSearchFail { report, .. }
            | trajopt::TrajoptError::NonFinite { report, .. },
        ) => (report.cost, report.constraint_inf_norm),
        Err(e) => return CheckResult::new(name, false, e.to_string()),
    };
    let passed = c_norm < 1e-3 && cost <= warm_cost * (1.0 + 1e-9) && elapsed < 600.0;
    CheckResult::new(
        name,
        passed,
        format!(
            "n = {n}, horizon {horizon} s: |c|inf {c_norm:.2e} (< 1e-3), cost {cost:.4} vs warm start {warm_cost:.4}, runtime {elapsed:.1} s (< 600 s)"
        ),
    )
}

fn check_csv_determinism(config: &RunConfig) -> CheckResult {
    let name = "csv_determinism";
    let mut short = config.clone();
    short.sim.duration = 0.5;
    short.gait.duration = config.gait.duration.min(3.5);
    let run = |cfg: &RunConfig| -> Result<String, String> {
        let plan = build_gait(&cfg.gait, &cfg.robot).map_err(|e| e.to_string())?;
        let (initial, _) =
            initial_state_from_plan(&cfg.robot, &plan, &cfg.ground).map_err(|e| e.to_string())?;
        let result = simulate(&cfg.sim, &initial, &plan, &cfg.robot, &cfg.ground);
        Ok(result.trajectory.to_csv())
    };
    match (run(&short), run(&short)) {
        (Ok(a), Ok(b)) => {
            let identical = a == b;
            CheckResult::new(
                name,
                identical,
                format!(
                    "two runs, {} bytes each, byte-identical: {identical}",
                    a.len()
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => CheckResult::new(name, false, e),
    }
}

/// Run the acceptance checks, optionally filtered by a substring of the
/// check name.
pub fn run_checks(config: &RunConfig, filter: Option<&str>) -> Vec<CheckResult> {
    let wants = |name: &str| filter.map_or(true, |f| name.contains(f));
    let needs_walk = [
        "walking_displacement",
        "walking_attitude",
        "thrust_budget",
        "stance_slip",
        "collocation_smoke",
    ]
    .iter()
    .any(|n| wants(n));
    let walk = if needs_walk {
        run_walk(config)
    } else {
        Err("not requested".into())
    };

    let mut out = Vec::new();
    if wants("walking_displacement") {
        out.push(check_walking_displacement(config, &walk));
    }
    if wants("walking_attitude") {
        out.push(check_walking_attitude(&walk));
    }
    if wants("thrust_budget") {
        out.push(check_thrust_budget(config, &walk));
    }
    if wants("stance_slip") {
        out.push(check_stance_slip(config, &walk));
    }
    if wants("energy_conservation") {
        out.push(check_energy_conservation(config));
    }
    if wants("contact_grf_formula") {
        out.push(check_grf_formula(&config.ground));
    }
    if wants("kinematics") {
        out.push(check_kinematics(config));
    }
    if wants("interpolants") {
        out.push(check_interpolants(config));
    }
    if wants("optimizer_double_integrator") {
        out.push(check_double_integrator());
    }
    if wants("collocation_smoke") {
        out.push(check_collocation_smoke(config, &walk));
    }
    if wants("csv_determinism") {
        out.push(check_csv_determinism(config));
    }
    out
}

/// Format results as the pass/fail table printed by `hrom verify`.
pub fn format_table(results: &[CheckResult]) -> String {
    let mut out = String::new();
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in results {
        out.push_str(&format!(
            "{:width$}  {}  {}\n",
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail,
            width = width
        ));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    out.push_str(&format!(
        "{} checks, {} passed, {} failed\n",
        results.len(),
        results.len() - failed,
        failed
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_selects_subset() {
        let config = RunConfig::default();
        let results = run_checks(&config, Some("contact"));
        assert_eq!(results.len(), 1);
        assert_eq!(results[0].name, "contact_grf_formula");
        assert!(results[0].passed, "{}", results[0].detail);
    }

    #[test]
    fn tampered_ground_fails_grf_check() {
        let mut config = RunConfig::default();
        config.ground.k_gz = 1.0; // sabotage: nearly no ground stiffness
        let results = run_checks(&config, Some("grf"));
        assert!(!results[0].passed);
    }

    #[test]
    fn fast_checks_pass_on_defaults() {
        let config = RunConfig::default();
        for name in ["energy_conservation", "kinematics", "interpolants"] {
            let results = run_checks(&config, Some(name));
            assert_eq!(results.len(), 1);
            assert!(results[0].passed, "{}: {}", name, results[0].detail);
        }
    }

    #[test]
    fn table_reports_counts() {
        let results = vec![
            CheckResult::new("a", true, "ok".into()),
            CheckResult::new("b", false, "bad".into()),
        ];
        let table = format_table(&results);
        assert!(table.contains("PASS"));
        assert!(table.contains("FAIL"));
        assert!(table.contains("2 checks, 1 passed, 1 failed"));
    }
}
