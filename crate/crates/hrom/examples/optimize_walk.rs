//! Collocation on the walking plant: warm-start from the closed-loop
//! simulation, restore feasibility on the grid, and polish with the
//! augmented-Lagrangian solver.

use hrom::contact::GroundParams;
use hrom::gait::{build_gait, GaitParams, JointGains};
use hrom::model::{EulerAngles, RobotParams};
use hrom::sim::{simulate, standing_start, SimConfig};
use hrom::trajopt::{
    cost, nlp_solve, seed_from_simulation, CostWeights, HromDynamics, ProblemSpec, SolveOptions,
    TerminalConditions,
};

fn main() {
    let robot = RobotParams::default();
    let ground = GroundParams::default();
    let gait = GaitParams::default();
    let plan = build_gait(&gait, &robot).expect("default gait is feasible");
    let sim_config = SimConfig::default();
    let (initial, _) = standing_start(&robot, gait.body_height, &ground);

    println!("running the warm-start simulation ...");
    let sim = simulate(&sim_config, &initial, &plan, &robot, &ground);
    assert!(sim.abort.is_none());

    let n = 21;
    let horizon = 0.35;
    let seed = seed_from_simulation(&sim.trajectory, n, horizon).unwrap();
    let weights = CostWeights::default();
    let reference = EulerAngles::zero();
    let warm_cost = cost(&seed, &weights, &reference, &robot);
    println!("warm start: {n} nodes over {horizon} s, cost {warm_cost:.4}");

    let dynamics = HromDynamics {
        robot: &robot,
        ground: &ground,
        plan: &plan,
        gains: JointGains::default(),
        free_joint_inputs: false,
    };
    let spec = ProblemSpec {
        n,
        t_f_bounds: (0.3, 10.0),
        initial_state: nalgebra::SVector::from_column_slice(seed.state(0).as_slice()),
        reference_attitude: reference,
        v_ref: gait.forward_velocity,
        terminal: TerminalConditions {
            attitude: true,
            lateral: true,
            displacement: false,
        },
        free_joint_inputs: false,
    };
    let opts = SolveOptions {
        tol_c: 1e-3,
        tol_g: 1e-3,
        max_outer: 8,
        max_inner: 40,
        ..Default::default()
    };
    match nlp_solve(&spec, &weights, &dynamics, &seed, &opts) {
        Ok((solution, report)) => {
            println!(
                "solved: cost {:.4} (warm {warm_cost:.4}), |c|inf {:.2e}, t_f {:.3} s, {} inner iterations",
                report.cost, report.constraint_inf_norm, solution.t_f, report.inner_iters
            );
            let total: f64 = (0..n)
                .map(|i| {
                    let u = solution.control(i);
                    u.rows(0, 6).amax()
                })
                .fold(0.0, f64::max);
            println!("largest wrench component over the horizon: {total:.3}");
        }
        Err(e) => {
            eprintln!("solve failed: {e}");
            std::process::exit(4);
        }
    }
}
