//! Command-line front end: `simulate` runs the closed-loop walking
//! simulation and writes trajectory and plot data, `optimize` runs the
//! collocation solver from a fresh warm start, `verify` executes the
//! acceptance checks.
//!
//! Exit codes: 0 success, 1 verify failure, 2 configuration error,
//! 3 simulation abort (partial outputs retained), 4 optimizer failure
//! (best-iterate outputs retained).

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use hrom::config::{OptProblem, RunConfig};
use hrom::contact::GroundForce;
use hrom::dynamics::{dynamics_eval, wrench_allocation, ControlInput, Wrench};
use hrom::gait::build_gait;
use hrom::model::FullState;
use hrom::sim::{initial_state_from_plan, simulate, TrajRow, Trajectory};
use hrom::trajopt::{
    self, oracles, seed_from_simulation, CostWeights, DecisionVector, HromDynamics, ProblemSpec,
    SolveOptions, SolverReport, TrajoptError,
};
use hrom::verify;

#[derive(Parser)]
#[command(
    name = "hrom",
    about = "Reduced-order thruster-assisted quadruped toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the forward simulation and export trajectory and plot data.
    Simulate {
        /// Configuration file.
        config: PathBuf,
        /// Output directory (default: $HROM_OUT_DIR or the config out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the integration step, s.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the simulation duration, s.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Warm-start the collocation problem from a simulation and solve it.
    Optimize {
        /// Configuration file.
        config: PathBuf,
        /// Override the collocation grid size.
        #[arg(long)]
        n: Option<usize>,
        /// Output directory (default: $HROM_OUT_DIR or the config out_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Verify {
        /// Only run checks whose name contains this substring.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Simulate {
            config,
            out,
            dt,
            duration,
        } => cmd_simulate(&config, out, dt, duration),
        Command::Optimize { config, n, out } => cmd_optimize(&config, n, out),
        Command::Verify { filter } => cmd_verify(filter.as_deref()),
    }
}

fn resolve_out_dir(cli_out: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    if let Some(dir) = cli_out {
        return dir;
    }
    match std::env::var_os("HROM_OUT_DIR") {
        Some(root) => PathBuf::from(root).join(&config.out_dir),
        None => PathBuf::from(&config.out_dir),
    }
}

fn config_fail(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("configuration error: {err}");
    ExitCode::from(2)
}

fn io_fail(err: impl std::fmt::Display) -> ExitCode {
    eprintln!("io error: {err}");
    ExitCode::from(3)
}

fn cmd_simulate(
    config_path: &Path,
    out: Option<PathBuf>,
    dt: Option<f64>,
    duration: Option<f64>,
) -> ExitCode {
    let mut config = match RunConfig::from_file(config_path) {
        Ok(c) => c,
        Err(e) => return config_fail(e),
    };
    if let Some(dt) = dt {
        config.sim.dt = dt;
    }
    if let Some(duration) = duration {
        config.sim.duration = duration;
    }
    if let Err(e) = config.validate() {
        return config_fail(e);
    }
    let plan = match build_gait(&config.gait, &config.robot) {
        Ok(p) => p,
        Err(e) => return config_fail(e),
    };
    let (initial, penetration) = match initial_state_from_plan(&config.robot, &plan, &config.ground)
    {
        Ok(v) => v,
        Err(e) => return config_fail(e),
    };
    let result = simulate(&config.sim, &initial, &plan, &config.robot, &config.ground);

    let dir = resolve_out_dir(out, &config);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return io_fail(e);
    }
    if let Err(e) = result.trajectory.write_csv(&dir.join("trajectory.csv")) {
        return io_fail(e);
    }
    if let Err(e) = result.trajectory.write_plot_files(&dir, &config.robot) {
        return io_fail(e);
    }
    let meta = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": "simulate",
        "config": config,
        "initial_state": initial,
        "initial_penetration_m": penetration,
        "rows": result.trajectory.rows.len(),
        "abort": result.abort.as_ref().map(|a| a.error.to_string()),
    });
    if let Err(e) = std::fs::write(
        dir.join("meta.json"),
        serde_json::to_string_pretty(&meta).expect("meta serializes"),
    ) {
        return io_fail(e);
    }

    match result.abort {
        None => {
            println!(
                "simulated {:.3} s ({} rows), forward displacement {:.4} m -> {}",
                result.trajectory.duration(),
                result.trajectory.rows.len(),
                result.trajectory.forward_displacement(),
                dir.display()
            );
            ExitCode::SUCCESS
        }
        Some(abort) => {
            eprintln!("simulation aborted at t = {}: {}", abort.t, abort.error);
            ExitCode::from(3)
        }
    }
}

/// Node-sampled solution in the trajectory schema: contact forces are
/// re-evaluated from the dynamics at each node to fill the GRF columns, and
/// fan forces from the allocation of the node wrench.
fn solution_to_trajectory(solution: &DecisionVector, config: &RunConfig) -> Trajectory {
    let n = solution.n();
    let h = solution.t_f / (n - 1) as f64;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let state = FullState::unflatten(&nalgebra::SVector::from_column_slice(
            solution.state(i).as_slice(),
        ));
        let u = solution.control(i);
        let wrench = Wrench {
            force: nalgebra::Vector3::new(u[0], u[1], u[2]),
            moment: nalgebra::Vector3::new(u[3], u[4], u[5]),
        };
        let mut joints = nalgebra::SVector::<f64, 12>::zeros();
        for j in 0..12 {
            joints[j] = u[6 + j];
        }
        let input = ControlInput {
            wrench,
            joint_accels: joints,
        };
        let grf = dynamics_eval(&state, &input, &config.robot, &config.ground)
            .map(|e| e.grf)
            .unwrap_or([GroundForce::zero(); 4]);
        let thrusters = wrench_allocation(&wrench, &config.robot).forces;
        rows.push(TrajRow {
            t: i as f64 * h,
            state,
            input,
            grf,
            thrusters,
        });
    }
    Trajectory { rows }
}

fn write_report(
    dir: &Path,
    report: &SolverReport,
    extras: serde_json::Value,
) -> Result<(), std::io::Error> {
    let mut value = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "report": report,
    });
    if let (Some(obj), Some(extra)) = (value.as_object_mut(), extras.as_object()) {
        for (k, v) in extra {
            obj.insert(k.clone(), v.clone());
        }
    }
    std::fs::write(
        dir.join("solver_report.json"),
        serde_json::to_string_pretty(&value).expect("report serializes"),
    )
}

fn cmd_optimize(config_path: &Path, n_override: Option<usize>, out: Option<PathBuf>) -> ExitCode {
    let mut config = match RunConfig::from_file(config_path) {
        Ok(c) => c,
        Err(e) => return config_fail(e),
    };
    if let Some(n) = n_override {
        config.opt.n = n;
    }
    if config.opt.n < 2 {
        return config_fail(format!("opt.n must be at least 2, got {}", config.opt.n));
    }
    let dir = resolve_out_dir(out, &config);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return io_fail(e);
    }
    let opts = SolveOptions {
        tol_c: config.opt.tol_c,
        tol_g: config.opt.tol_g,
        max_outer: config.opt.max_iter,
        max_inner: config.opt.inner_iters,
        ..Default::default()
    };

    match config.opt.problem {
        OptProblem::DoubleIntegrator => {
            let n = config.opt.n;
            let problem = oracles::double_integrator_problem(n);
            let seed = oracles::double_integrator_seed(n);
            let (solution, _, report) = match problem.solve(&seed, &opts) {
                Ok(r) => r,
                Err(e) => return config_fail(e),
            };
            let mut csv = String::from("t,x,v,u\n");
            let h = solution.t_f / (n - 1) as f64;
            for i in 0..n {
                let x = solution.state(i);
                let u = solution.control(i);
                csv.push_str(&format!("{},{},{},{}\n", i as f64 * h, x[0], x[1], u[0]));
            }
            if let Err(e) = std::fs::write(dir.join("solution.csv"), csv) {
                return io_fail(e);
            }
            let extras = serde_json::json!({
                "problem": "double_integrator",
                "analytic_cost": oracles::DOUBLE_INTEGRATOR_COST,
                "config": config,
            });
            if let Err(e) = write_report(&dir, &report, extras) {
                return io_fail(e);
            }
            println!(
                "double integrator: cost {:.5} (analytic 12), |c|inf {:.2e} -> {}",
                report.cost,
                report.constraint_inf_norm,
                dir.display()
            );
            if report.status == trajopt::SolveStatus::Converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("solver did not converge: {:?}", report.status);
                ExitCode::from(4)
            }
        }
        OptProblem::Hrom => {
            let plan = match build_gait(&config.gait, &config.robot) {
                Ok(p) => p,
                Err(e) => return config_fail(e),
            };
            let (initial, _) = match initial_state_from_plan(&config.robot, &plan, &config.ground) {
                Ok(v) => v,
                Err(e) => return config_fail(e),
            };
            let sim_result = simulate(&config.sim, &initial, &plan, &config.robot, &config.ground);
            if let Some(abort) = &sim_result.abort {
                eprintln!("warm-start simulation aborted: {}", abort.error);
                return ExitCode::from(3);
            }
            let horizon = config.opt.horizon.unwrap_or(config.sim.duration);
            let seed = match seed_from_simulation(&sim_result.trajectory, config.opt.n, horizon) {
                Ok(s) => s,
                Err(e) => return config_fail(e),
            };
            let dynamics = HromDynamics {
                robot: &config.robot,
                ground: &config.ground,
                plan: &plan,
                gains: config.sim.joint_gains,
                free_joint_inputs: config.opt.free_joint_inputs,
            };
            let spec = ProblemSpec {
                n: config.opt.n,
                t_f_bounds: config.opt.tf_bounds,
                initial_state: nalgebra::SVector::from_column_slice(seed.state(0).as_slice()),
                reference_attitude: config.sim.reference_attitude,
                v_ref: config.gait.forward_velocity,
                terminal: config.opt.terminal,
                free_joint_inputs: config.opt.free_joint_inputs,
            };
            let weights =
                CostWeights::new(config.opt.q_att, config.opt.r_thrust, config.opt.penalize);
            let warm_cost = trajopt::cost(&seed, &weights, &spec.reference_attitude, &config.robot);

            let outcome = trajopt::nlp_solve(&spec, &weights, &dynamics, &seed, &opts);
            let (solution, report, code) = match outcome {
                Ok((solution, report)) => (solution, report, ExitCode::SUCCESS),
                Err(
                    TrajoptError::MaxIter { best, report }
                    | TrajoptError::LineSearchFail { best, report }
                    | TrajoptError::NonFinite { best, report },
                ) => {
                    eprintln!("solver did not converge: {:?}", report.status);
                    (*best, *report, ExitCode::from(4))
                }
                Err(e) => return config_fail(e),
            };
            let trajectory = solution_to_trajectory(&solution, &config);
            if let Err(e) = trajectory.write_csv(&dir.join("solution.csv")) {
                return io_fail(e);
            }
            let extras = serde_json::json!({
                "problem": "hrom",
                "warm_start_cost": warm_cost,
                "horizon_s": horizon,
                "t_f": solution.t_f,
                "config": config,
            });
            if let Err(e) = write_report(&dir, &report, extras) {
                return io_fail(e);
            }
            println!(
                "collocation: cost {:.4} (warm start {:.4}), |c|inf {:.2e}, t_f {:.3} s -> {}",
                report.cost,
                warm_cost,
                report.constraint_inf_norm,
                solution.t_f,
                dir.display()
            );
            code
        }
    }
}

fn cmd_verify(filter: Option<&str>) -> ExitCode {
    let config = RunConfig::default();
    let results = verify::run_checks(&config, filter);
    print!("{}", verify::format_table(&results));
    if results.iter().all(|r| r.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
