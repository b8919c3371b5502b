//! Solve the reference minimum-effort problem and compare against the
//! analytic optimum u(t) = 6 - 12 t with cost 12.

use hrom::trajopt::oracles::{
    double_integrator_problem, double_integrator_seed, DOUBLE_INTEGRATOR_COST,
};
use hrom::trajopt::SolveOptions;

fn main() {
    let n = 11;
    let problem = double_integrator_problem(n);
    let seed = double_integrator_seed(n);
    let opts = SolveOptions {
        max_outer: 80,
        max_inner: 200,
        tol_c: 1e-4,
        tol_g: 1e-5,
        ..Default::default()
    };
    let (solution, _, report) = problem.solve(&seed, &opts).unwrap();
    println!(
        "status {:?}: cost {:.6} (analytic {DOUBLE_INTEGRATOR_COST}), |c|inf {:.2e}",
        report.status, report.cost, report.constraint_inf_norm
    );
    println!("\n  t      u        analytic");
    for i in 0..n {
        let t = i as f64 / (n - 1) as f64;
        println!(
            "  {t:.1}   {:>7.4}   {:>7.4}",
            solution.control(i)[0],
            6.0 - 12.0 * t
        );
    }
}
