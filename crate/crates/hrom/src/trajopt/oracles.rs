//! Reference optimal-control problems with known solutions, used by the
//! self-check suite and the CLI.

use nalgebra::DVector;

use super::{CollocationProblem, DecisionVector, Transcription};

/// Analytic minimum of the rest-to-rest double-integrator effort problem.
pub const DOUBLE_INTEGRATOR_COST: f64 = 12.0;

/// Rest-to-rest unit translation of a double integrator in unit time,
/// minimizing the integral of u². The optimum is `u(t) = 6 - 12 t` with
/// cost 12, exactly representable by the interpolants.
pub fn double_integrator_problem(n: usize) -> CollocationProblem<'static> {
    let trans = Transcription {
        nx: 2,
        nu: 1,
        n,
        dynamics: Box::new(|_, x, u| Ok(DVector::from_vec(vec![x[1], u[0]]))),
    };
    let dim = n * 3 + 1;
    let mut lower = DVector::from_element(dim, f64::NEG_INFINITY);
    let mut upper = DVector::from_element(dim, f64::INFINITY);
    // Fixed unit final time.
    lower[dim - 1] = 1.0;
    upper[dim - 1] = 1.0;
    CollocationProblem {
        trans,
        boundary: Box::new(move |dv| {
            let x0 = dv.state(0);
            let xn = dv.state(n - 1);
            DVector::from_vec(vec![x0[0], x0[1], xn[0] - 1.0, xn[1]])
        }),
        n_boundary: 4,
        cost: Box::new(move |dv| {
            // Simpson-consistent quadrature of u² under the linear control
            // interpolant.
            let h = dv.t_f / (n - 1) as f64;
            let mut j = 0.0;
            for k in 0..n - 1 {
                let a = dv.control(k)[0];
                let b = dv.control(k + 1)[0];
                j += h / 6.0 * (a * a + (a + b) * (a + b) + b * b);
            }
            j
        }),
        lower,
        upper,
        extra_project: None,
    }
}

/// Straight-line warm start for [`double_integrator_problem`].
pub fn double_integrator_seed(n: usize) -> DecisionVector {
    let mut dv = DecisionVector::zeros(2, 1, n, 1.0);
    for i in 0..n {
        let s = i as f64 / (n - 1) as f64;
        dv.set_state(i, &DVector::from_vec(vec![s, 1.0]));
    }
    dv
}
