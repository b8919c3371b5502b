//! Augmented-Lagrangian solver for equality-constrained problems with box
//! bounds and an optional extra projection.
//!
//! The outer loop maintains multiplier estimates `λ` and a penalty `ρ` for
//! the equality constraints; each inner loop minimizes
//! `F(y) + λᵀc(y) + (ρ/2)‖c(y)‖²` with a projected L-BFGS iteration.
//! Objective gradients use central finite differences with step
//! `max(1e-6, 1e-7·|y_i|)`; the constraint Jacobian either comes from the
//! problem (which can exploit the collocation stencil) or falls back to
//! dense finite differences.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::TrajoptError;

/// Equality-constrained problem with box bounds over a flat variable vector.
pub struct Nlp<'a> {
    pub dim: usize,
    pub n_eq: usize,
    pub objective: Box<dyn Fn(&DVector<f64>) -> Result<f64, TrajoptError> + 'a>,
    pub equality: Box<dyn Fn(&DVector<f64>) -> Result<DVector<f64>, TrajoptError> + 'a>,
    /// Constraint Jacobian; when absent the solver differences `equality`
    /// column by column.
    pub eq_jacobian: Option<Box<dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>, TrajoptError> + 'a>>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    /// Extra feasibility projection applied after the box clamp (e.g. the
    /// per-node fan-force clip).
    pub extra_project: Option<Box<dyn Fn(&mut DVector<f64>) + 'a>>,
    /// Per-row constraint scaling used inside the augmented Lagrangian;
    /// tolerances and reports always use the raw residuals.
    pub eq_scale: Option<DVector<f64>>,
}

impl Nlp<'_> {
    fn project(&self, y: &mut DVector<f64>) {
        for i in 0..self.dim {
            y[i] = y[i].clamp(self.lower[i], self.upper[i]);
        }
        if let Some(p) = &self.extra_project {
            p(y);
        }
    }

    fn is_pinned(&self, i: usize) -> bool {
        self.lower[i] >= self.upper[i]
    }
}

/// Solver tolerances and iteration caps.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Constraint infinity-norm tolerance.
    pub tol_c: f64,
    /// Projected-gradient stationarity tolerance.
    pub tol_g: f64,
    /// Outer iteration cap.
    pub max_outer: usize,
    /// Inner iteration cap per outer iteration.
    pub max_inner: usize,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_penalty: f64,
    pub verbose: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_c: 1e-4,
            tol_g: 1e-3,
            max_outer: 200,
            max_inner: 40,
            initial_penalty: 10.0,
            penalty_growth: 10.0,
            max_penalty: 1e8,
            verbose: false,
        }
    }
}

/// Terminal solver state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    LineSearchFail,
    NonFinite,
}

/// Solve summary, serializable for report files.
#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub status: SolveStatus,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub objective_evals: usize,
    pub constraint_evals: usize,
    pub cost: f64,
    pub constraint_inf_norm: f64,
    pub stationarity: f64,
    pub variables: usize,
    pub equality_constraints: usize,
}

use super::solver_fd_step as fd_step;

struct Counters {
    obj: usize,
    con: usize,
}

/// Central-difference gradient of the objective, skipping pinned variables.
fn objective_gradient(
    nlp: &Nlp,
    y: &DVector<f64>,
    counters: &mut Counters,
) -> Result<DVector<f64>, TrajoptError> {
    let mut grad = DVector::zeros(nlp.dim);
    let mut yp = y.clone();
    for i in 0..nlp.dim {
        if nlp.is_pinned(i) {
            continue;
        }
        let h = fd_step(y[i]);
        yp[i] = y[i] + h;
        let fp = (nlp.objective)(&yp)?;
        yp[i] = y[i] - h;
        let fm = (nlp.objective)(&yp)?;
        yp[i] = y[i];
        counters.obj += 2;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Ok(grad)
}

fn dense_eq_jacobian(
    nlp: &Nlp,
    y: &DVector<f64>,
    counters: &mut Counters,
) -> Result<DMatrix<f64>, TrajoptError> {
    let mut jac = DMatrix::zeros(nlp.n_eq, nlp.dim);
    let mut yp = y.clone();
    for i in 0..nlp.dim {
        if nlp.is_pinned(i) {
            continue;
        }
        let h = fd_step(y[i]);
        yp[i] = y[i] + h;
        let cp = (nlp.equality)(&yp)?;
        yp[i] = y[i] - h;
        let cm = (nlp.equality)(&yp)?;
        yp[i] = y[i];
        counters.con += 2;
        jac.column_mut(i).copy_from(&((cp - cm) / (2.0 * h)));
    }
    Ok(jac)
}

/// L-BFGS two-loop recursion over the stored (s, y) pairs, seeded with a
/// diagonal initial inverse Hessian.
fn lbfgs_direction(
    grad: &DVector<f64>,
    s_hist: &[DVector<f64>],
    y_hist: &[DVector<f64>],
    h0_diag: &DVector<f64>,
) -> DVector<f64> {
    let mut q = grad.clone();
    let m = s_hist.len();
    let mut alphas = vec![0.0; m];
    for i in (0..m).rev() {
        let rho = 1.0 / y_hist[i].dot(&s_hist[i]);
        alphas[i] = rho * s_hist[i].dot(&q);
        q -= &y_hist[i] * alphas[i];
    }
    q.component_mul_assign(h0_diag);
    for i in 0..m {
        let rho = 1.0 / y_hist[i].dot(&s_hist[i]);
        let beta = rho * y_hist[i].dot(&q);
        q += &s_hist[i] * (alphas[i] - beta);
    }
    -q
}

/// Solver output: the returned iterate (best seen), the raw final iterate,
/// and the report describing the returned one.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub best: DVector<f64>,
    pub last: DVector<f64>,
    pub report: SolverReport,
}

/// Minimize the problem from `y0`. Always returns the best iterate found
/// together with the report; the caller decides how to treat non-converged
/// statuses.
pub fn solve(nlp: &Nlp, y0: &DVector<f64>, opts: &SolveOptions) -> SolveOutput {
    let mut counters = Counters { obj: 0, con: 0 };
    let mut y = y0.clone();
    nlp.project(&mut y);

    let fail_report = |status: SolveStatus, counters: &Counters| SolverReport {
        status,
        outer_iters: 0,
        inner_iters: 0,
        objective_evals: counters.obj,
        constraint_evals: counters.con,
        cost: f64::NAN,
        constraint_inf_norm: f64::NAN,
        stationarity: f64::NAN,
        variables: nlp.dim,
        equality_constraints: nlp.n_eq,
    };

    let (mut cost, mut c) = match ((nlp.objective)(&y), (nlp.equality)(&y)) {
        (Ok(f), Ok(c)) if f.is_finite() && c.iter().all(|v| v.is_finite()) => (f, c),
        _ => {
            let report = fail_report(SolveStatus::NonFinite, &counters);
            return SolveOutput {
                best: y.clone(),
                last: y,
                report,
            };
        }
    };
    counters.obj += 1;
    counters.con += 1;
    let scale = nlp
        .eq_scale
        .clone()
        .unwrap_or_else(|| DVector::from_element(nlp.n_eq, 1.0));
    let scaled = |c: &DVector<f64>| c.component_mul(&scale);

    let mut lambda = DVector::zeros(nlp.n_eq);
    // Calibrate the initial penalty to the cost scale: a near-feasible warm
    // start needs a stiff penalty from the first iteration or the inner
    // minimizer will trade feasibility for cost and have to claw it back.
    let cs0 = scaled(&c);
    let f_scale = cost.abs().max(1.0);
    let infeas0 = (0.5 * cs0.norm_squared()).max(1e-3 * f_scale);
    let mut rho =
        (opts.initial_penalty * f_scale / infeas0).clamp(opts.initial_penalty, opts.max_penalty);
    let mut c_norm = c.amax();
    let mut prev_outer_norm = f64::INFINITY;

    // Best iterate: among feasible iterates (constraint norm under tol_c)
    // the cheapest wins; otherwise feasibility first.
    let key_of = |c_norm: f64, cost: f64| {
        if c_norm < opts.tol_c {
            (0.0, cost)
        } else {
            (c_norm, cost)
        }
    };
    let mut best = y.clone();
    let mut best_key = key_of(c_norm, cost);
    let mut best_raw = (c_norm, cost);

    let mut total_inner = 0;
    let mut feasible_stall = 0;
    let mut step_cap = 1.0;
    // Inner stationarity target, tightened whenever an inner loop converges
    // without delivering feasibility (standard AL forcing sequence).
    let mut inner_tol = opts.tol_g;
    let mut stationarity = f64::INFINITY;
    let mut dead_outers = 0;
    let mut status = SolveStatus::MaxIter;
    let mut outer_done = 0;

    'outer: for outer in 0..opts.max_outer {
        outer_done = outer + 1;
        // Inner: projected L-BFGS on the augmented Lagrangian over the
        // scaled residuals.
        let aug = |f: f64, c: &DVector<f64>| {
            let cs = scaled(c);
            f + lambda.dot(&cs) + 0.5 * rho * cs.norm_squared()
        };
        let mut al = aug(cost, &c);
        let mut s_hist: Vec<DVector<f64>> = Vec::new();
        let mut y_hist: Vec<DVector<f64>> = Vec::new();
        let mut grad_prev: Option<DVector<f64>> = None;
        let mut y_prev: Option<DVector<f64>> = None;
        let mut moved = false;
        let mut hit_stationarity = false;

        for _ in 0..opts.max_inner {
            let jac = match &nlp.eq_jacobian {
                Some(j) => match j(&y) {
                    Ok(m) => m,
                    Err(_) => break,
                },
                None => match dense_eq_jacobian(nlp, &y, &mut counters) {
                    Ok(m) => m,
                    Err(_) => break,
                },
            };
            let grad_f = match objective_gradient(nlp, &y, &mut counters) {
                Ok(g) => g,
                Err(_) => break,
            };
            let cs = scaled(&c);
            let mut weights = &lambda + &cs * rho;
            weights.component_mul_assign(&scale);
            let grad = &grad_f + jac.transpose() * weights;

            // Diagonal preconditioner from the Gauss-Newton curvature of the
            // penalty term: contact stiffness and tracking gains make the
            // landscape wildly anisotropic without it.
            let mut h0 = DVector::from_element(nlp.dim, 0.0);
            for i in 0..nlp.dim {
                if nlp.is_pinned(i) {
                    continue;
                }
                let mut colsq = 0.0;
                for r in 0..nlp.n_eq {
                    let v = jac[(r, i)] * scale[r];
                    colsq += v * v;
                }
                h0[i] = 1.0 / (rho * colsq + 1.0);
            }

            // Preconditioned projected-gradient stationarity.
            let mut probe = &y - &grad.component_mul(&h0);
            nlp.project(&mut probe);
            stationarity = (&probe - &y).amax();
            if stationarity < inner_tol {
                hit_stationarity = true;
                break;
            }

            // L-BFGS memory update.
            if let (Some(gp), Some(yp)) = (&grad_prev, &y_prev) {
                let s = &y - yp;
                let dg = &grad - gp;
                if s.dot(&dg) > 1e-12 * s.norm() * dg.norm() {
                    s_hist.push(s);
                    y_hist.push(dg);
                    if s_hist.len() > 10 {
                        s_hist.remove(0);
                        y_hist.remove(0);
                    }
                }
            }
            let mut dir = lbfgs_direction(&grad, &s_hist, &y_hist, &h0);
            if dir.dot(&grad) > -1e-12 * dir.norm() * grad.norm() {
                dir = -grad.component_mul(&h0);
            }

            // Backtracking Armijo line search on the projected step, with
            // an adaptive cap on the first trial step length.
            let dir_norm = dir.amax();
            let mut alpha = if dir_norm > step_cap {
                step_cap / dir_norm
            } else {
                1.0
            };
            let mut accepted = false;
            let alpha_first = alpha;
            for _ in 0..40 {
                let mut trial = &y + &dir * alpha;
                nlp.project(&mut trial);
                let step = &trial - &y;
                if step.amax() < 1e-14 {
                    break;
                }
                let decrease = grad.dot(&step);
                let (ft, ct) = match ((nlp.objective)(&trial), (nlp.equality)(&trial)) {
                    (Ok(f), Ok(c)) if f.is_finite() && c.iter().all(|v| v.is_finite()) => (f, c),
                    _ => {
                        counters.obj += 1;
                        counters.con += 1;
                        alpha *= 0.5;
                        continue;
                    }
                };
                counters.obj += 1;
                counters.con += 1;
                let al_t = aug(ft, &ct);
                if al_t <= al + 1e-4 * decrease.min(0.0) {
                    y_prev = Some(y.clone());
                    grad_prev = Some(grad.clone());
                    y = trial;
                    cost = ft;
                    c = ct;
                    al = al_t;
                    accepted = true;
                    moved = true;
                    if alpha == alpha_first {
                        step_cap = (step_cap * 2.0).min(1e3);
                    }
                    break;
                }
                alpha *= 0.5;
            }
            total_inner += 1;
            if !accepted {
                step_cap = (step_cap * 0.25).max(1e-8);
                break;
            }
        }

        c_norm = c.amax();
        let key = key_of(c_norm, cost);
        let improved_best = key < best_key;
        if improved_best {
            best_key = key;
            best_raw = (c_norm, cost);
            best = y.clone();
        }
        if opts.verbose {
            eprintln!(
                "outer {outer:3}: cost {cost:.6e}  |c|inf {c_norm:.3e}  stat {stationarity:.3e}  rho {rho:.1e}"
            );
        }
        if c_norm < opts.tol_c && stationarity < opts.tol_g {
            status = SolveStatus::Converged;
            break 'outer;
        }
        // A feasible incumbent that stops improving is also a terminal
        // state: on nonsmooth dynamics the stationarity measure can stay
        // noisy long after progress has ended.
        if best_key.0 == 0.0 && !improved_best {
            feasible_stall += 1;
            if feasible_stall >= 4 {
                status = SolveStatus::Converged;
                break 'outer;
            }
        } else {
            feasible_stall = 0;
        }
        if hit_stationarity && c_norm >= opts.tol_c {
            // The subproblem converged but feasibility lags: demand more of
            // the next inner loop.
            inner_tol = (inner_tol * 0.3).max(opts.tol_g * 1e-6);
            dead_outers = 0;
        } else if !moved {
            dead_outers += 1;
            if dead_outers >= 3 {
                status = SolveStatus::LineSearchFail;
                break 'outer;
            }
        } else {
            dead_outers = 0;
        }

        lambda += scaled(&c) * rho;
        // Grow the penalty only while feasibility is actually lacking;
        // inflating it further just ill-conditions the inner problem.
        if c_norm > opts.tol_c && c_norm > 0.25 * prev_outer_norm {
            rho = (rho * opts.penalty_growth).min(opts.max_penalty);
        }
        prev_outer_norm = c_norm;
    }

    // Prefer the best iterate seen if the final point regressed, and let the
    // report describe the iterate actually returned.
    let (final_y, final_cost, final_norm) = if key_of(c_norm, cost) <= best_key {
        (y.clone(), cost, c_norm)
    } else {
        (best, best_raw.1, best_raw.0)
    };
    let report = SolverReport {
        status,
        outer_iters: outer_done,
        inner_iters: total_inner,
        objective_evals: counters.obj,
        constraint_evals: counters.con,
        cost: final_cost,
        constraint_inf_norm: final_norm,
        stationarity,
        variables: nlp.dim,
        equality_constraints: nlp.n_eq,
    };
    SolveOutput {
        best: final_y,
        last: y,
        report,
    }
}
