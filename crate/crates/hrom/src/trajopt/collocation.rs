//! Collocation transcription on a uniform grid with a free final time.
//!
//! A decision vector stacks `n` node states, `n` node controls, and `t_f`.
//! Between nodes the control is linear and the state is the cubic Hermite
//! interpolant of the node values and node dynamics; the only dynamics
//! constraints are the midpoint defects
//!
//! ```text
//! r_j = x̃'(t_mid) - f(t_mid, x̃(t_mid), ũ(t_mid)),   j = 1..n-1
//! ```
//!
//! which are identically zero exactly when the interpolant satisfies the ODE
//! at every interval midpoint.

use nalgebra::{DMatrix, DVector};

use super::hermite::hermite_midpoint;
use super::solver::{solve, Nlp, SolveOptions, SolverReport};
use super::TrajoptError;

/// Stacked node states and controls plus the free final time.
///
/// Flattened layout: `[x_1 .. x_n, u_1 .. u_n, t_f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    pub nx: usize,
    pub nu: usize,
    /// `n · nx` stacked states.
    pub states: DVector<f64>,
    /// `n · nu` stacked controls.
    pub controls: DVector<f64>,
    pub t_f: f64,
}

impl DecisionVector {
    pub fn zeros(nx: usize, nu: usize, n: usize, t_f: f64) -> Self {
        Self {
            nx,
            nu,
            states: DVector::zeros(n * nx),
            controls: DVector::zeros(n * nu),
            t_f,
        }
    }

    pub fn n(&self) -> usize {
        self.states.len() / self.nx
    }

    pub fn dim(&self) -> usize {
        self.states.len() + self.controls.len() + 1
    }

    pub fn state(&self, i: usize) -> DVector<f64> {
        self.states.rows(i * self.nx, self.nx).into_owned()
    }

    pub fn control(&self, i: usize) -> DVector<f64> {
        self.controls.rows(i * self.nu, self.nu).into_owned()
    }

    pub fn set_state(&mut self, i: usize, x: &DVector<f64>) {
        self.states.rows_mut(i * self.nx, self.nx).copy_from(x);
    }

    pub fn set_control(&mut self, i: usize, u: &DVector<f64>) {
        self.controls.rows_mut(i * self.nu, self.nu).copy_from(u);
    }

    pub fn flatten(&self) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim());
        y.rows_mut(0, self.states.len()).copy_from(&self.states);
        y.rows_mut(self.states.len(), self.controls.len())
            .copy_from(&self.controls);
        y[self.dim() - 1] = self.t_f;
        y
    }

    pub fn from_flat(
        nx: usize,
        nu: usize,
        n: usize,
        y: &DVector<f64>,
    ) -> Result<Self, TrajoptError> {
        let dim = n * (nx + nu) + 1;
        if y.len() != dim {
            return Err(TrajoptError::Dimension {
                expected: dim,
                got: y.len(),
            });
        }
        Ok(Self {
            nx,
            nu,
            states: y.rows(0, n * nx).into_owned(),
            controls: y.rows(n * nx, n * nu).into_owned(),
            t_f: y[dim - 1],
        })
    }

    pub fn validate(&self) -> Result<(), TrajoptError> {
        if self.n() < 2 {
            return Err(TrajoptError::Dimension {
                expected: 2,
                got: self.n(),
            });
        }
        if !(self.t_f > 0.0) {
            return Err(TrajoptError::DegenerateInterval {
                t0: 0.0,
                t1: self.t_f,
            });
        }
        Ok(())
    }
}

/// Time-varying dynamics used by the transcription.
pub type DynamicsFn<'a> =
    Box<dyn Fn(f64, &DVector<f64>, &DVector<f64>) -> Result<DVector<f64>, TrajoptError> + 'a>;

/// A transcription of `ẋ = f(t, x, u)` on `n` uniform nodes over `[0, t_f]`.
pub struct Transcription<'a> {
    pub nx: usize,
    pub nu: usize,
    pub n: usize,
    pub dynamics: DynamicsFn<'a>,
}

impl Transcription<'_> {
    pub fn n_defects(&self) -> usize {
        (self.n - 1) * self.nx
    }

    /// Midpoint collocation residuals, stacked over intervals.
    pub fn defects(&self, dv: &DecisionVector) -> Result<DVector<f64>, TrajoptError> {
        dv.validate()?;
        let n = self.n;
        let h = dv.t_f / (n - 1) as f64;
        // Node dynamics first; each is shared by the two adjacent intervals.
        let mut node_f = Vec::with_capacity(n);
        for i in 0..n {
            let t = i as f64 * h;
            node_f.push((self.dynamics)(t, &dv.state(i), &dv.control(i))?);
        }
        let mut out = DVector::zeros(self.n_defects());
        for j in 0..n - 1 {
            let r = self.interval_defect(dv, &node_f[j], &node_f[j + 1], j, h)?;
            out.rows_mut(j * self.nx, self.nx).copy_from(&r);
        }
        Ok(out)
    }

    /// Residual of one interval given the node dynamics at its ends.
    fn interval_defect(
        &self,
        dv: &DecisionVector,
        f0: &DVector<f64>,
        f1: &DVector<f64>,
        j: usize,
        h: f64,
    ) -> Result<DVector<f64>, TrajoptError> {
        let x0 = dv.state(j);
        let x1 = dv.state(j + 1);
        let (x_mid, slope) = hermite_midpoint(&x0, &x1, f0, f1, h);
        let u_mid = (dv.control(j) + dv.control(j + 1)) * 0.5;
        let t_mid = (j as f64 + 0.5) * h;
        let f_mid = (self.dynamics)(t_mid, &x_mid, &u_mid)?;
        Ok(slope - f_mid)
    }

    /// Feasibility restoration: keep the controls, the first state, and the
    /// final time of `seed`, and solve each interval's defect equation for
    /// the next node state by damped Newton iteration. The result is a
    /// collocation-consistent rollout that warm-starts the NLP much closer
    /// to the constraint manifold than a resampled log can.
    pub fn rollout(
        &self,
        seed: &DecisionVector,
        max_newton: usize,
    ) -> Result<DecisionVector, TrajoptError> {
        seed.validate()?;
        let n = self.n;
        let nx = self.nx;
        let h = seed.t_f / (n - 1) as f64;
        let mut dv = seed.clone();

        let mut f_prev = (self.dynamics)(0.0, &dv.state(0), &dv.control(0))?;
        for j in 0..n - 1 {
            let t1 = (j + 1) as f64 * h;
            let t_mid = (j as f64 + 0.5) * h;
            let x0 = dv.state(j);
            let u1 = dv.control(j + 1);
            let u_mid = (dv.control(j) + &u1) * 0.5;

            let residual = |z: &DVector<f64>| -> Result<DVector<f64>, TrajoptError> {
                let f1 = (self.dynamics)(t1, z, &u1)?;
                let (x_mid, slope) = hermite_midpoint(&x0, z, &f_prev, &f1, h);
                let f_mid = (self.dynamics)(t_mid, &x_mid, &u_mid)?;
                Ok(slope - f_mid)
            };

            let mut z = dv.state(j + 1);
            let mut r = residual(&z)?;
            for _ in 0..max_newton {
                if r.amax() < 1e-10 {
                    break;
                }
                // FD Jacobian of the interval residual in the unknown node.
                let mut jac = DMatrix::zeros(nx, nx);
                let mut zp = z.clone();
                for col in 0..nx {
                    let step = super::solver_fd_step(z[col]);
                    zp[col] = z[col] + step;
                    let rp = residual(&zp)?;
                    zp[col] = z[col] - step;
                    let rm = residual(&zp)?;
                    zp[col] = z[col];
                    jac.column_mut(col).copy_from(&((rp - rm) / (2.0 * step)));
                }
                let Some(delta) = jac.lu().solve(&r) else {
                    break;
                };
                // Damped update on the residual norm.
                let mut alpha = 1.0;
                let mut improved = false;
                for _ in 0..20 {
                    let trial = &z - &delta * alpha;
                    if let Ok(rt) = residual(&trial) {
                        if rt.amax() < r.amax() {
                            z = trial;
                            r = rt;
                            improved = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                if !improved {
                    break;
                }
            }
            dv.set_state(j + 1, &z);
            f_prev = (self.dynamics)(t1, &z, &u1)?;
        }
        Ok(dv)
    }
}

/// Collocation NLP: defects plus boundary conditions as equalities, box
/// bounds and an optional projection over the flat layout, and a scalar
/// cost over the decision vector.
pub struct CollocationProblem<'a> {
    pub trans: Transcription<'a>,
    /// Boundary residuals; must depend only on the first state, the last
    /// state, and `t_f` (the Jacobian builder exploits this).
    pub boundary: Box<dyn Fn(&DecisionVector) -> DVector<f64> + 'a>,
    pub n_boundary: usize,
    pub cost: Box<dyn Fn(&DecisionVector) -> f64 + 'a>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub extra_project: Option<Box<dyn Fn(&mut DecisionVector) + 'a>>,
}

impl CollocationProblem<'_> {
    pub fn n_eq(&self) -> usize {
        self.trans.n_defects() + self.n_boundary
    }

    fn unpack(&self, y: &DVector<f64>) -> Result<DecisionVector, TrajoptError> {
        DecisionVector::from_flat(self.trans.nx, self.trans.nu, self.trans.n, y)
    }

    fn residuals(&self, dv: &DecisionVector) -> Result<DVector<f64>, TrajoptError> {
        let defects = self.trans.defects(dv)?;
        let boundary = (self.boundary)(dv);
        let mut out = DVector::zeros(defects.len() + boundary.len());
        out.rows_mut(0, defects.len()).copy_from(&defects);
        out.rows_mut(defects.len(), boundary.len())
            .copy_from(&boundary);
        Ok(out)
    }

    /// Finite-difference constraint Jacobian exploiting the stencil: a state
    /// or control at node `i` only enters the defects of the adjacent
    /// intervals, while `t_f` and the boundary rows are handled separately.
    fn jacobian(
        &self,
        y: &DVector<f64>,
        lower: &DVector<f64>,
        upper: &DVector<f64>,
    ) -> Result<DMatrix<f64>, TrajoptError> {
        let nx = self.trans.nx;
        let nu = self.trans.nu;
        let n = self.trans.n;
        let n_def = self.trans.n_defects();
        let n_eq = self.n_eq();
        let dim = y.len();
        let mut jac = DMatrix::zeros(n_eq, dim);

        let dv = self.unpack(y)?;
        let h = dv.t_f / (n - 1) as f64;

        // Helper: defect rows of the intervals adjacent to node i, given a
        // perturbed copy of the decision vector.
        let intervals_of_node = |i: usize| -> Vec<usize> {
            let mut v = Vec::with_capacity(2);
            if i > 0 {
                v.push(i - 1);
            }
            if i + 1 < n {
                v.push(i);
            }
            v
        };

        let eval_intervals =
            |dvp: &DecisionVector, js: &[usize]| -> Result<Vec<DVector<f64>>, TrajoptError> {
                let hh = dvp.t_f / (n - 1) as f64;
                let mut node_cache: Vec<(usize, DVector<f64>)> = Vec::new();
                let mut f_at = |i: usize| -> Result<DVector<f64>, TrajoptError> {
                    if let Some((_, f)) = node_cache.iter().find(|(k, _)| *k == i) {
                        return Ok(f.clone());
                    }
                    let t = i as f64 * hh;
                    let f = (self.trans.dynamics)(t, &dvp.state(i), &dvp.control(i))?;
                    node_cache.push((i, f.clone()));
                    Ok(f)
                };
                let mut out = Vec::with_capacity(js.len());
                for &j in js {
                    let f0 = f_at(j)?;
                    let f1 = f_at(j + 1)?;
                    out.push(self.trans.interval_defect(dvp, &f0, &f1, j, hh)?);
                }
                Ok(out)
            };

        let mut yp = y.clone();
        for col in 0..dim - 1 {
            if lower[col] >= upper[col] {
                continue;
            }
            let (node, _within, is_state) = if col < n * nx {
                (col / nx, col % nx, true)
            } else {
                let c = col - n * nx;
                (c / nu, c % nu, false)
            };
            let js = intervals_of_node(node);
            let step = super::solver_fd_step(y[col]);

            yp[col] = y[col] + step;
            let dvp = self.unpack(&yp)?;
            let rp = eval_intervals(&dvp, &js)?;
            let bp = (self.boundary)(&dvp);
            yp[col] = y[col] - step;
            let dvm = self.unpack(&yp)?;
            let rm = eval_intervals(&dvm, &js)?;
            let bm = (self.boundary)(&dvm);
            yp[col] = y[col];

            for (k, &j) in js.iter().enumerate() {
                let d = (&rp[k] - &rm[k]) / (2.0 * step);
                jac.view_mut((j * nx, col), (nx, 1)).copy_from(&d);
            }
            // Boundary rows depend only on x_1, x_n, t_f; differencing them
            // here is cheap and keeps the builder general.
            if self.n_boundary > 0 && (node == 0 || node == n - 1 || !is_state) {
                let db = (bp - bm) / (2.0 * step);
                jac.view_mut((n_def, col), (self.n_boundary, 1))
                    .copy_from(&db);
            }
            let _ = h;
        }

        // Final-time column: full re-evaluation.
        let col = dim - 1;
        if lower[col] < upper[col] {
            let step = super::solver_fd_step(y[col]);
            yp[col] = y[col] + step;
            let cp = self.residuals(&self.unpack(&yp)?)?;
            yp[col] = y[col] - step;
            let cm = self.residuals(&self.unpack(&yp)?)?;
            yp[col] = y[col];
            jac.column_mut(col).copy_from(&((cp - cm) / (2.0 * step)));
        }
        Ok(jac)
    }

    /// Solve from a warm start; returns the best decision vector, the raw
    /// final iterate, and the report.
    pub fn solve(
        &self,
        initial: &DecisionVector,
        opts: &SolveOptions,
    ) -> Result<(DecisionVector, DecisionVector, SolverReport), TrajoptError> {
        initial.validate()?;
        if initial.dim() != self.lower.len() {
            return Err(TrajoptError::Dimension {
                expected: self.lower.len(),
                got: initial.dim(),
            });
        }
        let lower = self.lower.clone();
        let upper = self.upper.clone();
        // Defect rows scale like 1/h; normalizing them by the initial
        // interval width keeps the augmented Lagrangian well conditioned.
        let h0 = initial.t_f / (self.trans.n - 1) as f64;
        let mut eq_scale = DVector::from_element(self.n_eq(), 1.0);
        for i in 0..self.trans.n_defects() {
            eq_scale[i] = h0;
        }
        let nlp = Nlp {
            dim: initial.dim(),
            n_eq: self.n_eq(),
            objective: Box::new(|y| Ok((self.cost)(&self.unpack(y)?))),
            equality: Box::new(|y| self.residuals(&self.unpack(y)?)),
            eq_jacobian: Some(Box::new(move |y| self.jacobian(y, &lower, &upper))),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
            extra_project: self.extra_project.as_ref().map(|p| {
                let nx = self.trans.nx;
                let nu = self.trans.nu;
                let n = self.trans.n;
                Box::new(move |y: &mut DVector<f64>| {
                    if let Ok(mut dv) = DecisionVector::from_flat(nx, nu, n, y) {
                        p(&mut dv);
                        y.copy_from(&dv.flatten());
                    }
                }) as Box<dyn Fn(&mut DVector<f64>)>
            }),
            eq_scale: Some(eq_scale),
        };
        let out = solve(&nlp, &initial.flatten(), opts);
        Ok((self.unpack(&out.best)?, self.unpack(&out.last)?, out.report))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_system_dynamics<'a>() -> DynamicsFn<'a> {
        // ẋ = A x with a mildly rotating A.
        Box::new(|_t, x, _u| {
            Ok(DVector::from_vec(vec![
                -0.3 * x[0] + 1.1 * x[1],
                -1.1 * x[0] - 0.3 * x[1],
            ]))
        })
    }

    /// RK4 roll-out as the independent reference for defect tests.
    fn rk4_rollout(x0: DVector<f64>, t_f: f64, steps: usize) -> Vec<DVector<f64>> {
        let f = |x: &DVector<f64>| {
            DVector::from_vec(vec![-0.3 * x[0] + 1.1 * x[1], -1.1 * x[0] - 0.3 * x[1]])
        };
        let dt = t_f / steps as f64;
        let mut out = vec![x0.clone()];
        let mut x = x0;
        for _ in 0..steps {
            let k1 = f(&x);
            let k2 = f(&(&x + &k1 * (dt / 2.0)));
            let k3 = f(&(&x + &k2 * (dt / 2.0)));
            let k4 = f(&(&x + &k3 * dt));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            out.push(x.clone());
        }
        out
    }

    #[test]
    fn defects_zero_for_constant_system() {
        let trans = Transcription {
            nx: 3,
            nu: 1,
            n: 5,
            dynamics: Box::new(|_, _, _| Ok(DVector::zeros(3))),
        };
        let mut dv = DecisionVector::zeros(3, 1, 5, 2.0);
        for i in 0..5 {
            dv.set_state(i, &DVector::from_vec(vec![1.0, -2.0, 0.5]));
        }
        let d = trans.defects(&dv).unwrap();
        assert_eq!(d.amax(), 0.0);
    }

    #[test]
    fn defects_small_on_fine_resampling_of_exact_trajectory() {
        let n = 41;
        let t_f = 2.0;
        let samples = rk4_rollout(DVector::from_vec(vec![1.0, 0.0]), t_f, (n - 1) * 50);
        let trans = Transcription {
            nx: 2,
            nu: 1,
            n,
            dynamics: linear_system_dynamics(),
        };
        let mut dv = DecisionVector::zeros(2, 1, n, t_f);
        for i in 0..n {
            dv.set_state(i, &samples[i * 50]);
        }
        let d = trans.defects(&dv).unwrap();
        assert!(d.amax() < 1e-6, "defect norm {}", d.amax());
    }

    #[test]
    fn defect_order_at_least_three_under_refinement() {
        let t_f = 2.0;
        let mut norms = Vec::new();
        for &n in &[11usize, 21, 41] {
            let samples = rk4_rollout(DVector::from_vec(vec![1.0, 0.0]), t_f, (n - 1) * 100);
            let trans = Transcription {
                nx: 2,
                nu: 1,
                n,
                dynamics: linear_system_dynamics(),
            };
            let mut dv = DecisionVector::zeros(2, 1, n, t_f);
            for i in 0..n {
                dv.set_state(i, &samples[i * 100]);
            }
            norms.push(trans.defects(&dv).unwrap().amax());
        }
        // Halving h should reduce the max defect by at least 2³.
        let order1 = (norms[0] / norms[1]).log2();
        let order2 = (norms[1] / norms[2]).log2();
        assert!(order1 >= 3.0, "observed order {order1:.2} ({norms:?})");
        assert!(order2 >= 3.0, "observed order {order2:.2} ({norms:?})");
    }

    #[test]
    fn perturbing_a_node_only_touches_adjacent_intervals() {
        let n = 8;
        let trans = Transcription {
            nx: 2,
            nu: 1,
            n,
            dynamics: linear_system_dynamics(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut dv = DecisionVector::zeros(2, 1, n, 1.5);
        for i in 0..n {
            dv.set_state(i, &DVector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)));
        }
        let base = trans.defects(&dv).unwrap();
        let mut dvp = dv.clone();
        let node = 3;
        dvp.set_state(node, &(dv.state(node) + DVector::from_vec(vec![0.1, -0.2])));
        let pert = trans.defects(&dvp).unwrap();
        for j in 0..n - 1 {
            let delta = (pert.rows(j * 2, 2) - base.rows(j * 2, 2)).amax();
            if j + 1 == node || j == node {
                assert!(delta > 1e-6, "adjacent interval {j} unchanged");
            } else {
                assert_eq!(delta, 0.0, "non-adjacent interval {j} changed");
            }
        }
    }

    #[test]
    fn stencil_jacobian_matches_dense_fd() {
        let n = 5;
        let nx = 2;
        let nu = 1;
        // Control-dependent dynamics so control columns are exercised.
        let trans = Transcription {
            nx,
            nu,
            n,
            dynamics: Box::new(|t, x, u| {
                Ok(DVector::from_vec(vec![
                    x[1] + 0.1 * t,
                    u[0] - 0.2 * x[0] * x[0],
                ]))
            }),
        };
        let x_init = DVector::from_vec(vec![0.3, -0.1]);
        let xi = x_init.clone();
        let problem = CollocationProblem {
            trans,
            boundary: Box::new(move |dv| {
                let mut r = DVector::zeros(3);
                let x0 = dv.state(0);
                let xn = dv.state(n - 1);
                r[0] = x0[0] - xi[0];
                r[1] = x0[1] - xi[1];
                r[2] = xn[0] - 1.0 - 0.05 * dv.t_f;
                r
            }),
            n_boundary: 3,
            cost: Box::new(|dv| dv.controls.norm_squared()),
            lower: DVector::from_element(n * 3 + 1, f64::NEG_INFINITY),
            upper: DVector::from_element(n * 3 + 1, f64::INFINITY),
            extra_project: None,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut dv = DecisionVector::zeros(nx, nu, n, 1.2);
        for i in 0..n {
            dv.set_state(i, &DVector::from_fn(nx, |_, _| rng.gen_range(-0.5..0.5)));
            dv.set_control(i, &DVector::from_fn(nu, |_, _| rng.gen_range(-0.5..0.5)));
        }
        let y = dv.flatten();
        let jac = problem
            .jacobian(&y, &problem.lower, &problem.upper)
            .unwrap();

        // Dense reference.
        let mut dense = DMatrix::zeros(problem.n_eq(), y.len());
        let mut yp = y.clone();
        for col in 0..y.len() {
            let h = super::super::solver_fd_step(y[col]);
            yp[col] = y[col] + h;
            let cp = problem.residuals(&problem.unpack(&yp).unwrap()).unwrap();
            yp[col] = y[col] - h;
            let cm = problem.residuals(&problem.unpack(&yp).unwrap()).unwrap();
            yp[col] = y[col];
            dense.column_mut(col).copy_from(&((cp - cm) / (2.0 * h)));
        }
        let diff = (&jac - &dense).amax();
        assert!(diff < 1e-6, "jacobian mismatch {diff:.3e}");
    }

    #[test]
    fn flatten_roundtrip_and_layout() {
        let mut dv = DecisionVector::zeros(2, 1, 3, 1.7);
        dv.set_state(0, &DVector::from_vec(vec![1.0, 2.0]));
        dv.set_state(2, &DVector::from_vec(vec![5.0, 6.0]));
        dv.set_control(1, &DVector::from_vec(vec![9.0]));
        let y = dv.flatten();
        // Layout [x_1..x_n, u_1..u_n, t_f].
        assert_eq!(y[0], 1.0);
        assert_eq!(y[4], 5.0);
        assert_eq!(y[7], 9.0);
        assert_eq!(y[9], 1.7);
        let back = DecisionVector::from_flat(2, 1, 3, &y).unwrap();
        assert_eq!(back, dv);
    }

    #[test]
    fn rejects_single_node() {
        let dv = DecisionVector::zeros(2, 1, 1, 1.0);
        assert!(dv.validate().is_err());
    }

    #[test]
    fn double_integrator_minimum_effort() {
        // Rest-to-rest unit translation in unit time; the continuous optimum
        // u(t) = 6 - 12 t has cost ∫u² = 12 and is exactly representable by
        // the interpolants, so the transcribed optimum matches it.
        let n = 11;
        let nx = 2;
        let nu = 1;
        let trans = Transcription {
            nx,
            nu,
            n,
            dynamics: Box::new(|_, x, u| Ok(DVector::from_vec(vec![x[1], u[0]]))),
        };
        let dim = n * (nx + nu) + 1;
        let mut lower = DVector::from_element(dim, f64::NEG_INFINITY);
        let mut upper = DVector::from_element(dim, f64::INFINITY);
        // Fixed final time.
        lower[dim - 1] = 1.0;
        upper[dim - 1] = 1.0;
        let problem = CollocationProblem {
            trans,
            boundary: Box::new(move |dv| {
                let x0 = dv.state(0);
                let xn = dv.state(n - 1);
                DVector::from_vec(vec![x0[0], x0[1], xn[0] - 1.0, xn[1]])
            }),
            n_boundary: 4,
            cost: Box::new(move |dv| {
                // Simpson-consistent quadrature of u² under linear u.
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
        };
        let mut initial = DecisionVector::zeros(nx, nu, n, 1.0);
        for i in 0..n {
            let s = i as f64 / (n - 1) as f64;
            initial.set_state(i, &DVector::from_vec(vec![s, 1.0]));
        }
        let opts = SolveOptions {
            max_outer: 80,
            max_inner: 200,
            tol_g: 1e-5,
            ..Default::default()
        };
        let (solution, _, report) = problem.solve(&initial, &opts).unwrap();
        assert!(
            report.constraint_inf_norm < 1e-4,
            "constraints {:.3e}",
            report.constraint_inf_norm
        );
        let cost = report.cost;
        assert!(
            (cost - 12.0).abs() / 12.0 < 0.02,
            "cost {cost} vs analytic 12"
        );
        // Control profile near 6 - 12 t.
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            let u = solution.control(i)[0];
            assert!((u - (6.0 - 12.0 * t)).abs() < 0.5, "u({t}) = {u}");
        }
    }
}
