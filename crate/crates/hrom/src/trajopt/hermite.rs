//! Interpolants for the collocation transcription: piecewise-linear controls
//! and cubic Hermite states.
//!
//! On an interval `[t_j, t_{j+1}]` of width `h`, the state interpolant is
//! `x̃(t) = Σ c_k τ^k` with `τ = (t - t_j)/h` and
//!
//! ```text
//! c_0 = x_j
//! c_1 = h f_j
//! c_2 = -3 x_j - 2 h f_j + 3 x_{j+1} - h f_{j+1}
//! c_3 =  2 x_j +   h f_j - 2 x_{j+1} + h f_{j+1}
//! ```
//!
//! which is the unique cubic matching the endpoint values and derivatives.

use nalgebra::DVector;

use super::TrajoptError;

/// Linear control interpolation between two nodes.
pub fn control_interp(
    u0: &DVector<f64>,
    u1: &DVector<f64>,
    t0: f64,
    t1: f64,
    t: f64,
) -> Result<DVector<f64>, TrajoptError> {
    if t1 <= t0 {
        return Err(TrajoptError::DegenerateInterval { t0, t1 });
    }
    if t < t0 || t > t1 {
        return Err(TrajoptError::OutOfRange { t, t0, t1 });
    }
    let alpha = (t - t0) / (t1 - t0);
    Ok(u0 + (u1 - u0) * alpha)
}

/// Cubic Hermite state interpolation; returns the value and time derivative.
#[allow(clippy::too_many_arguments)]
pub fn state_interp(
    x0: &DVector<f64>,
    x1: &DVector<f64>,
    f0: &DVector<f64>,
    f1: &DVector<f64>,
    t0: f64,
    t1: f64,
    t: f64,
) -> Result<(DVector<f64>, DVector<f64>), TrajoptError> {
    let h = t1 - t0;
    if h <= 0.0 {
        return Err(TrajoptError::DegenerateInterval { t0, t1 });
    }
    if t < t0 || t > t1 {
        return Err(TrajoptError::OutOfRange { t, t0, t1 });
    }
    let tau = (t - t0) / h;
    let c0 = x0;
    let c1 = f0 * h;
    let c2 = -3.0 * x0 - 2.0 * h * f0 + 3.0 * x1 - h * f1;
    let c3 = 2.0 * x0 + h * f0 - 2.0 * x1 + h * f1;
    let value = c0 + &c1 * tau + &c2 * (tau * tau) + &c3 * (tau * tau * tau);
    let deriv = (c1 + c2 * (2.0 * tau) + c3 * (3.0 * tau * tau)) / h;
    Ok((value, deriv))
}

/// Closed-form interpolant value and slope at the interval midpoint:
/// `x̃ = (x_j + x_{j+1})/2 + h (f_j - f_{j+1})/8`,
/// `x̃' = -3 (x_j - x_{j+1})/(2h) - (f_j + f_{j+1})/4`.
pub fn hermite_midpoint(
    x0: &DVector<f64>,
    x1: &DVector<f64>,
    f0: &DVector<f64>,
    f1: &DVector<f64>,
    h: f64,
) -> (DVector<f64>, DVector<f64>) {
    let value = (x0 + x1) * 0.5 + (f0 - f1) * (h / 8.0);
    let slope = (x1 - x0) * (3.0 / (2.0 * h)) - (f0 + f1) * 0.25;
    (value, slope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn control_endpoints_and_midpoint() {
        let u0 = DVector::from_vec(vec![1.0, -2.0]);
        let u1 = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(control_interp(&u0, &u1, 0.0, 2.0, 0.0).unwrap(), u0);
        assert_eq!(control_interp(&u0, &u1, 0.0, 2.0, 2.0).unwrap(), u1);
        let mid = control_interp(&u0, &u1, 0.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(mid, (u0 + u1) * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn control_constant_when_equal() {
        let u = DVector::from_vec(vec![0.7]);
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            assert_eq!(control_interp(&u, &u, 0.0, 1.0, t).unwrap(), u);
        }
    }

    #[test]
    fn control_out_of_range() {
        let u = DVector::from_vec(vec![0.0]);
        assert!(matches!(
            control_interp(&u, &u, 0.0, 1.0, 1.5),
            Err(TrajoptError::OutOfRange { .. })
        ));
        assert!(matches!(
            control_interp(&u, &u, 1.0, 1.0, 1.0),
            Err(TrajoptError::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn hermite_endpoint_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let (x0, x1, f0, f1) = (
                vec(&mut rng, 5),
                vec(&mut rng, 5),
                vec(&mut rng, 5),
                vec(&mut rng, 5),
            );
            let (t0, t1) = (0.3, 0.3 + rng.gen_range(0.1..2.0));
            let (v0, d0) = state_interp(&x0, &x1, &f0, &f1, t0, t1, t0).unwrap();
            let (v1, d1) = state_interp(&x0, &x1, &f0, &f1, t0, t1, t1).unwrap();
            assert_relative_eq!(v0, x0, epsilon = 1e-12);
            assert_relative_eq!(v1, x1, epsilon = 1e-12);
            assert_relative_eq!(d0, f0, epsilon = 1e-12);
            assert_relative_eq!(d1, f1, epsilon = 1e-12);
        }
    }

    #[test]
    fn hermite_midpoint_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..200 {
            let (x0, x1, f0, f1) = (
                vec(&mut rng, 4),
                vec(&mut rng, 4),
                vec(&mut rng, 4),
                vec(&mut rng, 4),
            );
            let h = rng.gen_range(0.05..1.5);
            let (vm, dm) = state_interp(&x0, &x1, &f0, &f1, 0.0, h, h / 2.0).unwrap();
            let (vc, dc) = hermite_midpoint(&x0, &x1, &f0, &f1, h);
            assert_relative_eq!(vm, vc, epsilon = 1e-12);
            assert_relative_eq!(dm, dc, epsilon = 1e-12);
            // The closed midpoint forms, written out directly.
            let v_expected = (&x0 + &x1) * 0.5 + (&f0 - &f1) * (h / 8.0);
            let d_expected = -(&x0 - &x1) * (3.0 / (2.0 * h)) - (&f0 + &f1) * 0.25;
            assert_relative_eq!(vc, v_expected, epsilon = 1e-13);
            assert_relative_eq!(dc, d_expected, epsilon = 1e-13);
        }
    }

    #[test]
    fn hermite_reproduces_cubics_exactly() {
        // Data sampled from a true cubic polynomial is reproduced everywhere.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let a = vec(&mut rng, 3);
            let b = vec(&mut rng, 3);
            let c = vec(&mut rng, 3);
            let d = vec(&mut rng, 3);
            let poly = |t: f64| &a + &b * t + &c * (t * t) + &d * (t * t * t);
            let dpoly = |t: f64| &b + &c * (2.0 * t) + &d * (3.0 * t * t);
            let (t0, t1) = (-0.4, 1.3);
            for i in 0..=20 {
                let t = t0 + (t1 - t0) * i as f64 / 20.0;
                let (v, dv) =
                    state_interp(&poly(t0), &poly(t1), &dpoly(t0), &dpoly(t1), t0, t1, t).unwrap();
                assert_relative_eq!(v, poly(t), epsilon = 1e-11);
                assert_relative_eq!(dv, dpoly(t), epsilon = 1e-11);
            }
        }
    }
}
