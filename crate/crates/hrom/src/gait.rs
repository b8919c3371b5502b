//! Heuristic gait generation for straight narrow-path walking.
//!
//! The gait is a bipedal pattern over diagonal leg pairs: FR+HL and FL+HR
//! alternate swing and stance, separated by a short pause in which all four
//! feet hold. Foot references are degree-6 Bezier curves in the hip frame:
//!
//! - a swing curve lifts the foot by `step_height`, advances it by one step,
//!   and bows outward in y to clear the stance legs standing near the
//!   centerline;
//! - a stance curve drives the foot backward at the stance speed, which is
//!   what propels the body forward;
//! - pause segments hold the last stance point.
//!
//! The first half-cycle repositions each pair from the neutral wide stance
//! toward the body centerline (by `stance_y_offset`) before steady stepping
//! begins. Joint references come from leg inverse kinematics along the active
//! curve; the tracking law turns reference error into commanded joint
//! accelerations.

use nalgebra::{SVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    leg_inverse_kinematics, leg_local_offset_jacobian, KinematicsError, LegId, RobotParams,
};

/// Errors from gait construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaitError {
    #[error("curve parameter {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("invalid gait parameters: {0}")]
    InvalidParams(String),
    #[error("gait infeasible: leg {leg} target {target:?} at phase {s:.2}: {source}")]
    Infeasible {
        leg: &'static str,
        target: [f64; 3],
        s: f64,
        source: KinematicsError,
    },
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Gait timing and geometry parameters.
///
/// `step_length` is tied to the commanded speed: one diagonal pair drives the
/// body for `step_time` out of every `step_time + pause_time` half-cycle, so
/// `step_length = forward_velocity · (step_time + pause_time)` makes the
/// cycle-average speed equal the command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Commanded forward speed, m/s.
    pub forward_velocity: f64,
    /// Swing (and stance-drive) duration, s.
    pub step_time: f64,
    /// Hold duration after each half-cycle, s.
    pub pause_time: f64,
    /// Swing apex height above the stance plane, m.
    pub step_height: f64,
    /// Foot advance per step, m; consistent with the speed by construction.
    pub step_length: f64,
    /// How far feet pull in from under the hips toward the centerline, m.
    pub stance_y_offset: f64,
    /// Total gait duration, s.
    pub duration: f64,
    /// Nominal hip height above the stance plane, m.
    pub body_height: f64,
    /// Start with the feet already pulled in to the narrow stance instead
    /// of repositioning from under the hips during the first half-cycle.
    /// Required on support strips too narrow for the neutral stance.
    pub start_narrow: bool,
    /// Optional swing-shape override: per control point, the x fraction of
    /// the step advance and the z fraction of the step height.
    pub swing_profile: Option<[(f64, f64); 7]>,
}

/// Default swing-shape fractions: x overshoots the interval ends by 1/6 so
/// the curve tangents match the stance drive speed at liftoff and touchdown.
const SWING_PROFILE: [(f64, f64); 7] = [
    (0.0, 0.0),
    (-1.0 / 6.0, 0.2),
    (0.15, 1.15),
    (0.5, 1.25),
    (0.85, 1.15),
    (7.0 / 6.0, 0.2),
    (1.0, 0.0),
];

impl GaitParams {
    /// Build a parameter set with the step length derived from the speed.
    pub fn new(
        forward_velocity: f64,
        step_time: f64,
        pause_time: f64,
        step_height: f64,
        stance_y_offset: f64,
        duration: f64,
        body_height: f64,
    ) -> Self {
        Self {
            forward_velocity,
            step_time,
            pause_time,
            step_height,
            step_length: forward_velocity * (step_time + pause_time),
            stance_y_offset,
            duration,
            body_height,
            start_narrow: false,
            swing_profile: None,
        }
    }

    /// One half-cycle: a swing plus the following pause.
    pub fn half_cycle(&self) -> f64 {
        self.step_time + self.pause_time
    }

    /// Stance-drive speed in the hip frame, m/s.
    pub fn stance_speed(&self) -> f64 {
        self.step_length / self.step_time
    }

    /// Outward bow clearance used by swing curves, m.
    pub fn swing_clearance(&self) -> f64 {
        (0.4 * self.stance_y_offset).max(0.02)
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        if !(self.step_time > 0.0) {
            return Err(GaitError::InvalidParams(format!(
                "step_time must be positive, got {}",
                self.step_time
            )));
        }
        if self.pause_time < 0.0 || self.step_height < 0.0 || self.stance_y_offset < 0.0 {
            return Err(GaitError::InvalidParams(
                "pause_time, step_height, stance_y_offset must be nonnegative".into(),
            ));
        }
        if !(self.duration > 0.0 && self.body_height > 0.0) {
            return Err(GaitError::InvalidParams(
                "duration and body_height must be positive".into(),
            ));
        }
        let expected = self.forward_velocity * self.half_cycle();
        if (self.step_length - expected).abs() > 1e-9 {
            return Err(GaitError::InvalidParams(format!(
                "step_length {} inconsistent with forward_velocity·half_cycle = {}",
                self.step_length, expected
            )));
        }
        Ok(())
    }
}

impl Default for GaitParams {
    fn default() -> Self {
        // Timing defaults are tuning values, not published numbers.
        Self::new(0.1, 0.4, 0.05, 0.05, 0.08, 3.5, 0.275)
    }
}

/// Degree-6 Bezier curve on seven control points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BezierCurve {
    pub control_points: [Vector3<f64>; 7],
}

/// Binomial coefficients C(6, i).
const BINOM6: [f64; 7] = [1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0];
const BINOM5: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];

impl BezierCurve {
    pub fn constant(p: Vector3<f64>) -> Self {
        Self {
            control_points: [p; 7],
        }
    }

    /// Seven uniformly spaced points on the segment from `a` to `b`; the
    /// resulting curve is the straight line traversed at constant speed.
    pub fn line(a: Vector3<f64>, b: Vector3<f64>) -> Self {
        Self {
            control_points: std::array::from_fn(|i| a + (b - a) * (i as f64 / 6.0)),
        }
    }

    /// Curve position and derivative with respect to the curve parameter.
    pub fn eval(&self, s: f64) -> Result<(Vector3<f64>, Vector3<f64>), GaitError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(GaitError::OutOfRange(s));
        }
        let t = 1.0 - s;
        // Bernstein weights for degree 6 and the derivative's degree 5.
        let mut pos = Vector3::zeros();
        for (i, p) in self.control_points.iter().enumerate() {
            pos += p * (BINOM6[i] * s.powi(i as i32) * t.powi(6 - i as i32));
        }
        let mut vel = Vector3::zeros();
        for i in 0..6 {
            let diff = self.control_points[i + 1] - self.control_points[i];
            vel += diff * (6.0 * BINOM5[i] * s.powi(i as i32) * t.powi(5 - i as i32));
        }
        Ok((pos, vel))
    }
}

/// Per-leg gait phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Stance,
    Swing,
    Pause,
}

/// Diagonal pair index: 0 for FR+HL, 1 for FL+HR.
pub fn pair_of(leg: LegId) -> usize {
    match leg {
        LegId::FR | LegId::HL => 0,
        LegId::FL | LegId::HR => 1,
    }
}

/// Closed-form diagonal-pair schedule: pair 0 swings on even half-cycles,
/// pair 1 on odd ones, and every half-cycle ends with a shared pause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactSchedule {
    pub step_time: f64,
    pub pause_time: f64,
    pub duration: f64,
}

impl ContactSchedule {
    pub fn half_cycle(&self) -> f64 {
        self.step_time + self.pause_time
    }

    /// Phase of a leg at time `t` (clamped to the gait duration).
    pub fn phase(&self, leg: LegId, t: f64) -> Phase {
        let t = t.clamp(0.0, self.duration);
        let th = self.half_cycle();
        let k = (t / th).floor() as usize;
        let local = t - k as f64 * th;
        if local < self.step_time {
            if pair_of(leg) == k % 2 {
                Phase::Swing
            } else {
                Phase::Stance
            }
        } else {
            Phase::Pause
        }
    }
}

/// One timed curve segment of a leg's foot reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t0: f64,
    pub t1: f64,
    pub phase: Phase,
    pub curve: BezierCurve,
}

/// A complete gait plan: per-leg foot reference segments plus the schedule.
///
/// Foot references are expressed in the body frame relative to each hip, so
/// the stance-drive motion of planted feet encodes the body's forward
/// progress. Immutable after construction; evaluation is pure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaitPlan {
    pub params: GaitParams,
    pub schedule: ContactSchedule,
    segments: [Vec<Segment>; 4],
}

impl GaitPlan {
    /// Reference foot position and velocity of `leg` at time `t`, in the hip
    /// frame. Times beyond the duration hold the final reference.
    pub fn foot_ref(&self, leg: LegId, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let segs = &self.segments[leg.index()];
        let t = t.clamp(0.0, self.params.duration);
        let seg = segs
            .iter()
            .find(|s| t < s.t1 || std::ptr::eq(*s, segs.last().unwrap()))
            .expect("segments cover the gait duration");
        let span = seg.t1 - seg.t0;
        let s = if span > 0.0 {
            ((t - seg.t0) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (pos, dpos) = seg.curve.eval(s).expect("s clamped to [0,1]");
        let vel = if span > 0.0 {
            dpos / span
        } else {
            Vector3::zeros()
        };
        (pos, vel)
    }

    /// Phase of a leg at time `t`.
    pub fn phase(&self, leg: LegId, t: f64) -> Phase {
        self.schedule.phase(leg, t)
    }

    /// Time bounds of the segment containing `t`. All legs share the
    /// half-cycle timing, so the bounds are leg-independent.
    pub fn segment_bounds(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(0.0, self.params.duration);
        let th = self.params.half_cycle();
        let k = (t / th).floor();
        let local = t - k * th;
        let (a, b) = if local < self.params.step_time || self.params.pause_time == 0.0 {
            (k * th, k * th + self.params.step_time)
        } else {
            (k * th + self.params.step_time, (k + 1.0) * th)
        };
        (a.min(self.params.duration), b.min(self.params.duration))
    }

    /// Forward displacement of the body implied by the stance-drive
    /// segments, m.
    pub fn reference_displacement(&self) -> f64 {
        // Any one leg sees every drive during its own stance and, mirrored,
        // during its swing; summing x-retreat over one leg's stance segments
        // undercounts the drives executed by the other pair. Count drives
        // directly from the timeline instead.
        let th = self.params.half_cycle();
        let mut total = 0.0;
        // Without a narrow start, half-cycle 0 only repositions.
        let mut k = if self.params.start_narrow { 0 } else { 1 };
        loop {
            let t0 = k as f64 * th;
            if t0 >= self.params.duration {
                break;
            }
            let drive = (self.params.duration - t0).min(self.params.step_time);
            total += drive * self.params.stance_speed();
            k += 1;
        }
        total
    }

    pub fn segments(&self, leg: LegId) -> &[Segment] {
        &self.segments[leg.index()]
    }
}

/// Hip-frame y coordinate of the narrow stance for a leg: pulled in from the
/// hip toward the body centerline.
fn inward_y(leg: LegId, params: &GaitParams) -> f64 {
    if leg.is_left() {
        -params.stance_y_offset
    } else {
        params.stance_y_offset
    }
}

/// Swing curve between two stance points, bowing outward by the clearance.
fn swing_curve(
    leg: LegId,
    from: Vector3<f64>,
    to: Vector3<f64>,
    params: &GaitParams,
) -> BezierCurve {
    if (from - to).norm() < 1e-12 && params.step_height == 0.0 {
        return BezierCurve::constant(from);
    }
    let profile = params.swing_profile.unwrap_or(SWING_PROFILE);
    let outward = if leg.is_left() { 1.0 } else { -1.0 };
    let extreme = if leg.is_left() {
        from.y.max(to.y)
    } else {
        from.y.min(to.y)
    };
    let bow = extreme + outward * params.swing_clearance();
    let z0 = -params.body_height;
    let dx = to.x - from.x;
    let points = std::array::from_fn(|i| {
        let (fx, fz) = profile[i];
        let y = match i {
            0 | 1 => from.y,
            2..=4 => bow,
            _ => to.y,
        };
        Vector3::new(from.x + fx * dx, y, z0 + fz * params.step_height)
    });
    BezierCurve {
        control_points: points,
    }
}

/// Build the full gait plan and verify every foot target is reachable.
pub fn build_gait(params: &GaitParams, robot: &RobotParams) -> Result<GaitPlan, GaitError> {
    params.validate()?;
    let th = params.half_cycle();
    let n_half = (params.duration / th).ceil().max(1.0) as usize;
    let z_st = -params.body_height;
    let l = params.step_length;

    let mut current: [Vector3<f64>; 4] = std::array::from_fn(|i| {
        let y = if params.start_narrow {
            inward_y(LegId::ALL[i], params)
        } else {
            0.0
        };
        Vector3::new(0.0, y, z_st)
    });
    let mut has_swung = [params.start_narrow; 2];
    let mut segments: [Vec<Segment>; 4] = Default::default();

    for k in 0..n_half {
        let t0 = k as f64 * th;
        let t_sw = t0 + params.step_time;
        let active = k % 2;
        for leg in LegId::ALL {
            let i = leg.index();
            let seg = if pair_of(leg) == active {
                let target = Vector3::new(l / 2.0, inward_y(leg, params), z_st);
                let curve = swing_curve(leg, current[i], target, params);
                current[i] = target;
                Segment {
                    t0,
                    t1: t_sw,
                    phase: Phase::Swing,
                    curve,
                }
            } else if has_swung[pair_of(leg)] {
                let end = current[i] - Vector3::new(l, 0.0, 0.0);
                let curve = BezierCurve::line(current[i], end);
                current[i] = end;
                Segment {
                    t0,
                    t1: t_sw,
                    phase: Phase::Stance,
                    curve,
                }
            } else {
                Segment {
                    t0,
                    t1: t_sw,
                    phase: Phase::Stance,
                    curve: BezierCurve::constant(current[i]),
                }
            };
            segments[i].push(seg);
            if params.pause_time > 0.0 {
                segments[i].push(Segment {
                    t0: t_sw,
                    t1: (k + 1) as f64 * th,
                    phase: Phase::Pause,
                    curve: BezierCurve::constant(current[i]),
                });
            }
        }
        has_swung[active] = true;
    }

    let plan = GaitPlan {
        params: params.clone(),
        schedule: ContactSchedule {
            step_time: params.step_time,
            pause_time: params.pause_time,
            duration: params.duration,
        },
        segments,
    };

    // Reachability sweep over every curve.
    for leg in LegId::ALL {
        for seg in plan.segments(leg) {
            for j in 0..=32 {
                let s = j as f64 / 32.0;
                let (pos, _) = seg.curve.eval(s).expect("s in range");
                if let Err(e) = leg_inverse_kinematics(&pos, robot) {
                    return Err(GaitError::Infeasible {
                        leg: leg.name(),
                        target: [pos.x, pos.y, pos.z],
                        s,
                        source: e,
                    });
                }
            }
        }
    }
    Ok(plan)
}

/// Desired joint positions, rates, and accelerations for all 12 joints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointReference {
    pub q: SVector<f64, 12>,
    pub qd: SVector<f64, 12>,
    pub qdd: SVector<f64, 12>,
}

fn joints_at(
    t: f64,
    plan: &GaitPlan,
    robot: &RobotParams,
) -> Result<(SVector<f64, 12>, SVector<f64, 12>), GaitError> {
    let mut q = SVector::<f64, 12>::zeros();
    let mut qd = SVector::<f64, 12>::zeros();
    for leg in LegId::ALL {
        let (pos, vel) = plan.foot_ref(leg, t);
        let (phi, gamma, len) = leg_inverse_kinematics(&pos, robot)?;
        let jac = leg_local_offset_jacobian(phi, gamma, len);
        let rates = jac
            .lu()
            .solve(&vel)
            .ok_or_else(|| GaitError::InvalidParams(format!("singular leg jacobian at t = {t}")))?;
        let i = leg.index();
        q[3 * i] = phi;
        q[3 * i + 1] = gamma;
        q[3 * i + 2] = len;
        qd[3 * i] = rates.x;
        qd[3 * i + 1] = rates.y;
        qd[3 * i + 2] = rates.z;
    }
    Ok((q, qd))
}

/// Joint-space reference at time `t`: positions and rates through inverse
/// kinematics of the active curves, accelerations by central differencing of
/// the rate reference (h = 1e-4 s, one-sided at segment boundaries).
///
/// The difference window never straddles a segment handoff, where reference
/// rates may step; otherwise the feedforward would carry spurious spikes.
pub fn joint_reference(
    t: f64,
    plan: &GaitPlan,
    robot: &RobotParams,
) -> Result<JointReference, GaitError> {
    let (q, qd) = joints_at(t, plan, robot)?;
    let h = 1e-4;
    let (seg0, seg1) = plan.segment_bounds(t);
    let lo = (t - h).max(seg0);
    let hi = (t + h).min(seg1);
    let qdd = if hi - lo > 1e-9 {
        let (_, qd_lo) = joints_at(lo, plan, robot)?;
        let (_, qd_hi) = joints_at(hi, plan, robot)?;
        (qd_hi - qd_lo) / (hi - lo)
    } else {
        SVector::zeros()
    };
    Ok(JointReference { q, qd, qdd })
}

/// Diagonal PD gains for the joint tracking law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointGains {
    pub kp: f64,
    pub kd: f64,
}

impl Default for JointGains {
    fn default() -> Self {
        Self {
            kp: 400.0,
            kd: 40.0,
        }
    }
}

/// Commanded joint accelerations:
/// `u_L = q̈* + K_p (q* − q) + K_d (q̇* − q̇)`.
pub fn joint_tracking(
    q: &SVector<f64, 12>,
    qd: &SVector<f64, 12>,
    reference: &JointReference,
    gains: &JointGains,
) -> SVector<f64, 12> {
    reference.qdd + gains.kp * (reference.q - q) + gains.kd * (reference.qd - qd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn standing_params() -> GaitParams {
        let mut p = GaitParams::new(0.0, 0.4, 0.05, 0.0, 0.0, 2.0, 0.275);
        p.step_height = 0.0;
        p
    }

    #[test]
    fn bezier_endpoint_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let pts: [Vector3<f64>; 7] =
                std::array::from_fn(|_| Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)));
            let c = BezierCurve {
                control_points: pts,
            };
            let (p0, _) = c.eval(0.0).unwrap();
            let (p1, _) = c.eval(1.0).unwrap();
            assert_relative_eq!(p0, pts[0], epsilon = 1e-14);
            assert_relative_eq!(p1, pts[6], epsilon = 1e-14);
        }
    }

    #[test]
    fn bezier_degenerate_curve() {
        let p = Vector3::new(0.4, -0.2, 0.9);
        let c = BezierCurve::constant(p);
        for i in 0..=10 {
            let (pos, vel) = c.eval(i as f64 / 10.0).unwrap();
            assert_relative_eq!(pos, p, epsilon = 1e-14);
            assert_relative_eq!(vel.norm(), 0.0, epsilon = 1e-13);
        }
    }

    /// De Casteljau evaluation as an independent oracle.
    fn de_casteljau(points: &[Vector3<f64>; 7], s: f64) -> Vector3<f64> {
        let mut work = points.to_vec();
        for level in (1..7).rev() {
            for i in 0..level {
                work[i] = work[i] * (1.0 - s) + work[i + 1] * s;
            }
        }
        work[0]
    }

    #[test]
    fn bezier_matches_de_casteljau() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let pts: [Vector3<f64>; 7] =
                std::array::from_fn(|_| Vector3::from_fn(|_, _| rng.gen_range(-2.0..2.0)));
            let c = BezierCurve {
                control_points: pts,
            };
            for j in 0..=16 {
                let s = j as f64 / 16.0;
                let (pos, _) = c.eval(s).unwrap();
                assert_relative_eq!(pos, de_casteljau(&pts, s), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bezier_collinear_uniform_is_linear() {
        let a = Vector3::new(0.0, 1.0, -2.0);
        let b = Vector3::new(3.0, -1.0, 4.0);
        let c = BezierCurve::line(a, b);
        let (mid, vel) = c.eval(0.5).unwrap();
        assert_relative_eq!(mid, (a + b) * 0.5, epsilon = 1e-12);
        assert_relative_eq!(vel, b - a, epsilon = 1e-12);
    }

    #[test]
    fn bezier_rejects_out_of_range() {
        let c = BezierCurve::constant(Vector3::zeros());
        assert!(matches!(c.eval(-0.01), Err(GaitError::OutOfRange(_))));
        assert!(matches!(c.eval(1.01), Err(GaitError::OutOfRange(_))));
    }

    #[test]
    fn bezier_stays_in_control_point_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let pts: [Vector3<f64>; 7] =
                std::array::from_fn(|_| Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0)));
            let c = BezierCurve {
                control_points: pts,
            };
            for axis in 0..3 {
                let lo = pts.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
                let hi = pts
                    .iter()
                    .map(|p| p[axis])
                    .fold(f64::NEG_INFINITY, f64::max);
                for j in 0..=32 {
                    let (pos, _) = c.eval(j as f64 / 32.0).unwrap();
                    assert!(pos[axis] >= lo - 1e-12 && pos[axis] <= hi + 1e-12);
                }
            }
        }
    }

    #[test]
    fn schedule_invariant_one_pair_in_stance_or_both_pausing() {
        let params = GaitParams::default();
        let plan = build_gait(&params, &RobotParams::default()).unwrap();
        let mut t = 0.0;
        while t < params.duration {
            let phases: Vec<Phase> = LegId::ALL.iter().map(|&l| plan.phase(l, t)).collect();
            // Diagonal pairs share phases.
            assert_eq!(phases[LegId::FR.index()], phases[LegId::HL.index()]);
            assert_eq!(phases[LegId::FL.index()], phases[LegId::HR.index()]);
            let a = phases[LegId::FR.index()];
            let b = phases[LegId::FL.index()];
            let ok = matches!(
                (a, b),
                (Phase::Stance, Phase::Swing)
                    | (Phase::Swing, Phase::Stance)
                    | (Phase::Pause, Phase::Pause)
            );
            assert!(ok, "invalid phase combination {a:?}/{b:?} at t = {t}");
            t += 1e-3;
        }
    }

    #[test]
    fn standing_gait_constant_references() {
        let params = standing_params();
        let robot = RobotParams::default();
        let plan = build_gait(&params, &robot).unwrap();
        let r0 = joint_reference(0.1, &plan, &robot).unwrap();
        for i in 0..20 {
            let t = 0.05 + i as f64 * 0.09;
            let r = joint_reference(t, &plan, &robot).unwrap();
            assert_relative_eq!(r.q, r0.q, epsilon = 1e-12);
            assert_relative_eq!(r.qd.norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_velocity_swing_returns_foot_to_start() {
        let mut params = GaitParams::new(0.0, 0.4, 0.05, 0.04, 0.0, 2.0, 0.275);
        params.stance_y_offset = 0.0;
        let plan = build_gait(&params, &RobotParams::default()).unwrap();
        let seg = &plan.segments(LegId::FR)[0];
        assert_eq!(seg.phase, Phase::Swing);
        let (start, _) = seg.curve.eval(0.0).unwrap();
        let (end, _) = seg.curve.eval(1.0).unwrap();
        assert_relative_eq!(start, end, epsilon = 1e-12);
        // Stance curves never move.
        for s in plan.segments(LegId::FL) {
            if s.phase == Phase::Stance {
                let (a, _) = s.curve.eval(0.0).unwrap();
                let (b, _) = s.curve.eval(1.0).unwrap();
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn paper_scenario_reference_displacement() {
        let params = GaitParams::default();
        let plan = build_gait(&params, &RobotParams::default()).unwrap();
        let d = plan.reference_displacement();
        assert!((0.25..=0.36).contains(&d), "reference displacement {d}");
    }

    #[test]
    fn swing_bows_outside_stance_feet() {
        let params = GaitParams::default();
        let robot = RobotParams::default();
        let plan = build_gait(&params, &robot).unwrap();
        for leg in LegId::ALL {
            let hip_y = robot.hip_offsets[leg.index()].y;
            // World |y| of the narrow stance feet.
            let stance_y = (hip_y + inward_y(leg, &params)).abs();
            for seg in plan.segments(leg) {
                if seg.phase != Phase::Swing {
                    continue;
                }
                let mut extreme: f64 = 0.0;
                for j in 0..=64 {
                    let (pos, _) = seg.curve.eval(j as f64 / 64.0).unwrap();
                    extreme = extreme.max((hip_y + pos.y).abs());
                }
                assert!(
                    extreme > stance_y + 1e-6,
                    "{} swing stays inside stance width",
                    leg.name()
                );
            }
        }
    }

    #[test]
    fn references_continuous_at_segment_handoffs() {
        let params = GaitParams::default();
        let robot = RobotParams::default();
        let plan = build_gait(&params, &robot).unwrap();
        for leg in LegId::ALL {
            let segs = plan.segments(leg);
            for w in segs.windows(2) {
                let (end, _) = w[0].curve.eval(1.0).unwrap();
                let (start, _) = w[1].curve.eval(0.0).unwrap();
                assert!((end - start).norm() < 1e-9, "gap at t = {}", w[0].t1);
            }
        }
    }

    #[test]
    fn leg_shortest_near_swing_apex() {
        let params = GaitParams::default();
        let robot = RobotParams::default();
        let plan = build_gait(&params, &robot).unwrap();
        // Steady swing of FR: half-cycle 2 starts at 2·0.45.
        let seg = plan
            .segments(LegId::FR)
            .iter()
            .find(|s| s.phase == Phase::Swing && s.t0 > 0.8)
            .unwrap();
        let mut min_len = f64::INFINITY;
        let mut argmin = 0.0;
        for j in 0..=100 {
            let s = j as f64 / 100.0;
            let (pos, _) = seg.curve.eval(s).unwrap();
            let (_, _, len) = leg_inverse_kinematics(&pos, &robot).unwrap();
            if len < min_len {
                min_len = len;
                argmin = s;
            }
        }
        // Minimum length in the lifted middle portion of the swing.
        assert!((0.2..=0.8).contains(&argmin), "argmin {argmin}");
        let (stance_pos, _) = plan.foot_ref(LegId::FR, seg.t1 + 0.01);
        let (_, _, stance_len) = leg_inverse_kinematics(&stance_pos, &robot).unwrap();
        assert!(min_len < stance_len);
    }

    #[test]
    fn joint_rates_respect_length_limits() {
        let params = GaitParams::default();
        let robot = RobotParams::default();
        let plan = build_gait(&params, &robot).unwrap();
        let (lmin, lmax) = robot.leg_length_limits;
        let mut t = 0.0;
        while t <= params.duration {
            let r = joint_reference(t, &plan, &robot).unwrap();
            for i in 0..4 {
                let len = r.q[3 * i + 2];
                assert!(len >= lmin && len <= lmax, "leg length {len} at t = {t}");
            }
            t += 0.01;
        }
    }

    #[test]
    fn infeasible_gait_rejected() {
        let params = GaitParams::new(0.1, 0.4, 0.05, 0.05, 0.08, 3.5, 0.6);
        let err = build_gait(&params, &RobotParams::default()).unwrap_err();
        assert!(matches!(err, GaitError::Infeasible { .. }));
    }

    #[test]
    fn tracking_feedforward_at_zero_error() {
        let reference = JointReference {
            q: SVector::from_element(0.3),
            qd: SVector::from_element(-0.2),
            qdd: SVector::from_element(1.7),
        };
        let u = joint_tracking(
            &reference.q,
            &reference.qd,
            &reference,
            &JointGains::default(),
        );
        assert_relative_eq!(u, reference.qdd, epsilon = 1e-14);
    }

    #[test]
    fn tracking_gain_arithmetic() {
        let reference = JointReference {
            q: SVector::from_element(1.0),
            qd: SVector::zeros(),
            qdd: SVector::zeros(),
        };
        let u = joint_tracking(
            &SVector::zeros(),
            &SVector::zeros(),
            &reference,
            &JointGains::default(),
        );
        for i in 0..12 {
            assert_relative_eq!(u[i], 400.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn tracking_converges_without_overshoot() {
        // Double-integrator joint: q̈ = u. Unit initial error, default gains.
        let gains = JointGains::default();
        let reference = JointReference {
            q: SVector::from_element(1.0),
            qd: SVector::zeros(),
            qdd: SVector::zeros(),
        };
        let mut q = 0.0_f64;
        let mut qd = 0.0_f64;
        let dt = 1e-4;
        let mut peak = 0.0_f64;
        for _ in 0..30_000 {
            let u = gains.kp * (1.0 - q) + gains.kd * (0.0 - qd);
            q += qd * dt + 0.5 * u * dt * dt;
            qd += u * dt;
            peak = peak.max(q);
        }
        let _ = &reference;
        assert!((q - 1.0).abs() < 1e-3, "did not converge, q = {q}");
        assert!(peak <= 1.05, "overshoot beyond 5%: peak = {peak}");
    }

    #[test]
    fn narrow_start_begins_at_inward_stance() {
        let mut params = GaitParams::default();
        params.start_narrow = true;
        let robot = RobotParams::default();
        let plan = build_gait(&params, &robot).unwrap();
        for leg in LegId::ALL {
            let (p, _) = plan.foot_ref(leg, 0.0);
            assert_relative_eq!(p.y, inward_y(leg, &params), epsilon = 1e-12);
        }
        // Driving starts immediately, so the reference displacement gains
        // one half-cycle over the repositioning start.
        let mut wide = GaitParams::default();
        wide.start_narrow = false;
        let wide_plan = build_gait(&wide, &robot).unwrap();
        let gain = plan.reference_displacement() - wide_plan.reference_displacement();
        assert_relative_eq!(gain, params.step_length, epsilon = 1e-12);
    }

    #[test]
    fn gait_params_consistency_enforced() {
        let mut p = GaitParams::default();
        assert!(p.validate().is_ok());
        p.step_length = 0.123;
        assert!(matches!(p.validate(), Err(GaitError::InvalidParams(_))));
    }
}
