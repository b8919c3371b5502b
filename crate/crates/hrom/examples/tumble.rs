//! Torque-free rigid-body tumble: kinetic + potential energy and the
//! angular-momentum magnitude are conserved along the RK4 roll-out.

use hrom::contact::GroundParams;
use hrom::dynamics::{dynamics_eval, ControlInput};
use hrom::model::{
    BodyPose, BodyVelocity, EulerAngles, FullState, LegJointState, LegJoints, RobotParams,
    STATE_DIM,
};
use hrom::sim::rk4_step;
use nalgebra::{SVector, Vector3};

fn main() {
    let robot = RobotParams::default();
    let ground = GroundParams::default();
    // Spin near the intermediate inertia axis; the pitch offset keeps the
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
    let momentum = |s: &FullState| (robot.inertia * s.velocity.angular).norm();

    let (e0, h0) = (energy(&state), momentum(&state));
    println!("t = 0.0 s   E = {e0:.9} J   |I w| = {h0:.9} N m s");

    let f = |xs: &SVector<f64, STATE_DIM>| {
        dynamics_eval(&FullState::unflatten(xs), &input, &robot, &ground).map(|e| e.xdot)
    };
    for step in 1..=1000 {
        state = FullState::unflatten(&rk4_step(&f, &state.flatten(), 1e-3).unwrap());
        if step % 250 == 0 {
            println!(
                "t = {:.1} s   E drift {:.2e}   |I w| drift {:.2e}",
                step as f64 * 1e-3,
                (energy(&state) - e0) / e0,
                (momentum(&state) - h0) / h0
            );
        }
    }
}
