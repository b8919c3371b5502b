//! Ballistic sanity check: with contact, thrust, and joint tracking all
//! disabled, the body follows the closed-form free-fall parabola.

use hrom::contact::GroundParams;
use hrom::gait::{build_gait, GaitParams, JointGains};
use hrom::model::RobotParams;
use hrom::sim::{simulate, standing_start, SimConfig};
use nalgebra::Vector3;

fn main() {
    let robot = RobotParams::default();
    let ground = GroundParams::default();
    let gait = GaitParams::new(0.0, 0.4, 0.05, 0.0, 0.0, 1.0, 0.275);
    let plan = build_gait(&gait, &robot).expect("standing gait is feasible");

    let mut config = SimConfig::default();
    config.duration = 1.0;
    config.thrust_ff_fraction = 0.0;
    config.kp_att = Vector3::zeros();
    config.kd_att = Vector3::zeros();
    config.joint_gains = JointGains { kp: 0.0, kd: 0.0 };

    let z0 = 10.0;
    let (mut initial, _) = standing_start(&robot, gait.body_height, &ground);
    initial.pose.position.z = z0;

    let result = simulate(&config, &initial, &plan, &robot, &ground);
    assert!(result.abort.is_none());

    let mut worst = 0.0_f64;
    for row in result.trajectory.rows.iter().step_by(100) {
        let expected = z0 - 4.905 * row.t * row.t;
        let err = (row.state.pose.position.z - expected).abs();
        worst = worst.max(err);
        println!(
            "t = {:>4.1} s   z = {:>8.4} m   closed form {:>8.4} m   error {:.2e}",
            row.t, row.state.pose.position.z, expected, err
        );
    }
    println!("worst deviation from z0 - g t^2/2: {worst:.2e} m");
}
