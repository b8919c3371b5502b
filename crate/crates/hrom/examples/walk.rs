//! Reproduce the walking scenario: 3.5 s of narrow-path walking at
//! 0.1 m/s with thruster attitude stabilization, printing summary stats.

use hrom::contact::GroundParams;
use hrom::gait::{build_gait, GaitParams};
use hrom::model::RobotParams;
use hrom::sim::{simulate, standing_start, SimConfig};

fn main() {
    let robot = RobotParams::default();
    let ground = GroundParams::default();
    let gait = GaitParams::default();
    let config = SimConfig::default();

    let plan = build_gait(&gait, &robot).expect("feasible gait");
    let (initial, penetration) = standing_start(&robot, gait.body_height, &ground);
    println!("initial penetration: {:.3} mm", penetration * 1e3);
    println!(
        "reference displacement: {:.3} m",
        plan.reference_displacement()
    );

    let result = simulate(&config, &initial, &plan, &robot, &ground);
    if let Some(abort) = &result.abort {
        eprintln!("simulation aborted: {}", abort.error);
        std::process::exit(3);
    }
    let traj = &result.trajectory;
    let mut max_roll = 0.0_f64;
    let mut max_pitch = 0.0_f64;
    let mut max_omega = 0.0_f64;
    let mut max_thrust = 0.0_f64;
    for row in &traj.rows {
        max_roll = max_roll.max(row.state.pose.orientation.roll.abs());
        max_pitch = max_pitch.max(row.state.pose.orientation.pitch.abs());
        max_omega = max_omega.max(row.state.velocity.angular.norm());
        max_thrust = max_thrust.max(row.thrusters.total());
    }
    let last = traj.rows.last().unwrap();
    println!(
        "duration:        {:.3} s ({} rows)",
        traj.duration(),
        traj.rows.len()
    );
    println!(
        "displacement:    {:.4} m (x: {:.4} -> {:.4})",
        traj.forward_displacement(),
        traj.rows[0].state.pose.position.x,
        last.state.pose.position.x
    );
    println!("lateral drift:   {:.4} m", last.state.pose.position.y);
    println!("final height:    {:.4} m", last.state.pose.position.z);
    println!("max |roll|:      {:.4} rad", max_roll);
    println!("max |pitch|:     {:.4} rad", max_pitch);
    println!("max |omega|:     {:.4} rad/s", max_omega);
    println!(
        "max total thrust {:.2} N (budget {:.2} N)",
        max_thrust,
        robot.thrust_budget()
    );
}
