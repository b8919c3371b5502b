//! Thrust allocation: decompose COM wrench requests into the four fan
//! forces, including the saturating cases.

use hrom::dynamics::{thruster_wrench, wrench_allocation, Wrench};
use hrom::model::RobotParams;
use nalgebra::Vector3;

fn show(label: &str, desired: Wrench, robot: &RobotParams) {
    let alloc = wrench_allocation(&desired, robot);
    println!("{label}");
    println!(
        "  request: force {:?} moment {:?}",
        desired.force, desired.moment
    );
    println!("  raw fans: {:?}", alloc.raw);
    println!(
        "  clamped:  {:?} (saturated: {})",
        alloc.forces.0, alloc.saturated
    );
    println!(
        "  applied:  force {:?} moment {:?}",
        alloc.applied.force, alloc.applied.moment
    );
    let recondensed = thruster_wrench(&alloc.forces, robot).unwrap();
    assert_eq!(recondensed, alloc.applied);
    println!();
}

fn main() {
    let robot = RobotParams::default();
    println!(
        "fan layout: {:?}, per-fan limit {:.2} N\n",
        robot.thruster_positions, robot.max_thrust_per_edf
    );
    show(
        "pure lift (within budget)",
        Wrench {
            force: Vector3::new(0.0, 0.0, 40.0),
            moment: Vector3::zeros(),
        },
        &robot,
    );
    show(
        "lift plus roll moment",
        Wrench {
            force: Vector3::new(0.0, 0.0, 30.0),
            moment: Vector3::new(1.0, 0.0, 0.0),
        },
        &robot,
    );
    show(
        "pure roll moment (fans cannot pull, so it saturates)",
        Wrench {
            force: Vector3::zeros(),
            moment: Vector3::new(0.5, 0.0, 0.0),
        },
        &robot,
    );
    show(
        "over budget",
        Wrench {
            force: Vector3::new(0.0, 0.0, 120.0),
            moment: Vector3::zeros(),
        },
        &robot,
    );
}
