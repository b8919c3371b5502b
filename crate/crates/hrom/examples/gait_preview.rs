//! Print the diagonal-pair contact schedule and sampled swing curves of the
//! default gait. Pipe the CSV block into a plotting tool to see the foot
//! trajectories.

use hrom::gait::{build_gait, GaitParams, Phase};
use hrom::model::{LegId, RobotParams};

fn main() {
    let robot = RobotParams::default();
    let params = GaitParams::default();
    let plan = build_gait(&params, &robot).expect("default gait is feasible");

    println!(
        "# gait: v_ref {} m/s, step {} s + pause {} s, step length {:.3} m",
        params.forward_velocity, params.step_time, params.pause_time, params.step_length
    );
    println!(
        "# reference forward displacement over {} s: {:.3} m",
        params.duration,
        plan.reference_displacement()
    );

    // Phase bands over the first two full cycles.
    println!("# schedule (S = stance, W = swing, P = pause), 50 ms bins:");
    for leg in LegId::ALL {
        let mut band = String::new();
        let mut t = 0.0;
        while t < 1.8 {
            band.push(match plan.phase(leg, t) {
                Phase::Stance => 'S',
                Phase::Swing => 'W',
                Phase::Pause => 'P',
            });
            t += 0.05;
        }
        println!("# {:>2}: {band}", leg.name());
    }

    println!("t,leg,x,y,z");
    let mut t = 0.0;
    while t <= params.duration {
        for leg in LegId::ALL {
            let (p, _) = plan.foot_ref(leg, t);
            println!("{t},{},{},{},{}", leg.name(), p.x, p.y, p.z);
        }
        t += 0.01;
    }
}
