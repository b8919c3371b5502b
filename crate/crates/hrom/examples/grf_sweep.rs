//! Ground-reaction curves: normal force against penetration, and the
//! velocity-dependent friction blend against slip speed.

use hrom::contact::{ground_reaction, GroundParams};
use nalgebra::Vector3;

fn main() {
    let ground = GroundParams::default();

    println!("# normal force vs penetration (static foot)");
    println!("penetration_mm,u_z_n");
    for i in 0..=20 {
        let depth = i as f64 * 2.5e-4;
        let f = ground_reaction(&Vector3::new(0.0, 0.0, -depth), &Vector3::zeros(), &ground);
        println!("{},{}", depth * 1e3, f.force.z);
    }

    println!("# tangential force vs slip speed at 3 mm penetration");
    println!("v_mps,u_x_n");
    for i in -60..=60 {
        let v = i as f64 * 1e-3;
        let f = ground_reaction(
            &Vector3::new(0.0, 0.0, -0.003),
            &Vector3::new(v, 0.0, 0.0),
            &ground,
        );
        println!("{v},{}", f.force.x);
    }
}
