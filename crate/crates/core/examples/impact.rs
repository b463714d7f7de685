//! Head-on impacts of a flat-lying ellipsoid on a wall and on a fixed twin.
//!
//! Prints the rebound ratio (rebound over approach speed), the contact
//! duration and the peak number of primary spheres in contact for a few
//! Young's moduli.
//!
//! ```text
//! cargo run --release --example impact
//! ```

use std::path::Path;

use msdem::config::SceneConfig;
use msdem::presets;
use msdem::sim::Simulation;

fn impact(scene: SceneConfig) -> msdem::Result<(f64, f64, usize)> {
    let mut sim = Simulation::from_scene(&scene, Path::new("."))?;
    let (mut first, mut last, mut peak) = (None, 0.0, 0);
    sim.run_with(|sim| {
        let n = sim.live_contacts();
        if n > 0 {
            first.get_or_insert(sim.time);
            last = sim.time;
            peak = peak.max(n);
        }
        Ok(())
    })?;
    let v = sim.world.particles.iter().find(|p| !p.fixed).map_or(0.0, |p| p.v.z);
    Ok((v / 1.0, last - first.unwrap_or(last), peak))
}

fn main() -> msdem::Result<()> {
    println!("case,young_gpa,rebound,contact_us,peak_contacts");
    for young in [0.5e9, 1.06e9, 10e9, 50e9] {
        for (case, scene) in [("wall", presets::impact_wall(young)), ("pair", presets::impact_pp(young))] {
            let (e, t, n) = impact(scene)?;
            println!("{case},{},{e:.4},{:.2},{n}", young / 1e9, t * 1e6);
        }
    }
    Ok(())
}
