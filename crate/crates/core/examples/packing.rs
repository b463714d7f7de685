//! Pours particles of one shape into the 35 mm box, waits for the bed to
//! settle and reports fill height and porosity.
//!
//! ```text
//! cargo run --release --example packing -- [shape] [count]
//! ```
//!
//! `shape` is one of sphere, ellipsoid, spherocylinder, cassini, torus
//! (default sphere); `count` defaults to 60. The full series uses 300.

use std::path::Path;
use std::time::Instant;

use msdem::analysis::{measure, Measure};
use msdem::config::StopConfig;
use msdem::presets;
use msdem::sim::Simulation;

fn main() -> msdem::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind = args.next().unwrap_or_else(|| "sphere".into());
    let count: usize = args.next().and_then(|c| c.parse().ok()).unwrap_or(60);
    let Some(mut scene) = presets::pack_shapes(&kind) else {
        eprintln!("unknown shape `{kind}`; try one of {:?}", presets::SHAPE_KINDS);
        std::process::exit(2);
    };
    scene.streams[0].stop = StopConfig::Count(count);
    let mut sim = Simulation::from_scene(&scene, Path::new("."))?;
    let start = Instant::now();
    let reason = sim.run_with(|sim| {
        if sim.steps % 200_000 == 0 {
            println!("t = {:.3} s, {} particles", sim.time, sim.world.particles.len());
        }
        Ok(())
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    let cfg = scene.analysis.as_ref().expect("preset has a container");
    let h = measure(&sim.world, cfg, Measure::FillHeight)?;
    let phi = measure(&sim.world, cfg, Measure::Porosity)?;
    println!("{kind}: {} particles, stopped {reason:?} at t = {:.3} s", sim.world.particles.len(), sim.time);
    println!("fill height {:.2} ± {:.2} mm", h.value * 1e3, h.sd * 1e3);
    println!("porosity {:.1} ± {:.1} %", phi.value * 100.0, phi.sd * 100.0);
    let sphere_steps = sim.steps as f64 * sim.world.sphere_count() as f64;
    println!("{} steps in {elapsed:.1} s ({:.0} ns per sphere-step at the end count)", sim.steps, 1e9 * elapsed / sphere_steps);
    Ok(())
}
