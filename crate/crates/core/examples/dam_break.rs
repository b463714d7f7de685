//! Dam break: a column packed behind a barrier collapses into a heap once
//! the barrier is removed; prints the angle of repose.
//!
//! ```text
//! cargo run --release --example dam_break -- [shape] [count]
//! ```
//!
//! Defaults: sphere, 60 particles (the full series uses 300).

use std::path::Path;

use msdem::analysis::{free_surface, measure, Measure, View};
use msdem::config::StopConfig;
use msdem::presets;
use msdem::sim::{Event, Simulation};

fn main() -> msdem::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind = args.next().unwrap_or_else(|| "sphere".into());
    let count: usize = args.next().and_then(|c| c.parse().ok()).unwrap_or(60);
    let Some(mut scene) = presets::dam_break(&kind) else {
        eprintln!("unknown shape `{kind}`; try one of {:?}", presets::SHAPE_KINDS);
        std::process::exit(2);
    };
    scene.streams[0].stop = StopConfig::Count(count);
    let mut sim = Simulation::from_scene(&scene, Path::new("."))?;
    let reason = sim.run_with(|sim| {
        for e in sim.drain_events() {
            if matches!(e, Event::Settled { .. } | Event::Action { .. } | Event::StreamDone { .. }) {
                println!("{e}");
            }
        }
        Ok(())
    })?;
    let cfg = scene.analysis.as_ref().expect("preset has a container");
    let aor = measure(&sim.world, cfg, Measure::AngleOfRepose)?;
    println!("{kind}: {} particles, stopped {reason:?} at t = {:.3} s", sim.world.particles.len(), sim.time);
    println!("angle of repose {:.1}°", aor.value);
    let profile = free_surface(&sim.world.global_spheres(), View { axis: 0, lo: 0.0, hi: 0.12 }, 0.0, 24)?;
    println!("x_mm,height_mm");
    for (x, h) in profile.stations.iter().zip(&profile.heights) {
        println!("{:.0},{:.2}", x * 1e3, h * 1e3);
    }
    Ok(())
}
