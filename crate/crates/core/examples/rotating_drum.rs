//! Two-layer ellipsoid bed in a drum turning at 20 rpm: interface contacts
//! between the layers and the mean particle speed every quarter turn.
//!
//! ```text
//! cargo run --release --example rotating_drum -- [count] [revolutions]
//! ```
//!
//! Defaults: 100 particles, half a revolution (the full scene uses 1000
//! particles and two revolutions).

use std::path::Path;

use msdem::analysis::interface_contacts;
use msdem::config::StopConfig;
use msdem::presets;
use msdem::sim::Simulation;

fn main() -> msdem::Result<()> {
    let mut args = std::env::args().skip(1);
    let count: usize = args.next().and_then(|c| c.parse().ok()).unwrap_or(100);
    let revolutions: f64 = args.next().and_then(|c| c.parse().ok()).unwrap_or(0.5);
    let period = 3.0;
    let mut scene = presets::drum();
    scene.streams[0].stop = StopConfig::Count(count);
    scene.run.time_after_actions = Some(revolutions * period);
    let mut sim = Simulation::from_scene(&scene, Path::new("."))?;
    let mut quarter = 0;
    println!("revolution,interface_contacts,mean_speed_m_s");
    sim.run_with(|sim| {
        let Some(t0) = sim.actions_done_at else { return Ok(()) };
        if sim.time - t0 >= quarter as f64 * 0.25 * period {
            let n = sim.world.particles.len().max(1) as f64;
            let speed = sim.world.particles.iter().map(|p| p.v.norm()).sum::<f64>() / n;
            println!("{:.2},{},{speed:.4}", quarter as f64 * 0.25, interface_contacts(&sim.world)?);
            quarter += 1;
        }
        Ok(())
    })?;
    Ok(())
}
