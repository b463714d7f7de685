//! Rayleigh and Hertz time-step bounds of every built-in scene next to the
//! step the scene actually uses.
//!
//! ```text
//! cargo run --example estimate_dt
//! ```

use std::path::Path;

use msdem::presets;
use msdem::sim::Simulation;

fn main() -> msdem::Result<()> {
    println!("scene,t_rayleigh_s,t_hertz_s,dt_critical_s,dt_s,ratio");
    for name in presets::names() {
        let scene = presets::preset(&name).expect("listed preset");
        let sim = Simulation::from_scene(&scene, Path::new("."))?;
        let Some(e) = sim.estimate else { continue };
        let hertz = e.t_hertz.map_or("-".to_string(), |t| format!("{t:.3e}"));
        println!(
            "{name},{:.3e},{hertz},{:.3e},{:.1e},{:.2}",
            e.t_rayleigh,
            e.dt_critical,
            sim.dt(),
            sim.dt() / e.dt_critical
        );
    }
    Ok(())
}
