//! Command-line front end. Log verbosity follows `MSDEM_LOG` (e.g. `info`, `debug`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use msdem::analysis::{measure, Measure};
use msdem::config::{parse_scene, to_toml, SceneConfig};
use msdem::output::{export_meshes, load_snapshot, read_last_snapshot, MeshKind};
use msdem::presets;
use msdem::sim::Simulation;
use msdem::{Error, Result};

#[derive(Parser)]
#[command(name = "msdem", version, about = "Multi-sphere discrete element simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scene (TOML file or preset name).
    Run {
        scene: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Record the deterministic flag in the scene copy and the log.
        #[arg(long)]
        deterministic: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the Rayleigh and Hertz time-step bounds of a scene.
    EstimateDt { scene: String },
    /// Measure the last snapshot of a trajectory.
    Analyze {
        snapshot: PathBuf,
        #[arg(long, value_enum)]
        measure: MeasureArg,
        /// Scene of the run; defaults to `scene.toml` next to the snapshot.
        #[arg(long)]
        scene: Option<String>,
    },
    /// Write per-particle meshes posed as in the last snapshot.
    ExportMesh {
        snapshot: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        scene: Option<String>,
        #[arg(long, default_value = "meshes")]
        out: PathBuf,
    },
    /// Print a built-in scene as TOML, or list them without a name.
    Preset { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum MeasureArg {
    FillHeight,
    Porosity,
    Aor,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Surface,
    Cells,
}

/// A scene argument is a TOML path or, failing that, a preset name.
fn load_scene(arg: &str) -> Result<(SceneConfig, PathBuf)> {
    let path = Path::new(arg);
    if path.is_file() {
        let scene = parse_scene(&std::fs::read_to_string(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        return Ok((scene, base));
    }
    presets::preset(arg).map(|s| (s, PathBuf::from("."))).ok_or_else(|| {
        Error::validation("scene", format!("`{arg}` is neither a file nor a preset ({})", presets::names().join(", ")))
    })
}

fn scene_for_snapshot(snapshot: &Path, scene: Option<&str>) -> Result<(SceneConfig, PathBuf)> {
    match scene {
        Some(s) => load_scene(s),
        None => {
            let dir = snapshot.parent().unwrap_or(Path::new("."));
            load_scene(&dir.join("scene.toml").to_string_lossy())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scene, seed, deterministic, out } => {
            let (mut scene, base) = load_scene(&scene)?;
            if let Some(s) = seed {
                scene.seed = s;
            }
            scene.step.deterministic |= deterministic;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("scene.toml"), to_toml(&scene)?)?;
            let mut sim = Simulation::from_scene(&scene, &base)?;
            info!("scene `{}`: dt = {:e} s", scene.name, sim.dt());
            let reason = sim.run_recorded(&out, scene.output.every)?;
            println!(
                "{}: stopped ({reason:?}) at t = {} s after {} steps, {} particles; output in {}",
                scene.name,
                sim.time,
                sim.steps,
                sim.world.particles.len(),
                out.display()
            );
        }
        Command::EstimateDt { scene } => {
            let (scene, base) = load_scene(&scene)?;
            let sim = Simulation::from_scene(&scene, &base)?;
            let e = sim
                .estimate
                .ok_or_else(|| Error::validation("templates", "scene has no templates to estimate from"))?;
            println!("rayleigh,{:e}", e.t_rayleigh);
            match e.t_hertz {
                Some(t) => println!("hertz,{t:e}"),
                None => println!("hertz,none"),
            }
            println!("critical,{:e}", e.dt_critical);
            println!("chosen,{:e}", sim.dt());
        }
        Command::Analyze { snapshot, measure: which, scene } => {
            let (scene, base) = scene_for_snapshot(&snapshot, scene.as_deref())?;
            let cfg = scene
                .analysis
                .clone()
                .ok_or_else(|| Error::validation("analysis", "scene has no [analysis] container"))?;
            let mut world = Simulation::from_scene(&scene, &base)?.world;
            load_snapshot(&mut world, &read_last_snapshot(&snapshot)?)?;
            let (name, which) = match which {
                MeasureArg::FillHeight => ("fill-height", Measure::FillHeight),
                MeasureArg::Porosity => ("porosity", Measure::Porosity),
                MeasureArg::Aor => ("aor", Measure::AngleOfRepose),
            };
            let m = measure(&world, &cfg, which)?;
            println!("measure,value,sd");
            println!("{name},{},{}", m.value, m.sd);
        }
        Command::ExportMesh { snapshot, kind, scene, out } => {
            let (scene, base) = scene_for_snapshot(&snapshot, scene.as_deref())?;
            let world = Simulation::from_scene(&scene, &base)?.world;
            let kind = match kind {
                KindArg::Surface => MeshKind::Surface,
                KindArg::Cells => MeshKind::Cells,
            };
            let report = export_meshes(&read_last_snapshot(&snapshot)?, &world, kind, &out)?;
            println!("wrote {} meshes to {}, skipped {}", report.written.len(), out.display(), report.skipped.len());
        }
        Command::Preset { name: None } => {
            for n in presets::names() {
                println!("{n}");
            }
        }
        Command::Preset { name: Some(name) } => {
            let scene = presets::preset(&name)
                .ok_or_else(|| Error::validation("preset", format!("unknown preset `{name}`")))?;
            print!("{}", to_toml(&scene)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MSDEM_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
