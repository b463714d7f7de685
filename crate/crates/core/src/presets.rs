//! Built-in scenes: impact tests, container packings, dam breaks and a
//! rotating drum. `msdem preset <name>` prints any of them as TOML.
//!
//! Dimensions from millimetre tables are converted to meters here.

use crate::config::{
    Action, AnalysisConfig, Container, NeighborConfig, OutputConfig, ParticleConfig, RegionConfig,
    RotationConfig, RunConfig, SceneConfig, StepConfig, StopConfig, StreamConfig, TemplateConfig,
    WallConfig, WallGeometry,
};
use crate::shape::{CurvatureModel, ShapeKind};
use crate::world::Material;

const MM: f64 = 1e-3;

/// Shapes of the equal-volume packing and dam-break series.
pub const SHAPE_KINDS: [&str; 5] = ["sphere", "ellipsoid", "spherocylinder", "cassini", "torus"];

/// Every preset name accepted by [`preset`].
pub fn names() -> Vec<String> {
    let mut out = vec!["impact-wall".to_string(), "impact-pp".into(), "pack-capsules".into()];
    out.extend(SHAPE_KINDS.iter().map(|k| format!("pack-shapes-{k}")));
    out.extend(SHAPE_KINDS.iter().map(|k| format!("dam-break-{k}")));
    out.push("drum".into());
    out
}

/// Looks up a preset by name.
pub fn preset(name: &str) -> Option<SceneConfig> {
    match name {
        "impact-wall" => Some(impact_wall(10e9)),
        "impact-pp" => Some(impact_pp(10e9)),
        "pack-capsules" => Some(pack_capsules()),
        "drum" => Some(drum()),
        _ => {
            if let Some(kind) = name.strip_prefix("pack-shapes-") {
                pack_shapes(kind)
            } else if let Some(kind) = name.strip_prefix("dam-break-") {
                dam_break(kind)
            } else {
                None
            }
        }
    }
}

fn material(name: &str, young: f64, density: f64, friction_pp: f64, friction_pw: f64, rolling: f64) -> Material {
    Material {
        name: name.into(),
        young,
        poisson: 0.3,
        density,
        restitution: 0.6,
        friction_pp,
        friction_pw,
        rolling,
    }
}

fn base(name: &str) -> SceneConfig {
    SceneConfig {
        name: name.into(),
        seed: 1,
        gravity: [0.0, 0.0, -9.81],
        run: RunConfig::default(),
        step: StepConfig::default(),
        neighbor: NeighborConfig::default(),
        output: OutputConfig::default(),
        analysis: None,
        materials: Vec::new(),
        templates: Vec::new(),
        walls: Vec::new(),
        particles: Vec::new(),
        streams: Vec::new(),
        on_settled: Vec::new(),
    }
}

fn plane(name: Option<&str>, material: &str, point: [f64; 3], normal: [f64; 3]) -> WallConfig {
    WallConfig {
        name: name.map(Into::into),
        material: material.into(),
        geometry: WallGeometry::Plane { point, normal },
        rotation: None,
    }
}

/// Impact ellipsoid: semi-axes 5 and 2.5 mm, 15 spheres.
fn impact_ellipsoid() -> TemplateConfig {
    TemplateConfig {
        name: "ellipsoid".into(),
        material: "glass".into(),
        shape: ShapeKind::Ellipsoid { a: 5.0 * MM, b: 2.5 * MM },
        spheres: 15,
        curvature: CurvatureModel::EquivalentVolume,
        surface: None,
        cells: None,
    }
}

fn impact_base(name: &str, young: f64) -> SceneConfig {
    let mut s = base(name);
    s.gravity = [0.0; 3];
    s.run.end_time = Some(3e-4);
    s.step.dt = Some(1e-7);
    s.output.every = 10;
    s.materials.push(material("glass", young, 2500.0, 0.0, 0.0, 0.0));
    s.templates.push(impact_ellipsoid());
    s
}

/// Initial gap between the falling ellipsoid and its target.
pub const IMPACT_GAP: f64 = 10e-6;

/// Ellipsoid lying flat, falling at 1 m/s onto the floor `z = 0`; no
/// gravity, no friction. The wall shares the particle's material.
pub fn impact_wall(young: f64) -> SceneConfig {
    let mut s = impact_base("impact-wall", young);
    s.walls.push(plane(Some("floor"), "glass", [0.0; 3], [0.0, 0.0, 1.0]));
    s.particles.push(ParticleConfig {
        template: "ellipsoid".into(),
        position: [0.0, 0.0, 2.5 * MM + IMPACT_GAP],
        orientation: [1.0, 0.0, 0.0, 0.0],
        velocity: [0.0, 0.0, -1.0],
        angular_velocity: [0.0; 3],
        fixed: false,
        tag: 0,
    });
    s
}

/// Same ellipsoid falling at 1 m/s onto an identical, fixed ellipsoid.
pub fn impact_pp(young: f64) -> SceneConfig {
    let mut s = impact_base("impact-pp", young);
    s.particles.push(ParticleConfig {
        template: "ellipsoid".into(),
        position: [0.0; 3],
        orientation: [1.0, 0.0, 0.0, 0.0],
        velocity: [0.0; 3],
        angular_velocity: [0.0; 3],
        fixed: true,
        tag: 0,
    });
    s.particles.push(ParticleConfig {
        template: "ellipsoid".into(),
        position: [0.0, 0.0, 5.0 * MM + IMPACT_GAP],
        orientation: [1.0, 0.0, 0.0, 0.0],
        velocity: [0.0, 0.0, -1.0],
        angular_velocity: [0.0; 3],
        fixed: false,
        tag: 1,
    });
    s
}

/// Material of the packing, dam-break and drum scenes.
fn packing_material(density: f64) -> Material {
    material("pellet", 5e7, density, 0.4, 0.3, 0.001)
}

fn packing_run(s: &mut SceneConfig) {
    s.run.stop_when_settled = true;
    s.run.end_time = Some(60.0);
    s.step.dt = Some(5e-7);
    s.output.every = 100_000;
}

/// 600 capsules (R = 3.8 mm, L = 13.8 mm, 21 spheres) poured into a
/// cylinder of 93.5 mm diameter and 195 mm height.
pub fn pack_capsules() -> SceneConfig {
    let mut s = base("pack-capsules");
    packing_run(&mut s);
    s.materials.push(packing_material(917.0));
    s.templates.push(TemplateConfig {
        name: "capsule".into(),
        material: "pellet".into(),
        shape: ShapeKind::Spherocylinder { radius: 3.8 * MM, length: 13.8 * MM },
        spheres: 21,
        curvature: CurvatureModel::EquivalentVolume,
        surface: None,
        cells: None,
    });
    let r = 0.5 * 93.5 * MM;
    s.walls.push(plane(Some("floor"), "pellet", [0.0; 3], [0.0, 0.0, 1.0]));
    s.walls.push(WallConfig {
        name: Some("container".into()),
        material: "pellet".into(),
        geometry: WallGeometry::Cylinder { radius: r, p1: [0.0; 3], p2: [0.0, 0.0, 195.0 * MM], inside: true },
        rotation: None,
    });
    s.streams.push(StreamConfig {
        template: "capsule".into(),
        region: RegionConfig::Cylinder { base_center: [0.0, 0.0, 150.0 * MM], radius: r, height: 45.0 * MM },
        velocity: [0.0; 3],
        interval: 100_000,
        batch: [6, 10],
        stop: StopConfig::Count(600),
        tag: 0,
    });
    s.analysis = Some(AnalysisConfig {
        container: Container::Cylinder { center: [0.0, 0.0], radius: r },
        floor: 0.0,
        stations: 120,
        flow_axis: 0,
    });
    s
}

/// Volume shared by the shape series: the 5 mm x 2.5 mm spheroid.
pub fn series_volume() -> f64 {
    4.0 / 3.0 * std::f64::consts::PI * 5.0 * MM * (2.5 * MM) * (2.5 * MM)
}

/// Template of the equal-volume series for `kind`.
pub fn series_template(kind: &str) -> Option<TemplateConfig> {
    let (shape, spheres) = match kind {
        "sphere" => (ShapeKind::Sphere { radius: 1.0 }, 1),
        "ellipsoid" => (ShapeKind::Ellipsoid { a: 2.0, b: 1.0 }, 15),
        "spherocylinder" => (ShapeKind::Spherocylinder { radius: 1.0, length: 3.0 }, 17),
        "cassini" => (ShapeKind::Cassini { a: 1.0, b: 1.1 }, 29),
        "torus" => (ShapeKind::Torus { major: 2.5, minor: 1.0 }, 64),
        _ => return None,
    };
    let shape = shape.with_volume(series_volume()).ok()?;
    Some(TemplateConfig {
        name: kind.into(),
        material: "pellet".into(),
        shape,
        spheres,
        curvature: CurvatureModel::EquivalentVolume,
        surface: None,
        cells: None,
    })
}

const BOX_SIDE: f64 = 35.0 * MM;

/// Side walls of a box `[0, x_len] x [0, BOX_SIDE]` plus the floor.
fn box_walls(x_len: f64) -> Vec<WallConfig> {
    vec![
        plane(Some("floor"), "pellet", [0.0; 3], [0.0, 0.0, 1.0]),
        plane(Some("left"), "pellet", [0.0; 3], [1.0, 0.0, 0.0]),
        plane(Some("right"), "pellet", [x_len, 0.0, 0.0], [-1.0, 0.0, 0.0]),
        plane(Some("rear"), "pellet", [0.0; 3], [0.0, 1.0, 0.0]),
        plane(Some("front"), "pellet", [0.0, BOX_SIDE, 0.0], [0.0, -1.0, 0.0]),
    ]
}

fn series_stream(kind: &str) -> StreamConfig {
    StreamConfig {
        template: kind.into(),
        region: RegionConfig::Box { min: [0.0, 0.0, 95.0 * MM], max: [BOX_SIDE, BOX_SIDE, 118.0 * MM] },
        velocity: [0.0; 3],
        interval: 100_000,
        batch: [6, 10],
        stop: StopConfig::Count(300),
        tag: 0,
    }
}

/// 300 particles of one shape poured into a 35 x 35 x 120 mm box.
pub fn pack_shapes(kind: &str) -> Option<SceneConfig> {
    let mut s = base(&format!("pack-shapes-{kind}"));
    packing_run(&mut s);
    s.materials.push(packing_material(917.0));
    s.templates.push(series_template(kind)?);
    s.walls = box_walls(BOX_SIDE);
    s.streams.push(series_stream(kind));
    s.analysis = Some(AnalysisConfig {
        container: Container::Box { min: [0.0, 0.0], max: [BOX_SIDE, BOX_SIDE] },
        floor: 0.0,
        stations: 120,
        flow_axis: 0,
    });
    Some(s)
}

/// The same 300-particle column packed behind a barrier at x = 35 mm in a
/// 120 mm long channel; once settled the barrier is removed and the heap
/// is left to settle again.
pub fn dam_break(kind: &str) -> Option<SceneConfig> {
    let mut s = base(&format!("dam-break-{kind}"));
    packing_run(&mut s);
    s.materials.push(packing_material(917.0));
    s.templates.push(series_template(kind)?);
    s.walls = box_walls(120.0 * MM);
    s.walls.push(plane(Some("barrier"), "pellet", [BOX_SIDE, 0.0, 0.0], [-1.0, 0.0, 0.0]));
    s.streams.push(series_stream(kind));
    s.on_settled.push(Action::RemoveWall { wall: "barrier".into() });
    s.analysis = Some(AnalysisConfig {
        container: Container::Box { min: [0.0, 0.0], max: [120.0 * MM, BOX_SIDE] },
        floor: 0.0,
        stations: 120,
        flow_axis: 0,
    });
    Some(s)
}

/// Drum radius and thickness.
pub const DRUM_RADIUS: f64 = 0.1;
pub const DRUM_THICKNESS: f64 = 20.0 * MM;

/// 1000 ellipsoids settled in a drum (axis y, 200 mm diameter, 20 mm deep),
/// split into a lower (tag 1) and upper (tag 2) layer and turned at 20 rpm
/// for two revolutions.
pub fn drum() -> SceneConfig {
    let mut s = base("drum");
    packing_run(&mut s);
    s.run.stop_when_settled = false;
    s.run.time_after_actions = Some(6.0);
    s.materials.push(packing_material(1150.0));
    let mut t = impact_ellipsoid();
    t.material = "pellet".into();
    s.templates.push(t);
    let spin = Some(RotationConfig { axis_point: [0.0; 3], axis: [0.0, 1.0, 0.0], rpm: 20.0, deferred: true });
    s.walls.push(WallConfig {
        name: Some("shell".into()),
        material: "pellet".into(),
        geometry: WallGeometry::Cylinder {
            radius: DRUM_RADIUS,
            p1: [0.0; 3],
            p2: [0.0, DRUM_THICKNESS, 0.0],
            inside: true,
        },
        rotation: spin.clone(),
    });
    let mut rear = plane(Some("rear"), "pellet", [0.0; 3], [0.0, 1.0, 0.0]);
    rear.rotation = spin.clone();
    let mut front = plane(Some("front"), "pellet", [0.0, DRUM_THICKNESS, 0.0], [0.0, -1.0, 0.0]);
    front.rotation = spin;
    s.walls.push(rear);
    s.walls.push(front);
    s.streams.push(StreamConfig {
        template: "ellipsoid".into(),
        region: RegionConfig::Box { min: [-0.07, 0.0, -0.03], max: [0.07, DRUM_THICKNESS, 0.07] },
        velocity: [0.0; 3],
        interval: 40_000,
        batch: [40, 60],
        stop: StopConfig::Count(1000),
        tag: 0,
    });
    s.on_settled = vec![
        Action::TagLayers,
        Action::StartRotation { wall: "shell".into() },
        Action::StartRotation { wall: "rear".into() },
        Action::StartRotation { wall: "front".into() },
    ];
    s
}
