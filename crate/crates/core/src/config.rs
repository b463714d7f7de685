//! Scene files.
//!
//! A scene is a TOML document in SI units. Unknown keys are rejected.
//!
//! ```toml
//! name = "drop"
//! seed = 7
//! gravity = [0.0, 0.0, -9.81]
//!
//! [run]
//! end_time = 0.5            # s; and/or max_steps
//! stop_when_settled = false
//!
//! [step]
//! dt = 1e-6                 # or: divisor = 20  (Δt = Δt_c / divisor)
//!
//! [[materials]]
//! name = "glass"
//! young = 1e10
//! poisson = 0.3
//! density = 2500.0
//! restitution = 0.6
//! friction_pp = 0.4
//! friction_pw = 0.3
//!
//! [[templates]]
//! name = "bead"
//! material = "glass"
//! spheres = 1
//! shape = { kind = "sphere", radius = 0.002 }
//!
//! [[walls]]
//! name = "floor"
//! material = "glass"
//! geometry = { kind = "plane", point = [0.0, 0.0, 0.0], normal = [0.0, 0.0, 1.0] }
//!
//! [[particles]]
//! template = "bead"
//! position = [0.0, 0.0, 0.01]
//! ```
//!
//! See [`SceneConfig`] for every section; `msdem preset <name>` prints complete examples.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::shape::{CurvatureModel, ShapeKind};
use crate::world::Material;
use crate::{Error, Result};

pub type Triple = [f64; 3];

fn default_gravity() -> Triple {
    [0.0, 0.0, -9.81]
}

fn default_name() -> String {
    "scene".into()
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_gravity")]
    pub gravity: Triple,
    pub run: RunConfig,
    pub step: StepConfig,
    #[serde(default)]
    pub neighbor: NeighborConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisConfig>,
    #[serde(default)]
    pub materials: Vec<Material>,
    #[serde(default)]
    pub templates: Vec<TemplateConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub walls: Vec<WallConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub particles: Vec<ParticleConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub streams: Vec<StreamConfig>,
    /// Performed together the first time the bed settles after all streams are done.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub on_settled: Vec<Action>,
}

/// When the run ends.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Simulated time limit, s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<u64>,
    /// Stop once streams and actions are done and the bed has settled.
    #[serde(default)]
    pub stop_when_settled: bool,
    /// Stop this long (s) after the last `on_settled` action ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_after_actions: Option<f64>,
    /// Kinetic energy per particle below which the bed counts as settled, J.
    #[serde(default = "default_settle_threshold")]
    pub settle_threshold: f64,
    /// Steps between settlement checks.
    #[serde(default = "default_settle_every")]
    pub settle_check_every: u64,
    /// Abort when any particle is faster than this, m/s.
    #[serde(default = "default_speed_cap")]
    pub speed_cap: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            end_time: None,
            max_steps: None,
            stop_when_settled: false,
            time_after_actions: None,
            settle_threshold: default_settle_threshold(),
            settle_check_every: default_settle_every(),
            speed_cap: default_speed_cap(),
        }
    }
}

fn default_settle_threshold() -> f64 {
    1e-8
}
fn default_settle_every() -> u64 {
    1000
}
fn default_speed_cap() -> f64 {
    100.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    /// Explicit step, s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Divisor of the critical step, in [10, 100].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divisor: Option<u32>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub deterministic: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeighborConfig {
    /// Cell size in units of the largest primary-sphere diameter.
    pub cell_scale: f64,
    /// Target steps between rebuilds; the skin is `n v_max Δt`.
    pub rebuild_interval: u64,
    /// Lower bound on the skin in units of the smallest primary-sphere radius.
    pub min_skin: f64,
    /// Interaction range beyond contact (no long-range forces are computed).
    pub r_cut: f64,
    /// Rebuild at least this often even if nothing moved far, steps.
    pub force_every: u64,
}

impl Default for NeighborConfig {
    fn default() -> Self {
        Self { cell_scale: 2.0, rebuild_interval: 20, min_skin: 0.1, r_cut: 0.0, force_every: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Steps between trajectory snapshots; 0 writes only the first and last state.
    pub every: u64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { every: 10_000 }
    }
}

/// Container description used by `analyze`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub container: Container,
    /// Height of the floor, m.
    #[serde(default)]
    pub floor: f64,
    /// Number of station intervals per view.
    #[serde(default = "default_stations")]
    pub stations: usize,
    /// Horizontal flow direction of a heap (0 = x, 1 = y) for the angle of repose.
    #[serde(default)]
    pub flow_axis: usize,
}

fn default_stations() -> usize {
    120
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Container {
    /// Vertical cylinder around `center = [x, y]`.
    Cylinder { center: [f64; 2], radius: f64 },
    /// Axis-aligned rectangle `[x, y]` corners.
    Box { min: [f64; 2], max: [f64; 2] },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateConfig {
    pub name: String,
    pub material: String,
    pub shape: ShapeKind,
    pub spheres: usize,
    #[serde(default, skip_serializing_if = "is_default")]
    pub curvature: CurvatureModel,
    /// Triangle surface mesh (OBJ subset), body frame, relative to the scene file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<String>,
    /// Tetrahedral cell mesh (legacy VTK), body frame, relative to the scene file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WallGeometry {
    Plane { point: Triple, normal: Triple },
    Cylinder { radius: f64, p1: Triple, p2: Triple, inside: bool },
    /// Triangle mesh (OBJ subset) in world coordinates, relative to the scene file.
    Mesh { path: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    pub axis_point: Triple,
    pub axis: Triple,
    pub rpm: f64,
    /// Wait for a `start-rotation` action instead of turning from t = 0.
    #[serde(default, skip_serializing_if = "is_default")]
    pub deferred: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub material: String,
    pub geometry: WallGeometry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub template: String,
    pub position: Triple,
    /// Unit quaternion `[w, x, y, z]`.
    #[serde(default = "identity_quaternion")]
    pub orientation: [f64; 4],
    #[serde(default, skip_serializing_if = "is_default")]
    pub velocity: Triple,
    #[serde(default, skip_serializing_if = "is_default")]
    pub angular_velocity: Triple,
    #[serde(default, skip_serializing_if = "is_default")]
    pub fixed: bool,
    #[serde(default, skip_serializing_if = "is_default")]
    pub tag: u32,
}

fn identity_quaternion() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionConfig {
    Box { min: Triple, max: Triple },
    /// Vertical cylinder standing on `base_center`.
    Cylinder { base_center: Triple, radius: f64, height: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopConfig {
    Count(usize),
    /// Total inserted mass, kg.
    Mass(f64),
    Exhaustion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    pub template: String,
    pub region: RegionConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub velocity: Triple,
    /// Steps between triggers.
    pub interval: u64,
    /// Inclusive range of particles requested per trigger.
    pub batch: [usize; 2],
    pub stop: StopConfig,
    #[serde(default, skip_serializing_if = "is_default")]
    pub tag: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Action {
    /// Deactivate a wall (e.g. lift a dam-break barrier).
    RemoveWall { wall: String },
    /// Start a wall's deferred rotation.
    StartRotation { wall: String },
    /// Tag the lower half of the particles (by height) 1 and the upper half 2.
    TagLayers,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a scene document.
pub fn parse_scene(text: &str) -> Result<SceneConfig> {
    let scene: SceneConfig = toml::from_str(text).map_err(|e| {
        let message = e.message().to_string();
        if let Some(field) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            return Error::validation(field, "missing");
        }
        Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message,
        }
    })?;
    scene.validate()?;
    Ok(scene)
}

/// Serializes a scene back to TOML.
pub fn to_toml(scene: &SceneConfig) -> Result<String> {
    toml::to_string(scene).map_err(|e| Error::validation("scene", e.to_string()))
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("must be positive, got {v}")))
    }
}

impl SceneConfig {
    pub fn material_index(&self, name: &str) -> Option<usize> {
        self.materials.iter().position(|m| m.name == name)
    }

    pub fn template_index(&self, name: &str) -> Option<usize> {
        self.templates.iter().position(|t| t.name == name)
    }

    pub fn wall_index(&self, name: &str) -> Option<usize> {
        self.walls.iter().position(|w| w.name.as_deref() == Some(name))
    }

    /// Checks cross references and physical ranges.
    pub fn validate(&self) -> Result<()> {
        if self.run.end_time.is_none() && self.run.max_steps.is_none() && !self.run.stop_when_settled {
            return Err(Error::validation("run", "needs end_time, max_steps or stop_when_settled"));
        }
        if let Some(t) = self.run.end_time {
            positive("run.end_time", t)?;
        }
        if let Some(t) = self.run.time_after_actions {
            positive("run.time_after_actions", t)?;
        }
        positive("run.settle_threshold", self.run.settle_threshold)?;
        positive("run.speed_cap", self.run.speed_cap)?;
        if self.run.settle_check_every == 0 {
            return Err(Error::validation("run.settle_check_every", "must be at least 1"));
        }
        match (self.step.dt, self.step.divisor) {
            (Some(dt), None) => positive("step.dt", dt)?,
            (None, Some(n)) if (10..=100).contains(&n) => {}
            (None, Some(n)) => return Err(Error::validation("step.divisor", format!("{n} outside [10, 100]"))),
            _ => return Err(Error::validation("step", "set exactly one of dt and divisor")),
        }
        if !(1.0..=3.0).contains(&self.neighbor.cell_scale) {
            return Err(Error::validation("neighbor.cell_scale", "must lie in [1, 3]"));
        }
        if self.neighbor.rebuild_interval == 0 {
            return Err(Error::validation("neighbor.rebuild_interval", "must be at least 1"));
        }
        if self.neighbor.force_every == 0 {
            return Err(Error::validation("neighbor.force_every", "must be at least 1"));
        }
        positive("neighbor.min_skin", self.neighbor.min_skin)?;
        if !(self.neighbor.r_cut >= 0.0) {
            return Err(Error::validation("neighbor.r_cut", "must be non-negative"));
        }

        let mut names = HashSet::new();
        for m in &self.materials {
            if !names.insert(&m.name) {
                return Err(Error::validation(format!("material.{}", m.name), "defined twice"));
            }
            m.validate()?;
        }
        let mut names = HashSet::new();
        for t in &self.templates {
            let field = format!("template.{}", t.name);
            if !names.insert(&t.name) {
                return Err(Error::validation(field, "defined twice"));
            }
            if self.material_index(&t.material).is_none() {
                return Err(Error::validation(field + ".material", format!("unknown material `{}`", t.material)));
            }
            t.shape
                .validate()
                .map_err(|e| Error::validation(format!("template.{}.shape", t.name), e.to_string()))?;
        }
        let mut names = HashSet::new();
        for (i, w) in self.walls.iter().enumerate() {
            let field = format!("walls[{i}]");
            if let Some(n) = &w.name {
                if !names.insert(n) {
                    return Err(Error::validation(field, format!("wall name `{n}` used twice")));
                }
            }
            if self.material_index(&w.material).is_none() {
                return Err(Error::validation(field + ".material", format!("unknown material `{}`", w.material)));
            }
            if let Some(r) = &w.rotation {
                if !(r.rpm.is_finite() && r.axis.iter().any(|x| *x != 0.0)) {
                    return Err(Error::validation(format!("walls[{i}].rotation"), "needs a finite rpm and a non-zero axis"));
                }
            }
        }
        for (i, p) in self.particles.iter().enumerate() {
            if self.template_index(&p.template).is_none() {
                return Err(Error::validation(format!("particles[{i}].template"), format!("unknown template `{}`", p.template)));
            }
            let n = p.orientation.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (n - 1.0).abs() > crate::world::UNIT_TOLERANCE {
                return Err(Error::validation(format!("particles[{i}].orientation"), format!("not a unit quaternion (|q| = {n})")));
            }
        }
        for (i, s) in self.streams.iter().enumerate() {
            let field = format!("streams[{i}]");
            if self.template_index(&s.template).is_none() {
                return Err(Error::validation(field + ".template", format!("unknown template `{}`", s.template)));
            }
            if s.interval == 0 {
                return Err(Error::validation(field + ".interval", "must be at least 1"));
            }
            if s.batch[0] > s.batch[1] || s.batch[1] == 0 {
                return Err(Error::validation(field + ".batch", "needs 1 <= min <= max"));
            }
            match &s.region {
                RegionConfig::Box { min, max } => {
                    if (0..3).any(|k| !(max[k] > min[k])) {
                        return Err(Error::validation(field + ".region", "max must exceed min on every axis"));
                    }
                }
                RegionConfig::Cylinder { radius, height, .. } => {
                    positive(&(field.clone() + ".region.radius"), *radius)?;
                    positive(&(field + ".region.height"), *height)?;
                }
            }
        }
        for (i, a) in self.on_settled.iter().enumerate() {
            if let Action::RemoveWall { wall } | Action::StartRotation { wall } = a {
                if self.wall_index(wall).is_none() {
                    return Err(Error::validation(format!("on_settled[{i}].wall"), format!("unknown wall `{wall}`")));
                }
            }
        }
        if let Some(a) = &self.analysis {
            if a.stations < 100 {
                return Err(Error::validation("analysis.stations", "needs at least 100 intervals"));
            }
            if a.flow_axis > 1 {
                return Err(Error::validation("analysis.flow_axis", "must be 0 (x) or 1 (y)"));
            }
        }
        Ok(())
    }
}
