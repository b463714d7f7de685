//! Scene state: particles, walls, materials and particle streams.

mod insert;
mod wall;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use insert::{insert_batch, uniform_random_quaternion, InsertOutcome, InsertRegion, RegionGeometry, StopCondition};
pub use wall::{TriMesh, Wall, WallKind, WallMotion};

use crate::neighbor::GlobalSphere;
use crate::shape::ShapeTemplate;
use crate::{Error, Result, Rotation, Vec3};

/// Tolerance on `|q| - 1` accepted for an orientation.
pub const UNIT_TOLERANCE: f64 = 1e-9;

/// Position of the center of mass and body-to-world orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: Rotation,
}

impl Pose {
    pub fn new(position: Vec3, orientation: Rotation) -> Self {
        Self { position, orientation }
    }

    pub fn identity() -> Self {
        Self::new(Vec3::zeros(), Rotation::identity())
    }

    /// Maps a body-frame point to the world frame.
    pub fn apply(&self, body: &Vec3) -> Vec3 {
        self.orientation * body + self.position
    }

    pub fn check_unit(&self) -> Result<()> {
        let norm = self.orientation.quaternion().norm();
        if (norm - 1.0).abs() > UNIT_TOLERANCE || !norm.is_finite() {
            return Err(Error::NonUnitQuaternion(norm));
        }
        Ok(())
    }
}

/// Contact and bulk material parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    /// Young's modulus, Pa.
    pub young: f64,
    pub poisson: f64,
    /// kg/m³
    pub density: f64,
    pub restitution: f64,
    /// Sliding friction against other particles.
    pub friction_pp: f64,
    /// Sliding friction against walls.
    pub friction_pw: f64,
    #[serde(default = "default_rolling")]
    pub rolling: f64,
}

fn default_rolling() -> f64 {
    0.001
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        let field = |f: &str| format!("material.{}.{f}", self.name);
        if !(self.young > 0.0) {
            return Err(Error::validation(field("young"), "must be positive"));
        }
        if !(0.0..0.5).contains(&self.poisson) {
            return Err(Error::validation(field("poisson"), "must lie in [0, 0.5)"));
        }
        if !(self.density > 0.0) {
            return Err(Error::validation(field("density"), "must be positive"));
        }
        if !(self.restitution > 0.0 && self.restitution <= 1.0) {
            return Err(Error::validation(field("restitution"), "must lie in (0, 1]"));
        }
        for (name, v) in [
            ("friction_pp", self.friction_pp),
            ("friction_pw", self.friction_pw),
            ("rolling", self.rolling),
        ] {
            if !(v >= 0.0) {
                return Err(Error::validation(field(name), "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }
}

/// Dynamic state of one rigid particle.
#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub id: usize,
    /// Index into the scene's template list.
    pub template: usize,
    /// Index into the scene's material list.
    pub material: usize,
    pub pose: Pose,
    /// Linear velocity of the center of mass, world frame.
    pub v: Vec3,
    /// Angular velocity, world frame.
    pub w: Vec3,
    pub f_acc: Vec3,
    pub t_acc: Vec3,
    /// Held in place; still contributes its mass to contact laws.
    pub fixed: bool,
    /// Free label carried through to output (e.g. a color group).
    pub tag: u32,
}

impl Particle {
    pub fn new(id: usize, template: usize, material: usize, pose: Pose) -> Self {
        Self {
            id,
            template,
            material,
            pose,
            v: Vec3::zeros(),
            w: Vec3::zeros(),
            f_acc: Vec3::zeros(),
            t_acc: Vec3::zeros(),
            fixed: false,
            tag: 0,
        }
    }
}

/// Everything that lives in the simulated domain.
#[derive(Clone, Debug, Default)]
pub struct World {
    pub templates: Vec<Arc<ShapeTemplate>>,
    /// Material used by each template, parallel to `templates`.
    pub template_materials: Vec<usize>,
    pub materials: Vec<Material>,
    pub walls: Vec<Wall>,
    pub particles: Vec<Particle>,
    next_id: usize,
}

impl World {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_material(&mut self, material: Material) -> Result<usize> {
        material.validate()?;
        self.materials.push(material);
        Ok(self.materials.len() - 1)
    }

    pub fn add_template(&mut self, template: ShapeTemplate, material: usize) -> usize {
        self.templates.push(Arc::new(template));
        self.template_materials.push(material);
        self.templates.len() - 1
    }

    pub fn add_wall(&mut self, mut wall: Wall) -> usize {
        wall.id = self.walls.len();
        self.walls.push(wall);
        self.walls.len() - 1
    }

    /// Adds a particle of `template` at `pose` and returns its id.
    pub fn spawn(&mut self, template: usize, pose: Pose) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        let material = self.template_materials[template];
        self.particles.push(Particle::new(id, template, material, pose));
        id
    }

    /// Appends particles produced elsewhere, assigning fresh ids.
    pub fn adopt(&mut self, particles: Vec<Particle>) {
        for mut p in particles {
            p.id = self.next_id;
            self.next_id += 1;
            self.particles.push(p);
        }
    }

    /// Swaps in a complete particle set whose ids are kept.
    pub fn replace_particles(&mut self, particles: Vec<Particle>) {
        self.next_id = particles.iter().map(|p| p.id + 1).max().unwrap_or(0);
        self.particles = particles;
    }

    pub fn next_id(&self) -> usize {
        self.next_id
    }

    pub fn template_of(&self, p: &Particle) -> &ShapeTemplate {
        &self.templates[p.template]
    }

    pub fn mass_of(&self, p: &Particle) -> f64 {
        self.templates[p.template].props.mass
    }

    /// World-frame primary spheres of every particle, in particle order.
    pub fn global_spheres(&self) -> Vec<GlobalSphere> {
        let mut out = Vec::with_capacity(self.sphere_count());
        for (pi, p) in self.particles.iter().enumerate() {
            let rot = p.pose.orientation.to_rotation_matrix();
            for (local, s) in self.templates[p.template].ms.spheres().iter().enumerate() {
                out.push(GlobalSphere {
                    gid: out.len(),
                    particle: pi,
                    local,
                    center: rot * s.center + p.pose.position,
                    radius: s.radius,
                });
            }
        }
        out
    }

    pub fn sphere_count(&self) -> usize {
        self.particles
            .iter()
            .map(|p| self.templates[p.template].ms.len())
            .sum()
    }

    /// Total solid volume of all particles (analytic volumes).
    pub fn solid_volume(&self) -> f64 {
        self.particles
            .iter()
            .map(|p| self.templates[p.template].props.volume)
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.particles.iter().map(|p| self.mass_of(p)).sum()
    }

    /// Bounding spheres `(center, radius)` of all particles.
    pub fn bounding_spheres(&self) -> Vec<(Vec3, f64)> {
        self.particles
            .iter()
            .map(|p| (p.pose.position, self.templates[p.template].ms.mbs_radius()))
            .collect()
    }
}
