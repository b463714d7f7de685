//! Multi-sphere particle models, analytic mass properties and companion meshes.
//!
//! A [`ShapeTemplate`] is immutable once built and is shared between all
//! particles of that shape. The body frame of every template is its principal
//! frame with the center of mass at the origin.

mod builders;
mod mass;
pub mod mesh;
pub mod quadrature;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub use builders::{
    build_cassini_ms, build_ellipsoid_ms, build_sphere_ms, build_spherocylinder_ms, build_torus_ms,
    cassini_meridian_radius_sq, MeridianCurve,
};
pub use mass::{mass_properties, MassProperties};
pub use mesh::{sync_mesh, CellMesh, PosedMesh, SurfaceMesh};

use crate::{Error, Result, Vec3};

/// One primary sphere of a clump, fixed in the body frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereElement {
    pub center: Vec3,
    pub radius: f64,
}

impl SphereElement {
    pub fn new(center: Vec3, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidShape(format!(
                "sphere element needs a finite center and positive radius, got r = {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    fn overlaps(&self, other: &SphereElement) -> bool {
        (self.center - other.center).norm() < self.radius + other.radius
    }
}

/// Clump of overlapping primary spheres plus its bounding-sphere radius.
#[derive(Clone, Debug, PartialEq)]
pub struct MsModel {
    spheres: Vec<SphereElement>,
    mbs_radius: f64,
}

impl MsModel {
    /// Validates non-emptiness and connectivity, and computes the bounding radius.
    pub fn new(spheres: Vec<SphereElement>) -> Result<Self> {
        if spheres.is_empty() {
            return Err(Error::InvalidShape("multi-sphere model has no spheres".into()));
        }
        let model = Self {
            mbs_radius: spheres
                .iter()
                .map(|s| s.center.norm() + s.radius)
                .fold(0.0, f64::max),
            spheres,
        };
        if !model.is_connected() {
            return Err(Error::InvalidShape(
                "primary spheres do not form a connected clump".into(),
            ));
        }
        Ok(model)
    }

    pub fn spheres(&self) -> &[SphereElement] {
        &self.spheres
    }

    pub fn len(&self) -> usize {
        self.spheres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spheres.is_empty()
    }

    /// Radius of the origin-centered sphere enclosing every primary sphere.
    pub fn mbs_radius(&self) -> f64 {
        self.mbs_radius
    }

    pub fn min_radius(&self) -> f64 {
        self.spheres.iter().map(|s| s.radius).fold(f64::INFINITY, f64::min)
    }

    pub fn max_radius(&self) -> f64 {
        self.spheres.iter().map(|s| s.radius).fold(0.0, f64::max)
    }

    /// True when the overlap graph of the primary spheres is connected.
    pub fn is_connected(&self) -> bool {
        let n = self.spheres.len();
        if n <= 1 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s && self.spheres[i].overlaps(&self.spheres[j]) {
                    *s = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Analytic solid a template approximates, with its dimensions in meters.
///
/// Axisymmetric solids have their symmetry axis along body x, except the
/// torus whose axis is body z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ShapeKind {
    Sphere { radius: f64 },
    /// Prolate spheroid `x²/a² + (y² + z²)/b² = 1`.
    Ellipsoid { a: f64, b: f64 },
    /// Cylinder of length `length` capped by two hemispheres of `radius`.
    Spherocylinder { radius: f64, length: f64 },
    Torus { major: f64, minor: f64 },
    /// Solid of revolution of the Cassini oval `((x−a)²+y²)((x+a)²+y²) = b⁴`.
    Cassini { a: f64, b: f64 },
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Sphere { .. } => "sphere",
            ShapeKind::Ellipsoid { .. } => "ellipsoid",
            ShapeKind::Spherocylinder { .. } => "spherocylinder",
            ShapeKind::Torus { .. } => "torus",
            ShapeKind::Cassini { .. } => "cassini",
        }
    }

    /// Characteristic length used to scale tolerances.
    pub fn size(&self) -> f64 {
        match *self {
            ShapeKind::Sphere { radius } => radius,
            ShapeKind::Ellipsoid { a, .. } => a,
            ShapeKind::Spherocylinder { radius, length } => radius + 0.5 * length,
            ShapeKind::Torus { major, minor } => major + minor,
            ShapeKind::Cassini { a, b } => (a * a + b * b).sqrt(),
        }
    }

    /// Same shape uniformly scaled by `s`.
    pub fn scaled(&self, s: f64) -> ShapeKind {
        match *self {
            ShapeKind::Sphere { radius } => ShapeKind::Sphere { radius: radius * s },
            ShapeKind::Ellipsoid { a, b } => ShapeKind::Ellipsoid { a: a * s, b: b * s },
            ShapeKind::Spherocylinder { radius, length } => ShapeKind::Spherocylinder {
                radius: radius * s,
                length: length * s,
            },
            ShapeKind::Torus { major, minor } => ShapeKind::Torus {
                major: major * s,
                minor: minor * s,
            },
            ShapeKind::Cassini { a, b } => ShapeKind::Cassini { a: a * s, b: b * s },
        }
    }

    /// Same proportions, rescaled so that the solid has volume `volume`.
    pub fn with_volume(&self, volume: f64) -> Result<ShapeKind> {
        let current = mass_properties(self, 1.0)?.volume;
        Ok(self.scaled((volume / current).cbrt()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidShape(msg));
        match *self {
            ShapeKind::Sphere { radius } if !(radius > 0.0) => bad(format!("sphere radius {radius}")),
            ShapeKind::Ellipsoid { a, b } if !(b > 0.0 && a >= b) => {
                bad(format!("ellipsoid needs a >= b > 0, got a = {a}, b = {b}"))
            }
            ShapeKind::Spherocylinder { radius, length } if !(radius > 0.0 && length >= 0.0) => bad(
                format!("spherocylinder needs R > 0, L >= 0, got R = {radius}, L = {length}"),
            ),
            ShapeKind::Torus { major, minor } if !(minor > 0.0 && major > minor) => bad(format!(
                "torus needs R > r > 0, got R = {major}, r = {minor}"
            )),
            ShapeKind::Cassini { a, b } if !(a > 0.0 && b > a) => {
                bad(format!("cassini solid needs b > a > 0, got a = {a}, b = {b}"))
            }
            _ => Ok(()),
        }
    }

    /// Dimensionless implicit function of the solid: `<= 0` inside.
    pub fn implicit(&self, p: &Vec3) -> f64 {
        match *self {
            ShapeKind::Sphere { radius } => p.norm_squared() / (radius * radius) - 1.0,
            ShapeKind::Ellipsoid { a, b } => {
                p.x * p.x / (a * a) + (p.y * p.y + p.z * p.z) / (b * b) - 1.0
            }
            ShapeKind::Spherocylinder { radius, length } => {
                let h = 0.5 * length;
                let x = p.x.clamp(-h, h);
                let d = (p - Vec3::new(x, 0.0, 0.0)).norm();
                d / radius - 1.0
            }
            ShapeKind::Torus { major, minor } => {
                let q = (p.x * p.x + p.y * p.y).sqrt() - major;
                (q * q + p.z * p.z) / (minor * minor) - 1.0
            }
            ShapeKind::Cassini { a, b } => {
                let r2 = p.norm_squared();
                ((r2 + a * a).powi(2) - 4.0 * a * a * p.x * p.x - b.powi(4)) / b.powi(4)
            }
        }
    }

    /// Builds the multi-sphere model with `n_spheres` primary spheres.
    pub fn build_ms(&self, n_spheres: usize) -> Result<MsModel> {
        match *self {
            ShapeKind::Sphere { radius } => build_sphere_ms(radius),
            ShapeKind::Ellipsoid { a, b } => build_ellipsoid_ms(a, b, n_spheres),
            ShapeKind::Spherocylinder { radius, length } => {
                build_spherocylinder_ms(radius, length, n_spheres)
            }
            ShapeKind::Torus { major, minor } => build_torus_ms(major, minor, n_spheres),
            ShapeKind::Cassini { a, b } => build_cassini_ms(a, b, n_spheres),
        }
    }
}

/// Shape plus the number of primary spheres used to approximate it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeDescriptor {
    pub kind: ShapeKind,
    pub spheres: usize,
}

/// Which radius of curvature feeds the effective contact radius.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureModel {
    /// Radius of the contacting primary sphere; for shapes with sharp corners.
    Sphere,
    /// Radius of the sphere with the particle's volume; for rounded shapes.
    #[default]
    EquivalentVolume,
}

/// Immutable particle shape shared by all particles created from it.
#[derive(Clone, Debug)]
pub struct ShapeTemplate {
    pub name: String,
    pub ms: MsModel,
    pub props: MassProperties,
    pub surface: Option<SurfaceMesh>,
    pub cells: Option<CellMesh>,
    pub descriptor: ShapeDescriptor,
    pub curvature: CurvatureModel,
}

impl ShapeTemplate {
    pub fn new(name: impl Into<String>, descriptor: ShapeDescriptor, density: f64) -> Result<Self> {
        descriptor.kind.validate()?;
        let ms = descriptor.kind.build_ms(descriptor.spheres)?;
        let props = mass_properties(&descriptor.kind, density)?;
        Ok(Self {
            name: name.into(),
            ms,
            props,
            surface: None,
            cells: None,
            descriptor,
            curvature: CurvatureModel::default(),
        })
    }

    pub fn with_curvature(mut self, curvature: CurvatureModel) -> Self {
        self.curvature = curvature;
        self
    }

    pub fn with_surface(mut self, mesh: SurfaceMesh) -> Self {
        self.surface = Some(mesh);
        self
    }

    pub fn with_cells(mut self, mesh: CellMesh) -> Self {
        self.cells = Some(mesh);
        self
    }

    /// Radius of the sphere with the same volume as the analytic solid.
    pub fn equivalent_radius(&self) -> f64 {
        (3.0 * self.props.volume / (4.0 * PI)).cbrt()
    }

    /// Contact radius of primary sphere `local` under this template's curvature model.
    pub fn contact_radius(&self, local: usize) -> f64 {
        match self.curvature {
            CurvatureModel::Sphere => self.ms.spheres()[local].radius,
            CurvatureModel::EquivalentVolume => self.equivalent_radius(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mbs_radius_is_max_reach() {
        let ms = MsModel::new(vec![
            SphereElement::new(Vec3::new(1.0, 0.0, 0.0), 1.0).unwrap(),
            SphereElement::new(Vec3::new(-0.5, 0.0, 0.0), 2.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(ms.mbs_radius(), 2.5);
    }

    #[test]
    fn disconnected_clump_rejected() {
        let r = MsModel::new(vec![
            SphereElement::new(Vec3::zeros(), 1.0).unwrap(),
            SphereElement::new(Vec3::new(3.0, 0.0, 0.0), 1.0).unwrap(),
        ]);
        assert!(matches!(r, Err(Error::InvalidShape(_))));
    }

    #[test]
    fn empty_clump_rejected() {
        assert!(MsModel::new(vec![]).is_err());
        assert!(SphereElement::new(Vec3::zeros(), 0.0).is_err());
    }

    #[test]
    fn with_volume_rescales() {
        let k = ShapeKind::Torus { major: 2.5, minor: 1.0 };
        let v = 130.9;
        let scaled = k.with_volume(v).unwrap();
        let got = mass_properties(&scaled, 1.0).unwrap().volume;
        assert!((got - v).abs() < 1e-9 * v);
    }

    #[test]
    fn shape_kind_parses_from_toml() {
        #[derive(Deserialize)]
        struct Wrap {
            shape: ShapeKind,
        }
        let w: Wrap = toml::from_str("shape = { kind = \"torus\", major = 2.5, minor = 1.0 }").unwrap();
        assert_eq!(w.shape, ShapeKind::Torus { major: 2.5, minor: 1.0 });
        let bad: std::result::Result<Wrap, _> =
            toml::from_str("shape = { kind = \"torus\", major = 2.5, minor = 1.0, extra = 1 }");
        assert!(bad.is_err());
    }
}
