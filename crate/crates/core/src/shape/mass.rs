use std::f64::consts::PI;

use super::builders::cassini_meridian_radius_sq;
use super::quadrature::adaptive_simpson;
use super::ShapeKind;
use crate::{Error, Result, Rotation, Vec3};

/// Rigid-body mass properties of the analytic solid (not the sphere union).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MassProperties {
    pub volume: f64,
    pub mass: f64,
    /// Always the body-frame origin for the supported shapes.
    pub com: Vec3,
    pub inertia_principal: Vec3,
    /// Rotation from the principal frame to the body frame.
    pub principal_axes: Rotation,
}

impl MassProperties {
    fn new(volume: f64, density: f64, inertia_per_mass: Vec3) -> Self {
        let mass = volume * density;
        Self {
            volume,
            mass,
            com: Vec3::zeros(),
            inertia_principal: inertia_per_mass * mass,
            principal_axes: Rotation::identity(),
        }
    }
}

/// Volume, mass and principal inertia of `kind` at uniform `density`.
///
/// Closed forms for the sphere, spheroid, spherocylinder and torus; adaptive
/// Simpson quadrature over the meridian for the Cassini solid.
pub fn mass_properties(kind: &ShapeKind, density: f64) -> Result<MassProperties> {
    if !(density > 0.0) {
        return Err(Error::InvalidMaterial(format!("density must be positive, got {density}")));
    }
    kind.validate()?;
    let props = match *kind {
        ShapeKind::Sphere { radius: r } => {
            let i = 0.4 * r * r;
            MassProperties::new(4.0 / 3.0 * PI * r.powi(3), density, Vec3::repeat(i))
        }
        ShapeKind::Ellipsoid { a, b } => {
            let volume = 4.0 / 3.0 * PI * a * b * b;
            let axial = 0.4 * b * b;
            let transverse = 0.2 * (a * a + b * b);
            MassProperties::new(volume, density, Vec3::new(axial, transverse, transverse))
        }
        ShapeKind::Spherocylinder { radius: r, length: l } => {
            let v_cyl = PI * r * r * l;
            let v_caps = 4.0 / 3.0 * PI * r.powi(3);
            let volume = v_cyl + v_caps;
            let axial = (v_cyl * 0.5 * r * r + v_caps * 0.4 * r * r) / volume;
            let transverse = (v_cyl * (0.25 * r * r + l * l / 12.0)
                + v_caps * (0.4 * r * r + 0.25 * l * l + 0.375 * l * r))
                / volume;
            MassProperties::new(volume, density, Vec3::new(axial, transverse, transverse))
        }
        ShapeKind::Torus { major, minor } => {
            let volume = 2.0 * PI * PI * major * minor * minor;
            let axial = major * major + 0.75 * minor * minor;
            let transverse = 0.5 * major * major + 0.625 * minor * minor;
            MassProperties::new(volume, density, Vec3::new(transverse, transverse, axial))
        }
        ShapeKind::Cassini { a, b } => cassini_properties(a, b, density),
    };
    Ok(props)
}

fn cassini_properties(a: f64, b: f64, density: f64) -> MassProperties {
    let xv = (a * a + b * b).sqrt();
    let y2 = |x: f64| cassini_meridian_radius_sq(a, b, x);
    // Coarse estimates set the absolute tolerances (1e-6 of each integral).
    let coarse = |f: &dyn Fn(f64) -> f64| {
        let n = 64;
        let h = xv / n as f64;
        (0..n).map(|k| f((k as f64 + 0.5) * h) * h).sum::<f64>()
    };
    let vol_density = |x: f64| PI * y2(x);
    let axial_density = |x: f64| 0.5 * PI * y2(x).powi(2);
    let trans_density = |x: f64| PI * y2(x) * (0.25 * y2(x) + x * x);

    let integrate = |f: &dyn Fn(f64) -> f64| {
        let tol = 1e-6 * coarse(f).abs().max(f64::MIN_POSITIVE);
        2.0 * adaptive_simpson(f, 0.0, xv, tol)
    };
    let volume = integrate(&vol_density);
    let axial = integrate(&axial_density) / volume;
    let transverse = integrate(&trans_density) / volume;
    MassProperties::new(volume, density, Vec3::new(axial, transverse, transverse))
}
