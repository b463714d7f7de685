use std::f64::consts::PI;

use super::quadrature::bracketed_min;
use super::{MsModel, SphereElement};
use crate::{Error, Result, Vec3};

/// Scan resolution used to bracket the closest curve point before refinement.
const BRACKET_SAMPLES: usize = 720;

/// Upper half of the generating curve of a solid of revolution about body x.
pub trait MeridianCurve {
    /// Curve point `(x, y)` with `y >= 0` for parameter `t` in `[0, π]`.
    fn point(&self, t: f64) -> (f64, f64);
    /// Abscissa of the vertex on the positive x-axis.
    fn vertex(&self) -> f64;
    /// Radius of curvature of the curve at that vertex.
    fn vertex_curvature_radius(&self) -> f64;
    /// Length scale of the curve.
    fn scale(&self) -> f64;

    /// Radius of the maximal inscribed sphere centered at `(x0, 0, 0)`:
    /// the minimum distance from that axis point to the curve.
    fn inscribed_radius(&self, x0: f64) -> f64 {
        let dist2 = |t: f64| {
            let (x, y) = self.point(t);
            (x - x0) * (x - x0) + y * y
        };
        let (_, d2) = bracketed_min(dist2, 0.0, PI, BRACKET_SAMPLES, 1e-12);
        d2.sqrt()
    }
}

struct Ellipse {
    a: f64,
    b: f64,
}

impl MeridianCurve for Ellipse {
    fn point(&self, t: f64) -> (f64, f64) {
        (self.a * t.cos(), self.b * t.sin())
    }
    fn vertex(&self) -> f64 {
        self.a
    }
    fn vertex_curvature_radius(&self) -> f64 {
        self.b * self.b / self.a
    }
    fn scale(&self) -> f64 {
        self.a
    }
}

/// Cassini oval `((x−a)²+y²)((x+a)²+y²) = b⁴` for `b > a`.
struct CassiniOval {
    a: f64,
    b: f64,
}

impl MeridianCurve for CassiniOval {
    fn point(&self, t: f64) -> (f64, f64) {
        let (a2, b4) = (self.a * self.a, self.b.powi(4));
        let s2 = (2.0 * t).sin();
        let r2 = a2 * (2.0 * t).cos() + (b4 - a2 * a2 * s2 * s2).sqrt();
        let r = r2.max(0.0).sqrt();
        (r * t.cos(), r * t.sin())
    }
    fn vertex(&self) -> f64 {
        (self.a * self.a + self.b * self.b).sqrt()
    }
    fn vertex_curvature_radius(&self) -> f64 {
        // κ = F_yy / |F_x| of the implicit form at (x_v, 0)
        let (a2, b2) = (self.a * self.a, self.b * self.b);
        self.vertex() * b2 / (2.0 * a2 + b2)
    }
    fn scale(&self) -> f64 {
        self.vertex()
    }
}

/// Squared meridian half-width `y²(x)` of the Cassini solid, clamped at zero.
pub fn cassini_meridian_radius_sq(a: f64, b: f64, x: f64) -> f64 {
    ((b.powi(4) + 4.0 * a * a * x * x).sqrt() - x * x - a * a).max(0.0)
}

/// Center abscissa of the largest axis-centered sphere touching the vertex.
fn end_center(curve: &impl MeridianCurve) -> f64 {
    let xv = curve.vertex();
    let osculating = (xv - curve.vertex_curvature_radius()).max(0.0);
    let fits = |x0: f64| curve.inscribed_radius(x0) >= (xv - x0) * (1.0 - 1e-10);
    if fits(osculating) {
        return osculating;
    }
    // Osculating sphere pokes out elsewhere: shrink toward the vertex.
    let (mut lo, mut hi) = (osculating, xv);
    while hi - lo > 1e-13 * curve.scale() {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Maximal inscribed spheres centered on the symmetry axis, uniformly spaced
/// between the two vertex-tangent end spheres.
fn axial_inscribed_model(curve: &impl MeridianCurve, n: usize) -> Result<MsModel> {
    if n == 0 || n.is_multiple_of(2) {
        return Err(Error::InvalidShape(format!(
            "axial multi-sphere models need an odd sphere count, got {n}"
        )));
    }
    if n == 1 {
        let r = curve.inscribed_radius(0.0);
        return MsModel::new(vec![SphereElement::new(Vec3::zeros(), r)?]);
    }
    let xe = end_center(curve);
    let half = n / 2;
    let mut spheres = vec![SphereElement { center: Vec3::zeros(), radius: 0.0 }; n];
    for k in 0..=half {
        // k = 0 is the left end; mirror into n-1-k for exact symmetry
        let x = if k == half {
            0.0
        } else {
            -xe + 2.0 * xe * k as f64 / (n - 1) as f64
        };
        let r = curve.inscribed_radius(x);
        spheres[k] = SphereElement::new(Vec3::new(x, 0.0, 0.0), r)?;
        spheres[n - 1 - k] = SphereElement::new(Vec3::new(-x, 0.0, 0.0), r)?;
    }
    MsModel::new(spheres)
}

/// Single sphere; the exact model of a spherical particle.
pub fn build_sphere_ms(radius: f64) -> Result<MsModel> {
    MsModel::new(vec![SphereElement::new(Vec3::zeros(), radius)?])
}

/// Prolate spheroid with semi-axes `a` (along x) and `b = c`.
pub fn build_ellipsoid_ms(a: f64, b: f64, n_spheres: usize) -> Result<MsModel> {
    if !(b > 0.0 && a > 0.0) {
        return Err(Error::InvalidShape(format!(
            "ellipsoid axes must be positive, got a = {a}, b = {b}"
        )));
    }
    if a < b {
        return Err(Error::InvalidShape(format!(
            "ellipsoid needs a >= b, got a = {a}, b = {b}"
        )));
    }
    axial_inscribed_model(&Ellipse { a, b }, n_spheres)
}

/// `n_spheres` spheres of radius `radius` spread uniformly over a segment of
/// length `length` on the x-axis.
pub fn build_spherocylinder_ms(radius: f64, length: f64, n_spheres: usize) -> Result<MsModel> {
    if !(radius > 0.0) || !(length >= 0.0) {
        return Err(Error::InvalidShape(format!(
            "spherocylinder needs R > 0 and L >= 0, got R = {radius}, L = {length}"
        )));
    }
    if n_spheres < 2 {
        return Err(Error::InvalidShape(format!(
            "spherocylinder needs at least 2 spheres, got {n_spheres}"
        )));
    }
    let spheres = (0..n_spheres)
        .map(|k| {
            let x = -0.5 * length + length * k as f64 / (n_spheres - 1) as f64;
            SphereElement::new(Vec3::new(x, 0.0, 0.0), radius)
        })
        .collect::<Result<Vec<_>>>()?;
    MsModel::new(spheres)
}

/// `n_spheres` tube-radius spheres on the center circle of a torus with axis z.
pub fn build_torus_ms(major: f64, minor: f64, n_spheres: usize) -> Result<MsModel> {
    if !(minor > 0.0) || !(major > minor) {
        return Err(Error::InvalidShape(format!(
            "torus needs R > r > 0, got R = {major}, r = {minor}"
        )));
    }
    if n_spheres < 3 {
        return Err(Error::InvalidShape(format!(
            "torus needs at least 3 spheres, got {n_spheres}"
        )));
    }
    let gap = 2.0 * major * (PI / n_spheres as f64).sin();
    if gap >= 2.0 * minor {
        return Err(Error::InvalidShape(format!(
            "{n_spheres} spheres leave neighbors {gap} apart, which does not overlap for r = {minor}"
        )));
    }
    let spheres = (0..n_spheres)
        .map(|k| {
            let phi = 2.0 * PI * k as f64 / n_spheres as f64;
            SphereElement::new(Vec3::new(major * phi.cos(), major * phi.sin(), 0.0), minor)
        })
        .collect::<Result<Vec<_>>>()?;
    MsModel::new(spheres)
}

/// Peanut-shaped solid of revolution of a single-loop Cassini oval (`b > a`).
pub fn build_cassini_ms(a: f64, b: f64, n_spheres: usize) -> Result<MsModel> {
    if !(a > 0.0) || !(b > a) {
        return Err(Error::InvalidShape(format!(
            "cassini model needs b > a > 0, got a = {a}, b = {b}"
        )));
    }
    if n_spheres < 3 {
        return Err(Error::InvalidShape(format!(
            "cassini model needs at least 3 spheres, got {n_spheres}"
        )));
    }
    axial_inscribed_model(&CassiniOval { a, b }, n_spheres)
}
