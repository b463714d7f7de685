use std::f64::consts::PI;

use rand::Rng;

use super::{Particle, Pose, Wall, WallKind};
use crate::contact::closest_point_on_triangle;
use crate::shape::ShapeTemplate;
use crate::{Error, Result, Rotation, Vec3};

/// Consecutive failed placements after which a region counts as full.
pub const REJECTION_BUDGET: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum RegionGeometry {
    Box { min: Vec3, max: Vec3 },
    /// Vertical (z-axis) cylinder standing on `base_center`.
    Cylinder { base_center: Vec3, radius: f64, height: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopCondition {
    Count(usize),
    Mass(f64),
    /// Keep inserting until a trigger places nothing.
    Exhaustion,
}

/// Particle stream: a region that emits a batch of particles every
/// `trigger_interval` steps until its stop condition is met.
#[derive(Clone, Debug, PartialEq)]
pub struct InsertRegion {
    pub geometry: RegionGeometry,
    pub velocity: Vec3,
    pub trigger_interval: u64,
    /// Inclusive range of particles requested per trigger.
    pub batch: (usize, usize),
    pub stop: StopCondition,
    pub seed: u64,
}

impl InsertRegion {
    pub fn validate(&self) -> Result<()> {
        if self.trigger_interval < 1 {
            return Err(Error::validation("stream.interval", "must be at least 1 step"));
        }
        if self.batch.0 > self.batch.1 || self.batch.1 == 0 {
            return Err(Error::validation("stream.batch", "needs 1 <= min <= max"));
        }
        match self.geometry {
            RegionGeometry::Box { min, max } => {
                if (0..3).any(|k| !(max[k] > min[k])) {
                    return Err(Error::validation("stream.box", "max must exceed min on every axis"));
                }
            }
            RegionGeometry::Cylinder { radius, height, .. } => {
                if !(radius > 0.0 && height > 0.0) {
                    return Err(Error::validation("stream.cylinder", "radius and height must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Uniform sample of a center whose bounding sphere of radius `margin`
    /// lies inside the region, or `None` if no such center exists.
    fn sample_center<R: Rng + ?Sized>(&self, margin: f64, rng: &mut R) -> Option<Vec3> {
        match self.geometry {
            RegionGeometry::Box { min, max } => {
                let lo = min.add_scalar(margin);
                let hi = max.add_scalar(-margin);
                if (0..3).any(|k| hi[k] < lo[k]) {
                    return None;
                }
                Some(Vec3::from_fn(|k, _| {
                    if hi[k] > lo[k] {
                        rng.gen_range(lo[k]..hi[k])
                    } else {
                        lo[k]
                    }
                }))
            }
            RegionGeometry::Cylinder { base_center, radius, height } => {
                let r = radius - margin;
                let (z0, z1) = (margin, height - margin);
                if r < 0.0 || z1 < z0 {
                    return None;
                }
                // area-uniform disk sample
                let rho = r * rng.gen::<f64>().sqrt();
                let phi = 2.0 * PI * rng.gen::<f64>();
                let z = if z1 > z0 { rng.gen_range(z0..z1) } else { z0 };
                Some(base_center + Vec3::new(rho * phi.cos(), rho * phi.sin(), z))
            }
        }
    }
}

/// Uniformly distributed rotation (subgroup algorithm from three uniform variates).
pub fn uniform_random_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Rotation {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let (t2, t3) = (2.0 * PI * u2, 2.0 * PI * u3);
    let q = nalgebra::Quaternion::new(b * t3.cos(), a * t2.sin(), a * t2.cos(), b * t3.sin());
    Rotation::new_normalize(q)
}

/// Whether a sphere intersects (or lies behind) an active wall.
pub(crate) fn sphere_hits_wall(center: &Vec3, radius: f64, wall: &Wall) -> bool {
    if !wall.active {
        return false;
    }
    match &wall.kind {
        WallKind::Plane { point, normal } => (center - point).dot(normal) < radius,
        WallKind::Cylinder { radius: r, p1, p2, inside } => {
            let u = (p2 - p1).normalize();
            let d = center - p1;
            let rho = (d - u * d.dot(&u)).norm();
            if *inside {
                rho + radius > *r
            } else {
                rho - radius < *r
            }
        }
        WallKind::Mesh(mesh) => (0..mesh.triangles.len()).any(|t| {
            let (c, rb) = mesh.bounds[t];
            if (center - c).norm() > radius + rb {
                return false;
            }
            let (q, _) = closest_point_on_triangle(center, mesh.triangle(t));
            (center - q).norm() < radius
        }),
    }
}

/// Result of one trigger of a stream.
#[derive(Clone, Debug, Default)]
pub struct InsertOutcome {
    pub particles: Vec<Particle>,
    /// The rejection budget ran out before `count` particles were placed.
    pub region_full: bool,
}

/// Places up to `count` particles of `template` at random positions and
/// orientations inside `region`.
///
/// A candidate is accepted only if its bounding sphere lies inside the region,
/// touches no wall, and is disjoint from the bounding spheres in `existing`
/// and of the particles placed earlier in this batch. Ids are assigned from
/// `first_id` upward.
#[allow(clippy::too_many_arguments)]
pub fn insert_batch<R: Rng + ?Sized>(
    region: &InsertRegion,
    template: &ShapeTemplate,
    template_index: usize,
    material: usize,
    existing: &[(Vec3, f64)],
    walls: &[Wall],
    count: usize,
    first_id: usize,
    rng: &mut R,
) -> InsertOutcome {
    let radius = template.ms.mbs_radius();
    let mut placed: Vec<(Vec3, f64)> = Vec::new();
    let mut out = InsertOutcome::default();
    let mut failures = 0;
    while out.particles.len() < count {
        if failures >= REJECTION_BUDGET {
            out.region_full = true;
            break;
        }
        let Some(center) = region.sample_center(radius, rng) else {
            out.region_full = true;
            break;
        };
        let orientation = uniform_random_quaternion(rng);
        let clear = |&(c, r): &(Vec3, f64)| (center - c).norm() >= radius + r;
        let ok = existing.iter().all(clear)
            && placed.iter().all(clear)
            && !walls.iter().any(|w| sphere_hits_wall(&center, radius, w));
        if !ok {
            failures += 1;
            continue;
        }
        failures = 0;
        placed.push((center, radius));
        let mut p = Particle::new(
            first_id + out.particles.len(),
            template_index,
            material,
            Pose::new(center, orientation),
        );
        p.v = region.velocity;
        out.particles.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::{ShapeDescriptor, ShapeKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn capsule() -> ShapeTemplate {
        ShapeTemplate::new(
            "capsule",
            ShapeDescriptor {
                kind: ShapeKind::Spherocylinder { radius: 3.8e-3, length: 13.8e-3 },
                spheres: 21,
            },
            917.0,
        )
        .unwrap()
    }

    fn region(geometry: RegionGeometry) -> InsertRegion {
        InsertRegion {
            geometry,
            velocity: Vec3::new(0.0, 0.0, -0.1),
            trigger_interval: 1,
            batch: (6, 10),
            stop: StopCondition::Exhaustion,
            seed: 3,
        }
    }

    #[test]
    fn quaternions_are_unit_and_isotropic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut mean = Vec3::zeros();
        let n = 1_000_000;
        for _ in 0..n {
            let q = uniform_random_quaternion(&mut rng);
            assert!((q.quaternion().norm() - 1.0).abs() < 1e-12);
            mean += q * Vec3::new(0.0, 0.0, 1.0);
        }
        mean /= n as f64;
        assert!(mean.norm() < 0.005, "|mean| = {}", mean.norm());
    }

    #[test]
    fn quaternion_sequence_is_reproducible() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10).map(|_| uniform_random_quaternion(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
    }

    #[test]
    fn tiny_region_places_nothing() {
        let t = capsule();
        let d = 2.0 * t.ms.mbs_radius();
        let r = region(RegionGeometry::Box {
            min: Vec3::zeros(),
            max: Vec3::new(0.9 * d, 1.0, 1.0),
        });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = insert_batch(&r, &t, 0, 0, &[], &[], 5, 0, &mut rng);
        assert!(out.particles.is_empty());
        assert!(out.region_full);
    }

    #[test]
    fn placed_bounding_spheres_are_disjoint_and_clear_walls() {
        let t = capsule();
        let r = region(RegionGeometry::Cylinder {
            base_center: Vec3::new(0.0, 0.0, 0.15),
            radius: 0.04675,
            height: 0.04,
        });
        let wall = Wall::cylinder(0.04675, Vec3::zeros(), Vec3::z(), true, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let out = insert_batch(&r, &t, 0, 0, &[], std::slice::from_ref(&wall), 40, 0, &mut rng);
        let rm = t.ms.mbs_radius();
        for (i, a) in out.particles.iter().enumerate() {
            assert!(!sphere_hits_wall(&a.pose.position, rm, &wall));
            for b in &out.particles[i + 1..] {
                assert!((a.pose.position - b.pose.position).norm() >= 2.0 * rm);
            }
        }
        // same seed, same result
        let mut rng2 = ChaCha8Rng::seed_from_u64(9);
        let again = insert_batch(&r, &t, 0, 0, &[], &[wall], 40, 0, &mut rng2);
        assert_eq!(out.particles, again.particles);
    }

    #[test]
    fn region_validation() {
        let mut r = region(RegionGeometry::Box { min: Vec3::zeros(), max: Vec3::repeat(1.0) });
        assert!(r.validate().is_ok());
        r.trigger_interval = 0;
        assert!(r.validate().is_err());
        let r = region(RegionGeometry::Box { min: Vec3::zeros(), max: Vec3::new(1.0, 0.0, 1.0) });
        assert!(r.validate().is_err());
    }
}
