//! Narrow phase: overlap, normal and contact point for a primary sphere
//! against another sphere, a plane, a cylinder or a triangle.

use crate::world::TriMesh;
use crate::Vec3;

/// Geometry of one penetrating contact, seen from sphere `i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactGeom {
    /// Signed gap; negative while penetrating.
    pub d_n: f64,
    /// Unit normal pointing from the other body toward sphere `i`.
    pub normal: Vec3,
    /// Deepest point of sphere `i`, `O_i - R_i n`.
    pub point: Vec3,
}

impl ContactGeom {
    fn on_sphere(center: &Vec3, radius: f64, d_n: f64, normal: Vec3) -> Option<Self> {
        (d_n < 0.0).then(|| Self {
            d_n,
            normal,
            point: center - normal * radius,
        })
    }
}

/// The configuration has no unique contact normal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Degenerate;

/// Sphere against the plane through `p` with unit normal `n`.
///
/// The gap is the signed distance of the center minus the radius, so a
/// sphere whose center has crossed the plane is still pushed along `n`.
pub fn sphere_plane(center: &Vec3, radius: f64, p: &Vec3, n: &Vec3) -> Option<ContactGeom> {
    let s = (center - p).dot(n);
    ContactGeom::on_sphere(center, radius, s - radius, *n)
}

/// Sphere `i` against sphere `j`; the normal points from `j` toward `i`.
pub fn sphere_sphere(oi: &Vec3, ri: f64, oj: &Vec3, rj: f64) -> Result<Option<ContactGeom>, Degenerate> {
    let d = oi - oj;
    let dist = d.norm();
    if dist == 0.0 {
        return Err(Degenerate);
    }
    Ok(ContactGeom::on_sphere(oi, ri, dist - (ri + rj), d / dist))
}

/// Sphere against an infinite cylinder of radius `rc` with axis through `p1`, `p2`.
///
/// An `inside` wall holds the sphere within the cylinder.
pub fn sphere_cylinder(
    center: &Vec3,
    radius: f64,
    rc: f64,
    p1: &Vec3,
    p2: &Vec3,
    inside: bool,
) -> Result<Option<ContactGeom>, Degenerate> {
    let u = (p2 - p1).normalize();
    let d = center - p1;
    let radial = d - u * d.dot(&u);
    let rho = radial.norm();
    if rho == 0.0 {
        return if inside && rc - radius > 0.0 { Ok(None) } else { Err(Degenerate) };
    }
    let outward = radial / rho;
    let (d_n, normal) = if inside {
        (rc - rho - radius, -outward)
    } else {
        (rho - rc - radius, outward)
    };
    Ok(ContactGeom::on_sphere(center, radius, d_n, normal))
}

/// Region of a triangle containing the closest point. Edge `k` joins
/// vertices `k` and `(k + 1) % 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TriFeature {
    Face,
    Edge(usize),
    Vertex(usize),
}

/// Closest point of triangle `[a, b, c]` to `p`, by Voronoi-region classification.
pub fn closest_point_on_triangle(p: &Vec3, [a, b, c]: [Vec3; 3]) -> (Vec3, TriFeature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, TriFeature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, TriFeature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, TriFeature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, TriFeature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, TriFeature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, TriFeature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, TriFeature::Face)
}

/// Sphere against one triangle. If the center lies on the triangle the
/// face normal is used, oriented toward `prior` (the center's previous position) when given.
pub fn sphere_triangle(
    center: &Vec3,
    radius: f64,
    tri: [Vec3; 3],
    prior: Option<&Vec3>,
) -> Option<(ContactGeom, TriFeature)> {
    let (q, feature) = closest_point_on_triangle(center, tri);
    let diff = center - q;
    let dist = diff.norm();
    if dist - radius >= 0.0 {
        return None;
    }
    let normal = if dist > 1e-12 * radius {
        diff / dist
    } else {
        let nf = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
        match prior {
            Some(p) if (p - q).dot(&nf) < 0.0 => -nf,
            _ => nf,
        }
    };
    ContactGeom::on_sphere(center, radius, dist - radius, normal).map(|g| (g, feature))
}

/// Contacts of one sphere with a mesh wall, keyed by global feature id
/// (faces, then edges, then vertices; see [`TriMesh`]).
///
/// Triangles sharing an edge or vertex report it once. An edge or vertex
/// contact is dropped when a face (or edge) containing it also touches the
/// sphere, so the lowest feature id owns a shared region.
pub fn sphere_mesh(
    center: &Vec3,
    radius: f64,
    mesh: &TriMesh,
    triangles: &[usize],
    prior: Option<&Vec3>,
) -> Vec<(usize, ContactGeom)> {
    let n_tri = mesh.triangles.len();
    let mut hits: Vec<(usize, ContactGeom)> = Vec::new();
    let mut owned_edges = Vec::new();
    let mut owned_vertices = Vec::new();
    for &t in triangles {
        let Some((g, f)) = sphere_triangle(center, radius, mesh.triangle(t), prior) else {
            continue;
        };
        let tri = mesh.triangles[t];
        let id = match f {
            TriFeature::Face => {
                owned_edges.extend((0..3).map(|k| mesh.edge_feature(t, k)));
                owned_vertices.extend((0..3).map(|k| mesh.vertex_feature(t, k)));
                t
            }
            TriFeature::Edge(k) => {
                owned_vertices.push(mesh.vertex_feature(t, k));
                owned_vertices.push(mesh.vertex_feature(t, (k + 1) % 3));
                mesh.edge_feature(t, k)
            }
            TriFeature::Vertex(k) => n_tri + mesh.edge_count + tri[k],
        };
        hits.push((id, g));
    }
    hits.sort_by_key(|h| h.0);
    hits.dedup_by_key(|h| h.0);
    let edge_end = n_tri + mesh.edge_count;
    hits.retain(|(id, _)| {
        if *id < n_tri {
            true
        } else if *id < edge_end {
            !owned_edges.contains(id)
        } else {
            !owned_vertices.contains(id)
        }
    });
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rotation;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3::new(x, y, z)
    }

    #[test]
    fn plane_examples() {
        let g = sphere_plane(&v(0.0, 0.0, 0.9), 1.0, &Vec3::zeros(), &Vec3::z()).unwrap();
        assert!((g.d_n + 0.1).abs() < 1e-15);
        assert_eq!(g.normal, Vec3::z());
        assert!((g.point - v(0.0, 0.0, -0.1)).norm() < 1e-15);
        assert!(sphere_plane(&v(0.0, 0.0, 1.5), 1.0, &Vec3::zeros(), &Vec3::z()).is_none());
        // center on the plane: normal stays the plane normal
        let g = sphere_plane(&v(3.0, 1.0, 0.0), 1.0, &Vec3::zeros(), &Vec3::z()).unwrap();
        assert_eq!(g.normal, Vec3::z());
    }

    #[test]
    fn plane_gap_matches_projection() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let n = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0)).normalize();
            let p = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let o = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let r = rng.gen_range(0.1..1.0);
            // foot of the perpendicular, then the signed distance along n
            let foot = o - n * n.dot(&(o - p));
            let signed = (o - foot).norm() * (o - foot).dot(&n).signum();
            match sphere_plane(&o, r, &p, &n) {
                Some(g) => assert!((g.d_n - (signed - r)).abs() < 1e-14),
                None => assert!(signed - r >= -1e-14),
            }
        }
    }

    #[test]
    fn sphere_sphere_examples() {
        let g = sphere_sphere(&Vec3::zeros(), 1.0, &v(1.9, 0.0, 0.0), 1.0).unwrap().unwrap();
        assert!((g.d_n + 0.1).abs() < 1e-15);
        assert_eq!(g.normal, v(-1.0, 0.0, 0.0));
        assert_eq!(g.point, v(1.0, 0.0, 0.0));
        assert!(sphere_sphere(&Vec3::zeros(), 1.0, &v(2.0, 0.0, 0.0), 1.0).unwrap().is_none());
        assert_eq!(sphere_sphere(&Vec3::zeros(), 1.0, &Vec3::zeros(), 1.0), Err(Degenerate));
    }

    #[test]
    fn sphere_sphere_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let oi = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let oj = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let (ri, rj) = (rng.gen_range(0.1..1.0), rng.gen_range(0.1..1.0));
            let dist = ((oi.x - oj.x).powi(2) + (oi.y - oj.y).powi(2) + (oi.z - oj.z).powi(2)).sqrt();
            let d_n = dist - ri - rj;
            match sphere_sphere(&oi, ri, &oj, rj).unwrap() {
                Some(g) => {
                    assert!((g.d_n - d_n).abs() < 1e-14);
                    let n = (oi - oj) / dist;
                    assert!((g.normal - n).norm() < 1e-14);
                    assert!((g.point - (oi - n * ri)).norm() < 1e-14);
                }
                None => assert!(d_n >= 0.0),
            }
        }
    }

    #[test]
    fn cylinder_examples() {
        let (p1, p2) = (Vec3::zeros(), Vec3::z());
        let g = sphere_cylinder(&v(9.5, 0.0, 3.0), 1.0, 10.0, &p1, &p2, true).unwrap().unwrap();
        assert!((g.d_n + 0.5).abs() < 1e-12);
        assert!((g.normal - v(-1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!(sphere_cylinder(&Vec3::zeros(), 1.0, 10.0, &p1, &p2, true).unwrap().is_none());
        assert_eq!(sphere_cylinder(&Vec3::zeros(), 10.0, 10.0, &p1, &p2, true), Err(Degenerate));
        let g = sphere_cylinder(&v(0.0, 1.5, 0.0), 1.0, 1.0, &p1, &p2, false).unwrap().unwrap();
        assert!((g.d_n + 0.5).abs() < 1e-15 && (g.normal - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn cylinder_matches_sampled_surface() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p1, p2) = (v(0.1, -0.2, 0.0), v(0.3, 0.1, 1.0));
        let u = (p2 - p1).normalize();
        let e1 = u.cross(&Vec3::x()).normalize();
        let e2 = u.cross(&e1);
        let rc = 2.0;
        for _ in 0..50 {
            let o = p1 + Vec3::from_fn(|_, _| rng.gen_range(-1.6..1.6));
            let r = rng.gen_range(0.2..0.8);
            let Some(g) = sphere_cylinder(&o, r, rc, &p1, &p2, true).unwrap() else { continue };
            // nearest surface point lies in the plane through o normal to the axis
            let base = p1 + u * (o - p1).dot(&u);
            let mut best = f64::INFINITY;
            let n = 200_000;
            for k in 0..n {
                let phi = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let q = base + rc * (e1 * phi.cos() + e2 * phi.sin());
                best = best.min((o - q).norm());
            }
            // angular sampling error is below rc² δφ² / d ≈ 1e-9
            assert!((g.d_n - (best - r)).abs() < 1e-8, "{} vs {}", g.d_n, best - r);
        }
    }

    fn random_tri(rng: &mut ChaCha8Rng) -> [Vec3; 3] {
        loop {
            let t = [0; 3].map(|_| Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0)));
            if (t[1] - t[0]).cross(&(t[2] - t[0])).norm() > 0.05 {
                return t;
            }
        }
    }

    #[test]
    fn closest_point_matches_barycentric_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = 100;
        for _ in 0..10_000 {
            let tri = random_tri(&mut rng);
            let p = Vec3::from_fn(|_, _| rng.gen_range(-2.0..2.0));
            let (q, _) = closest_point_on_triangle(&p, tri);
            let exact = (p - q).norm();
            let at = |s: f64, t: f64| (p - (tri[0] + (tri[1] - tri[0]) * s + (tri[2] - tri[0]) * t)).norm();
            // coarse grid, then repeated local zoom around the best sample
            let mut best = f64::INFINITY;
            let mut arg = (0.0, 0.0);
            for i in 0..=m {
                for j in 0..=(m - i) {
                    let (s, t) = (i as f64 / m as f64, j as f64 / m as f64);
                    let d = at(s, t);
                    if d < best {
                        best = d;
                        arg = (s, t);
                    }
                }
            }
            let mut h = 1.0 / m as f64;
            for _ in 0..40 {
                let centre = arg;
                for i in -10..=10 {
                    for j in -10..=10 {
                        let s = (centre.0 + h * i as f64 / 10.0).clamp(0.0, 1.0);
                        let t = (centre.1 + h * j as f64 / 10.0).clamp(0.0, 1.0 - s);
                        let d = at(s, t);
                        if d < best {
                            best = d;
                            arg = (s, t);
                        }
                    }
                }
                h /= 2.0;
            }
            assert!(exact <= best + 1e-12);
            assert!(best - exact < 1e-6, "{best} vs {exact}");
        }
    }

    #[test]
    fn face_region_equals_plane_contact() {
        let tri = [Vec3::zeros(), v(4.0, 0.0, 0.0), v(0.0, 4.0, 0.0)];
        let o = v(1.0, 1.0, 0.7);
        let (g, f) = sphere_triangle(&o, 1.0, tri, None).unwrap();
        assert_eq!(f, TriFeature::Face);
        let p = sphere_plane(&o, 1.0, &Vec3::zeros(), &Vec3::z()).unwrap();
        assert!((g.d_n - p.d_n).abs() < 1e-15);
        assert!((g.normal - p.normal).norm() < 1e-15);
        assert!((g.point - p.point).norm() < 1e-15);
    }

    #[test]
    fn edge_and_vertex_regions() {
        let tri = [Vec3::zeros(), v(4.0, 0.0, 0.0), v(0.0, 4.0, 0.0)];
        let (g, f) = sphere_triangle(&v(2.0, -0.5, 0.5), 1.0, tri, None).unwrap();
        assert_eq!(f, TriFeature::Edge(0));
        assert!((g.d_n - (0.5f64.hypot(0.5) - 1.0)).abs() < 1e-15);
        let (_, f) = sphere_triangle(&v(-0.3, -0.3, 0.0), 1.0, tri, None).unwrap();
        assert_eq!(f, TriFeature::Vertex(0));
        let (_, f) = sphere_triangle(&v(2.5, 2.5, 0.0), 1.0, tri, None).unwrap();
        assert_eq!(f, TriFeature::Edge(1));
    }

    #[test]
    fn center_on_triangle_uses_prior_side() {
        let tri = [Vec3::zeros(), v(4.0, 0.0, 0.0), v(0.0, 4.0, 0.0)];
        let o = v(1.0, 1.0, 0.0);
        let (g, _) = sphere_triangle(&o, 1.0, tri, Some(&v(1.0, 1.0, -0.1))).unwrap();
        assert_eq!(g.normal, -Vec3::z());
        let (g, _) = sphere_triangle(&o, 1.0, tri, Some(&v(1.0, 1.0, 0.1))).unwrap();
        assert_eq!(g.normal, Vec3::z());
    }

    #[test]
    fn flat_mesh_gives_one_contact_near_shared_edge() {
        let verts = vec![Vec3::zeros(), v(2.0, 0.0, 0.0), v(2.0, 2.0, 0.0), v(0.0, 2.0, 0.0)];
        let mesh = TriMesh::new(verts, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        // over triangle 0 close to the diagonal, within reach of triangle 1's edge
        let o = v(1.2, 1.0, 0.9);
        let hits = sphere_mesh(&o, 1.0, &mesh, &[0, 1], None);
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].0, 0);
        // exactly over the diagonal: both triangles report the same edge
        let o = v(1.0, 1.0, 0.9);
        let hits = sphere_mesh(&o, 1.0, &mesh, &[0, 1], None);
        assert_eq!(hits.len(), 1);
    }

    #[test]
    fn concave_corner_gives_two_face_contacts() {
        // floor and wall meeting at x = 0
        let verts = vec![
            Vec3::zeros(),
            v(2.0, 0.0, 0.0),
            v(2.0, 2.0, 0.0),
            v(0.0, 2.0, 0.0),
            v(0.0, 0.0, 2.0),
            v(0.0, 2.0, 2.0),
        ];
        let mesh = TriMesh::new(verts, vec![[0, 1, 2], [0, 2, 3], [0, 3, 5], [0, 5, 4]]).unwrap();
        let o = v(0.9, 1.0, 0.9);
        let hits = sphere_mesh(&o, 1.0, &mesh, &[0, 1, 2, 3], None);
        assert_eq!(hits.len(), 2);
        assert!(hits.iter().all(|(id, _)| *id < 4));
    }

    fn random_rotation(rng: &mut ChaCha8Rng) -> Rotation {
        crate::world::uniform_random_quaternion(rng)
    }

    proptest! {
        #[test]
        fn sphere_sphere_symmetry(a in prop::array::uniform3(-1.0f64..1.0), b in prop::array::uniform3(-1.0f64..1.0),
                                  ri in 0.1f64..1.0, rj in 0.1f64..1.0) {
            let (oi, oj) = (Vec3::from(a), Vec3::from(b));
            prop_assume!((oi - oj).norm() > 1e-6);
            let gi = sphere_sphere(&oi, ri, &oj, rj).unwrap();
            let gj = sphere_sphere(&oj, rj, &oi, ri).unwrap();
            prop_assert_eq!(gi.is_some(), gj.is_some());
            if let (Some(gi), Some(gj)) = (gi, gj) {
                prop_assert!((gi.normal + gj.normal).norm() < 1e-12);
                prop_assert!((gi.d_n - gj.d_n).abs() < 1e-12);
                prop_assert!((gi.point - gj.point).norm() <= gi.d_n.abs() + 1e-12);
                prop_assert!(((gi.point - oi).norm() - ri).abs() < 1e-12);
                prop_assert!(gi.d_n < 0.0);
            }
        }

        #[test]
        fn rigid_motion_equivariance(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rot = random_rotation(&mut rng);
            let shift = Vec3::from_fn(|_, _| rng.gen_range(-5.0..5.0));
            let map = |p: Vec3| rot * p + shift;
            let tri = random_tri(&mut rng);
            let o = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let r = rng.gen_range(0.3..1.5);
            let a = sphere_triangle(&o, r, tri, None);
            let b = sphere_triangle(&map(o), r, tri.map(map), None);
            prop_assert_eq!(a.is_some(), b.is_some());
            if let (Some((a, fa)), Some((b, fb))) = (a, b) {
                prop_assert!((a.d_n - b.d_n).abs() < 1e-12);
                prop_assert!((rot * a.normal - b.normal).norm() < 1e-9);
                prop_assert!((map(a.point) - b.point).norm() < 1e-12);
                prop_assert_eq!(fa, fb);
            }
            let oj = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            if let (Ok(Some(a)), Ok(Some(b))) = (sphere_sphere(&o, r, &oj, 0.5), sphere_sphere(&map(o), r, &map(oj), 0.5)) {
                prop_assert!((a.d_n - b.d_n).abs() < 1e-12);
                prop_assert!((rot * a.normal - b.normal).norm() < 1e-12);
            }
        }
    }
}
