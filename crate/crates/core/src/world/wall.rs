use std::collections::HashMap;

use crate::shape::SurfaceMesh;
use crate::{Error, Result, Rotation, Vec3};

/// Triangle-mesh wall with precomputed broad-phase spheres and feature ids.
///
/// Feature ids are global within the mesh: faces `0..T`, edges `T..T+E`,
/// vertices `T+E..T+E+V`.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Edge ids of `(v0,v1)`, `(v1,v2)`, `(v2,v0)` per triangle.
    pub tri_edges: Vec<[usize; 3]>,
    pub edge_count: usize,
    /// Bounding sphere `(center, radius)` of each triangle.
    pub bounds: Vec<(Vec3, f64)>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        SurfaceMesh::new(vertices.clone(), triangles.clone())
            .map_err(|e| Error::InvalidWall(e.to_string()))?;
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let mut ids = [0; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let next = edges.len();
                ids[k] = *edges.entry(key).or_insert(next);
            }
            tri_edges.push(ids);
        }
        let mut mesh = Self {
            vertices,
            triangles,
            tri_edges,
            edge_count: edges.len(),
            bounds: Vec::new(),
        };
        mesh.refresh_bounds();
        Ok(mesh)
    }

    pub fn from_surface(mesh: &SurfaceMesh) -> Result<Self> {
        Self::new(mesh.vertices.clone(), mesh.triangles.clone())
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        self.triangles[t].map(|i| self.vertices[i])
    }

    pub fn edge_feature(&self, t: usize, k: usize) -> usize {
        self.triangles.len() + self.tri_edges[t][k]
    }

    pub fn vertex_feature(&self, t: usize, k: usize) -> usize {
        self.triangles.len() + self.edge_count + self.triangles[t][k]
    }

    pub(crate) fn refresh_bounds(&mut self) {
        self.bounds = (0..self.triangles.len())
            .map(|t| triangle_bounding_sphere(self.triangle(t)))
            .collect();
    }
}

/// Smallest sphere enclosing a triangle.
fn triangle_bounding_sphere([a, b, c]: [Vec3; 3]) -> (Vec3, f64) {
    // obtuse or right triangles: the longest edge's midpoint
    let edges = [(a, b, c), (b, c, a), (c, a, b)];
    for (p, q, r) in edges {
        if (p - r).dot(&(q - r)) <= 0.0 {
            let center = 0.5 * (p + q);
            return (center, 0.5 * (q - p).norm());
        }
    }
    // acute: circumcenter
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let center = a + (ac.norm_squared() * n.cross(&ab) + ab.norm_squared() * ac.cross(&n)) / (2.0 * n.norm_squared());
    (center, (center - a).norm())
}

#[derive(Clone, Debug, PartialEq)]
pub enum WallKind {
    /// Infinite plane through `point`; particles live on the `normal` side.
    Plane { point: Vec3, normal: Vec3 },
    /// Infinite cylinder with axis through `p1` and `p2`. An `inside` wall
    /// contains the particles (container); otherwise it is a solid pillar.
    Cylinder {
        radius: f64,
        p1: Vec3,
        p2: Vec3,
        inside: bool,
    },
    Mesh(TriMesh),
}

/// Rigid rotation of a wall about a fixed axis at constant rate.
#[derive(Clone, Debug, PartialEq)]
pub struct WallMotion {
    pub axis_point: Vec3,
    /// Unit rotation axis.
    pub axis: Vec3,
    /// rad/s, right-handed about `axis`.
    pub omega: f64,
    /// Accumulated rotation angle, rad.
    pub angle: f64,
}

impl WallMotion {
    pub fn from_rpm(axis_point: Vec3, axis: Vec3, rpm: f64) -> Self {
        Self {
            axis_point,
            axis: axis.normalize(),
            omega: rpm * 2.0 * std::f64::consts::PI / 60.0,
            angle: 0.0,
        }
    }

    pub fn angular_velocity(&self) -> Vec3 {
        self.axis * self.omega
    }

    /// Velocity of the rigid wall motion at world point `p`.
    pub fn velocity_at(&self, p: &Vec3) -> Vec3 {
        self.angular_velocity().cross(&(p - self.axis_point))
    }

    pub fn rotation(&self) -> Rotation {
        Rotation::from_axis_angle(&nalgebra::Unit::new_unchecked(self.axis), self.angle)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Wall {
    pub id: usize,
    pub kind: WallKind,
    pub material: usize,
    pub motion: Option<WallMotion>,
    /// Inactive walls are ignored by every phase (e.g. a removed barrier).
    pub active: bool,
    /// Geometry at zero rotation angle.
    pub(crate) reference: WallKind,
}

impl Wall {
    pub fn new(kind: WallKind, material: usize) -> Result<Self> {
        let kind = match kind {
            WallKind::Plane { point, normal } => {
                let n = normal.norm();
                if !(n > 0.0) || !n.is_finite() {
                    return Err(Error::InvalidWall("plane normal must be non-zero".into()));
                }
                WallKind::Plane { point, normal: normal / n }
            }
            WallKind::Cylinder { radius, p1, p2, inside } => {
                if !(radius > 0.0) {
                    return Err(Error::InvalidWall("cylinder radius must be positive".into()));
                }
                if (p2 - p1).norm() == 0.0 {
                    return Err(Error::InvalidWall("cylinder axis points coincide".into()));
                }
                WallKind::Cylinder { radius, p1, p2, inside }
            }
            mesh @ WallKind::Mesh(_) => mesh,
        };
        Ok(Self {
            id: 0,
            reference: kind.clone(),
            kind,
            material,
            motion: None,
            active: true,
        })
    }

    pub fn plane(point: Vec3, normal: Vec3, material: usize) -> Result<Self> {
        Self::new(WallKind::Plane { point, normal }, material)
    }

    pub fn cylinder(radius: f64, p1: Vec3, p2: Vec3, inside: bool, material: usize) -> Result<Self> {
        Self::new(WallKind::Cylinder { radius, p1, p2, inside }, material)
    }

    pub fn mesh(mesh: TriMesh, material: usize) -> Result<Self> {
        Self::new(WallKind::Mesh(mesh), material)
    }

    pub fn with_motion(mut self, motion: WallMotion) -> Self {
        self.motion = Some(motion);
        self
    }

    /// Velocity of the wall surface at `p` (zero for static walls).
    pub fn velocity_at(&self, p: &Vec3) -> Vec3 {
        self.motion.as_ref().map_or(Vec3::zeros(), |m| m.velocity_at(p))
    }

    /// Re-derives the current geometry from the reference geometry and the
    /// motion's accumulated angle.
    pub(crate) fn apply_rotation(&mut self) {
        let Some(motion) = &self.motion else { return };
        let rot = motion.rotation();
        let o = motion.axis_point;
        let map = |p: &Vec3| rot * (p - o) + o;
        self.kind = match &self.reference {
            WallKind::Plane { point, normal } => WallKind::Plane {
                point: map(point),
                normal: rot * normal,
            },
            WallKind::Cylinder { radius, p1, p2, inside } => WallKind::Cylinder {
                radius: *radius,
                p1: map(p1),
                p2: map(p2),
                inside: *inside,
            },
            WallKind::Mesh(mesh) => {
                let mut m = mesh.clone();
                for v in m.vertices.iter_mut() {
                    *v = map(v);
                }
                m.refresh_bounds();
                WallKind::Mesh(m)
            }
        };
    }
}
