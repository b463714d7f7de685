//! Broad phase over primary spheres: a cell list feeding a Verlet pair list,
//! plus sphere-wall candidate filtering.

use rustc_hash::FxHashMap;

use crate::world::{Wall, WallKind};
use crate::{Error, Result, Vec3};

/// One primary sphere placed in the world frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlobalSphere {
    pub gid: usize,
    /// Index of the owning particle in the world's particle list.
    pub particle: usize,
    /// Index of the sphere within its template.
    pub local: usize,
    pub center: Vec3,
    pub radius: f64,
}

type CellKey = [i64; 3];

/// Uniform spatial hash of sphere centers.
#[derive(Clone, Debug, Default)]
pub struct CellGrid {
    pub cell_size: f64,
    pub origin: Vec3,
    pub cells: FxHashMap<CellKey, Vec<usize>>,
    /// Sphere insertions performed while building (one per sphere).
    pub ops: usize,
}

impl CellGrid {
    pub fn key(&self, p: &Vec3) -> CellKey {
        let r = (p - self.origin) / self.cell_size;
        [r.x.floor() as i64, r.y.floor() as i64, r.z.floor() as i64]
    }

    pub fn occupied(&self) -> usize {
        self.cells.len()
    }

    /// Gids in the 27 cells around `key`, in no particular order.
    pub fn stencil(&self, key: CellKey) -> impl Iterator<Item = usize> + '_ {
        (-1..=1).flat_map(move |dx| {
            (-1..=1).flat_map(move |dy| {
                (-1..=1).flat_map(move |dz| {
                    self.cells
                        .get(&[key[0] + dx, key[1] + dy, key[2] + dz])
                        .into_iter()
                        .flatten()
                        .copied()
                })
            })
        })
    }
}

/// Hashes every sphere center into cells of size `k * D_max`.
pub fn build_cell_list(spheres: &[GlobalSphere], k: f64) -> Result<CellGrid> {
    if !(1.0..=3.0).contains(&k) {
        return Err(Error::NeighborConfig(format!("cell scale k = {k} outside [1, 3]")));
    }
    if spheres.is_empty() {
        return Ok(CellGrid { cell_size: 1.0, ..Default::default() });
    }
    let d_max = 2.0 * spheres.iter().map(|s| s.radius).fold(0.0, f64::max);
    let origin = spheres
        .iter()
        .fold(Vec3::repeat(f64::INFINITY), |m, s| m.inf(&s.center));
    let mut grid = CellGrid {
        cell_size: k * d_max,
        origin,
        cells: FxHashMap::default(),
        ops: 0,
    };
    for s in spheres {
        let key = grid.key(&s.center);
        grid.cells.entry(key).or_default().push(s.gid);
        grid.ops += 1;
    }
    Ok(grid)
}

/// Contact candidate between a primary sphere and a wall. For mesh walls
/// `feature` is the triangle index; otherwise it is 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WallCandidate {
    pub gid: usize,
    pub wall: usize,
    pub feature: usize,
}

/// Verlet list of sphere pairs and wall candidates with the positions it was built from.
#[derive(Clone, Debug, Default)]
pub struct NeighborList {
    /// `(gid_i, gid_j)` with `gid_i < gid_j`, sorted.
    pub pairs: Vec<(usize, usize)>,
    pub walls: Vec<WallCandidate>,
    pub skin: f64,
    pub r_cut: f64,
    pub reference: Vec<Vec3>,
}

fn within(a: &GlobalSphere, b: &GlobalSphere, d_skin: f64, r_cut: f64) -> bool {
    (a.center - b.center).norm() <= a.radius + (b.radius + r_cut + d_skin)
}

/// Pairs of spheres from different particles whose gap is at most
/// `r_cut + d_skin`, searched over the 27-cell stencil of each sphere.
///
/// `spheres[g].gid` must equal `g`.
pub fn build_verlet(grid: &CellGrid, spheres: &[GlobalSphere], d_skin: f64, r_cut: f64) -> Result<NeighborList> {
    if !(d_skin >= 0.0 && r_cut >= 0.0) {
        return Err(Error::NeighborConfig("skin and cutoff must be non-negative".into()));
    }
    let r_max = spheres.iter().map(|s| s.radius).fold(0.0, f64::max);
    let reach = 2.0 * r_max + r_cut + d_skin;
    if !spheres.is_empty() && grid.cell_size < reach {
        return Err(Error::NeighborConfig(format!(
            "cell size {} is below the search reach {reach}; lower the skin or raise k",
            grid.cell_size
        )));
    }
    let mut pairs = Vec::new();
    for a in spheres {
        for j in grid.stencil(grid.key(&a.center)) {
            if j <= a.gid {
                continue;
            }
            let b = &spheres[j];
            if b.particle != a.particle && within(a, b, d_skin, r_cut) {
                pairs.push((a.gid, j));
            }
        }
    }
    pairs.sort_unstable();
    Ok(NeighborList {
        pairs,
        walls: Vec::new(),
        skin: d_skin,
        r_cut,
        reference: spheres.iter().map(|s| s.center).collect(),
    })
}

/// O(N²) reference for [`build_verlet`].
pub fn brute_force_pairs(spheres: &[GlobalSphere], d_skin: f64, r_cut: f64) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, a) in spheres.iter().enumerate() {
        for b in &spheres[i + 1..] {
            if a.particle != b.particle && within(a, b, d_skin, r_cut) {
                pairs.push((a.gid.min(b.gid), a.gid.max(b.gid)));
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// True once any sphere has moved at least half the skin since the list
/// was built (or the sphere count changed).
pub fn needs_rebuild(current: &[Vec3], reference: &[Vec3], d_skin: f64) -> bool {
    if current.len() != reference.len() {
        return true;
    }
    let limit = 0.25 * d_skin * d_skin;
    current
        .iter()
        .zip(reference)
        .any(|(c, r)| (c - r).norm_squared() >= limit)
}

/// Sphere-wall pairs that may touch before the next rebuild.
///
/// Planes and cylinders use the signed distance to the surface; each mesh
/// triangle is represented by its bounding sphere, hashed into a grid.
pub fn wall_candidates(spheres: &[GlobalSphere], walls: &[Wall], d_skin: f64) -> Vec<WallCandidate> {
    let mut out = Vec::new();
    for (wi, wall) in walls.iter().enumerate() {
        if !wall.active {
            continue;
        }
        match &wall.kind {
            WallKind::Plane { point, normal } => {
                for s in spheres {
                    if (s.center - point).dot(normal) <= s.radius + d_skin {
                        out.push(WallCandidate { gid: s.gid, wall: wi, feature: 0 });
                    }
                }
            }
            WallKind::Cylinder { radius, p1, p2, inside } => {
                let u = (p2 - p1).normalize();
                for s in spheres {
                    let d = s.center - p1;
                    let rho = (d - u * d.dot(&u)).norm();
                    let gap = if *inside { radius - rho } else { rho - radius };
                    if gap <= s.radius + d_skin {
                        out.push(WallCandidate { gid: s.gid, wall: wi, feature: 0 });
                    }
                }
            }
            WallKind::Mesh(mesh) => {
                if spheres.is_empty() {
                    continue;
                }
                let r_max = spheres.iter().map(|s| s.radius).fold(0.0, f64::max);
                let cell = 2.0 * (r_max + d_skin).max(f64::MIN_POSITIVE);
                let key = |p: &Vec3| -> CellKey {
                    [(p.x / cell).floor() as i64, (p.y / cell).floor() as i64, (p.z / cell).floor() as i64]
                };
                // each triangle goes into every cell its bounding box touches
                let mut grid: FxHashMap<CellKey, Vec<usize>> = FxHashMap::default();
                for (t, (c, rb)) in mesh.bounds.iter().enumerate() {
                    let lo = key(&c.add_scalar(-rb));
                    let hi = key(&c.add_scalar(*rb));
                    for x in lo[0]..=hi[0] {
                        for y in lo[1]..=hi[1] {
                            for z in lo[2]..=hi[2] {
                                grid.entry([x, y, z]).or_default().push(t);
                            }
                        }
                    }
                }
                let mut hits = Vec::new();
                for s in spheres {
                    let k = key(&s.center);
                    hits.clear();
                    for dx in -1..=1 {
                        for dy in -1..=1 {
                            for dz in -1..=1 {
                                if let Some(ts) = grid.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                                    hits.extend_from_slice(ts);
                                }
                            }
                        }
                    }
                    hits.sort_unstable();
                    hits.dedup();
                    for &t in &hits {
                        let (c, rb) = mesh.bounds[t];
                        if (s.center - c).norm() <= s.radius + d_skin + rb {
                            out.push(WallCandidate { gid: s.gid, wall: wi, feature: t });
                        }
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Skin from the rebuild-interval target `n`: `n * v_max * dt`, floored at `min_skin`.
pub fn skin_distance(n: f64, v_max: f64, dt: f64, min_skin: f64) -> f64 {
    (n * v_max * dt).max(min_skin)
}
