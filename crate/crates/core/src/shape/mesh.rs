//! Companion surface (triangle) and cell (tetrahedron) meshes.
//!
//! Meshes are produced by external tooling and imported here. The engine
//! only validates them, stores them in the body frame and maps them to the
//! world frame on demand.
//!
//! Surface files are a minimal OBJ subset: `v x y z` and `f i j k` records with
//! 1-based indices; other records and `#` comments are ignored on import.
//!
//! Cell files use the legacy VTK ASCII unstructured-grid layout:
//!
//! ```text
//! # vtk DataFile Version 3.0
//! <title>
//! ASCII
//! DATASET UNSTRUCTURED_GRID
//! POINTS <n> double
//! x y z            (n lines)
//! CELLS <m> <5m>
//! 4 i j k l        (m lines, 0-based)
//! CELL_TYPES <m>
//! 10               (m lines)
//! ```

use std::io::Write;

use crate::world::Pose;
use crate::{Error, Result, Vec3};

/// Triangle surface mesh in the body frame.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

/// Tetrahedral cell mesh in the body frame.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMesh {
    pub points: Vec<Vec3>,
    pub tets: Vec<[usize; 4]>,
}

/// Meshes whose vertices follow a particle pose.
pub trait PosedMesh: Clone {
    fn points(&self) -> &[Vec3];
    fn points_mut(&mut self) -> &mut [Vec3];
}

impl PosedMesh for SurfaceMesh {
    fn points(&self) -> &[Vec3] {
        &self.vertices
    }
    fn points_mut(&mut self) -> &mut [Vec3] {
        &mut self.vertices
    }
}

impl PosedMesh for CellMesh {
    fn points(&self) -> &[Vec3] {
        &self.points
    }
    fn points_mut(&mut self) -> &mut [Vec3] {
        &mut self.points
    }
}

/// World-frame copy of `mesh` placed at `pose`. Topology is unchanged.
pub fn sync_mesh<M: PosedMesh>(mesh: &M, pose: &Pose) -> Result<M> {
    pose.check_unit()?;
    let rot = pose.orientation.to_rotation_matrix();
    let mut out = mesh.clone();
    for p in out.points_mut() {
        *p = rot * *p + pose.position;
    }
    Ok(out)
}

impl SurfaceMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, triangles };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= self.vertices.len()) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if !(self.triangle_area(t) > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate")));
            }
        }
        Ok(())
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let c = parse_floats::<3>(&mut it, line_no)?;
                    vertices.push(Vec3::new(c[0], c[1], c[2]));
                }
                Some("f") => {
                    let mut idx = [0usize; 3];
                    for slot in idx.iter_mut() {
                        // accept `i`, `i/t` and `i/t/n`
                        let tok = it.next().ok_or_else(|| parse_err(line_no, "face needs 3 indices"))?;
                        let first = tok.split('/').next().unwrap_or(tok);
                        let i: usize = first
                            .parse()
                            .map_err(|_| parse_err(line_no, &format!("bad index `{tok}`")))?;
                        if i == 0 {
                            return Err(parse_err(line_no, "indices are 1-based"));
                        }
                        *slot = i - 1;
                    }
                    if it.next().is_some() {
                        return Err(parse_err(line_no, "only triangular faces are supported"));
                    }
                    triangles.push(idx);
                }
                _ => {}
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn write_obj<W: Write>(&self, mut w: W) -> Result<()> {
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }
}

impl CellMesh {
    pub fn new(points: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        let mesh = Self { points, tets };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Signed volume; positive for right-handed `(p1−p0, p2−p0, p3−p0)`.
    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t].map(|i| self.points[i]);
        (b - a).dot(&(c - a).cross(&(d - a))) / 6.0
    }

    pub fn validate(&self) -> Result<()> {
        for (t, tet) in self.tets.iter().enumerate() {
            if tet.iter().any(|&i| i >= self.points.len()) {
                return Err(Error::InvalidMesh(format!("tetrahedron {t} references a missing point")));
            }
            if !(self.tet_volume(t) > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "tetrahedron {t} has non-positive volume"
                )));
            }
        }
        Ok(())
    }

    pub fn parse_vtk(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut points = Vec::new();
        let mut tets = Vec::new();
        while let Some((line_no, line)) = lines.next() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("POINTS") => {
                    let n: usize = parse_count(it.next(), line_no)?;
                    let mut values = Vec::with_capacity(3 * n);
                    while values.len() < 3 * n {
                        let (ln, l) = lines.next().ok_or_else(|| parse_err(line_no, "truncated POINTS"))?;
                        for tok in l.split_whitespace() {
                            values.push(tok.parse::<f64>().map_err(|_| parse_err(ln, "bad coordinate"))?);
                        }
                    }
                    points = values.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
                }
                Some("CELLS") => {
                    let m: usize = parse_count(it.next(), line_no)?;
                    for _ in 0..m {
                        let (ln, l) = lines.next().ok_or_else(|| parse_err(line_no, "truncated CELLS"))?;
                        let v = l
                            .split_whitespace()
                            .map(|t| t.parse::<usize>().map_err(|_| parse_err(ln, "bad cell index")))
                            .collect::<Result<Vec<_>>>()?;
                        if v.len() != 5 || v[0] != 4 {
                            return Err(parse_err(ln, "only 4-point tetrahedral cells are supported"));
                        }
                        tets.push([v[1], v[2], v[3], v[4]]);
                    }
                }
                Some("CELL_TYPES") => {
                    let m: usize = parse_count(it.next(), line_no)?;
                    for _ in 0..m {
                        let (ln, l) = lines.next().ok_or_else(|| parse_err(line_no, "truncated CELL_TYPES"))?;
                        if l != "10" {
                            return Err(parse_err(ln, "cell type must be 10 (VTK_TETRA)"));
                        }
                    }
                }
                _ => {}
            }
        }
        Self::new(points, tets)
    }

    pub fn write_vtk<W: Write>(&self, mut w: W, title: &str) -> Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "{title}")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", self.points.len())?;
        for p in &self.points {
            writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
        }
        writeln!(w, "CELLS {} {}", self.tets.len(), 5 * self.tets.len())?;
        for t in &self.tets {
            writeln!(w, "4 {} {} {} {}", t[0], t[1], t[2], t[3])?;
        }
        writeln!(w, "CELL_TYPES {}", self.tets.len())?;
        for _ in &self.tets {
            writeln!(w, "10")?;
        }
        Ok(())
    }
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

fn parse_count(tok: Option<&str>, line: usize) -> Result<usize> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(line, "missing or bad count"))
}

fn parse_floats<'a, const N: usize>(
    it: &mut impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for v in out.iter_mut() {
        let tok = it.next().ok_or_else(|| parse_err(line, "too few coordinates"))?;
        *v = tok
            .parse()
            .map_err(|_| parse_err(line, &format!("bad number `{tok}`")))?;
    }
    Ok(out)
}
