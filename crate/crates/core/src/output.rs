//! Trajectory snapshots, the step log and per-particle mesh export.
//!
//! A trajectory is one CSV file with a header row and one row per particle
//! per snapshot:
//!
//! ```text
//! id,t,x,y,z,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,template
//! ```
//!
//! Floats use the shortest representation that reads back bit-identically,
//! so equal states produce equal bytes. Rows of one snapshot share `t` and
//! snapshots appear in increasing time. The file is only ever appended to and
//! is flushed after every snapshot, so it can be read while a run continues.

use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::warn;
use serde::Deserialize;

use crate::shape::sync_mesh;
use crate::world::{Particle, Pose, World};
use crate::{Error, Result, Rotation, Vec3};

pub const SNAPSHOT_HEADER: &str = "id,t,x,y,z,qw,qx,qy,qz,vx,vy,vz,wx,wy,wz,template";

/// State of one particle at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleRecord {
    pub id: usize,
    pub template: String,
    pub position: Vec3,
    pub orientation: Rotation,
    pub v: Vec3,
    pub w: Vec3,
}

/// All live particles at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub particles: Vec<ParticleRecord>,
}

impl Snapshot {
    pub fn of_world(world: &World, t: f64) -> Self {
        let particles = world
            .particles
            .iter()
            .map(|p: &Particle| ParticleRecord {
                id: p.id,
                template: world.template_of(p).name.clone(),
                position: p.pose.position,
                orientation: p.pose.orientation,
                v: p.v,
                w: p.w,
            })
            .collect();
        Self { t, particles }
    }

    /// CSV rows of this snapshot, without the header.
    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for r in &self.particles {
            let q = r.orientation.quaternion();
            let _ = write!(out, "{},{:?}", r.id, self.t);
            for x in [r.position.x, r.position.y, r.position.z, q.w, q.i, q.j, q.k] {
                let _ = write!(out, ",{x:?}");
            }
            for x in r.v.iter().chain(r.w.iter()) {
                let _ = write!(out, ",{x:?}");
            }
            let _ = writeln!(out, ",{}", r.template);
        }
        out
    }
}

/// Appends snapshots to a trajectory file.
pub struct TrajectoryWriter {
    out: BufWriter<File>,
}

impl TrajectoryWriter {
    /// Creates (truncating) `path` and writes the header.
    pub fn create(path: &Path) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{SNAPSHOT_HEADER}")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn append(&mut self, snapshot: &Snapshot) -> Result<()> {
        self.out.write_all(snapshot.to_csv_rows().as_bytes())?;
        self.out.flush()?;
        Ok(())
    }
}

/// Plain-text log of run events, one line each, flushed per line.
pub struct StepLog {
    out: BufWriter<File>,
}

impl StepLog {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self { out: BufWriter::new(OpenOptions::new().create(true).write(true).truncate(true).open(path)?) })
    }

    pub fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}")?;
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct Row {
    id: usize,
    t: f64,
    x: f64,
    y: f64,
    z: f64,
    qw: f64,
    qx: f64,
    qy: f64,
    qz: f64,
    vx: f64,
    vy: f64,
    vz: f64,
    wx: f64,
    wy: f64,
    wz: f64,
    template: String,
}

/// Reads every snapshot of a trajectory file. Orientations must be unit to
/// within [`crate::world::UNIT_TOLERANCE`].
pub fn read_snapshots(path: &Path) -> Result<Vec<Snapshot>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out: Vec<Snapshot> = Vec::new();
    for row in reader.deserialize() {
        let r: Row = row?;
        let q = nalgebra::Quaternion::new(r.qw, r.qx, r.qy, r.qz);
        let orientation = Rotation::new_unchecked(q);
        Pose::new(Vec3::zeros(), orientation).check_unit()?;
        let record = ParticleRecord {
            id: r.id,
            template: r.template,
            position: Vec3::new(r.x, r.y, r.z),
            orientation,
            v: Vec3::new(r.vx, r.vy, r.vz),
            w: Vec3::new(r.wx, r.wy, r.wz),
        };
        match out.last_mut() {
            Some(s) if s.t == r.t => s.particles.push(record),
            Some(s) if r.t < s.t => {
                return Err(Error::Parse {
                    line: reader.position().line() as usize,
                    message: format!("time {} precedes the previous snapshot at {}", r.t, s.t),
                })
            }
            _ => out.push(Snapshot { t: r.t, particles: vec![record] }),
        }
    }
    Ok(out)
}

/// The last snapshot in a trajectory file; an empty file gives an empty snapshot at t = 0.
pub fn read_last_snapshot(path: &Path) -> Result<Snapshot> {
    Ok(read_snapshots(path)?
        .pop()
        .unwrap_or(Snapshot { t: 0.0, particles: Vec::new() }))
}

/// Replaces the particles of `world` with those of `snapshot`, keeping their
/// ids. Templates are looked up by name.
pub fn load_snapshot(world: &mut World, snapshot: &Snapshot) -> Result<()> {
    let mut particles = Vec::with_capacity(snapshot.particles.len());
    for r in &snapshot.particles {
        let Some(t) = world.templates.iter().position(|t| t.name == r.template) else {
            return Err(Error::validation("template", format!("snapshot names unknown template `{}`", r.template)));
        };
        let mut p = Particle::new(r.id, t, world.template_materials[t], Pose::new(r.position, r.orientation));
        p.v = r.v;
        p.w = r.w;
        particles.push(p);
    }
    world.replace_particles(particles);
    Ok(())
}

/// Which companion mesh to export.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshKind {
    /// Triangle surface, written as OBJ.
    Surface,
    /// Tetrahedral cells, written as legacy VTK.
    Cells,
}

/// Files written and particles skipped by [`export_meshes`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExportReport {
    pub written: Vec<PathBuf>,
    /// Ids of particles whose template has no mesh of the requested kind.
    pub skipped: Vec<usize>,
}

/// Writes one world-frame mesh per particle of `snapshot` into `dir`, named
/// `surface_<id>.obj` or `cells_<id>.vtk`. Templates are looked up by name
/// in `world`.
pub fn export_meshes(snapshot: &Snapshot, world: &World, kind: MeshKind, dir: &Path) -> Result<ExportReport> {
    std::fs::create_dir_all(dir)?;
    let mut report = ExportReport::default();
    for r in &snapshot.particles {
        let Some(template) = world.templates.iter().find(|t| t.name == r.template) else {
            return Err(Error::validation("template", format!("snapshot names unknown template `{}`", r.template)));
        };
        let pose = Pose::new(r.position, r.orientation);
        let path = match kind {
            MeshKind::Surface => {
                let Some(mesh) = &template.surface else {
                    warn!("particle {}: template `{}` has no surface mesh, skipped", r.id, r.template);
                    report.skipped.push(r.id);
                    continue;
                };
                let path = dir.join(format!("surface_{}.obj", r.id));
                sync_mesh(mesh, &pose)?.write_obj(BufWriter::new(File::create(&path)?))?;
                path
            }
            MeshKind::Cells => {
                let Some(mesh) = &template.cells else {
                    warn!("particle {}: template `{}` has no cell mesh, skipped", r.id, r.template);
                    report.skipped.push(r.id);
                    continue;
                };
                let path = dir.join(format!("cells_{}.vtk", r.id));
                let title = format!("particle {} t = {}", r.id, snapshot.t);
                sync_mesh(mesh, &pose)?.write_vtk(BufWriter::new(File::create(&path)?), &title)?;
                path
            }
        };
        report.written.push(path);
    }
    Ok(report)
}
