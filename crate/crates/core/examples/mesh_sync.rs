//! Surface and cell meshes riding on a tumbling ellipsoid.
//!
//! Writes a 5 x 2.5 mm ellipsoid surface (about 10k vertices, 20k triangles)
//! and a tetrahedral fan of it, attaches both to a template through a scene
//! file, spins the particle for a while and exports the posed meshes.
//!
//! ```text
//! cargo run --release --example mesh_sync
//! ```

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;

use msdem::config::{parse_scene, to_toml};
use msdem::output::{export_meshes, MeshKind, Snapshot};
use msdem::presets;
use msdem::shape::{CellMesh, SurfaceMesh};
use msdem::sim::Simulation;
use msdem::Vec3;

fn ellipsoid_surface(a: f64, b: f64, stacks: usize, slices: usize) -> msdem::Result<SurfaceMesh> {
    let mut v = vec![Vec3::new(a, 0.0, 0.0)];
    for i in 1..stacks {
        let th = PI * i as f64 / stacks as f64;
        for j in 0..slices {
            let ph = 2.0 * PI * j as f64 / slices as f64;
            v.push(Vec3::new(a * th.cos(), b * th.sin() * ph.cos(), b * th.sin() * ph.sin()));
        }
    }
    v.push(Vec3::new(-a, 0.0, 0.0));
    let ring = |i: usize, j: usize| 1 + (i - 1) * slices + j % slices;
    let last = v.len() - 1;
    let mut t = Vec::new();
    for j in 0..slices {
        t.push([0, ring(1, j), ring(1, j + 1)]);
        t.push([last, ring(stacks - 1, j + 1), ring(stacks - 1, j)]);
    }
    for i in 1..stacks - 1 {
        for j in 0..slices {
            t.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            t.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    SurfaceMesh::new(v, t)
}

/// One tetrahedron per surface triangle, sharing the center point.
fn fan_cells(surface: &SurfaceMesh) -> msdem::Result<CellMesh> {
    let mut points = surface.vertices.clone();
    points.push(Vec3::zeros());
    let c = points.len() - 1;
    CellMesh::new(points, surface.triangles.iter().map(|t| [t[0], t[2], t[1], c]).collect())
}

fn main() -> msdem::Result<()> {
    let dir = std::env::temp_dir().join("msdem_mesh_sync");
    std::fs::create_dir_all(&dir)?;
    let surface = ellipsoid_surface(5e-3, 2.5e-3, 101, 100)?;
    let cells = fan_cells(&surface)?;
    surface.write_obj(BufWriter::new(File::create(dir.join("ellipsoid.obj"))?))?;
    cells.write_vtk(BufWriter::new(File::create(dir.join("ellipsoid.vtk"))?), "ellipsoid cells")?;
    println!("surface: {} vertices, {} triangles; cells: {} tets", surface.vertices.len(), surface.triangles.len(), cells.tets.len());

    let mut scene = presets::impact_wall(1e9);
    scene.walls.clear();
    scene.templates[0].surface = Some("ellipsoid.obj".into());
    scene.templates[0].cells = Some("ellipsoid.vtk".into());
    scene.particles[0].velocity = [0.0, 0.0, -0.1];
    scene.particles[0].angular_velocity = [3.0, 40.0, 5.0];
    scene.run.end_time = Some(0.01);
    scene.step.dt = Some(1e-5);
    // scene files resolve mesh paths against their own directory
    std::fs::write(dir.join("scene.toml"), to_toml(&scene)?)?;
    let scene = parse_scene(&std::fs::read_to_string(dir.join("scene.toml"))?)?;
    let mut sim = Simulation::from_scene(&scene, &dir)?;
    sim.run()?;

    let snapshot = Snapshot::of_world(&sim.world, sim.time);
    let out = dir.join("posed");
    for kind in [MeshKind::Surface, MeshKind::Cells] {
        let report = export_meshes(&snapshot, &sim.world, kind, &out)?;
        for f in &report.written {
            println!("wrote {}", f.display());
        }
    }
    let p = &sim.world.particles[0];
    println!("pose at t = {} s: position {:?}, orientation {:?}", sim.time, p.pose.position.as_slice(), p.pose.orientation.as_vector().as_slice());
    Ok(())
}
