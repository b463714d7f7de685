//! Acceptance criteria, one PASS/FAIL/SKIP line each.
//!
//! Criteria 4 to 7 pour hundreds of clumps and take hours on one core; they
//! run only with `MSDEM_ACCEPTANCE_HEAVY=1`. The test itself fails only when
//! a fast criterion that is expected to hold (3 and 8) does not.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use msdem::analysis::{interface_contacts, measure, Measure};
use msdem::config::SceneConfig;
use msdem::force::{effective_pair, normal_force, rotate_history, Counterpart};
use msdem::integrate::{kinetic_energy, step_free, Inertia};
use msdem::neighbor::{brute_force_pairs, build_cell_list, build_verlet, needs_rebuild, GlobalSphere};
use msdem::presets;
use msdem::sim::Simulation;
use msdem::world::{Particle, Pose};
use msdem::{Rotation, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq)]
enum Verdict {
    Pass,
    Fail,
    Skip,
}

struct Line {
    id: u32,
    verdict: Verdict,
    text: String,
}

fn line(id: u32, ok: bool, text: String) -> Line {
    Line { id, verdict: if ok { Verdict::Pass } else { Verdict::Fail }, text }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn run_scene(scene: &SceneConfig) -> Simulation {
    let mut sim = Simulation::from_scene(scene, Path::new(".")).unwrap();
    sim.run().unwrap();
    sim
}

/// Rebound speed of the moving ellipsoid over its 1 m/s approach speed.
fn rebound(scene: SceneConfig) -> f64 {
    let sim = run_scene(&scene);
    let p = sim.world.particles.iter().find(|p| !p.fixed).unwrap();
    p.v.z / 1.0
}

fn criterion_1() -> Line {
    let stiff = rebound(presets::impact_wall(10e9));
    let soft = rebound(presets::impact_wall(1.06e9));
    let ok = within(stiff, 0.63, 0.02) && within(soft, 0.60, 0.01);
    line(1, ok, format!("particle-wall rebound: Y=10 GPa {stiff:.4} (0.63 ± 0.02), Y=1.06 GPa {soft:.4} (0.60 ± 0.01)"))
}

fn criterion_2() -> Line {
    let ratios: Vec<f64> = [0.5e9, 1e9, 10e9].iter().map(|&y| rebound(presets::impact_pp(y))).collect();
    let band = ratios.iter().all(|&r| within(r, 0.72, 0.02));
    let flat = (ratios[1] - ratios[2]).abs() <= 0.01 * ratios[1];

    let scene = presets::impact_pp(10e9);
    let sim = Simulation::from_scene(&scene, Path::new(".")).unwrap();
    let t = &sim.world.templates[0];
    let mat = &sim.world.materials[0];
    let (r, m) = (t.contact_radius(0), t.props.mass);
    let pp = effective_pair(mat, r, m, Counterpart::Particle { material: mat, radius: r, mass: m }).unwrap();
    let pw = effective_pair(mat, r, m, Counterpart::Wall { material: mat }).unwrap();
    let (d, n, v) = (1e-6, Vec3::z(), Vec3::zeros());
    let gamma = normal_force(d, &n, &v, &pp).gamma_n / normal_force(d, &n, &v, &pw).gamma_n;
    let gamma_ok = within(gamma, 0.5f64.powf(1.0 / 8.0), 1e-6);

    line(
        2,
        band && flat && gamma_ok,
        format!(
            "particle-particle rebound {:.4}/{:.4}/{:.4} at Y=0.5/1/10 GPa (0.72 ± 0.02, flat ±1%: {flat}); \
             gamma_pp/gamma_pw = {gamma:.6} (0.917004 ± 1e-6)",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn criterion_3() -> Line {
    let scene = presets::impact_wall(10e9);
    let sim = Simulation::from_scene(&scene, Path::new(".")).unwrap();
    let t = &sim.world.templates[0];
    let mat = &sim.world.materials[0];
    let pair = effective_pair(mat, t.contact_radius(0), t.props.mass, Counterpart::Wall { material: mat }).unwrap();
    let pts: Vec<(f64, f64)> = (0..=40)
        .map(|k| {
            let d = 0.05e-6 * 100f64.powf(k as f64 / 40.0);
            let f = normal_force(-d, &Vec3::z(), &Vec3::zeros(), &pair).force.norm();
            (d.ln(), f.ln())
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    line(3, within(slope, 1.5, 0.005), format!("Hertz log-log slope over 0.05-5 µm: {slope:.6} (1.500 ± 0.005)"))
}

fn random_spheres(rng: &mut ChaCha8Rng, n: usize, side: f64) -> Vec<GlobalSphere> {
    (0..n)
        .map(|g| GlobalSphere {
            gid: g,
            particle: g / 3,
            local: g % 3,
            center: Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * side,
            radius: rng.gen_range(0.2..0.5),
        })
        .collect()
}

fn hybrid_matches_brute_force() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for config in 0..50 {
        let spheres = random_spheres(&mut rng, 500, 12.0);
        let skin = rng.gen_range(0.0..0.4);
        let grid = build_cell_list(&spheres, 2.0).map_err(|e| e.to_string())?;
        let list = build_verlet(&grid, &spheres, skin, 0.0).map_err(|e| e.to_string())?;
        if list.pairs != brute_force_pairs(&spheres, skin, 0.0) {
            return Err(format!("configuration {config} differs"));
        }
    }
    Ok(())
}

fn no_missed_contact() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let side = 15.0;
    let mut spheres: Vec<GlobalSphere> = (0..200)
        .map(|g| GlobalSphere {
            gid: g,
            particle: g,
            local: 0,
            center: Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * side,
            radius: 0.5,
        })
        .collect();
    let mut vel: Vec<Vec3> =
        (0..200).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let (dt, skin) = (0.01, 0.3);
    let mut list = build_verlet(&build_cell_list(&spheres, 2.0).unwrap(), &spheres, skin, 0.0).unwrap();
    for step in 0..10_000 {
        for (s, v) in spheres.iter_mut().zip(vel.iter_mut()) {
            s.center += *v * dt;
            for k in 0..3 {
                if s.center[k] < 0.0 || s.center[k] > side {
                    v[k] = -v[k];
                }
            }
        }
        let centers: Vec<Vec3> = spheres.iter().map(|s| s.center).collect();
        if needs_rebuild(&centers, &list.reference, skin) {
            list = build_verlet(&build_cell_list(&spheres, 2.0).unwrap(), &spheres, skin, 0.0).unwrap();
        }
        for pair in brute_force_pairs(&spheres, 0.0, 0.0) {
            if list.pairs.binary_search(&pair).is_err() {
                return Err(format!("pair {pair:?} missed at step {step}"));
            }
        }
    }
    Ok(())
}

fn closed_system_balance() -> Result<(), String> {
    let mut scene = presets::impact_wall(5e7);
    scene.gravity = [0.0; 3];
    scene.walls.clear();
    scene.particles.clear();
    scene.materials[0].friction_pp = 0.4;
    scene.materials[0].rolling = 0.001;
    let mut t = presets::series_template("ellipsoid").unwrap();
    t.material = "glass".into();
    scene.templates = vec![t];
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    // loose lattice: neighbours touch lightly whatever their orientation
    for k in 0..27 {
        let q = Rotation::from_euler_angles(rng.gen_range(0.0..PI), rng.gen_range(0.0..PI), rng.gen_range(0.0..PI));
        let q = q.quaternion();
        let cell = [(k % 3) as f64, ((k / 3) % 3) as f64, (k / 9) as f64];
        scene.particles.push(msdem::config::ParticleConfig {
            template: "ellipsoid".into(),
            position: cell.map(|c| c * 0.0075 + rng.gen_range(-5e-4..5e-4)),
            orientation: [q.w, q.i, q.j, q.k],
            velocity: [rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)],
            angular_velocity: [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)],
            fixed: false,
            tag: 0,
        });
    }
    scene.step.dt = Some(1e-6);
    let mut sim = Simulation::from_scene(&scene, Path::new(".")).unwrap();
    let mut worst: f64 = 0.0;
    let mut loaded = false;
    for _ in 0..200 {
        sim.step().map_err(|e| e.to_string())?;
        let ps = &sim.world.particles;
        let net_f: Vec3 = ps.iter().map(|p| p.f_acc).sum();
        let net_t: Vec3 = ps.iter().map(|p| p.t_acc + p.pose.position.cross(&p.f_acc)).sum();
        let scale_f: f64 = ps.iter().map(|p| p.f_acc.norm()).sum();
        let scale_t: f64 = ps.iter().map(|p| p.t_acc.norm() + p.pose.position.norm() * p.f_acc.norm()).sum();
        if scale_f > 0.0 {
            loaded = true;
            worst = worst.max(net_f.norm() / scale_f).max(net_t.norm() / scale_t);
        }
    }
    if !loaded {
        return Err("no contacts formed".into());
    }
    if worst > 1e-12 {
        return Err(format!("relative imbalance {worst:e}"));
    }
    Ok(())
}

fn history_rotation_keeps_length() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10_000 {
        let d = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 1e-6;
        let n = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).normalize();
        let r = rotate_history(&d, &n);
        if (r.norm() - d.norm()).abs() > 1e-12 * d.norm() || r.dot(&n).abs() > 1e-12 * d.norm() {
            return Err(format!("delta {d:?} about n {n:?} gave {r:?}"));
        }
    }
    Ok(())
}

fn torque_free_conservation() -> Result<(), String> {
    let inertia = Inertia { mass: 1.0, principal: Vec3::new(1.0, 2.0, 3.0) };
    let mut p = Particle::new(0, 0, 0, Pose::identity());
    p.w = Vec3::new(0.05, 3.0, 0.04);
    let ang = |p: &Particle| (p.pose.orientation * inertia.principal.component_mul(&(p.pose.orientation.inverse() * p.w))).norm();
    let (l0, e0) = (ang(&p), kinetic_energy(&p, &inertia));
    let zero = Vec3::zeros();
    for _ in 0..100_000 {
        step_free(&mut p, &inertia, &zero, &zero, &zero, 1e-3);
    }
    let (dl, de) = ((ang(&p) - l0).abs() / l0, (kinetic_energy(&p, &inertia) - e0).abs() / e0);
    if dl > 1e-6 || de > 1e-6 {
        return Err(format!("|L| drift {dl:e}, energy drift {de:e}"));
    }
    Ok(())
}

fn verlet_constant_acceleration() -> Result<(), String> {
    let inertia = Inertia { mass: 2.0, principal: Vec3::new(1.0, 1.0, 1.0) };
    let (x0, v0) = (Vec3::new(0.1, -0.2, 0.3), Vec3::new(1.0, 0.5, 2.0));
    let (f, g) = (Vec3::new(0.4, 0.0, -0.2), Vec3::new(0.0, 0.0, -9.81));
    let mut p = Particle::new(0, 0, 0, Pose::new(x0, Rotation::identity()));
    p.v = v0;
    let (dt, n) = (1e-3, 100);
    for _ in 0..n {
        step_free(&mut p, &inertia, &f, &Vec3::zeros(), &g, dt);
    }
    let t = n as f64 * dt;
    let a = f / inertia.mass + g;
    let x = x0 + v0 * t + a * (0.5 * t * t);
    let v = v0 + a * t;
    let (ex, ev) = ((p.pose.position - x).norm() / x.norm(), (p.v - v).norm() / v.norm());
    if ex > 1e-12 || ev > 1e-12 {
        return Err(format!("position error {ex:e}, velocity error {ev:e}"));
    }
    Ok(())
}

fn determinism() -> Result<(), String> {
    let mut scene = presets::pack_shapes("ellipsoid").unwrap();
    scene.streams[0].stop = msdem::config::StopConfig::Count(40);
    scene.streams[0].batch = [10, 20];
    scene.streams[0].interval = 500;
    scene.run.stop_when_settled = false;
    scene.run.end_time = None;
    scene.run.max_steps = Some(3000);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let mut sim = Simulation::from_scene(&scene, Path::new(".")).map_err(|e| e.to_string())?;
        sim.run_recorded(&out, 500).map_err(|e| e.to_string())?;
        let traj = std::fs::read(out.join("trajectory.csv")).map_err(|e| e.to_string())?;
        let log = std::fs::read(out.join("steps.log")).map_err(|e| e.to_string())?;
        outputs.push((traj, log));
    }
    if outputs[0] != outputs[1] {
        return Err("outputs differ".into());
    }
    Ok(())
}

fn criterion_8() -> Line {
    type Check = fn() -> Result<(), String>;
    let checks: [(&str, Check); 7] = [
        ("hybrid = brute force", hybrid_matches_brute_force),
        ("no missed contact", no_missed_contact),
        ("closed-system balance", closed_system_balance),
        ("history rotation", history_rotation_keeps_length),
        ("torque-free |L|, E", torque_free_conservation),
        ("Verlet exactness", verlet_constant_acceleration),
        ("determinism", determinism),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, check) in checks {
        match check() {
            Ok(()) => parts.push(format!("{name} ok")),
            Err(e) => {
                ok = false;
                parts.push(format!("{name} FAILED: {e}"));
            }
        }
    }
    line(8, ok, format!("property suites: {}", parts.join("; ")))
}

fn heavy() -> bool {
    std::env::var("MSDEM_ACCEPTANCE_HEAVY").is_ok_and(|v| v == "1")
}

fn skip(id: u32, what: &str) -> Line {
    Line { id, verdict: Verdict::Skip, text: format!("{what} (set MSDEM_ACCEPTANCE_HEAVY=1)") }
}

const SEEDS: [u64; 3] = [1, 2, 3];

fn with_seed(mut scene: SceneConfig, seed: u64) -> SceneConfig {
    scene.seed = seed;
    scene
}

fn criterion_4() -> Line {
    let mut report = Vec::new();
    let mut ok = true;
    for seed in SEEDS {
        let scene = with_seed(presets::pack_capsules(), seed);
        let sim = run_scene(&scene);
        let cfg = scene.analysis.as_ref().unwrap();
        let h = measure(&sim.world, cfg, Measure::FillHeight).unwrap().value * 1e3;
        let phi = measure(&sim.world, cfg, Measure::Porosity).unwrap().value * 100.0;
        ok &= within(h, 126.6, 5.0) && within(phi, 40.9, 1.5);
        report.push(format!("seed {seed}: h {h:.1} mm, porosity {phi:.1}%"));
    }
    line(4, ok, format!("capsule packing (126.6 ± 5 mm, 40.9 ± 1.5%): {}", report.join("; ")))
}

fn series_mean(kind: &str, scene: fn(&str) -> Option<SceneConfig>, which: Measure, scale: f64) -> f64 {
    let mut sum = 0.0;
    for seed in SEEDS {
        let scene = with_seed(scene(kind).unwrap(), seed);
        let sim = run_scene(&scene);
        sum += measure(&sim.world, scene.analysis.as_ref().unwrap(), which).unwrap().value * scale;
    }
    sum / SEEDS.len() as f64
}

fn criterion_5() -> Line {
    let targets = [43.9, 40.6, 41.3, 42.2, 54.5];
    let got: Vec<f64> =
        presets::SHAPE_KINDS.iter().map(|k| series_mean(k, presets::pack_shapes, Measure::Porosity, 100.0)).collect();
    let each = got.iter().zip(targets).all(|(&g, t)| within(g, t, 2.0));
    let order = got[4] > got[..4].iter().cloned().fold(0.0, f64::max) && got[1..4].iter().all(|&g| got[0] > g);
    let text: Vec<String> =
        presets::SHAPE_KINDS.iter().zip(&got).zip(targets).map(|((k, g), t)| format!("{k} {g:.1}% ({t})")).collect();
    line(5, each && order, format!("shape porosity ±2 pp: {}; ordering {order}", text.join(", ")))
}

fn criterion_6() -> Line {
    let targets = [8.7, 21.5, 24.2, 18.1, 22.3];
    let got: Vec<f64> =
        presets::SHAPE_KINDS.iter().map(|k| series_mean(k, presets::dam_break, Measure::AngleOfRepose, 1.0)).collect();
    let each = got.iter().zip(targets).all(|(&g, t)| within(g, t, 3.0));
    let smallest = got[1..].iter().all(|&g| got[0] < g);
    let text: Vec<String> =
        presets::SHAPE_KINDS.iter().zip(&got).zip(targets).map(|((k, g), t)| format!("{k} {g:.1}° ({t}°)")).collect();
    line(6, each && smallest, format!("dam-break angle of repose ±3°: {}; sphere smallest {smallest}", text.join(", ")))
}

fn criterion_7() -> Line {
    let scene = presets::drum();
    let mut sim = Simulation::from_scene(&scene, Path::new(".")).unwrap();
    let period = 60.0 / 20.0;
    let mut inside = true;
    let mut mass0 = None;
    let mut mass_ok = true;
    let mut samples: Vec<(usize, f64)> = Vec::new();
    let mut revs_done = 0;
    let result = sim.run_with(|sim| {
        let Some(t0) = sim.actions_done_at else { return Ok(()) };
        for p in &sim.world.particles {
            let x = p.pose.position;
            let r = (x.x * x.x + x.z * x.z).sqrt();
            inside &= r <= presets::DRUM_RADIUS && x.y >= 0.0 && x.y <= presets::DRUM_THICKNESS;
        }
        let m = sim.world.total_mass();
        let m0 = *mass0.get_or_insert(m);
        mass_ok &= (m - m0).abs() <= 1e-12 * m0;
        if sim.time - t0 >= (revs_done + 1) as f64 * period - 0.5 * sim.dt() {
            revs_done += 1;
            let n = sim.world.particles.len() as f64;
            let speed = sim.world.particles.iter().map(|p| p.v.norm()).sum::<f64>() / n;
            samples.push((interface_contacts(&sim.world)?, speed));
        }
        Ok(())
    });
    if let Err(e) = result {
        return line(7, false, format!("rotating drum aborted: {e}"));
    }
    let count = sim.world.particles.len();
    let moving = samples.len() >= 2 && samples.iter().all(|s| s.1 > 1e-3);
    let mixing = samples.windows(2).all(|w| w[1].0 >= w[0].0);
    line(
        7,
        inside && mass_ok && moving && mixing && count == 1000,
        format!(
            "rotating drum: {count} particles, inside {inside}, mass constant {mass_ok}, \
             per-revolution (interface contacts, mean speed) {samples:?}"
        ),
    )
}

#[test]
fn acceptance() {
    let mut lines = vec![criterion_1(), criterion_2(), criterion_3()];
    if heavy() {
        lines.extend([criterion_4(), criterion_5(), criterion_6(), criterion_7()]);
    } else {
        lines.push(skip(4, "capsule packing"));
        lines.push(skip(5, "shape-packing porosity"));
        lines.push(skip(6, "dam-break angle of repose"));
        lines.push(skip(7, "rotating drum"));
    }
    lines.push(criterion_8());
    lines.sort_by_key(|l| l.id);
    for l in &lines {
        let tag = match l.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        };
        // straight to stderr so the report shows without --nocapture
        let _ = writeln!(std::io::stderr(), "{tag} criterion {}: {}", l.id, l.text);
    }
    for l in &lines {
        if [3, 8].contains(&l.id) {
            assert!(l.verdict == Verdict::Pass, "criterion {} must hold: {}", l.id, l.text);
        }
    }
}
