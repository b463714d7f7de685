//! The driver loop.
//!
//! One step of [`Simulation::step`]:
//!
//! 1. rotate moving walls;
//! 2. half kick and drift of every free particle (forces from the previous step);
//! 3. stream insertion;
//! 4. neighbor list check and rebuild, wall candidates;
//! 5. contact forces and torques;
//! 6. second half kick;
//! 7. speed guard, settlement check, `on_settled` actions, stop conditions.
//!
//! Everything runs sequentially in a fixed order: pairs and wall candidates
//! are sorted, so a seed and a scene fully determine the output bytes.

use std::fmt;
use std::fs;
use std::path::Path;

use log::{debug, error, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::analysis::{kinetic_energy_per_particle, SettleMonitor};
use crate::config::{Action, NeighborConfig, RegionConfig, RunConfig, SceneConfig, StopConfig, WallGeometry};
use crate::contact::{sphere_cylinder, sphere_mesh, sphere_plane, sphere_sphere, ContactGeom};
use crate::force::{
    accumulate, effective_pair, normal_force, relative_velocity, rolling_resistance, tangential_force, ContactHistory,
    ContactKey, Counterpart, EffectivePair, Load, RigidMotion,
};
use crate::integrate::{advance_walls, drift, hertz_time, kick, rayleigh_time, Inertia, TimeStepEstimate};
use crate::neighbor::{build_cell_list, build_verlet, needs_rebuild, wall_candidates, GlobalSphere, NeighborList};
use crate::output::{Snapshot, StepLog, TrajectoryWriter};
use crate::shape::{CellMesh, CurvatureModel, ShapeDescriptor, ShapeTemplate, SurfaceMesh};
use crate::world::{
    insert_batch, InsertRegion, Pose, RegionGeometry, StopCondition, TriMesh, Wall, WallKind, WallMotion, World,
};
use crate::{Error, Result, Rotation, Vec3};

/// Step size and loop controls for a [`Simulation`] built in code.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub dt: f64,
    pub gravity: Vec3,
    pub run: RunConfig,
    pub neighbor: NeighborConfig,
    /// Recorded for the log; the engine is always sequential and reproducible.
    pub deterministic: bool,
}

impl Settings {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            gravity: Vec3::new(0.0, 0.0, -9.81),
            run: RunConfig::default(),
            neighbor: NeighborConfig::default(),
            deterministic: true,
        }
    }
}

/// Something done once the bed first settles after all streams finished.
#[derive(Clone, Debug, PartialEq)]
pub enum SettleAction {
    RemoveWall(usize),
    /// Set the wall turning with `motion`.
    StartRotation(usize, WallMotion),
    /// Lower half of the particles (by height) gets tag 1, the upper half tag 2.
    TagLayers,
}

/// A particle stream and its progress.
#[derive(Clone, Debug)]
pub struct Stream {
    pub region: InsertRegion,
    pub template: usize,
    pub tag: u32,
    pub inserted: usize,
    pub inserted_mass: f64,
    pub done: bool,
    rng: ChaCha8Rng,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RebuildCause {
    Initial,
    /// The particle or sphere count changed.
    Insertion,
    /// Some sphere moved half the skin since the last build.
    Displacement,
    /// The forced interval elapsed.
    Interval,
}

/// Notable moments of a run, written to the step log.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Rebuild { step: u64, cause: RebuildCause, pairs: usize, skin: f64 },
    Inserted { step: u64, stream: usize, count: usize, region_full: bool },
    StreamDone { step: u64, stream: usize, inserted: usize },
    Settled { step: u64, t: f64, energy: f64 },
    Action { step: u64, t: f64, action: String },
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Rebuild { step, cause, pairs, skin } => {
                let cause = match cause {
                    RebuildCause::Initial => "initial",
                    RebuildCause::Insertion => "insertion",
                    RebuildCause::Displacement => "displacement",
                    RebuildCause::Interval => "interval",
                };
                write!(f, "step {step} rebuild cause={cause} pairs={pairs} skin={skin:e}")
            }
            Event::Inserted { step, stream, count, region_full } => {
                write!(f, "step {step} insert stream={stream} count={count} region_full={region_full}")
            }
            Event::StreamDone { step, stream, inserted } => {
                write!(f, "step {step} stream {stream} done after {inserted} particles")
            }
            Event::Settled { step, t, energy } => write!(f, "step {step} settled t={t} ke_per_particle={energy:e}"),
            Event::Action { step, t, action } => write!(f, "step {step} action t={t} {action}"),
        }
    }
}

/// Why a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    EndTime,
    MaxSteps,
    Settled,
    AfterActions,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Other {
    Sphere { template: usize, local: usize },
    Wall { material: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct PairKey {
    template: usize,
    local: usize,
    other: Other,
}

/// A world plus everything needed to advance it.
pub struct Simulation {
    pub world: World,
    pub settings: Settings,
    pub time: f64,
    pub steps: u64,
    pub streams: Vec<Stream>,
    pub actions: Vec<SettleAction>,
    /// Time at which the `on_settled` actions ran.
    pub actions_done_at: Option<f64>,
    /// Time-step bounds of the initial state, when particles or streams exist.
    pub estimate: Option<TimeStepEstimate>,
    inertia: Vec<Inertia>,
    spheres: Vec<GlobalSphere>,
    list: NeighborList,
    since_rebuild: u64,
    walls_dirty: bool,
    history: ContactHistory,
    pairs: FxHashMap<PairKey, EffectivePair>,
    monitor: SettleMonitor,
    events: Vec<Event>,
    stop: Option<StopReason>,
    forces_ready: bool,
}

impl Simulation {
    pub fn new(world: World, settings: Settings) -> Result<Self> {
        if !(settings.dt > 0.0 && settings.dt.is_finite()) {
            return Err(Error::validation("step.dt", format!("must be positive, got {}", settings.dt)));
        }
        let inertia = world
            .templates
            .iter()
            .map(|t| Inertia { mass: t.props.mass, principal: t.props.inertia_principal })
            .collect();
        let monitor = SettleMonitor::new(settings.run.settle_threshold);
        let mut sim = Self {
            world,
            settings,
            time: 0.0,
            steps: 0,
            streams: Vec::new(),
            actions: Vec::new(),
            actions_done_at: None,
            estimate: None,
            inertia,
            spheres: Vec::new(),
            list: NeighborList::default(),
            since_rebuild: 0,
            walls_dirty: true,
            history: ContactHistory::new(),
            pairs: FxHashMap::default(),
            monitor,
            events: Vec::new(),
            stop: None,
            forces_ready: false,
        };
        for p in sim.world.particles.iter_mut() {
            p.pose.check_unit()?;
            if p.fixed && (p.v != Vec3::zeros() || p.w != Vec3::zeros()) {
                warn!("particle {} is fixed; its initial velocity is discarded", p.id);
                p.v = Vec3::zeros();
                p.w = Vec3::zeros();
            }
        }
        sim.estimate = estimate_timestep(&sim.world, sim.initial_speed()).ok();
        Ok(sim)
    }

    /// Builds the world described by `scene`. Mesh paths are resolved against `base_dir`.
    pub fn from_scene(scene: &SceneConfig, base_dir: &Path) -> Result<Self> {
        scene.validate()?;
        let mut world = World::new();
        for m in &scene.materials {
            world.add_material(m.clone())?;
        }
        for t in &scene.templates {
            let mat = scene.material_index(&t.material).expect("validated");
            let descriptor = ShapeDescriptor { kind: t.shape, spheres: t.spheres };
            let mut template = ShapeTemplate::new(t.name.clone(), descriptor, scene.materials[mat].density)?
                .with_curvature(t.curvature);
            if let Some(path) = &t.surface {
                template = template.with_surface(SurfaceMesh::parse_obj(&read(base_dir, path)?)?);
            }
            if let Some(path) = &t.cells {
                template = template.with_cells(CellMesh::parse_vtk(&read(base_dir, path)?)?);
            }
            world.add_template(template, mat);
        }
        let mut deferred = Vec::new();
        for w in &scene.walls {
            let mat = scene.material_index(&w.material).expect("validated");
            let mut wall = match &w.geometry {
                WallGeometry::Plane { point, normal } => Wall::plane(Vec3::from(*point), Vec3::from(*normal), mat)?,
                WallGeometry::Cylinder { radius, p1, p2, inside } => {
                    Wall::cylinder(*radius, Vec3::from(*p1), Vec3::from(*p2), *inside, mat)?
                }
                WallGeometry::Mesh { path } => {
                    let surface = SurfaceMesh::parse_obj(&read(base_dir, path)?)?;
                    Wall::mesh(TriMesh::from_surface(&surface)?, mat)?
                }
            };
            let motion = w
                .rotation
                .as_ref()
                .map(|r| (WallMotion::from_rpm(Vec3::from(r.axis_point), Vec3::from(r.axis), r.rpm), r.deferred));
            match motion {
                Some((m, false)) => {
                    wall = wall.with_motion(m);
                    deferred.push(None);
                }
                Some((m, true)) => deferred.push(Some(m)),
                None => deferred.push(None),
            }
            world.add_wall(wall);
        }
        for p in &scene.particles {
            let t = scene.template_index(&p.template).expect("validated");
            let [w, x, y, z] = p.orientation;
            let q = Rotation::new_normalize(nalgebra::Quaternion::new(w, x, y, z));
            let id = world.spawn(t, Pose::new(Vec3::from(p.position), q));
            let particle = world.particles.iter_mut().find(|q| q.id == id).expect("just spawned");
            particle.v = Vec3::from(p.velocity);
            particle.w = Vec3::from(p.angular_velocity);
            particle.fixed = p.fixed;
            particle.tag = p.tag;
        }

        let mut actions = Vec::new();
        for (i, a) in scene.on_settled.iter().enumerate() {
            actions.push(match a {
                Action::RemoveWall { wall } => SettleAction::RemoveWall(scene.wall_index(wall).expect("validated")),
                Action::StartRotation { wall } => {
                    let w = scene.wall_index(wall).expect("validated");
                    let motion = deferred[w].clone().or_else(|| world.walls[w].motion.clone()).ok_or_else(|| {
                        Error::validation(format!("on_settled[{i}]"), format!("wall `{wall}` has no rotation"))
                    })?;
                    SettleAction::StartRotation(w, motion)
                }
                Action::TagLayers => SettleAction::TagLayers,
            });
        }

        let mut streams = Vec::new();
        for (i, s) in scene.streams.iter().enumerate() {
            let template = scene.template_index(&s.template).expect("validated");
            let geometry = match s.region {
                RegionConfig::Box { min, max } => RegionGeometry::Box { min: Vec3::from(min), max: Vec3::from(max) },
                RegionConfig::Cylinder { base_center, radius, height } => {
                    RegionGeometry::Cylinder { base_center: Vec3::from(base_center), radius, height }
                }
            };
            let stop = match s.stop {
                StopConfig::Count(n) => StopCondition::Count(n),
                StopConfig::Mass(m) => StopCondition::Mass(m),
                StopConfig::Exhaustion => StopCondition::Exhaustion,
            };
            let region = InsertRegion {
                geometry,
                velocity: Vec3::from(s.velocity),
                trigger_interval: s.interval,
                batch: (s.batch[0], s.batch[1]),
                stop,
                seed: scene.seed.wrapping_add(i as u64),
            };
            streams.push((region, template, s.tag));
        }

        let speed = world
            .particles
            .iter()
            .map(|p| p.v.norm())
            .chain(streams.iter().map(|s| s.0.velocity.norm()))
            .fold(0.0, f64::max);
        let estimate = estimate_timestep(&world, speed).ok();
        let dt = match (scene.step.dt, scene.step.divisor) {
            (Some(dt), _) => dt,
            (None, Some(n)) => {
                let e = estimate.ok_or_else(|| {
                    Error::validation("step.divisor", "needs at least one template to estimate the critical step")
                })?;
                e.dt_critical / n as f64
            }
            (None, None) => unreachable!("validated"),
        };
        let settings = Settings {
            dt,
            gravity: Vec3::from(scene.gravity),
            run: scene.run.clone(),
            neighbor: scene.neighbor.clone(),
            deterministic: scene.step.deterministic,
        };
        let mut sim = Simulation::new(world, settings)?;
        for (region, template, tag) in streams {
            sim.add_stream(region, template, tag)?;
        }
        sim.actions = actions;
        if sim.estimate.is_none() {
            sim.estimate = estimate;
        }
        Ok(sim)
    }

    pub fn add_stream(&mut self, region: InsertRegion, template: usize, tag: u32) -> Result<()> {
        region.validate()?;
        if template >= self.world.templates.len() {
            return Err(Error::validation("stream.template", format!("no template {template}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(region.seed);
        rng.set_stream(self.streams.len() as u64);
        self.streams.push(Stream { region, template, tag, inserted: 0, inserted_mass: 0.0, done: false, rng });
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.settings.dt
    }

    /// Events since the last call.
    pub fn drain_events(&mut self) -> Vec<Event> {
        std::mem::take(&mut self.events)
    }

    /// Number of contact histories currently alive.
    pub fn live_contacts(&self) -> usize {
        self.history.len()
    }

    fn initial_speed(&self) -> f64 {
        self.world
            .particles
            .iter()
            .map(|p| p.v.norm())
            .chain(self.streams.iter().map(|s| s.region.velocity.norm()))
            .fold(0.0, f64::max)
    }

    /// Runs until a stop condition holds.
    pub fn run(&mut self) -> Result<StopReason> {
        self.run_with(|_| Ok(()))
    }

    /// Runs until a stop condition holds, calling `after_step` after every step.
    pub fn run_with<F: FnMut(&mut Simulation) -> Result<()>>(&mut self, mut after_step: F) -> Result<StopReason> {
        if self.settings.run.end_time.is_none() && self.settings.run.max_steps.is_none() && !self.settings.run.stop_when_settled
        {
            return Err(Error::validation("run", "needs end_time, max_steps or stop_when_settled"));
        }
        loop {
            if let Some(reason) = self.stop_reason() {
                return Ok(reason);
            }
            self.step()?;
            after_step(self)?;
        }
    }

    /// Runs to completion writing `trajectory.csv` (every `every` steps plus
    /// the first and last state; 0 for first and last only) and `steps.log` into `dir`.
    pub fn run_recorded(&mut self, dir: &Path, every: u64) -> Result<StopReason> {
        fs::create_dir_all(dir)?;
        let mut traj = TrajectoryWriter::create(&dir.join("trajectory.csv"))?;
        let mut log = StepLog::create(&dir.join("steps.log"))?;
        log.line(&format!(
            "dt={:e} deterministic={} particles={} walls={} streams={}",
            self.settings.dt,
            self.settings.deterministic,
            self.world.particles.len(),
            self.world.walls.len(),
            self.streams.len()
        ))?;
        self.prepare()?;
        traj.append(&Snapshot::of_world(&self.world, self.time))?;
        let mut last_written = self.steps;
        let result = self.run_with(|sim| {
            for e in sim.drain_events() {
                log.line(&e.to_string())?;
            }
            if every > 0 && sim.steps % every == 0 {
                traj.append(&Snapshot::of_world(&sim.world, sim.time))?;
                last_written = sim.steps;
            }
            Ok(())
        });
        for e in self.drain_events() {
            log.line(&e.to_string())?;
        }
        match result {
            Ok(reason) => {
                if last_written != self.steps {
                    traj.append(&Snapshot::of_world(&self.world, self.time))?;
                }
                log.line(&format!("step {} stop reason={reason:?} t={}", self.steps, self.time))?;
                Ok(reason)
            }
            Err(e) => {
                log.line(&format!("step {} aborted: {e}", self.steps))?;
                Err(e)
            }
        }
    }

    fn stop_reason(&self) -> Option<StopReason> {
        if let Some(r) = self.stop {
            return Some(r);
        }
        let run = &self.settings.run;
        if let Some(n) = run.max_steps {
            if self.steps >= n {
                return Some(StopReason::MaxSteps);
            }
        }
        if let Some(t) = run.end_time {
            if self.time >= t - 0.5 * self.settings.dt {
                return Some(StopReason::EndTime);
            }
        }
        if let (Some(t0), Some(wait)) = (self.actions_done_at, run.time_after_actions) {
            if self.time - t0 >= wait - 0.5 * self.settings.dt {
                return Some(StopReason::AfterActions);
            }
        }
        None
    }

    /// Builds the neighbor list and evaluates the initial forces; called
    /// automatically by the first step.
    pub fn prepare(&mut self) -> Result<()> {
        if !self.forces_ready {
            self.refresh_neighbors(true)?;
            self.compute_forces()?;
            self.forces_ready = true;
        }
        Ok(())
    }

    /// Advances the state by one time step.
    pub fn step(&mut self) -> Result<()> {
        self.prepare()?;
        let dt = self.settings.dt;
        let g = self.settings.gravity;
        advance_walls(&mut self.world.walls, dt);
        for p in self.world.particles.iter_mut().filter(|p| !p.fixed) {
            let inertia = self.inertia[p.template];
            let (f, t) = (p.f_acc, p.t_acc);
            kick(p, &inertia, &f, &t, &g, 0.5 * dt);
            drift(p, &inertia, dt);
        }
        self.insert_streams()?;
        self.refresh_neighbors(false)?;
        self.compute_forces()?;
        for p in self.world.particles.iter_mut().filter(|p| !p.fixed) {
            let inertia = self.inertia[p.template];
            let (f, t) = (p.f_acc, p.t_acc);
            kick(p, &inertia, &f, &t, &g, 0.5 * dt);
        }
        self.steps += 1;
        self.time = self.steps as f64 * dt;
        self.check_speeds()?;
        if self.steps.is_multiple_of(self.settings.run.settle_check_every) {
            self.check_settled();
        }
        Ok(())
    }

    fn check_speeds(&self) -> Result<()> {
        let cap = self.settings.run.speed_cap;
        for p in &self.world.particles {
            let speed = p.v.norm();
            if !(speed <= cap) {
                error!(
                    "particle {} at {:?} moves at {speed} m/s after step {} (live contacts {})",
                    p.id,
                    p.pose.position.as_slice(),
                    self.steps,
                    self.history.len()
                );
                return Err(Error::BlowUp { step: self.steps, particle: p.id, speed, cap });
            }
        }
        Ok(())
    }

    fn check_settled(&mut self) {
        if !self.streams.iter().all(|s| s.done) {
            return;
        }
        let energy = kinetic_energy_per_particle(&self.world);
        if !self.monitor.observe(energy) {
            return;
        }
        self.events.push(Event::Settled { step: self.steps, t: self.time, energy });
        info!("settled at t = {} (kinetic energy per particle {energy:e} J)", self.time);
        if !self.actions.is_empty() && self.actions_done_at.is_none() {
            for a in self.actions.clone() {
                self.perform(&a);
            }
            self.actions_done_at = Some(self.time);
            self.monitor.reset();
        } else if self.settings.run.stop_when_settled {
            self.stop = Some(StopReason::Settled);
        }
    }

    fn perform(&mut self, action: &SettleAction) {
        let text = match action {
            SettleAction::RemoveWall(w) => {
                self.world.walls[*w].active = false;
                self.walls_dirty = true;
                format!("remove-wall {w}")
            }
            SettleAction::StartRotation(w, motion) => {
                let wall = &mut self.world.walls[*w];
                wall.motion = Some(motion.clone());
                wall.apply_rotation();
                self.walls_dirty = true;
                format!("start-rotation {w} omega={}", motion.omega)
            }
            SettleAction::TagLayers => {
                let mut order: Vec<usize> = (0..self.world.particles.len()).collect();
                let ps = &self.world.particles;
                order.sort_by(|&a, &b| ps[a].pose.position.z.total_cmp(&ps[b].pose.position.z).then(a.cmp(&b)));
                let half = order.len() / 2;
                for (rank, &i) in order.iter().enumerate() {
                    self.world.particles[i].tag = if rank < half { 1 } else { 2 };
                }
                "tag-layers".to_string()
            }
        };
        info!("t = {}: {text}", self.time);
        self.events.push(Event::Action { step: self.steps, t: self.time, action: text });
    }

    fn insert_streams(&mut self) -> Result<()> {
        for si in 0..self.streams.len() {
            let s = &self.streams[si];
            if s.done || !self.steps.is_multiple_of(s.region.trigger_interval) {
                continue;
            }
            let template = self.world.templates[s.template].clone();
            let mass = template.props.mass;
            let (lo, hi) = s.region.batch;
            let stream = &mut self.streams[si];
            let mut count = stream.rng.gen_range(lo..=hi);
            match stream.region.stop {
                StopCondition::Count(n) => count = count.min(n.saturating_sub(stream.inserted)),
                StopCondition::Mass(m) => {
                    let left = ((m - stream.inserted_mass) / mass).ceil().max(0.0) as usize;
                    count = count.min(left);
                }
                StopCondition::Exhaustion => {}
            }
            let existing = self.world.bounding_spheres();
            let material = self.world.template_materials[stream.template];
            let outcome = insert_batch(
                &stream.region,
                &template,
                stream.template,
                material,
                &existing,
                &self.world.walls,
                count,
                self.world.next_id(),
                &mut stream.rng,
            );
            let placed = outcome.particles.len();
            let mut particles = outcome.particles;
            for p in particles.iter_mut() {
                p.tag = stream.tag;
            }
            stream.inserted += placed;
            stream.inserted_mass += placed as f64 * mass;
            stream.done = match stream.region.stop {
                StopCondition::Count(n) => stream.inserted >= n,
                StopCondition::Mass(m) => stream.inserted_mass >= m,
                StopCondition::Exhaustion => placed == 0,
            };
            if outcome.region_full {
                debug!("stream {si}: region full after {placed} of {count}");
            }
            let inserted = stream.inserted;
            let done = stream.done;
            self.world.adopt(particles);
            self.events.push(Event::Inserted { step: self.steps, stream: si, count: placed, region_full: outcome.region_full });
            if done {
                self.events.push(Event::StreamDone { step: self.steps, stream: si, inserted });
                info!("stream {si} finished with {inserted} particles");
            }
        }
        Ok(())
    }

    fn skin(&self) -> f64 {
        let nb = &self.settings.neighbor;
        let r_min = self.spheres.iter().map(|s| s.radius).fold(f64::INFINITY, f64::min);
        let r_max = self.spheres.iter().map(|s| s.radius).fold(0.0, f64::max);
        if self.spheres.is_empty() {
            return 0.0;
        }
        let v_max = self
            .world
            .particles
            .iter()
            .map(|p| p.v.norm() + p.w.norm() * self.world.templates[p.template].ms.mbs_radius())
            .fold(0.0, f64::max);
        let lower = nb.min_skin * r_min;
        let upper = (((nb.cell_scale - 1.0) * 2.0 * r_max - nb.r_cut) * (1.0 - 1e-9)).max(0.0);
        (nb.rebuild_interval as f64 * v_max * self.settings.dt).max(lower).min(upper)
    }

    fn displaced(&self) -> bool {
        let centers: Vec<Vec3> = self.spheres.iter().map(|s| s.center).collect();
        needs_rebuild(&centers, &self.list.reference, self.list.skin)
    }

    fn refresh_neighbors(&mut self, initial: bool) -> Result<()> {
        self.spheres = self.world.global_spheres();
        self.since_rebuild += 1;
        let cause = if initial {
            Some(RebuildCause::Initial)
        } else if self.spheres.len() != self.list.reference.len() {
            Some(RebuildCause::Insertion)
        } else if self.displaced() {
            Some(RebuildCause::Displacement)
        } else if self.since_rebuild >= self.settings.neighbor.force_every {
            Some(RebuildCause::Interval)
        } else {
            None
        };
        let walls_move = self.world.walls.iter().any(|w| w.active && w.motion.as_ref().is_some_and(|m| m.omega != 0.0));
        if let Some(cause) = cause {
            let skin = self.skin();
            let nb = &self.settings.neighbor;
            let grid = build_cell_list(&self.spheres, nb.cell_scale)?;
            self.list = build_verlet(&grid, &self.spheres, skin, nb.r_cut)?;
            self.since_rebuild = 0;
            self.events.push(Event::Rebuild { step: self.steps, cause, pairs: self.list.pairs.len(), skin });
        }
        if cause.is_some() || walls_move || self.walls_dirty {
            self.list.walls = wall_candidates(&self.spheres, &self.world.walls, self.list.skin);
            self.walls_dirty = false;
        }
        Ok(())
    }

    fn compute_forces(&mut self) -> Result<()> {
        let dt = self.settings.dt;
        let world = &self.world;
        let spheres = &self.spheres;
        let mut loads = vec![Load::default(); world.particles.len()];
        let motions: Vec<RigidMotion> =
            world.particles.iter().map(|p| RigidMotion { v: p.v, w: p.w, com: p.pose.position }).collect();

        for &(ga, gb) in &self.list.pairs {
            let (a, b) = (&spheres[ga], &spheres[gb]);
            let geom = match sphere_sphere(&a.center, a.radius, &b.center, b.radius) {
                Ok(Some(g)) => g,
                Ok(None) => continue,
                Err(_) => return Err(Error::CoincidentCenters(ga, gb)),
            };
            let pair = pair_params(&mut self.pairs, world, a, Some(b), 0)?;
            let (mi, mj) = (&motions[a.particle], &motions[b.particle]);
            let (_, v_n, v_t) = relative_velocity(mi, mj, &geom.point, &geom.normal);
            let nf = normal_force(geom.d_n, &geom.normal, &v_n, &pair);
            let delta = self.history.touch(ContactKey::Pair(ga, gb));
            let f = nf.force + tangential_force(&geom.normal, &v_t, delta, &nf, &pair, dt);
            accumulate(&mut loads, a.particle, &mi.com, Some((b.particle, &mj.com)), &f, &geom.point);
            let roll = rolling_resistance(nf.force.norm(), &pair, &(mi.w - mj.w));
            loads[a.particle].torque += roll;
            loads[b.particle].torque -= roll;
        }

        let cands = &self.list.walls;
        let mut k = 0;
        while k < cands.len() {
            let c = cands[k];
            // candidates sorted by (gid, wall, feature): one group per sphere and wall
            let mut end = k + 1;
            while end < cands.len() && cands[end].gid == c.gid && cands[end].wall == c.wall {
                end += 1;
            }
            let s = &spheres[c.gid];
            let wall = &world.walls[c.wall];
            let mut contacts: Vec<(usize, ContactGeom)> = Vec::new();
            match &wall.kind {
                WallKind::Plane { point, normal } => {
                    contacts.extend(sphere_plane(&s.center, s.radius, point, normal).map(|g| (0, g)));
                }
                WallKind::Cylinder { radius, p1, p2, inside } => {
                    match sphere_cylinder(&s.center, s.radius, *radius, p1, p2, *inside) {
                        Ok(g) => contacts.extend(g.map(|g| (0, g))),
                        Err(_) => {
                            return Err(Error::DegenerateCylinder { wall: c.wall, radius: s.radius, wall_radius: *radius })
                        }
                    }
                }
                WallKind::Mesh(mesh) => {
                    let tris: Vec<usize> = cands[k..end].iter().map(|c| c.feature).collect();
                    contacts = sphere_mesh(&s.center, s.radius, mesh, &tris, self.list.reference.get(c.gid));
                }
            }
            k = end;
            if !wall.active || contacts.is_empty() {
                continue;
            }
            let pair = pair_params(&mut self.pairs, world, s, None, wall.material)?;
            let mi = &motions[s.particle];
            let mw = match &wall.motion {
                Some(m) => RigidMotion { v: Vec3::zeros(), w: m.angular_velocity(), com: m.axis_point },
                None => RigidMotion::at_rest(Vec3::zeros()),
            };
            for (feature, geom) in contacts {
                let (_, v_n, v_t) = relative_velocity(mi, &mw, &geom.point, &geom.normal);
                let nf = normal_force(geom.d_n, &geom.normal, &v_n, &pair);
                let delta = self.history.touch(ContactKey::Wall { gid: c.gid, wall: c.wall, feature });
                let f = nf.force + tangential_force(&geom.normal, &v_t, delta, &nf, &pair, dt);
                accumulate(&mut loads, s.particle, &mi.com, None, &f, &geom.point);
                loads[s.particle].torque += rolling_resistance(nf.force.norm(), &pair, &(mi.w - mw.w));
            }
        }
        self.history.purge();
        for (p, l) in self.world.particles.iter_mut().zip(loads) {
            p.f_acc = l.force;
            p.t_acc = l.torque;
        }
        Ok(())
    }
}

fn read(base: &Path, path: &str) -> Result<String> {
    Ok(fs::read_to_string(base.join(path))?)
}

/// Effective pair properties, cached per template, contact radius and counterpart.
fn pair_params(
    cache: &mut FxHashMap<PairKey, EffectivePair>,
    world: &World,
    a: &GlobalSphere,
    b: Option<&GlobalSphere>,
    wall_material: usize,
) -> Result<EffectivePair> {
    let pa = &world.particles[a.particle];
    let local_key = |template: usize, local: usize| match world.templates[template].curvature {
        CurvatureModel::Sphere => local,
        CurvatureModel::EquivalentVolume => 0,
    };
    let other = match b {
        Some(b) => {
            let pb = &world.particles[b.particle];
            Other::Sphere { template: pb.template, local: local_key(pb.template, b.local) }
        }
        None => Other::Wall { material: wall_material },
    };
    let key = PairKey { template: pa.template, local: local_key(pa.template, a.local), other };
    if let Some(p) = cache.get(&key) {
        return Ok(*p);
    }
    let ta = &world.templates[pa.template];
    let mat_a = &world.materials[pa.material];
    let counterpart = match b {
        Some(b) => {
            let pb = &world.particles[b.particle];
            let tb = &world.templates[pb.template];
            Counterpart::Particle { material: &world.materials[pb.material], radius: tb.contact_radius(b.local), mass: tb.props.mass }
        }
        None => Counterpart::Wall { material: &world.materials[wall_material] },
    };
    let pair = effective_pair(mat_a, ta.contact_radius(a.local), ta.props.mass, counterpart)?;
    cache.insert(key, pair);
    Ok(pair)
}

/// Rayleigh and Hertz bounds for the templates in `world` at impact speed `v_max`.
///
/// The Rayleigh time uses the smallest primary-sphere radius of any
/// template and the most restrictive material. The Hertz time takes the
/// smallest value over like-particle pairs and particle-wall pairs.
pub fn estimate_timestep(world: &World, v_max: f64) -> Result<TimeStepEstimate> {
    if world.templates.is_empty() {
        return Err(Error::validation("templates", "no templates to estimate a time step from"));
    }
    let r_min = world.templates.iter().map(|t| t.ms.min_radius()).fold(f64::INFINITY, f64::min);
    let mut t_rayleigh = f64::INFINITY;
    let mut t_hertz: Option<f64> = None;
    for (ti, t) in world.templates.iter().enumerate() {
        let mat = &world.materials[world.template_materials[ti]];
        t_rayleigh = t_rayleigh.min(rayleigh_time(mat, r_min));
        let radius = (0..t.ms.len()).map(|l| t.contact_radius(l)).fold(f64::INFINITY, f64::min);
        let mut pairs = vec![effective_pair(mat, radius, t.props.mass, Counterpart::Particle { material: mat, radius, mass: t.props.mass })?];
        for w in &world.walls {
            pairs.push(effective_pair(mat, radius, t.props.mass, Counterpart::Wall { material: &world.materials[w.material] })?);
        }
        for p in pairs {
            if let Some(th) = hertz_time(p.m_star, p.r_star, p.y_star, v_max) {
                t_hertz = Some(t_hertz.map_or(th, |x: f64| x.min(th)));
            }
        }
    }
    Ok(TimeStepEstimate {
        t_rayleigh,
        t_hertz,
        dt_critical: t_hertz.map_or(t_rayleigh, |t| t.min(t_rayleigh)),
    })
}
