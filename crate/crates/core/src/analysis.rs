//! Bed measurements: free-surface profiles, fill height, porosity, angle of
//! repose, settlement detection and a contact-based mixing count.

use log::warn;

use crate::config::{AnalysisConfig, Container};
use crate::integrate::{kinetic_energy, Inertia};
use crate::neighbor::{build_cell_list, build_verlet, GlobalSphere};
use crate::world::World;
use crate::{Error, Result};

/// Side view of a bed: stations along one horizontal axis and the highest
/// sphere top seen above each station.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceProfile {
    /// 0 for x, 1 for y.
    pub axis: usize,
    pub stations: Vec<f64>,
    /// Heights above the floor, m.
    pub heights: Vec<f64>,
}

impl SurfaceProfile {
    pub fn mean(&self) -> f64 {
        self.heights.iter().sum::<f64>() / self.heights.len() as f64
    }
}

/// Lateral window `[lo, hi]` along `axis` sampled at `n + 1` stations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct View {
    pub axis: usize,
    pub lo: f64,
    pub hi: f64,
}

/// Free surface seen along `view`: `n + 1` equally spaced stations, each
/// owning a bin of one spacing; a bin's height is the highest `z + r - floor`
/// of the spheres whose lateral extent overlaps it.
///
/// Empty interior bins are interpolated linearly; empty bins before the
/// first or after the last occupied one read as the bare floor.
pub fn free_surface(spheres: &[GlobalSphere], view: View, floor: f64, n: usize) -> Result<SurfaceProfile> {
    if n < 1 || !(view.hi > view.lo) || view.axis > 1 {
        return Err(Error::Analysis("profile needs n >= 1, hi > lo and a horizontal axis".into()));
    }
    let w = (view.hi - view.lo) / n as f64;
    let stations: Vec<f64> = (0..=n).map(|k| view.lo + k as f64 * w).collect();
    let mut top = vec![f64::NAN; n + 1];
    for s in spheres {
        let c = s.center[view.axis];
        let h = s.center.z + s.radius - floor;
        // bins k cover [x_k - w/2, x_k + w/2]
        let k0 = ((c - s.radius - view.lo) / w - 0.5).ceil().max(0.0) as usize;
        let k1 = ((c + s.radius - view.lo) / w + 0.5).floor();
        if k1 < 0.0 {
            continue;
        }
        let k1 = (k1 as usize).min(n);
        for t in top.iter_mut().take(k1 + 1).skip(k0) {
            if !(*t >= h) {
                *t = h;
            }
        }
    }
    let occupied: Vec<usize> = (0..=n).filter(|&k| !top[k].is_nan()).collect();
    let (Some(&first), Some(&last)) = (occupied.first(), occupied.last()) else {
        return Err(Error::Analysis("no particles inside the view".into()));
    };
    for pair in occupied.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for k in a + 1..b {
            let f = (k - a) as f64 / (b - a) as f64;
            top[k] = top[a] + f * (top[b] - top[a]);
        }
    }
    for (k, t) in top.iter_mut().enumerate() {
        if k < first || k > last {
            *t = 0.0;
        }
    }
    Ok(SurfaceProfile { axis: view.axis, stations, heights: top })
}

/// Mean and standard deviation of station heights pooled over `views`.
pub fn fill_height(spheres: &[GlobalSphere], views: &[View], floor: f64, n: usize) -> Result<(f64, f64)> {
    let mut all = Vec::new();
    for v in views {
        all.extend(free_surface(spheres, *v, floor, n)?.heights);
    }
    if all.is_empty() {
        return Err(Error::Analysis("no views given".into()));
    }
    let m = all.len() as f64;
    let mean = all.iter().sum::<f64>() / m;
    let var = all.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / m;
    Ok((mean, var.sqrt()))
}

/// `1 - ΣV / (A h)`. Values outside [0, 1] are returned as computed, with a warning.
pub fn porosity(solid_volume: f64, height: f64, base_area: f64) -> Result<f64> {
    if !(height > 0.0 && base_area > 0.0) {
        return Err(Error::Analysis(format!("porosity needs h > 0 and A > 0 (h = {height}, A = {base_area})")));
    }
    let phi = 1.0 - solid_volume / (base_area * height);
    if !(0.0..=1.0).contains(&phi) {
        warn!("porosity {phi} outside [0, 1]");
    }
    Ok(phi)
}

/// Slope angle (degrees, non-negative) of a least-squares line through the
/// stations whose height lies between 10% and 90% of the profile maximum.
/// Fewer than two such stations give 0.
pub fn slope_angle(profile: &SurfaceProfile) -> f64 {
    let max = profile.heights.iter().cloned().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = profile
        .stations
        .iter()
        .zip(&profile.heights)
        .filter(|(_, &h)| h >= 0.1 * max && h <= 0.9 * max)
        .map(|(&x, &h)| (x, h))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    (sxy / sxx).atan().abs().to_degrees()
}

/// Angle of repose of a heap flowing along `view.axis`, averaged over the
/// rear and front halves of the bed (split at `split` on the other horizontal axis).
pub fn angle_of_repose(spheres: &[GlobalSphere], view: View, split: f64, floor: f64, n: usize) -> Result<f64> {
    let depth = 1 - view.axis;
    let (rear, front): (Vec<GlobalSphere>, Vec<GlobalSphere>) =
        spheres.iter().partition(|s| s.center[depth] >= split);
    let mut angles = Vec::new();
    for half in [rear, front] {
        if half.is_empty() {
            continue;
        }
        angles.push(slope_angle(&free_surface(&half, view, floor, n)?));
    }
    if angles.is_empty() {
        return Err(Error::Analysis("no particles for the angle of repose".into()));
    }
    Ok(angles.iter().sum::<f64>() / angles.len() as f64)
}

/// Bed quantity reported by `analyze`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    FillHeight,
    Porosity,
    AngleOfRepose,
}

/// Value and spread of a [`Measure`]; `sd` is 0 where no spread is defined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measurement {
    pub value: f64,
    pub sd: f64,
}

/// Evaluates `which` on the particles of `world` inside `container`.
///
/// Fill height pools two perpendicular views spanning the container.
/// Porosity propagates the height spread as `(1 - phi) sd_h / h`. The
/// angle of repose looks along `flow_axis` and splits the bed at the
/// container midpoint of the other axis.
pub fn measure(world: &World, cfg: &AnalysisConfig, which: Measure) -> Result<Measurement> {
    let ((x0, x1), (y0, y1), area) = match cfg.container {
        Container::Cylinder { center, radius } => (
            (center[0] - radius, center[0] + radius),
            (center[1] - radius, center[1] + radius),
            std::f64::consts::PI * radius * radius,
        ),
        Container::Box { min, max } => ((min[0], max[0]), (min[1], max[1]), (max[0] - min[0]) * (max[1] - min[1])),
    };
    let spheres = world.global_spheres();
    let views = [View { axis: 0, lo: x0, hi: x1 }, View { axis: 1, lo: y0, hi: y1 }];
    match which {
        Measure::FillHeight => {
            let (h, sd) = fill_height(&spheres, &views, cfg.floor, cfg.stations)?;
            Ok(Measurement { value: h, sd })
        }
        Measure::Porosity => {
            let (h, sd) = fill_height(&spheres, &views, cfg.floor, cfg.stations)?;
            let phi = porosity(world.solid_volume(), h, area)?;
            Ok(Measurement { value: phi, sd: (1.0 - phi) * sd / h })
        }
        Measure::AngleOfRepose => {
            if cfg.flow_axis > 1 {
                return Err(Error::Analysis(format!("flow_axis must be 0 or 1, got {}", cfg.flow_axis)));
            }
            let view = views[cfg.flow_axis];
            let other = views[1 - cfg.flow_axis];
            let split = 0.5 * (other.lo + other.hi);
            let aor = angle_of_repose(&spheres, view, split, cfg.floor, cfg.stations)?;
            Ok(Measurement { value: aor, sd: 0.0 })
        }
    }
}

/// Mean kinetic energy per particle, J.
pub fn kinetic_energy_per_particle(world: &World) -> f64 {
    if world.particles.is_empty() {
        return 0.0;
    }
    let total: f64 = world
        .particles
        .iter()
        .map(|p| {
            let t = world.template_of(p);
            kinetic_energy(p, &Inertia { mass: t.props.mass, principal: t.props.inertia_principal })
        })
        .sum();
    total / world.particles.len() as f64
}

/// Reports a settled bed once the kinetic energy per particle has stayed
/// below `threshold` for `required` consecutive checks.
#[derive(Clone, Debug, PartialEq)]
pub struct SettleMonitor {
    pub threshold: f64,
    pub required: usize,
    streak: usize,
}

impl Default for SettleMonitor {
    fn default() -> Self {
        Self::new(1e-8)
    }
}

impl SettleMonitor {
    pub fn new(threshold: f64) -> Self {
        Self { threshold, required: 3, streak: 0 }
    }

    pub fn observe(&mut self, energy_per_particle: f64) -> bool {
        if energy_per_particle < self.threshold {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.is_settled()
    }

    pub fn is_settled(&self) -> bool {
        self.streak >= self.required
    }

    pub fn reset(&mut self) {
        self.streak = 0;
    }
}

/// One-shot check of a state: true when the kinetic energy per particle is below `threshold`.
pub fn is_settled(world: &World, threshold: f64) -> bool {
    kinetic_energy_per_particle(world) < threshold
}

/// Number of touching particle pairs whose tags differ.
pub fn interface_contacts(world: &World) -> Result<usize> {
    let spheres = world.global_spheres();
    if spheres.is_empty() {
        return Ok(0);
    }
    let list = build_verlet(&build_cell_list(&spheres, 2.0)?, &spheres, 0.0, 0.0)?;
    let mut pairs: Vec<(usize, usize)> = list
        .pairs
        .iter()
        .map(|&(a, b)| (spheres[a].particle, spheres[b].particle))
        .filter(|&(a, b)| world.particles[a].tag != world.particles[b].tag)
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    Ok(pairs.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;
    use proptest::prelude::*;

    fn ball(gid: usize, x: f64, y: f64, z: f64, r: f64) -> GlobalSphere {
        GlobalSphere { gid, particle: gid, local: 0, center: Vec3::new(x, y, z), radius: r }
    }

    fn monolayer(r: f64, count: usize) -> Vec<GlobalSphere> {
        (0..count).map(|i| ball(i, r + 2.0 * r * i as f64, 0.0, r, r)).collect()
    }

    #[test]
    fn monolayer_profile_is_two_radii() {
        let r = 0.01;
        let s = monolayer(r, 10);
        let view = View { axis: 0, lo: 0.0, hi: 0.2 };
        let p = free_surface(&s, view, 0.0, 100).unwrap();
        assert_eq!(p.stations.len(), 101);
        assert!(p.heights.iter().all(|h| (h - 2.0 * r).abs() < 1e-15));
        let (mean, sd) = fill_height(&s, &[view], 0.0, 100).unwrap();
        assert!((mean - 0.02).abs() < 1e-15 && sd < 1e-15);
    }

    #[test]
    fn cubic_lattice_measures() {
        use crate::shape::{ShapeDescriptor, ShapeKind, ShapeTemplate};
        use crate::world::Pose;
        let r = 0.003;
        let mut world = World::new();
        world.add_material(crate::presets::impact_wall(1e9).materials[0].clone()).unwrap();
        let d = ShapeDescriptor { kind: ShapeKind::Sphere { radius: r }, spheres: 1 };
        let t = world.add_template(ShapeTemplate::new("bead", d, 1000.0).unwrap(), 0);
        for k in 0..4 * 4 * 3 {
            let c = Vec3::new((k % 4) as f64, ((k / 4) % 4) as f64, (k / 16) as f64) * (2.0 * r) + Vec3::repeat(r);
            world.spawn(t, Pose::new(c, crate::Rotation::identity()));
        }
        let cfg = AnalysisConfig {
            container: Container::Box { min: [0.0, 0.0], max: [8.0 * r, 8.0 * r] },
            floor: 0.0,
            stations: 64,
            flow_axis: 0,
        };
        let h = measure(&world, &cfg, Measure::FillHeight).unwrap();
        assert!((h.value - 6.0 * r).abs() < 1e-12 && h.sd < 1e-12);
        let phi = measure(&world, &cfg, Measure::Porosity).unwrap();
        assert!((phi.value - (1.0 - std::f64::consts::PI / 6.0)).abs() < 1e-9, "{}", phi.value);
        assert!(measure(&world, &cfg, Measure::AngleOfRepose).unwrap().value < 1e-9);
    }

    #[test]
    fn empty_view_is_an_error() {
        let view = View { axis: 0, lo: 0.0, hi: 1.0 };
        assert!(free_surface(&[], view, 0.0, 100).is_err());
        assert!(free_surface(&[ball(0, 5.0, 0.0, 0.0, 0.1)], view, 0.0, 100).is_err());
    }

    #[test]
    fn synthetic_bed_is_recovered() {
        let r = 0.002;
        let mut s = Vec::new();
        let h = |x: f64| 0.05 + 0.01 * (x * 30.0).sin();
        let mut x = 0.0;
        while x <= 0.2 {
            // column of touching spheres up to the target surface
            let mut z = r;
            while z + r <= h(x) + 1e-12 {
                s.push(ball(s.len(), x, 0.0, z, r));
                z += 2.0 * r;
            }
            x += r;
        }
        let p = free_surface(&s, View { axis: 0, lo: 0.0, hi: 0.2 }, 0.0, 200).unwrap();
        for (x, got) in p.stations.iter().zip(&p.heights) {
            assert!((got - h(*x)).abs() <= 2.0 * r + 1e-12, "x = {x}: {got} vs {}", h(*x));
        }
    }

    #[test]
    fn perpendicular_views_of_axisymmetric_bed_agree() {
        let r = 0.003;
        let mut s = Vec::new();
        for i in -15..=15 {
            for j in -15..=15 {
                let (x, y) = (i as f64 * 2.0 * r, j as f64 * 2.0 * r);
                let rho = x.hypot(y);
                if rho > 0.09 {
                    continue;
                }
                // conical mound
                let top = 0.06 - 0.3 * rho;
                let mut z = r;
                while z + r <= top {
                    s.push(ball(s.len(), x, y, z, r));
                    z += 2.0 * r;
                }
            }
        }
        let hx = free_surface(&s, View { axis: 0, lo: -0.09, hi: 0.09 }, 0.0, 120).unwrap().mean();
        let hy = free_surface(&s, View { axis: 1, lo: -0.09, hi: 0.09 }, 0.0, 120).unwrap().mean();
        assert!((hx - hy).abs() < 0.02 * hx, "{hx} vs {hy}");
    }

    #[test]
    fn porosity_examples() {
        let phi = porosity(4.0 / 3.0 * std::f64::consts::PI, 2.0, 4.0).unwrap();
        assert!((phi - (1.0 - 4.0 * std::f64::consts::PI / 3.0 / 8.0)).abs() < 1e-15);
        assert!((phi - 0.4764).abs() < 1e-4);
        assert_eq!(porosity(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert!(porosity(1.0, 0.0, 1.0).is_err());
        assert!(porosity(1.0, 1.0, -1.0).is_err());
    }

    fn line_profile(angle_deg: f64) -> SurfaceProfile {
        let stations: Vec<f64> = (0..=100).map(|k| k as f64 * 0.001).collect();
        let t = angle_deg.to_radians().tan();
        let heights = stations.iter().map(|x| t * x).collect();
        SurfaceProfile { axis: 0, stations, heights }
    }

    #[test]
    fn slope_of_constructed_line() {
        assert!((slope_angle(&line_profile(20.0)) - 20.0).abs() < 1e-9);
        let flat = SurfaceProfile { axis: 0, stations: vec![0.0, 1.0, 2.0], heights: vec![1.0; 3] };
        assert_eq!(slope_angle(&flat), 0.0);
    }

    #[test]
    fn flat_bed_has_zero_repose_angle() {
        let s: Vec<GlobalSphere> = (0..40).flat_map(|i| [ball(2 * i, 0.005 * i as f64, 0.0, 0.0025, 0.0025), ball(2 * i + 1, 0.005 * i as f64, 0.01, 0.0025, 0.0025)]).collect();
        let a = angle_of_repose(&s, View { axis: 0, lo: 0.0, hi: 0.195 }, 0.005, 0.0, 100).unwrap();
        assert_eq!(a, 0.0);
    }

    #[test]
    fn settle_monitor_needs_three_quiet_checks() {
        let mut m = SettleMonitor::default();
        assert!(!m.observe(0.0));
        assert!(!m.observe(0.0));
        assert!(m.observe(0.0));
        assert!(!m.observe(5e-4));
        assert!(!m.observe(0.0));
    }

    proptest! {
        #[test]
        fn porosity_translation_invariant(shift in prop::array::uniform3(-1.0f64..1.0)) {
            let r = 0.01;
            let mut s = monolayer(r, 8);
            let view = View { axis: 0, lo: 0.0, hi: 0.16 };
            let (h0, _) = fill_height(&s, &[view], 0.0, 100).unwrap();
            let sh = Vec3::from(shift);
            for b in s.iter_mut() {
                b.center += sh;
            }
            let moved = View { axis: 0, lo: sh.x, hi: 0.16 + sh.x };
            let (h1, _) = fill_height(&s, &[moved], sh.z, 100).unwrap();
            let v = 8.0 * 4.0 / 3.0 * std::f64::consts::PI * r.powi(3);
            let a = 0.16 * 0.02;
            prop_assert!((porosity(v, h0, a).unwrap() - porosity(v, h1, a).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn mirrored_heap_has_same_angle(angle in 5.0f64..40.0) {
            let p = line_profile(angle);
            let mirrored = SurfaceProfile {
                axis: 0,
                stations: p.stations.iter().map(|x| -x).collect(),
                heights: p.heights.clone(),
            };
            prop_assert!((slope_angle(&p) - slope_angle(&mirrored)).abs() < 1e-9);
        }
    }
}
