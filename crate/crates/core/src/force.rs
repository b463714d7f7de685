//! Hertz-Mindlin contact forces with tangential history and Coulomb capping.

use std::f64::consts::PI;

use rustc_hash::FxHashMap;

use crate::world::Material;
use crate::{Error, Result, Vec3};

/// Effective properties of a contacting pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectivePair {
    pub y_star: f64,
    pub r_star: f64,
    pub m_star: f64,
    /// `ln e / sqrt(ln² e + π²)`, never positive.
    pub beta: f64,
    pub mu_fric: f64,
    pub mu_roll: f64,
}

/// The body on the other side of a contact.
#[derive(Clone, Copy, Debug)]
pub enum Counterpart<'a> {
    Particle { material: &'a Material, radius: f64, mass: f64 },
    /// Infinite radius and mass.
    Wall { material: &'a Material },
}

/// Damping exponent from the coefficient of restitution.
pub fn beta_from_restitution(e: f64) -> Result<f64> {
    if !(e > 0.0 && e <= 1.0) {
        return Err(Error::InvalidMaterial(format!("restitution {e} outside (0, 1]")));
    }
    let l = e.ln();
    Ok(l / (l * l + PI * PI).sqrt())
}

fn compliance(m: &Material) -> f64 {
    (1.0 - m.poisson * m.poisson) / m.young
}

/// Effective modulus, radius, mass and coefficients for sphere `i` of a
/// particle with `material`, contact radius `radius` and `mass`.
///
/// Particle pairs average restitution, sliding (`friction_pp`) and rolling
/// coefficients; wall contacts use the particle's `friction_pw` and the
/// average restitution and rolling coefficients of particle and wall.
pub fn effective_pair(material: &Material, radius: f64, mass: f64, other: Counterpart) -> Result<EffectivePair> {
    let (inv_y, inv_r, inv_m, e, mu_fric, mu_roll) = match other {
        Counterpart::Particle { material: mj, radius: rj, mass: m_j } => (
            compliance(material) + compliance(mj),
            1.0 / radius + 1.0 / rj,
            1.0 / mass + 1.0 / m_j,
            0.5 * (material.restitution + mj.restitution),
            0.5 * (material.friction_pp + mj.friction_pp),
            0.5 * (material.rolling + mj.rolling),
        ),
        Counterpart::Wall { material: mw } => (
            compliance(material) + compliance(mw),
            1.0 / radius,
            1.0 / mass,
            0.5 * (material.restitution + mw.restitution),
            material.friction_pw,
            0.5 * (material.rolling + mw.rolling),
        ),
    };
    Ok(EffectivePair {
        y_star: 1.0 / inv_y,
        r_star: 1.0 / inv_r,
        m_star: 1.0 / inv_m,
        beta: beta_from_restitution(e)?,
        mu_fric,
        mu_roll,
    })
}

/// Normal force and the coefficients it was computed with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalForce {
    pub force: Vec3,
    pub k_n: f64,
    pub gamma_n: f64,
}

/// Normal stiffness at overlap `|d_n|`.
pub fn normal_stiffness(d_n: f64, pair: &EffectivePair) -> f64 {
    4.0 / 3.0 * pair.y_star * (pair.r_star * d_n.abs()).sqrt()
}

/// Normal damping coefficient for stiffness `k_n`.
pub fn normal_damping(k_n: f64, pair: &EffectivePair) -> f64 {
    5f64.sqrt() * pair.beta.abs() * (pair.m_star * k_n).sqrt()
}

/// `F_n = k_n |d_n| n - γ_n V_n`. The damped force may turn attractive
/// near the end of a contact; it is not clipped.
pub fn normal_force(d_n: f64, normal: &Vec3, v_n: &Vec3, pair: &EffectivePair) -> NormalForce {
    let k_n = normal_stiffness(d_n, pair);
    let gamma_n = normal_damping(k_n, pair);
    NormalForce {
        force: normal * (k_n * d_n.abs()) - v_n * gamma_n,
        k_n,
        gamma_n,
    }
}

/// Rotates `delta` into the plane normal to `n`, keeping its length.
pub fn rotate_history(delta: &Vec3, n: &Vec3) -> Vec3 {
    let projected = delta - n * delta.dot(n);
    let p = projected.norm();
    if p == 0.0 {
        return Vec3::zeros();
    }
    projected * (delta.norm() / p)
}

/// Tangential force; updates `delta` (the accumulated tangential
/// displacement) in place.
///
/// While sliding, `delta` is shortened to the length that reproduces the
/// capped force, so stick resumes without a jump.
pub fn tangential_force(
    normal: &Vec3,
    v_t: &Vec3,
    delta: &mut Vec3,
    normal_force: &NormalForce,
    pair: &EffectivePair,
    dt: f64,
) -> Vec3 {
    *delta = rotate_history(delta, normal) - v_t * dt;
    let k_t = 2.0 / 7.0 * normal_force.k_n;
    let gamma_t = 0.5 * normal_force.gamma_n;
    let trial = *delta * k_t - v_t * gamma_t;
    let cap = pair.mu_fric * normal_force.force.norm();
    if trial.norm() < cap {
        return trial;
    }
    let vt = v_t.norm();
    let dn = delta.norm();
    let dir = if vt > 0.0 {
        -v_t / vt
    } else if dn > 0.0 {
        *delta / dn
    } else {
        Vec3::zeros()
    };
    if dn > 0.0 && k_t > 0.0 {
        *delta *= cap / k_t / dn;
    }
    dir * cap
}

/// Translational and angular velocity of a rigid body with center of mass `com`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidMotion {
    pub v: Vec3,
    pub w: Vec3,
    pub com: Vec3,
}

impl RigidMotion {
    pub fn at_rest(com: Vec3) -> Self {
        Self { v: Vec3::zeros(), w: Vec3::zeros(), com }
    }

    pub fn velocity_at(&self, p: &Vec3) -> Vec3 {
        self.v + self.w.cross(&(p - self.com))
    }
}

/// Relative velocity of `i` with respect to `j` at `p_c`, split along `n`.
pub fn relative_velocity(i: &RigidMotion, j: &RigidMotion, p_c: &Vec3, n: &Vec3) -> (Vec3, Vec3, Vec3) {
    let v_rel = i.velocity_at(p_c) - j.velocity_at(p_c);
    let v_n = n * v_rel.dot(n);
    (v_rel, v_n, v_rel - v_n)
}

/// Force and torque accumulated on one particle.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Load {
    pub force: Vec3,
    pub torque: Vec3,
}

/// Applies `f` at `p_c` to `loads[i]` and the reaction to `loads[j]`
/// (walls take no load).
pub fn accumulate(loads: &mut [Load], i: usize, com_i: &Vec3, j: Option<(usize, &Vec3)>, f: &Vec3, p_c: &Vec3) {
    loads[i].force += f;
    loads[i].torque += (p_c - com_i).cross(f);
    if let Some((j, com_j)) = j {
        let r = -f;
        loads[j].force += r;
        loads[j].torque += (p_c - com_j).cross(&r);
    }
}

/// Rolling resistance torque on `i`: `-μ_roll |F_n| R* ŵ_rel`.
pub fn rolling_resistance(fn_mag: f64, pair: &EffectivePair, w_rel: &Vec3) -> Vec3 {
    let w = w_rel.norm();
    if w == 0.0 || pair.mu_roll == 0.0 {
        return Vec3::zeros();
    }
    -w_rel * (pair.mu_roll * fn_mag * pair.r_star / w)
}

/// Identity of a contact, stable across steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ContactKey {
    Pair(usize, usize),
    Wall { gid: usize, wall: usize, feature: usize },
}

/// Accumulated tangential displacement of each live contact.
#[derive(Clone, Debug, Default)]
pub struct ContactHistory {
    entries: FxHashMap<ContactKey, (Vec3, bool)>,
}

impl ContactHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Displacement of `key`, created at zero on first contact; marks it touched.
    pub fn touch(&mut self, key: ContactKey) -> &mut Vec3 {
        let e = self.entries.entry(key).or_insert((Vec3::zeros(), false));
        e.1 = true;
        &mut e.0
    }

    pub fn get(&self, key: &ContactKey) -> Option<&Vec3> {
        self.entries.get(key).map(|e| &e.0)
    }

    /// Drops contacts not touched since the last purge.
    pub fn purge(&mut self) {
        self.entries.retain(|_, e| std::mem::take(&mut e.1));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
