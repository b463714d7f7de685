//! Time stepping: velocity Verlet for translation, body-frame Euler
//! equations for rotation, time-step estimation and wall rotation.
//!
//! A step is split as kick (half), drift, force evaluation, kick (half).
//! For translation this is algebraically the position/velocity Verlet pair
//! `x += v dt + a dt²/2`, `v += (a + a') dt/2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::world::{Material, Particle, Wall};
use crate::{Rotation, Vec3};

/// How the step size is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeStep {
    /// Explicit step, s.
    Fixed(f64),
    /// `Δt_c / n` with `n` in [10, 100].
    Divisor(u32),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPolicy {
    pub dt: TimeStep,
    pub gravity: Vec3,
    pub deterministic: bool,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self {
            dt: TimeStep::Divisor(20),
            gravity: Vec3::new(0.0, 0.0, -9.81),
            deterministic: true,
        }
    }
}

/// Mass and principal inertia of a rigid body (principal frame = body frame).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Inertia {
    pub mass: f64,
    pub principal: Vec3,
}

/// Half-step velocity update from the current force, torque and gravity.
pub fn kick(p: &mut Particle, inertia: &Inertia, force: &Vec3, torque: &Vec3, gravity: &Vec3, h: f64) {
    p.v += (force / inertia.mass + gravity) * h;
    // angular momentum kick, expressed in the body frame
    let q = p.pose.orientation;
    let l_body = inertia.principal.component_mul(&(q.inverse() * p.w)) + q.inverse() * torque * h;
    p.w = q * l_body.component_div(&inertia.principal);
}

/// Torque-free rotation over `dt`: implicit midpoint rule on the body-frame
/// Euler equations `dL/dt = L × ω` (which conserves |L| and the rotational
/// energy exactly), then `q ← q ⊗ exp(½ ω_mid dt)`. Returns the new body-frame
/// angular momentum.
fn free_rotation(q: &Rotation, w_world: &Vec3, principal: &Vec3, dt: f64) -> (Rotation, Vec3) {
    let l0 = principal.component_mul(&(q.inverse() * w_world));
    let mut l1 = l0;
    for _ in 0..50 {
        let lm = 0.5 * (l0 + l1);
        let next = l0 + lm.cross(&lm.component_div(principal)) * dt;
        let done = (next - l1).norm() <= 1e-15 * l0.norm();
        l1 = next;
        if done {
            break;
        }
    }
    let w_mid = (0.5 * (l0 + l1)).component_div(principal);
    let dq = Rotation::from_scaled_axis(w_mid * dt);
    let q1 = Rotation::new_normalize((q * dq).into_inner());
    (q1, l1)
}

/// Position and orientation update over `dt` with the current (half-step) velocities.
pub fn drift(p: &mut Particle, inertia: &Inertia, dt: f64) {
    p.pose.position += p.v * dt;
    if p.w == Vec3::zeros() {
        return;
    }
    let (q1, l1) = free_rotation(&p.pose.orientation, &p.w, &inertia.principal, dt);
    p.pose.orientation = q1;
    p.w = q1 * l1.component_div(&inertia.principal);
}

/// One full step of an isolated body under a constant force and torque.
pub fn step_free(p: &mut Particle, inertia: &Inertia, force: &Vec3, torque: &Vec3, gravity: &Vec3, dt: f64) {
    kick(p, inertia, force, torque, gravity, 0.5 * dt);
    drift(p, inertia, dt);
    kick(p, inertia, force, torque, gravity, 0.5 * dt);
}

/// Rayleigh and Hertz time-step bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeStepEstimate {
    pub t_rayleigh: f64,
    /// `None` when the maximum speed is zero.
    pub t_hertz: Option<f64>,
    pub dt_critical: f64,
}

/// `π R / K · sqrt(ρ / G)` with `K = 0.8766 + 0.1631 ν`.
pub fn rayleigh_time(material: &Material, radius: f64) -> f64 {
    let k = 0.8766 + 0.1631 * material.poisson;
    PI * radius / k * (material.density / material.shear_modulus()).sqrt()
}

/// `2.8683 (m*² / (R* Y*² V))^0.2`.
pub fn hertz_time(m_star: f64, r_star: f64, y_star: f64, speed: f64) -> Option<f64> {
    (speed > 0.0).then(|| 2.8683 * (m_star * m_star / (r_star * y_star * y_star * speed)).powf(0.2))
}

/// Critical step from the smallest primary-sphere radius and the fastest
/// particle. `hertz` carries `(m*, R*, Y*)` of the stiffest expected pair.
pub fn critical_timestep(material: &Material, r_min: f64, hertz: (f64, f64, f64), v_max: f64) -> TimeStepEstimate {
    let t_rayleigh = rayleigh_time(material, r_min);
    let t_hertz = hertz_time(hertz.0, hertz.1, hertz.2, v_max);
    TimeStepEstimate {
        t_rayleigh,
        t_hertz,
        dt_critical: t_hertz.map_or(t_rayleigh, |t| t.min(t_rayleigh)),
    }
}

/// Rotates every moving wall by `ω dt` about its axis.
pub fn advance_walls(walls: &mut [Wall], dt: f64) {
    for w in walls.iter_mut() {
        let Some(m) = w.motion.as_mut() else { continue };
        if m.omega == 0.0 {
            continue;
        }
        m.angle = (m.angle + m.omega * dt).rem_euclid(2.0 * PI);
        w.apply_rotation();
    }
}

/// Translational plus rotational kinetic energy.
pub fn kinetic_energy(p: &Particle, inertia: &Inertia) -> f64 {
    let wb = p.pose.orientation.inverse() * p.w;
    0.5 * inertia.mass * p.v.norm_squared() + 0.5 * wb.dot(&inertia.principal.component_mul(&wb))
}
