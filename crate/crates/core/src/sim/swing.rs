//! Body swing about a pinned footpad.
//!
//! The pad is a ball joint on the surface. The leg is a massless link from
//! the pad to the hip; the hip is a torsional spring-damper between the leg
//! and the body. Generalized coordinates are the world angle `ψ` of the
//! pad→hip vector and the body pitch `θ`; the hip deflection is
//! `δ = ψ − θ − λ − π` with `λ` the body-frame leg angle. A rigid hip
//! collapses this to a single-degree-of-freedom pendulum about the pad.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PadSide, RobotGeometry};
use crate::math::{ceil_usize, cos, sin, wrap_angle, Vec2, FRAC_PI_2, GRAVITY, PI};

use super::{contact, Phase, Pin, SimState, SurfaceSpec};

/// Largest `ω·h` allowed for the stiffest hip mode inside one substep.
const STIFF_MODE_STEP: f64 = 0.1;
/// Substeps per call for the compliant model.
const MIN_SUBSTEPS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SwingModel {
    Rigid,
    Compliant { stiffness: f64, damping: f64 },
}

impl SwingModel {
    pub fn of(geom: &RobotGeometry) -> SwingModel {
        if geom.is_rigid_hip() {
            SwingModel::Rigid
        } else {
            SwingModel::Compliant {
                stiffness: geom.hip_stiffness,
                damping: geom.hip_damping(),
            }
        }
    }
}

/// Inelastic attachment of `side`'s pad at its current position.
///
/// With a rigid hip the body becomes a pendulum about the pad and keeps its
/// angular momentum about that point. With a compliant hip the massless leg
/// can only carry an impulse along its own axis, so only the hip velocity
/// component along the leg is removed.
pub fn begin_swing(state: &SimState, geom: &RobotGeometry, side: PadSide) -> SimState {
    let pose = state.pose();
    let pad = pose.to_world(geom.pad_body(side));
    let mut next = *state;
    next.phase = Phase::Swing;
    next.accelerating = false;
    next.hip_angle = 0.0;
    next.pin = Some(Pin { side, point: pad });

    let r = state.position - pad;
    match SwingModel::of(geom) {
        SwingModel::Rigid => {
            let i_pivot = geom.inertia_yy + geom.mass * r.dot(r);
            let l_pivot = geom.inertia_yy * state.pitch_rate + geom.mass * r.cross(state.velocity);
            let omega = l_pivot / i_pivot;
            next.pitch_rate = omega;
            next.velocity = r.perp() * omega;
            next.hip_rate = 0.0;
        }
        SwingModel::Compliant { .. } => {
            let hip = pose.to_world(geom.hip_body(side));
            let arm = hip - state.position;
            let axis = (hip - pad) * (1.0 / geom.leg_length);
            let v_hip = state.velocity + arm.perp() * state.pitch_rate;
            let lever = arm.cross(axis);
            let impulse =
                -v_hip.dot(axis) / (1.0 / geom.mass + lever * lever / geom.inertia_yy);
            next.velocity = state.velocity + axis * (impulse / geom.mass);
            next.pitch_rate = state.pitch_rate + impulse * lever / geom.inertia_yy;
            let v_hip_after = next.velocity + arm.perp() * next.pitch_rate;
            let psi_rate = v_hip_after.dot(axis.perp()) / geom.leg_length;
            next.hip_rate = psi_rate - next.pitch_rate;
        }
    }
    next
}

/// Mechanical energy with gravity potential at z = 0 plus hip spring energy, J.
pub fn pivot_energy(state: &SimState, geom: &RobotGeometry) -> f64 {
    let kinetic = 0.5 * geom.mass * state.velocity.dot(state.velocity)
        + 0.5 * geom.inertia_yy * state.pitch_rate * state.pitch_rate;
    let spring = if geom.is_rigid_hip() {
        0.0
    } else {
        0.5 * geom.hip_stiffness * state.hip_angle * state.hip_angle
    };
    kinetic + geom.mass * GRAVITY * state.position.z + spring
}

/// Advances the pinned swing by `dt` (semi-implicit Euler, substepped when
/// the hip mode is stiff) and applies the terminal checks: the free pad
/// attaching settles the landing, prop or body contact fails it, and the
/// swing reversing after it has passed below the pivot is a two-leg hang.
pub fn step_swing(
    state: &SimState,
    geom: &RobotGeometry,
    surface: &SurfaceSpec,
    dt: f64,
) -> Result<SimState> {
    let pin = state.pin.ok_or(Error::SwingWithoutContact)?;
    if state.phase != Phase::Swing {
        return Err(Error::WrongPhase(state.phase));
    }
    let mut next = match SwingModel::of(geom) {
        SwingModel::Rigid => integrate_rigid(state, geom, pin, dt),
        SwingModel::Compliant { stiffness, damping } => {
            integrate_compliant(state, geom, pin, stiffness, damping, dt)
        }
    };
    next.time = state.time + dt;
    if !next.is_finite() {
        return Err(Error::NumericalDivergence { time: next.time });
    }

    let free = pin.side.other();
    if contact::pad_captured(&next, geom, surface, free) {
        next.phase = Phase::Settled;
        return Ok(next);
    }
    let collided = contact::detect_contacts(&next, geom, surface)
        .iter()
        .any(|e| !e.kind.is_pad());
    if collided {
        next.phase = Phase::Failed;
        return Ok(next);
    }
    if hang_detected(state, &next, pin) {
        next.phase = Phase::Failed;
    }
    Ok(next)
}

/// Direction of body rotation that brings the free pad onto the surface.
fn swing_direction(side: PadSide) -> f64 {
    match side {
        PadSide::Front => 1.0,
        PadSide::Rear => -1.0,
    }
}

/// Angle of the center of mass about the pivot, measured in the swing
/// direction from straight below, and its rate.
fn swing_angle(state: &SimState, pin: Pin) -> (f64, f64) {
    let r = state.position - pin.point;
    let dir = swing_direction(pin.side);
    let angle = wrap_angle(r.angle() + FRAC_PI_2) * dir;
    let rate = r.cross(state.velocity) / r.dot(r) * dir;
    (angle, rate)
}

fn hang_detected(before: &SimState, after: &SimState, pin: Pin) -> bool {
    let (_, rate_before) = swing_angle(before, pin);
    let (angle, rate_after) = swing_angle(after, pin);
    angle > 0.0 && rate_before > 0.0 && rate_after <= 0.0
}

fn integrate_rigid(state: &SimState, geom: &RobotGeometry, pin: Pin, dt: f64) -> SimState {
    let pad = geom.pad_body(pin.side);
    let i_pivot = geom.inertia_yy + geom.mass * pad.dot(pad);
    let mut theta = state.pitch;
    let mut omega = state.pitch_rate;
    let r = state.position - pin.point;
    let torque = r.x * (-geom.mass * GRAVITY);
    omega += dt * torque / i_pivot;
    theta += dt * omega;
    let r = -pad.rotated(theta);
    let mut next = *state;
    next.pitch = theta;
    next.pitch_rate = omega;
    next.position = pin.point + r;
    next.velocity = r.perp() * omega;
    next.hip_angle = 0.0;
    next.hip_rate = 0.0;
    next
}

/// Upper bound on the hip-mode frequency over all configurations, rad/s.
fn stiff_mode_bound(geom: &RobotGeometry, stiffness: f64, damping: f64) -> f64 {
    let m = geom.mass;
    let l = geom.leg_length;
    let rho = geom.leg_mount_offset.norm();
    let i = geom.inertia_yy;
    let inv_inertia = (m * (rho + l) * (rho + l) + i) / (m * l * l * i);
    let omega = crate::math::sqrt(stiffness * inv_inertia);
    let zeta_eff = damping * inv_inertia / (2.0 * omega.max(1e-12));
    omega * (1.0f64).max(2.0 * zeta_eff)
}

fn integrate_compliant(
    state: &SimState,
    geom: &RobotGeometry,
    pin: Pin,
    stiffness: f64,
    damping: f64,
    dt: f64,
) -> SimState {
    let m = geom.mass;
    let inertia = geom.inertia_yy;
    let l = geom.leg_length;
    let mount = geom.hip_body(pin.side);
    let rho = mount.norm();
    let beta = mount.angle();
    let lambda = geom.leg_angle_body(pin.side);
    let g = GRAVITY;

    let mut theta = state.pitch;
    let mut theta_dot = state.pitch_rate;
    let mut psi = theta + lambda + PI + state.hip_angle;
    let mut psi_dot = theta_dot + state.hip_rate;

    let substeps = ceil_usize(dt * stiff_mode_bound(geom, stiffness, damping) / STIFF_MODE_STEP)
        .max(MIN_SUBSTEPS);
    let h = dt / substeps as f64;
    for _ in 0..substeps {
        let delta = psi - theta - beta;
        let (sd, cd) = (sin(delta), cos(delta));
        let m11 = m * l * l;
        let m12 = -m * l * rho * cd;
        let m22 = m * rho * rho + inertia;
        let deflection = psi - theta - lambda - PI;
        let hip_torque = stiffness * deflection + damping * (psi_dot - theta_dot);
        let r1 = -m * g * l * cos(psi) - hip_torque + m * l * rho * sd * theta_dot * theta_dot;
        let r2 = m * g * rho * cos(theta + beta) + hip_torque - m * l * rho * sd * psi_dot * psi_dot;
        let det = m11 * m22 - m12 * m12;
        let psi_ddot = (r1 * m22 - m12 * r2) / det;
        let theta_ddot = (m11 * r2 - m12 * r1) / det;
        psi_dot += h * psi_ddot;
        theta_dot += h * theta_ddot;
        psi += h * psi_dot;
        theta += h * theta_dot;
    }

    let mut next = *state;
    next.pitch = theta;
    next.pitch_rate = theta_dot;
    next.hip_angle = psi - theta - lambda - PI;
    next.hip_rate = psi_dot - theta_dot;
    next.position = pin.point + Vec2::from_angle(psi) * l - Vec2::from_angle(theta + beta) * rho;
    next.velocity = Vec2::from_angle(psi).perp() * (l * psi_dot)
        - Vec2::from_angle(theta + beta).perp() * (rho * theta_dot);
    next
}
