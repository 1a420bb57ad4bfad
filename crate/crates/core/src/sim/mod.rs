//! Fixed-step planar simulation of the landing sequence.
//!
//! World frame: +X horizontal, +Z up, gravity along −Z. The landing plane is
//! described by `theta_plane` (0 = ceiling, π/2 = wall ahead, π = ground).
//! Rotating the world counter-clockwise by `theta_plane` maps every surface
//! onto a ceiling; the normal and tangent below are that frame pulled back.

mod contact;
mod maneuver;
mod swing;
mod trace;

pub use contact::{detect_contacts, pad_captured, state_points, ContactEvent, ContactKind};
pub use maneuver::step_maneuver;
pub use swing::{begin_swing, pivot_energy, step_swing, SwingModel};
pub use trace::{record_distances, DistanceSample, DistanceTrace};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{PadSide, Pose};
use crate::math::{cos, exp, sin, Vec2, GRAVITY, PI};

/// Default contact tolerance, m.
pub const DEFAULT_CONTACT_EPSILON: f64 = 0.002;
/// Default magnet capture range, m.
pub const DEFAULT_ATTACH_RANGE: f64 = 0.010;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Approach,
    Rotation,
    Swing,
    Settled,
    Failed,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Approach => "approach",
            Phase::Rotation => "rotation",
            Phase::Swing => "swing",
            Phase::Settled => "settled",
            Phase::Failed => "failed",
        }
    }

    /// Whether `self → next` is a legal transition (self-loops allowed).
    pub fn can_become(self, next: Phase) -> bool {
        use Phase::*;
        self == next
            || matches!(
                (self, next),
                (Approach, Rotation)
                    | (Approach, Failed)
                    | (Rotation, Swing)
                    | (Rotation, Settled)
                    | (Rotation, Failed)
                    | (Swing, Settled)
                    | (Swing, Failed)
            )
    }
}

/// The landing plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    /// rad in [0, π]; 0 = inverted ceiling, π = ground.
    pub theta_plane: f64,
    pub anchor_point: Vec2,
    pub contact_epsilon: f64,
    pub attach_range: f64,
}

impl SurfaceSpec {
    pub fn new(theta_plane: f64) -> Self {
        SurfaceSpec {
            theta_plane,
            anchor_point: Vec2::ZERO,
            contact_epsilon: DEFAULT_CONTACT_EPSILON,
            attach_range: DEFAULT_ATTACH_RANGE,
        }
    }

    pub fn ceiling() -> Self {
        Self::new(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=PI).contains(&self.theta_plane) {
            return Err(invalid("theta_plane", "must lie in [0, π]"));
        }
        if !self.anchor_point.is_finite() {
            return Err(invalid("anchor_point", "must be finite"));
        }
        if !(self.contact_epsilon > 0.0) {
            return Err(invalid("contact_epsilon", "must be > 0"));
        }
        if !(self.attach_range >= self.contact_epsilon) {
            return Err(invalid("attach_range", "must be >= contact_epsilon"));
        }
        Ok(())
    }

    /// Unit normal pointing from the plane toward the robot's side.
    #[inline]
    pub fn normal(&self) -> Vec2 {
        Vec2::new(-sin(self.theta_plane), -cos(self.theta_plane))
    }

    /// In-plane unit tangent; forward flight under a ceiling is positive.
    #[inline]
    pub fn tangent(&self) -> Vec2 {
        Vec2::new(cos(self.theta_plane), -sin(self.theta_plane))
    }

    /// Signed perpendicular distance, positive on the robot's side.
    #[inline]
    pub fn signed_distance(&self, p: Vec2) -> f64 {
        self.normal().dot(p - self.anchor_point)
    }

    /// Foot of the perpendicular from `p` onto the plane.
    #[inline]
    pub fn project(&self, p: Vec2) -> Vec2 {
        p - self.normal() * self.signed_distance(p)
    }

    /// Pitch at which the legs face the plane squarely.
    #[inline]
    pub fn flush_pitch(&self) -> f64 {
        PI - self.theta_plane
    }
}

/// Flight speed and flight angle relative to the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproachCondition {
    /// m/s
    pub speed: f64,
    /// rad, counter-clockwise from +X.
    pub flight_angle: f64,
}

impl ApproachCondition {
    pub fn new(speed: f64, flight_angle: f64) -> Self {
        ApproachCondition {
            speed,
            flight_angle,
        }
    }

    #[inline]
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.flight_angle) * self.speed
    }

    /// Closing speed toward `surface` (positive when approaching).
    #[inline]
    pub fn v_perp(&self, surface: &SurfaceSpec) -> f64 {
        -surface.normal().dot(self.velocity())
    }
}

/// How the approach velocity is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ApproachMode {
    /// Perfect tracking of the commanded velocity from t = 0.
    #[default]
    Ideal,
    /// Commanded velocity reached through the motor first-order lag,
    /// starting from hover.
    MotorLag,
}

/// A collision-course trajectory toward the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Approach {
    pub condition: ApproachCondition,
    pub start: Vec2,
    pub mode: ApproachMode,
    mass: f64,
    time_constant: f64,
}

impl Approach {
    /// Trajectory whose center of mass starts `start_distance` from `surface`
    /// and would cross the plane at the surface anchor.
    pub fn new(
        condition: ApproachCondition,
        surface: &SurfaceSpec,
        start_distance: f64,
    ) -> Result<Self> {
        if !(condition.speed > 0.0 && condition.speed.is_finite()) {
            return Err(invalid("speed", "must be finite and > 0"));
        }
        let v_perp = condition.v_perp(surface);
        if !(v_perp > 1e-9) {
            return Err(Error::NoCollisionCourse);
        }
        let start = surface.anchor_point - condition.velocity() * (start_distance / v_perp);
        Ok(Approach {
            condition,
            start,
            mode: ApproachMode::Ideal,
            mass: 1.0,
            time_constant: 1.0,
        })
    }

    pub fn with_motor_lag(mut self, mass: f64, time_constant: f64) -> Self {
        self.mode = ApproachMode::MotorLag;
        self.mass = mass;
        self.time_constant = time_constant;
        self
    }

    /// Hover-attitude state at time `t` along the trajectory.
    pub fn state_at(&self, t: f64) -> SimState {
        let v = self.condition.velocity();
        let (position, velocity, thrust) = match self.mode {
            ApproachMode::Ideal => (self.start + v * t, v, self.mass * GRAVITY),
            ApproachMode::MotorLag => {
                let tc = self.time_constant;
                let decay = exp(-t / tc);
                let accel = v * (decay / tc);
                let thrust = (accel + Vec2::new(0.0, GRAVITY)).norm() * self.mass;
                (self.start + v * (t - tc * (1.0 - decay)), v * (1.0 - decay), thrust)
            }
        };
        SimState {
            position,
            velocity,
            motor_thrust: thrust,
            time: t,
            ..SimState::default()
        }
    }
}

/// The pad pinned to the surface during the body swing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pin {
    pub side: PadSide,
    pub point: Vec2,
}

/// Complete planar state at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub position: Vec2,
    pub velocity: Vec2,
    pub pitch: f64,
    pub pitch_rate: f64,
    /// First-order motor lag state, N.
    pub motor_thrust: f64,
    /// Leg deflection relative to the body, rad.
    pub hip_angle: f64,
    pub hip_rate: f64,
    pub phase: Phase,
    pub time: f64,
    /// Pitch at the trigger instant.
    pub trigger_pitch: f64,
    /// Whether the commanded angular acceleration is still applied.
    pub accelerating: bool,
    pub pin: Option<Pin>,
}

impl Default for SimState {
    fn default() -> Self {
        SimState {
            position: Vec2::ZERO,
            velocity: Vec2::ZERO,
            pitch: 0.0,
            pitch_rate: 0.0,
            motor_thrust: 0.0,
            hip_angle: 0.0,
            hip_rate: 0.0,
            phase: Phase::Approach,
            time: 0.0,
            trigger_pitch: 0.0,
            accelerating: false,
            pin: None,
        }
    }
}

impl SimState {
    #[inline]
    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.pitch)
    }

    pub fn is_finite(&self) -> bool {
        self.position.is_finite()
            && self.velocity.is_finite()
            && self.pitch.is_finite()
            && self.pitch_rate.is_finite()
            && self.motor_thrust.is_finite()
            && self.hip_angle.is_finite()
            && self.hip_rate.is_finite()
            && self.time.is_finite()
    }

    /// Starts the rotation maneuver from the current state.
    pub fn triggered(mut self) -> SimState {
        self.phase = Phase::Rotation;
        self.trigger_pitch = self.pitch;
        self.accelerating = true;
        self
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.phase, Phase::Settled | Phase::Failed)
    }
}

/// Constructs the straight-line state of an idealized approach at `t`.
pub fn approach_state(
    condition: ApproachCondition,
    surface: &SurfaceSpec,
    start_distance: f64,
    t: f64,
) -> Result<SimState> {
    Ok(Approach::new(condition, surface, start_distance)?.state_at(t))
}
