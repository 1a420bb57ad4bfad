//! Episode orchestration: emulated sensory cues, the trigger-and-rotate
//! action, landing classification and the reward.

mod reward;

pub use reward::{
    classify_landing, compute_reward, max_scalar_reward, r_d_pad, r_legs, r_phi, r_tau_trg,
    RewardInputs, RewardScales, RewardVector, Touchdown, CONTACT_PENALTY, REWARD_WEIGHTS,
};

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{derive_dimensionless, PadSide, Pose, RobotGeometry};
use crate::math::{rad, wrap_angle, Vec2, FRAC_PI_2, GRAVITY, PI};
use crate::sim::{
    begin_swing, detect_contacts, pad_captured, state_points, step_maneuver, step_swing,
    Approach, ApproachCondition, ApproachMode, ContactEvent, ContactKind, DistanceTrace, Phase,
    SimState, SurfaceSpec,
};

/// Policy input `[τ, ϑ_x, D⊥, θ_plane]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Observation {
    /// s, clamped to `[0, tau_max]`.
    pub tau: f64,
    /// 1/s
    pub theta_x: f64,
    /// m
    pub d_perp: f64,
    /// rad
    pub theta_plane: f64,
}

impl Observation {
    pub fn as_array(&self) -> [f64; 4] {
        [self.tau, self.theta_x, self.d_perp, self.theta_plane]
    }
}

/// Normalized policy output, both components in `[-1, 1]`.
///
/// The maneuver triggers when `trigger > 0`; the rotation acceleration is
/// `rotation · alpha_max`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Action {
    pub trigger: f64,
    pub rotation: f64,
}

impl Action {
    pub fn as_array(&self) -> [f64; 2] {
        [self.trigger, self.rotation]
    }
}

/// Anything that maps observations to actions at the policy tick.
pub trait Policy {
    fn act(&self, obs: &Observation, rng: &mut dyn RngCore) -> Action;
}

impl<F> Policy for F
where
    F: Fn(&Observation, &mut dyn RngCore) -> Action,
{
    fn act(&self, obs: &Observation, rng: &mut dyn RngCore) -> Action {
        self(obs, rng)
    }
}

/// Never triggers.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeverTrigger;

impl Policy for NeverTrigger {
    fn act(&self, _obs: &Observation, _rng: &mut dyn RngCore) -> Action {
        Action {
            trigger: -1.0,
            rotation: 0.0,
        }
    }
}

/// Uniform random actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformPolicy;

impl Policy for UniformPolicy {
    fn act(&self, _obs: &Observation, rng: &mut dyn RngCore) -> Action {
        Action {
            trigger: rng.random_range(-1.0..=1.0),
            rotation: rng.random_range(-1.0..=1.0),
        }
    }
}

/// Triggers once `τ` drops below a threshold, with a fixed rotation.
#[derive(Debug, Clone, Copy)]
pub struct ScriptedPolicy {
    pub tau_trigger: f64,
    pub rotation: f64,
}

impl Policy for ScriptedPolicy {
    fn act(&self, obs: &Observation, _rng: &mut dyn RngCore) -> Action {
        Action {
            trigger: if obs.tau <= self.tau_trigger { 1.0 } else { -1.0 },
            rotation: self.rotation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    /// Physics step, s.
    pub physics_dt: f64,
    /// Physics steps per policy tick.
    pub policy_every: usize,
    /// Time-to-contact at the start of the approach, s.
    pub tau_start: f64,
    /// Upper clamp of the observed `τ`, s.
    pub tau_max: f64,
    /// Distance floor for `ϑ_x`, m.
    pub theta_x_guard: f64,
    /// Episode cut-off after the trigger, s.
    pub post_trigger_timeout: f64,
    pub reward: RewardScales,
    pub approach_mode: ApproachMode,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            physics_dt: 1e-3,
            policy_every: 10,
            tau_start: 1.0,
            tau_max: 5.0,
            theta_x_guard: 1e-3,
            post_trigger_timeout: 3.0,
            reward: RewardScales::default(),
            approach_mode: ApproachMode::Ideal,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.physics_dt > 0.0 && self.physics_dt <= 0.01) {
            return Err(invalid("physics_dt", "must lie in (0, 0.01] s"));
        }
        if self.policy_every == 0 {
            return Err(invalid("policy_every", "must be >= 1"));
        }
        if !(self.tau_start > 0.0) {
            return Err(invalid("tau_start", "must be > 0"));
        }
        if !(self.tau_max >= self.tau_start) {
            return Err(invalid("tau_max", "must be >= tau_start"));
        }
        if !(self.theta_x_guard > 0.0) {
            return Err(invalid("theta_x_guard", "must be > 0"));
        }
        if !(self.post_trigger_timeout > 0.0) {
            return Err(invalid("post_trigger_timeout", "must be > 0"));
        }
        if !(self.reward.k1 > 0.0 && self.reward.k2 > 0.0) {
            return Err(invalid("reward", "k1 and k2 must be > 0"));
        }
        Ok(())
    }
}

/// One policy query during the approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub obs: Observation,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub triggered: bool,
    /// Raw time-to-contact at the trigger tick (may be negative), s.
    pub tau_trg: Option<f64>,
    /// rad/s²
    pub a_rot_used: f64,
    pub min_d_pad: f64,
    pub min_d_prop: f64,
    /// Impact angle relative to the plane at the first contact, rad.
    pub phi_impact: Option<f64>,
    pub n_legs: u8,
    pub body_or_prop_contact: bool,
    pub outcome: Phase,
    pub contacts: Vec<ContactEvent>,
    pub reward: RewardVector,
    pub reward_scalar: f64,
    pub duration: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<DistanceTrace>,
}

impl EpisodeResult {
    pub fn four_leg(&self) -> bool {
        self.n_legs >= 4
    }

    pub fn any_contact(&self) -> bool {
        self.n_legs > 0
    }
}

/// A finished episode with the policy queries that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub result: EpisodeResult,
    pub decisions: Vec<Decision>,
    /// Every physics state, when requested.
    pub trajectory: Option<Vec<SimState>>,
}

/// Computes the cues for a pre-contact state.
pub fn observe_with(
    state: &SimState,
    l_eff: f64,
    surface: &SurfaceSpec,
    tau_max: f64,
    guard: f64,
) -> Observation {
    let n = surface.normal();
    let d_raw = surface.signed_distance(state.position) - l_eff;
    let v_perp = -n.dot(state.velocity);
    let v_par = surface.tangent().dot(state.velocity);
    let d_perp = d_raw.max(0.0);
    let tau = if v_perp > 0.0 {
        (d_perp / v_perp).min(tau_max)
    } else {
        tau_max
    };
    Observation {
        tau,
        theta_x: v_par / d_raw.max(guard),
        d_perp,
        theta_plane: surface.theta_plane,
    }
}

/// `observe_with` using the geometry's effective leg length and default
/// clamps.
pub fn observe(state: &SimState, geom: &RobotGeometry, surface: &SurfaceSpec) -> Result<Observation> {
    let cfg = EnvConfig::default();
    let l_eff = derive_dimensionless(geom)?.l_eff;
    Ok(observe_with(state, l_eff, surface, cfg.tau_max, cfg.theta_x_guard))
}

/// Smallest impact angle relative to the plane at which a pad reaches
/// farther toward the plane than every prop and body point.
pub fn compute_phi_min(geom: &RobotGeometry) -> Result<f64> {
    let leads = |phi: f64| {
        let pts = crate::geometry::world_points(geom, &Pose::new(Vec2::ZERO, phi));
        let pad = pts.pad_front.z.max(pts.pad_rear.z);
        let body = geom
            .body_points()
            .iter()
            .map(|b| b.rotated(phi).z)
            .fold(f64::NEG_INFINITY, f64::max);
        let props = pts.prop_points.iter().map(|p| p.z).fold(body, f64::max);
        pad > props
    };
    const STEPS: usize = 3600;
    let mut prev = 0.0;
    for i in 1..=STEPS {
        let phi = PI * i as f64 / STEPS as f64;
        if leads(phi) {
            let (mut lo, mut hi) = (prev, phi);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if leads(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        prev = phi;
    }
    Err(invalid("geometry", "pads never lead the props toward the plane"))
}

/// Flight-angle interval giving a collision course with positive forward
/// velocity, shrunk by `margin` on the sides set by the plane.
pub fn flight_angle_range(theta_plane: f64, margin: f64) -> (f64, f64) {
    let lo = (-theta_plane + margin).max(-FRAC_PI_2);
    let hi = (PI - theta_plane - margin).min(FRAC_PI_2);
    (lo, hi)
}

/// Approach conditions used for training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingDistribution {
    pub plane_angles: Vec<f64>,
    pub speed_min: f64,
    pub speed_max: f64,
    pub angle_margin: f64,
}

impl Default for TrainingDistribution {
    fn default() -> Self {
        TrainingDistribution {
            plane_angles: [0.0, 45.0, 90.0, 135.0, 180.0].iter().map(|d| rad(*d)).collect(),
            speed_min: 1.0,
            speed_max: 5.0,
            angle_margin: rad(5.0),
        }
    }
}

impl TrainingDistribution {
    pub fn ceiling_only() -> Self {
        TrainingDistribution {
            plane_angles: alloc::vec![0.0],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.plane_angles.is_empty() {
            return Err(invalid("plane_angles", "must not be empty"));
        }
        for &a in &self.plane_angles {
            SurfaceSpec::new(a).validate()?;
            let (lo, hi) = flight_angle_range(a, self.angle_margin);
            if !(lo < hi) {
                return Err(invalid("angle_margin", "leaves no admissible flight angle"));
            }
        }
        if !(self.speed_min > 0.0 && self.speed_max >= self.speed_min) {
            return Err(invalid("speed", "need 0 < speed_min <= speed_max"));
        }
        Ok(())
    }

    /// Uniform plane, uniform speed and uniform admissible flight angle.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (ApproachCondition, SurfaceSpec) {
        let theta = self.plane_angles[rng.random_range(0..self.plane_angles.len())];
        let speed = if self.speed_max > self.speed_min {
            rng.random_range(self.speed_min..self.speed_max)
        } else {
            self.speed_min
        };
        let (lo, hi) = flight_angle_range(theta, self.angle_margin);
        let angle = rng.random_range(lo..=hi);
        (ApproachCondition::new(speed, angle), SurfaceSpec::new(theta))
    }
}

/// Samples one training condition from the default distribution.
pub fn sample_training_episode<R: Rng + ?Sized>(rng: &mut R) -> (ApproachCondition, SurfaceSpec) {
    TrainingDistribution::default().sample(rng)
}

/// Rollout driver for one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct Env {
    pub geom: RobotGeometry,
    pub cfg: EnvConfig,
    phi_min: f64,
    l_eff: f64,
    reach: f64,
}

struct Tracker {
    min_pad: f64,
    min_prop: f64,
    states: Option<Vec<SimState>>,
}

impl Tracker {
    fn push(&mut self, s: &SimState, env: &Env, surface: &SurfaceSpec) {
        let d = DistanceTrace::sample(s, &env.geom, surface);
        self.min_pad = self.min_pad.min(d.d_pad);
        self.min_prop = self.min_prop.min(d.d_prop);
        if let Some(v) = self.states.as_mut() {
            v.push(*s);
        }
    }
}

/// Refines a step that produced an event to the earliest sub-step at which
/// `hit` holds.
fn first_hit<F, H>(step: F, dt: f64, full: SimState, hit: H) -> Result<SimState>
where
    F: Fn(f64) -> Result<SimState>,
    H: Fn(&SimState) -> bool,
{
    let (mut lo, mut hi) = (0.0, dt);
    let mut best = full;
    while hi - lo > 1e-7 * dt.max(1e-3) {
        let mid = 0.5 * (lo + hi);
        let s = step(mid)?;
        if hit(&s) {
            hi = mid;
            best = s;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

impl Env {
    pub fn new(geom: RobotGeometry, cfg: EnvConfig) -> Result<Self> {
        geom.validate()?;
        cfg.validate()?;
        let l_eff = derive_dimensionless(&geom)?.l_eff;
        let phi_min = compute_phi_min(&geom)?;
        let mut reach = geom.pad_body(PadSide::Front).norm().max(geom.pad_body(PadSide::Rear).norm());
        for p in geom.prop_offsets.iter().chain(geom.body_points().iter()) {
            reach = reach.max(p.norm());
        }
        Ok(Env {
            geom,
            cfg,
            phi_min,
            l_eff,
            reach,
        })
    }

    pub fn phi_min(&self) -> f64 {
        self.phi_min
    }

    pub fn l_eff(&self) -> f64 {
        self.l_eff
    }

    pub fn observe(&self, state: &SimState, surface: &SurfaceSpec) -> Observation {
        observe_with(state, self.l_eff, surface, self.cfg.tau_max, self.cfg.theta_x_guard)
    }

    /// Unclamped time-to-contact, negative once inside the reach circle.
    pub fn raw_tau(&self, state: &SimState, surface: &SurfaceSpec) -> f64 {
        let d = surface.signed_distance(state.position) - self.l_eff;
        let v_perp = -surface.normal().dot(state.velocity);
        if v_perp > 0.0 {
            d / v_perp
        } else {
            self.cfg.tau_max
        }
    }

    fn clearance(&self, s: &SimState, surface: &SurfaceSpec) -> f64 {
        let pts = state_points(s, &self.geom);
        let pinned = s.pin.map(|p| p.side);
        let mut d = f64::INFINITY;
        if pinned != Some(PadSide::Front) {
            d = d.min(surface.signed_distance(pts.pad_front));
        }
        if pinned != Some(PadSide::Rear) {
            d = d.min(surface.signed_distance(pts.pad_rear));
        }
        for p in pts.prop_points.iter() {
            d = d.min(surface.signed_distance(*p));
        }
        for b in self.geom.body_points() {
            d = d.min(surface.signed_distance(s.pose().to_world(b)));
        }
        d
    }

    fn captured(&self, s: &SimState, surface: &SurfaceSpec) -> [bool; 2] {
        let pinned = s.pin.map(|p| p.side);
        let f = pinned != Some(PadSide::Front) && pad_captured(s, &self.geom, surface, PadSide::Front);
        let r = pinned != Some(PadSide::Rear) && pad_captured(s, &self.geom, surface, PadSide::Rear);
        [f, r]
    }

    fn event(&self, s: &SimState, surface: &SurfaceSpec) -> bool {
        let c = self.captured(s, surface);
        c[0] || c[1] || self.clearance(s, surface) <= surface.contact_epsilon
    }

    /// No point can reach the plane again: far, receding, and gravity does
    /// not pull toward the plane.
    fn out_of_reach(&self, s: &SimState, surface: &SurfaceSpec) -> bool {
        let n = surface.normal();
        let d = surface.signed_distance(s.position);
        let closing = -n.dot(s.velocity);
        let g_toward = -n.dot(Vec2::new(0.0, -GRAVITY));
        d > self.reach + surface.attach_range + 0.01 && closing <= 0.0 && g_toward <= 0.0
    }

    fn pad_event(&self, s: &SimState, surface: &SurfaceSpec, side: PadSide) -> ContactEvent {
        let pts = state_points(s, &self.geom);
        let p = match side {
            PadSide::Front => pts.pad_front,
            PadSide::Rear => pts.pad_rear,
        };
        ContactEvent {
            kind: ContactKind::pad(side),
            time: s.time,
            point: surface.project(p),
            impact_pitch: s.pitch,
        }
    }

    /// Simulates one landing attempt.
    pub fn run_episode(
        &self,
        policy: &dyn Policy,
        condition: ApproachCondition,
        surface: &SurfaceSpec,
        seed: u64,
        record: bool,
    ) -> Result<Rollout> {
        surface.validate()?;
        let geom = &self.geom;
        let dt = self.cfg.physics_dt;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v_perp = condition.v_perp(surface);
        let mut approach = Approach::new(condition, surface, self.l_eff + v_perp.max(0.0) * self.cfg.tau_start)?;
        if self.cfg.approach_mode == ApproachMode::MotorLag {
            approach = approach.with_motor_lag(geom.mass, geom.motor_time_constant);
        }

        let mut tracker = Tracker {
            min_pad: f64::INFINITY,
            min_prop: f64::INFINITY,
            states: if record { Some(Vec::new()) } else { None },
        };
        let mut decisions = Vec::new();
        let mut contacts: Vec<ContactEvent> = Vec::new();
        let mut state = approach.state_at(0.0);
        tracker.push(&state, self, surface);

        // Approach until the trigger or an untriggered contact.
        let max_approach = 10.0 * (self.cfg.tau_start + 1.0) + 10.0 * self.cfg.tau_max;
        let mut trigger: Option<(f64, f64)> = None;
        let mut step = 0usize;
        loop {
            if step.is_multiple_of(self.cfg.policy_every) {
                let obs = self.observe(&state, surface);
                let action = policy.act(&obs, &mut rng);
                decisions.push(Decision { obs, action });
                if action.trigger > 0.0 {
                    let a_rot = action.rotation.clamp(-1.0, 1.0) * geom.alpha_max;
                    trigger = Some((self.raw_tau(&state, surface), a_rot));
                    state = state.triggered();
                    break;
                }
            }
            let t_next = (step + 1) as f64 * dt;
            let next = approach.state_at(t_next);
            if self.event(&next, surface) {
                let t0 = state.time;
                let hit = first_hit(|h| Ok(approach.state_at(t0 + h)), t_next - t0, next, |s| {
                    self.clearance(s, surface) <= surface.contact_epsilon
                })?;
                if self.clearance(&hit, surface) <= surface.contact_epsilon {
                    state = hit;
                    state.phase = Phase::Failed;
                    tracker.push(&state, self, surface);
                    contacts = detect_contacts(&state, geom, surface);
                    break;
                }
            }
            state = next;
            tracker.push(&state, self, surface);
            step += 1;
            if state.time > max_approach {
                state.phase = Phase::Failed;
                break;
            }
        }

        let mut touchdown = None;
        let mut first_contact_pitch = None;
        let mut swing_outcome = None;
        let (tau_trg, a_rot) = match trigger {
            Some(t) => (Some(t.0), t.1),
            None => (None, 0.0),
        };
        if !contacts.is_empty() {
            first_contact_pitch = Some(contacts[0].impact_pitch);
        }

        if trigger.is_some() {
            let t_trigger = state.time;
            // Rotation maneuver.
            while state.phase == Phase::Rotation {
                if state.time - t_trigger >= self.cfg.post_trigger_timeout
                    || self.out_of_reach(&state, surface)
                {
                    state.phase = Phase::Failed;
                    break;
                }
                let prev = state;
                let next = step_maneuver(&prev, a_rot, geom, dt)?;
                if !self.event(&next, surface) {
                    state = next;
                    tracker.push(&state, self, surface);
                    continue;
                }
                let hit = first_hit(|h| step_maneuver(&prev, a_rot, geom, h), dt, next, |s| {
                    self.event(s, surface)
                })?;
                state = hit;
                tracker.push(&state, self, surface);
                let captured = self.captured(&state, surface);
                let mut events: Vec<ContactEvent> = detect_contacts(&state, geom, surface)
                    .into_iter()
                    .filter(|e| !e.kind.is_pad())
                    .collect();
                for (i, side) in [PadSide::Front, PadSide::Rear].into_iter().enumerate() {
                    if captured[i] {
                        events.push(self.pad_event(&state, surface, side));
                    }
                }
                first_contact_pitch = Some(state.pitch);
                if let Some(pad) = events.iter().find(|e| e.kind.is_pad()) {
                    let side = pad.kind.pad_side().unwrap_or(PadSide::Front);
                    let p = state.pose().to_world(geom.pad_body(side));
                    touchdown = Some(Touchdown {
                        leg_vector: state.position - p,
                        velocity: state.velocity,
                    });
                }
                let hard = events.iter().any(|e| !e.kind.is_pad());
                let n_pads = captured.iter().filter(|c| **c).count();
                contacts.extend(events);
                if hard {
                    state.phase = Phase::Failed;
                } else if n_pads == 2 {
                    state.phase = Phase::Settled;
                } else if n_pads == 1 {
                    let side = if captured[0] { PadSide::Front } else { PadSide::Rear };
                    state = begin_swing(&state, geom, side);
                } else {
                    state.phase = Phase::Failed;
                }
            }

            // Body swing about the attached pad.
            if state.phase == Phase::Swing {
                loop {
                    if state.time - t_trigger >= self.cfg.post_trigger_timeout {
                        state.phase = Phase::Failed;
                        break;
                    }
                    let prev = state;
                    let mut next = step_swing(&prev, geom, surface, dt)?;
                    if self.clearance(&next, surface) < -surface.contact_epsilon {
                        next = first_hit(|h| step_swing(&prev, geom, surface, h), dt, next, |s| {
                            self.event(s, surface)
                        })?;
                    }
                    state = next;
                    tracker.push(&state, self, surface);
                    if state.is_terminal() {
                        break;
                    }
                }
                swing_outcome = Some(state.phase);
                let free = state.pin.map(|p| p.side.other()).unwrap_or(PadSide::Rear);
                if state.phase == Phase::Settled {
                    contacts.push(self.pad_event(&state, surface, free));
                } else {
                    contacts.extend(
                        detect_contacts(&state, geom, surface)
                            .into_iter()
                            .filter(|e| !e.kind.is_pad()),
                    );
                }
            }
        }

        let (mut n_legs, flag) = classify_landing(&contacts, swing_outcome);
        if trigger.is_none() {
            n_legs = 0;
        }
        let phi_impact = first_contact_pitch.map(|p| wrap_angle(p + surface.theta_plane));
        let inputs = RewardInputs {
            tau_trg,
            min_d_pad: tracker.min_pad,
            touchdown,
            phi_impact,
            phi_min: self.phi_min,
            n_legs,
            body_or_prop_contact: flag,
        };
        let reward = compute_reward(&inputs, self.cfg.reward);
        let trace = tracker
            .states
            .as_ref()
            .map(|v| crate::sim::record_distances(v, geom, surface));
        if !state.is_finite() {
            return Err(Error::NumericalDivergence { time: state.time });
        }
        Ok(Rollout {
            result: EpisodeResult {
                triggered: trigger.is_some(),
                tau_trg,
                a_rot_used: a_rot,
                min_d_pad: tracker.min_pad,
                min_d_prop: tracker.min_prop,
                phi_impact,
                n_legs,
                body_or_prop_contact: flag,
                outcome: state.phase,
                contacts,
                reward,
                reward_scalar: reward.scalar(),
                duration: state.time,
                trace,
            },
            decisions,
            trajectory: tracker.states,
        })
    }
}
