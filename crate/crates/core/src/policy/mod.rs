//! Stochastic actor and twin critics.

mod mlp;

pub use mlp::{Cache, Mlp};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Observation, Policy};
use crate::error::Result;
use crate::math::{atanh, ln, softplus, tanh, PI};

pub const ACTOR_SIZES: [usize; 5] = [4, 10, 10, 10, 4];
pub const CRITIC_SIZES: [usize; 5] = [6, 10, 10, 10, 1];
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
pub const ACTION_DIM: usize = 2;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Divisors applied to `[τ, ϑ_x, D⊥, θ_plane]` before the networks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObsNorm {
    pub tau: f64,
    pub theta_x: f64,
    pub d_perp: f64,
    pub theta_plane: f64,
}

impl Default for ObsNorm {
    fn default() -> Self {
        ObsNorm {
            tau: 1.0,
            theta_x: 10.0,
            d_perp: 2.0,
            theta_plane: PI,
        }
    }
}

impl ObsNorm {
    pub fn apply(&self, obs: &Observation) -> [f64; 4] {
        [
            obs.tau / self.tau,
            obs.theta_x / self.theta_x,
            obs.d_perp / self.d_perp,
            obs.theta_plane / self.theta_plane,
        ]
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.tau, self.theta_x, self.d_perp, self.theta_plane]
    }
}

/// Gaussian head outputs for one observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianHead {
    pub mean: [f64; ACTION_DIM],
    /// Clamped to `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub log_std: [f64; ACTION_DIM],
    /// Whether the clamp was inactive (the gradient passes through).
    pub log_std_free: [bool; ACTION_DIM],
}

impl GaussianHead {
    fn from_output(out: &[f64]) -> Self {
        let mut h = GaussianHead {
            mean: [out[0], out[1]],
            log_std: [0.0; ACTION_DIM],
            log_std_free: [true; ACTION_DIM],
        };
        for i in 0..ACTION_DIM {
            let raw = out[ACTION_DIM + i];
            h.log_std[i] = raw.clamp(LOG_STD_MIN, LOG_STD_MAX);
            h.log_std_free[i] = raw > LOG_STD_MIN && raw < LOG_STD_MAX;
        }
        h
    }
}

/// `ln(1 − tanh²u)` without cancellation.
#[inline]
pub fn log_one_minus_tanh_sq(u: f64) -> f64 {
    2.0 * (core::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Log density of the squashed Gaussian at pre-squash value `u`, per
/// dimension, in the normalized action space.
#[inline]
pub fn squashed_log_density(mean: f64, log_std: f64, u: f64) -> f64 {
    let z = (u - mean) / crate::math::exp(log_std);
    -0.5 * z * z - log_std - HALF_LN_2PI - log_one_minus_tanh_sq(u)
}

/// Log density of normalized action `a ∈ (−1, 1)` given one head dimension.
pub fn action_log_density(mean: f64, log_std: f64, a: f64) -> f64 {
    squashed_log_density(mean, log_std, atanh(a))
}

/// One reparameterized draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    /// Trigger output in `[-1, 1]`.
    pub a_trg: f64,
    /// rad/s², in `[-alpha_max, alpha_max]`.
    pub a_rot: f64,
    /// Joint log density of the normalized action.
    pub log_prob: f64,
    /// Normalized action.
    pub action: [f64; ACTION_DIM],
    pub noise: [f64; ACTION_DIM],
    pub pre_squash: [f64; ACTION_DIM],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub net: Mlp,
}

impl Actor {
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Actor {
            net: Mlp::init(&ACTOR_SIZES, rng),
        }
    }

    pub fn head(&self, x: &[f64]) -> Result<GaussianHead> {
        Ok(GaussianHead::from_output(&self.net.forward(x)?))
    }

    pub fn head_cached(&self, x: &[f64]) -> Result<(GaussianHead, Cache)> {
        let cache = self.net.forward_cached(x)?;
        Ok((GaussianHead::from_output(cache.output()), cache))
    }
}

/// Deterministic forward pass returning means and clamped log-stds.
pub fn actor_forward(
    obs: &Observation,
    actor: &Actor,
    norm: &ObsNorm,
) -> Result<([f64; ACTION_DIM], [f64; ACTION_DIM])> {
    let h = actor.head(&norm.apply(obs))?;
    Ok((h.mean, h.log_std))
}

/// Squashes `mean + σ·noise` and evaluates the log density.
pub fn squash(head: &GaussianHead, noise: [f64; ACTION_DIM], alpha_max: f64) -> ActionSample {
    let mut s = ActionSample {
        a_trg: 0.0,
        a_rot: 0.0,
        log_prob: 0.0,
        action: [0.0; ACTION_DIM],
        noise,
        pre_squash: [0.0; ACTION_DIM],
    };
    for i in 0..ACTION_DIM {
        let u = head.mean[i] + crate::math::exp(head.log_std[i]) * noise[i];
        s.pre_squash[i] = u;
        s.action[i] = tanh(u);
        s.log_prob += squashed_log_density(head.mean[i], head.log_std[i], u);
    }
    s.a_trg = s.action[0];
    s.a_rot = (s.action[1] * alpha_max).clamp(-alpha_max, alpha_max);
    s
}

pub fn standard_noise<R: Rng + ?Sized>(rng: &mut R) -> [f64; ACTION_DIM] {
    [rng.sample(StandardNormal), rng.sample(StandardNormal)]
}

pub fn sample_action<R: Rng + ?Sized>(
    obs: &Observation,
    actor: &Actor,
    norm: &ObsNorm,
    alpha_max: f64,
    rng: &mut R,
) -> Result<ActionSample> {
    let head = actor.head(&norm.apply(obs))?;
    Ok(squash(&head, standard_noise(rng), alpha_max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    pub net: Mlp,
}

impl Critic {
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Critic {
            net: Mlp::init(&CRITIC_SIZES, rng),
        }
    }

    pub fn input(x: &[f64; 4], a: &[f64; ACTION_DIM]) -> [f64; 6] {
        [x[0], x[1], x[2], x[3], a[0], a[1]]
    }

    pub fn value(&self, x: &[f64; 4], a: &[f64; ACTION_DIM]) -> Result<f64> {
        Ok(self.net.forward(&Self::input(x, a))?[0])
    }
}

/// Q-value of a normalized action.
pub fn critic_forward(
    obs: &Observation,
    action: &Action,
    critic: &Critic,
    norm: &ObsNorm,
) -> Result<f64> {
    critic.value(&norm.apply(obs), &action.as_array())
}

/// Actor wrapped for rollouts.
#[derive(Debug, Clone, Copy)]
pub struct ActorPolicy<'a> {
    pub actor: &'a Actor,
    pub norm: ObsNorm,
    /// Use `tanh(mean)` instead of sampling.
    pub deterministic: bool,
    /// Reuse this standard-normal draw at every query instead of a fresh one.
    pub fixed_noise: Option<[f64; ACTION_DIM]>,
}

impl<'a> ActorPolicy<'a> {
    pub fn new(actor: &'a Actor, norm: ObsNorm, deterministic: bool) -> Self {
        ActorPolicy {
            actor,
            norm,
            deterministic,
            fixed_noise: None,
        }
    }
}

impl Policy for ActorPolicy<'_> {
    fn act(&self, obs: &Observation, rng: &mut dyn RngCore) -> Action {
        let x = self.norm.apply(obs);
        let head = match self.actor.head(&x) {
            Ok(h) => h,
            Err(_) => {
                return Action {
                    trigger: -1.0,
                    rotation: 0.0,
                }
            }
        };
        let noise = match (self.deterministic, self.fixed_noise) {
            (true, _) => [0.0; ACTION_DIM],
            (false, Some(n)) => n,
            (false, None) => standard_noise(rng),
        };
        let s = squash(&head, noise, 1.0);
        Action {
            trigger: s.action[0],
            rotation: s.action[1],
        }
    }
}

/// Entropy-temperature parameter, stored as `ln α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Temperature {
    pub log_alpha: f64,
}

impl Temperature {
    pub fn new(alpha: f64) -> Self {
        Temperature {
            log_alpha: ln(alpha),
        }
    }

    pub fn alpha(&self) -> f64 {
        crate::math::exp(self.log_alpha)
    }
}
