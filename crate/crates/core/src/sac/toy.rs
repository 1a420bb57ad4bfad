//! One-dimensional trigger task with a known optimal policy.
//!
//! Each episode shows a single time to contact drawn uniformly from
//! `[0, tau_max)`. The decision earns 1 when the trigger sign matches
//! `τ < 0.3`, otherwise 0. Speed and optic flow are random distractors.

use alloc::vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EpisodeLog, Task, TaskEpisode};
use crate::env::{Decision, Observation, Policy};
use crate::error::Result;
use crate::policy::{Actor, ActorPolicy, ObsNorm};

pub const TOY_TAU_THRESHOLD: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyTriggerTask {
    pub tau_max: f64,
}

impl Default for ToyTriggerTask {
    fn default() -> Self {
        ToyTriggerTask { tau_max: 1.2 }
    }
}

impl ToyTriggerTask {
    pub fn reward(tau: f64, triggered: bool) -> f64 {
        if triggered == (tau < TOY_TAU_THRESHOLD) {
            1.0
        } else {
            0.0
        }
    }

    fn observation<R: Rng + ?Sized>(tau: f64, rng: &mut R) -> Observation {
        let speed = rng.random_range(1.0..5.0);
        Observation {
            tau,
            theta_x: rng.random_range(-5.0..5.0),
            d_perp: speed * tau,
            theta_plane: 0.0,
        }
    }

    /// Fraction of `n` evenly spaced `τ` in `(0, tau_max)` where the
    /// deterministic actor decides correctly.
    pub fn trigger_accuracy(&self, actor: &Actor, norm: ObsNorm, n: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let policy = ActorPolicy::new(actor, norm, true);
        let correct = (0..n)
            .filter(|&k| {
                let tau = self.tau_max * (k as f64 + 0.5) / n as f64;
                let obs = Self::observation(tau, &mut rng);
                Self::reward(tau, policy.act(&obs, &mut rng).trigger > 0.0) == 1.0
            })
            .count();
        correct as f64 / n as f64
    }
}

impl Task for ToyTriggerTask {
    fn run(&self, policy: &dyn Policy, seed: u64) -> Result<TaskEpisode> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tau = rng.random_range(0.0..self.tau_max);
        let obs = Self::observation(tau, &mut rng);
        let action = policy.act(&obs, &mut rng);
        let triggered = action.trigger > 0.0;
        let reward = Self::reward(tau, triggered);
        Ok(TaskEpisode {
            decisions: vec![Decision { obs, action }],
            reward,
            log: EpisodeLog {
                episode: 0,
                reward,
                n_legs: 0,
                triggered,
                tau_trg: triggered.then_some(tau),
                plane_angle: 0.0,
                speed: obs.d_perp / tau.max(1e-9),
                flight_angle: 0.0,
            },
        })
    }
}
