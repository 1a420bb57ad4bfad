//! Soft Actor-Critic trainer.

mod adam;
mod losses;
mod replay;
mod toy;

pub use adam::Adam;
pub use losses::{actor_loss_grad, critic_loss_grad, temperature_loss_grad};
pub use replay::{ReplayBuffer, Transition};
pub use toy::{ToyTriggerTask, TOY_TAU_THRESHOLD};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Decision, Env, Observation, Policy, TrainingDistribution};
use crate::error::{invalid, Error, Result};
use crate::policy::{squash, standard_noise, Actor, ActorPolicy, Critic, ObsNorm, Temperature};

/// How an episode's policy queries become replay transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransitionScheme {
    /// Only the final query, carrying the terminal reward.
    TriggerOnly,
    /// Every query; zero reward and a bootstrapped successor until the last,
    /// which is terminal with the episode reward.
    PerTick,
    /// The final query plus up to `wait_samples` earlier ones drawn
    /// uniformly, each terminal and labelled with the episode reward.
    EpisodeReturn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SacConfig {
    pub discount: f64,
    /// Soft-update rate of the target critics.
    pub tau: f64,
    pub batch_size: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_temperature: f64,
    pub initial_temperature: f64,
    pub target_entropy: f64,
    pub buffer_capacity: usize,
    /// Gradient updates per stored transition.
    pub updates_per_transition: f64,
    /// Extra gradient updates per episode.
    pub updates_per_episode: usize,
    pub warmup_episodes: usize,
    pub total_episodes: usize,
    /// Draw the exploration noise once per episode rather than per query.
    pub episode_noise: bool,
    /// Initial bias of the trigger mean; negative values make the fresh
    /// policy wait longer before firing.
    pub initial_trigger_bias: f64,
    pub scheme: TransitionScheme,
    /// Non-final queries kept per episode by [`TransitionScheme::EpisodeReturn`].
    pub wait_samples: usize,
}

impl Default for SacConfig {
    fn default() -> Self {
        SacConfig {
            discount: 0.99,
            tau: 0.005,
            batch_size: 64,
            lr_actor: 1e-3,
            lr_critic: 1e-3,
            lr_temperature: 1e-3,
            initial_temperature: 0.1,
            target_entropy: -2.0,
            buffer_capacity: 20_000,
            updates_per_transition: 0.0,
            updates_per_episode: 64,
            warmup_episodes: 200,
            total_episodes: 1500,
            episode_noise: true,
            initial_trigger_bias: -2.0,
            scheme: TransitionScheme::EpisodeReturn,
            wait_samples: 1,
        }
    }
}

impl SacConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return Err(invalid("discount", "must lie in (0, 1]"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(invalid("tau", "must lie in (0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be >= 1"));
        }
        for (name, v) in [
            ("lr_actor", self.lr_actor),
            ("lr_critic", self.lr_critic),
            ("lr_temperature", self.lr_temperature),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be finite and >= 0"));
            }
        }
        if !(self.initial_temperature > 0.0) {
            return Err(invalid("initial_temperature", "must be > 0"));
        }
        if !self.target_entropy.is_finite() {
            return Err(invalid("target_entropy", "must be finite"));
        }
        if self.buffer_capacity == 0 {
            return Err(invalid("buffer_capacity", "must be >= 1"));
        }
        if !(self.updates_per_transition >= 0.0 && self.updates_per_transition.is_finite()) {
            return Err(invalid("updates_per_transition", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Networks, targets, temperature and optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub actor: Actor,
    pub q1: Critic,
    pub q2: Critic,
    pub q1_target: Critic,
    pub q2_target: Critic,
    pub temperature: Temperature,
    pub norm: ObsNorm,
    opt_actor: Adam,
    opt_q1: Adam,
    opt_q2: Adam,
    opt_temperature: Adam,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(cfg: &SacConfig, norm: ObsNorm, rng: &mut R) -> Self {
        let mut actor = Actor::init(rng);
        let b = actor.net.bias_offset(actor.net.sizes().len() - 2);
        actor.net.params[b] = cfg.initial_trigger_bias;
        let q1 = Critic::init(rng);
        let q2 = Critic::init(rng);
        Agent {
            opt_actor: Adam::new(actor.net.n_params(), cfg.lr_actor),
            opt_q1: Adam::new(q1.net.n_params(), cfg.lr_critic),
            opt_q2: Adam::new(q2.net.n_params(), cfg.lr_critic),
            opt_temperature: Adam::new(1, cfg.lr_temperature),
            q1_target: q1.clone(),
            q2_target: q2.clone(),
            actor,
            q1,
            q2,
            temperature: Temperature::new(cfg.initial_temperature),
            norm,
        }
    }

    pub fn policy(&self, deterministic: bool) -> ActorPolicy<'_> {
        ActorPolicy::new(&self.actor, self.norm, deterministic)
    }
}

/// Losses of one update.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Losses {
    pub critic: f64,
    pub actor: f64,
    pub temperature: f64,
    pub alpha: f64,
    pub mean_log_prob: f64,
}

/// `target ← (1 − τ)·target + τ·online`.
pub fn soft_update(target: &mut Critic, online: &Critic, tau: f64) {
    for (t, o) in target.net.params.iter_mut().zip(&online.net.params) {
        *t = (1.0 - tau) * *t + tau * o;
    }
}

/// Entropy-regularized bootstrap targets for a batch.
pub fn critic_targets<R: Rng + ?Sized>(
    agent: &Agent,
    batch: &[Transition],
    discount: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let alpha = agent.temperature.alpha();
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                return Ok(t.reward);
            }
            let head = agent.actor.head(&t.next_obs)?;
            let s = squash(&head, standard_noise(rng), 1.0);
            let q = agent
                .q1_target
                .value(&t.next_obs, &s.action)?
                .min(agent.q2_target.value(&t.next_obs, &s.action)?);
            Ok(t.reward + discount * (q - alpha * s.log_prob))
        })
        .collect()
}

/// One SAC update on `batch`: both critics, the actor, the temperature,
/// then the target networks.
pub fn update_step<R: Rng + ?Sized>(
    agent: &mut Agent,
    batch: &[Transition],
    cfg: &SacConfig,
    rng: &mut R,
) -> Result<Losses> {
    if batch.is_empty() {
        return Err(invalid("batch", "must hold at least one transition"));
    }
    let obs: Vec<[f64; 4]> = batch.iter().map(|t| t.obs).collect();
    let actions: Vec<[f64; 2]> = batch.iter().map(|t| t.action).collect();
    let targets = critic_targets(agent, batch, cfg.discount, rng)?;

    let mut g1 = vec![0.0; agent.q1.net.n_params()];
    let mut g2 = vec![0.0; agent.q2.net.n_params()];
    let l1 = critic_loss_grad(&agent.q1, &obs, &actions, &targets, &mut g1)?;
    let l2 = critic_loss_grad(&agent.q2, &obs, &actions, &targets, &mut g2)?;
    agent.opt_q1.step(&mut agent.q1.net.params, &g1);
    agent.opt_q2.step(&mut agent.q2.net.params, &g2);

    let noise: Vec<[f64; 2]> = (0..batch.len()).map(|_| standard_noise(rng)).collect();
    let alpha = agent.temperature.alpha();
    let mut ga = vec![0.0; agent.actor.net.n_params()];
    let (la, mean_logp) =
        actor_loss_grad(&agent.actor, &agent.q1, &agent.q2, &obs, &noise, alpha, &mut ga)?;
    agent.opt_actor.step(&mut agent.actor.net.params, &ga);

    let (lt, gt) = temperature_loss_grad(agent.temperature.log_alpha, &[mean_logp], cfg.target_entropy);
    let mut la_param = [agent.temperature.log_alpha];
    agent.opt_temperature.step(&mut la_param, &[gt]);
    agent.temperature.log_alpha = la_param[0];

    soft_update(&mut agent.q1_target, &agent.q1, cfg.tau);
    soft_update(&mut agent.q2_target, &agent.q2, cfg.tau);

    let losses = Losses {
        critic: l1 + l2,
        actor: la,
        temperature: lt,
        alpha: agent.temperature.alpha(),
        mean_log_prob: mean_logp,
    };
    if !(losses.critic.is_finite() && losses.actor.is_finite() && losses.alpha.is_finite()) {
        return Err(Error::Divergence {
            episode: 0,
            detail: format!("non-finite loss {losses:?}"),
        });
    }
    Ok(losses)
}

/// One row of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub reward: f64,
    pub n_legs: u8,
    pub triggered: bool,
    /// Time to contact at the trigger, s.
    pub tau_trg: Option<f64>,
    pub plane_angle: f64,
    pub speed: f64,
    pub flight_angle: f64,
}

/// Result of one training episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEpisode {
    pub decisions: Vec<Decision>,
    pub reward: f64,
    pub log: EpisodeLog,
}

/// An episodic environment the trainer can sample.
pub trait Task {
    fn run(&self, policy: &dyn Policy, seed: u64) -> Result<TaskEpisode>;
    fn norm(&self) -> ObsNorm {
        ObsNorm::default()
    }
}

/// Random trigger time and rotation for the warm-up episodes.
#[derive(Debug, Clone, Copy)]
pub struct WarmupPolicy {
    pub tau_trigger: f64,
    pub rotation: f64,
}

impl WarmupPolicy {
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, tau_span: f64) -> Self {
        WarmupPolicy {
            tau_trigger: rng.random_range(0.0..tau_span),
            rotation: rng.random_range(-1.0..1.0),
        }
    }
}

impl Policy for WarmupPolicy {
    fn act(&self, obs: &Observation, rng: &mut dyn RngCore) -> Action {
        let magnitude: f64 = rng.random_range(0.05..1.0);
        Action {
            trigger: if obs.tau <= self.tau_trigger { magnitude } else { -magnitude },
            rotation: self.rotation,
        }
    }
}

/// Landing attempts sampled from a training distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PerchTask {
    pub env: Env,
    pub distribution: TrainingDistribution,
}

impl Task for PerchTask {
    fn run(&self, policy: &dyn Policy, seed: u64) -> Result<TaskEpisode> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (condition, surface) = self.distribution.sample(&mut rng);
        let rollout = self
            .env
            .run_episode(policy, condition, &surface, rng.next_u64(), false)?;
        let r = &rollout.result;
        Ok(TaskEpisode {
            reward: r.reward_scalar,
            log: EpisodeLog {
                episode: 0,
                reward: r.reward_scalar,
                n_legs: r.n_legs,
                triggered: r.triggered,
                tau_trg: r.tau_trg,
                plane_angle: surface.theta_plane,
                speed: condition.speed,
                flight_angle: condition.flight_angle,
            },
            decisions: rollout.decisions,
        })
    }
}

/// Stores an episode's queries according to `cfg.scheme`; returns the
/// number of transitions added.
pub fn push_episode<R: Rng + ?Sized>(
    buffer: &mut ReplayBuffer,
    episode: &TaskEpisode,
    norm: &ObsNorm,
    cfg: &SacConfig,
    rng: &mut R,
) -> usize {
    let d = &episode.decisions;
    if d.is_empty() {
        return 0;
    }
    let last = d.len() - 1;
    let labelled = |k: usize| {
        let x = norm.apply(&d[k].obs);
        Transition {
            obs: x,
            action: d[k].action.as_array(),
            reward: episode.reward,
            next_obs: x,
            terminal: true,
        }
    };
    match cfg.scheme {
        TransitionScheme::TriggerOnly => {
            buffer.push(labelled(last));
            1
        }
        TransitionScheme::PerTick => {
            for k in 0..last {
                buffer.push(Transition {
                    obs: norm.apply(&d[k].obs),
                    action: d[k].action.as_array(),
                    reward: 0.0,
                    next_obs: norm.apply(&d[k + 1].obs),
                    terminal: false,
                });
            }
            buffer.push(labelled(last));
            d.len()
        }
        TransitionScheme::EpisodeReturn => {
            let n = cfg.wait_samples.min(last);
            // Partial Fisher-Yates over the non-final queries.
            let mut idx: Vec<usize> = (0..last).collect();
            for i in 0..n {
                let j = rng.random_range(i..last);
                idx.swap(i, j);
            }
            for &k in &idx[..n] {
                buffer.push(labelled(k));
            }
            buffer.push(labelled(last));
            n + 1
        }
    }
}

/// Trained agent and its learning curve.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub curve: Vec<EpisodeLog>,
    /// Actor with the best 100-episode moving-average reward after warm-up.
    pub best_actor: Actor,
    pub best_episode: usize,
}

/// Runs the SAC loop on `task`. `on_episode` sees every curve row.
pub fn train<T: Task + ?Sized>(
    task: &T,
    cfg: &SacConfig,
    seed: u64,
    mut on_episode: impl FnMut(&EpisodeLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let norm = task.norm();
    let mut agent = Agent::new(cfg, norm, &mut rng);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut curve = Vec::with_capacity(cfg.total_episodes);
    let mut best_actor = agent.actor.clone();
    let mut best_episode = 0;
    let mut best_avg = f64::NEG_INFINITY;
    let mut window_sum = 0.0;
    let mut update_credit = 0.0;

    for ep in 0..cfg.total_episodes {
        let ep_seed = rng.next_u64();
        let episode = if ep < cfg.warmup_episodes {
            let warm = WarmupPolicy::sample(&mut rng, 1.0);
            task.run(&warm, ep_seed)?
        } else {
            let mut policy = agent.policy(false);
            if cfg.episode_noise {
                policy.fixed_noise = Some(standard_noise(&mut rng));
            }
            task.run(&policy, ep_seed)?
        };
        if !episode.reward.is_finite() {
            return Err(Error::Divergence {
                episode: ep,
                detail: format!("reward {}", episode.reward),
            });
        }
        let stored = push_episode(&mut buffer, &episode, &norm, cfg, &mut rng);

        if ep + 1 >= cfg.warmup_episodes && buffer.len() >= cfg.batch_size.min(buffer.capacity()) {
            update_credit += cfg.updates_per_transition * stored as f64;
            let n_updates = update_credit as usize + cfg.updates_per_episode;
            update_credit -= (update_credit as usize) as f64;
            for _ in 0..n_updates {
                let batch = buffer.sample(&mut rng, cfg.batch_size);
                update_step(&mut agent, &batch, cfg, &mut rng).map_err(|e| match e {
                    Error::Divergence { detail, .. } => Error::Divergence { episode: ep, detail },
                    other => other,
                })?;
            }
        }

        let mut log = episode.log;
        log.episode = ep;
        on_episode(&log);
        window_sum += log.reward;
        if curve.len() >= 100 {
            let old: &EpisodeLog = &curve[curve.len() - 100];
            window_sum -= old.reward;
        }
        curve.push(log);
        if ep >= cfg.warmup_episodes && curve.len() >= 100 {
            let avg = window_sum / 100.0;
            if avg > best_avg {
                best_avg = avg;
                best_actor = agent.actor.clone();
                best_episode = ep;
            }
        }
    }
    if best_avg == f64::NEG_INFINITY {
        best_actor = agent.actor.clone();
        best_episode = cfg.total_episodes.saturating_sub(1);
    }
    Ok(TrainOutcome {
        agent,
        curve,
        best_actor,
        best_episode,
    })
}

/// Trailing moving average; entry `i` averages `values[i+1-window..=i]`
/// (shorter at the start).
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for i in 0..values.len() {
        sum += values[i];
        if i >= w {
            sum -= values[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}

/// First episode at which the `window` moving average has improved by
/// less than `tol` (relative) over the preceding `span` episodes. Only
/// averages built entirely from episodes at or after `start` count.
pub fn plateau_episode(
    rewards: &[f64],
    start: usize,
    window: usize,
    span: usize,
    tol: f64,
) -> Option<usize> {
    let ma = moving_average(rewards, window);
    (start + window + span - 1..ma.len()).find(|&i| {
        let before = ma[i - span];
        ma[i] - before < tol * before.abs().max(1e-9)
    })
}

#[cfg(test)]
mod tests;
