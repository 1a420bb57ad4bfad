//! Experiment configuration: one JSON document whose keys carry their units.
//!
//! Every block except `robot` has defaults. Unknown keys are rejected, and
//! [`ExperimentConfig::validate`] checks every derived core value before a
//! command starts.

use std::path::Path;

use perch_core::analysis::{MapGrid, SuccessCriterion, ThresholdOptions};
use perch_core::env::{EnvConfig, RewardScales, TrainingDistribution};
use perch_core::geometry::{scale_geometry, RobotGeometry};
use perch_core::math::{rad, Vec2};
use perch_core::sac::{SacConfig, TransitionScheme};
use perch_core::sim::{ApproachMode, SurfaceSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::LabError;

fn config_err(field: &str, reason: impl std::fmt::Display) -> LabError {
    LabError::Config(format!("`{field}`: {reason}"))
}

fn core_err(block: &str, e: perch_core::Error) -> LabError {
    match e {
        perch_core::Error::InvalidParameter { field, reason } => {
            config_err(&format!("{block}.{field}"), reason)
        }
        other => config_err(block, other),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
    pub robot: RobotBlock,
    #[serde(default)]
    pub env: EnvBlock,
    /// Landing-plane angles evaluated by `map` and `hinge-sweep`.
    #[serde(default = "default_surfaces")]
    pub surfaces_deg: Vec<f64>,
    #[serde(default)]
    pub training: TrainingBlock,
    #[serde(default)]
    pub evaluation: EvaluationBlock,
    #[serde(default)]
    pub sweeps: SweepBlock,
    #[serde(default)]
    pub threshold: ThresholdBlock,
}

fn default_output_dir() -> String {
    "runs".into()
}

fn default_surfaces() -> Vec<f64> {
    vec![0.0, 45.0, 90.0, 135.0, 180.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotBlock {
    /// `source_one_semi_narrow_short`, `source_one_wide_long`,
    /// `impulse_micro_semi_narrow_short` or `impulse_micro_wide_long`.
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub custom: Option<CustomGeometry>,
    /// Uniform geometric scale applied after the preset or custom block.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub alpha_max_rad_s2: Option<f64>,
    #[serde(default)]
    pub hip_stiffness_nm_rad: Option<f64>,
    #[serde(default)]
    pub hip_damping_ratio: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomGeometry {
    pub mass_kg: f64,
    pub inertia_yy_kg_m2: f64,
    pub forward_reach_m: f64,
    /// Front hip `[x, z]` in the body frame.
    pub leg_mount_offset_m: [f64; 2],
    pub leg_length_m: f64,
    pub leg_mount_angle_deg: f64,
    pub prop_offsets_m: Vec<[f64; 2]>,
    /// `null` selects a rigid hip.
    pub hip_stiffness_nm_rad: Option<f64>,
    pub hip_damping_ratio: f64,
    pub alpha_max_rad_s2: f64,
    pub motor_time_constant_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvBlock {
    pub physics_dt_s: f64,
    pub policy_period_steps: usize,
    pub tau_start_s: f64,
    pub tau_max_s: f64,
    pub theta_x_guard_m: f64,
    pub post_trigger_timeout_s: f64,
    pub k1_per_s: f64,
    pub k2_per_m: f64,
    /// `ideal` or `motor_lag`.
    pub approach_mode: String,
}

impl Default for EnvBlock {
    fn default() -> Self {
        let c = EnvConfig::default();
        EnvBlock {
            physics_dt_s: c.physics_dt,
            policy_period_steps: c.policy_every,
            tau_start_s: c.tau_start,
            tau_max_s: c.tau_max,
            theta_x_guard_m: c.theta_x_guard,
            post_trigger_timeout_s: c.post_trigger_timeout,
            k1_per_s: c.reward.k1,
            k2_per_m: c.reward.k2,
            approach_mode: "ideal".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingBlock {
    pub episodes: usize,
    pub warmup_episodes: usize,
    /// Independent runs from derived seeds; the best final average wins.
    pub restarts: usize,
    pub plane_angles_deg: Vec<f64>,
    pub speed_min_m_s: f64,
    pub speed_max_m_s: f64,
    pub angle_margin_deg: f64,
    pub discount: f64,
    pub target_update_rate: f64,
    pub batch_size: usize,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub lr_temperature: f64,
    pub initial_temperature: f64,
    pub target_entropy: f64,
    pub buffer_capacity: usize,
    pub updates_per_transition: f64,
    pub updates_per_episode: usize,
    pub episode_noise: bool,
    pub initial_trigger_bias: f64,
    /// `episode_return`, `per_tick` or `trigger_only`.
    pub transition_scheme: String,
    pub wait_samples: usize,
}

impl Default for TrainingBlock {
    fn default() -> Self {
        let s = SacConfig::default();
        let d = TrainingDistribution::default();
        TrainingBlock {
            episodes: s.total_episodes,
            warmup_episodes: s.warmup_episodes,
            restarts: 1,
            plane_angles_deg: default_surfaces(),
            speed_min_m_s: d.speed_min,
            speed_max_m_s: d.speed_max,
            angle_margin_deg: perch_core::math::deg(d.angle_margin),
            discount: s.discount,
            target_update_rate: s.tau,
            batch_size: s.batch_size,
            lr_actor: s.lr_actor,
            lr_critic: s.lr_critic,
            lr_temperature: s.lr_temperature,
            initial_temperature: s.initial_temperature,
            target_entropy: s.target_entropy,
            buffer_capacity: s.buffer_capacity,
            updates_per_transition: s.updates_per_transition,
            updates_per_episode: s.updates_per_episode,
            episode_noise: s.episode_noise,
            initial_trigger_bias: s.initial_trigger_bias,
            transition_scheme: "episode_return".into(),
            wait_samples: s.wait_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationBlock {
    pub speed_min_m_s: f64,
    pub speed_max_m_s: f64,
    pub n_speeds: usize,
    pub n_angles: usize,
    pub angle_margin_deg: f64,
    pub trials: u32,
    pub smoothing_sigma_cells: f64,
    /// `four_leg` or `any_contact`.
    pub criterion: String,
    /// Act on the Gaussian mean instead of sampling.
    pub deterministic: bool,
    /// `final` or `best` actor of the checkpoint.
    pub actor: String,
}

impl Default for EvaluationBlock {
    fn default() -> Self {
        EvaluationBlock {
            speed_min_m_s: 0.5,
            speed_max_m_s: 5.0,
            n_speeds: 10,
            n_angles: 17,
            angle_margin_deg: 5.0,
            trials: 5,
            smoothing_sigma_cells: 1.0,
            criterion: "four_leg".into(),
            deterministic: true,
            actor: "final".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub stiffness_nm_rad: Vec<f64>,
    pub damping_ratio: Vec<f64>,
    pub alpha_max_rad_s2: Vec<f64>,
}

impl Default for SweepBlock {
    fn default() -> Self {
        SweepBlock {
            stiffness_nm_rad: vec![0.4, 1.4, 8.5],
            damping_ratio: vec![0.3, 1.0, 2.0],
            alpha_max_rad_s2: vec![30.0, 60.0, 90.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdBlock {
    pub surface_deg: f64,
    pub v_step_m_s: f64,
    pub v_max_m_s: f64,
    pub d_step_m: f64,
    pub d_max_m: f64,
    pub dt_s: f64,
    pub t_max_s: f64,
}

impl Default for ThresholdBlock {
    fn default() -> Self {
        let o = ThresholdOptions::default();
        ThresholdBlock {
            surface_deg: 0.0,
            v_step_m_s: o.v_step,
            v_max_m_s: o.v_max,
            d_step_m: o.d_step,
            d_max_m: o.d_max,
            dt_s: o.dt,
            t_max_s: o.t_max,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Canonical serialization; the digest is taken over these bytes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Hex SHA-256 of the canonical form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), LabError> {
        self.geometry()?;
        self.env_config()?;
        self.sac_config()?;
        self.training_distribution()?;
        if self.training.restarts == 0 {
            return Err(config_err("training.restarts", "must be >= 1"));
        }
        if self.surfaces_deg.is_empty() {
            return Err(config_err("surfaces_deg", "must not be empty"));
        }
        for &s in &self.surfaces_deg {
            let surface = surface(s).map_err(|e| core_err("surfaces_deg", e))?;
            self.map_grid(&surface)?;
        }
        let ev = &self.evaluation;
        if ev.trials == 0 {
            return Err(config_err("evaluation.trials", "must be >= 1"));
        }
        if !(ev.smoothing_sigma_cells >= 0.0 && ev.smoothing_sigma_cells.is_finite()) {
            return Err(config_err("evaluation.smoothing_sigma_cells", "must be finite and >= 0"));
        }
        self.criterion()?;
        if !matches!(ev.actor.as_str(), "final" | "best") {
            return Err(config_err("evaluation.actor", "must be `final` or `best`"));
        }
        let sw = &self.sweeps;
        for (name, list) in [
            ("sweeps.stiffness_nm_rad", &sw.stiffness_nm_rad),
            ("sweeps.damping_ratio", &sw.damping_ratio),
            ("sweeps.alpha_max_rad_s2", &sw.alpha_max_rad_s2),
        ] {
            if list.is_empty() {
                return Err(config_err(name, "must not be empty"));
            }
            if list.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(config_err(name, "entries must be finite and >= 0"));
            }
        }
        if sw.alpha_max_rad_s2.iter().any(|&a| a <= 0.0) {
            return Err(config_err("sweeps.alpha_max_rad_s2", "entries must be > 0"));
        }
        self.threshold_options()?;
        surface(self.threshold.surface_deg).map_err(|e| core_err("threshold.surface_deg", e))?;
        Ok(())
    }

    pub fn geometry(&self) -> Result<RobotGeometry, LabError> {
        let r = &self.robot;
        let base = match (&r.preset, &r.custom) {
            (Some(name), None) => match name.as_str() {
                "source_one_semi_narrow_short" => RobotGeometry::source_one_semi_narrow_short(),
                "source_one_wide_long" => RobotGeometry::source_one_wide_long(),
                "impulse_micro_semi_narrow_short" => RobotGeometry::impulse_micro_semi_narrow_short(),
                "impulse_micro_wide_long" => RobotGeometry::impulse_micro_wide_long(),
                other => return Err(config_err("robot.preset", format!("unknown preset `{other}`"))),
            },
            (None, Some(c)) => RobotGeometry {
                mass: c.mass_kg,
                inertia_yy: c.inertia_yy_kg_m2,
                forward_reach: c.forward_reach_m,
                leg_mount_offset: Vec2::new(c.leg_mount_offset_m[0], c.leg_mount_offset_m[1]),
                leg_length: c.leg_length_m,
                leg_mount_angle: rad(c.leg_mount_angle_deg),
                prop_offsets: c.prop_offsets_m.iter().map(|p| Vec2::new(p[0], p[1])).collect(),
                hip_stiffness: c.hip_stiffness_nm_rad.unwrap_or(f64::INFINITY),
                hip_damping_ratio: c.hip_damping_ratio,
                alpha_max: c.alpha_max_rad_s2,
                motor_time_constant: c.motor_time_constant_s,
            },
            _ => {
                return Err(config_err(
                    "robot",
                    "set exactly one of `robot.preset` and `robot.custom`",
                ))
            }
        };
        base.validate().map_err(|e| core_err("robot", e))?;
        let mut g = scale_geometry(&base, r.scale).map_err(|e| core_err("robot.scale", e))?;
        if let Some(a) = r.alpha_max_rad_s2 {
            g.alpha_max = a;
        }
        if let Some(k) = r.hip_stiffness_nm_rad {
            g.hip_stiffness = k;
        }
        if let Some(z) = r.hip_damping_ratio {
            g.hip_damping_ratio = z;
        }
        g.validate().map_err(|e| core_err("robot", e))?;
        Ok(g)
    }

    pub fn env_config(&self) -> Result<EnvConfig, LabError> {
        let e = &self.env;
        let approach_mode = match e.approach_mode.as_str() {
            "ideal" => ApproachMode::Ideal,
            "motor_lag" => ApproachMode::MotorLag,
            _ => return Err(config_err("env.approach_mode", "must be `ideal` or `motor_lag`")),
        };
        let c = EnvConfig {
            physics_dt: e.physics_dt_s,
            policy_every: e.policy_period_steps,
            tau_start: e.tau_start_s,
            tau_max: e.tau_max_s,
            theta_x_guard: e.theta_x_guard_m,
            post_trigger_timeout: e.post_trigger_timeout_s,
            reward: RewardScales {
                k1: e.k1_per_s,
                k2: e.k2_per_m,
            },
            approach_mode,
        };
        c.validate().map_err(|e| core_err("env", e))?;
        Ok(c)
    }

    pub fn sac_config(&self) -> Result<SacConfig, LabError> {
        let t = &self.training;
        let scheme = match t.transition_scheme.as_str() {
            "episode_return" => TransitionScheme::EpisodeReturn,
            "per_tick" => TransitionScheme::PerTick,
            "trigger_only" => TransitionScheme::TriggerOnly,
            _ => {
                return Err(config_err(
                    "training.transition_scheme",
                    "must be `episode_return`, `per_tick` or `trigger_only`",
                ))
            }
        };
        let c = SacConfig {
            discount: t.discount,
            tau: t.target_update_rate,
            batch_size: t.batch_size,
            lr_actor: t.lr_actor,
            lr_critic: t.lr_critic,
            lr_temperature: t.lr_temperature,
            initial_temperature: t.initial_temperature,
            target_entropy: t.target_entropy,
            buffer_capacity: t.buffer_capacity,
            updates_per_transition: t.updates_per_transition,
            updates_per_episode: t.updates_per_episode,
            warmup_episodes: t.warmup_episodes,
            total_episodes: t.episodes,
            episode_noise: t.episode_noise,
            initial_trigger_bias: t.initial_trigger_bias,
            scheme,
            wait_samples: t.wait_samples,
        };
        c.validate().map_err(|e| core_err("training", e))?;
        if c.total_episodes == 0 {
            return Err(config_err("training.episodes", "must be >= 1"));
        }
        Ok(c)
    }

    pub fn training_distribution(&self) -> Result<TrainingDistribution, LabError> {
        let t = &self.training;
        let d = TrainingDistribution {
            plane_angles: t.plane_angles_deg.iter().map(|&a| rad(a)).collect(),
            speed_min: t.speed_min_m_s,
            speed_max: t.speed_max_m_s,
            angle_margin: rad(t.angle_margin_deg),
        };
        d.validate().map_err(|e| core_err("training", e))?;
        Ok(d)
    }

    pub fn map_grid(&self, surface: &SurfaceSpec) -> Result<MapGrid, LabError> {
        let e = &self.evaluation;
        MapGrid::for_surface(
            surface,
            e.speed_min_m_s,
            e.speed_max_m_s,
            e.n_speeds,
            e.n_angles,
            rad(e.angle_margin_deg),
        )
        .map_err(|err| core_err("evaluation", err))
    }

    pub fn criterion(&self) -> Result<SuccessCriterion, LabError> {
        match self.evaluation.criterion.as_str() {
            "four_leg" => Ok(SuccessCriterion::FourLeg),
            "any_contact" => Ok(SuccessCriterion::AnyContact),
            _ => Err(config_err("evaluation.criterion", "must be `four_leg` or `any_contact`")),
        }
    }

    pub fn threshold_options(&self) -> Result<ThresholdOptions, LabError> {
        let t = &self.threshold;
        let o = ThresholdOptions {
            v_step: t.v_step_m_s,
            v_max: t.v_max_m_s,
            d_step: t.d_step_m,
            d_max: t.d_max_m,
            dt: t.dt_s,
            t_max: t.t_max_s,
        };
        o.validate().map_err(|e| core_err("threshold", e))?;
        Ok(o)
    }

    pub fn surfaces(&self) -> Vec<SurfaceSpec> {
        self.surfaces_deg.iter().map(|&d| SurfaceSpec::new(rad(d))).collect()
    }
}

/// Default surface at `theta_deg`, validated.
pub fn surface(theta_deg: f64) -> perch_core::Result<SurfaceSpec> {
    let s = SurfaceSpec::new(rad(theta_deg));
    s.validate()?;
    Ok(s)
}
