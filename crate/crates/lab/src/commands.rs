//! The experiment subcommands. Each one validates its inputs, does its work
//! and writes artifacts into a single output directory.

use std::path::{Path, PathBuf};

use log::{info, warn};
use perch_core::analysis::{
    compare_maps, evaluate_cell, smooth_map, threshold_curve, with_hinge, CellOutcome, MapGrid,
    SuccessCriterion, SuccessMap, ThresholdCurve,
};
use perch_core::env::{Env, Policy};
use perch_core::geometry::RobotGeometry;
use perch_core::math::{deg, rad};
use perch_core::policy::{Actor, ActorPolicy, ObsNorm};
use perch_core::sac::{moving_average, plateau_episode, train, EpisodeLog, PerchTask, TrainOutcome};
use perch_core::sim::{state_points, ApproachCondition, SurfaceSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{digest_of, run_dir, sha256_hex, write_csv, write_json, write_jsonl, Stamp};
use crate::checkpoint::Checkpoint;
use crate::config::{surface, ExperimentConfig};
use crate::error::{LabError, Result};

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    /// 0 means one worker per available core.
    pub workers: usize,
    pub out: Option<PathBuf>,
}

/// Episode seed from a run seed, a purpose tag and an index.
pub fn derived_seed(seed: u64, tag: &str, index: u64) -> u64 {
    let mut h = sha2::Sha256::new();
    use sha2::Digest;
    h.update(seed.to_le_bytes());
    h.update(tag.as_bytes());
    h.update(index.to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| LabError::Config(format!("`--workers`: {e}")))
}

/// Config with the command-line seed applied.
pub fn effective_config(cfg: &ExperimentConfig, opts: &RunOptions) -> ExperimentConfig {
    let mut c = cfg.clone();
    if let Some(s) = opts.seed {
        c.seed = s;
    }
    c
}

fn stamp(cfg: &ExperimentConfig) -> Stamp {
    Stamp {
        config_digest: cfg.digest(),
        seed: cfg.seed,
    }
}

fn prepare(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(ExperimentConfig, Stamp, PathBuf)> {
    let cfg = effective_config(cfg, opts);
    cfg.validate()?;
    let st = stamp(&cfg);
    let dir = run_dir(opts.out.as_deref(), &cfg.output_dir, &st.config_digest)?;
    std::fs::write(dir.join("config.json"), cfg.canonical_json())
        .map_err(|e| LabError::io("writing config.json", e))?;
    Ok((cfg, st, dir))
}

fn env_for(cfg: &ExperimentConfig, geom: RobotGeometry) -> Result<Env> {
    Ok(Env::new(geom, cfg.env_config()?)?)
}

// ---------------------------------------------------------------- train

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub reward: f64,
    pub n_legs: u8,
    pub triggered: bool,
    pub tau_trg_s: Option<f64>,
    pub plane_angle_deg: f64,
    pub speed_m_s: f64,
    pub flight_angle_deg: f64,
}

impl From<&EpisodeLog> for CurveRow {
    fn from(l: &EpisodeLog) -> Self {
        CurveRow {
            episode: l.episode,
            reward: l.reward,
            n_legs: l.n_legs,
            triggered: l.triggered,
            tau_trg_s: l.tau_trg,
            plane_angle_deg: deg(l.plane_angle),
            speed_m_s: l.speed,
            flight_angle_deg: deg(l.flight_angle),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub seed: u64,
    /// Mean reward over the last `SELECTION_WINDOW` episodes.
    pub final_mean_reward: f64,
    pub final_four_leg_rate: f64,
    pub best_episode: usize,
    pub plateau_episode: Option<usize>,
    pub final_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub selected_restart: usize,
    pub restarts: Vec<RestartSummary>,
    pub episodes: usize,
    pub warmup_episodes: usize,
}

/// Episodes averaged to rank restarts.
pub const SELECTION_WINDOW: usize = 200;

fn summarize(r: usize, seed: u64, out: &TrainOutcome, warmup: usize) -> RestartSummary {
    let n = out.curve.len();
    let tail = &out.curve[n.saturating_sub(SELECTION_WINDOW)..];
    let rewards: Vec<f64> = out.curve.iter().map(|l| l.reward).collect();
    RestartSummary {
        restart: r,
        seed,
        final_mean_reward: tail.iter().map(|l| l.reward).sum::<f64>() / tail.len().max(1) as f64,
        final_four_leg_rate: tail.iter().filter(|l| l.n_legs == 4).count() as f64
            / tail.len().max(1) as f64,
        best_episode: out.best_episode,
        plateau_episode: plateau_episode(&rewards, warmup, 100, 200, 0.01),
        final_alpha: out.agent.temperature.alpha(),
    }
}

/// Trains every restart and returns them with the index of the best one.
pub fn train_restarts(
    cfg: &ExperimentConfig,
    pool: &rayon::ThreadPool,
) -> Result<(Vec<TrainOutcome>, TrainReport)> {
    let sac = cfg.sac_config()?;
    let task = PerchTask {
        env: env_for(cfg, cfg.geometry()?)?,
        distribution: cfg.training_distribution()?,
    };
    let seeds: Vec<u64> = (0..cfg.training.restarts)
        .map(|r| derived_seed(cfg.seed, "train", r as u64))
        .collect();
    let outcomes: Vec<TrainOutcome> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&s| train(&task, &sac, s, |_| {}))
            .collect::<perch_core::Result<Vec<_>>>()
    })?;
    let restarts: Vec<RestartSummary> = outcomes
        .iter()
        .enumerate()
        .map(|(r, o)| summarize(r, seeds[r], o, sac.warmup_episodes))
        .collect();
    // Ties go to the lowest index.
    let selected = restarts
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| {
            if r.final_mean_reward > restarts[best].final_mean_reward {
                i
            } else {
                best
            }
        });
    for r in &restarts {
        info!(
            "restart {} seed {}: final reward {:.3}, four-leg {:.3}",
            r.restart, r.seed, r.final_mean_reward, r.final_four_leg_rate
        );
    }
    Ok((
        outcomes,
        TrainReport {
            selected_restart: selected,
            restarts,
            episodes: sac.total_episodes,
            warmup_episodes: sac.warmup_episodes,
        },
    ))
}

/// Output of `train`: where things went and the selected outcome.
pub struct TrainArtifacts {
    pub dir: PathBuf,
    pub checkpoint: PathBuf,
    pub report: TrainReport,
    pub outcome: TrainOutcome,
}

pub fn cmd_train(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<TrainArtifacts> {
    let (cfg, st, dir) = prepare(cfg, opts)?;
    let pool = thread_pool(opts.workers)?;
    let (mut outcomes, report) = train_restarts(&cfg, &pool)?;
    let outcome = outcomes.swap_remove(report.selected_restart);
    let ck = Checkpoint::from_agent(
        &outcome.agent,
        &outcome.best_actor,
        &st.config_digest,
        cfg.seed,
        report.selected_restart,
        outcome.curve.len(),
        outcome.best_episode,
    );
    let checkpoint = dir.join("checkpoint.bin");
    ck.save(&checkpoint)?;
    let rows: Vec<CurveRow> = outcome.curve.iter().map(CurveRow::from).collect();
    write_csv(&dir.join("learning_curve.csv"), &st, &rows)?;
    let rewards: Vec<f64> = outcome.curve.iter().map(|l| l.reward).collect();
    #[derive(Serialize)]
    struct Summary<'a> {
        report: &'a TrainReport,
        moving_average_100_final: f64,
        checkpoint_sha256: String,
    }
    write_json(
        &dir.join("train_summary.json"),
        &st,
        &Summary {
            report: &report,
            moving_average_100_final: moving_average(&rewards, 100).last().copied().unwrap_or(0.0),
            checkpoint_sha256: sha256_hex(&ck.to_bytes()),
        },
    )?;
    Ok(TrainArtifacts {
        dir,
        checkpoint,
        report,
        outcome,
    })
}

// ------------------------------------------------------------------ map

/// Every cell of `grid` evaluated in parallel; output order is row-major
/// and independent of the worker count.
#[allow(clippy::too_many_arguments)]
pub fn parallel_outcomes<P: Policy + Sync>(
    env: &Env,
    policy: &P,
    surface: &SurfaceSpec,
    grid: &MapGrid,
    trials: u32,
    seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<CellOutcome>> {
    if trials == 0 {
        return Err(LabError::Config("`evaluation.trials`: must be >= 1".into()));
    }
    let cells: Vec<(usize, usize)> = grid.cells().collect();
    let per_cell = pool.install(|| {
        cells
            .par_iter()
            .map(|&c| evaluate_cell(env, policy, surface, grid, c, trials, seed))
            .collect::<perch_core::Result<Vec<_>>>()
    })?;
    Ok(per_cell.into_iter().flatten().collect())
}

#[allow(clippy::too_many_arguments)]
pub fn parallel_map<P: Policy + Sync>(
    env: &Env,
    policy: &P,
    surface: &SurfaceSpec,
    grid: &MapGrid,
    trials: u32,
    seed: u64,
    criterion: SuccessCriterion,
    pool: &rayon::ThreadPool,
) -> Result<(SuccessMap, Vec<CellOutcome>)> {
    let outcomes = parallel_outcomes(env, policy, surface, grid, trials, seed, pool)?;
    let map = SuccessMap::from_outcomes(grid.clone(), criterion, &outcomes)?;
    Ok((map, outcomes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRow {
    pub speed_m_s: f64,
    pub angle_deg: f64,
    pub rate_raw: f64,
    pub rate_smoothed: f64,
    pub trials: u32,
    pub criterion: String,
}

pub fn map_rows(raw: &SuccessMap, smoothed: &SuccessMap) -> Vec<MapRow> {
    raw.grid
        .cells()
        .map(|(i, j)| MapRow {
            speed_m_s: raw.grid.speeds[i],
            angle_deg: deg(raw.grid.angles[j]),
            rate_raw: raw.rate(i, j),
            rate_smoothed: smoothed.rate(i, j),
            trials: raw.trials[i * raw.grid.angles.len() + j],
            criterion: raw.criterion.as_str().into(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub surface: SurfaceSpec,
    pub surface_deg: f64,
    pub surface_digest: String,
    pub geometry: RobotGeometry,
    pub geometry_digest: String,
    pub checkpoint_sha256: String,
    pub actor: String,
    pub deterministic: bool,
    pub trials: u32,
    pub smoothing_sigma_cells: f64,
    pub criterion: String,
    pub n_speeds: usize,
    pub n_angles: usize,
    pub mean_rate_raw: f64,
}

pub fn map_file_stem(surface_deg: f64) -> String {
    format!("map_theta{:03}", surface_deg.round() as i64)
}

/// Loads the checkpoint and warns when it came from another config.
pub fn load_checkpoint(path: &Path, cfg_digest: &str) -> Result<(Checkpoint, String)> {
    let bytes =
        std::fs::read(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
    let ck = Checkpoint::from_bytes(&bytes)?;
    if ck.header.config_digest != cfg_digest {
        warn!("checkpoint was trained under config {}", &ck.header.config_digest[..12]);
    }
    Ok((ck, sha256_hex(&bytes)))
}

pub struct MapArtifacts {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub maps: Vec<SuccessMap>,
}

/// Raw and smoothed maps of `actor` on every configured surface.
pub fn cmd_map(cfg: &ExperimentConfig, checkpoint: &Path, opts: &RunOptions) -> Result<MapArtifacts> {
    let (cfg, st, dir) = prepare(cfg, opts)?;
    let (ck, ck_sha) = load_checkpoint(checkpoint, &st.config_digest)?;
    let geom = cfg.geometry()?;
    let env = env_for(&cfg, geom.clone())?;
    let pool = thread_pool(opts.workers)?;
    let ev = &cfg.evaluation;
    let policy = ActorPolicy::new(ck.actor_named(&ev.actor), ck.header.norm, ev.deterministic);
    let criterion = cfg.criterion()?;
    let mut files = Vec::new();
    let mut maps = Vec::new();
    for &theta in &cfg.surfaces_deg {
        let s = surface(theta)?;
        let grid = cfg.map_grid(&s)?;
        let (raw, outcomes) =
            parallel_map(&env, &policy, &s, &grid, ev.trials, cfg.seed, criterion, &pool)?;
        let smoothed = smooth_map(&raw, ev.smoothing_sigma_cells)?;
        let stem = map_file_stem(theta);
        let csv_path = dir.join(format!("{stem}.csv"));
        write_csv(&csv_path, &st, &map_rows(&raw, &smoothed))?;
        write_jsonl(&dir.join(format!("{stem}_episodes.jsonl")), &st, &outcomes)?;
        write_json(
            &dir.join(format!("{stem}.json")),
            &st,
            &MapSidecar {
                surface: s,
                surface_deg: theta,
                surface_digest: digest_of(&s),
                geometry: geom.clone(),
                geometry_digest: digest_of(&geom),
                checkpoint_sha256: ck_sha.clone(),
                actor: ev.actor.clone(),
                deterministic: ev.deterministic,
                trials: ev.trials,
                smoothing_sigma_cells: ev.smoothing_sigma_cells,
                criterion: criterion.as_str().into(),
                n_speeds: grid.speeds.len(),
                n_angles: grid.angles.len(),
                mean_rate_raw: raw.mean_rate(),
            },
        )?;
        info!("surface {theta}°: mean rate {:.3}", raw.mean_rate());
        files.push(csv_path);
        maps.push(raw);
    }
    Ok(MapArtifacts { dir, files, maps })
}

// ------------------------------------------------------------ threshold

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub alpha_max_rad_s2: f64,
    /// Empty when no candidate in the search range works.
    pub v_perp_min_m_s: Option<f64>,
}

pub struct ThresholdArtifacts {
    pub dir: PathBuf,
    pub curve: ThresholdCurve,
}

pub fn cmd_threshold(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ThresholdArtifacts> {
    let (cfg, st, dir) = prepare(cfg, opts)?;
    let geom = cfg.geometry()?;
    let s = surface(cfg.threshold.surface_deg)?;
    let curve = threshold_curve(&geom, &cfg.sweeps.alpha_max_rad_s2, &s, &cfg.threshold_options()?)?;
    let rows: Vec<ThresholdRow> = curve
        .alpha_max
        .iter()
        .zip(&curve.v_perp_min)
        .map(|(&a, &v)| ThresholdRow {
            alpha_max_rad_s2: a,
            v_perp_min_m_s: v,
        })
        .collect();
    write_csv(&dir.join("threshold.csv"), &st, &rows)?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        geometry_digest: String,
        surface_digest: String,
        monotone: bool,
        curve: &'a ThresholdCurve,
    }
    write_json(
        &dir.join("threshold.json"),
        &st,
        &Sidecar {
            geometry_digest: digest_of(&geom),
            surface_digest: digest_of(&s),
            monotone: curve.is_monotone(),
            curve: &curve,
        },
    )?;
    Ok(ThresholdArtifacts { dir, curve })
}

// -------------------------------------------------------------- compare

/// Reads a map CSV written by `map` back into a [`SuccessMap`] of raw
/// rates. Angles stay in the file's degrees.
pub fn read_map_csv(path: &Path) -> Result<SuccessMap> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let rows: Vec<MapRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    if rows.is_empty() {
        return Err(LabError::Config(format!("{}: map has no rows", path.display())));
    }
    let mut speeds: Vec<f64> = Vec::new();
    let mut angles: Vec<f64> = Vec::new();
    for r in &rows {
        if !speeds.contains(&r.speed_m_s) {
            speeds.push(r.speed_m_s);
        }
        if !angles.contains(&r.angle_deg) {
            angles.push(r.angle_deg);
        }
    }
    let criterion = match rows[0].criterion.as_str() {
        "four_leg" => SuccessCriterion::FourLeg,
        "any_contact" => SuccessCriterion::AnyContact,
        other => return Err(LabError::Config(format!("unknown criterion `{other}`"))),
    };
    if rows.len() != speeds.len() * angles.len() {
        return Err(LabError::Config(format!("{}: rows do not form a grid", path.display())));
    }
    let grid = MapGrid { speeds, angles };
    let mut rates = vec![0.0; grid.n_cells()];
    let mut trials = vec![0; grid.n_cells()];
    for r in &rows {
        let i = grid.speeds.iter().position(|&s| s == r.speed_m_s).unwrap();
        let j = grid.angles.iter().position(|&a| a == r.angle_deg).unwrap();
        rates[i * grid.angles.len() + j] = r.rate_raw;
        trials[i * grid.angles.len() + j] = r.trials;
    }
    Ok(SuccessMap {
        grid,
        rates,
        trials,
        criterion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffRow {
    pub speed_m_s: f64,
    pub angle_deg: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub map_a_sha256: String,
    pub map_b_sha256: String,
    pub mean_abs_diff: f64,
    pub max_abs_diff: f64,
    pub n_cells: usize,
}

pub fn cmd_compare(a: &Path, b: &Path, opts: &RunOptions) -> Result<(PathBuf, CompareSummary)> {
    let read = |p: &Path| {
        std::fs::read(p).map_err(|e| LabError::io(format!("reading {}", p.display()), e))
    };
    let (sha_a, sha_b) = (sha256_hex(&read(a)?), sha256_hex(&read(b)?));
    let (ma, mb) = (read_map_csv(a)?, read_map_csv(b)?);
    let diff = compare_maps(&ma, &mb).map_err(|e| LabError::Config(e.to_string()))?;
    let digest = sha256_hex(format!("{sha_a}{sha_b}").as_bytes());
    let st = Stamp {
        config_digest: digest.clone(),
        seed: opts.seed.unwrap_or(0),
    };
    let dir = run_dir(opts.out.as_deref(), "runs", &digest)?;
    let rows: Vec<DiffRow> = ma
        .grid
        .cells()
        .map(|(i, j)| {
            let k = i * ma.grid.angles.len() + j;
            DiffRow {
                speed_m_s: ma.grid.speeds[i],
                angle_deg: ma.grid.angles[j],
                rate_a: ma.rates[k],
                rate_b: mb.rates[k],
                abs_diff: diff.abs_diff[k],
            }
        })
        .collect();
    write_csv(&dir.join("diff.csv"), &st, &rows)?;
    let summary = CompareSummary {
        map_a_sha256: sha_a,
        map_b_sha256: sha_b,
        mean_abs_diff: diff.mean_abs,
        max_abs_diff: diff.max_abs,
        n_cells: rows.len(),
    };
    write_json(&dir.join("compare_summary.json"), &st, &summary)?;
    Ok((dir, summary))
}

// ---------------------------------------------------------- hinge sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeRow {
    pub stiffness_nm_rad: f64,
    pub damping_ratio: f64,
    pub speed_m_s: f64,
    pub angle_deg: f64,
    pub rate_raw: f64,
    pub trials: u32,
    pub criterion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeSummaryRow {
    pub stiffness_nm_rad: f64,
    pub damping_ratio: f64,
    pub mean_rate: f64,
    /// Mean over cells with flight angle in [75°, 90°].
    pub near_vertical_rate: Option<f64>,
}

pub struct HingeArtifacts {
    pub dir: PathBuf,
    pub summary: Vec<HingeSummaryRow>,
}

/// Maps of one policy under every `(K, ζ)` pair, on the first configured
/// surface.
pub fn cmd_hinge_sweep(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    opts: &RunOptions,
) -> Result<HingeArtifacts> {
    let (cfg, st, dir) = prepare(cfg, opts)?;
    let (ck, _) = load_checkpoint(checkpoint, &st.config_digest)?;
    let base = env_for(&cfg, cfg.geometry()?)?;
    let pool = thread_pool(opts.workers)?;
    let ev = &cfg.evaluation;
    let policy = ActorPolicy::new(ck.actor_named(&ev.actor), ck.header.norm, ev.deterministic);
    let criterion = cfg.criterion()?;
    let s = surface(cfg.surfaces_deg[0])?;
    let grid = cfg.map_grid(&s)?;
    let settings = perch_core::analysis::hinge_settings(
        &cfg.sweeps.stiffness_nm_rad,
        &cfg.sweeps.damping_ratio,
    )?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for (k, z) in settings {
        let env = with_hinge(&base, k, z)?;
        let (map, _) = parallel_map(&env, &policy, &s, &grid, ev.trials, cfg.seed, criterion, &pool)?;
        for (i, j) in grid.cells() {
            rows.push(HingeRow {
                stiffness_nm_rad: k,
                damping_ratio: z,
                speed_m_s: grid.speeds[i],
                angle_deg: deg(grid.angles[j]),
                rate_raw: map.rate(i, j),
                trials: ev.trials,
                criterion: criterion.as_str().into(),
            });
        }
        summary.push(HingeSummaryRow {
            stiffness_nm_rad: k,
            damping_ratio: z,
            mean_rate: map.mean_rate(),
            near_vertical_rate: map.mean_rate_in_angles(rad(75.0) - 1e-9, rad(90.0) + 1e-9),
        });
        info!("K {k} zeta {z}: mean rate {:.3}", map.mean_rate());
    }
    write_csv(&dir.join("hinge_sweep.csv"), &st, &rows)?;
    write_csv(&dir.join("hinge_summary.csv"), &st, &summary)?;
    Ok(HingeArtifacts { dir, summary })
}

// -------------------------------------------------------------- episode

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRequest {
    pub speed_m_s: f64,
    pub angle_deg: f64,
    pub surface_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time_s: f64,
    pub phase: String,
    pub x_m: f64,
    pub z_m: f64,
    pub pitch_rad: f64,
    pub pitch_rate_rad_s: f64,
    pub hip_angle_rad: f64,
    pub d_pad_m: f64,
    pub d_prop_m: f64,
}

pub fn cmd_episode(
    cfg: &ExperimentConfig,
    checkpoint: &Path,
    req: EpisodeRequest,
    opts: &RunOptions,
) -> Result<PathBuf> {
    let (cfg, st, dir) = prepare(cfg, opts)?;
    let (ck, _) = load_checkpoint(checkpoint, &st.config_digest)?;
    let geom = cfg.geometry()?;
    let env = env_for(&cfg, geom.clone())?;
    let s = surface(req.surface_deg)?;
    if !(req.speed_m_s > 0.0 && req.speed_m_s.is_finite()) {
        return Err(LabError::Config("`--speed-m-s`: must be finite and > 0".into()));
    }
    let cond = ApproachCondition::new(req.speed_m_s, rad(req.angle_deg));
    if !(cond.v_perp(&s) > 0.0) {
        return Err(LabError::Config(
            "`--angle-deg`: the approach does not close on the surface".into(),
        ));
    }
    let ev = &cfg.evaluation;
    let policy = ActorPolicy::new(ck.actor_named(&ev.actor), ck.header.norm, ev.deterministic);
    let rollout = env.run_episode(&policy, cond, &s, cfg.seed, true)?;
    let rows: Vec<TraceRow> = rollout
        .trajectory
        .as_deref()
        .unwrap_or_default()
        .iter()
        .map(|state| {
            let pts = state_points(state, &geom);
            let d_pad = s.signed_distance(pts.pad_front).min(s.signed_distance(pts.pad_rear));
            let d_prop = pts
                .prop_points
                .iter()
                .map(|p| s.signed_distance(*p))
                .fold(f64::INFINITY, f64::min);
            TraceRow {
                time_s: state.time,
                phase: state.phase.as_str().into(),
                x_m: state.position.x,
                z_m: state.position.z,
                pitch_rad: state.pitch,
                pitch_rate_rad_s: state.pitch_rate,
                hip_angle_rad: state.hip_angle,
                d_pad_m: d_pad,
                d_prop_m: d_prop,
            }
        })
        .collect();
    write_csv(&dir.join("episode_trace.csv"), &st, &rows)?;
    write_json(&dir.join("episode_result.json"), &st, &rollout.result)?;
    Ok(dir)
}

/// Actor policy with the observation normalization of its checkpoint.
pub fn policy_of<'a>(actor: &'a Actor, norm: ObsNorm, deterministic: bool) -> ActorPolicy<'a> {
    ActorPolicy::new(actor, norm, deterministic)
}
