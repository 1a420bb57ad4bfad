//! Landing-envelope evaluation: success maps over (speed, flight angle),
//! smoothing, map differences, hinge sweeps and the perpendicular-velocity
//! threshold predictor.

mod threshold;

pub use threshold::{
    first_contact, predict_velocity_threshold, threshold_curve, ContactOrder, ThresholdCurve,
    ThresholdOptions,
};

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::{flight_angle_range, Env, EpisodeResult, Policy};
use crate::error::{invalid, Error, Result};
use crate::math::exp;
use crate::sim::{ApproachCondition, SurfaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SuccessCriterion {
    /// Both pads attached and the body settled.
    #[default]
    FourLeg,
    /// At least one pad touched.
    AnyContact,
}

impl SuccessCriterion {
    pub fn holds(self, r: &EpisodeResult) -> bool {
        match self {
            SuccessCriterion::FourLeg => r.n_legs == 4,
            SuccessCriterion::AnyContact => r.n_legs > 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SuccessCriterion::FourLeg => "four_leg",
            SuccessCriterion::AnyContact => "any_contact",
        }
    }
}

/// Speeds (m/s) and flight angles (rad) of a polar map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGrid {
    pub speeds: Vec<f64>,
    pub angles: Vec<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

impl MapGrid {
    /// `n_speeds` speeds from `v_min` to `v_max` and `n_angles` cell-centred
    /// flight angles spanning the admissible range of `surface`.
    pub fn for_surface(
        surface: &SurfaceSpec,
        v_min: f64,
        v_max: f64,
        n_speeds: usize,
        n_angles: usize,
        margin: f64,
    ) -> Result<Self> {
        if n_speeds == 0 || n_angles == 0 {
            return Err(invalid("grid", "needs at least one speed and one angle"));
        }
        if !(v_min > 0.0 && v_max >= v_min) {
            return Err(invalid("speed", "need 0 < v_min <= v_max"));
        }
        let (lo, hi) = flight_angle_range(surface.theta_plane, margin);
        if !(lo < hi) {
            return Err(invalid("angle_margin", "leaves no admissible flight angle"));
        }
        let speeds = if n_speeds == 1 {
            vec![v_min]
        } else {
            (0..n_speeds)
                .map(|i| v_min + (v_max - v_min) * i as f64 / (n_speeds - 1) as f64)
                .collect()
        };
        let angles = (0..n_angles)
            .map(|j| lo + (hi - lo) * (j as f64 + 0.5) / n_angles as f64)
            .collect();
        let g = MapGrid { speeds, angles };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.speeds.is_empty() || self.angles.is_empty() {
            return Err(invalid("grid", "needs at least one speed and one angle"));
        }
        if !strictly_increasing(&self.speeds) || self.speeds[0] <= 0.0 {
            return Err(invalid("speeds", "must be positive and strictly increasing"));
        }
        if !strictly_increasing(&self.angles) {
            return Err(invalid("angles", "must be strictly increasing"));
        }
        Ok(())
    }

    pub fn n_cells(&self) -> usize {
        self.speeds.len() * self.angles.len()
    }

    /// Row-major `(speed, angle)` index pairs.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.angles.len();
        (0..self.n_cells()).map(move |k| (k / n, k % n))
    }
}

/// Success rates on a grid; `rates[i * n_angles + j]` is speed `i`, angle `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessMap {
    pub grid: MapGrid,
    pub rates: Vec<f64>,
    pub trials: Vec<u32>,
    pub criterion: SuccessCriterion,
}

impl SuccessMap {
    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[i * self.grid.angles.len() + j]
    }

    pub fn mean_rate(&self) -> f64 {
        self.rates.iter().sum::<f64>() / self.rates.len().max(1) as f64
    }

    /// Mean rate over the cells whose flight angle lies in `[lo, hi]`.
    pub fn mean_rate_in_angles(&self, lo: f64, hi: f64) -> Option<f64> {
        let (mut sum, mut n) = (0.0, 0usize);
        for (i, j) in self.grid.cells() {
            let a = self.grid.angles[j];
            if a >= lo && a <= hi {
                sum += self.rate(i, j);
                n += 1;
            }
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// Aggregates per-episode outcomes; every cell of `grid` must appear.
    pub fn from_outcomes(
        grid: MapGrid,
        criterion: SuccessCriterion,
        outcomes: &[CellOutcome],
    ) -> Result<Self> {
        let n = grid.n_cells();
        let mut successes = vec![0u32; n];
        let mut trials = vec![0u32; n];
        for o in outcomes {
            if o.speed_index >= grid.speeds.len() || o.angle_index >= grid.angles.len() {
                return Err(Error::GridMismatch(format!(
                    "outcome cell ({}, {}) outside the grid",
                    o.speed_index, o.angle_index
                )));
            }
            let k = o.speed_index * grid.angles.len() + o.angle_index;
            trials[k] += 1;
            if o.success(criterion) {
                successes[k] += 1;
            }
        }
        if trials.contains(&0) {
            return Err(Error::GridMismatch("a cell has no trials".into()));
        }
        let rates = successes
            .iter()
            .zip(&trials)
            .map(|(s, t)| *s as f64 / *t as f64)
            .collect();
        Ok(SuccessMap {
            grid,
            rates,
            trials,
            criterion,
        })
    }
}

/// One evaluation episode of a map cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub speed_index: usize,
    pub angle_index: usize,
    pub trial: u32,
    pub seed: u64,
    pub n_legs: u8,
    pub reward: f64,
}

impl CellOutcome {
    pub fn success(&self, criterion: SuccessCriterion) -> bool {
        match criterion {
            SuccessCriterion::FourLeg => self.n_legs == 4,
            SuccessCriterion::AnyContact => self.n_legs > 0,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Episode seed of one trial, independent of evaluation order.
pub fn trial_seed(seed: u64, speed_index: usize, angle_index: usize, trial: u32) -> u64 {
    let mut h = splitmix64(seed);
    for v in [speed_index as u64, angle_index as u64, trial as u64] {
        h = splitmix64(h ^ v);
    }
    h
}

/// Runs every trial of one cell.
pub fn evaluate_cell(
    env: &Env,
    policy: &dyn Policy,
    surface: &SurfaceSpec,
    grid: &MapGrid,
    cell: (usize, usize),
    trials: u32,
    seed: u64,
) -> Result<Vec<CellOutcome>> {
    let (i, j) = cell;
    let condition = ApproachCondition::new(grid.speeds[i], grid.angles[j]);
    (0..trials)
        .map(|k| {
            let s = trial_seed(seed, i, j, k);
            let r = env.run_episode(policy, condition, surface, s, false)?.result;
            Ok(CellOutcome {
                speed_index: i,
                angle_index: j,
                trial: k,
                seed: s,
                n_legs: r.n_legs,
                reward: r.reward_scalar,
            })
        })
        .collect()
}

/// All outcomes of a map, cell by cell in row-major order.
pub fn sweep_outcomes(
    env: &Env,
    policy: &dyn Policy,
    surface: &SurfaceSpec,
    grid: &MapGrid,
    trials: u32,
    seed: u64,
) -> Result<Vec<CellOutcome>> {
    if trials == 0 {
        return Err(invalid("trials", "must be >= 1"));
    }
    grid.validate()?;
    let mut out = Vec::with_capacity(grid.n_cells() * trials as usize);
    for cell in grid.cells() {
        out.extend(evaluate_cell(env, policy, surface, grid, cell, trials, seed)?);
    }
    Ok(out)
}

pub fn sweep_success_map(
    env: &Env,
    policy: &dyn Policy,
    surface: &SurfaceSpec,
    grid: &MapGrid,
    trials: u32,
    seed: u64,
    criterion: SuccessCriterion,
) -> Result<SuccessMap> {
    let outcomes = sweep_outcomes(env, policy, surface, grid, trials, seed)?;
    SuccessMap::from_outcomes(grid.clone(), criterion, &outcomes)
}

/// Gaussian smoothing in grid-index space, truncated at `3σ` and
/// renormalized by the in-grid kernel mass at every cell.
pub fn smooth_map(map: &SuccessMap, sigma_cells: f64) -> Result<SuccessMap> {
    if !(sigma_cells >= 0.0 && sigma_cells.is_finite()) {
        return Err(invalid("sigma_cells", "must be finite and >= 0"));
    }
    if sigma_cells == 0.0 {
        return Ok(map.clone());
    }
    let (ns, na) = (map.grid.speeds.len(), map.grid.angles.len());
    let radius = libm::ceil(3.0 * sigma_cells) as isize;
    let w = |d: isize| exp(-0.5 * (d * d) as f64 / (sigma_cells * sigma_cells));
    let mut rates = vec![0.0; ns * na];
    for i in 0..ns as isize {
        for j in 0..na as isize {
            let (mut acc, mut mass) = (0.0, 0.0);
            for di in -radius..=radius {
                for dj in -radius..=radius {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a >= ns as isize || b >= na as isize {
                        continue;
                    }
                    let k = w(di) * w(dj);
                    acc += k * map.rates[a as usize * na + b as usize];
                    mass += k;
                }
            }
            rates[i as usize * na + j as usize] = (acc / mass).clamp(0.0, 1.0);
        }
    }
    Ok(SuccessMap {
        rates,
        ..map.clone()
    })
}

/// Element-wise `|a − b|` with summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDiff {
    pub grid: MapGrid,
    pub abs_diff: Vec<f64>,
    pub mean_abs: f64,
    pub max_abs: f64,
}

pub fn compare_maps(a: &SuccessMap, b: &SuccessMap) -> Result<MapDiff> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("maps use different grids".into()));
    }
    if a.criterion != b.criterion {
        return Err(Error::GridMismatch("maps use different success criteria".into()));
    }
    let abs_diff: Vec<f64> = a.rates.iter().zip(&b.rates).map(|(x, y)| (x - y).abs()).collect();
    let mean_abs = abs_diff.iter().sum::<f64>() / abs_diff.len().max(1) as f64;
    let max_abs = abs_diff.iter().copied().fold(0.0, f64::max);
    Ok(MapDiff {
        grid: a.grid.clone(),
        abs_diff,
        mean_abs,
        max_abs,
    })
}

/// Map of one `(K, ζ)` hinge setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HingeMap {
    pub stiffness: f64,
    pub damping_ratio: f64,
    pub map: SuccessMap,
}

/// Every `(K, ζ)` pair, stiffness-major.
pub fn hinge_settings(stiffness: &[f64], damping: &[f64]) -> Result<Vec<(f64, f64)>> {
    if stiffness.is_empty() || damping.is_empty() {
        return Err(invalid("hinge_sweep", "stiffness and damping lists must be nonempty"));
    }
    Ok(stiffness
        .iter()
        .flat_map(|&k| damping.iter().map(move |&z| (k, z)))
        .collect())
}

/// Copy of `env` with the hinge replaced.
pub fn with_hinge(env: &Env, stiffness: f64, damping_ratio: f64) -> Result<Env> {
    let mut geom = env.geom.clone();
    geom.hip_stiffness = stiffness;
    geom.hip_damping_ratio = damping_ratio;
    Env::new(geom, env.cfg)
}

/// Evaluates the same policy under each hinge pair of [`hinge_settings`].
#[allow(clippy::too_many_arguments)]
pub fn hinge_sweep(
    env: &Env,
    policy: &dyn Policy,
    surface: &SurfaceSpec,
    stiffness: &[f64],
    damping: &[f64],
    grid: &MapGrid,
    trials: u32,
    seed: u64,
    criterion: SuccessCriterion,
) -> Result<Vec<HingeMap>> {
    hinge_settings(stiffness, damping)?
        .into_iter()
        .map(|(k, z)| {
            let e = with_hinge(env, k, z)?;
            Ok(HingeMap {
                stiffness: k,
                damping_ratio: z,
                map: sweep_success_map(&e, policy, surface, grid, trials, seed, criterion)?,
            })
        })
        .collect()
}
