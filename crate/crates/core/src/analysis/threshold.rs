//! Kinematic prediction of the smallest perpendicular approach speed at
//! which a trigger can still bring a pad onto the surface first.
//!
//! After the trigger the robot flies ballistically while pitching at the
//! commanded constant acceleration until a quarter turn, then at the rate
//! reached. A trigger works when the first point to reach the plane is a
//! pad rather than a prop or the hull.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::env::compute_phi_min;
use crate::error::{invalid, Result};
use crate::geometry::{world_points, Pose, RobotGeometry};
use crate::math::{sqrt, Vec2, FRAC_PI_2, GRAVITY, PI};
use crate::sim::SurfaceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdOptions {
    /// Candidate `V⊥` spacing, m/s.
    pub v_step: f64,
    pub v_max: f64,
    /// Trigger-distance spacing, m.
    pub d_step: f64,
    /// Trigger distances run from `d_step` to `L_eff + d_max`, m.
    pub d_max: f64,
    /// Time step of the post-trigger scan, s.
    pub dt: f64,
    pub t_max: f64,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            v_step: 0.05,
            v_max: 8.0,
            d_step: 0.001,
            d_max: 1.5,
            dt: 5e-4,
            t_max: 1.5,
        }
    }
}

impl ThresholdOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("v_step", self.v_step),
            ("v_max", self.v_max),
            ("d_step", self.d_step),
            ("d_max", self.d_max),
            ("dt", self.dt),
            ("t_max", self.t_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

/// Which part of the robot reaches the plane first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactOrder {
    Pad,
    PropOrBody,
    /// Nothing touches within the scan.
    Miss,
}

fn pitch_after(t: f64, alpha: f64) -> f64 {
    // ½·|α|·t² = π/2
    let t_quarter = sqrt(PI / alpha.abs());
    let s = alpha.signum();
    if t <= t_quarter {
        0.5 * alpha * t * t
    } else {
        s * FRAC_PI_2 + alpha * t_quarter * (t - t_quarter)
    }
}

/// Largest distance of a pad or prop from the centre of mass.
fn body_extent(geom: &RobotGeometry) -> f64 {
    use crate::geometry::PadSide;
    [PadSide::Front, PadSide::Rear]
        .iter()
        .map(|&s| geom.pad_body(s).norm())
        .chain(geom.prop_offsets.iter().map(|p| p.norm()))
        .fold(0.0, f64::max)
}

/// First contact after a trigger at centre-of-mass distance `distance`
/// from the plane, approaching along the normal at `v_perp` from hover
/// attitude and rotating at `alpha` (signed).
pub fn first_contact(
    geom: &RobotGeometry,
    surface: &SurfaceSpec,
    distance: f64,
    v_perp: f64,
    alpha: f64,
    dt: f64,
    t_max: f64,
) -> ContactOrder {
    let n = surface.normal();
    let p0 = surface.anchor_point + n * distance;
    let v0 = n * (-v_perp);
    let g = Vec2::new(0.0, -GRAVITY);
    let g_n = g.dot(n);
    let extent = body_extent(geom);
    let steps = libm::ceil(t_max / dt) as usize;
    for k in 0..=steps {
        let t = k as f64 * dt;
        // Past the apex with gravity pulling away, the gap only grows.
        if g_n >= 0.0 && -v_perp + g_n * t > 0.0 && distance - v_perp * t + 0.5 * g_n * t * t > extent {
            return ContactOrder::Miss;
        }
        let pose = Pose::new(p0 + v0 * t + g * (0.5 * t * t), pitch_after(t, alpha));
        let pts = world_points(geom, &pose);
        let d_pad = surface
            .signed_distance(pts.pad_front)
            .min(surface.signed_distance(pts.pad_rear));
        let d_other = pts
            .prop_points
            .iter()
            .copied()
            .chain(geom.body_points().iter().map(|b| pose.to_world(*b)))
            .map(|p| surface.signed_distance(p))
            .fold(f64::INFINITY, f64::min);
        if d_pad <= 0.0 || d_other <= 0.0 {
            return if d_pad <= 0.0 && d_pad < d_other {
                ContactOrder::Pad
            } else {
                ContactOrder::PropOrBody
            };
        }
    }
    ContactOrder::Miss
}

fn feasible(
    geom: &RobotGeometry,
    surface: &SurfaceSpec,
    l_eff: f64,
    v_perp: f64,
    opts: &ThresholdOptions,
) -> bool {
    let g_n = Vec2::new(0.0, -GRAVITY).dot(surface.normal());
    // With gravity pulling off the plane nothing starting beyond the apex
    // gap plus the body extent can reach it.
    let reach = if g_n > 0.0 {
        v_perp * v_perp / (2.0 * g_n) + body_extent(geom)
    } else {
        f64::INFINITY
    };
    let n_d = libm::floor((l_eff + opts.d_max).min(reach) / opts.d_step) as usize;
    (1..=n_d).any(|m| {
        let distance = m as f64 * opts.d_step;
        [geom.alpha_max, -geom.alpha_max].iter().any(|&a| {
            first_contact(geom, surface, distance, v_perp, a, opts.dt, opts.t_max)
                == ContactOrder::Pad
        })
    })
}

/// Smallest `V⊥` on the candidate grid `v_step, 2·v_step, …, v_max` that
/// admits a pad-first trigger, or `None` above the range.
pub fn predict_velocity_threshold(
    geom: &RobotGeometry,
    alpha_max: f64,
    surface: &SurfaceSpec,
    opts: &ThresholdOptions,
) -> Result<Option<f64>> {
    if !(alpha_max > 0.0 && alpha_max.is_finite()) {
        return Err(invalid("alpha_max", "must be finite and > 0"));
    }
    opts.validate()?;
    surface.validate()?;
    let mut g = geom.clone();
    g.alpha_max = alpha_max;
    g.validate()?;
    let l_eff = crate::geometry::derive_dimensionless(&g)?.l_eff;
    let n_v = libm::floor(opts.v_max / opts.v_step + 1e-9) as usize;
    Ok((1..=n_v)
        .map(|k| k as f64 * opts.v_step)
        .find(|&v| feasible(&g, surface, l_eff, v, opts)))
}

/// Predicted thresholds for several acceleration limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCurve {
    pub alpha_max: Vec<f64>,
    /// m/s; `None` when no candidate up to the search limit works.
    pub v_perp_min: Vec<Option<f64>>,
    pub geometry: RobotGeometry,
    pub surface: SurfaceSpec,
    /// Inversion angle of the geometry, rad.
    pub phi_min: f64,
}

impl ThresholdCurve {
    /// Non-increasing in `alpha_max`, with "above range" as the largest value.
    pub fn is_monotone(&self) -> bool {
        let mut idx: Vec<usize> = (0..self.alpha_max.len()).collect();
        idx.sort_by(|&a, &b| self.alpha_max[a].total_cmp(&self.alpha_max[b]));
        let key = |v: Option<f64>| v.unwrap_or(f64::INFINITY);
        idx.windows(2)
            .all(|w| key(self.v_perp_min[w[1]]) <= key(self.v_perp_min[w[0]]))
    }
}

pub fn threshold_curve(
    geom: &RobotGeometry,
    alphas: &[f64],
    surface: &SurfaceSpec,
    opts: &ThresholdOptions,
) -> Result<ThresholdCurve> {
    if alphas.is_empty() {
        return Err(invalid("alpha_max", "list must be nonempty"));
    }
    let v_perp_min = alphas
        .iter()
        .map(|&a| predict_velocity_threshold(geom, a, surface, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdCurve {
        alpha_max: alphas.to_vec(),
        v_perp_min,
        geometry: geom.clone(),
        surface: *surface,
        phi_min: compute_phi_min(geom)?,
    })
}
