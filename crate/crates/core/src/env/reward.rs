//! Six-term landing reward and landing classification.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::math::{exp, Vec2, PI};
use crate::sim::{ContactEvent, ContactKind, Phase};

/// Weights of `[r_tau_trg, r_d_pad, r_gravity, r_momentum, r_phi, r_legs]`.
pub const REWARD_WEIGHTS: [f64; 6] = [0.1, 0.4, 1.0, 1.0, 2.0, 2.0];

/// Penalty on `r_legs` for any body or propeller contact.
pub const CONTACT_PENALTY: f64 = 0.25;

/// Exponential scales of the timing and miss-distance terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardScales {
    /// 1/s
    pub k1: f64,
    /// 1/m
    pub k2: f64,
}

impl Default for RewardScales {
    fn default() -> Self {
        RewardScales { k1: 5.0, k2: 10.0 }
    }
}

/// Reward components of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardVector {
    pub r_tau_trg: f64,
    pub r_d_pad: f64,
    pub r_gravity: f64,
    pub r_momentum: f64,
    pub r_phi: f64,
    pub r_legs: f64,
}

impl RewardVector {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.r_tau_trg,
            self.r_d_pad,
            self.r_gravity,
            self.r_momentum,
            self.r_phi,
            self.r_legs,
        ]
    }

    /// Weighted sum with [`REWARD_WEIGHTS`].
    pub fn scalar(&self) -> f64 {
        self.as_array()
            .iter()
            .zip(REWARD_WEIGHTS.iter())
            .map(|(r, w)| r * w)
            .sum()
    }
}

/// Kinematics at the first pad touchdown.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Touchdown {
    /// Pad to center of mass.
    pub leg_vector: Vec2,
    /// Center-of-mass velocity just before the impact.
    pub velocity: Vec2,
}

/// Everything the reward needs from a finished episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardInputs {
    /// Time-to-contact at the trigger tick, `None` if never triggered.
    pub tau_trg: Option<f64>,
    pub min_d_pad: f64,
    pub touchdown: Option<Touchdown>,
    /// Impact angle relative to the plane at the first contact of any kind.
    pub phi_impact: Option<f64>,
    /// Smallest impact angle with legs contacting before the body, rad.
    pub phi_min: f64,
    pub n_legs: u8,
    pub body_or_prop_contact: bool,
}

/// `‖â × b̂‖` for two nonzero vectors; 0 when either is zero.
fn unit_cross(a: Vec2, b: Vec2) -> f64 {
    match (a.normalized(), b.normalized()) {
        (Some(a), Some(b)) => a.cross(b).abs().min(1.0),
        _ => 0.0,
    }
}

pub fn r_tau_trg(tau_trg: f64, k1: f64) -> f64 {
    if tau_trg < 0.0 {
        1.0
    } else {
        exp(-k1 * tau_trg)
    }
}

pub fn r_d_pad(min_d_pad: f64, k2: f64) -> f64 {
    if min_d_pad < 0.0 {
        1.0
    } else {
        exp(-k2 * min_d_pad)
    }
}

/// Impact-orientation term; angles in radians, `phi_min` in `(0, π)`.
pub fn r_phi(phi_impact: f64, phi_min: f64) -> f64 {
    let phi = phi_impact.abs();
    if phi > phi_min && phi <= PI {
        phi / (0.5 * (phi_min + PI))
    } else if phi > 0.0 && phi <= phi_min {
        0.5 * phi / phi_min
    } else {
        0.0
    }
}

pub fn r_legs(n_legs: u8, body_or_prop_contact: bool) -> f64 {
    let base = match n_legs {
        3 | 4 => 1.0,
        1 | 2 => 0.5,
        _ => 0.0,
    };
    if body_or_prop_contact {
        base - CONTACT_PENALTY
    } else {
        base
    }
}

/// Evaluates every reward term. Missing trigger, touchdown or impact data
/// score zero on the corresponding term.
pub fn compute_reward(inputs: &RewardInputs, scales: RewardScales) -> RewardVector {
    let gravity = Vec2::new(0.0, -1.0);
    let (r_g, r_l) = match inputs.touchdown {
        Some(td) => (
            unit_cross(gravity, td.leg_vector),
            unit_cross(td.velocity, td.leg_vector),
        ),
        None => (0.0, 0.0),
    };
    RewardVector {
        r_tau_trg: inputs.tau_trg.map_or(0.0, |t| r_tau_trg(t, scales.k1)),
        r_d_pad: r_d_pad(inputs.min_d_pad, scales.k2),
        r_gravity: r_g,
        r_momentum: r_l,
        r_phi: inputs.phi_impact.map_or(0.0, |p| r_phi(p, inputs.phi_min)),
        r_legs: r_legs(inputs.n_legs, inputs.body_or_prop_contact),
    }
}

/// Largest attainable scalar reward for a given `phi_min`.
pub fn max_scalar_reward(phi_min: f64) -> f64 {
    let w = REWARD_WEIGHTS;
    w[0] + w[1] + w[2] + w[3] + w[4] * 2.0 * PI / (phi_min + PI) + w[5]
}

/// Leg count in the four-legged convention and the body/prop contact flag.
///
/// Each planar pad stands for a pair of legs. A swing that settles attaches
/// the second pad even if no event was recorded for it.
pub fn classify_landing(contacts: &[ContactEvent], swing_outcome: Option<Phase>) -> (u8, bool) {
    let mut pads: Vec<ContactKind> = Vec::new();
    let mut flag = false;
    for e in contacts {
        if e.kind.is_pad() {
            if !pads.contains(&e.kind) {
                pads.push(e.kind);
            }
        } else {
            flag = true;
        }
    }
    let mut n_pads = pads.len();
    if swing_outcome == Some(Phase::Settled) && n_pads == 1 {
        n_pads = 2;
    }
    ((2 * n_pads) as u8, flag)
}
