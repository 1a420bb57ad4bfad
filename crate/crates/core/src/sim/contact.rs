use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{PadSide, RobotGeometry, WorldPoints};
use crate::math::Vec2;

use super::{SimState, SurfaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContactKind {
    PadFront,
    PadRear,
    Body,
    Propeller,
}

impl ContactKind {
    pub fn pad(side: PadSide) -> ContactKind {
        match side {
            PadSide::Front => ContactKind::PadFront,
            PadSide::Rear => ContactKind::PadRear,
        }
    }

    pub fn pad_side(self) -> Option<PadSide> {
        match self {
            ContactKind::PadFront => Some(PadSide::Front),
            ContactKind::PadRear => Some(PadSide::Rear),
            _ => None,
        }
    }

    pub fn is_pad(self) -> bool {
        self.pad_side().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub kind: ContactKind,
    pub time: f64,
    /// Contact location projected onto the plane.
    pub point: Vec2,
    pub impact_pitch: f64,
}

/// World positions of the pads and prop points, honoring a pinned and
/// possibly deflected leg.
pub fn state_points(state: &SimState, geom: &RobotGeometry) -> WorldPoints {
    let pose = state.pose();
    let pad = |side: PadSide| match state.pin {
        Some(pin) if pin.side == side => {
            let hip = pose.to_world(geom.hip_body(side));
            let dir = Vec2::from_angle(state.pitch + geom.leg_angle_body(side) + state.hip_angle);
            hip + dir * geom.leg_length
        }
        _ => pose.to_world(geom.pad_body(side)),
    };
    WorldPoints {
        pad_front: pad(PadSide::Front),
        pad_rear: pad(PadSide::Rear),
        prop_points: geom.prop_offsets.iter().map(|p| pose.to_world(*p)).collect(),
    }
}

/// Pads, props and body points within `contact_epsilon` of the plane
/// (penetration included). A pinned pad is already attached and is not
/// reported again.
pub fn detect_contacts(
    state: &SimState,
    geom: &RobotGeometry,
    surface: &SurfaceSpec,
) -> Vec<ContactEvent> {
    let pts = state_points(state, geom);
    let eps = surface.contact_epsilon;
    let mut events = Vec::new();
    let mut push = |kind: ContactKind, p: Vec2| {
        if surface.signed_distance(p) <= eps {
            events.push(ContactEvent {
                kind,
                time: state.time,
                point: surface.project(p),
                impact_pitch: state.pitch,
            });
        }
    };
    let pinned = state.pin.map(|p| p.side);
    if pinned != Some(PadSide::Front) {
        push(ContactKind::PadFront, pts.pad_front);
    }
    if pinned != Some(PadSide::Rear) {
        push(ContactKind::PadRear, pts.pad_rear);
    }
    for b in geom.body_points() {
        push(ContactKind::Body, state.pose().to_world(b));
    }
    for p in pts.prop_points {
        push(ContactKind::Propeller, p);
    }
    events
}

/// An unpinned pad attaches on contact, or inside the magnet range while
/// still closing on the plane.
pub fn pad_captured(
    state: &SimState,
    geom: &RobotGeometry,
    surface: &SurfaceSpec,
    side: PadSide,
) -> bool {
    let pose = state.pose();
    let tip = pose.to_world(geom.pad_body(side));
    let d = surface.signed_distance(tip);
    if d <= surface.contact_epsilon {
        return true;
    }
    if d > surface.attach_range {
        return false;
    }
    let arm = tip - state.position;
    let v_tip = state.velocity + arm.perp() * state.pitch_rate;
    surface.normal().dot(v_tip) < 0.0
}
