use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::RobotGeometry;

use super::{state_points, SimState, SurfaceSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceSample {
    pub time: f64,
    /// Nearest pad tip to the plane, m.
    pub d_pad: f64,
    /// Nearest prop point to the plane, m.
    pub d_prop: f64,
}

/// Pad and prop clearance over a maneuver.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceTrace {
    pub samples: Vec<DistanceSample>,
}

impl DistanceTrace {
    pub fn sample(state: &SimState, geom: &RobotGeometry, surface: &SurfaceSpec) -> DistanceSample {
        let pts = state_points(state, geom);
        let d_pad = surface
            .signed_distance(pts.pad_front)
            .min(surface.signed_distance(pts.pad_rear));
        let d_prop = pts
            .prop_points
            .iter()
            .map(|p| surface.signed_distance(*p))
            .fold(f64::INFINITY, f64::min);
        DistanceSample {
            time: state.time,
            d_pad,
            d_prop,
        }
    }

    pub fn push(&mut self, state: &SimState, geom: &RobotGeometry, surface: &SurfaceSpec) {
        self.samples.push(Self::sample(state, geom, surface));
    }

    pub fn min_pad(&self) -> f64 {
        self.samples.iter().map(|s| s.d_pad).fold(f64::INFINITY, f64::min)
    }

    pub fn min_prop(&self) -> f64 {
        self.samples.iter().map(|s| s.d_prop).fold(f64::INFINITY, f64::min)
    }
}

/// Per-sample perpendicular clearance of the pads and props.
pub fn record_distances(
    trajectory: &[SimState],
    geom: &RobotGeometry,
    surface: &SurfaceSpec,
) -> DistanceTrace {
    let mut trace = DistanceTrace::default();
    for s in trajectory {
        trace.push(s, geom, surface);
    }
    trace
}
