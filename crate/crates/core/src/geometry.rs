//! Robot geometry, the dimensionless leg description and body-to-world
//! projection of the pads and propellers.
//!
//! Everything lives in the body x-z plane: +x forward, +z up. The front leg
//! is described explicitly; the rear leg is its mirror image about the body
//! z axis. Pitch is measured counter-clockwise (nose up) from world +X.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{atan2, cos, rad, sin, Vec2, FRAC_PI_2};

/// Physical description of one quadrotor and leg configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotGeometry {
    /// kg
    pub mass: f64,
    /// Pitch-axis moment of inertia about the center of mass, kg·m².
    pub inertia_yy: f64,
    /// Horizontal distance from the body vertical axis to the furthest
    /// body point (prop tips), m.
    pub forward_reach: f64,
    /// Front hip position in the body frame, m.
    pub leg_mount_offset: Vec2,
    /// Hip-to-pad-tip length, m.
    pub leg_length: f64,
    /// Leg direction measured from body −z toward +x, rad.
    pub leg_mount_angle: f64,
    /// Propeller extreme points in the body frame, m.
    pub prop_offsets: Vec<Vec2>,
    /// Hip torsional stiffness, N·m/rad. `f64::INFINITY` selects a rigid hip.
    pub hip_stiffness: f64,
    /// Hip damping relative to critical damping of the body-about-hip mode.
    pub hip_damping_ratio: f64,
    /// Angular-acceleration limit, rad/s².
    pub alpha_max: f64,
    /// Motor first-order time constant, s.
    pub motor_time_constant: f64,
}

/// Scale-free leg description: length ratio `L_eff / F_Reach` and leg angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessGeometry {
    pub length_ratio: f64,
    pub leg_angle_gamma: f64,
    /// Effective leg length, m (kept for dimensional reconstruction).
    pub l_eff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    pub pitch: f64,
}

impl Pose {
    pub fn new(position: Vec2, pitch: f64) -> Self {
        Pose { position, pitch }
    }

    #[inline]
    pub fn to_world(&self, body: Vec2) -> Vec2 {
        self.position + body.rotated(self.pitch)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldPoints {
    pub pad_front: Vec2,
    pub pad_rear: Vec2,
    pub prop_points: Vec<Vec2>,
}

/// Which of the two projected pads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PadSide {
    Front,
    Rear,
}

impl PadSide {
    pub fn other(self) -> PadSide {
        match self {
            PadSide::Front => PadSide::Rear,
            PadSide::Rear => PadSide::Front,
        }
    }
}

/// Propeller tip height above the center of mass as a fraction of the
/// forward reach, used by the presets.
const PROP_HEIGHT_FRACTION: f64 = 0.13;
/// Front hip position as fractions of the forward reach, used by the presets.
const MOUNT_FRACTION: Vec2 = Vec2::new(0.2, -0.1);

impl RobotGeometry {
    /// Builds a geometry whose pad tip sits at `length_ratio · forward_reach`
    /// from the origin, `gamma` from the body vertical, with the hip at
    /// `mount` in the body frame.
    pub fn from_dimensionless(
        forward_reach: f64,
        length_ratio: f64,
        gamma: f64,
        mount: Vec2,
    ) -> Result<GeometryBuilder> {
        if !(forward_reach > 0.0) {
            return Err(invalid("forward_reach", "must be > 0"));
        }
        if !(length_ratio > 0.0) {
            return Err(invalid("length_ratio", "must be > 0"));
        }
        let l_eff = length_ratio * forward_reach;
        let tip = Vec2::new(l_eff * sin(gamma), -l_eff * cos(gamma));
        let leg = tip - mount;
        let leg_length = leg.norm();
        if !(leg_length > 0.0) {
            return Err(invalid("leg_mount_offset", "hip coincides with pad tip"));
        }
        Ok(GeometryBuilder {
            forward_reach,
            leg_mount_offset: mount,
            leg_length,
            leg_mount_angle: atan2(leg.x, -leg.z),
        })
    }

    /// 12" Source One frame with the Semi Narrow-Short legs (1.08, 27.3°).
    pub fn source_one_semi_narrow_short() -> Self {
        Self::preset(0.1524, 1.08, rad(27.3), 0.60, 4.0e-3)
    }

    /// 12" Source One frame with the Wide-Long legs (1.49, 52.4°).
    pub fn source_one_wide_long() -> Self {
        Self::preset(0.1524, 1.49, rad(52.4), 0.60, 4.0e-3)
    }

    /// 7" Impulse Micro frame with the Semi Narrow-Short legs (1.18, 29.5°).
    pub fn impulse_micro_semi_narrow_short() -> Self {
        let s = 7.0 / 12.0;
        Self::preset(0.0889, 1.18, rad(29.5), 0.60 * s * s * s, 4.0e-3 * libm::pow(s, 5.0))
    }

    /// 7" Impulse Micro frame with the Wide-Long legs (1.47, 53.1°).
    pub fn impulse_micro_wide_long() -> Self {
        let s = 7.0 / 12.0;
        Self::preset(0.0889, 1.47, rad(53.1), 0.60 * s * s * s, 4.0e-3 * libm::pow(s, 5.0))
    }

    fn preset(reach: f64, ratio: f64, gamma: f64, mass: f64, inertia: f64) -> Self {
        let mount = MOUNT_FRACTION * reach;
        let h = PROP_HEIGHT_FRACTION * reach;
        RobotGeometry::from_dimensionless(reach, ratio, gamma, mount)
            .expect("preset geometry is valid")
            .build(
                mass,
                inertia,
                vec![Vec2::new(reach, h), Vec2::new(-reach, h)],
            )
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("inertia_yy", self.inertia_yy),
            ("forward_reach", self.forward_reach),
            ("leg_length", self.leg_length),
            ("alpha_max", self.alpha_max),
            ("motor_time_constant", self.motor_time_constant),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, "must be finite and > 0"));
            }
        }
        if !(self.hip_stiffness >= 0.0) {
            return Err(invalid("hip_stiffness", "must be >= 0"));
        }
        if !(self.hip_damping_ratio >= 0.0 && self.hip_damping_ratio.is_finite()) {
            return Err(invalid("hip_damping_ratio", "must be finite and >= 0"));
        }
        if !self.leg_mount_offset.is_finite() || !self.leg_mount_angle.is_finite() {
            return Err(invalid("leg_mount_offset", "must be finite"));
        }
        if self.prop_offsets.is_empty() || self.prop_offsets.iter().any(|p| !p.is_finite()) {
            return Err(invalid("prop_offsets", "need at least one finite point"));
        }
        derive_dimensionless(self).map(|_| ())
    }

    /// Front leg unit direction (hip toward pad) in the body frame.
    #[inline]
    pub fn leg_direction(&self) -> Vec2 {
        Vec2::new(sin(self.leg_mount_angle), -cos(self.leg_mount_angle))
    }

    /// Hip position of the given leg in the body frame.
    #[inline]
    pub fn hip_body(&self, side: PadSide) -> Vec2 {
        mirror(self.leg_mount_offset, side)
    }

    /// Pad tip of the given leg in the body frame (undeflected hip).
    #[inline]
    pub fn pad_body(&self, side: PadSide) -> Vec2 {
        mirror(
            self.leg_mount_offset + self.leg_direction() * self.leg_length,
            side,
        )
    }

    /// Body-frame angle of the leg vector (hip toward pad) for `side`.
    pub fn leg_angle_body(&self, side: PadSide) -> f64 {
        mirror(self.leg_direction(), side).angle()
    }

    /// Moment of inertia of the body about a hip axis, kg·m².
    pub fn hinge_inertia(&self) -> f64 {
        let r = self.leg_mount_offset.norm();
        self.inertia_yy + self.mass * r * r
    }

    /// Hip damping coefficient `2ζ√(K·I_hinge)`, N·m·s/rad. Zero for a rigid hip.
    pub fn hip_damping(&self) -> f64 {
        if self.hip_stiffness.is_infinite() {
            0.0
        } else {
            2.0 * self.hip_damping_ratio * crate::math::sqrt(self.hip_stiffness * self.hinge_inertia())
        }
    }

    pub fn is_rigid_hip(&self) -> bool {
        self.hip_stiffness.is_infinite()
    }

    /// Body-frame points that count as body-hull contact.
    pub fn body_points(&self) -> [Vec2; 1] {
        [Vec2::ZERO]
    }
}

/// Remaining inputs for [`RobotGeometry::from_dimensionless`].
#[derive(Debug, Clone, Copy)]
pub struct GeometryBuilder {
    forward_reach: f64,
    leg_mount_offset: Vec2,
    leg_length: f64,
    leg_mount_angle: f64,
}

impl GeometryBuilder {
    pub fn build(self, mass: f64, inertia_yy: f64, prop_offsets: Vec<Vec2>) -> RobotGeometry {
        RobotGeometry {
            mass,
            inertia_yy,
            forward_reach: self.forward_reach,
            leg_mount_offset: self.leg_mount_offset,
            leg_length: self.leg_length,
            leg_mount_angle: self.leg_mount_angle,
            prop_offsets,
            hip_stiffness: 1.4,
            hip_damping_ratio: 0.3,
            alpha_max: 90.0,
            motor_time_constant: 0.04,
        }
    }
}

#[inline]
fn mirror(v: Vec2, side: PadSide) -> Vec2 {
    match side {
        PadSide::Front => v,
        PadSide::Rear => Vec2::new(-v.x, v.z),
    }
}

/// Effective leg length, leg angle and length ratio of `geom`.
pub fn derive_dimensionless(geom: &RobotGeometry) -> Result<DimensionlessGeometry> {
    let tip = geom.pad_body(PadSide::Front);
    let l_eff = tip.norm();
    if !(l_eff > 1e-12) {
        return Err(Error::ZeroLegLength);
    }
    let gamma = atan2(tip.x, -tip.z).abs();
    if !(gamma < FRAC_PI_2) {
        return Err(invalid("leg_mount_angle", "pad tip must lie below the body"));
    }
    Ok(DimensionlessGeometry {
        length_ratio: l_eff / geom.forward_reach,
        leg_angle_gamma: gamma,
        l_eff,
    })
}

/// Geometrically similar copy: lengths ×s, mass ×s³, inertia ×s⁵.
pub fn scale_geometry(geom: &RobotGeometry, s: f64) -> Result<RobotGeometry> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(invalid("scale", "must be finite and > 0"));
    }
    Ok(RobotGeometry {
        mass: geom.mass * s * s * s,
        inertia_yy: geom.inertia_yy * libm::pow(s, 5.0),
        forward_reach: geom.forward_reach * s,
        leg_mount_offset: geom.leg_mount_offset * s,
        leg_length: geom.leg_length * s,
        prop_offsets: geom.prop_offsets.iter().map(|p| *p * s).collect(),
        ..geom.clone()
    })
}

/// Pads and prop points of `geom` at `pose`, in world coordinates.
pub fn world_points(geom: &RobotGeometry, pose: &Pose) -> WorldPoints {
    WorldPoints {
        pad_front: pose.to_world(geom.pad_body(PadSide::Front)),
        pad_rear: pose.to_world(geom.pad_body(PadSide::Rear)),
        prop_points: geom.prop_offsets.iter().map(|p| pose.to_world(*p)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{deg, PI};

    #[test]
    fn source_one_semi_narrow_short_matches_table() {
        let g = RobotGeometry::source_one_semi_narrow_short();
        let d = derive_dimensionless(&g).unwrap();
        assert!((d.length_ratio - 1.08).abs() < 1e-12);
        assert!((deg(d.leg_angle_gamma) - 27.3).abs() < 0.1);
        assert!((d.l_eff - 0.1646).abs() < 1e-4);
    }

    #[test]
    fn all_presets_reconstruct_table_values() {
        let cases = [
            (RobotGeometry::source_one_wide_long(), 1.49, 52.4),
            (RobotGeometry::source_one_semi_narrow_short(), 1.08, 27.3),
            (RobotGeometry::impulse_micro_wide_long(), 1.47, 53.1),
            (RobotGeometry::impulse_micro_semi_narrow_short(), 1.18, 29.5),
        ];
        for (g, ratio, gamma) in cases {
            g.validate().unwrap();
            let d = derive_dimensionless(&g).unwrap();
            assert!((d.length_ratio - ratio).abs() < 1e-12);
            assert!((deg(d.leg_angle_gamma) - gamma).abs() < 0.1);
        }
    }

    #[test]
    fn vertical_leg_has_zero_gamma() {
        let mut g = RobotGeometry::source_one_semi_narrow_short();
        g.leg_mount_offset = Vec2::new(0.0, -0.01);
        g.leg_mount_angle = 0.0;
        g.leg_length = 0.3;
        let d = derive_dimensionless(&g).unwrap();
        assert_eq!(d.leg_angle_gamma, 0.0);
    }

    #[test]
    fn degenerate_leg_is_rejected() {
        let mut g = RobotGeometry::source_one_semi_narrow_short();
        g.leg_mount_offset = Vec2::new(0.0, -0.1);
        g.leg_mount_angle = PI;
        g.leg_length = 0.1;
        assert_eq!(derive_dimensionless(&g), Err(Error::ZeroLegLength));
    }

    #[test]
    fn scale_identity_and_cube_law() {
        let g = RobotGeometry::source_one_semi_narrow_short();
        assert_eq!(scale_geometry(&g, 1.0).unwrap(), g);
        let mut h = g.clone();
        h.mass = 0.5;
        assert!((scale_geometry(&h, 2.0).unwrap().mass - 4.0).abs() < 1e-15);
        assert!(scale_geometry(&g, 0.0).is_err());
        assert!(scale_geometry(&g, -1.0).is_err());
    }

    #[test]
    fn twelve_to_seven_inch_keeps_dimensionless_pair() {
        let g = RobotGeometry::source_one_semi_narrow_short();
        let small = scale_geometry(&g, 7.0 / 12.0).unwrap();
        let a = derive_dimensionless(&g).unwrap();
        let b = derive_dimensionless(&small).unwrap();
        assert!((a.length_ratio - b.length_ratio).abs() < 1e-12);
        assert!((a.leg_angle_gamma - b.leg_angle_gamma).abs() < 1e-12);
        assert!((small.forward_reach - 0.0889).abs() < 1e-12);
    }

    #[test]
    fn world_points_transforms() {
        let mut g = RobotGeometry::source_one_semi_narrow_short();
        let zero = world_points(&g, &Pose::default());
        assert_eq!(zero.pad_front, g.pad_body(PadSide::Front));
        assert_eq!(zero.prop_points, g.prop_offsets);

        // pad straight below the origin
        g.leg_mount_offset = Vec2::new(0.0, 0.0);
        g.leg_mount_angle = 0.0;
        g.leg_length = 0.2;
        let p = Vec2::new(1.0, 2.0);
        let flipped = world_points(&g, &Pose::new(p, PI));
        assert!((flipped.pad_front - (p + Vec2::new(0.0, 0.2))).norm() < 1e-12);
        let quarter = world_points(&g, &Pose::new(Vec2::ZERO, FRAC_PI_2));
        assert!((quarter.pad_front - Vec2::new(0.2, 0.0)).norm() < 1e-12);
    }
}
