use crate::error::{invalid, Error, Result};
use crate::geometry::RobotGeometry;
use crate::math::{Vec2, FRAC_PI_2, GRAVITY};

use super::{Phase, SimState};

/// Advances the free-flight rotation maneuver by `dt`.
///
/// Translation is ballistic. Pitch follows the constant commanded angular
/// acceleration until the rotation accumulated since the trigger passes 90°;
/// from then on the acceleration is zero and the pitch rate persists.
/// Both motions have constant acceleration over a step, so the update is the
/// exact closed form and any `dt` lands on the true trajectory.
pub fn step_maneuver(
    state: &SimState,
    alpha_cmd: f64,
    geom: &RobotGeometry,
    dt: f64,
) -> Result<SimState> {
    if state.phase != Phase::Rotation {
        return Err(Error::WrongPhase(state.phase));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", "must be > 0"));
    }
    if !(alpha_cmd.abs() <= geom.alpha_max * (1.0 + 1e-12)) {
        return Err(invalid("alpha_cmd", "exceeds alpha_max"));
    }
    let g = Vec2::new(0.0, -GRAVITY);
    let alpha = if state.accelerating { alpha_cmd } else { 0.0 };

    let mut next = *state;
    next.position = state.position + state.velocity * dt + g * (0.5 * dt * dt);
    next.velocity = state.velocity + g * dt;
    next.pitch = state.pitch + state.pitch_rate * dt + 0.5 * alpha * dt * dt;
    next.pitch_rate = state.pitch_rate + alpha * dt;
    next.time = state.time + dt;
    if next.accelerating && (next.pitch - next.trigger_pitch).abs() >= FRAC_PI_2 {
        next.accelerating = false;
    }
    if !next.is_finite() {
        return Err(Error::NumericalDivergence { time: next.time });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotating() -> SimState {
        SimState::default().triggered()
    }

    #[test]
    fn free_fall_one_second() {
        let g = RobotGeometry::source_one_semi_narrow_short();
        let mut s = rotating();
        for _ in 0..1000 {
            s = step_maneuver(&s, 0.0, &g, 1e-3).unwrap();
        }
        assert!((s.position.z + GRAVITY / 2.0).abs() < 1e-9);
        assert!((s.time - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_angular_acceleration() {
        let g = RobotGeometry::source_one_semi_narrow_short();
        let mut s = rotating();
        for _ in 0..100 {
            s = step_maneuver(&s, 90.0, &g, 1e-3).unwrap();
        }
        assert!((s.pitch - 0.45).abs() < 1e-9);
    }

    #[test]
    fn rate_persists_after_quarter_turn() {
        let g = RobotGeometry::source_one_semi_narrow_short();
        let mut s = rotating();
        let mut max_accel_rotation: f64 = 0.0;
        let mut last_increment = 0.0;
        while s.accelerating {
            let before = s.pitch;
            s = step_maneuver(&s, 90.0, &g, 1e-3).unwrap();
            last_increment = s.pitch - before;
            max_accel_rotation = max_accel_rotation.max(s.pitch - s.trigger_pitch);
        }
        assert!(max_accel_rotation <= FRAC_PI_2 + last_increment);
        let rate = s.pitch_rate;
        for _ in 0..50 {
            s = step_maneuver(&s, 90.0, &g, 1e-3).unwrap();
            assert_eq!(s.pitch_rate, rate);
        }
    }

    #[test]
    fn preconditions() {
        let g = RobotGeometry::source_one_semi_narrow_short();
        assert!(step_maneuver(&SimState::default(), 0.0, &g, 1e-3).is_err());
        assert!(step_maneuver(&rotating(), 0.0, &g, 0.0).is_err());
        assert!(step_maneuver(&rotating(), 200.0, &g, 1e-3).is_err());
        let mut bad = rotating();
        bad.velocity.x = f64::INFINITY;
        assert!(matches!(
            step_maneuver(&bad, 0.0, &g, 1e-3),
            Err(Error::NumericalDivergence { .. })
        ));
    }
}
