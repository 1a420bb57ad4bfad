use perch_core::analysis::{smooth_map, MapGrid, SuccessCriterion, SuccessMap};
use perch_core::env::{
    compute_reward, flight_angle_range, max_scalar_reward, RewardInputs, RewardScales, Touchdown,
    REWARD_WEIGHTS,
};
use perch_core::geometry::{derive_dimensionless, scale_geometry, RobotGeometry};
use perch_core::math::{Vec2, PI};
use perch_core::policy::{actor_forward, squash, Actor, GaussianHead, ObsNorm, LOG_STD_MAX, LOG_STD_MIN};
use perch_core::sac::{moving_average, ReplayBuffer, Transition};
use perch_core::sim::{step_maneuver, ApproachCondition, SimState, SurfaceSpec};
use perch_core::env::Observation;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn presets() -> [RobotGeometry; 4] {
    [
        RobotGeometry::source_one_semi_narrow_short(),
        RobotGeometry::source_one_wide_long(),
        RobotGeometry::impulse_micro_semi_narrow_short(),
        RobotGeometry::impulse_micro_wide_long(),
    ]
}

fn vec2() -> impl Strategy<Value = Vec2> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, z)| Vec2::new(x, z))
}

proptest! {
    #[test]
    fn reward_terms_stay_in_range(
        tau in proptest::option::of(-0.5..2.0f64),
        d_pad in -0.1..3.0f64,
        leg in vec2(),
        vel in vec2(),
        has_td in any::<bool>(),
        phi in proptest::option::of(-PI..PI),
        phi_min in 0.1..3.0f64,
        n_legs in 0u8..=4,
        flag in any::<bool>(),
    ) {
        let inputs = RewardInputs {
            tau_trg: tau,
            min_d_pad: d_pad,
            touchdown: has_td.then_some(Touchdown { leg_vector: leg, velocity: vel }),
            phi_impact: phi,
            phi_min,
            n_legs,
            body_or_prop_contact: flag,
        };
        let r = compute_reward(&inputs, RewardScales::default());
        for v in [r.r_tau_trg, r.r_d_pad, r.r_gravity, r.r_momentum] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.r_phi >= 0.0 && r.r_phi <= 2.0 * PI / (phi_min + PI) + 1e-12);
        prop_assert!((-0.25..=1.0).contains(&r.r_legs));
        let dot: f64 = r.as_array().iter().zip(REWARD_WEIGHTS).map(|(a, w)| a * w).sum();
        prop_assert_eq!(r.scalar(), dot);
        prop_assert!(r.scalar() <= max_scalar_reward(phi_min) + 1e-12);
    }

    #[test]
    fn dimensionless_shape_survives_scaling(k in 0usize..4, s in 0.05..20.0f64) {
        let g = &presets()[k];
        let a = derive_dimensionless(g).unwrap();
        let scaled = scale_geometry(g, s).unwrap();
        let b = derive_dimensionless(&scaled).unwrap();
        prop_assert!((a.length_ratio - b.length_ratio).abs() < 1e-9);
        prop_assert!((a.leg_angle_gamma - b.leg_angle_gamma).abs() < 1e-9);
        prop_assert!((b.l_eff - s * a.l_eff).abs() < 1e-9 * s.max(1.0));
        prop_assert_eq!(scaled.alpha_max, g.alpha_max);
        prop_assert!(a.length_ratio > 0.0);
        prop_assert!(a.leg_angle_gamma >= 0.0 && a.leg_angle_gamma < PI / 2.0);
    }

    #[test]
    fn admissible_flight_angles_close_on_the_plane(theta in 0.0..PI, margin in 0.0..0.3f64, u in 0.0..1.0f64, v in 0.1..6.0f64) {
        let (lo, hi) = flight_angle_range(theta, margin);
        prop_assume!(lo < hi);
        let angle = lo + u * (hi - lo);
        let c = ApproachCondition::new(v, angle);
        let s = SurfaceSpec::new(theta);
        prop_assert!(c.v_perp(&s) >= -1e-12);
        prop_assert!(c.velocity().x >= -1e-12);
    }

    #[test]
    fn ballistic_step_is_exact(vx in -4.0..4.0f64, vz in -4.0..6.0f64, n in 1usize..200) {
        let g = RobotGeometry::source_one_semi_narrow_short();
        let mut s = SimState { velocity: Vec2::new(vx, vz), ..SimState::default() }.triggered();
        s.accelerating = false;
        let big = step_maneuver(&s, 0.0, &g, n as f64 * 1e-3).unwrap();
        let mut small = s;
        for _ in 0..n {
            small = step_maneuver(&small, 0.0, &g, 1e-3).unwrap();
        }
        prop_assert!((big.position - small.position).norm() < 1e-10);
        prop_assert!((big.velocity - small.velocity).norm() < 1e-10);
    }

    #[test]
    fn squashed_actions_respect_bounds(
        m0 in -20.0..20.0f64, m1 in -20.0..20.0f64,
        l0 in LOG_STD_MIN..LOG_STD_MAX, l1 in LOG_STD_MIN..LOG_STD_MAX,
        n0 in -4.0..4.0f64, n1 in -4.0..4.0f64,
        alpha_max in 1.0..200.0f64,
    ) {
        let head = GaussianHead { mean: [m0, m1], log_std: [l0, l1], log_std_free: [true; 2] };
        let a = squash(&head, [n0, n1], alpha_max);
        prop_assert!((-1.0..=1.0).contains(&a.a_trg));
        prop_assert!(a.a_rot.abs() <= alpha_max);
        prop_assert!(a.log_prob.is_finite());
    }

    #[test]
    fn actor_outputs_are_finite_and_clamped(seed in any::<u64>(), tau in 0.0..2.0f64, tx in -30.0..30.0f64, d in 0.0..10.0f64, th in 0.0..PI) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Actor::init(&mut rng);
        let obs = Observation { tau, theta_x: tx, d_perp: d, theta_plane: th };
        let (mean, log_std) = actor_forward(&obs, &actor, &ObsNorm::default()).unwrap();
        prop_assert!(mean.iter().all(|m| m.is_finite()));
        prop_assert!(log_std.iter().all(|l| (LOG_STD_MIN..=LOG_STD_MAX).contains(l)));
        prop_assert_eq!(actor.net.sizes(), &[4, 10, 10, 10, 4][..]);
    }

    #[test]
    fn replay_never_exceeds_capacity(cap in 1usize..50, n in 0usize..200) {
        let mut b = ReplayBuffer::new(cap);
        for i in 0..n {
            b.push(Transition { obs: [i as f64; 4], action: [0.0; 2], reward: 0.0, next_obs: [0.0; 4], terminal: true });
            prop_assert!(b.len() <= cap);
        }
        prop_assert_eq!(b.len(), n.min(cap));
        prop_assert_eq!(b.inserted(), n as u64);
    }

    #[test]
    fn moving_average_is_bounded(xs in proptest::collection::vec(-10.0..10.0f64, 1..300), w in 1usize..120) {
        let ma = moving_average(&xs, w);
        prop_assert_eq!(ma.len(), xs.len());
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(ma.iter().all(|m| *m >= lo - 1e-9 && *m <= hi + 1e-9));
    }

    #[test]
    fn smoothing_keeps_rates_in_unit_interval(
        rates in proptest::collection::vec(0.0..=1.0f64, 30),
        sigma in 0.0..4.0f64,
    ) {
        let grid = MapGrid {
            speeds: (0..5).map(|i| 0.5 + i as f64).collect(),
            angles: (0..6).map(|j| 0.1 + 0.2 * j as f64).collect(),
        };
        let map = SuccessMap { grid, rates, trials: vec![3; 30], criterion: SuccessCriterion::FourLeg };
        let s = smooth_map(&map, sigma).unwrap();
        prop_assert!(s.rates.iter().all(|r| (-1e-12..=1.0 + 1e-12).contains(r)));
        let (lo, hi) = map.rates.iter().fold((1.0f64, 0.0f64), |(l, h), r| (l.min(*r), h.max(*r)));
        prop_assert!(s.rates.iter().all(|r| *r >= lo - 1e-12 && *r <= hi + 1e-12));
    }
}
