use super::*;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

fn random_obs(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 4]> {
    (0..n)
        .map(|_| core::array::from_fn(|_| rng.random_range(-1.5..1.5)))
        .collect()
}

fn random_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 2]> {
    (0..n).map(|_| standard_noise(rng)).collect()
}

fn probe_indices(rng: &mut ChaCha8Rng, n_params: usize, k: usize) -> Vec<usize> {
    (0..k).map(|_| rng.random_range(0..n_params)).collect()
}

#[test]
fn actor_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let actor = Actor::init(&mut rng);
        let q1 = Critic::init(&mut rng);
        let q2 = Critic::init(&mut rng);
        let obs = random_obs(&mut rng, 4);
        let noise = random_noise(&mut rng, 4);
        let alpha = rng.random_range(0.01..1.0);
        let mut grad = vec![0.0; actor.net.n_params()];
        actor_loss_grad(&actor, &q1, &q2, &obs, &noise, alpha, &mut grad).unwrap();
        let loss = |a: &Actor| {
            let mut scratch = vec![0.0; a.net.n_params()];
            actor_loss_grad(a, &q1, &q2, &obs, &noise, alpha, &mut scratch).unwrap().0
        };
        for i in probe_indices(&mut rng, grad.len(), 6) {
            let h = 1e-6;
            let mut p = actor.clone();
            p.net.params[i] += h;
            let mut m = actor.clone();
            m.net.params[i] -= h;
            let fd = (loss(&p) - loss(&m)) / (2.0 * h);
            worst = worst.max(rel_err(grad[i], fd));
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn critic_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let critics = [Critic::init(&mut rng), Critic::init(&mut rng)];
        let obs = random_obs(&mut rng, 4);
        let actions: Vec<[f64; 2]> = (0..4)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let targets: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
        for critic in &critics {
            let mut grad = vec![0.0; critic.net.n_params()];
            critic_loss_grad(critic, &obs, &actions, &targets, &mut grad).unwrap();
            let loss = |c: &Critic| {
                let mut s = vec![0.0; c.net.n_params()];
                critic_loss_grad(c, &obs, &actions, &targets, &mut s).unwrap()
            };
            for i in probe_indices(&mut rng, grad.len(), 6) {
                let h = 1e-6;
                let mut p = critic.clone();
                p.net.params[i] += h;
                let mut m = critic.clone();
                m.net.params[i] -= h;
                let fd = (loss(&p) - loss(&m)) / (2.0 * h);
                worst = worst.max(rel_err(grad[i], fd));
            }
        }
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn temperature_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let la = rng.random_range(-5.0..1.0);
        let lps: Vec<f64> = (0..8).map(|_| rng.random_range(-4.0..2.0)).collect();
        let h_bar = rng.random_range(-3.0..0.0);
        let (_, g) = temperature_loss_grad(la, &lps, h_bar);
        let h = 1e-5;
        let fd = (temperature_loss_grad(la + h, &lps, h_bar).0
            - temperature_loss_grad(la - h, &lps, h_bar).0)
            / (2.0 * h);
        worst = worst.max(rel_err(g, fd));
    }
    assert!(worst < 1e-4, "worst relative error {worst:e}");
}

#[test]
fn temperature_gradient_sign_follows_entropy_gap() {
    // Entropy above target: α should shrink, so the gradient is positive.
    let (_, g) = temperature_loss_grad(0.0, &[-3.0], -2.0);
    assert!(g > 0.0);
    let (_, g) = temperature_loss_grad(0.0, &[3.0], -2.0);
    assert!(g < 0.0);
    let (_, g) = temperature_loss_grad(0.0, &[2.0], -2.0);
    assert_eq!(g, 0.0);
}

fn agent(seed: u64, cfg: &SacConfig) -> Agent {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Agent::new(cfg, ObsNorm::default(), &mut rng)
}

fn batch(rng: &mut ChaCha8Rng, n: usize, terminal: bool) -> Vec<Transition> {
    (0..n)
        .map(|_| Transition {
            obs: core::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            action: [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
            reward: rng.random_range(-1.0..4.0),
            next_obs: core::array::from_fn(|_| rng.random_range(-1.0..1.0)),
            terminal,
        })
        .collect()
}

#[test]
fn terminal_targets_equal_rewards() {
    let cfg = SacConfig::default();
    let a = agent(1, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let b = batch(&mut rng, 16, true);
    let y = critic_targets(&a, &b, cfg.discount, &mut rng).unwrap();
    for (t, y) in b.iter().zip(y) {
        assert_eq!(y, t.reward);
    }
}

#[test]
fn nonterminal_target_matches_hand_bootstrap() {
    let cfg = SacConfig::default();
    let a = agent(3, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let b = batch(&mut rng, 1, false);
    let y = critic_targets(&a, &b, cfg.discount, &mut rng.clone()).unwrap()[0];
    let head = a.actor.head(&b[0].next_obs).unwrap();
    let s = squash(&head, standard_noise(&mut rng), 1.0);
    let q = a.q1_target.value(&b[0].next_obs, &s.action).unwrap()
        .min(a.q2_target.value(&b[0].next_obs, &s.action).unwrap());
    let want = b[0].reward + cfg.discount * (q - a.temperature.alpha() * s.log_prob);
    assert!((y - want).abs() < 1e-12);
}

#[test]
fn soft_update_is_exact_convex_blend() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let online = Critic::init(&mut rng);
    let mut target = Critic::init(&mut rng);
    let before = target.clone();
    soft_update(&mut target, &online, 0.25);
    for i in 0..online.net.n_params() {
        let want = 0.75 * before.net.params[i] + 0.25 * online.net.params[i];
        assert_eq!(target.net.params[i], want);
    }
    soft_update(&mut target, &online, 1.0);
    assert_eq!(target, online);
}

#[test]
fn one_update_lowers_critic_loss_on_its_batch() {
    let cfg = SacConfig {
        lr_critic: 1e-3,
        ..SacConfig::default()
    };
    let mut a = agent(6, &cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let b = batch(&mut rng, 32, true);
    let obs: Vec<_> = b.iter().map(|t| t.obs).collect();
    let act: Vec<_> = b.iter().map(|t| t.action).collect();
    let y: Vec<_> = b.iter().map(|t| t.reward).collect();
    let loss = |c: &Critic| {
        let mut g = vec![0.0; c.net.n_params()];
        critic_loss_grad(c, &obs, &act, &y, &mut g).unwrap()
    };
    let before = loss(&a.q1) + loss(&a.q2);
    update_step(&mut a, &b, &cfg, &mut rng).unwrap();
    assert!(loss(&a.q1) + loss(&a.q2) < before);
}

#[test]
fn zero_learning_rates_leave_networks_fixed() {
    let cfg = SacConfig {
        lr_actor: 0.0,
        lr_critic: 0.0,
        lr_temperature: 0.0,
        ..SacConfig::default()
    };
    let mut a = agent(8, &cfg);
    let before = a.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..5 {
        let b = batch(&mut rng, 16, false);
        update_step(&mut a, &b, &cfg, &mut rng).unwrap();
    }
    assert_eq!(a.actor, before.actor);
    assert_eq!(a.q1, before.q1);
    // Targets blend equal weights, so only rounding can move them.
    for (t, b) in a.q2_target.net.params.iter().zip(&before.q2_target.net.params) {
        assert!((t - b).abs() < 1e-15);
    }
    assert_eq!(a.temperature, before.temperature);
}

#[test]
fn initial_trigger_bias_sets_trigger_mean() {
    let cfg = SacConfig::default();
    let mut a = agent(10, &cfg);
    let b = a.actor.net.bias_offset(a.actor.net.sizes().len() - 2);
    assert_eq!(a.actor.net.params[b], cfg.initial_trigger_bias);
    let n_w = a.actor.net.params.len();
    // Zero the last layer weights: the trigger mean is the bias alone.
    let sizes = a.actor.net.sizes().to_vec();
    let last_w = sizes[sizes.len() - 2] * sizes[sizes.len() - 1];
    for p in &mut a.actor.net.params[b - last_w..b] {
        *p = 0.0;
    }
    assert!(b < n_w);
    let h = a.actor.head(&[0.3, -0.2, 0.1, 0.0]).unwrap();
    assert_eq!(h.mean[0], cfg.initial_trigger_bias);
}

#[test]
fn wait_subsampling_labels_every_transition_with_return() {
    let cfg = SacConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let decisions: Vec<Decision> = (0..20)
        .map(|k| Decision {
            obs: Observation {
                tau: 1.0 - 0.05 * k as f64,
                theta_x: 0.1,
                d_perp: 2.0,
                theta_plane: 0.0,
            },
            action: Action {
                trigger: if k == 19 { 0.5 } else { -0.5 },
                rotation: 1.0,
            },
        })
        .collect();
    let ep = TaskEpisode {
        decisions,
        reward: 2.5,
        log: EpisodeLog {
            episode: 0,
            reward: 2.5,
            n_legs: 4,
            triggered: true,
            tau_trg: Some(0.05),
            plane_angle: 0.0,
            speed: 2.0,
            flight_angle: 1.5,
        },
    };
    let mut buf = ReplayBuffer::new(100);
    let pushed = push_episode(&mut buf, &ep, &ObsNorm::default(), &cfg, &mut rng);
    assert_eq!(pushed, 1 + cfg.wait_samples);
    for i in 0..buf.len() {
        assert!(buf.get(i).terminal);
        assert_eq!(buf.get(i).reward, 2.5);
    }
}

#[test]
fn moving_average_and_plateau() {
    let ma = moving_average(&[1.0, 3.0, 5.0, 7.0], 2);
    assert_eq!(ma, vec![1.0, 2.0, 4.0, 6.0]);
    let mut r: Vec<f64> = (0..400).map(|i| i as f64 / 400.0).collect();
    r.extend(core::iter::repeat_n(1.0, 600));
    let p = plateau_episode(&r, 0, 100, 200, 0.01).unwrap();
    assert!((600..=800).contains(&p), "{p}");
    // A flat prefix before `start` is ignored.
    let mut r2 = vec![0.0; 300];
    r2.extend(&r);
    assert!(plateau_episode(&r2, 300, 100, 200, 0.01).unwrap() >= 900);
    assert_eq!(plateau_episode(&r[..400], 0, 100, 200, 0.01), None);
}

fn toy_cfg() -> SacConfig {
    SacConfig {
        total_episodes: 300,
        ..SacConfig::default()
    }
}

#[test]
fn training_is_deterministic_under_seed() {
    let task = ToyTriggerTask::default();
    let cfg = SacConfig {
        total_episodes: 230,
        ..SacConfig::default()
    };
    let a = train(&task, &cfg, 21, |_| {}).unwrap();
    let b = train(&task, &cfg, 21, |_| {}).unwrap();
    assert_eq!(a.agent, b.agent);
    assert_eq!(a.curve, b.curve);
    let c = train(&task, &cfg, 22, |_| {}).unwrap();
    assert_ne!(a.agent.actor, c.agent.actor);
}

#[test]
fn toy_trigger_task_is_learned() {
    let task = ToyTriggerTask::default();
    let out = train(&task, &toy_cfg(), 0, |_| {}).unwrap();
    let acc = task.trigger_accuracy(&out.agent.actor, out.agent.norm, 600, 1);
    assert!(acc > 0.95, "accuracy {acc}");
}

#[test]
fn invalid_config_is_rejected() {
    let task = ToyTriggerTask::default();
    let cfg = SacConfig {
        batch_size: 0,
        ..SacConfig::default()
    };
    assert!(train(&task, &cfg, 0, |_| {}).is_err());
    let cfg = SacConfig {
        discount: 1.5,
        ..SacConfig::default()
    };
    assert!(cfg.validate().is_err());
}
