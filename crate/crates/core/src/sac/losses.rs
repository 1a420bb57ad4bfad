//! Loss values and analytic gradients of the three SAC objectives.

use alloc::vec;

use crate::error::{Error, Result};
use crate::math::exp;
use crate::policy::{squash, Actor, Critic, ACTION_DIM};

/// `½·mean((Q(s, a) − y)²)`; gradient accumulated into `grad`.
pub fn critic_loss_grad(
    critic: &Critic,
    obs: &[[f64; 4]],
    actions: &[[f64; 2]],
    targets: &[f64],
    grad: &mut [f64],
) -> Result<f64> {
    let n = obs.len();
    if actions.len() != n || targets.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: actions.len().min(targets.len()),
        });
    }
    let mut loss = 0.0;
    for i in 0..n {
        let cache = critic.net.forward_cached(&Critic::input(&obs[i], &actions[i]))?;
        let err = cache.output()[0] - targets[i];
        loss += 0.5 * err * err / n as f64;
        critic.net.backward(Some(&cache), &[err / n as f64], grad)?;
    }
    Ok(loss)
}

/// Actor objective `mean(α·log π(ã|s) − min(Q1, Q2)(s, ã))` for fixed
/// reparameterization noise. Returns `(loss, mean log π)`.
pub fn actor_loss_grad(
    actor: &Actor,
    q1: &Critic,
    q2: &Critic,
    obs: &[[f64; 4]],
    noise: &[[f64; ACTION_DIM]],
    alpha: f64,
    grad: &mut [f64],
) -> Result<(f64, f64)> {
    let n = obs.len();
    if noise.len() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: noise.len(),
        });
    }
    let mut loss = 0.0;
    let mut mean_logp = 0.0;
    let mut scratch = vec![0.0; q1.net.n_params()];
    for i in 0..n {
        let (head, cache) = actor.head_cached(&obs[i])?;
        let s = squash(&head, noise[i], 1.0);
        let c1 = q1.net.forward_cached(&Critic::input(&obs[i], &s.action))?;
        let c2 = q2.net.forward_cached(&Critic::input(&obs[i], &s.action))?;
        let (v1, v2) = (c1.output()[0], c2.output()[0]);
        let (q, critic, c) = if v1 <= v2 { (v1, q1, &c1) } else { (v2, q2, &c2) };
        loss += (alpha * s.log_prob - q) / n as f64;
        mean_logp += s.log_prob / n as f64;

        let dq_dx = critic.net.backward(Some(c), &[1.0], &mut scratch)?;
        let mut g_out = [0.0; 2 * ACTION_DIM];
        for d in 0..ACTION_DIM {
            let a = s.action[d];
            let t = crate::math::tanh(s.pre_squash[d]);
            let dq_du = dq_dx[4 + d] * (1.0 - a * a);
            let sigma_eps = exp(head.log_std[d]) * noise[i][d];
            g_out[d] = (alpha * 2.0 * t - dq_du) / n as f64;
            g_out[ACTION_DIM + d] = if head.log_std_free[d] {
                (alpha * (2.0 * t * sigma_eps - 1.0) - dq_du * sigma_eps) / n as f64
            } else {
                0.0
            };
        }
        actor.net.backward(Some(&cache), &g_out, grad)?;
    }
    Ok((loss, mean_logp))
}

/// Temperature objective `−mean(ln α · (log π + H̄))`. Returns the loss
/// and its derivative with respect to `ln α`.
pub fn temperature_loss_grad(log_alpha: f64, log_probs: &[f64], target_entropy: f64) -> (f64, f64) {
    let n = log_probs.len().max(1) as f64;
    let g = -log_probs.iter().map(|lp| lp + target_entropy).sum::<f64>() / n;
    (log_alpha * g, g)
}
