use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{exp, sqrt};

/// Fully connected network with tanh hidden layers and a linear output.
///
/// Parameters are one flat vector: for every layer the row-major
/// `out × in` weight matrix followed by the `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    pub params: Vec<f64>,
}

/// Layer activations of one forward pass, input first.
#[derive(Debug, Clone, PartialEq)]
pub struct Cache {
    acts: Vec<Vec<f64>>,
}

impl Cache {
    pub fn output(&self) -> &[f64] {
        self.acts.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

/// `tanh` through one `exp`; absolute error below 1e-15.
#[inline]
fn fast_tanh(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        return z - z * z * z / 3.0;
    }
    let e = exp(-2.0 * z.abs());
    let t = (1.0 - e) / (1.0 + e);
    if z < 0.0 {
        -t
    } else {
        t
    }
}

fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl Mlp {
    /// All-zero parameters.
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs input and output sizes");
        Mlp {
            sizes: sizes.to_vec(),
            params: vec![0.0; param_count(sizes)],
        }
    }

    /// Uniform `±1/√fan_in` initialization.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Self {
        let mut m = Self::zeros(sizes);
        let mut off = 0;
        for w in sizes.windows(2) {
            let bound = 1.0 / sqrt(w[0] as f64);
            for p in &mut m.params[off..off + w[0] * w[1] + w[1]] {
                *p = rng.random_range(-bound..bound);
            }
            off += w[0] * w[1] + w[1];
        }
        m
    }

    pub fn from_params(sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let expected = param_count(sizes);
        if sizes.len() < 2 || params.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            params,
        })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Offset of layer `k`'s bias block within `params`.
    pub fn bias_offset(&self, k: usize) -> usize {
        let mut off = 0;
        for (i, w) in self.sizes.windows(2).enumerate() {
            off += w[0] * w[1];
            if i == k {
                return off;
            }
            off += w[1];
        }
        off
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.acts.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<Cache> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(x.to_vec());
        let mut off = 0;
        for (k, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &self.params[off..off + n_in * n_out];
            let bias = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            let input = &acts[k];
            let mut out = Vec::with_capacity(n_out);
            for j in 0..n_out {
                let row = &weights[j * n_in..(j + 1) * n_in];
                let z: f64 = row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + bias[j];
                out.push(if k + 1 < n_layers { fast_tanh(z) } else { z });
            }
            acts.push(out);
            off += n_in * n_out + n_out;
        }
        Ok(Cache { acts })
    }

    /// Reverse-mode pass. Accumulates `∂L/∂params` into `grad` and returns
    /// `∂L/∂input`.
    pub fn backward(
        &self,
        cache: Option<&Cache>,
        grad_out: &[f64],
        grad: &mut [f64],
    ) -> Result<Vec<f64>> {
        let cache = cache.ok_or(Error::MissingCache)?;
        let n_layers = self.sizes.len() - 1;
        if cache.acts.len() != n_layers + 1 {
            return Err(Error::MissingCache);
        }
        if grad_out.len() != self.output_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.output_dim(),
                got: grad_out.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::ShapeMismatch {
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let mut offsets = Vec::with_capacity(n_layers);
        let mut off = 0;
        for w in self.sizes.windows(2) {
            offsets.push(off);
            off += w[0] * w[1] + w[1];
        }
        let mut delta = grad_out.to_vec();
        for k in (0..n_layers).rev() {
            let (n_in, n_out) = (self.sizes[k], self.sizes[k + 1]);
            if k + 1 < n_layers {
                for (d, a) in delta.iter_mut().zip(&cache.acts[k + 1]) {
                    *d *= 1.0 - a * a;
                }
            }
            let off = offsets[k];
            let input = &cache.acts[k];
            for j in 0..n_out {
                let row = &mut grad[off + j * n_in..off + (j + 1) * n_in];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += delta[j] * x;
                }
                grad[off + n_in * n_out + j] += delta[j];
            }
            let weights = &self.params[off..off + n_in * n_out];
            let mut prev = vec![0.0; n_in];
            for j in 0..n_out {
                let row = &weights[j * n_in..(j + 1) * n_in];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += delta[j] * w;
                }
            }
            delta = prev;
        }
        Ok(delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_weights_output_bias() {
        let mut m = Mlp::zeros(&[4, 10, 10, 10, 4]);
        let b = m.bias_offset(3);
        m.params[b..b + 4].copy_from_slice(&[0.1, -0.2, -1.0, -3.0]);
        let y = m.forward(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(y, vec![0.1, -0.2, -1.0, -3.0]);
    }

    #[test]
    fn single_linear_layer_gradient() {
        let m = Mlp::from_params(&[3, 1], vec![0.5, -1.0, 2.0, 0.25]).unwrap();
        let x = [1.0, 2.0, -3.0];
        let cache = m.forward_cached(&x).unwrap();
        assert!((cache.output()[0] - (0.5 - 2.0 - 6.0 + 0.25)).abs() < 1e-15);
        let mut g = vec![0.0; 4];
        let gx = m.backward(Some(&cache), &[1.0], &mut g).unwrap();
        assert_eq!(g, vec![1.0, 2.0, -3.0, 1.0]);
        assert_eq!(gx, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = Mlp::init(&[6, 10, 10, 10, 1], &mut rng);
        let cache = m.forward_cached(&[0.1; 6]).unwrap();
        let mut g = vec![0.0; m.n_params()];
        m.backward(Some(&cache), &[0.0], &mut g).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn errors() {
        let m = Mlp::zeros(&[4, 3, 2]);
        assert!(matches!(m.forward(&[0.0; 3]), Err(Error::ShapeMismatch { .. })));
        let mut g = vec![0.0; m.n_params()];
        assert_eq!(m.backward(None, &[0.0; 2], &mut g), Err(Error::MissingCache));
        assert!(Mlp::from_params(&[4, 3, 2], vec![0.0; 5]).is_err());
    }
}
