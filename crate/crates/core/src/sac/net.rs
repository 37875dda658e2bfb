//! Fully connected ReLU networks with hand-written backpropagation.
//!
//! Batches are stored column-wise: an input of shape `(in, B)` holds one
//! sample per column.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One affine layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// Affine layers with ReLU between them and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Dense>,
}

/// Parameter gradients, shaped like the network they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<DMatrix<f64>>,
    pre: Vec<DMatrix<f64>>,
}

fn add_bias(z: &mut DMatrix<f64>, b: &DVector<f64>) {
    for mut col in z.column_iter_mut() {
        col += b;
    }
}

impl DenseNet {
    /// Layer widths `sizes[0] -> sizes[1] -> ... -> sizes[last]`, with weights
    /// and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> DenseNet {
        assert!(sizes.len() >= 2, "a network needs at least one layer");
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut draw = || rng.random_range(-bound..bound);
                let weights = DMatrix::from_fn(w[1], w[0], |_, _| draw());
                let bias = DVector::from_fn(w[1], |_, _| draw());
                Dense { w: weights, b: bias }
            })
            .collect();
        DenseNet { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<DenseNet> {
        if layers.is_empty() {
            return Err(Error::Checkpoint("network without layers".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.b.len() != l.w.nrows() {
                return Err(Error::Checkpoint(format!("layer {i}: bias length mismatch")));
            }
            if i > 0 && layers[i - 1].w.nrows() != l.w.ncols() {
                return Err(Error::Checkpoint(format!("layer {i}: input width mismatch")));
            }
        }
        Ok(DenseNet { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].w.nrows()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.forward_cached(x).0
    }

    pub fn forward_cached(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, ForwardCache) {
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = &layer.w * &a;
            add_bias(&mut z, &layer.b);
            inputs.push(a);
            a = if i < last { z.map(|v| v.max(0.0)) } else { z.clone() };
            pre.push(z);
        }
        (a, ForwardCache { inputs, pre })
    }

    /// Gradients of a scalar loss given `d_out = dL/d(output)`; also returns
    /// `dL/d(input)`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &DMatrix<f64>) -> (Gradients, DMatrix<f64>) {
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut dz = d_out.clone();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let gw = &dz * cache.inputs[i].transpose();
            let gb = dz.column_sum();
            grads.push(Dense { w: gw, b: gb });
            let mut da = layer.w.transpose() * &dz;
            if i > 0 {
                da.zip_apply(&cache.pre[i - 1], |g, z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            dz = da;
        }
        grads.reverse();
        (Gradients { layers: grads }, dz)
    }

    /// All parameters, layer by layer, weights (column-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.w.as_slice());
            out.extend_from_slice(l.b.as_slice());
        }
        out
    }

    pub fn set_params(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_params(), "parameter count mismatch");
        let mut at = 0;
        for l in &mut self.layers {
            let n = l.w.len();
            l.w.as_mut_slice().copy_from_slice(&values[at..at + n]);
            at += n;
            let n = l.b.len();
            l.b.as_mut_slice().copy_from_slice(&values[at..at + n]);
            at += n;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }

    pub fn max_abs_param(&self) -> f64 {
        self.params().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self <- self - lr * grad`.
    pub fn sgd_step(&mut self, grad: &Gradients, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            l.w -= &g.w * lr;
            l.b -= &g.b * lr;
        }
    }
}

impl Gradients {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.w.as_slice());
            out.extend_from_slice(l.b.as_slice());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.w.iter().chain(l.b.iter()).all(|v| v.is_finite()))
    }
}

/// `target <- tau * online + (1 - tau) * target`, elementwise.
pub fn polyak_update(target: &mut DenseNet, online: &DenseNet, tau: f64) {
    assert_eq!(target.num_params(), online.num_params(), "shape mismatch");
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        t.w.zip_apply(&o.w, |x, y| *x = tau * y + (1.0 - tau) * *x);
        t.b.zip_apply(&o.b, |x, y| *x = tau * y + (1.0 - tau) * *x);
    }
}

/// Adam moments over the flattened parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(num_params: usize) -> AdamState {
        AdamState {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, net: &mut DenseNet, grad: &Gradients, lr: f64) {
        self.t += 1;
        let g = grad.flatten();
        let mut p = net.params();
        let c1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let c2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for i in 0..p.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * g[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * g[i] * g[i];
            p[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
        net.set_params(&p);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let den: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        num / den
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = substream(3, 0);
        let net = DenseNet::new(&[3, 5, 4, 2], &mut rng);
        let x = DMatrix::from_fn(3, 6, |_, _| rng.random_range(-1.0..1.0));
        let w = DMatrix::from_fn(2, 6, |_, _| rng.random_range(-1.0..1.0));
        // L = sum(w .* net(x))
        let loss = |n: &DenseNet, x: &DMatrix<f64>| n.forward(x).component_mul(&w).sum();
        let (_, cache) = net.forward_cached(&x);
        let (g, dx) = net.backward(&cache, &w);
        let p = net.params();
        let h = 1e-5;
        let mut fd = vec![0.0; p.len()];
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i] += h;
            let mut up = net.clone();
            up.set_params(&q);
            q[i] -= 2.0 * h;
            let mut dn = net.clone();
            dn.set_params(&q);
            fd[i] = (loss(&up, &x) - loss(&dn, &x)) / (2.0 * h);
        }
        assert!(rel_err(&g.flatten(), &fd) < 1e-6);
        let mut fdx = DMatrix::zeros(3, 6);
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            fdx[i] = (loss(&net, &xp) - loss(&net, &xm)) / (2.0 * h);
        }
        assert!(rel_err(dx.as_slice(), fdx.as_slice()) < 1e-6);
    }

    #[test]
    fn params_round_trip() {
        let mut rng = substream(1, 0);
        let mut net = DenseNet::new(&[2, 3, 1], &mut rng);
        let p: Vec<f64> = (0..net.num_params()).map(|i| i as f64).collect();
        net.set_params(&p);
        assert_eq!(net.params(), p);
        assert_eq!(net.num_params(), 2 * 3 + 3 + 3 + 1);
    }

    #[test]
    fn polyak_limits() {
        let mut rng = substream(2, 0);
        let online = DenseNet::new(&[2, 3, 1], &mut rng);
        let start = DenseNet::new(&[2, 3, 1], &mut rng);
        let mut t = start.clone();
        polyak_update(&mut t, &online, 1.0);
        assert_eq!(t, online);
        let mut t = start.clone();
        polyak_update(&mut t, &online, 0.0);
        assert_eq!(t, start);
    }

    #[test]
    fn polyak_converges_geometrically() {
        let mut rng = substream(4, 0);
        let online = DenseNet::new(&[2, 3, 1], &mut rng);
        let mut t = DenseNet::new(&[2, 3, 1], &mut rng);
        let tau = 0.005;
        let dist = |t: &DenseNet| {
            t.params()
                .iter()
                .zip(online.params())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let mut prev = dist(&t);
        for _ in 0..50 {
            polyak_update(&mut t, &online, tau);
            let d = dist(&t);
            assert!((d / prev - (1.0 - tau)).abs() < 1e-9);
            prev = d;
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut rng = substream(5, 0);
        let mut net = DenseNet::new(&[2, 2, 1], &mut rng);
        let before = net.params();
        let (_, cache) = net.forward_cached(&DMatrix::from_element(2, 1, 0.5));
        let (g, _) = net.backward(&cache, &DMatrix::from_element(1, 1, 1.0));
        let mut adam = AdamState::new(net.num_params());
        adam.step(&mut net, &g, 0.01);
        for ((a, b), gi) in net.params().iter().zip(&before).zip(g.flatten()) {
            if gi != 0.0 {
                assert!(((b - a) - 0.01 * gi.signum()).abs() < 1e-6);
            }
        }
    }
}
