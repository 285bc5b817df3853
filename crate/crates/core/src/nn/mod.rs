//! Residual 1D convolutional filter with output-consistency normalization.
//!
//! The convolution stack `F` carries no biases and enters only through its
//! odd part `G(u) = (F(u) - F(-u)) / 2`. With leaky-ReLU activations this
//! makes `G` positively and negatively homogeneous, so the normalized
//! output of a constant window is that constant for every parameter set.

mod io;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_model, load_model_expecting, save_model, ModelMeta};
pub use train::{train, write_history_csv, EpochRecord, TrainConfig, TrainOutcome};

/// Smallest admissible `|c_theta|`.
pub const NORMALIZER_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchitectureConfig {
    pub n_hidden_layers: usize,
    pub kernel_size: usize,
    pub hidden_channels: usize,
    pub leaky_slope: f64,
    pub input_length: usize,
    pub residual: bool,
}

impl ArchitectureConfig {
    pub fn paper() -> Self {
        ArchitectureConfig {
            n_hidden_layers: 5,
            kernel_size: 7,
            hidden_channels: 128,
            leaky_slope: 0.1,
            input_length: 36,
            residual: true,
        }
    }

    pub fn desk() -> Self {
        ArchitectureConfig {
            n_hidden_layers: 3,
            hidden_channels: 32,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size % 2 == 0 || self.kernel_size == 0 {
            return Err(Error::InvalidArgument(format!("kernel size {} must be odd", self.kernel_size)));
        }
        if self.n_hidden_layers == 0 || self.hidden_channels == 0 || self.input_length == 0 {
            return Err(Error::InvalidArgument("architecture sizes must be positive".into()));
        }
        if !self.leaky_slope.is_finite() {
            return Err(Error::InvalidArgument("leaky slope must be finite".into()));
        }
        Ok(())
    }

    /// `(out_channels, in_channels)` of every layer: one input layer, the
    /// remaining hidden layers, and the output layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let c = self.hidden_channels;
        let mut v = vec![(c, 1)];
        v.extend(std::iter::repeat((c, c)).take(self.n_hidden_layers - 1));
        v.push((1, c));
        v
    }
}

/// One same-length convolution with replicate padding; weights are stored
/// as `[out][in][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub out_channels: usize,
    pub in_channels: usize,
    pub kernel_size: usize,
    pub weights: Vec<f64>,
}

impl ConvLayer {
    fn zeros(out_channels: usize, in_channels: usize, kernel_size: usize) -> Self {
        ConvLayer {
            out_channels,
            in_channels,
            kernel_size,
            weights: vec![0.0; out_channels * in_channels * kernel_size],
        }
    }

    #[inline]
    fn w(&self, o: usize, c: usize) -> &[f64] {
        let k = self.kernel_size;
        let off = (o * self.in_channels + c) * k;
        &self.weights[off..off + k]
    }

    fn pad(&self, x: &[f64], len: usize) -> Vec<f64> {
        let half = self.kernel_size / 2;
        let plen = len + self.kernel_size - 1;
        let mut xp = vec![0.0; self.in_channels * plen];
        for c in 0..self.in_channels {
            for i in 0..plen {
                let src = (i as i64 - half as i64).clamp(0, len as i64 - 1) as usize;
                xp[c * plen + i] = x[c * len + src];
            }
        }
        xp
    }

    fn forward(&self, xp: &[f64], len: usize, y: &mut [f64]) {
        let plen = len + self.kernel_size - 1;
        for o in 0..self.out_channels {
            let yo = &mut y[o * len..(o + 1) * len];
            yo.fill(0.0);
            for c in 0..self.in_channels {
                let xc = &xp[c * plen..(c + 1) * plen];
                for (kk, &w) in self.w(o, c).iter().enumerate() {
                    for (yt, xt) in yo.iter_mut().zip(&xc[kk..kk + len]) {
                        *yt += w * xt;
                    }
                }
            }
        }
    }

    /// Accumulates weight gradients and returns the input gradient.
    fn backward(&self, xp: &[f64], len: usize, gy: &[f64], gw: &mut [f64]) -> Vec<f64> {
        let k = self.kernel_size;
        let half = k / 2;
        let plen = len + k - 1;
        let mut gxp = vec![0.0; self.in_channels * plen];
        for o in 0..self.out_channels {
            let go = &gy[o * len..(o + 1) * len];
            for c in 0..self.in_channels {
                let xc = &xp[c * plen..(c + 1) * plen];
                let off = (o * self.in_channels + c) * k;
                let gxc = &mut gxp[c * plen..(c + 1) * plen];
                for kk in 0..k {
                    let w = self.weights[off + kk];
                    let mut acc = 0.0;
                    for (t, g) in go.iter().enumerate() {
                        acc += g * xc[kk + t];
                        gxc[kk + t] += w * g;
                    }
                    gw[off + kk] += acc;
                }
            }
        }
        let mut gx = vec![0.0; self.in_channels * len];
        for c in 0..self.in_channels {
            for i in 0..plen {
                let dst = (i as i64 - half as i64).clamp(0, len as i64 - 1) as usize;
                gx[c * len + dst] += gxp[c * plen + i];
            }
        }
        gx
    }
}

/// Network parameters together with their architecture.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFilterParams {
    pub arch: ArchitectureConfig,
    pub layers: Vec<ConvLayer>,
}

/// Per-layer weight gradients, shaped like `ConvFilterParams::layers`.
pub type Gradients = Vec<Vec<f64>>;

struct StackTrace {
    /// padded input of every layer
    inputs: Vec<Vec<f64>>,
    /// pre-activation output of every layer
    pre: Vec<Vec<f64>>,
}

impl StackTrace {
    fn output(&self) -> &[f64] {
        self.pre.last().expect("at least one layer")
    }
}

impl ConvFilterParams {
    /// All-zero stack: with the residual skip the filter is the identity.
    pub fn zeros(arch: ArchitectureConfig) -> Result<Self> {
        arch.validate()?;
        let layers = arch
            .layer_shapes()
            .into_iter()
            .map(|(o, i)| ConvLayer::zeros(o, i, arch.kernel_size))
            .collect();
        Ok(ConvFilterParams { arch, layers })
    }

    /// Uniform fan-in initialization `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init(arch: ArchitectureConfig, seed: u64) -> Result<Self> {
        let mut p = Self::zeros(arch)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut p.layers {
            let bound = 1.0 / ((layer.in_channels * layer.kernel_size) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        Ok(p)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        self.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().all(|w| w.is_finite()))
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arch.input_length {
            return Err(Error::ShapeMismatch {
                layer: "input".into(),
                expected: self.arch.input_length.to_string(),
                found: x.len().to_string(),
            });
        }
        Ok(())
    }

    fn stack_forward(&self, x: &[f64]) -> StackTrace {
        let len = x.len();
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut act = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let xp = layer.pad(&act, len);
            let mut z = vec![0.0; layer.out_channels * len];
            layer.forward(&xp, len, &mut z);
            if li + 1 < n {
                let s = self.arch.leaky_slope;
                act = z.iter().map(|&v| if v > 0.0 { v } else { s * v }).collect();
            }
            inputs.push(xp);
            pre.push(z);
        }
        StackTrace { inputs, pre }
    }

    fn stack_backward(&self, trace: &StackTrace, grad_out: &[f64], grads: &mut Gradients) {
        let len = grad_out.len();
        let n = self.layers.len();
        let mut g = grad_out.to_vec();
        for li in (0..n).rev() {
            if li + 1 < n {
                let s = self.arch.leaky_slope;
                for (gv, &z) in g.iter_mut().zip(&trace.pre[li]) {
                    if z <= 0.0 {
                        *gv *= s;
                    }
                }
            }
            g = self.layers[li].backward(&trace.inputs[li], len, &g, &mut grads[li]);
        }
    }

    /// Odd part of the stack together with its two traces.
    fn odd_part(&self, x: &[f64]) -> (Vec<f64>, StackTrace, StackTrace) {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let tp = self.stack_forward(x);
        let tm = self.stack_forward(&neg);
        let g = tp.output().iter().zip(tm.output()).map(|(a, b)| 0.5 * (a - b)).collect();
        (g, tp, tm)
    }

    fn raw(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        if self.arch.residual {
            x.iter().zip(g).map(|(a, b)| a + b).collect()
        } else {
            g.to_vec()
        }
    }

    fn normalizer_parts(&self) -> Result<(f64, StackTrace, StackTrace)> {
        let ones = vec![1.0; self.arch.input_length];
        let (g, tp, tm) = self.odd_part(&ones);
        let raw = self.raw(&ones, &g);
        let c = raw.iter().sum::<f64>() / raw.len() as f64;
        if !(c.abs() >= NORMALIZER_FLOOR) {
            return Err(Error::DegenerateNormalizer(c));
        }
        Ok((c, tp, tm))
    }

    /// The normalizing constant `c_theta`: the mean filter response to ones.
    pub fn normalizer(&self) -> Result<f64> {
        Ok(self.normalizer_parts()?.0)
    }

    pub fn forward(&self, window: &[f64]) -> Result<Vec<f64>> {
        self.check_len(window)?;
        let c = self.normalizer()?;
        Ok(self.forward_with(window, c))
    }

    fn forward_with(&self, window: &[f64], c: f64) -> Vec<f64> {
        let (g, _, _) = self.odd_part(window);
        self.raw(window, &g).into_iter().map(|v| v / c).collect()
    }

    /// Outputs for many windows sharing one normalizer.
    pub fn forward_batch(&self, windows: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        for w in windows {
            self.check_len(w)?;
        }
        let c = self.normalizer()?;
        Ok(windows.par_iter().map(|w| self.forward_with(w, c)).collect())
    }

    /// Exact gradient of `sum_s 1/2 |forward(x_s) - t_s|^2`, including the
    /// path through the shared normalizer. Returns `(loss, gradients)`.
    ///
    /// Samples are processed in fixed-size chunks that are summed in order,
    /// so the result does not depend on the number of threads.
    pub fn batch_gradient(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> Result<(f64, Gradients)> {
        if inputs.len() != targets.len() {
            return Err(Error::InvalidArgument("inputs and targets differ in count".into()));
        }
        for (x, t) in inputs.iter().zip(targets) {
            self.check_len(x)?;
            self.check_len(t)?;
        }
        let (c, tp1, tm1) = self.normalizer_parts()?;
        const CHUNK: usize = 4;
        let idx: Vec<usize> = (0..inputs.len()).collect();
        let partials: Vec<(f64, f64, Gradients)> = idx
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut grads = self.zero_gradients();
                let mut loss = 0.0;
                let mut dc = 0.0;
                for &s in chunk {
                    let x = inputs[s];
                    let (g, tp, tm) = self.odd_part(x);
                    let raw = self.raw(x, &g);
                    let r: Vec<f64> = raw.iter().zip(targets[s]).map(|(a, t)| a / c - t).collect();
                    loss += 0.5 * r.iter().map(|v| v * v).sum::<f64>();
                    dc -= r.iter().zip(&raw).map(|(a, b)| a * b).sum::<f64>() / (c * c);
                    let up: Vec<f64> = r.iter().map(|v| 0.5 * v / c).collect();
                    self.stack_backward(&tp, &up, &mut grads);
                    let down: Vec<f64> = up.iter().map(|v| -v).collect();
                    self.stack_backward(&tm, &down, &mut grads);
                }
                (loss, dc, grads)
            })
            .collect();
        let mut grads = self.zero_gradients();
        let mut loss = 0.0;
        let mut dc = 0.0;
        for (l, d, g) in partials {
            loss += l;
            dc += d;
            for (acc, part) in grads.iter_mut().zip(&g) {
                for (a, b) in acc.iter_mut().zip(part) {
                    *a += b;
                }
            }
        }
        // c = mean(1 + G(1)), G(1) = (F(1) - F(-1)) / 2
        let len = self.arch.input_length as f64;
        let up = vec![0.5 * dc / len; self.arch.input_length];
        self.stack_backward(&tp1, &up, &mut grads);
        let down: Vec<f64> = up.iter().map(|v| -v).collect();
        self.stack_backward(&tm1, &down, &mut grads);
        Ok((loss, grads))
    }

    /// Single-sample gradient of `1/2 |forward(x) - target|^2`.
    pub fn backward(&self, window: &[f64], target: &[f64]) -> Result<Gradients> {
        Ok(self.batch_gradient(&[window], &[target])?.1)
    }

    /// Mean squared error over a set of pairs.
    pub fn mse(&self, inputs: &[&[f64]], targets: &[&[f64]]) -> Result<f64> {
        let out = self.forward_batch(inputs)?;
        let mut s = 0.0;
        let mut count = 0usize;
        for (o, t) in out.iter().zip(targets) {
            s += o.iter().zip(*t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            count += o.len();
        }
        Ok(s / count.max(1) as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ArchitectureConfig {
        ArchitectureConfig {
            n_hidden_layers: 1,
            hidden_channels: 4,
            ..ArchitectureConfig::desk()
        }
    }

    fn window(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn layer_shapes_follow_architecture() {
        let a = ArchitectureConfig::paper();
        let s = a.layer_shapes();
        assert_eq!(s.len(), 6);
        assert_eq!(s[0], (128, 1));
        assert_eq!(s[5], (1, 128));
        assert_eq!(small().layer_shapes(), vec![(4, 1), (1, 4)]);
        assert!(ArchitectureConfig { kernel_size: 6, ..a }.validate().is_err());
    }

    #[test]
    fn zero_stack_is_identity() {
        let p = ConvFilterParams::zeros(ArchitectureConfig::desk()).unwrap();
        assert_eq!(p.normalizer().unwrap(), 1.0);
        let x = window(3);
        assert_eq!(p.forward(&x).unwrap(), x);
    }

    #[test]
    fn ones_map_to_mean_one() {
        for seed in 0..5 {
            let p = ConvFilterParams::init(ArchitectureConfig::desk(), seed).unwrap();
            let y = p.forward(&[1.0; 36]).unwrap();
            let mean = y.iter().sum::<f64>() / 36.0;
            assert!((mean - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn output_length_matches_input() {
        let p = ConvFilterParams::init(small(), 1).unwrap();
        assert_eq!(p.forward(&window(1)).unwrap().len(), 36);
        assert!(matches!(p.forward(&[0.0; 35]), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn degenerate_normalizer_is_reported() {
        let arch = ArchitectureConfig { residual: false, ..small() };
        let p = ConvFilterParams::zeros(arch).unwrap();
        assert!(matches!(p.forward(&window(0)), Err(Error::DegenerateNormalizer(_))));
    }

    #[test]
    fn gradient_vanishes_at_target_and_scales_linearly() {
        let p = ConvFilterParams::init(small(), 7).unwrap();
        let x = window(11);
        let y = p.forward(&x).unwrap();
        let g = p.backward(&x, &y).unwrap();
        assert!(g.iter().flatten().all(|v| v.abs() < 1e-14));
        // duplicating the sample doubles the loss and every gradient
        let t = window(12);
        let (l1, g1) = p.batch_gradient(&[&x], &[&t]).unwrap();
        let (l2, g2) = p.batch_gradient(&[&x, &x], &[&t, &t]).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-12 * l1);
        for (a, b) in g1.iter().flatten().zip(g2.iter().flatten()) {
            assert!((b - 2.0 * a).abs() <= 1e-12 * a.abs().max(1e-12));
        }
    }

    fn loss(p: &ConvFilterParams, xs: &[Vec<f64>], ts: &[Vec<f64>]) -> f64 {
        let c = p.normalizer().unwrap();
        xs.iter()
            .zip(ts)
            .map(|(x, t)| 0.5 * p.forward_with(x, c).iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
            .sum()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = ConvFilterParams::init(small(), 5).unwrap();
        let xs: Vec<Vec<f64>> = (0..3).map(window).collect();
        let ts: Vec<Vec<f64>> = (10..13).map(window).collect();
        let xr: Vec<&[f64]> = xs.iter().map(|v| v.as_slice()).collect();
        let tr: Vec<&[f64]> = ts.iter().map(|v| v.as_slice()).collect();
        let (_, g) = p.batch_gradient(&xr, &tr).unwrap();
        let eps = 1e-5;
        for li in 0..p.layers.len() {
            for wi in 0..p.layers[li].weights.len() {
                let mut a = p.clone();
                a.layers[li].weights[wi] += eps;
                let mut b = p.clone();
                b.layers[li].weights[wi] -= eps;
                let fd = (loss(&a, &xs, &ts) - loss(&b, &xs, &ts)) / (2.0 * eps);
                let an = g[li][wi];
                assert!((fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()).max(1e-6), "layer {li} w {wi}: {an} vs {fd}");
            }
        }
    }
}
