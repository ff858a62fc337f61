//! Small fully convolutional superresolution network with hand-written
//! backpropagation. Every layer computes `conv(x, W) − b` over the valid
//! region; hidden layers apply `soft_nn` (ReLU with the bias as threshold),
//! the last layer is linear.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::conv::Patch;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipMode {
    None,
    /// Output = last layer + center crop of the input.
    GlobalResidual,
    /// Output of layer `i` is added to the pre-activation of layer
    /// `depth − i` for `1 ≤ i < depth/2`.
    SymmetricSkips,
}

impl SkipMode {
    pub fn code(self) -> u32 {
        match self {
            SkipMode::None => 0,
            SkipMode::GlobalResidual => 1,
            SkipMode::SymmetricSkips => 2,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(SkipMode::None),
            1 => Some(SkipMode::GlobalResidual),
            2 => Some(SkipMode::SymmetricSkips),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SkipMode::None => "none",
            SkipMode::GlobalResidual => "global_residual",
            SkipMode::SymmetricSkips => "symmetric_skips",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub depth: usize,
    pub width: usize,
    #[serde(default = "default_kernel")]
    pub kernel: usize,
    #[serde(default = "default_skip")]
    pub skip_mode: SkipMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

fn default_kernel() -> usize {
    3
}
fn default_skip() -> SkipMode {
    SkipMode::None
}
fn default_lr() -> f64 {
    0.01
}
fn default_epochs() -> usize {
    10
}

impl NetworkConfig {
    pub fn new(depth: usize, width: usize, skip_mode: SkipMode, seed: u64) -> Self {
        Self {
            depth,
            width,
            kernel: default_kernel(),
            skip_mode,
            seed,
            learning_rate: default_lr(),
            epochs: default_epochs(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 2 {
            return Err(Error::Config(format!("depth {} < 2", self.depth)));
        }
        if self.width == 0 {
            return Err(Error::Config("width must be at least 1".into()));
        }
        if self.kernel == 0 || self.kernel % 2 == 0 {
            return Err(Error::Config(format!("kernel {} must be odd", self.kernel)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }

    pub fn receptive_field(&self) -> usize {
        self.depth * (self.kernel - 1) + 1
    }
}

/// `ch × h × w`, row-major per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub ch: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(ch: usize, h: usize, w: usize) -> Self {
        Self {
            ch,
            h,
            w,
            data: vec![0.0; ch * h * w],
        }
    }

    pub fn from_patch(p: &Patch) -> Self {
        Self {
            ch: 1,
            h: p.rows(),
            w: p.cols(),
            data: p.to_row_major(),
        }
    }

    pub fn to_patch(&self) -> Result<Patch> {
        if self.ch != 1 {
            return Err(Error::dim(format!("{} channels cannot form an image", self.ch)));
        }
        Patch::from_rows(self.h, self.w, &self.data)
    }

    fn at(&self, c: usize, i: usize, j: usize) -> usize {
        (c * self.h + i) * self.w + j
    }

    fn center_crop(&self, h: usize, w: usize) -> Tensor {
        let (t, l) = ((self.h - h) / 2, (self.w - w) / 2);
        let mut out = Tensor::zeros(self.ch, h, w);
        for c in 0..self.ch {
            for i in 0..h {
                let src = self.at(c, i + t, l);
                let dst = out.at(c, i, 0);
                out.data[dst..dst + w].copy_from_slice(&self.data[src..src + w]);
            }
        }
        out
    }

    // adds `small` into the center of `self`
    fn add_centered(&mut self, small: &Tensor) {
        let (t, l) = ((self.h - small.h) / 2, (self.w - small.w) / 2);
        for c in 0..small.ch {
            for i in 0..small.h {
                let dst = self.at(c, i + t, l);
                let src = small.at(c, i, 0);
                for j in 0..small.w {
                    self.data[dst + j] += small.data[src + j];
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub out_ch: usize,
    pub in_ch: usize,
    pub kernel: usize,
    /// `(o, i, u, v)` order.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl ConvLayer {
    pub fn zeros(out_ch: usize, in_ch: usize, kernel: usize) -> Self {
        Self {
            out_ch,
            in_ch,
            kernel,
            weights: vec![0.0; out_ch * in_ch * kernel * kernel],
            bias: vec![0.0; out_ch],
        }
    }

    /// Index of `W[o, i, u, v]` in `weights`.
    pub fn widx(&self, o: usize, i: usize, u: usize, v: usize) -> usize {
        ((o * self.in_ch + i) * self.kernel + u) * self.kernel + v
    }

    /// Output filter `o` flattened over `(i, u, v)`.
    pub fn filter(&self, o: usize) -> &[f64] {
        let n = self.in_ch * self.kernel * self.kernel;
        &self.weights[o * n..(o + 1) * n]
    }

    /// `conv(x, W) − b`
    pub fn forward(&self, x: &Tensor) -> Tensor {
        let k = self.kernel;
        let (oh, ow) = (x.h + 1 - k, x.w + 1 - k);
        let mut z = Tensor::zeros(self.out_ch, oh, ow);
        for o in 0..self.out_ch {
            let zo = &mut z.data[o * oh * ow..(o + 1) * oh * ow];
            zo.iter_mut().for_each(|v| *v = -self.bias[o]);
            for c in 0..self.in_ch {
                for u in 0..k {
                    for v in 0..k {
                        let wt = self.weights[self.widx(o, c, u, v)];
                        for i in 0..oh {
                            let src = &x.data[x.at(c, i + u, v)..x.at(c, i + u, v) + ow];
                            let dst = &mut zo[i * ow..(i + 1) * ow];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += wt * s;
                            }
                        }
                    }
                }
            }
        }
        z
    }

    /// Accumulates parameter gradients into `grad` and returns `∂L/∂x`.
    fn backward(&self, x: &Tensor, dz: &Tensor, grad: &mut ConvLayer) -> Tensor {
        let k = self.kernel;
        let (oh, ow) = (dz.h, dz.w);
        let mut dx = Tensor::zeros(x.ch, x.h, x.w);
        for o in 0..self.out_ch {
            let dzo = &dz.data[o * oh * ow..(o + 1) * oh * ow];
            grad.bias[o] -= dzo.iter().sum::<f64>();
            for c in 0..self.in_ch {
                for u in 0..k {
                    for v in 0..k {
                        let wi = self.widx(o, c, u, v);
                        let wt = self.weights[wi];
                        let mut acc = 0.0;
                        for i in 0..oh {
                            let base = x.at(c, i + u, v);
                            let xs = &x.data[base..base + ow];
                            let ds = &dzo[i * ow..(i + 1) * ow];
                            let dxs = &mut dx.data[base..base + ow];
                            for j in 0..ow {
                                acc += ds[j] * xs[j];
                                dxs[j] += wt * ds[j];
                            }
                        }
                        grad.weights[wi] += acc;
                    }
                }
            }
        }
        dx
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyCnn {
    pub layers: Vec<ConvLayer>,
    pub skip_mode: SkipMode,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `acts[0]` is the input, `acts[l]` the output of layer `l`.
    pub acts: Vec<Tensor>,
    /// Pre-activations `z_l` (index `l − 1`).
    pub pre: Vec<Tensor>,
    pub output: Tensor,
}

impl ToyCnn {
    fn shape(config: &NetworkConfig) -> Vec<(usize, usize)> {
        (0..config.depth)
            .map(|l| {
                let inn = if l == 0 { 1 } else { config.width };
                let out = if l + 1 == config.depth { 1 } else { config.width };
                (out, inn)
            })
            .collect()
    }

    pub fn zeros(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            layers: Self::shape(config)
                .into_iter()
                .map(|(o, i)| ConvLayer::zeros(o, i, config.kernel))
                .collect(),
            skip_mode: config.skip_mode,
        })
    }

    /// Gaussian weights with variance `2/(fan_in)`, zero biases.
    pub fn random(config: &NetworkConfig) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for layer in &mut net.layers {
            let std = (2.0 / (layer.in_ch * layer.kernel * layer.kernel) as f64).sqrt();
            for w in &mut layer.weights {
                *w = std * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(net)
    }

    /// Center-tap filters that pass a nonnegative input through unchanged.
    pub fn identity(config: &NetworkConfig) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let last = net.layers.len() - 1;
        let c = config.kernel / 2;
        for (l, layer) in net.layers.iter_mut().enumerate() {
            for o in 0..layer.out_ch {
                for i in 0..layer.in_ch {
                    let w = if l == last {
                        1.0 / layer.in_ch as f64
                    } else if layer.in_ch == 1 || i == o {
                        1.0
                    } else {
                        0.0
                    };
                    let idx = layer.widx(o, i, c, c);
                    layer.weights[idx] = w;
                }
            }
        }
        Ok(net)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn width(&self) -> usize {
        self.layers[0].out_ch
    }

    pub fn kernel(&self) -> usize {
        self.layers[0].kernel
    }

    pub fn receptive_field(&self) -> usize {
        self.depth() * (self.kernel() - 1) + 1
    }

    // target layer (1-based) of the symmetric skip leaving layer `l`
    fn skip_target(&self, l: usize) -> Option<usize> {
        let d = self.depth();
        (self.skip_mode == SkipMode::SymmetricSkips && l >= 1 && 2 * l < d).then_some(d - l)
    }

    pub fn forward_cached(&self, input: &Tensor) -> Result<ForwardCache> {
        let rf = self.receptive_field();
        if input.ch != 1 || input.h < rf || input.w < rf {
            return Err(Error::dim(format!(
                "input {}x{} smaller than receptive field {rf}",
                input.h, input.w
            )));
        }
        let depth = self.depth();
        let mut acts = vec![input.clone()];
        let mut pre = Vec::with_capacity(depth);
        for (idx, layer) in self.layers.iter().enumerate() {
            let l = idx + 1;
            let mut z = layer.forward(&acts[idx]);
            if self.skip_mode == SkipMode::SymmetricSkips {
                for src in 1..l {
                    if self.skip_target(src) == Some(l) {
                        let add = acts[src].center_crop(z.h, z.w);
                        z.data.iter_mut().zip(&add.data).for_each(|(a, b)| *a += b);
                    }
                }
            }
            let a = if l == depth {
                z.clone()
            } else {
                Tensor {
                    data: z.data.iter().map(|v| v.max(0.0)).collect(),
                    ..z.clone()
                }
            };
            pre.push(z);
            acts.push(a);
        }
        let mut output = acts[depth].clone();
        if self.skip_mode == SkipMode::GlobalResidual {
            let skip = input.center_crop(output.h, output.w);
            output.data.iter_mut().zip(&skip.data).for_each(|(a, b)| *a += b);
        }
        Ok(ForwardCache { acts, pre, output })
    }

    pub fn forward(&self, img: &Patch) -> Result<Patch> {
        self.forward_cached(&Tensor::from_patch(img))?.output.to_patch()
    }

    /// `½·mean((out − target)²)` and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, input: &Patch, target: &Patch) -> Result<(f64, ToyCnn)> {
        let cache = self.forward_cached(&Tensor::from_patch(input))?;
        let out = &cache.output;
        if target.rows() != out.h || target.cols() != out.w {
            return Err(Error::dim(format!(
                "target {}x{} but network output {}x{}",
                target.rows(),
                target.cols(),
                out.h,
                out.w
            )));
        }
        let t = target.to_row_major();
        let n = t.len() as f64;
        let diff: Vec<f64> = out.data.iter().zip(&t).map(|(o, t)| o - t).collect();
        let loss = 0.5 * diff.iter().map(|d| d * d).sum::<f64>() / n;

        let depth = self.depth();
        let mut grad = ToyCnn {
            layers: self
                .layers
                .iter()
                .map(|l| ConvLayer::zeros(l.out_ch, l.in_ch, l.kernel))
                .collect(),
            skip_mode: self.skip_mode,
        };
        let mut dacts: Vec<Option<Tensor>> = vec![None; depth + 1];
        dacts[depth] = Some(Tensor {
            data: diff.iter().map(|d| d / n).collect(),
            ..out.clone()
        });
        for l in (1..=depth).rev() {
            let da = dacts[l].take().expect("upstream gradient present");
            let dz = if l == depth {
                da
            } else {
                let z = &cache.pre[l - 1];
                Tensor {
                    data: da.data.iter().zip(&z.data).map(|(g, z)| if *z > 0.0 { *g } else { 0.0 }).collect(),
                    ..da
                }
            };
            if self.skip_mode == SkipMode::SymmetricSkips {
                for src in 1..l {
                    if self.skip_target(src) == Some(l) {
                        let a = &cache.acts[src];
                        let slot = dacts[src].get_or_insert_with(|| Tensor::zeros(a.ch, a.h, a.w));
                        slot.add_centered(&dz);
                    }
                }
            }
            let dx = self.layers[l - 1].backward(&cache.acts[l - 1], &dz, &mut grad.layers[l - 1]);
            match &mut dacts[l - 1] {
                Some(acc) => acc.data.iter_mut().zip(&dx.data).for_each(|(a, b)| *a += b),
                slot => *slot = Some(dx),
            }
        }
        Ok((loss, grad))
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Weights then biases of each layer, in layer order.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::dim(format!(
                "{} parameters for a net with {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[k..k + nw]);
            k += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[k..k + nb]);
            k += nb;
        }
        Ok(())
    }

    /// `self ← self − lr·grad`
    pub fn sgd_update(&mut self, grad: &ToyCnn, lr: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grad.layers) {
            l.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= lr * d);
            l.bias.iter_mut().zip(&g.bias).for_each(|(b, d)| *b -= lr * d);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

pub const PARAMS_MAGIC: &[u8; 8] = b"TOYCNN01";

/// Little-endian layout: magic, `u32` depth, width, kernel, skip code, then
/// per layer `u32` out, `u32` in, `f64` weights in `(o, i, u, v)` order and
/// `f64` biases.
pub fn write_params(net: &ToyCnn, mut w: impl Write) -> Result<()> {
    w.write_all(PARAMS_MAGIC)?;
    for v in [
        net.depth() as u32,
        net.width() as u32,
        net.kernel() as u32,
        net.skip_mode.code(),
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    for l in &net.layers {
        w.write_all(&(l.out_ch as u32).to_le_bytes())?;
        w.write_all(&(l.in_ch as u32).to_le_bytes())?;
        for v in l.weights.iter().chain(&l.bias) {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_params(mut r: impl Read) -> Result<ToyCnn> {
    let bad = |m: &str| Error::Config(format!("parameter file: {m}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != PARAMS_MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |r: &mut dyn Read| -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(|_| bad("truncated"))?;
        Ok(u32::from_le_bytes(b))
    };
    let depth = u32_at(&mut r)? as usize;
    let width = u32_at(&mut r)? as usize;
    let kernel = u32_at(&mut r)? as usize;
    let skip = SkipMode::from_code(u32_at(&mut r)?).ok_or_else(|| bad("unknown skip code"))?;
    let config = NetworkConfig::new(depth, width, skip, 0);
    let config = NetworkConfig { kernel, ..config };
    let mut net = ToyCnn::zeros(&config)?;
    for l in &mut net.layers {
        let (o, i) = (u32_at(&mut r)? as usize, u32_at(&mut r)? as usize);
        if o != l.out_ch || i != l.in_ch {
            return Err(bad("layer shape does not match header"));
        }
        for v in l.weights.iter_mut().chain(l.bias.iter_mut()) {
            let mut b = [0u8; 8];
            r.read_exact(&mut b).map_err(|_| bad("truncated"))?;
            *v = f64::from_le_bytes(b);
        }
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(bad("trailing bytes"));
    }
    if !net.is_finite() {
        return Err(bad("non-finite parameter"));
    }
    Ok(net)
}
