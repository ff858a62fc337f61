//! Testing-phase view of a network as a layered convolutional sparse coding
//! model: layer filters become dictionary atoms, the forward pass is layered
//! soft thresholding, and the stability of that pass is controlled by the
//! mutual coherence of each layer's dictionary.

use nalgebra::{DMatrix, DVector};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::neuron::NeuronFilter;
use crate::prox::soft_sym;

/// Columns are vectorized filters of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionDictionary {
    data: DMatrix<f64>,
    column_norms: Vec<f64>,
    normalized: bool,
}

impl ReconstructionDictionary {
    /// With `normalize`, every nonzero column is scaled to unit L2 norm.
    /// `column_norms` always holds the norms before scaling.
    pub fn from_matrix(data: DMatrix<f64>, normalize: bool) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(Error::dim("reconstruction dictionary needs at least one non-empty column"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("non-finite dictionary entry"));
        }
        let column_norms: Vec<f64> = data.column_iter().map(|c| c.norm()).collect();
        let mut data = data;
        if normalize {
            for (mut c, &n) in data.column_iter_mut().zip(&column_norms) {
                if n > 0.0 {
                    c /= n;
                }
            }
        }
        Ok(Self {
            data,
            column_norms,
            normalized: normalize,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn atoms(&self) -> usize {
        self.data.ncols()
    }

    pub fn atom_len(&self) -> usize {
        self.data.nrows()
    }
}

pub fn build_reconstruction_dictionary(filters: &[NeuronFilter], normalize: bool) -> Result<ReconstructionDictionary> {
    let n = filters.first().ok_or_else(|| Error::arg("no filters"))?.coeffs.len();
    if let Some(bad) = filters.iter().find(|f| f.coeffs.len() != n) {
        return Err(Error::dim(format!(
            "mixed filter lengths {} and {}",
            n,
            bad.coeffs.len()
        )));
    }
    let data = DMatrix::from_fn(n, filters.len(), |i, j| filters[j].coeffs[i]);
    ReconstructionDictionary::from_matrix(data, normalize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CoherenceMode {
    /// Smallest `|d_nᵀ d_m|` over pairs.
    Min,
    /// Largest `|d_nᵀ d_m|` over pairs; the usual sparse-coding definition.
    Max,
}

/// Extreme absolute inner product over unordered column pairs. With
/// `normalized`, inner products are divided by both column norms; pairs
/// involving a zero column count as orthogonal.
pub fn mutual_coherence(d: &ReconstructionDictionary, mode: CoherenceMode, normalized: bool) -> Result<f64> {
    let m = d.matrix();
    let f = m.ncols();
    if f < 2 {
        return Err(Error::arg("coherence needs at least two columns"));
    }
    let gram = m.transpose() * m;
    let norms: Vec<f64> = (0..f).map(|j| gram[(j, j)].sqrt()).collect();
    let mut best = match mode {
        CoherenceMode::Min => f64::INFINITY,
        CoherenceMode::Max => 0.0,
    };
    for a in 0..f {
        for b in a + 1..f {
            let mut v = gram[(a, b)].abs();
            if normalized {
                let den = norms[a] * norms[b];
                v = if den > 0.0 { (v / den).min(1.0) } else { 0.0 };
            }
            best = match mode {
                CoherenceMode::Min => best.min(v),
                CoherenceMode::Max => best.max(v),
            };
        }
    }
    Ok(best)
}

/// `x̂_i = S_{b_i}(D_iᵀ x̂_{i−1})` with `x̂_0 = g`; returns `x̂_1..x̂_N`.
pub fn layered_soft_threshold(
    g: &DVector<f64>,
    dictionaries: &[ReconstructionDictionary],
    biases: &[f64],
) -> Result<Vec<DVector<f64>>> {
    if dictionaries.len() != biases.len() {
        return Err(Error::dim(format!(
            "{} dictionaries but {} biases",
            dictionaries.len(),
            biases.len()
        )));
    }
    let mut out = Vec::with_capacity(dictionaries.len());
    let mut prev = g.clone();
    for (i, (d, &b)) in dictionaries.iter().zip(biases).enumerate() {
        if d.atom_len() != prev.len() {
            return Err(Error::dim(format!(
                "layer {}: atoms of length {} applied to a vector of length {}",
                i + 1,
                d.atom_len(),
                prev.len()
            )));
        }
        prev = soft_sym(&(d.matrix().transpose() * &prev), b)?;
        out.push(prev.clone());
    }
    Ok(out)
}

/// `½ + (|x_min| − 2ε_{i−1}) / (2μ|x_max|)`; infinite for `μ = 0`.
pub fn sparsity_condition_rhs(mu: f64, x_min: f64, x_max: f64, eps_prev: f64) -> Result<f64> {
    if mu < 0.0 || x_max <= 0.0 || x_min < 0.0 || eps_prev < 0.0 {
        return Err(Error::arg("need μ ≥ 0, x_max > 0 and nonnegative x_min, ε"));
    }
    if mu == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 + (x_min - 2.0 * eps_prev) / (2.0 * mu * x_max))
}

/// `ε_i = √s (ε_{i−1} + μ(s−1)|x_max| + b_i)`
pub fn epsilon_recursion(sparsity: usize, eps_prev: f64, mu: f64, x_max: f64, b: f64) -> f64 {
    let s = sparsity as f64;
    s.sqrt() * (eps_prev + mu * (s - 1.0) * x_max + b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceBound {
    pub value: f64,
    /// True when the bound is ≤ 0 and so excludes nothing.
    pub vacuous: bool,
}

/// `(2ε_{i−1} − √ε_{i−1} − √ε_i) / ‖x_i‖₂`
pub fn coherence_lower_bound(eps_prev: f64, eps_i: f64, x_norm2: f64) -> Result<CoherenceBound> {
    if x_norm2 <= 0.0 {
        return Err(Error::arg("representation norm must be positive"));
    }
    if eps_prev < 0.0 || eps_i < 0.0 {
        return Err(Error::arg("ε values must be nonnegative"));
    }
    let value = (2.0 * eps_prev - eps_prev.sqrt() - eps_i.sqrt()) / x_norm2;
    Ok(CoherenceBound {
        value,
        vacuous: value <= 0.0,
    })
}

/// Bias interval for which layered thresholding keeps exactly the true
/// support when the incoming error has L2 norm at most `eps_prev`:
/// off-support responses are below `μ s x_max + ε`, on-support responses
/// are above `x_min − μ(s−1)x_max − ε`. `None` when empty.
pub fn admissible_bias_interval(mu: f64, sparsity: usize, x_min: f64, x_max: f64, eps_prev: f64) -> Option<(f64, f64)> {
    let s = sparsity as f64;
    let lo = mu * s * x_max + eps_prev;
    let hi = x_min - mu * (s - 1.0) * x_max - eps_prev;
    (hi > lo).then_some((lo, hi))
}

fn support_extremes(x: &DVector<f64>) -> Option<(usize, f64, f64)> {
    let nz: Vec<f64> = x.iter().filter(|v| **v != 0.0).map(|v| v.abs()).collect();
    if nz.is_empty() {
        return None;
    }
    let lo = nz.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = nz.iter().cloned().fold(0.0, f64::max);
    Some((nz.len(), lo, hi))
}

fn support(x: &DVector<f64>) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CscInstance {
    pub dictionaries: Vec<ReconstructionDictionary>,
    pub representations: Vec<DVector<f64>>,
    pub biases: Vec<f64>,
    pub noise_bound: f64,
    /// Clean signal `y = D_1 x_1`.
    pub signal: DVector<f64>,
    /// `y` plus noise of L2 norm `noise_bound`.
    pub observation: DVector<f64>,
}

impl CscInstance {
    /// Checks the factorization chain and that every representation is nonzero.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let n = self.dictionaries.len();
        if n == 0 || self.representations.len() != n || self.biases.len() != n {
            return Err(Error::dim("inconsistent layer counts"));
        }
        let mut upper = &self.signal;
        for (i, (d, x)) in self.dictionaries.iter().zip(&self.representations).enumerate() {
            if d.atom_len() != upper.len() || d.atoms() != x.len() {
                return Err(Error::dim(format!("layer {} has mismatched shapes", i + 1)));
            }
            let gap = (d.matrix() * x - upper).amax();
            if gap > tol {
                return Err(Error::Synthesis(format!("layer {} factorization off by {gap:e}", i + 1)));
            }
            if support_extremes(x).is_none() {
                return Err(Error::Synthesis(format!("layer {} representation is zero", i + 1)));
            }
            upper = x;
        }
        if ((&self.observation - &self.signal).norm() - self.noise_bound).abs() > tol.max(1e-12 * self.noise_bound) {
            return Err(Error::Synthesis("noise norm differs from the bound".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisParams {
    /// `[n_0, n_1, ..., n_N]`: signal length first, then the length of each
    /// representation. Layer `i` has an `n_{i−1} × n_i` dictionary.
    pub dims: Vec<usize>,
    /// `‖x_i‖₀` for `i = 1..N`, non-increasing.
    pub sparsities: Vec<usize>,
    /// Upper limit on the max-mode coherence of every dictionary.
    pub coherence_target: f64,
    pub noise_bound: f64,
    /// Magnitude range for the entries of `x_1`. Deeper entries are norms of
    /// groups of these and are therefore determined by the construction.
    pub magnitude_range: (f64, f64),
    /// Where inside the admissible interval each bias sits (0 = lower end).
    pub bias_position: f64,
    pub max_attempts: usize,
    pub seed: u64,
}

impl SynthesisParams {
    pub fn new(dims: Vec<usize>, sparsities: Vec<usize>, coherence_target: f64, noise_bound: f64, seed: u64) -> Self {
        Self {
            dims,
            sparsities,
            coherence_target,
            noise_bound,
            magnitude_range: (1.0, 1.2),
            bias_position: 0.05,
            max_attempts: 200,
            seed,
        }
    }

    fn check(&self) -> Result<()> {
        let layers = self.sparsities.len();
        if layers == 0 || self.dims.len() != layers + 1 {
            return Err(Error::arg("need one sparsity per layer and one more dim than layers"));
        }
        if self.dims.iter().any(|&d| d == 0) {
            return Err(Error::arg("dims must be positive"));
        }
        for (i, &s) in self.sparsities.iter().enumerate() {
            if s == 0 || s > self.dims[i + 1] {
                return Err(Error::arg(format!("sparsity {s} does not fit layer {} of size {}", i + 1, self.dims[i + 1])));
            }
            if i > 0 && s > self.sparsities[i - 1] {
                return Err(Error::arg("sparsities must not increase with depth"));
            }
        }
        let (lo, hi) = self.magnitude_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::arg("magnitude range must satisfy 0 < lo ≤ hi"));
        }
        if !(self.coherence_target >= 0.0) || !(self.noise_bound >= 0.0) {
            return Err(Error::arg("coherence target and noise bound must be nonnegative"));
        }
        if !(0.0..=1.0).contains(&self.bias_position) {
            return Err(Error::arg("bias position must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Lower bound on the coherence of `m` unit vectors in `R^n` (zero if `m ≤ n`).
pub fn welch_bound(n: usize, m: usize) -> f64 {
    if m <= n || m < 2 {
        return 0.0;
    }
    (((m - n) as f64) / ((n * (m - 1)) as f64)).sqrt()
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

fn unit(mut v: DVector<f64>) -> DVector<f64> {
    let n = v.norm();
    if n > 0.0 {
        v /= n;
    }
    v
}

fn max_coherence(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    let mut best: f64 = 0.0;
    for a in 0..g.ncols() {
        for b in a + 1..g.ncols() {
            best = best.max(g[(a, b)].abs());
        }
    }
    best
}

/// Dictionary with the given unit columns fixed at `fixed` positions and the
/// remaining columns near-orthonormal, with coherence at most `target`.
fn low_coherence_dictionary(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    fixed: &[(usize, DVector<f64>)],
    target: f64,
    max_attempts: usize,
) -> Result<DMatrix<f64>> {
    let wb = welch_bound(rows, cols);
    if wb > target {
        return Err(Error::Synthesis(format!(
            "{cols} unit atoms in dimension {rows} cannot have coherence below {wb:.4} (target {target})"
        )));
    }
    let free: Vec<usize> = (0..cols).filter(|j| !fixed.iter().any(|(k, _)| k == j)).collect();
    let mut delta = target;
    for _ in 0..max_attempts {
        let mut d = DMatrix::zeros(rows, cols);
        for (j, v) in fixed {
            d.set_column(*j, v);
        }
        if cols <= rows {
            // orthonormal completion of the fixed columns, then a small tilt
            let mut seed = DMatrix::zeros(rows, cols);
            for (k, (_, v)) in fixed.iter().enumerate() {
                seed.set_column(k, v);
            }
            let g = gaussian_matrix(rng, rows, free.len());
            for (k, c) in g.column_iter().enumerate() {
                seed.set_column(fixed.len() + k, &c);
            }
            let q = seed.qr().q();
            for (k, &j) in free.iter().enumerate() {
                let base = q.column(fixed.len() + k).into_owned();
                let tilt = unit(DVector::from_fn(rows, |_, _| rng.sample(StandardNormal)));
                d.set_column(j, &unit(base + tilt * delta));
            }
        } else {
            for &j in &free {
                let v = unit(DVector::from_fn(rows, |_, _| rng.sample(StandardNormal)));
                d.set_column(j, &v);
            }
        }
        if max_coherence(&d) <= target + 1e-12 {
            return Ok(d);
        }
        delta *= 0.7;
    }
    Err(Error::Synthesis(format!(
        "no {rows}x{cols} dictionary with coherence ≤ {target} after {max_attempts} attempts"
    )))
}

/// Random instance of the layered model with low-coherence unit-norm
/// dictionaries and biases placed inside the admissible interval whenever it
/// is nonempty.
///
/// `x_1` gets a uniformly drawn support with magnitudes in `magnitude_range`
/// and random signs. For deeper layers the support of `x_{i−1}` is split into
/// `s_i` groups; each group becomes one (unit) atom of `D_i` and its norm the
/// matching entry of `x_i`, so that `D_i x_i = x_{i−1}` holds exactly.
pub fn synthesize_instance(params: &SynthesisParams) -> Result<CscInstance> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let layers = params.sparsities.len();
    let dims = &params.dims;
    let (lo, hi) = params.magnitude_range;

    let mut xs: Vec<DVector<f64>> = Vec::with_capacity(layers);
    let mut x1 = DVector::zeros(dims[1]);
    for j in index::sample(&mut rng, dims[1], params.sparsities[0]) {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        x1[j] = sign * rng.random_range(lo..=hi);
    }
    xs.push(x1);

    let mut mats: Vec<DMatrix<f64>> = Vec::with_capacity(layers);
    mats.push(low_coherence_dictionary(
        &mut rng,
        dims[0],
        dims[1],
        &[],
        params.coherence_target,
        params.max_attempts,
    )?);
    for i in 1..layers {
        let upper = &xs[i - 1];
        let s = params.sparsities[i];
        let mut supp = support(upper);
        supp.shuffle(&mut rng);
        let slots: Vec<usize> = index::sample(&mut rng, dims[i + 1], s).into_vec();
        let mut x = DVector::zeros(dims[i + 1]);
        let mut fixed = Vec::with_capacity(s);
        for (g, &slot) in slots.iter().enumerate() {
            let mut atom = DVector::zeros(dims[i]);
            for &k in supp.iter().skip(g).step_by(s) {
                atom[k] = upper[k];
            }
            let norm = atom.norm();
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            x[slot] = sign * norm;
            fixed.push((slot, atom * (sign / norm)));
        }
        mats.push(low_coherence_dictionary(
            &mut rng,
            dims[i],
            dims[i + 1],
            &fixed,
            params.coherence_target,
            params.max_attempts,
        )?);
        xs.push(x);
    }

    let signal = &mats[0] * &xs[0];
    let noise = unit(DVector::from_fn(dims[0], |_, _| rng.sample(StandardNormal))) * params.noise_bound;
    let observation = &signal + noise;

    let dictionaries = mats
        .into_iter()
        .map(|m| ReconstructionDictionary::from_matrix(m, true))
        .collect::<Result<Vec<_>>>()?;

    let mut biases = Vec::with_capacity(layers);
    let mut eps = params.noise_bound;
    for (d, x) in dictionaries.iter().zip(&xs) {
        let mu = mutual_coherence(d, CoherenceMode::Max, true).unwrap_or(0.0);
        let (s, xmin, xmax) = support_extremes(x).expect("synthesized representations are nonzero");
        let b = match admissible_bias_interval(mu, s, xmin, xmax, eps) {
            Some((a, z)) => a + params.bias_position * (z - a),
            None => mu * s as f64 * xmax + eps,
        };
        eps = epsilon_recursion(s, eps, mu, xmax, b);
        biases.push(b);
    }

    let inst = CscInstance {
        dictionaries,
        representations: xs,
        biases,
        noise_bound: params.noise_bound,
        signal,
        observation,
    };
    inst.validate(1e-10)?;
    Ok(inst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerStability {
    pub layer: usize,
    pub mu_max: f64,
    pub mu_min: f64,
    pub sparsity: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub sparsity_rhs: f64,
    pub bias: f64,
    pub epsilon: f64,
    pub condition_met: bool,
    pub support_recovered: bool,
    pub error_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub layers: Vec<LayerStability>,
}

impl StabilityReport {
    pub fn all_conditions_met(&self) -> bool {
        self.layers.iter().all(|l| l.condition_met)
    }

    pub fn all_supports_recovered(&self) -> bool {
        self.layers.iter().all(|l| l.support_recovered)
    }

    pub fn errors_within_bounds(&self) -> bool {
        self.layers.iter().all(|l| l.error_norm <= l.epsilon)
    }
}

/// Runs layered soft thresholding on the noisy observation and compares each
/// estimate with the truth and with the stability bounds (max-mode,
/// normalized coherence).
pub fn verify(inst: &CscInstance) -> Result<StabilityReport> {
    let est = layered_soft_threshold(&inst.observation, &inst.dictionaries, &inst.biases)?;
    let mut eps = inst.noise_bound;
    let mut layers = Vec::with_capacity(est.len());
    for (i, ((d, x), xh)) in inst.dictionaries.iter().zip(&inst.representations).zip(&est).enumerate() {
        let (mu_max, mu_min) = if d.atoms() >= 2 {
            (
                mutual_coherence(d, CoherenceMode::Max, true)?,
                mutual_coherence(d, CoherenceMode::Min, true)?,
            )
        } else {
            (0.0, 0.0)
        };
        let (s, x_min, x_max) = support_extremes(x).ok_or_else(|| Error::dim("zero representation"))?;
        let rhs = sparsity_condition_rhs(mu_max, x_min, x_max, eps)?;
        let b = inst.biases[i];
        let next = epsilon_recursion(s, eps, mu_max, x_max, b);
        layers.push(LayerStability {
            layer: i + 1,
            mu_max,
            mu_min,
            sparsity: s,
            x_min,
            x_max,
            sparsity_rhs: rhs,
            bias: b,
            epsilon: next,
            condition_met: (s as f64) < rhs,
            support_recovered: support(x) == support(xh),
            error_norm: (x - xh).norm(),
        });
        eps = next;
    }
    Ok(StabilityReport { layers })
}

/// Synthesizes and verifies one instance per seed, in parallel on the
/// current rayon pool; results come back in seed order.
pub fn verify_seeds(base: &SynthesisParams, seeds: &[u64]) -> Vec<(u64, Result<StabilityReport>)> {
    seeds
        .par_iter()
        .map(|&seed| {
            let params = SynthesisParams { seed, ..base.clone() };
            (seed, synthesize_instance(&params).and_then(|inst| verify(&inst)))
        })
        .collect()
}
