//! Evaluation of trained networks: per-patch PSNR, layer coherence, the
//! Welch statistic, and depth sweeps.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::conv::GrayImage;
use crate::csc::{mutual_coherence, CoherenceMode, ReconstructionDictionary};
use crate::error::{Error, Result};
use crate::sr::data::{make_pairs, PairGeometry, SrPair};
use crate::sr::image::psnr;
use crate::sr::net::{NetworkConfig, ToyCnn};
use crate::sr::train::train;

/// Coherence of one layer's filters taken as dictionary columns. `None`
/// where a layer has a single filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerCoherence {
    pub layer: usize,
    pub filters: usize,
    pub min_normalized: Option<f64>,
    pub max_normalized: Option<f64>,
    pub min_raw: Option<f64>,
    pub max_raw: Option<f64>,
}

pub fn layer_dictionary(net: &ToyCnn, layer: usize) -> Result<ReconstructionDictionary> {
    let l = net
        .layers
        .get(layer)
        .ok_or_else(|| Error::arg(format!("no layer {layer}")))?;
    let n = l.in_ch * l.kernel * l.kernel;
    let data = DMatrix::from_fn(n, l.out_ch, |i, o| l.filter(o)[i]);
    ReconstructionDictionary::from_matrix(data, false)
}

pub fn layer_coherence_report(net: &ToyCnn) -> Result<Vec<LayerCoherence>> {
    (0..net.depth())
        .map(|k| {
            let d = layer_dictionary(net, k)?;
            let get = |mode, norm| -> Result<Option<f64>> {
                if d.atoms() < 2 {
                    Ok(None)
                } else {
                    mutual_coherence(&d, mode, norm).map(Some)
                }
            };
            Ok(LayerCoherence {
                layer: k + 1,
                filters: d.atoms(),
                min_normalized: get(CoherenceMode::Min, true)?,
                max_normalized: get(CoherenceMode::Max, true)?,
                min_raw: get(CoherenceMode::Min, false)?,
                max_raw: get(CoherenceMode::Max, false)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub psnr_per_patch: Vec<f64>,
    /// Bicubic input center crop against the same targets.
    pub baseline_psnr_per_patch: Vec<f64>,
    pub mean_psnr: f64,
    pub median_psnr: f64,
    pub mean_baseline_psnr: f64,
    /// Number of patches reproduced exactly (infinite PSNR).
    pub exact_patches: usize,
    pub layer_coherence: Vec<LayerCoherence>,
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

/// Patches are scored on the current rayon pool; order follows `pairs`.
pub fn evaluate(net: &ToyCnn, pairs: &[SrPair]) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::arg("no evaluation pairs"));
    }
    let scored: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|p| {
            let out = net.forward(&p.input)?;
            let base = p.input.center_crop(p.target.rows(), p.target.cols())?;
            Ok((psnr(&out, &p.target)?, psnr(&base, &p.target)?))
        })
        .collect::<Result<_>>()?;
    let (psnr_per_patch, baseline_psnr_per_patch): (Vec<f64>, Vec<f64>) = scored.into_iter().unzip();
    Ok(EvalReport {
        mean_psnr: mean(&psnr_per_patch),
        median_psnr: median(&psnr_per_patch),
        mean_baseline_psnr: mean(&baseline_psnr_per_patch),
        exact_patches: psnr_per_patch.iter().filter(|v| v.is_infinite()).count(),
        psnr_per_patch,
        baseline_psnr_per_patch,
        layer_coherence: layer_coherence_report(net)?,
    })
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (m, var)
}

/// `(m₁ − m₂)/√(v₁/n₁ + v₂/n₂)` with `n − 1` sample variances. Both
/// variances zero gives 0 for equal means and `±∞` otherwise.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::arg("welch_t needs at least two samples per set"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::arg("welch_t needs finite samples"));
    }
    let (m1, v1) = mean_var(a);
    let (m2, v2) = mean_var(b);
    let se = (v1 / a.len() as f64 + v2 / b.len() as f64).sqrt();
    let diff = m1 - m2;
    if se == 0.0 {
        return Ok(if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        });
    }
    Ok(diff / se)
}

/// Smallest depth whose PSNR is within `tol` dB of the best in the sweep.
pub fn saturation_depth(results: &[(usize, f64)], tol: f64) -> Option<usize> {
    let best = results
        .iter()
        .map(|r| r.1)
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !best.is_finite() {
        return None;
    }
    results
        .iter()
        .filter(|(_, p)| p.is_finite() && *p >= best - tol)
        .map(|(d, _)| *d)
        .min()
}

pub const SATURATION_TOLERANCE_DB: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct SweepCorpus {
    pub name: String,
    pub train: Vec<GrayImage>,
    pub test: Vec<GrayImage>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub corpus: String,
    pub seed: u64,
    pub depth: usize,
    /// Empty when training failed.
    pub mean_psnr: Option<f64>,
    pub final_loss: Option<f64>,
    pub status: String,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Saturation depth of one (corpus, seed) curve.
    pub fn saturation(&self, corpus: &str, seed: u64) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.corpus == corpus && r.seed == seed && r.saturated)
            .map(|r| r.depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGeometry {
    pub scale: f64,
    pub output: usize,
    pub stride: usize,
}

/// Trains one network per (corpus, seed, depth) cell. Cells run in
/// parallel on the current rayon pool; every depth is scored on the same
/// target pixels (margin of the deepest net). Failed cells are recorded and
/// skipped when locating the saturation depth.
pub fn depth_sweep(
    corpora: &[SweepCorpus],
    depths: &[usize],
    seeds: &[u64],
    base: &NetworkConfig,
    geom: SweepGeometry,
) -> Result<SweepTable> {
    if depths.is_empty() || seeds.is_empty() || corpora.is_empty() {
        return Err(Error::arg("depth sweep needs corpora, depths and seeds"));
    }
    let max_depth = *depths.iter().max().unwrap();
    let margin = max_depth * (base.kernel - 1) / 2;
    let mut cells = Vec::new();
    for (ci, _) in corpora.iter().enumerate() {
        for &seed in seeds {
            for &depth in depths {
                cells.push((ci, seed, depth));
            }
        }
    }
    let results: Vec<(Option<f64>, Option<f64>, String)> = cells
        .par_iter()
        .map(|&(ci, seed, depth)| {
            let cfg = NetworkConfig {
                depth,
                seed,
                ..base.clone()
            };
            let pg = PairGeometry {
                output: geom.output,
                receptive_field: cfg.receptive_field(),
                stride: geom.stride,
                margin,
            };
            let run = || -> Result<(f64, f64)> {
                let train_pairs = make_pairs(&corpora[ci].train, geom.scale, pg)?;
                let test_pairs = make_pairs(&corpora[ci].test, geom.scale, pg)?;
                let rep = train(ToyCnn::random(&cfg)?, &train_pairs, &cfg)?;
                let ev = evaluate(&rep.net, &test_pairs)?;
                Ok((ev.mean_psnr, *rep.epoch_losses.last().unwrap_or(&f64::NAN)))
            };
            match run() {
                Ok((p, l)) => (Some(p), Some(l), "ok".to_string()),
                Err(Error::Divergence { .. }) => (None, None, "diverged".to_string()),
                Err(e) => (None, None, format!("failed: {e}")),
            }
        })
        .collect();
    let mut rows: Vec<SweepRow> = cells
        .iter()
        .zip(results)
        .map(|(&(ci, seed, depth), (mean_psnr, final_loss, status))| SweepRow {
            corpus: corpora[ci].name.clone(),
            seed,
            depth,
            mean_psnr,
            final_loss,
            status,
            saturated: false,
        })
        .collect();
    for chunk in rows.chunks_mut(depths.len()) {
        let curve: Vec<(usize, f64)> = chunk.iter().filter_map(|r| r.mean_psnr.map(|p| (r.depth, p))).collect();
        if let Some(d) = saturation_depth(&curve, SATURATION_TOLERANCE_DB) {
            for r in chunk.iter_mut() {
                r.saturated = r.depth == d;
            }
        }
    }
    Ok(SweepTable { rows })
}
