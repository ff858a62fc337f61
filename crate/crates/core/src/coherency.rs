//! Spatial coherency of a patch from its local gradient covariance, and the
//! corpus split into high- and low-coherency parts.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::conv::Patch;
use crate::error::{Error, Result};

/// Central differences on the interior: `gx` along columns, `gy` along rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPair {
    pub gx: DMatrix<f64>,
    pub gy: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoherencyScore {
    pub mu: f64,
    pub lambda1: f64,
    pub lambda2: f64,
}

pub fn gradients(p: &Patch) -> Result<GradientPair> {
    let (r, c) = (p.rows(), p.cols());
    if r < 3 || c < 3 {
        return Err(Error::dim(format!("gradients need at least 3x3, got {r}x{c}")));
    }
    let m = p.matrix();
    let gx = DMatrix::from_fn(r - 2, c - 2, |i, j| (m[(i + 1, j + 2)] - m[(i + 1, j)]) / 2.0);
    let gy = DMatrix::from_fn(r - 2, c - 2, |i, j| (m[(i + 2, j + 1)] - m[(i, j + 1)]) / 2.0);
    Ok(GradientPair { gx, gy })
}

// Order-independent sum: positive and negative parts are each added in
// ascending magnitude, so permuting or negating the inputs gives the same
// (or exactly negated) result.
fn canonical_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut pos, mut neg): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for v in values {
        if v >= 0.0 {
            pos.push(v);
        } else {
            neg.push(-v);
        }
    }
    pos.sort_by(f64::total_cmp);
    neg.sort_by(f64::total_cmp);
    pos.iter().sum::<f64>() - neg.iter().sum::<f64>()
}

/// `μ = (√λ₁ − √λ₂)/(√λ₁ + √λ₂)` from the eigenvalues of the 2×2 matrix `G Gᵀ`,
/// `G = [vec(gx); vec(gy)]`. A patch without gradient scores 0.
pub fn spatial_coherency(p: &Patch) -> Result<CoherencyScore> {
    let g = gradients(p)?;
    let a = canonical_sum(g.gx.iter().map(|v| v * v));
    let d = canonical_sum(g.gy.iter().map(|v| v * v));
    let c = canonical_sum(g.gx.iter().zip(g.gy.iter()).map(|(x, y)| x * y));
    let half_tr = (a + d) / 2.0;
    let disc = (((a - d) / 2.0).powi(2) + c * c).sqrt();
    let lambda1 = half_tr + disc;
    let lambda2 = (half_tr - disc).max(0.0);
    if lambda1 <= 0.0 {
        return Ok(CoherencyScore {
            mu: 0.0,
            lambda1: 0.0,
            lambda2: 0.0,
        });
    }
    let (s1, s2) = (lambda1.sqrt(), lambda2.sqrt());
    Ok(CoherencyScore {
        mu: ((s1 - s2) / (s1 + s2)).clamp(0.0, 1.0),
        lambda1,
        lambda2,
    })
}

/// Scores every patch on the current rayon pool; output follows input order.
pub fn score_corpus(patches: &[Patch]) -> Result<Vec<CoherencyScore>> {
    patches.par_iter().map(spatial_coherency).collect()
}

/// Median of the scores (mean of the middle pair for even counts).
pub fn median_threshold(scores: &[CoherencyScore]) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::arg("median of an empty corpus"));
    }
    let mut mus: Vec<f64> = scores.iter().map(|s| s.mu).collect();
    mus.sort_by(f64::total_cmp);
    let n = mus.len();
    Ok(if n % 2 == 1 {
        mus[n / 2]
    } else {
        (mus[n / 2 - 1] + mus[n / 2]) / 2.0
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub tau: f64,
    pub scores: Vec<CoherencyScore>,
    /// Indices into the input with `μ ≥ τ`, in input order.
    pub high: Vec<usize>,
    pub low: Vec<usize>,
}

pub fn partition_scores(scores: Vec<CoherencyScore>, tau: f64) -> Result<Partition> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::arg(format!("threshold {tau} outside [0, 1]")));
    }
    let (high, low) = (0..scores.len()).partition(|&i| scores[i].mu >= tau);
    Ok(Partition { tau, scores, high, low })
}

/// Splits at `tau`, or at the corpus median when `tau` is `None`.
pub fn partition_corpus(patches: &[Patch], tau: Option<f64>) -> Result<Partition> {
    let scores = score_corpus(patches)?;
    let tau = match tau {
        Some(t) => t,
        None => median_threshold(&scores)?,
    };
    partition_scores(scores, tau)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Equal-width bins over `[0, 1]`; the last bin includes 1.
pub fn score_histogram(scores: &[CoherencyScore], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::arg("need at least one bin"));
    }
    let mut counts = vec![0usize; bins];
    for s in scores {
        let k = ((s.mu * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            lo: k as f64 / bins as f64,
            hi: (k + 1) as f64 / bins as f64,
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Patch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Patch::from_fn(n, n, |_, _| rng.random_range(0.0..1.0)).unwrap()
    }

    #[test]
    fn gradient_examples() {
        let g = gradients(&Patch::filled(5, 5, 0.3).unwrap()).unwrap();
        assert!(g.gx.iter().chain(g.gy.iter()).all(|&v| v == 0.0));
        let ramp = Patch::from_fn(5, 6, |_, j| j as f64).unwrap();
        let g = gradients(&ramp).unwrap();
        assert_eq!(g.gx.shape(), (3, 4));
        assert!(g.gx.iter().all(|&v| v == 1.0) && g.gy.iter().all(|&v| v == 0.0));
        assert!(gradients(&Patch::filled(2, 5, 0.0).unwrap()).is_err());
    }

    #[test]
    fn gradients_match_pointwise_oracle() {
        let p = noise(7, 1);
        let g = gradients(&p).unwrap();
        for i in 1..6 {
            for j in 1..6 {
                assert_eq!(g.gx[(i - 1, j - 1)], (p.get(i, j + 1) - p.get(i, j - 1)) / 2.0);
                assert_eq!(g.gy[(i - 1, j - 1)], (p.get(i + 1, j) - p.get(i - 1, j)) / 2.0);
            }
        }
    }

    #[test]
    fn edge_and_flat_scores() {
        let edge = Patch::from_fn(8, 8, |_, j| if j < 4 { 0.0 } else { 1.0 }).unwrap();
        let s = spatial_coherency(&edge).unwrap();
        assert_eq!(s.lambda2, 0.0);
        assert_eq!(s.mu, 1.0);
        let flat = spatial_coherency(&Patch::filled(6, 6, 0.5).unwrap()).unwrap();
        assert_eq!(flat.mu, 0.0);
        let diag = Patch::from_fn(9, 9, |i, j| if i + j < 9 { 0.1 } else { 0.9 }).unwrap();
        assert!(spatial_coherency(&diag).unwrap().mu > 0.99);
    }

    #[test]
    fn noise_is_incoherent_on_average() {
        let mean = (0..100).map(|s| spatial_coherency(&noise(32, s)).unwrap().mu).sum::<f64>() / 100.0;
        assert!(mean < 0.3, "{mean}");
    }

    #[test]
    fn eigenvalues_match_symmetric_eigen() {
        let p = noise(10, 2);
        let g = gradients(&p).unwrap();
        let gm = DMatrix::from_fn(2, g.gx.len(), |r, k| if r == 0 { g.gx[k] } else { g.gy[k] });
        let eig = (&gm * gm.transpose()).symmetric_eigen();
        let s = spatial_coherency(&p).unwrap();
        assert!((s.lambda1 - eig.eigenvalues.max()).abs() < 1e-12);
        assert!((s.lambda2 - eig.eigenvalues.min()).abs() < 1e-12);
    }

    #[test]
    fn partition_rules() {
        let patches: Vec<Patch> = (0..6)
            .map(|k| {
                if k % 2 == 0 {
                    Patch::from_fn(8, 8, |_, j| if j < 4 { 0.0 } else { 1.0 }).unwrap()
                } else {
                    noise(8, k)
                }
            })
            .collect();
        let all = partition_corpus(&patches, Some(0.0)).unwrap();
        assert_eq!(all.high, (0..6).collect::<Vec<_>>());
        let top = partition_corpus(&patches, Some(1.0)).unwrap();
        assert_eq!(top.high, vec![0, 2, 4]);
        let med = partition_corpus(&patches, None).unwrap();
        assert_eq!(med.high, vec![0, 2, 4]);
        assert_eq!(med.low, vec![1, 3, 5]);
        assert!(partition_corpus(&patches, Some(1.5)).is_err());
    }

    #[test]
    fn histogram_counts() {
        let mk = |mu| CoherencyScore {
            mu,
            lambda1: 1.0,
            lambda2: 0.0,
        };
        let h = score_histogram(&[mk(0.0), mk(0.05), mk(0.5), mk(1.0)], 10).unwrap();
        assert_eq!(h[0].count, 2);
        assert_eq!(h[5].count, 1);
        assert_eq!(h[9].count, 1);
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), 4);
    }

    fn dyadic(n: usize, seed: u64) -> Patch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Patch::from_fn(n, n, |_, _| rng.random_range(0..256) as f64 / 256.0).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn mu_in_unit_interval(seed in 0u64..100_000, n in 3usize..12) {
            let s = spatial_coherency(&noise(n, seed)).unwrap();
            prop_assert!((0.0..=1.0).contains(&s.mu));
            prop_assert!(s.lambda1 >= s.lambda2 && s.lambda2 >= 0.0);
        }

        #[test]
        fn rotation_invariant_exactly(seed in 0u64..100_000, n in 3usize..12) {
            let p = noise(n, seed);
            let mu = spatial_coherency(&p).unwrap().mu;
            let mut r = p.clone();
            for _ in 0..4 {
                r = r.rot90();
                prop_assert_eq!(spatial_coherency(&r).unwrap().mu, mu);
            }
        }

        #[test]
        fn dyadic_scale_shift_invariant_exactly(seed in 0u64..100_000) {
            let p = dyadic(9, seed);
            let mu = spatial_coherency(&p).unwrap().mu;
            let q = p.map(|v| 2.0 * v + 0.25).unwrap();
            prop_assert_eq!(spatial_coherency(&q).unwrap().mu, mu);
        }

        #[test]
        fn scale_shift_invariant(seed in 0u64..100_000, alpha in 0.01f64..100.0, c in -10.0f64..10.0) {
            let p = noise(9, seed);
            let mu = spatial_coherency(&p).unwrap().mu;
            let q = p.map(|v| alpha * v + c).unwrap();
            prop_assert!((spatial_coherency(&q).unwrap().mu - mu).abs() < 1e-12);
        }
    }
}
