//! Synthetic training scenes: oriented stripe patterns (strongly coherent
//! gradients) and i.i.d. noise textures (isotropic gradients).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conv::{GrayImage, Patch};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneKind {
    Edges,
    Noise,
}

const SUPERSAMPLE: usize = 4;

/// Square-wave stripes at a random angle, period and contrast, rendered with
/// 4×4 supersampling so edges carry sub-pixel position.
pub fn stripe_scene(size: usize, rng: &mut impl Rng) -> Result<GrayImage> {
    if size == 0 {
        return Err(Error::arg("scene size must be positive"));
    }
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let period: f64 = rng.random_range(6.0..16.0);
    let phase: f64 = rng.random_range(0.0..period);
    let lo: f64 = rng.random_range(0.05..0.4);
    let hi: f64 = rng.random_range(0.6..0.95);
    let (nx, ny) = (theta.cos(), theta.sin());
    let step = 1.0 / SUPERSAMPLE as f64;
    Patch::from_fn(size, size, |i, j| {
        let mut acc = 0.0;
        for a in 0..SUPERSAMPLE {
            for b in 0..SUPERSAMPLE {
                let y = i as f64 + (a as f64 + 0.5) * step;
                let x = j as f64 + (b as f64 + 0.5) * step;
                let t = (nx * x + ny * y + phase).rem_euclid(period);
                acc += if t < period / 2.0 { lo } else { hi };
            }
        }
        acc / (SUPERSAMPLE * SUPERSAMPLE) as f64
    })
}

/// Independent uniform intensities in `[0.1, 0.9]`.
pub fn noise_scene(size: usize, rng: &mut impl Rng) -> Result<GrayImage> {
    if size == 0 {
        return Err(Error::arg("scene size must be positive"));
    }
    Patch::from_fn(size, size, |_, _| rng.random_range(0.1..0.9))
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub kind: SceneKind,
    pub image: GrayImage,
}

/// `edges` stripe scenes followed by `noise` texture scenes, named
/// `edge_000.pgm`, ..., `noise_000.pgm`, ...
pub fn synthetic_corpus(edges: usize, noise: usize, size: usize, seed: u64) -> Result<Vec<Scene>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(edges + noise);
    for k in 0..edges {
        out.push(Scene {
            name: format!("edge_{k:03}.pgm"),
            kind: SceneKind::Edges,
            image: stripe_scene(size, &mut rng)?,
        });
    }
    for k in 0..noise {
        out.push(Scene {
            name: format!("noise_{k:03}.pgm"),
            kind: SceneKind::Noise,
            image: noise_scene(size, &mut rng)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherency::spatial_coherency;

    #[test]
    fn scenes_are_deterministic_and_in_range() {
        let a = synthetic_corpus(3, 3, 24, 9).unwrap();
        let b = synthetic_corpus(3, 3, 24, 9).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.image, y.image);
            assert!(x.image.matrix().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        assert_eq!(a[0].name, "edge_000.pgm");
        assert_eq!(a[3].kind, SceneKind::Noise);
    }

    #[test]
    fn stripes_coherent_noise_not() {
        for s in synthetic_corpus(10, 10, 32, 1).unwrap() {
            let mu = spatial_coherency(&s.image).unwrap().mu;
            match s.kind {
                SceneKind::Edges => assert!(mu > 0.6, "{} {mu}", s.name),
                SceneKind::Noise => assert!(mu < 0.2, "{} {mu}", s.name),
            }
        }
    }
}
