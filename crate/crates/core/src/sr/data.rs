//! Training pairs for ×`scale` superresolution: the network sees a patch of
//! the bicubically degraded image and is scored against the matching
//! center region of the original.

use crate::conv::{GrayImage, Patch};
use crate::error::{Error, Result};
use crate::sr::image::bicubic_resize;

#[derive(Debug, Clone, PartialEq)]
pub struct SrPair {
    pub input: Patch,
    pub target: Patch,
}

/// `bicubic(bicubic(img, 1/scale), scale)` together with the part of `img`
/// it covers (the two differ only when a side is not divisible by `scale`).
pub fn degrade(img: &GrayImage, scale: f64) -> Result<(GrayImage, GrayImage)> {
    let low = bicubic_resize(img, 1.0 / scale)?;
    let up = bicubic_resize(&low, scale)?;
    let (r, c) = (up.rows().min(img.rows()), up.cols().min(img.cols()));
    Ok((up.window(0, 0, r, c)?, img.window(0, 0, r, c)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairGeometry {
    /// Side of the target patch.
    pub output: usize,
    pub receptive_field: usize,
    pub stride: usize,
    /// Distance between the image border and the first target pixel; must
    /// be at least `(receptive_field − 1)/2`.
    pub margin: usize,
}

impl PairGeometry {
    /// Input side `output + receptive_field − 1`.
    pub fn superpatch(&self) -> usize {
        self.output + self.receptive_field - 1
    }

    fn check(&self) -> Result<()> {
        if self.output == 0 || self.stride == 0 {
            return Err(Error::arg("output size and stride must be positive"));
        }
        if self.receptive_field % 2 == 0 {
            return Err(Error::arg("receptive field must be odd"));
        }
        if self.margin < (self.receptive_field - 1) / 2 {
            return Err(Error::arg("margin smaller than the receptive-field radius"));
        }
        Ok(())
    }

    /// Target top-left positions along a side of length `n`.
    pub fn positions(&self, n: usize) -> Vec<usize> {
        if n < 2 * self.margin + self.output {
            return Vec::new();
        }
        (self.margin..=n - self.margin - self.output).step_by(self.stride).collect()
    }
}

/// Pairs on a stride grid of target positions. Depth sweeps use a common
/// margin so that every depth is scored on the same target pixels.
pub fn make_pairs(images: &[GrayImage], scale: f64, geom: PairGeometry) -> Result<Vec<SrPair>> {
    geom.check()?;
    let r = (geom.receptive_field - 1) / 2;
    let c = geom.superpatch();
    let mut out = Vec::new();
    for img in images {
        let (low, reference) = degrade(img, scale)?;
        for ti in geom.positions(low.rows()) {
            for tj in geom.positions(low.cols()) {
                out.push(SrPair {
                    input: low.window(ti - r, tj - r, c, c)?,
                    target: reference.window(ti, tj, geom.output, geom.output)?,
                });
            }
        }
    }
    Ok(out)
}

/// All `superpatch × superpatch` inputs on a stride grid; targets are the
/// `superpatch − receptive_field + 1` center crops of the original.
pub fn make_sr_pairs(
    images: &[GrayImage],
    scale: f64,
    superpatch: usize,
    stride: usize,
    receptive_field: usize,
) -> Result<Vec<SrPair>> {
    if superpatch < receptive_field {
        return Err(Error::arg(format!(
            "superpatch {superpatch} smaller than receptive field {receptive_field}"
        )));
    }
    make_pairs(
        images,
        scale,
        PairGeometry {
            output: superpatch + 1 - receptive_field,
            receptive_field,
            stride,
            margin: (receptive_field.saturating_sub(1)) / 2,
        },
    )
}
