//! Grayscale image plumbing: binary PGM files, bicubic resampling and PSNR.

use std::fs;
use std::path::Path;

use crate::conv::{GrayImage, Patch};
use crate::error::{Error, Result};

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn next_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

/// Parses a binary (P5) PGM with maxval 255 into intensities in `[0, 1]`.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let mut pos = 0;
    if next_token(bytes, &mut pos) != Some(b"P5") {
        return Err(format_err(path, "not a binary PGM (missing P5 magic)"));
    }
    let mut field = |name: &str| -> Result<usize> {
        let tok = next_token(bytes, &mut pos).ok_or_else(|| format_err(path, format!("missing {name}")))?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format_err(path, format!("bad {name}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if maxval != 255 {
        return Err(format_err(path, format!("maxval {maxval}, only 255 is supported")));
    }
    if width == 0 || height == 0 {
        return Err(format_err(path, "empty image"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(format_err(path, "truncated header"));
    }
    pos += 1;
    let raster = &bytes[pos..];
    if raster.len() < width * height {
        return Err(format_err(
            path,
            format!("expected {} pixels, found {}", width * height, raster.len()),
        ));
    }
    Patch::from_fn(height, width, |i, j| raster[i * width + j] as f64 / 255.0)
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    decode_pgm(&fs::read(path)?, path)
}

/// Intensities are clamped to `[0, 1]` and rounded half-up to 8 bits.
pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.cols(), img.rows()).into_bytes();
    out.extend(
        img.to_row_major()
            .into_iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8),
    );
    out
}

pub fn save_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

// Catmull-Rom (a = -0.5)
fn cubic_weight(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        ((A + 2.0) * x - (A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((A * x - 5.0 * A) * x + 8.0 * A) * x - 4.0 * A
    } else {
        0.0
    }
}

// Per output index: the four clamped source taps and their weights.
fn resample_plan(src_len: usize, dst_len: usize, scale: f64) -> Vec<([usize; 4], [f64; 4])> {
    (0..dst_len)
        .map(|d| {
            let s = (d as f64 + 0.5) / scale - 0.5;
            let base = s.floor();
            let frac = s - base;
            let mut idx = [0usize; 4];
            let mut w = [0.0; 4];
            for k in 0..4 {
                let off = k as f64 - 1.0;
                let pos = (base as i64 + k as i64 - 1).clamp(0, src_len as i64 - 1);
                idx[k] = pos as usize;
                w[k] = cubic_weight(frac - off);
            }
            (idx, w)
        })
        .collect()
}

/// Separable Catmull-Rom resampling with clamped edges. The output has
/// `floor(dim · scale)` rows and columns; pixel centers map as
/// `src = (dst + ½)/scale − ½`.
pub fn bicubic_resize(img: &GrayImage, scale: f64) -> Result<GrayImage> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::arg(format!("scale {scale} must be positive")));
    }
    let (r, c) = (img.rows(), img.cols());
    let (nr, nc) = ((r as f64 * scale).floor() as usize, (c as f64 * scale).floor() as usize);
    if nr == 0 || nc == 0 {
        return Err(Error::arg(format!("{r}x{c} at scale {scale} has no pixels")));
    }
    let m = img.matrix();
    let cols_plan = resample_plan(c, nc, scale);
    let rows_plan = resample_plan(r, nr, scale);
    let mut tmp = vec![0.0; r * nc];
    for i in 0..r {
        for (j, (idx, w)) in cols_plan.iter().enumerate() {
            tmp[i * nc + j] = (0..4).map(|k| w[k] * m[(i, idx[k])]).sum();
        }
    }
    Patch::from_fn(nr, nc, |i, j| {
        let (idx, w) = &rows_plan[i];
        (0..4).map(|k| w[k] * tmp[idx[k] * nc + j]).sum()
    })
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::dim(format!(
            "{}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let n = (a.rows() * a.cols()) as f64;
    Ok((a.matrix() - b.matrix()).norm_squared() / n)
}

/// `10·log10(1/mse)` with peak 1; `+∞` for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let e = mse(a, b)?;
    Ok(if e == 0.0 { f64::INFINITY } else { -10.0 * e.log10() })
}
