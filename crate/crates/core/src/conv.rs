//! Convolution written as dictionary algebra.
//!
//! Every 2-D quantity is a [`Patch`]; bold vectors are its row-major
//! lexicographic vectorization ([`LexVector`]). Convolution follows the CNN
//! convention (correlation, no kernel flip) and only the valid region is kept.
//!
//! * [`w_operator`] stacks the sliding `a×a` windows of a `c×c` superpatch as
//!   rows of a [`LearningDictionary`], so `W(x)·vec(f) = vec(x ⋆ f)`.
//! * [`x_operator`] turns a filter into the matrix of "correlate with this
//!   filter", which lets the order of two cascaded correlations be swapped:
//!   `X(f₁)·W(x)·vec(f₀) = vec((x ⋆ f₀) ⋆ f₁)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Position of pixel `(i, j)` inside the vectorization of a patch with `cols`
/// columns. This is the only place the lexicographic order is fixed.
#[inline]
pub fn lex_index(i: usize, j: usize, cols: usize) -> usize {
    i * cols + j
}

/// A non-empty 2-D block of finite intensities.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    data: DMatrix<f64>,
}

/// Whole images share the patch representation.
pub type GrayImage = Patch;

impl Patch {
    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::dim("patch must have at least one row and column"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("patch entries must be finite"));
        }
        Ok(Self { data })
    }

    /// Builds a patch from row-major values.
    pub fn from_rows(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values cannot fill a {rows}x{cols} patch",
                values.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(rows, cols, values))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Result<Self> {
        Self::from_matrix(DMatrix::from_element(rows, cols, value))
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows() * self.cols()];
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out[lex_index(i, j, self.cols())] = self.data[(i, j)];
            }
        }
        out
    }

    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::from_matrix(self.data.map(f))
    }

    /// Copy of the `height×width` block whose top-left corner is `(top, left)`.
    pub fn window(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 || top + height > self.rows() || left + width > self.cols() {
            return Err(Error::dim(format!(
                "window {height}x{width} at ({top},{left}) exceeds {}x{} patch",
                self.rows(),
                self.cols()
            )));
        }
        Ok(Self {
            data: self.data.view((top, left), (height, width)).into_owned(),
        })
    }

    /// Centered `height×width` crop. The size difference must be even on both axes.
    pub fn center_crop(&self, height: usize, width: usize) -> Result<Self> {
        let (dr, dc) = (self.rows().checked_sub(height), self.cols().checked_sub(width));
        match (dr, dc) {
            (Some(dr), Some(dc)) if dr % 2 == 0 && dc % 2 == 0 => {
                self.window(dr / 2, dc / 2, height, width)
            }
            _ => Err(Error::dim(format!(
                "cannot center-crop {}x{} to {height}x{width}",
                self.rows(),
                self.cols()
            ))),
        }
    }

    /// Rotation by 90° counter-clockwise.
    pub fn rot90(&self) -> Self {
        let (r, c) = (self.rows(), self.cols());
        Self {
            data: DMatrix::from_fn(c, r, |i, j| self.data[(j, c - 1 - i)]),
        }
    }
}

/// Lexicographically vectorized patch; remembers the source shape.
#[derive(Debug, Clone, PartialEq)]
pub struct LexVector {
    data: DVector<f64>,
    rows: usize,
    cols: usize,
}

impl LexVector {
    pub fn from_vector(data: DVector<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::dim(format!(
                "vector of length {} is not a {rows}x{cols} patch",
                data.len()
            )));
        }
        Ok(Self { data, rows, cols })
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Inverse of [`vectorize_lex`].
    pub fn to_patch(&self) -> Result<Patch> {
        Patch::from_fn(self.rows, self.cols, |i, j| self.data[lex_index(i, j, self.cols)])
    }
}

/// Row-major vectorization. Patches are non-empty by construction, so this
/// cannot fail; empty input is rejected when the patch is built.
pub fn vectorize_lex(p: &Patch) -> LexVector {
    LexVector {
        data: DVector::from_vec(p.to_row_major()),
        rows: p.rows(),
        cols: p.cols(),
    }
}

/// Valid part of the correlation `x ⋆ f`:
/// `out[i,j] = Σ_{u,v} x[i+u, j+v]·f[u,v]`.
pub fn valid_correlate(x: &Patch, f: &Patch) -> Result<Patch> {
    if f.rows() > x.rows() || f.cols() > x.cols() {
        return Err(Error::dim(format!(
            "{}x{} filter does not fit a {}x{} input",
            f.rows(),
            f.cols(),
            x.rows(),
            x.cols()
        )));
    }
    let (oh, ow) = (x.rows() - f.rows() + 1, x.cols() - f.cols() + 1);
    Patch::from_fn(oh, ow, |i, j| {
        let mut acc = 0.0;
        for u in 0..f.rows() {
            for v in 0..f.cols() {
                acc += x.get(i + u, j + v) * f.get(u, v);
            }
        }
        acc
    })
}

/// The `W_{c,a}(x)` operator as a matrix: one row per sliding window.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningDictionary {
    matrix: DMatrix<f64>,
    source_size: usize,
    filter_size: usize,
}

impl LearningDictionary {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Superpatch side `c`.
    pub fn source_size(&self) -> usize {
        self.source_size
    }

    /// Filter side `a`.
    pub fn filter_size(&self) -> usize {
        self.filter_size
    }

    /// Side of the valid output, `c − a + 1`.
    pub fn output_size(&self) -> usize {
        self.source_size - self.filter_size + 1
    }

    /// Divides the dictionary by `scale`, keeping the geometry.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::arg(format!("scale must be positive, got {scale}")));
        }
        Ok(Self {
            matrix: &self.matrix / scale,
            ..self.clone()
        })
    }
}

/// Builds `W_{c,a}(x)` of shape `(c−a+1)² × a²`.
pub fn w_operator(x: &Patch, a: usize) -> Result<LearningDictionary> {
    if !x.is_square() {
        return Err(Error::dim("W operator needs a square superpatch"));
    }
    let c = x.rows();
    if a == 0 || a > c {
        return Err(Error::dim(format!("filter size {a} does not fit superpatch {c}")));
    }
    let n = c - a + 1;
    let mut matrix = DMatrix::zeros(n * n, a * a);
    for i in 0..n {
        for j in 0..n {
            let row = lex_index(i, j, n);
            for u in 0..a {
                for v in 0..a {
                    matrix[(row, lex_index(u, v, a))] = x.get(i + u, j + v);
                }
            }
        }
    }
    Ok(LearningDictionary {
        matrix,
        source_size: c,
        filter_size: a,
    })
}

/// Matrix of `y ↦ vec(y ⋆ f)` for `input×input` images `y`.
pub fn correlation_matrix(f: &Patch, input: usize) -> Result<DMatrix<f64>> {
    if !f.is_square() {
        return Err(Error::dim("filter must be square"));
    }
    let a = f.rows();
    if a > input {
        return Err(Error::dim(format!("filter size {a} exceeds input size {input}")));
    }
    let n = input - a + 1;
    let mut m = DMatrix::zeros(n * n, input * input);
    for i in 0..n {
        for j in 0..n {
            let row = lex_index(i, j, n);
            for u in 0..a {
                for v in 0..a {
                    m[(row, lex_index(i + u, j + v, input))] = f.get(u, v);
                }
            }
        }
    }
    Ok(m)
}

/// The `X_{e,a}(f)` order-swap operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapOperator {
    matrix: DMatrix<f64>,
    image_size: usize,
    filter_size: usize,
}

impl SwapOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    pub fn filter_size(&self) -> usize {
        self.filter_size
    }
}

/// Builds `X_{e,a}(f)` of shape `(e−2a+2)² × (e−a+1)²`: applied to the
/// vectorized first-stage output `x ⋆ f₀` (side `e−a+1`) it correlates once
/// more with `f`.
pub fn x_operator(f: &Patch, e: usize) -> Result<SwapOperator> {
    if !f.is_square() {
        return Err(Error::dim("X operator needs a square filter"));
    }
    let a = f.rows();
    if e + 1 < 2 * a {
        return Err(Error::dim(format!(
            "image size {e} too small for two {a}x{a} correlations"
        )));
    }
    Ok(SwapOperator {
        matrix: correlation_matrix(f, e - a + 1)?,
        image_size: e,
        filter_size: a,
    })
}
