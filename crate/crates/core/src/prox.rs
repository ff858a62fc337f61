//! Thresholding operators and the analytical inverse-problem solvers they
//! plug into: the Tikhonov closed form `(KᵀK + λI)⁻¹Kᵀg` and iterative
//! shrinkage/thresholding, both in the canonical basis and in an arbitrary
//! orthonormal basis through the `Z_b` operator.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Threshold applied by the soft-thresholding family: one value for every
/// coordinate or one per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Thresholds {
    Uniform(f64),
    PerElement(DVector<f64>),
}

impl Thresholds {
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        match self {
            Thresholds::Uniform(b) => *b,
            Thresholds::PerElement(b) => b[i],
        }
    }

    fn check_len(&self, n: usize) -> Result<()> {
        match self {
            Thresholds::PerElement(b) if b.len() != n => Err(Error::dim(format!(
                "{} thresholds for {n} coordinates",
                b.len()
            ))),
            _ => Ok(()),
        }
    }

    fn check_nonnegative(&self) -> Result<()> {
        let ok = match self {
            Thresholds::Uniform(b) => *b >= 0.0,
            Thresholds::PerElement(b) => b.iter().all(|&v| v >= 0.0),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg("symmetric soft threshold must be nonnegative"))
        }
    }
}

impl From<f64> for Thresholds {
    fn from(b: f64) -> Self {
        Thresholds::Uniform(b)
    }
}

impl From<DVector<f64>> for Thresholds {
    fn from(b: DVector<f64>) -> Self {
        Thresholds::PerElement(b)
    }
}

impl From<&DVector<f64>> for Thresholds {
    fn from(b: &DVector<f64>) -> Self {
        Thresholds::PerElement(b.clone())
    }
}

/// `sign(x)·max(|x| − b, 0)`
#[inline]
pub fn soft_sym_scalar(x: f64, b: f64) -> f64 {
    let m = x.abs() - b;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

/// `max(x − b, 0)`, the thresholded linear unit.
#[inline]
pub fn soft_nn_scalar(x: f64, b: f64) -> f64 {
    let m = x - b;
    if m > 0.0 {
        m
    } else {
        0.0
    }
}

/// Symmetric soft thresholding, the proximal map of `b‖·‖₁`.
pub fn soft_sym(x: &DVector<f64>, b: impl Into<Thresholds>) -> Result<DVector<f64>> {
    let b = b.into();
    b.check_len(x.len())?;
    b.check_nonnegative()?;
    Ok(DVector::from_fn(x.len(), |i, _| soft_sym_scalar(x[i], b.at(i))))
}

/// Nonnegative soft thresholding. Any real threshold is accepted.
pub fn soft_nn(x: &DVector<f64>, b: impl Into<Thresholds>) -> Result<DVector<f64>> {
    let b = b.into();
    b.check_len(x.len())?;
    Ok(DVector::from_fn(x.len(), |i, _| soft_nn_scalar(x[i], b.at(i))))
}

/// Dense observation operator `K` of `g = Kt + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator(DMatrix<f64>);

impl LinearOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::dim("operator must be non-empty"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("operator entries must be finite"));
        }
        Ok(Self(matrix))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }

    /// Copy divided by its (estimated) spectral norm, together with that norm.
    /// A zero operator is returned unchanged with norm 0.
    pub fn normalized(&self) -> (Self, f64) {
        let s = spectral_norm(self, DEFAULT_POWER_ITERS);
        if s == 0.0 {
            (self.clone(), 0.0)
        } else {
            (Self(&self.0 / s), s)
        }
    }
}

pub const DEFAULT_POWER_ITERS: usize = 2000;

/// Largest singular value by power iteration on `KᵀK`.
pub fn spectral_norm(k: &LinearOperator, iters: usize) -> f64 {
    let m = k.matrix();
    let n = m.ncols();
    // Deterministic start with no special alignment to any coordinate.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919 + 13) % 101) as f64 / 101.0);
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..iters.max(1) {
        let w = m.transpose() * (m * &v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - estimate).abs() <= 1e-15 * next {
            estimate = next;
            break;
        }
        estimate = next;
    }
    // Rayleigh quotient of the final vector.
    let kv = m * &v;
    kv.norm().max(estimate.max(0.0).sqrt())
}

/// Tikhonov-regularized least squares `(KᵀK + λI)⁻¹Kᵀg`, via a Cholesky
/// solve of the normal equations.
pub fn landweber_solve(k: &LinearOperator, g: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if g.len() != k.nrows() {
        return Err(Error::dim(format!(
            "observation length {} for operator with {} rows",
            g.len(),
            k.nrows()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("regularization must be finite and >= 0, got {lambda}")));
    }
    let m = k.matrix();
    let n = m.ncols();
    let normal = m.transpose() * m + DMatrix::identity(n, n) * lambda;
    let rhs = m.transpose() * g;
    let chol = normal
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("normal matrix is not positive definite".into()))?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if lambda == 0.0 && (lo / hi).powi(2) < f64::EPSILON * n as f64 {
        return Err(Error::Singular(format!(
            "KᵀK is numerically singular (pivot ratio {:.3e})",
            lo / hi
        )));
    }
    let mut t = chol.solve(&rhs);
    // One step of iterative refinement.
    let r = rhs - &normal * &t;
    t += chol.solve(&r);
    Ok(t)
}

/// Orthonormal basis `{φ_l}` stored as the columns of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    vectors: DMatrix<f64>,
}

impl Basis {
    pub fn new(vectors: DMatrix<f64>) -> Result<Self> {
        if !vectors.is_square() || vectors.nrows() == 0 {
            return Err(Error::dim("basis matrix must be square and non-empty"));
        }
        let gram = vectors.transpose() * &vectors;
        let n = vectors.ncols();
        let dev = (gram - DMatrix::<f64>::identity(n, n)).amax();
        if dev > 1e-10 {
            return Err(Error::arg(format!("columns are not orthonormal (max deviation {dev:.3e})")));
        }
        Ok(Self { vectors })
    }

    pub fn canonical(n: usize) -> Self {
        Self {
            vectors: DMatrix::identity(n, n),
        }
    }

    /// Orthonormal DCT-II basis; column `l` is the `l`-th cosine atom.
    pub fn dct(n: usize) -> Self {
        let nf = n as f64;
        let vectors = DMatrix::from_fn(n, n, |i, l| {
            let scale = if l == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            scale * (std::f64::consts::PI * (2 * i + 1) as f64 * l as f64 / (2.0 * nf)).cos()
        });
        Self { vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    /// Coefficients `⟨x, φ_l⟩`.
    pub fn analyze(&self, x: &DVector<f64>) -> DVector<f64> {
        self.vectors.transpose() * x
    }

    /// `Σ_l c_l φ_l`
    pub fn synthesize(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.vectors * coeffs
    }

    /// Same basis with each `φ_l` negated where `⟨v, φ_l⟩ < 0`, so every
    /// projection of `v` becomes nonnegative.
    pub fn sign_adjusted(&self, v: &DVector<f64>) -> Self {
        let mut vectors = self.vectors.clone();
        let coeffs = self.analyze(v);
        for (l, c) in coeffs.iter().enumerate() {
            if *c < 0.0 {
                vectors.column_mut(l).neg_mut();
            }
        }
        Self { vectors }
    }
}

/// `Z_b(x) = Σ_l S_{b_l}(⟨x, φ_l⟩)·φ_l`
pub fn z_operator(x: &DVector<f64>, basis: &Basis, biases: impl Into<Thresholds>) -> Result<DVector<f64>> {
    if x.len() != basis.len() {
        return Err(Error::dim(format!("vector length {} for basis of size {}", x.len(), basis.len())));
    }
    let coeffs = soft_sym(&basis.analyze(x), biases)?;
    Ok(basis.synthesize(&coeffs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IstOptions {
    pub max_iter: usize,
    /// Stop once `‖tⁿ − tⁿ⁻¹‖₂ < tol`.
    pub tol: f64,
    /// Gradient step; `step·‖K‖² ≤ 1` is required.
    pub step: f64,
}

impl Default for IstOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-8,
            step: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IstReport {
    pub solution: DVector<f64>,
    pub iterations: usize,
    /// `‖tⁿ − tⁿ⁻¹‖₂` per iteration.
    pub residual_history: Vec<f64>,
    /// Penalized objective, starting with the value at `t⁰ = 0`.
    pub objective_history: Vec<f64>,
    pub converged: bool,
}

/// `½‖g − Kt‖² + Σ_l b_l|⟨t, φ_l⟩|`
pub fn penalized_objective(
    k: &LinearOperator,
    g: &DVector<f64>,
    t: &DVector<f64>,
    basis: &Basis,
    biases: &Thresholds,
) -> f64 {
    let r = g - k.matrix() * t;
    let coeffs = basis.analyze(t);
    let penalty: f64 = coeffs.iter().enumerate().map(|(l, c)| biases.at(l) * c.abs()).sum();
    0.5 * r.norm_squared() + penalty
}

/// Largest violation of the optimality conditions of the penalized problem,
/// measured on the basis coefficients: `|∇_l + b_l·sign(c_l)|` on the
/// support (coefficients above `1e-12·max(1, ‖c‖∞)`), `max(|∇_l| − b_l, 0)` off it, with `∇ = −Φᵀ Kᵀ(g − Kt)`.
pub fn kkt_residual(
    k: &LinearOperator,
    g: &DVector<f64>,
    t: &DVector<f64>,
    basis: &Basis,
    biases: &Thresholds,
) -> f64 {
    let corr = basis.analyze(&(k.matrix().transpose() * (g - k.matrix() * t)));
    let coeffs = basis.analyze(t);
    // synthesis followed by analysis leaves round-off on inactive atoms
    let zero = 1e-12 * coeffs.amax().max(1.0);
    coeffs
        .iter()
        .zip(corr.iter())
        .enumerate()
        .map(|(l, (&c, &q))| {
            let b = biases.at(l);
            if c.abs() > zero {
                (q - b * c.signum()).abs()
            } else {
                (q.abs() - b).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Canonical-basis convenience wrapper around [`kkt_residual`].
pub fn lasso_kkt_residual(k: &LinearOperator, g: &DVector<f64>, t: &DVector<f64>, b: f64) -> f64 {
    kkt_residual(k, g, t, &Basis::canonical(t.len()), &Thresholds::Uniform(b))
}

fn check_step(k: &LinearOperator, g: &DVector<f64>, opts: &IstOptions) -> Result<()> {
    if g.len() != k.nrows() {
        return Err(Error::dim(format!(
            "observation length {} for operator with {} rows",
            g.len(),
            k.nrows()
        )));
    }
    if !(opts.step > 0.0 && opts.step.is_finite()) {
        return Err(Error::arg("step must be positive"));
    }
    let s = spectral_norm(k, DEFAULT_POWER_ITERS);
    if opts.step * s * s > 1.0 + 1e-9 {
        return Err(Error::Precondition(format!(
            "step·‖K‖² = {:.6} exceeds 1; rescale the operator",
            opts.step * s * s
        )));
    }
    Ok(())
}

fn iterate(
    k: &LinearOperator,
    g: &DVector<f64>,
    opts: &IstOptions,
    objective: impl Fn(&DVector<f64>) -> f64,
    mut prox: impl FnMut(&DVector<f64>) -> Result<DVector<f64>>,
) -> Result<IstReport> {
    let m = k.matrix();
    let mut t = DVector::zeros(m.ncols());
    let mut residual_history = Vec::new();
    let mut objective_history = vec![objective(&t)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        let grad_step = &t + (m.transpose() * (g - m * &t)) * opts.step;
        let next = prox(&grad_step)?;
        let change = (&next - &t).norm();
        t = next;
        iterations += 1;
        residual_history.push(change);
        objective_history.push(objective(&t));
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(IstReport {
        solution: t,
        iterations,
        residual_history,
        objective_history,
        converged,
    })
}

/// Iterative shrinkage/thresholding for `½‖g − Kt‖² + b‖t‖₁`:
/// `tⁿ = S_{step·b}(tⁿ⁻¹ + step·Kᵀ(g − Ktⁿ⁻¹))` starting from zero.
pub fn ist_solve(k: &LinearOperator, g: &DVector<f64>, b: f64, opts: IstOptions) -> Result<IstReport> {
    if !(b >= 0.0) {
        return Err(Error::arg(format!("threshold must be >= 0, got {b}")));
    }
    check_step(k, g, &opts)?;
    let basis = Basis::canonical(k.ncols());
    let biases = Thresholds::Uniform(b);
    iterate(
        k,
        g,
        &opts,
        |t| penalized_objective(k, g, t, &basis, &biases),
        |x| soft_sym(x, opts.step * b),
    )
}

/// IST in an orthonormal basis: `tⁿ = Z_b(tⁿ⁻¹ + step·Kᵀ(g − Ktⁿ⁻¹))`.
pub fn ist_solve_basis(
    k: &LinearOperator,
    g: &DVector<f64>,
    basis: &Basis,
    biases: impl Into<Thresholds>,
    opts: IstOptions,
) -> Result<IstReport> {
    let biases = biases.into();
    if basis.len() != k.ncols() {
        return Err(Error::dim(format!(
            "basis of size {} for operator with {} columns",
            basis.len(),
            k.ncols()
        )));
    }
    biases.check_len(basis.len())?;
    biases.check_nonnegative()?;
    check_step(k, g, &opts)?;
    let scaled = match &biases {
        Thresholds::Uniform(b) => Thresholds::Uniform(b * opts.step),
        Thresholds::PerElement(b) => Thresholds::PerElement(b * opts.step),
    };
    iterate(
        k,
        g,
        &opts,
        |t| penalized_objective(k, g, t, basis, &biases),
        |x| z_operator(x, basis, scaled.clone()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn soft_sym_branches() {
        assert!((soft_sym_scalar(0.5, 0.2) - 0.3).abs() < 1e-15);
        assert_eq!(soft_sym_scalar(-0.1, 0.2), 0.0);
        assert!((soft_sym_scalar(-0.5, 0.2) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn soft_nn_branches() {
        assert!((soft_nn_scalar(0.5, 0.2) - 0.3).abs() < 1e-15);
        assert_eq!(soft_nn_scalar(0.1, 0.2), 0.0);
        assert_eq!(soft_nn_scalar(-3.0, 0.0), 0.0);
    }

    #[test]
    fn negative_symmetric_threshold_rejected() {
        let x = DVector::from_vec(vec![1.0, 2.0]);
        assert!(matches!(soft_sym(&x, -0.1), Err(Error::Argument(_))));
        assert!(matches!(
            soft_sym(&x, DVector::from_vec(vec![0.1, 0.2, 0.3])),
            Err(Error::Dimension(_))
        ));
        assert!(soft_nn(&x, -0.1).is_ok());
    }

    #[test]
    fn landweber_identity_cases() {
        let g = DVector::from_vec(vec![1.0, -2.0, 3.5]);
        let id = LinearOperator::identity(3);
        assert_eq!(landweber_solve(&id, &g, 0.0).unwrap(), g);
        let half = landweber_solve(&id, &g, 1.0).unwrap();
        assert!((half - &g / 2.0).amax() < 1e-15);
    }

    #[test]
    fn landweber_satisfies_normal_equations() {
        let k = LinearOperator::new(random_matrix(6, 4, 3)).unwrap();
        let g = DVector::from_vec(vec![0.3, -1.0, 0.7, 0.2, 0.0, 1.1]);
        let t = landweber_solve(&k, &g, 0.1).unwrap();
        let m = k.matrix();
        let resid = m.transpose() * m * &t + &t * 0.1 - m.transpose() * &g;
        assert!(resid.amax() < 1e-10);
    }

    #[test]
    fn landweber_singular_at_zero_lambda() {
        let mut m = random_matrix(5, 3, 8);
        let c0 = m.column(0).clone_owned();
        m.set_column(2, &c0);
        let k = LinearOperator::new(m).unwrap();
        let g = DVector::from_element(5, 1.0);
        assert!(matches!(landweber_solve(&k, &g, 0.0), Err(Error::Singular(_))));
        assert!(landweber_solve(&k, &g, 1e-3).is_ok());
    }

    #[test]
    fn spectral_norm_simple_cases() {
        assert!((spectral_norm(&LinearOperator::identity(5), 100) - 1.0).abs() < 1e-12);
        let d = LinearOperator::new(DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0]))).unwrap();
        assert!((spectral_norm(&d, 200) - 3.0).abs() < 1e-12);
        let z = LinearOperator::new(DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(spectral_norm(&z, 10), 0.0);
    }

    #[test]
    fn spectral_norm_matches_svd() {
        for seed in 0..5 {
            let m = random_matrix(10, 10, seed);
            let want = m.clone().svd(false, false).singular_values.max();
            let got = spectral_norm(&LinearOperator::new(m).unwrap(), DEFAULT_POWER_ITERS);
            assert!(((got - want) / want).abs() < 1e-6, "seed {seed}: {got} vs {want}");
        }
    }

    #[test]
    fn ist_identity_fixed_points() {
        let g = DVector::from_vec(vec![0.5, -0.1, -0.5, 2.0]);
        let id = LinearOperator::identity(4);
        let r = ist_solve(&id, &g, 0.0, IstOptions::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 2);
        assert_eq!(r.solution, g);
        let r = ist_solve(&id, &g, 0.2, IstOptions::default()).unwrap();
        assert_eq!(r.solution, soft_sym(&g, 0.2).unwrap());
    }

    #[test]
    fn ist_rejects_unscaled_operator() {
        let k = LinearOperator::new(DMatrix::identity(3, 3) * 2.0).unwrap();
        let g = DVector::zeros(3);
        assert!(matches!(
            ist_solve(&k, &g, 0.1, IstOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn ist_random_lasso_meets_kkt() {
        let (k, _) = LinearOperator::new(random_matrix(8, 16, 42)).unwrap().normalized();
        let mut truth = DVector::zeros(16);
        truth[3] = 1.0;
        truth[11] = -0.7;
        let g = k.matrix() * &truth;
        let r = ist_solve(&k, &g, 0.05, IstOptions::default()).unwrap();
        assert!(r.converged);
        assert!(lasso_kkt_residual(&k, &g, &r.solution, 0.05) < 1e-6);
        for w in r.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        for w in r.residual_history.windows(2).skip(10) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-15);
        }
    }

    #[test]
    fn z_operator_canonical_and_zero_bias() {
        let x = DVector::from_vec(vec![0.3, -1.2, 0.05, 0.9]);
        let canon = Basis::canonical(4);
        assert_eq!(z_operator(&x, &canon, 0.1).unwrap(), soft_sym(&x, 0.1).unwrap());
        let dct = Basis::dct(4);
        assert!((z_operator(&x, &dct, 0.0).unwrap() - &x).amax() < 1e-14);
        assert!(matches!(
            z_operator(&x, &dct, DVector::from_vec(vec![0.1; 3])),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn z_operator_dct_three_step_oracle() {
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(n, |_, _| rng.random_range(0.0..0.3));
        let basis = Basis::dct(n);
        // explicit: project on each cosine atom, threshold, re-synthesize
        let mut want = DVector::zeros(n);
        for l in 0..n {
            let phi = basis.vectors().column(l);
            let c = phi.dot(&x);
            want += phi * soft_sym_scalar(c, b[l]);
        }
        let got = z_operator(&x, &basis, &b).unwrap();
        assert!((got - want).amax() < 1e-10);
    }

    #[test]
    fn basis_validation_and_sign_adjust() {
        assert!(Basis::new(DMatrix::from_element(2, 2, 1.0)).is_err());
        let dct = Basis::dct(6);
        assert!(Basis::new(dct.vectors().clone()).is_ok());
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0, -1.0, 3.0]);
        let adj = dct.sign_adjusted(&v);
        assert!(adj.analyze(&v).iter().all(|&c| c >= 0.0));
        assert!(Basis::new(adj.vectors().clone()).is_ok());
    }

    #[test]
    fn ist_basis_reductions() {
        let (k, _) = LinearOperator::new(random_matrix(6, 8, 9)).unwrap().normalized();
        let g = DVector::from_fn(6, |i, _| (i as f64 * 0.7).sin());
        let opts = IstOptions {
            max_iter: 50,
            tol: 0.0,
            step: 1.0,
        };
        let plain = ist_solve(&k, &g, 0.02, opts).unwrap();
        let canon = ist_solve_basis(&k, &g, &Basis::canonical(8), 0.02, opts).unwrap();
        assert_eq!(plain.solution, canon.solution);
        assert_eq!(plain.residual_history, canon.residual_history);

        // zero thresholds: plain Landweber iteration whatever the basis
        let dct = ist_solve_basis(&k, &g, &Basis::dct(8), 0.0, opts).unwrap();
        let mut t = DVector::zeros(8);
        for _ in 0..50 {
            t = &t + k.matrix().transpose() * (&g - k.matrix() * &t);
        }
        assert!((dct.solution - t).amax() < 1e-12);
    }

    #[test]
    fn ist_basis_dct_optimality() {
        let (k, _) = LinearOperator::new(random_matrix(8, 8, 17)).unwrap().normalized();
        let basis = Basis::dct(8);
        let mut coeffs = DVector::zeros(8);
        coeffs[1] = 1.0;
        coeffs[5] = -0.5;
        let g = k.matrix() * basis.synthesize(&coeffs);
        let b = Thresholds::Uniform(0.01);
        let r = ist_solve_basis(&k, &g, &basis, b.clone(), IstOptions::default()).unwrap();
        assert!(r.converged);
        assert!(kkt_residual(&k, &g, &r.solution, &basis, &b) < 1e-6);
    }
}
