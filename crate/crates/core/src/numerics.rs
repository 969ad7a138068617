//! Dense linear algebra and numerical differentiation.
//!
//! Matrices are `nalgebra` types. The SVD and symmetric eigenvalues are
//! computed by `faer`; this module applies the rank cutoff and assembles the
//! Moore-Penrose pseudo-inverse from the factors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative factor of the rank cutoff `τ = RANK_RTOL · σ_max · max(rows, cols)`.
pub const RANK_RTOL: f64 = 1e-10;

/// A differentiable function `ℝ^d → ℝ` with an analytic gradient.
pub trait ScalarField {
    fn dim(&self) -> usize;
    fn value(&self, w: &Vector) -> f64;
    fn gradient(&self, w: &Vector) -> Vector;
}

/// Adapter turning a pair of closures into a [`ScalarField`].
pub struct FnField<V, G> {
    dim: usize,
    value: V,
    gradient: G,
}

impl<V, G> FnField<V, G>
where
    V: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    pub fn new(dim: usize, value: V, gradient: G) -> Self {
        Self { dim, value, gradient }
    }
}

impl<V, G> ScalarField for FnField<V, G>
where
    V: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, w: &Vector) -> f64 {
        (self.value)(w)
    }
    fn gradient(&self, w: &Vector) -> Vector {
        (self.gradient)(w)
    }
}

/// Full SVD `A = U Σ Vᵀ` together with the pseudo-inverse and the extreme
/// non-zero singular values.
#[derive(Debug, Clone)]
pub struct LinearFactorization {
    pub a: Matrix,
    /// `k × k` orthogonal.
    pub u: Matrix,
    /// Non-increasing, length `min(k, d)`.
    pub singular_values: Vector,
    /// `d × d` orthogonal.
    pub v: Matrix,
    pub rank: usize,
    pub sigma_min_nonzero: f64,
    pub sigma_max: f64,
    /// `d × k`.
    pub pinv: Matrix,
}

impl LinearFactorization {
    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn cols(&self) -> usize {
        self.a.ncols()
    }

    /// `A†A`, the orthogonal projector onto `Range(A†) = Null(A)^⊥`.
    pub fn range_projector(&self) -> Matrix {
        &self.pinv * &self.a
    }

    /// Orthonormal basis of `Null(A)` (the trailing columns of `V`).
    pub fn null_space_basis(&self) -> Matrix {
        self.v.columns(self.rank, self.cols() - self.rank).into_owned()
    }

    pub fn frobenius_scale(&self) -> f64 {
        self.a.norm().max(1.0)
    }
}

fn ensure_finite(a: &Matrix, what: &str) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} has non-finite entries")))
    }
}

fn to_faer(a: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> Matrix {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Full SVD with singular values sorted non-increasing, rank cutoff and pseudo-inverse.
pub fn svd(a: &Matrix) -> Result<LinearFactorization> {
    let (rows, cols) = a.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("matrix must have at least one row and column"));
    }
    ensure_finite(a, "matrix")?;

    let decomposition = to_faer(a)
        .svd()
        .map_err(|e| Error::NumericalFailure(format!("SVD did not converge: {e:?}")))?;
    let u = from_faer(decomposition.U());
    let v = from_faer(decomposition.V());
    let diagonal = decomposition.S().column_vector();
    let singular_values = Vector::from_fn(rows.min(cols), |i, _| diagonal[i]);
    if singular_values.as_slice().windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::NumericalFailure("SVD returned unsorted singular values".into()));
    }

    let sigma_max = singular_values[0];
    let tolerance = RANK_RTOL * sigma_max * rows.max(cols) as f64;
    let rank = singular_values.iter().filter(|&&s| s > tolerance).count();
    if rank == 0 {
        return Err(Error::invalid("matrix has no singular value above the rank cutoff"));
    }
    let sigma_min_nonzero = singular_values[rank - 1];

    let mut pinv = Matrix::zeros(cols, rows);
    for j in 0..rank {
        pinv += (v.column(j) * u.column(j).transpose()) / singular_values[j];
    }

    Ok(LinearFactorization {
        a: a.clone(),
        u,
        singular_values,
        v,
        rank,
        sigma_min_nonzero,
        sigma_max,
        pinv,
    })
}

/// Largest singular value; zero for an empty matrix.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    if a.is_empty() {
        return Ok(0.0);
    }
    ensure_finite(a, "matrix")?;
    let values = to_faer(a)
        .singular_values()
        .map_err(|e| Error::NumericalFailure(format!("SVD did not converge: {e:?}")))?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// `ŵ = A†A w`, the component of `w` in `Range(A†)`.
pub fn project_range_pinv(f: &LinearFactorization, w: &Vector) -> Result<Vector> {
    if w.len() != f.cols() {
        return Err(Error::invalid(format!(
            "vector has dimension {} but the matrix has {} columns",
            w.len(),
            f.cols()
        )));
    }
    Ok(&f.pinv * (&f.a * w))
}

/// Default central-difference step `1e-5 · max(1, ‖w‖)`.
pub fn default_fd_step(w: &Vector) -> f64 {
    1e-5 * w.norm().max(1.0)
}

/// Central-difference gradient `(f(w + h eₚ) − f(w − h eₚ)) / 2h`.
pub fn finite_difference_gradient<F>(f: F, w: &Vector, h: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut probe = w.clone();
    let mut grad = Vector::zeros(w.len());
    for p in 0..w.len() {
        let wp = w[p];
        probe[p] = wp + h;
        let plus = f(&probe);
        probe[p] = wp - h;
        let minus = f(&probe);
        probe[p] = wp;
        if !(plus.is_finite() && minus.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "function is not finite near coordinate {p}"
            )));
        }
        grad[p] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Relative error `‖approx − exact‖ / ‖exact‖`, falling back to the absolute
/// error when `exact` vanishes.
pub fn relative_error(exact: &Vector, approx: &Vector) -> f64 {
    let diff = (exact - approx).norm();
    let scale = exact.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

const POWER_ITERATION_RTOL: f64 = 1e-10;

/// Power iteration on finite-difference Hessian-vector products
/// `Hv ≈ (∇f(w + hv) − ∇f(w − hv)) / 2h`.
///
/// The returned value is the magnitude of the Rayleigh quotient at the last
/// iterate. Running out of iterations is not an error; `converged` reports
/// whether successive estimates settled.
pub fn hessian_spectral_norm_estimate<F>(f: &F, w: &Vector, iters: usize, seed: u64) -> Result<SpectralEstimate>
where
    F: ScalarField + ?Sized,
{
    if w.len() != f.dim() {
        return Err(Error::invalid("point dimension does not match the function"));
    }
    let h = default_fd_step(w);
    let hvp = |v: &Vector| -> Result<Vector> {
        let plus = f.gradient(&(w + v * h));
        let minus = f.gradient(&(w - v * h));
        let out = (plus - minus) / (2.0 * h);
        if out.iter().all(|x| x.is_finite()) {
            Ok(out)
        } else {
            Err(Error::NumericalFailure("Hessian-vector product is not finite".into()))
        }
    };

    let mut rng = rng::stream(seed, 0);
    let mut v = rng::unit_vector(&mut rng, w.len());
    let mut estimate = 0.0;
    for it in 1..=iters.max(1) {
        let hv = hvp(&v)?;
        let next = v.dot(&hv).abs();
        let norm = hv.norm();
        if norm == 0.0 {
            return Ok(SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            });
        }
        let settled = (next - estimate).abs() <= POWER_ITERATION_RTOL * next.max(1.0);
        estimate = next;
        v = hv / norm;
        if settled && it > 1 {
            return Ok(SpectralEstimate {
                value: estimate,
                converged: true,
                iterations: it,
            });
        }
    }
    Ok(SpectralEstimate {
        value: estimate,
        converged: false,
        iterations: iters.max(1),
    })
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &Matrix) -> Result<Vector> {
    ensure_finite(m, "matrix")?;
    let mut values = to_faer(m)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::NumericalFailure(format!("eigenvalue iteration did not converge: {e:?}")))?;
    values.sort_by(f64::total_cmp);
    Ok(Vector::from_vec(values))
}
