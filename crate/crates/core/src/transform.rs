//! Objectives composed with a smooth reparametrization `Φ: ℝ^k → ℝ^d`.
//!
//! If `λ_min(JᵀJ) ≥ a` and `λ_max(JᵀJ) ≤ b` everywhere, the PL constant of
//! `f ∘ Φ` is `aα`. The smoothness transfer `λ' = bλ` only follows from the
//! Jacobian bounds when `Φ` is affine; for the nonlinear warp the composed
//! smoothness is measured, not asserted.

use std::sync::Arc;

use crate::constants::{verify_pl_inequality, PlVerification};
use crate::error::{Error, Result};
use crate::numerics::{self, Matrix, ScalarField, Vector};
use crate::objective::{ErmObjective, SampleLoss};

const TRANSFER_SLACK: f64 = 1e-8;
const SPECTRAL_SLACK: f64 = 1e-10;

/// A map `Φ` with analytic Jacobian and exact spectral bounds `a ≤ b` on `JᵀJ`.
#[derive(Debug, Clone)]
pub enum TransformSpec {
    Identity {
        dim: usize,
    },
    /// `v ↦ Mv` with `M` of full column rank; `a = σ_min(M)²`, `b = σ_max(M)²`.
    /// Its image is `Range(M)`, a `k`-dimensional subspace of `ℝ^d`.
    Linear {
        matrix: Matrix,
        a: f64,
        b: f64,
    },
    /// `v ↦ v + c·sin(v)` elementwise with `0 < c < 1`, a bijection of `ℝ^k`
    /// with `a = (1−c)²`, `b = (1+c)²`.
    SineWarp {
        dim: usize,
        c: f64,
    },
}

impl TransformSpec {
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("transform dimension must be positive"));
        }
        Ok(TransformSpec::Identity { dim })
    }

    pub fn linear(matrix: Matrix) -> Result<Self> {
        let (d, k) = matrix.shape();
        if d < k {
            return Err(Error::invalid(format!(
                "linear transform needs out_dim ≥ in_dim, got {d} × {k}"
            )));
        }
        let f = numerics::svd(&matrix)?;
        if f.rank < k {
            return Err(Error::invalid("linear transform must have full column rank"));
        }
        Ok(TransformSpec::Linear {
            a: f.sigma_min_nonzero.powi(2),
            b: f.sigma_max.powi(2),
            matrix,
        })
    }

    pub fn sine_warp(dim: usize, c: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("transform dimension must be positive"));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::invalid(format!("warp amplitude must lie in (0, 1), got {c}")));
        }
        Ok(TransformSpec::SineWarp { dim, c })
    }

    pub fn in_dim(&self) -> usize {
        match self {
            TransformSpec::Identity { dim } | TransformSpec::SineWarp { dim, .. } => *dim,
            TransformSpec::Linear { matrix, .. } => matrix.ncols(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            TransformSpec::Identity { dim } | TransformSpec::SineWarp { dim, .. } => *dim,
            TransformSpec::Linear { matrix, .. } => matrix.nrows(),
        }
    }

    /// Lower bound `a` on the eigenvalues of `JᵀJ`.
    pub fn a(&self) -> f64 {
        match self {
            TransformSpec::Identity { .. } => 1.0,
            TransformSpec::Linear { a, .. } => *a,
            TransformSpec::SineWarp { c, .. } => (1.0 - c).powi(2),
        }
    }

    /// Upper bound `b` on the eigenvalues of `JᵀJ`.
    pub fn b(&self) -> f64 {
        match self {
            TransformSpec::Identity { .. } => 1.0,
            TransformSpec::Linear { b, .. } => *b,
            TransformSpec::SineWarp { c, .. } => (1.0 + c).powi(2),
        }
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        match self {
            TransformSpec::Identity { .. } => v.clone(),
            TransformSpec::Linear { matrix, .. } => matrix * v,
            TransformSpec::SineWarp { c, .. } => v.map(|x| x + c * x.sin()),
        }
    }

    /// `d × k` Jacobian at `v`.
    pub fn jacobian(&self, v: &Vector) -> Matrix {
        match self {
            TransformSpec::Identity { dim } => Matrix::identity(*dim, *dim),
            TransformSpec::Linear { matrix, .. } => matrix.clone(),
            TransformSpec::SineWarp { c, .. } => Matrix::from_diagonal(&v.map(|x| 1.0 + c * x.cos())),
        }
    }

    /// `J(v)ᵀ g` without materializing `J`.
    pub fn pullback(&self, v: &Vector, g: &Vector) -> Vector {
        match self {
            TransformSpec::Identity { .. } => g.clone(),
            TransformSpec::Linear { matrix, .. } => matrix.tr_mul(g),
            TransformSpec::SineWarp { c, .. } => v.zip_map(g, |x, gi| (1.0 + c * x.cos()) * gi),
        }
    }

    /// Some `v` with `Φ(v) = w`, or `None` when `w` lies outside the image.
    pub fn preimage(&self, w: &Vector) -> Option<Vector> {
        match self {
            TransformSpec::Identity { .. } => Some(w.clone()),
            TransformSpec::Linear { matrix, .. } => {
                let f = numerics::svd(matrix).ok()?;
                let v = &f.pinv * w;
                let back = matrix * &v;
                ((back - w).norm() <= 1e-10 * w.norm().max(1.0)).then_some(v)
            }
            TransformSpec::SineWarp { c, .. } => Some(w.map(|target| invert_sine_warp(target, *c))),
        }
    }
}

/// Solves `v + c·sin(v) = target`; the root lies in `[target − c, target + c]`
/// and the map is strictly increasing there.
fn invert_sine_warp(target: f64, c: f64) -> f64 {
    let (mut lo, mut hi) = (target - c, target + c);
    let mut v = target;
    for _ in 0..200 {
        let g = v + c * v.sin() - target;
        if g == 0.0 {
            return v;
        }
        if g > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let newton = v - g / (1.0 + c * v.cos());
        v = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * target.abs().max(1.0) {
            break;
        }
    }
    v
}

/// `v ↦ ℓ(Φ(v))` whose claimed smoothness is `b·β`.
#[derive(Debug, Clone)]
pub struct ComposedLoss {
    base: Arc<dyn SampleLoss>,
    transform: Arc<TransformSpec>,
}

impl ComposedLoss {
    pub fn new(base: Arc<dyn SampleLoss>, transform: Arc<TransformSpec>) -> Result<Self> {
        if base.dim() != transform.out_dim() {
            return Err(Error::invalid(format!(
                "loss dimension {} does not match transform output {}",
                base.dim(),
                transform.out_dim()
            )));
        }
        Ok(Self { base, transform })
    }
}

impl ScalarField for ComposedLoss {
    fn dim(&self) -> usize {
        self.transform.in_dim()
    }
    fn value(&self, v: &Vector) -> f64 {
        self.base.value(&self.transform.apply(v))
    }
    fn gradient(&self, v: &Vector) -> Vector {
        let g = self.base.gradient(&self.transform.apply(v));
        self.transform.pullback(v, &g)
    }
}

impl SampleLoss for ComposedLoss {
    fn beta(&self) -> f64 {
        self.transform.b() * self.base.beta()
    }
}

pub fn compose_objective(obj: &ErmObjective, t: &Arc<TransformSpec>) -> Result<ErmObjective> {
    if obj.dim() != t.out_dim() {
        return Err(Error::invalid(format!(
            "objective dimension {} does not match transform output {}",
            obj.dim(),
            t.out_dim()
        )));
    }
    let losses = obj
        .losses()
        .iter()
        .map(|l| ComposedLoss::new(l.clone(), t.clone()).map(|c| Arc::new(c) as Arc<dyn SampleLoss>))
        .collect::<Result<Vec<_>>>()?;
    ErmObjective::new(losses)
}

fn check_bounds(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite() && b.is_finite() && b >= a) {
        return Err(Error::invalid(format!(
            "Jacobian bounds need 0 < a ≤ b, got a = {a}, b = {b}"
        )));
    }
    Ok(())
}

/// `(α', λ') = (aα, bλ)`.
pub fn composed_constants(alpha: f64, lambda: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    check_bounds(a, b)?;
    if !(alpha > 0.0 && lambda > 0.0) {
        return Err(Error::invalid("alpha and lambda must be positive"));
    }
    Ok((a * alpha, b * lambda))
}

/// `η_Φ = (a/b²)·η*`.
pub fn step_size_corollary(eta_star: f64, a: f64, b: f64) -> Result<f64> {
    check_bounds(a, b)?;
    if !(eta_star > 0.0 && eta_star.is_finite()) {
        return Err(Error::invalid(format!(
            "base step size must be positive, got {eta_star}"
        )));
    }
    Ok(a / (b * b) * eta_star)
}

/// `1 − (a²/b²)·α·η*/2`, required to lie in `[0, 1]`.
pub fn corollary_bound_factor(alpha: f64, eta_star: f64, a: f64, b: f64) -> Result<f64> {
    check_bounds(a, b)?;
    if !(alpha > 0.0 && eta_star > 0.0) {
        return Err(Error::invalid("alpha and the base step size must be positive"));
    }
    let factor = 1.0 - (a * a) / (b * b) * alpha * eta_star / 2.0;
    if !(0.0..=1.0).contains(&factor) {
        return Err(Error::NonContractive {
            factor,
            range: "[0, 1]",
        });
    }
    Ok(factor)
}

/// Checks `‖J(v)ᵀ∇𝓛(Φ(v))‖² ≥ a·α·𝓛(Φ(v))` at every probe whose loss is above
/// the floor.
pub fn verify_pl_transfer(
    obj: &ErmObjective,
    t: &TransformSpec,
    alpha: f64,
    probes: &[Vector],
    loss_floor: f64,
) -> Result<PlVerification> {
    if obj.dim() != t.out_dim() {
        return Err(Error::invalid("objective dimension does not match transform output"));
    }
    if let Some(i) = probes.iter().position(|v| v.len() != t.in_dim()) {
        return Err(Error::invalid(format!("probe {i} has the wrong dimension")));
    }
    verify_pl_inequality(
        |v| {
            let w = t.apply(v);
            let g = t.pullback(v, &obj.gradient(&w));
            (obj.value(&w), g.norm_squared())
        },
        probes,
        t.a() * alpha,
        loss_floor,
        TRANSFER_SLACK,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub pass: bool,
}

/// Extreme eigenvalues of `J(v)ᵀJ(v)` over `points` against `[a, b]`.
pub fn spectral_sandwich(t: &TransformSpec, points: &[Vector]) -> Result<SandwichReport> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in points {
        let j = t.jacobian(v);
        let eig = numerics::symmetric_eigenvalues(&(j.transpose() * &j))?;
        lo = lo.min(eig[0]);
        hi = hi.max(eig[eig.len() - 1]);
    }
    Ok(SandwichReport {
        min_eigenvalue: lo,
        max_eigenvalue: hi,
        pass: lo >= t.a() - SPECTRAL_SLACK && hi <= t.b() + SPECTRAL_SLACK,
    })
}
