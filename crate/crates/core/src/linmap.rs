//! Risks of the form `𝓛(w) = 𝓛̃(Aw)` with `𝓛̃` strongly convex on `ℝ^k` and
//! `A ∈ ℝ^{k×d}` possibly rank deficient.
//!
//! `𝓛` is flat along `Null(A)` but `α̃σ_min²`-strongly convex on
//! `Range(A†) = Null(A)^⊥`. SGD is analysed through the projected distance
//! `d_t = ‖A†A(w_t − w*)‖²`, which contracts by `1 − α̃σ_min²η` per step in
//! expectation at the step size of [`step_size_theorem2`].

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{self, LinearFactorization, Matrix, ScalarField, Vector};
use crate::objective::{ErmObjective, QuadraticResidual, SampleLoss};
use crate::sgd::{self, SgdConfig, Trajectory};

const STRONG_CONVEXITY_SLACK: f64 = 1e-8;

/// `w ↦ ℓ̃(Aw)`, `σ_max²β̃`-smooth.
#[derive(Debug, Clone)]
pub struct LinearComposedLoss {
    a: Arc<Matrix>,
    sigma_max_sq: f64,
    tilde: Arc<dyn SampleLoss>,
}

impl ScalarField for LinearComposedLoss {
    fn dim(&self) -> usize {
        self.a.ncols()
    }
    fn value(&self, w: &Vector) -> f64 {
        self.tilde.value(&(self.a.as_ref() * w))
    }
    fn gradient(&self, w: &Vector) -> Vector {
        self.a.tr_mul(&self.tilde.gradient(&(self.a.as_ref() * w)))
    }
}

impl SampleLoss for LinearComposedLoss {
    fn beta(&self) -> f64 {
        self.sigma_max_sq * self.tilde.beta()
    }
}

#[derive(Debug, Clone)]
pub struct ComposedLinearProblem {
    pub factorization: LinearFactorization,
    /// `ℓ̃ᵢ(z) = ½(uᵢᵀ(z − z*))²` over `ℝ^k`.
    pub tilde_losses: Vec<Arc<dyn SampleLoss>>,
    /// Strong convexity of `𝓛̃`: `λ_min((1/n) Σ uᵢuᵢᵀ)`.
    pub tilde_alpha: f64,
    /// Smoothness of `𝓛̃`: `λ_max((1/n) Σ uᵢuᵢᵀ)`.
    pub tilde_lambda: f64,
    /// Per-sample smoothness of `ℓ̃ᵢ`: `maxᵢ ‖uᵢ‖²`.
    pub tilde_beta: f64,
    pub z_star: Vector,
    pub w_star: Vector,
    pub objective: ErmObjective,
}

impl ComposedLinearProblem {
    /// Builds the problem for `A`, directions `uᵢ ∈ ℝ^k` and an interpolating
    /// `w*`; `z* = Aw*` is the unique minimizer of `𝓛̃` when the directions
    /// span `ℝ^k`.
    pub fn new(a: Matrix, directions: &[Vector], w_star: Vector) -> Result<Self> {
        let (k, d) = a.shape();
        if w_star.len() != d {
            return Err(Error::invalid(format!(
                "w* has dimension {} but A has {d} columns",
                w_star.len()
            )));
        }
        if directions.is_empty() {
            return Err(Error::invalid("at least one direction is required"));
        }
        if directions.iter().any(|u| u.len() != k) {
            return Err(Error::invalid(format!("directions must have dimension {k}")));
        }
        let factorization = numerics::svd(&a)?;
        let n = directions.len() as f64;
        let mut gram = Matrix::zeros(k, k);
        for u in directions {
            gram += u * u.transpose();
        }
        gram /= n;
        let eig = numerics::symmetric_eigenvalues(&gram)?;
        let tilde_alpha = eig[0];
        let tilde_lambda = eig[k - 1];
        if !(tilde_alpha > 1e-12 * tilde_lambda) {
            return Err(Error::invalid("directions do not span ℝ^k; 𝓛̃ is not strongly convex"));
        }
        let tilde_beta = directions.iter().map(|u| u.norm_squared()).fold(0.0, f64::max);

        let z_star = &a * &w_star;
        let tilde_losses: Vec<Arc<dyn SampleLoss>> = directions
            .iter()
            .map(|u| Arc::new(QuadraticResidual::new(u.clone(), u.dot(&z_star))) as Arc<dyn SampleLoss>)
            .collect();
        let shared = Arc::new(a);
        let sigma_max_sq = factorization.sigma_max.powi(2);
        let losses = tilde_losses
            .iter()
            .map(|t| {
                Arc::new(LinearComposedLoss {
                    a: shared.clone(),
                    sigma_max_sq,
                    tilde: t.clone(),
                }) as Arc<dyn SampleLoss>
            })
            .collect();
        Ok(Self {
            factorization,
            tilde_losses,
            tilde_alpha,
            tilde_lambda,
            tilde_beta,
            z_star,
            w_star,
            objective: ErmObjective::new(losses)?,
        })
    }

    pub fn sigma_min(&self) -> f64 {
        self.factorization.sigma_min_nonzero
    }

    pub fn sigma_max(&self) -> f64 {
        self.factorization.sigma_max
    }

    /// `𝓛̃(z) = (1/n) Σ ℓ̃ᵢ(z)`.
    pub fn tilde_value(&self, z: &Vector) -> f64 {
        self.tilde_losses.iter().map(|l| l.value(z)).sum::<f64>() / self.tilde_losses.len() as f64
    }

    /// `‖A†A(w − w*)‖²`.
    pub fn projected_distance(&self, w: &Vector) -> f64 {
        let diff = w - &self.w_star;
        (&self.factorization.pinv * (&self.factorization.a * diff)).norm_squared()
    }

    /// PL constant `α̃σ_min²` of `𝓛`.
    pub fn pl_constant(&self) -> f64 {
        self.tilde_alpha * self.sigma_min().powi(2)
    }

    /// `λ̃σ_max²/2`, the factor in `𝓛(w) ≤ (λ̃σ_max²/2)·d(w)`.
    pub fn loss_bound_coefficient(&self) -> f64 {
        0.5 * self.tilde_lambda * self.sigma_max().powi(2)
    }
}

fn require_positive(pairs: &[(&str, f64)]) -> Result<()> {
    for (name, v) in pairs {
        if !(*v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be finite and positive, got {v}")));
        }
    }
    Ok(())
}

/// `α·σ²`.
pub fn pl_constant_from_composition(alpha: f64, sigma_min_nonzero: f64) -> Result<f64> {
    require_positive(&[("alpha", alpha), ("sigma_min_nonzero", sigma_min_nonzero)])?;
    Ok(alpha * sigma_min_nonzero * sigma_min_nonzero)
}

/// `m / (σ_max²(β + (m−1)λ))`.
pub fn step_size_theorem2(beta: f64, lambda: f64, sigma_max: f64, m: usize) -> Result<f64> {
    require_positive(&[("beta", beta), ("lambda", lambda), ("sigma_max", sigma_max)])?;
    if m == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    let m = m as f64;
    Ok(m / (sigma_max * sigma_max * (beta + (m - 1.0) * lambda)))
}

/// `1 − α·σ_min²·η`, required to lie in `(0, 1)`.
pub fn theorem2_rate_factor(alpha: f64, sigma_min_nonzero: f64, eta: f64) -> Result<f64> {
    require_positive(&[("alpha", alpha), ("sigma_min_nonzero", sigma_min_nonzero), ("eta", eta)])?;
    let factor = 1.0 - alpha * sigma_min_nonzero * sigma_min_nonzero * eta;
    if !(factor > 0.0 && factor < 1.0) {
        return Err(Error::NonContractive {
            factor,
            range: "(0, 1)",
        });
    }
    Ok(factor)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedTrajectory {
    pub trajectory: Trajectory,
    /// `R × (T+1)` squared projected distances `‖ŵ_t − ŵ*‖²`.
    pub distances: Vec<Vec<f64>>,
    pub mean_distance: Vec<f64>,
    pub std_err_distance: Vec<f64>,
    /// `max_{r,t} 𝓛(w_t) − (λ̃σ_max²/2)·d_t`; non-positive when the pointwise
    /// loss bound holds everywhere.
    pub max_loss_bound_excess: f64,
}

/// Standard mini-batch SGD on `ℓᵢ(w) = ℓ̃ᵢ(Aw)` with the projected distance
/// recorded at every step.
pub fn run_sgd_thm2(p: &ComposedLinearProblem, w0: &Vector, cfg: &SgdConfig) -> Result<ProjectedTrajectory> {
    let observer = |w: &Vector| p.projected_distance(w);
    let (trajectory, distances) = sgd::run_sgd_observed(&p.objective, w0, cfg, &observer)?;
    let (mean_distance, std_err_distance) = sgd::mean_and_std_err(&distances);
    let coefficient = p.loss_bound_coefficient();
    let max_loss_bound_excess = trajectory
        .losses
        .iter()
        .zip(&distances)
        .flat_map(|(ls, ds)| ls.iter().zip(ds).map(|(l, d)| l - coefficient * d))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ProjectedTrajectory {
        trajectory,
        distances,
        mean_distance,
        std_err_distance,
        max_loss_bound_excess,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongConvexityReport {
    pub pass: bool,
    pub checked: usize,
    /// Smallest normalized slack of the inequality.
    pub worst_margin: f64,
    pub failing_pair: Option<usize>,
}

/// Projects both points of every pair onto `Range(A†)` and checks
/// `𝓛(z₁) ≥ 𝓛(z₂) + ⟨∇𝓛(z₂), z₁ − z₂⟩ + (α̃σ_min²/2)‖z₁ − z₂‖²`.
pub fn check_strong_convexity_range(
    p: &ComposedLinearProblem,
    pairs: &[(Vector, Vector)],
) -> Result<StrongConvexityReport> {
    let mu = p.pl_constant();
    let obj = &p.objective;
    let mut report = StrongConvexityReport {
        pass: true,
        checked: 0,
        worst_margin: f64::INFINITY,
        failing_pair: None,
    };
    for (i, (a, b)) in pairs.iter().enumerate() {
        let z1 = numerics::project_range_pinv(&p.factorization, a)?;
        let z2 = numerics::project_range_pinv(&p.factorization, b)?;
        let delta = &z1 - &z2;
        let (f1, f2) = (obj.value(&z1), obj.value(&z2));
        let margin = f1 - f2 - obj.gradient(&z2).dot(&delta) - 0.5 * mu * delta.norm_squared();
        let scale = (f1 + f2).max(1.0);
        let normalized = margin / scale;
        report.checked += 1;
        report.worst_margin = report.worst_margin.min(normalized);
        if normalized < -STRONG_CONVEXITY_SLACK && report.failing_pair.is_none() {
            report.pass = false;
            report.failing_pair = Some(i);
        }
    }
    Ok(report)
}
