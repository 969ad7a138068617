//! The constants `α` (PL), `β` (per-sample smoothness) and `λ` (risk
//! smoothness) that parameterize every step-size rule.
//!
//! Generated problems carry analytic values. The probe-based estimators are
//! for black-box objectives and are local by nature: the PL estimate is an
//! upper bound on any valid `α` over the probed region, the smoothness
//! estimate a lower bound on the global `λ`.

use crate::error::{Error, Result};
use crate::numerics::{self, LinearFactorization, ScalarField, Vector};
use crate::rng;

pub const DEFAULT_POWER_ITERATIONS: usize = 500;
const PL_SLACK: f64 = 1e-10;
const RANGE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant {
    pub value: f64,
    pub source: Provenance,
}

impl Constant {
    pub fn analytic(value: f64) -> Self {
        Self {
            value,
            source: Provenance::Analytic,
        }
    }

    pub fn estimated(value: f64) -> Self {
        Self {
            value,
            source: Provenance::Estimated,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub alpha: Constant,
    pub beta: Constant,
    pub lambda: Constant,
    pub probe_count: usize,
    pub alpha_worst_probe: Option<Vector>,
}

impl ConstantsReport {
    /// Validates positivity and `α ≤ 2λ`, which any non-negative
    /// `λ`-smooth function with infimum zero must satisfy.
    pub fn new(alpha: Constant, beta: Constant, lambda: Constant) -> Result<Self> {
        for (name, c) in [("alpha", alpha), ("beta", beta), ("lambda", lambda)] {
            if !(c.value > 0.0 && c.value.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and positive, got {}",
                    c.value
                )));
            }
        }
        if alpha.value > 2.0 * lambda.value * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "alpha = {} exceeds 2·lambda = {}",
                alpha.value,
                2.0 * lambda.value
            )));
        }
        Ok(Self {
            alpha,
            beta,
            lambda,
            probe_count: 0,
            alpha_worst_probe: None,
        })
    }

    pub fn analytic(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        Self::new(
            Constant::analytic(alpha),
            Constant::analytic(beta),
            Constant::analytic(lambda),
        )
    }
}

/// Loss floor `1e-12 · 𝓛(w₀)` below which PL ratios are dominated by rounding.
pub fn default_loss_floor(initial_loss: f64) -> f64 {
    1e-12 * initial_loss
}

/// Probes around `center`: cycles through perturbations of norm
/// `{0.1, 1, 10} · ‖center‖` and plain standard Gaussian points.
pub fn standard_probes(center: &Vector, count: usize, seed: u64) -> Vec<Vector> {
    let dim = center.len();
    let radius = if center.norm() > 0.0 { center.norm() } else { 1.0 };
    let mut s = rng::stream(seed, 0);
    (0..count)
        .map(|i| match i % 4 {
            0 => center + rng::unit_vector(&mut s, dim) * (0.1 * radius),
            1 => center + rng::unit_vector(&mut s, dim) * radius,
            2 => center + rng::unit_vector(&mut s, dim) * (10.0 * radius),
            _ => rng::gaussian_vector(&mut s, dim),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlEstimate {
    pub alpha: f64,
    pub worst_probe: Vector,
    pub worst_index: usize,
    pub qualifying: usize,
}

/// `min ‖∇𝓛(w)‖² / 𝓛(w)` over the probes with `𝓛(w) > loss_floor`.
pub fn estimate_pl_constant<F>(obj: &F, probes: &[Vector], loss_floor: f64) -> Result<PlEstimate>
where
    F: ScalarField + ?Sized,
{
    let mut best: Option<(f64, usize)> = None;
    let mut qualifying = 0;
    for (i, w) in probes.iter().enumerate() {
        if w.len() != obj.dim() {
            return Err(Error::invalid(format!("probe {i} has the wrong dimension")));
        }
        let value = obj.value(w);
        if !(value > loss_floor) {
            continue;
        }
        qualifying += 1;
        let ratio = obj.gradient(w).norm_squared() / value;
        if best.is_none_or(|(b, _)| ratio < b) {
            best = Some((ratio, i));
        }
    }
    match best {
        Some((alpha, worst_index)) => Ok(PlEstimate {
            alpha,
            worst_probe: probes[worst_index].clone(),
            worst_index,
            qualifying,
        }),
        None => Err(Error::InsufficientProbes {
            qualifying: 0,
            total: probes.len(),
            floor: loss_floor,
        }),
    }
}

/// Exact constants of `𝓛(w) = (1/2n)‖Xw − y‖²` with `y ∈ Range(X)`:
/// `λ = σ_max²/n`, `α = 2σ_min²/n`, `β = maxᵢ ‖xᵢ‖²`.
pub fn analytic_constants_least_squares(x: &LinearFactorization, y: &Vector) -> Result<ConstantsReport> {
    let n = x.rows();
    if y.len() != n {
        return Err(Error::invalid(format!("targets have length {} for {n} rows", y.len())));
    }
    let projected = &x.a * (&x.pinv * y);
    let residual = (projected - y).norm();
    let tolerance = RANGE_RTOL * y.norm().max(1.0);
    if residual > tolerance {
        return Err(Error::NotInterpolated { residual, tolerance });
    }
    let n = n as f64;
    let beta = x.a.row_iter().map(|r| r.norm_squared()).fold(0.0, f64::max);
    ConstantsReport::analytic(2.0 * x.sigma_min_nonzero.powi(2) / n, beta, x.sigma_max.powi(2) / n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessEstimate {
    pub lambda: f64,
    pub all_converged: bool,
}

/// Largest Hessian spectral-norm estimate over the probes.
pub fn estimate_smoothness<F>(f: &F, probes: &[Vector], iters: usize, seed: u64) -> Result<SmoothnessEstimate>
where
    F: ScalarField + ?Sized,
{
    if probes.is_empty() {
        return Err(Error::invalid("smoothness estimation needs at least one probe"));
    }
    let mut lambda: f64 = 0.0;
    let mut all_converged = true;
    for (i, w) in probes.iter().enumerate() {
        let est = numerics::hessian_spectral_norm_estimate(f, w, iters, seed.wrapping_add(i as u64))?;
        lambda = lambda.max(est.value);
        all_converged &= est.converged;
    }
    Ok(SmoothnessEstimate { lambda, all_converged })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlVerification {
    pub pass: bool,
    pub checked: usize,
    /// Smallest `(‖∇𝓛‖² − α𝓛) / scale` seen; negative beyond the slack means failure.
    pub worst_margin: f64,
    pub failing_probe: Option<usize>,
}

/// Checks `g(w) ≥ α·𝓛(w) − slack·max(1, α𝓛(w))` at every probe above the
/// floor; `evaluate` returns the pair `(𝓛(w), g(w))`.
pub(crate) fn verify_pl_inequality<F>(
    evaluate: F,
    probes: &[Vector],
    alpha: f64,
    loss_floor: f64,
    slack: f64,
) -> Result<PlVerification>
where
    F: Fn(&Vector) -> (f64, f64),
{
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!("PL constant must be positive, got {alpha}")));
    }
    let mut out = PlVerification {
        pass: true,
        checked: 0,
        worst_margin: f64::INFINITY,
        failing_probe: None,
    };
    for (i, w) in probes.iter().enumerate() {
        let (loss, grad_sq) = evaluate(w);
        if !(loss > loss_floor) {
            continue;
        }
        out.checked += 1;
        let scale = (alpha * loss).max(1.0);
        let margin = (grad_sq - alpha * loss) / scale;
        if margin < out.worst_margin {
            out.worst_margin = margin;
        }
        if margin < -slack && out.failing_probe.is_none() {
            out.pass = false;
            out.failing_probe = Some(i);
        }
    }
    Ok(out)
}

/// Tests `‖∇𝓛(w)‖² ≥ α·𝓛(w)` at every probe with `𝓛(w)` above the floor.
pub fn verify_pl<F>(obj: &F, alpha: f64, probes: &[Vector], loss_floor: f64) -> Result<PlVerification>
where
    F: ScalarField + ?Sized,
{
    if let Some(i) = probes.iter().position(|w| w.len() != obj.dim()) {
        return Err(Error::invalid(format!("probe {i} has the wrong dimension")));
    }
    verify_pl_inequality(
        |w| (obj.value(w), obj.gradient(w).norm_squared()),
        probes,
        alpha,
        loss_floor,
        PL_SLACK,
    )
}
