//! Step-size resolution and theoretical bound curves for a configured run.
//!
//! The `theorem1` and `quadratic_opt` step sizes are always resolved. On the composed
//! nonlinear kind they are the corollary rescalings `(a/b²)·η` of the base
//! least-squares step sizes, with factors `1 − (a²/b²)·α·η/2`. On the other
//! kinds they are evaluated with the instance constants and their factor is
//! the per-step contraction `q(η)`.

use plsgd_core::linmap;
use plsgd_core::problems::{ProblemInstance, ProblemKind};
use plsgd_core::sgd::{self, EtaRule};
use plsgd_core::transform;
use plsgd_core::Error;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Plan {
    pub rate: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// `λ̃σ_max²/2`.
    pub loss_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepPlan {
    pub rule: EtaRule,
    pub m: usize,
    /// Step size used by the run.
    pub eta: f64,
    pub eta_theorem1: f64,
    pub eta_quadratic: f64,
    pub factor_theorem1: f64,
    pub factor_quadratic: f64,
    /// Per-step factor of the bound that applies at `eta`; NaN if none does.
    /// Factors above one are kept and give a NaN curve.
    pub bound_factor: f64,
    pub theorem2: Option<Theorem2Plan>,
}

/// Factor usable for a bound curve: inside `[0, 1]` up to rounding.
fn curve_factor(f: f64) -> f64 {
    if (0.0..=1.0 + 1e-12).contains(&f) {
        f.min(1.0)
    } else {
        f64::NAN
    }
}

fn factor_or_nan(r: plsgd_core::Result<f64>) -> plsgd_core::Result<f64> {
    match r {
        Ok(f) => Ok(f),
        Err(Error::PreconditionViolation(_)) | Err(Error::NonContractive { .. }) => Ok(f64::NAN),
        Err(e) => Err(e),
    }
}

/// Resolves the step size for `rule` at batch size `m`; `explicit` is the
/// configured step for the explicit rule.
pub fn resolve(
    instance: &ProblemInstance,
    rule: EtaRule,
    m: usize,
    explicit: Option<f64>,
) -> Result<StepPlan, CliError> {
    let c = &instance.constants;
    let (alpha, beta, lambda) = (c.alpha.value, c.beta.value, c.lambda.value);
    let (eta_theorem1, eta_quadratic, factor_theorem1, factor_quadratic) =
        match (instance.kind, &instance.transform, &instance.base_constants) {
            (ProblemKind::ComposedNonlinear, Some(t), Some(base)) => {
                let (ab, bb, lb) = (base.alpha.value, base.beta.value, base.lambda.value);
                let (a, b) = (t.a(), t.b());
                let star = sgd::step_size_theorem1(ab, bb, lb, m)?;
                let quad = sgd::step_size_quadratic_opt(ab, bb, lb, m)?;
                (
                    transform::step_size_corollary(star, a, b)?,
                    transform::step_size_corollary(quad, a, b)?,
                    factor_or_nan(transform::corollary_bound_factor(ab, star, a, b))?,
                    factor_or_nan(transform::corollary_bound_factor(ab, quad, a, b))?,
                )
            }
            _ => {
                let star = sgd::step_size_theorem1(alpha, beta, lambda, m)?;
                let quad = sgd::step_size_quadratic_opt(alpha, beta, lambda, m)?;
                (
                    star,
                    quad,
                    factor_or_nan(sgd::contraction_factor(star, alpha, beta, lambda, m))?,
                    factor_or_nan(sgd::contraction_factor(quad, alpha, beta, lambda, m))?,
                )
            }
        };
    let mut theorem2 = None;
    let (eta, bound_factor) = match rule {
        EtaRule::Explicit => {
            let eta =
                explicit.ok_or_else(|| CliError::Config("sgd.eta: required when sgd.eta_rule = explicit".into()))?;
            (eta, sgd::contraction_factor(eta, alpha, beta, lambda, m)?)
        }
        EtaRule::Theorem1 | EtaRule::Corollary => (eta_theorem1, factor_theorem1),
        EtaRule::QuadraticOpt => (eta_quadratic, factor_quadratic),
        EtaRule::Theorem2 => {
            let p = instance.linmap.as_ref().ok_or_else(|| {
                CliError::Config("sgd.eta_rule: theorem2 needs problem.kind = composed_linear".into())
            })?;
            let eta = linmap::step_size_theorem2(p.tilde_beta, p.tilde_lambda, p.sigma_max(), m)?;
            let rate = linmap::theorem2_rate_factor(p.tilde_alpha, p.sigma_min(), eta)?;
            theorem2 = Some(Theorem2Plan {
                rate,
                sigma_min: p.sigma_min(),
                sigma_max: p.sigma_max(),
                loss_coefficient: p.loss_bound_coefficient(),
            });
            (eta, rate)
        }
    };
    if rule != EtaRule::Theorem2 && eta > 2.0 / lambda {
        return Err(
            Error::PreconditionViolation(format!("step size {eta} exceeds 2/lambda = {}", 2.0 / lambda)).into(),
        );
    }
    Ok(StepPlan {
        rule,
        m,
        eta,
        eta_theorem1,
        eta_quadratic,
        factor_theorem1,
        factor_quadratic,
        bound_factor,
        theorem2,
    })
}

fn geometric(start: f64, factor: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|t| factor.powi(t as i32) * start).collect()
}

impl StepPlan {
    /// Bound on the mean loss for the step actually run. Under `theorem2` this
    /// is `(λ̃σ_max²/2)·rate^t·d₀` with `d₀` the initial projected distance.
    pub fn bound_theorem(&self, l0: f64, d0: Option<f64>, steps: usize) -> Vec<f64> {
        match (&self.theorem2, d0) {
            (Some(t2), Some(d0)) => geometric(t2.loss_coefficient * d0, t2.rate, steps),
            _ => geometric(l0, curve_factor(self.bound_factor), steps),
        }
    }

    /// `factor_quadratic^t · 𝓛(w₀)`.
    pub fn bound_quadratic(&self, l0: f64, steps: usize) -> Vec<f64> {
        geometric(l0, curve_factor(self.factor_quadratic), steps)
    }
}
