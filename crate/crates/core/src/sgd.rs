//! Constant-step mini-batch SGD, its step-size rules and per-step contraction
//! factors, and the full-batch gradient descent baseline.
//!
//! Two step sizes governed by `q(η)` are exposed. [`step_size_theorem1`] is the
//! closed form `αm / (λ(β + λ(m−1)))`; [`step_size_quadratic_opt`] is the exact
//! minimizer `αm / (λ(α(m−1) + 2β))` of the per-step factor
//! `q(η) = 1 − ηα + η²(λ/m)(α(m−1)/2 + β)`. They do not coincide in general:
//! at `m = 1` the closed form makes `q` equal to one. The factor `q(η)` bounds
//! `E[𝓛(w_{t+1})] / 𝓛(w_t)` for every `η ≤ 2/λ`, so bound comparisons use it.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{ScalarField, Vector};
use crate::objective::{sample_batch, ErmObjective};
use crate::rng;

/// A run is declared divergent once its loss exceeds this multiple of `𝓛(w₀)`.
pub const DIVERGENCE_FACTOR: f64 = 1e12;
pub const DEFAULT_RUNS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaRule {
    Explicit,
    Theorem1,
    QuadraticOpt,
    Theorem2,
    Corollary,
}

impl EtaRule {
    pub fn as_str(self) -> &'static str {
        match self {
            EtaRule::Explicit => "explicit",
            EtaRule::Theorem1 => "theorem1",
            EtaRule::QuadraticOpt => "quadratic_opt",
            EtaRule::Theorem2 => "theorem2",
            EtaRule::Corollary => "corollary",
        }
    }

    /// Rules whose analysis requires `η ≤ 2/λ`.
    pub fn is_theorem1_family(self) -> bool {
        matches!(self, EtaRule::Theorem1 | EtaRule::QuadraticOpt | EtaRule::Corollary)
    }
}

impl fmt::Display for EtaRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EtaRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "explicit" => EtaRule::Explicit,
            "theorem1" => EtaRule::Theorem1,
            "quadratic_opt" => EtaRule::QuadraticOpt,
            "theorem2" => EtaRule::Theorem2,
            "corollary" => EtaRule::Corollary,
            other => return Err(Error::invalid(format!("unknown eta rule `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub batch_size: usize,
    pub eta: f64,
    pub steps: usize,
    pub runs: usize,
    pub seed: u64,
    pub eta_rule: EtaRule,
    /// Per-step factor of the theoretical curve stored in the trajectory;
    /// `None` stores a flat curve at `𝓛(w₀)`.
    pub bound_factor: Option<f64>,
}

impl SgdConfig {
    pub fn new(batch_size: usize, eta: f64, steps: usize, runs: usize, seed: u64) -> Self {
        Self {
            batch_size,
            eta,
            steps,
            runs,
            seed,
            eta_rule: EtaRule::Explicit,
            bound_factor: None,
        }
    }

    pub fn with_rule(mut self, rule: EtaRule) -> Self {
        self.eta_rule = rule;
        self
    }

    pub fn with_bound_factor(mut self, factor: f64) -> Self {
        self.bound_factor = Some(factor);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::invalid("at least one run is required"));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::invalid(format!(
                "step size must be finite and non-negative, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// Enforces `η ≤ 2/λ` for the rules bounded by `q(η)`.
    pub fn check_step_bound(&self, lambda: f64) -> Result<()> {
        if self.eta_rule.is_theorem1_family() && self.eta > 2.0 / lambda {
            return Err(Error::PreconditionViolation(format!(
                "step size {} exceeds 2/lambda = {}",
                self.eta,
                2.0 / lambda
            )));
        }
        Ok(())
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

fn require_batch(m: usize) -> Result<f64> {
    if m == 0 {
        Err(Error::invalid("batch size must be at least 1"))
    } else {
        Ok(m as f64)
    }
}

/// `η*(m) = αm / (λ(β + λ(m−1)))`.
pub fn step_size_theorem1(alpha: f64, beta: f64, lambda: f64, m: usize) -> Result<f64> {
    require_positive(&[("alpha", alpha), ("beta", beta), ("lambda", lambda)])?;
    let m = require_batch(m)?;
    Ok(alpha * m / (lambda * (beta + lambda * (m - 1.0))))
}

/// `αm / (λ(α(m−1) + 2β))`, the minimizer of [`contraction_factor`] in `η`.
pub fn step_size_quadratic_opt(alpha: f64, beta: f64, lambda: f64, m: usize) -> Result<f64> {
    require_positive(&[("alpha", alpha), ("beta", beta), ("lambda", lambda)])?;
    let m = require_batch(m)?;
    Ok(alpha * m / (lambda * (alpha * (m - 1.0) + 2.0 * beta)))
}

/// `1 − ηα + η²(λ/m)(α(m−1)/2 + β)`, valid for `0 ≤ η ≤ 2/λ`.
pub fn contraction_factor(eta: f64, alpha: f64, beta: f64, lambda: f64, m: usize) -> Result<f64> {
    require_positive(&[("alpha", alpha), ("beta", beta), ("lambda", lambda)])?;
    let m = require_batch(m)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!("step size must be non-negative, got {eta}")));
    }
    if eta > 2.0 / lambda {
        return Err(Error::PreconditionViolation(format!(
            "step size {eta} exceeds 2/lambda = {}",
            2.0 / lambda
        )));
    }
    Ok(1.0 - eta * alpha + eta * eta * (lambda / m) * (alpha * (m - 1.0) / 2.0 + beta))
}

/// `points` step sizes `(2/λ)·j/points`, `j = 1..=points`, spanning `(0, 2/λ]`.
pub fn step_grid(lambda: f64, points: usize) -> Result<Vec<f64>> {
    require_positive(&[("lambda", lambda)])?;
    let top = 2.0 / lambda;
    Ok((1..=points).map(|j| top * (j as f64 / points as f64)).collect())
}

/// `curve[t] = factor^t · l0` for `t = 0..=steps`.
pub fn theoretical_bound_curve(l0: f64, factor: f64, steps: usize) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&factor) {
        return Err(Error::NonContractive {
            factor,
            range: "[0, 1]",
        });
    }
    if !(l0 >= 0.0 && l0.is_finite()) {
        return Err(Error::invalid(format!(
            "initial loss must be finite and non-negative, got {l0}"
        )));
    }
    Ok((0..=steps).map(|t| factor.powi(t as i32) * l0).collect())
}

/// Relative slack absorbing rounding in the run average.
pub const BOUND_ROUNDING_RTOL: f64 = 1e-12;

/// `mean ≤ bound · (1 + 3·se/mean + BOUND_ROUNDING_RTOL)`: the empirical mean
/// sits below the bound up to three relative standard errors.
pub fn bound_holds_statistically(mean: f64, std_err: f64, bound: f64) -> bool {
    if mean <= 0.0 {
        return true;
    }
    mean <= bound * (1.0 + 3.0 * std_err / mean + BOUND_ROUNDING_RTOL)
}

/// Per-step means and standard errors (sample deviation over `√R`) of equal
/// length rows, summed in row order.
pub fn mean_and_std_err(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let Some(first) = rows.first() else {
        return (Vec::new(), Vec::new());
    };
    let r = rows.len() as f64;
    let len = first.len();
    let mut mean = vec![0.0; len];
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= r);
    let std_err = if rows.len() < 2 {
        vec![0.0; len]
    } else {
        let mut var = vec![0.0; len];
        for row in rows {
            for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter().map(|v| (v / (r - 1.0)).sqrt() / r.sqrt()).collect()
    };
    (mean, std_err)
}

/// Default `w₀`: a standard Gaussian draw scaled to unit norm, taken from a
/// stream no SGD run uses.
pub fn default_initial_point(dim: usize, seed: u64) -> Vector {
    rng::unit_vector(&mut rng::stream(seed, u64::MAX), dim)
}

/// One SGD run: per-step losses, per-step observations and the final iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub run: usize,
    pub losses: Vec<f64>,
    pub observed: Vec<f64>,
    pub final_params: Vector,
}

/// Scalar recorded at every iterate `w_t` alongside the loss.
pub type Observer<'a> = &'a (dyn Fn(&Vector) -> f64 + Sync);

fn run_one(
    obj: &ErmObjective,
    w0: &Vector,
    cfg: &SgdConfig,
    run: usize,
    observer: Option<Observer<'_>>,
) -> Result<RunRecord> {
    let mut rng = rng::stream(cfg.seed, run as u64);
    let mut w = w0.clone();
    let l0 = obj.value(&w);
    let limit = DIVERGENCE_FACTOR * l0;
    let mut losses = Vec::with_capacity(cfg.steps + 1);
    let mut observed = Vec::new();
    losses.push(l0);
    if let Some(obs) = observer {
        observed.push(obs(&w));
    }
    for step in 1..=cfg.steps {
        let batch = sample_batch(obj.n(), cfg.batch_size, &mut rng)?;
        let g = obj.batch_gradient(&w, &batch);
        w.axpy(-cfg.eta, &g, 1.0);
        let loss = obj.value(&w);
        if !loss.is_finite() || loss > limit || w.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { run, step, loss });
        }
        losses.push(loss);
        if let Some(obs) = observer {
            observed.push(obs(&w));
        }
    }
    Ok(RunRecord {
        run,
        losses,
        observed,
        final_params: w,
    })
}

/// Runs every repetition independently. The outer error covers invalid
/// configurations; each inner result is one run, divergence included.
pub fn run_sgd_runs(
    obj: &ErmObjective,
    w0: &Vector,
    cfg: &SgdConfig,
    observer: Option<Observer<'_>>,
) -> Result<Vec<Result<RunRecord>>> {
    cfg.validate()?;
    obj.check_dim(w0)?;
    if let Some(f) = cfg.bound_factor {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::NonContractive {
                factor: f,
                range: "[0, 1]",
            });
        }
    }
    Ok((0..cfg.runs)
        .into_par_iter()
        .map(|r| run_one(obj, w0, cfg, r, observer))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `R × (T+1)`; `losses[r][0] = 𝓛(w₀)`.
    pub losses: Vec<Vec<f64>>,
    pub mean_loss: Vec<f64>,
    pub std_err: Vec<f64>,
    pub bound: Vec<f64>,
    pub final_params: Vec<Vector>,
}

impl Trajectory {
    pub fn from_records(records: &[RunRecord], bound_factor: Option<f64>) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::invalid("trajectory needs at least one completed run"))?;
        let losses: Vec<Vec<f64>> = records.iter().map(|r| r.losses.clone()).collect();
        let (mean_loss, std_err) = mean_and_std_err(&losses);
        let steps = first.losses.len() - 1;
        let bound = theoretical_bound_curve(first.losses[0], bound_factor.unwrap_or(1.0), steps)?;
        Ok(Self {
            final_params: records.iter().map(|r| r.final_params.clone()).collect(),
            losses,
            mean_loss,
            std_err,
            bound,
        })
    }

    pub fn steps(&self) -> usize {
        self.mean_loss.len().saturating_sub(1)
    }

    /// First step at which the mean loss exceeds `curve` beyond three
    /// relative standard errors.
    pub fn first_bound_violation(&self, curve: &[f64]) -> Option<usize> {
        self.mean_loss
            .iter()
            .zip(&self.std_err)
            .zip(curve)
            .position(|((&m, &se), &b)| !bound_holds_statistically(m, se, b))
    }
}

fn collect_runs(results: Vec<Result<RunRecord>>) -> Result<Vec<RunRecord>> {
    results.into_iter().collect()
}

/// `w_{t+1} = w_t − η · (1/m) Σⱼ ∇ℓ_{iⱼ}(w_t)` with indices drawn with
/// replacement from `stream(seed, r)` for run `r`. Any divergent run fails
/// the whole call; use [`run_sgd_runs`] to keep the surviving runs.
pub fn run_sgd(obj: &ErmObjective, w0: &Vector, cfg: &SgdConfig) -> Result<Trajectory> {
    let records = collect_runs(run_sgd_runs(obj, w0, cfg, None)?)?;
    Trajectory::from_records(&records, cfg.bound_factor)
}

/// As [`run_sgd`], also returning `observer(w_t)` for every run and step.
pub fn run_sgd_observed(
    obj: &ErmObjective,
    w0: &Vector,
    cfg: &SgdConfig,
    observer: Observer<'_>,
) -> Result<(Trajectory, Vec<Vec<f64>>)> {
    let records = collect_runs(run_sgd_runs(obj, w0, cfg, Some(observer))?)?;
    let observed = records.iter().map(|r| r.observed.clone()).collect();
    Ok((Trajectory::from_records(&records, cfg.bound_factor)?, observed))
}

/// Full-gradient descent `w_{t+1} = w_t − η∇𝓛(w_t)`; returns `𝓛(w_t)` for
/// `t = 0..=steps`.
pub fn run_gd(obj: &ErmObjective, w0: &Vector, eta: f64, steps: usize) -> Result<Vec<f64>> {
    obj.check_dim(w0)?;
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::invalid(format!(
            "step size must be finite and non-negative, got {eta}"
        )));
    }
    let mut w = w0.clone();
    let l0 = obj.value(&w);
    let limit = DIVERGENCE_FACTOR * l0;
    let mut curve = Vec::with_capacity(steps + 1);
    curve.push(l0);
    for step in 1..=steps {
        let g = obj.gradient(&w);
        w.axpy(-eta, &g, 1.0);
        let loss = obj.value(&w);
        if !loss.is_finite() || loss > limit {
            return Err(Error::Divergence { run: 0, step, loss });
        }
        curve.push(loss);
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{svd, Matrix};
    use crate::objective::{DiagonalQuadratic, QuadraticResidual, SampleLoss};
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn step_grid_ends_at_the_limit() {
        for lambda in [0.3, 1.0, 2.062, 7.77] {
            let g = step_grid(lambda, 50).unwrap();
            assert_eq!(g.len(), 50);
            assert_eq!(*g.last().unwrap(), 2.0 / lambda);
            assert!(g.windows(2).all(|w| w[0] < w[1]) && g[0] > 0.0);
            for eta in g {
                contraction_factor(eta, 0.1, 1.0, lambda, 2).unwrap();
            }
        }
    }

    #[test]
    fn theorem1_step_sizes() {
        assert_eq!(step_size_theorem1(1.0, 1.0, 1.0, 1).unwrap(), 1.0);
        assert_eq!(step_size_theorem1(1.0, 1.0, 1.0, 3).unwrap(), 1.0);
        assert_eq!(step_size_theorem1(0.5, 2.0, 1.0, 1).unwrap(), 0.25);
        assert!(step_size_theorem1(0.0, 1.0, 1.0, 1).is_err());
        assert!(step_size_theorem1(1.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn quadratic_opt_step_sizes() {
        // minimizer of 1 − η + η² is 1/2
        assert_eq!(step_size_quadratic_opt(1.0, 1.0, 1.0, 1).unwrap(), 0.5);
        assert_eq!(step_size_quadratic_opt(1.0, 1.0, 1.0, 3).unwrap(), 0.75);
        let (a, b, l) = (0.3, 2.5, 1.7);
        let eta = step_size_quadratic_opt(a, b, l, 1).unwrap();
        assert!((eta - a / (2.0 * l * b)).abs() < 1e-16);
        assert!(step_size_quadratic_opt(1.0, -1.0, 1.0, 1).is_err());
    }

    #[test]
    fn contraction_factor_examples() {
        assert_eq!(contraction_factor(0.0, 1.0, 1.0, 1.0, 1).unwrap(), 1.0);
        assert_eq!(contraction_factor(0.5, 1.0, 1.0, 1.0, 1).unwrap(), 0.75);
        assert!(matches!(
            contraction_factor(2.5, 1.0, 1.0, 1.0, 1),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn printed_step_gives_unit_factor_at_batch_one() {
        let (a, b, l) = (0.4, 3.0, 1.5);
        let eta = step_size_theorem1(a, b, l, 1).unwrap();
        let q = contraction_factor(eta, a, b, l, 1).unwrap();
        assert!((q - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bound_curves() {
        assert_eq!(theoretical_bound_curve(3.0, 1.0, 4).unwrap(), vec![3.0; 5]);
        assert_eq!(theoretical_bound_curve(8.0, 0.5, 3).unwrap()[3], 1.0);
        assert!(matches!(
            theoretical_bound_curve(1.0, 1.1, 3),
            Err(Error::NonContractive { .. })
        ));
        let (a, b, l, m) = (0.7, 2.0, 1.0, 4);
        let eta = step_size_quadratic_opt(a, b, l, m).unwrap();
        let q = contraction_factor(eta, a, b, l, m).unwrap();
        let curve = theoretical_bound_curve(2.0, q, 30).unwrap();
        for (t, c) in curve.iter().enumerate() {
            let direct = (1.0 - a * eta / 2.0).powi(t as i32) * 2.0;
            assert!((c - direct).abs() <= 1e-13 * direct.max(1e-300));
        }
    }

    proptest! {
        #[test]
        fn optimal_factor_is_one_minus_half_alpha_eta(
            alpha in 0.01f64..2.0,
            lambda_mult in 0.5f64..10.0,
            beta_mult in 1.0f64..10.0,
            m in 1usize..64,
        ) {
            // enforce α ≤ 2λ and λ ≤ β
            let lambda = alpha * lambda_mult;
            let beta = lambda * beta_mult;
            let eta = step_size_quadratic_opt(alpha, beta, lambda, m).unwrap();
            prop_assert!(eta <= 2.0 / lambda);
            let q = contraction_factor(eta, alpha, beta, lambda, m).unwrap();
            prop_assert!((q - (1.0 - alpha * eta / 2.0)).abs() <= 1e-15);
        }

        #[test]
        fn step_sizes_grow_with_batch(
            alpha in 0.01f64..2.0,
            lambda_mult in 0.5f64..10.0,
            beta_mult in 1.0f64..10.0,
            m in 1usize..256,
        ) {
            let lambda = alpha * lambda_mult;
            let beta = lambda * beta_mult;
            let t1 = step_size_theorem1(alpha, beta, lambda, m).unwrap();
            let t2 = step_size_theorem1(alpha, beta, lambda, m + 1).unwrap();
            prop_assert!(t2 >= t1 * (1.0 - 1e-15));
            let q1 = step_size_quadratic_opt(alpha, beta, lambda, m).unwrap();
            let q2 = step_size_quadratic_opt(alpha, beta, lambda, m + 1).unwrap();
            prop_assert!(q2 >= q1 * (1.0 - 1e-15));
            prop_assert!(1.0 - alpha * q2 / 2.0 <= (1.0 - alpha * q1 / 2.0) + 1e-15);
        }
    }

    fn scalar_quadratic(beta: f64, c: f64) -> ErmObjective {
        let l = DiagonalQuadratic::isotropic(Vector::from_vec(vec![c]), beta).unwrap();
        ErmObjective::new(vec![Arc::new(l)]).unwrap()
    }

    fn least_squares(n: usize, d: usize, seed: u64) -> (ErmObjective, Matrix, Vector) {
        let mut s = rng::stream(seed, 0);
        let x = rng::gaussian_matrix(&mut s, n, d);
        let w_star = rng::unit_vector(&mut s, d);
        let y = &x * &w_star;
        let losses: Vec<Arc<dyn SampleLoss>> = (0..n)
            .map(|i| Arc::new(QuadraticResidual::new(x.row(i).transpose(), y[i])) as Arc<dyn SampleLoss>)
            .collect();
        (ErmObjective::new(losses).unwrap(), x, w_star)
    }

    #[test]
    fn zero_step_keeps_loss() {
        let (obj, _, _) = least_squares(4, 6, 1);
        let w0 = rng::unit_vector(&mut rng::stream(2, 0), 6);
        let traj = run_sgd(&obj, &w0, &SgdConfig::new(2, 0.0, 10, 3, 0)).unwrap();
        for row in &traj.losses {
            assert!(row.iter().all(|&l| l == row[0]));
        }
        let gd = run_gd(&obj, &w0, 0.0, 5).unwrap();
        assert!(gd.iter().all(|&l| l == gd[0]));
    }

    #[test]
    fn minimizer_is_a_fixed_point() {
        let (obj, _, w_star) = least_squares(5, 9, 3);
        let traj = run_sgd(&obj, &w_star, &SgdConfig::new(2, 0.05, 20, 4, 9)).unwrap();
        for w in &traj.final_params {
            assert!((w - &w_star).norm() <= 1e-10);
        }
    }

    #[test]
    fn scalar_quadratic_converges_in_one_step() {
        let obj = scalar_quadratic(4.0, 1.5);
        let w0 = Vector::from_vec(vec![-3.0]);
        let traj = run_sgd(&obj, &w0, &SgdConfig::new(1, 0.25, 3, 2, 0)).unwrap();
        assert!((traj.final_params[0][0] - 1.5).abs() < 1e-15);
        assert_eq!(traj.losses[0][1], 0.0);

        let gd = run_gd(&obj, &w0, 0.25, 1).unwrap();
        assert_eq!(gd[1], 0.0);
    }

    #[test]
    fn gd_contracts_at_polyak_rate() {
        let (obj, x, w_star) = least_squares(8, 20, 4);
        let f = svd(&x).unwrap();
        let c = crate::constants::analytic_constants_least_squares(&f, &(&x * &w_star)).unwrap();
        let (alpha, lambda) = (c.alpha.value, c.lambda.value);
        let curve = run_gd(&obj, &rng::unit_vector(&mut rng::stream(5, 0), 20), 1.0 / lambda, 100).unwrap();
        for pair in curve.windows(2) {
            assert!(pair[1] <= (1.0 - alpha / (2.0 * lambda)) * pair[0] * (1.0 + 1e-12) + 1e-300);
        }
    }

    #[test]
    fn runs_are_deterministic_and_independent() {
        let (obj, _, _) = least_squares(6, 10, 5);
        let w0 = rng::unit_vector(&mut rng::stream(6, 0), 10);
        let cfg = SgdConfig::new(2, 0.01, 50, 8, 77);
        let a = run_sgd(&obj, &w0, &cfg).unwrap();
        let b = run_sgd(&obj, &w0, &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.losses[0], a.losses[1]);
        for row in &a.losses {
            assert_eq!(row[0], obj.value(&w0));
        }
        assert_eq!(a.bound[0], obj.value(&w0));
    }

    #[test]
    fn divergence_names_run_and_step() {
        let obj = scalar_quadratic(1.0, 0.0);
        let w0 = Vector::from_vec(vec![1.0]);
        // factor |1 − 10| = 9 per step; loss grows 81× per step
        let err = run_sgd(&obj, &w0, &SgdConfig::new(1, 10.0, 50, 2, 0)).unwrap_err();
        assert!(matches!(err, Error::Divergence { run: 0, step: 7, .. }), "{err:?}");
        assert!(run_gd(&obj, &w0, 10.0, 50).is_err());
    }

    #[test]
    fn invalid_configs() {
        let obj = scalar_quadratic(1.0, 0.0);
        let w0 = Vector::from_vec(vec![1.0]);
        assert!(run_sgd(&obj, &w0, &SgdConfig::new(0, 0.1, 5, 1, 0)).is_err());
        assert!(run_sgd(&obj, &w0, &SgdConfig::new(1, 0.1, 5, 0, 0)).is_err());
        assert!(run_sgd(&obj, &Vector::zeros(2), &SgdConfig::new(1, 0.1, 5, 1, 0)).is_err());
        let cfg = SgdConfig::new(1, 3.0, 5, 1, 0).with_rule(EtaRule::QuadraticOpt);
        assert!(matches!(
            cfg.check_step_bound(1.0),
            Err(Error::PreconditionViolation(_))
        ));
        assert_eq!("quadratic_opt".parse::<EtaRule>().unwrap(), EtaRule::QuadraticOpt);
        assert!("bogus".parse::<EtaRule>().is_err());
    }

    #[test]
    fn statistics_helpers() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 2.0]];
        let (mean, se) = mean_and_std_err(&rows);
        assert_eq!(mean, vec![2.0, 2.0]);
        assert!((se[0] - 1.0).abs() < 1e-15);
        assert_eq!(se[1], 0.0);
        assert!(bound_holds_statistically(1.0, 0.0, 1.0));
        assert!(!bound_holds_statistically(1.1, 0.0, 1.0));
        assert!(bound_holds_statistically(1.0 + 1e-15, 0.0, 1.0));
        assert!(bound_holds_statistically(1.1, 0.1, 1.0));
        assert!(bound_holds_statistically(0.0, 0.0, 0.0));
    }
}
