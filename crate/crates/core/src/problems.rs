//! Synthetic interpolated instances with exact constants.
//!
//! Every generator runs the full invariant suite on its output and returns an
//! error instead of an instance that fails it.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::constants::{self, ConstantsReport, PlVerification};
use crate::error::{Error, Result};
use crate::linmap::{self, ComposedLinearProblem, StrongConvexityReport};
use crate::numerics::{self, LinearFactorization, Matrix, ScalarField, Vector};
use crate::objective::{self, ErmObjective, GradientBoundReport, InterpolationReport, QuadraticResidual, SampleLoss};
use crate::rng;
use crate::transform::{self, SandwichReport, TransformSpec};

/// Probes used when an instance validates itself.
pub const STANDARD_PROBE_COUNT: usize = 1000;
/// Probes that also get a finite-difference gradient check.
pub const FD_PROBE_COUNT: usize = 100;
pub const FD_RTOL: f64 = 1e-6;
const INTERPOLATION_RTOL: f64 = 1e-12;
const PROBE_SEED_OFFSET: u64 = 0x9e37_79b9;
const SMOOTHNESS_PROBES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    LeastSquares,
    ComposedLinear,
    ComposedNonlinear,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::LeastSquares => "least_squares",
            ProblemKind::ComposedLinear => "composed_linear",
            ProblemKind::ComposedNonlinear => "composed_nonlinear",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "least_squares" => Ok(ProblemKind::LeastSquares),
            "composed_linear" => Ok(ProblemKind::ComposedLinear),
            "composed_nonlinear" => Ok(ProblemKind::ComposedNonlinear),
            other => Err(Error::invalid(format!(
                "unknown problem kind '{other}' (expected least_squares, composed_linear or composed_nonlinear)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub kind: ProblemKind,
    pub objective: ErmObjective,
    /// Analytic `α`, `β`, `λ` of `objective`. For the nonlinear kind `λ = bλ_base`
    /// is the transferred value; see `measured_lambda`.
    pub constants: ConstantsReport,
    pub w_star: Vector,
    pub transform: Option<Arc<TransformSpec>>,
    pub linmap: Option<ComposedLinearProblem>,
    /// Factorization of the data matrix `X` (least squares) or of the base
    /// problem's data (nonlinear kind).
    pub data: Option<LinearFactorization>,
    /// Base least-squares constants the nonlinear kind was derived from.
    pub base_constants: Option<ConstantsReport>,
    /// Largest Hessian norm seen by power iteration near `w*` (nonlinear kind).
    pub measured_lambda: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub interpolation: InterpolationReport,
    pub interpolation_tolerance: f64,
    pub pl: PlVerification,
    pub gradient_bound: GradientBoundReport,
    pub fd_max_relative_error: f64,
    pub fd_worst_probe: Option<usize>,
    pub strong_convexity: Option<StrongConvexityReport>,
    pub pl_transfer: Option<PlVerification>,
    pub sandwich: Option<SandwichReport>,
}

impl ValidationReport {
    pub fn fd_pass(&self) -> bool {
        self.fd_max_relative_error <= FD_RTOL
    }

    pub fn pass(&self) -> bool {
        self.failures().is_empty()
    }

    /// One line per failed check, naming the offending probe where known.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.interpolation.pass {
            out.push(format!(
                "interpolation: max sample loss {:e} exceeds {:e}",
                self.interpolation.max_residual, self.interpolation_tolerance
            ));
        }
        if !self.pl.pass {
            out.push(format!(
                "pl: inequality fails at probe {} (margin {:e})",
                fmt_index(self.pl.failing_probe),
                self.pl.worst_margin
            ));
        }
        if !self.gradient_bound.pass {
            out.push(format!(
                "gradient_bound: ratio {} at sample {} probe {}",
                self.gradient_bound.worst_ratio,
                fmt_index(self.gradient_bound.worst_sample),
                fmt_index(self.gradient_bound.worst_probe)
            ));
        }
        if !self.fd_pass() {
            out.push(format!(
                "finite_difference: relative error {:e} at probe {}",
                self.fd_max_relative_error,
                fmt_index(self.fd_worst_probe)
            ));
        }
        if let Some(r) = self.strong_convexity.as_ref().filter(|r| !r.pass) {
            out.push(format!(
                "strong_convexity: fails at pair {} (margin {:e})",
                fmt_index(r.failing_pair),
                r.worst_margin
            ));
        }
        if let Some(r) = self.pl_transfer.as_ref().filter(|r| !r.pass) {
            out.push(format!(
                "pl_transfer: fails at probe {} (margin {:e})",
                fmt_index(r.failing_probe),
                r.worst_margin
            ));
        }
        if let Some(r) = self.sandwich.as_ref().filter(|r| !r.pass) {
            out.push(format!(
                "jacobian_sandwich: eigenvalues in [{}, {}]",
                r.min_eigenvalue, r.max_eigenvalue
            ));
        }
        out
    }
}

fn fmt_index(i: Option<usize>) -> String {
    i.map_or_else(|| "?".into(), |i| i.to_string())
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    /// `max(1, 𝓛(0))`, the scale for absolute tolerances.
    pub fn scale(&self) -> f64 {
        self.objective.value(&Vector::zeros(self.dim())).max(1.0)
    }

    /// The standard probe protocol centred at `w*`. When data are present the
    /// last probes step from `w*` along the least non-zero right singular
    /// direction of `X`, where the least-squares PL ratio equals `α`.
    pub fn standard_probes(&self, count: usize, seed: u64) -> Vec<Vector> {
        let aligned = self.aligned_probes();
        let take = aligned.len().min(count / 2);
        let mut probes = constants::standard_probes(&self.w_star, count - take, seed);
        probes.extend(aligned.into_iter().take(take));
        probes
    }

    fn aligned_probes(&self) -> Vec<Vector> {
        let Some(f) = &self.data else {
            return Vec::new();
        };
        let direction = f.v.column(f.rank - 1).into_owned();
        let (centre, map): (Vector, Option<&TransformSpec>) = match &self.transform {
            Some(t) => (t.apply(&self.w_star), Some(t.as_ref())),
            None => (self.w_star.clone(), None),
        };
        let radius = centre.norm().max(1.0);
        [0.1, 1.0, 10.0]
            .iter()
            .filter_map(|s| {
                let w = &centre + &direction * (s * radius);
                match map {
                    Some(t) => t.preimage(&w),
                    None => Some(w),
                }
            })
            .collect()
    }

    /// Loss floor for PL checks.
    pub fn loss_floor(&self) -> f64 {
        constants::default_loss_floor(self.scale())
    }

    /// Runs the invariant suite with the instance's own `α`.
    pub fn validate(&self, probes: &[Vector]) -> Result<ValidationReport> {
        self.validate_with_alpha(self.constants.alpha.value, probes)
    }

    /// Runs the invariant suite with `alpha` in place of the analytic PL
    /// constant (the transfer check uses `alpha / a` as the base constant).
    pub fn validate_with_alpha(&self, alpha: f64, probes: &[Vector]) -> Result<ValidationReport> {
        if probes.is_empty() {
            return Err(Error::invalid("validation needs at least one probe"));
        }
        let obj = &self.objective;
        let interpolation_tolerance = INTERPOLATION_RTOL * self.scale();
        let interpolation = objective::check_interpolation(obj, &self.w_star, interpolation_tolerance)?;
        let floor = self.loss_floor();
        let pl = constants::verify_pl(obj, alpha, probes, floor)?;
        let gradient_bound = objective::check_sample_gradient_bound(obj, probes);
        let (fd_max_relative_error, fd_worst_probe) = max_fd_error(obj, &probes[..probes.len().min(FD_PROBE_COUNT)])?;

        let strong_convexity = match &self.linmap {
            Some(p) => {
                let pairs: Vec<(Vector, Vector)> = probes
                    .iter()
                    .zip(probes.iter().skip(1).chain(probes.first()))
                    .map(|(a, b)| (a.clone(), b.clone()))
                    .collect();
                Some(linmap::check_strong_convexity_range(p, &pairs)?)
            }
            None => None,
        };
        let (pl_transfer, sandwich) = match (&self.transform, &self.base()) {
            (Some(t), Some(base)) => {
                let base_alpha = alpha / t.a();
                (
                    Some(transform::verify_pl_transfer(
                        &base.objective,
                        t,
                        base_alpha,
                        probes,
                        floor,
                    )?),
                    Some(transform::spectral_sandwich(t, probes)?),
                )
            }
            _ => (None, None),
        };
        Ok(ValidationReport {
            interpolation,
            interpolation_tolerance,
            pl,
            gradient_bound,
            fd_max_relative_error,
            fd_worst_probe,
            strong_convexity,
            pl_transfer,
            sandwich,
        })
    }

    /// The least-squares problem a nonlinear instance was composed from.
    fn base(&self) -> Option<ProblemInstance> {
        let (data, base_constants) = (self.data.as_ref()?, self.base_constants.clone()?);
        let t = self.transform.as_ref()?;
        let w_star = t.apply(&self.w_star);
        Some(ProblemInstance {
            kind: ProblemKind::LeastSquares,
            objective: least_squares_objective(&data.a, &(&data.a * &w_star)).ok()?,
            constants: base_constants,
            w_star,
            transform: None,
            linmap: None,
            data: Some(data.clone()),
            base_constants: None,
            measured_lambda: None,
        })
    }

    fn self_validate(self, probe_seed: u64) -> Result<Self> {
        let probes = self.standard_probes(STANDARD_PROBE_COUNT, probe_seed.wrapping_add(PROBE_SEED_OFFSET));
        let failures = self.validate(&probes)?.failures();
        if failures.is_empty() {
            Ok(self)
        } else {
            Err(Error::NumericalFailure(format!(
                "generated {} instance failed validation: {}",
                self.kind,
                failures.join("; ")
            )))
        }
    }
}

/// Largest central-difference relative gradient error over the probes.
pub fn max_fd_error<F>(f: &F, probes: &[Vector]) -> Result<(f64, Option<usize>)>
where
    F: ScalarField + ?Sized,
{
    let mut worst = (0.0, None);
    for (i, w) in probes.iter().enumerate() {
        let fd = numerics::finite_difference_gradient(|v| f.value(v), w, numerics::default_fd_step(w))?;
        let err = numerics::relative_error(&f.gradient(w), &fd);
        if err > worst.0 || worst.1.is_none() {
            worst = (err, Some(i));
        }
    }
    Ok(worst)
}

fn least_squares_objective(x: &Matrix, y: &Vector) -> Result<ErmObjective> {
    let losses = (0..x.nrows())
        .map(|i| Arc::new(QuadraticResidual::new(x.row(i).transpose(), y[i])) as Arc<dyn SampleLoss>)
        .collect();
    ErmObjective::new(losses)
}

/// `ℓᵢ(w) = ½(xᵢᵀw − yᵢ)²` with `y = Xw*`.
pub fn least_squares_from_data(x: Matrix, w_star: Vector) -> Result<ProblemInstance> {
    if x.ncols() != w_star.len() {
        return Err(Error::invalid(format!(
            "w* has dimension {} but X has {} columns",
            w_star.len(),
            x.ncols()
        )));
    }
    let f = numerics::svd(&x)?;
    let y = &x * &w_star;
    let constants = constants::analytic_constants_least_squares(&f, &y)?;
    Ok(ProblemInstance {
        kind: ProblemKind::LeastSquares,
        objective: least_squares_objective(&x, &y)?,
        constants,
        w_star,
        transform: None,
        linmap: None,
        data: Some(f),
        base_constants: None,
        measured_lambda: None,
    })
}

/// Gaussian `X ∈ ℝ^{n×d}`, optionally with its singular values replaced by
/// `spectrum`, and a unit-norm Gaussian `w*`.
pub fn gen_interpolated_least_squares(
    n: usize,
    d: usize,
    seed: u64,
    spectrum: Option<&[f64]>,
) -> Result<ProblemInstance> {
    if n == 0 || d < n {
        return Err(Error::invalid(format!(
            "least squares needs 1 ≤ n ≤ d, got n = {n}, d = {d}"
        )));
    }
    let mut s = rng::stream(seed, 0);
    let mut x = rng::gaussian_matrix(&mut s, n, d);
    if let Some(sigma) = spectrum {
        if sigma.len() != n {
            return Err(Error::invalid(format!(
                "spectrum has {} values but n = {n}",
                sigma.len()
            )));
        }
        if sigma.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("singular values must be finite and positive"));
        }
        let f = numerics::svd(&x)?;
        let u = f.u.columns(0, n);
        let v = f.v.columns(0, n);
        x = u * Matrix::from_diagonal(&Vector::from_column_slice(sigma)) * v.transpose();
    }
    let w_star = rng::unit_vector(&mut s, d);
    least_squares_from_data(x, w_star)?.self_validate(seed)
}

/// `A = U diag(σ) Vᵀ` with orthonormal `U ∈ ℝ^{k×r}`, `V ∈ ℝ^{d×r}` and `σ`
/// evenly spaced from 2 down to 1.
pub fn gen_composed_linear(n: usize, d: usize, k: usize, rank: usize, seed: u64) -> Result<ProblemInstance> {
    if rank == 0 || rank > k || k > d {
        return Err(Error::invalid(format!(
            "composed linear needs 1 ≤ rank ≤ k ≤ d, got rank = {rank}, k = {k}, d = {d}"
        )));
    }
    let mut s = rng::stream(seed, 1);
    let u = rng::orthonormal_columns(&mut s, k, rank);
    let v = rng::orthonormal_columns(&mut s, d, rank);
    let sigma = Vector::from_fn(rank, |i, _| {
        if rank == 1 {
            1.0
        } else {
            2.0 - i as f64 / (rank - 1) as f64
        }
    });
    let a = u * Matrix::from_diagonal(&sigma) * v.transpose();
    composed_linear_from_map(a, n, seed)
}

/// Composed-linear instance for a given `A ∈ ℝ^{k×d}` with `n ≥ k` Gaussian
/// directions and a unit-norm Gaussian `w*`.
pub fn composed_linear_from_map(a: Matrix, n: usize, seed: u64) -> Result<ProblemInstance> {
    let (k, d) = a.shape();
    if n < k {
        return Err(Error::invalid(format!(
            "need n ≥ k directions to span ℝ^k, got n = {n}, k = {k}"
        )));
    }
    let mut s = rng::stream(seed, 2);
    let directions: Vec<Vector> = (0..n).map(|_| rng::gaussian_vector(&mut s, k)).collect();
    let w_star = rng::unit_vector(&mut s, d);
    let p = ComposedLinearProblem::new(a, &directions, w_star)?;
    let sigma_max_sq = p.sigma_max().powi(2);
    let constants = ConstantsReport::analytic(
        linmap::pl_constant_from_composition(p.tilde_alpha, p.sigma_min())?,
        sigma_max_sq * p.tilde_beta,
        sigma_max_sq * p.tilde_lambda,
    )?;
    ProblemInstance {
        kind: ProblemKind::ComposedLinear,
        objective: p.objective.clone(),
        constants,
        w_star: p.w_star.clone(),
        transform: None,
        linmap: Some(p),
        data: None,
        base_constants: None,
        measured_lambda: None,
    }
    .self_validate(seed)
}

/// `vᵢ ↦ ℓᵢ(Φ(v))` with `Φ(v) = v + c·sin(v)`, following the transfer
/// `α' = aα`, `β' = bβ`, `λ' = bλ`.
pub fn gen_composed_nonlinear(base: &ProblemInstance, c: f64) -> Result<ProblemInstance> {
    if base.kind != ProblemKind::LeastSquares {
        return Err(Error::invalid("the nonlinear composition needs a least-squares base"));
    }
    let t = Arc::new(TransformSpec::sine_warp(base.dim(), c)?);
    let w_star = t
        .preimage(&base.w_star)
        .ok_or_else(|| Error::NumericalFailure("sine warp could not be inverted".into()))?;
    let (a, b) = (t.a(), t.b());
    let bc = &base.constants;
    let (alpha, lambda) = transform::composed_constants(bc.alpha.value, bc.lambda.value, a, b)?;
    let constants = ConstantsReport::analytic(alpha, b * bc.beta.value, lambda)?;
    let objective = transform::compose_objective(&base.objective, &t)?;
    let probes = constants::standard_probes(&w_star, SMOOTHNESS_PROBES, 7);
    let measured = constants::estimate_smoothness(&objective, &probes, 200, 11)?.lambda;
    ProblemInstance {
        kind: ProblemKind::ComposedNonlinear,
        objective,
        constants,
        w_star,
        transform: Some(t),
        linmap: None,
        data: base.data.clone(),
        base_constants: Some(base.constants.clone()),
        measured_lambda: Some(measured),
    }
    .self_validate(0)
}

/// Searches random pairs around `center` for `f((u+v)/2) > (f(u) + f(v))/2`,
/// returning the pair and the excess of the first violation found.
pub fn find_midpoint_convexity_violation<F>(
    f: &F,
    center: &Vector,
    radius: f64,
    tries: usize,
    seed: u64,
) -> Option<(Vector, Vector, f64)>
where
    F: ScalarField + ?Sized,
{
    let mut s = rng::stream(seed, 0);
    for _ in 0..tries {
        let u = center + rng::gaussian_vector(&mut s, center.len()) * radius;
        let v = center + rng::gaussian_vector(&mut s, center.len()) * radius;
        let mid = (&u + &v) * 0.5;
        let excess = f.value(&mid) - 0.5 * (f.value(&u) + f.value(&v));
        if excess > 1e-12 * f.value(&u).max(f.value(&v)).max(1.0) {
            return Some((u, v, excess));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::Provenance;

    #[test]
    fn scalar_case_by_hand() {
        let p = least_squares_from_data(Matrix::from_element(1, 1, 1.0), Vector::from_element(1, 3.0)).unwrap();
        let w = Vector::from_element(1, 5.0);
        assert_eq!(p.objective.value(&w), 2.0);
        assert_eq!(p.constants.alpha.value, 2.0);
        assert_eq!(p.constants.lambda.value, 1.0);
        assert_eq!(p.constants.beta.value, 1.0);
        assert_eq!(p.constants.alpha.source, Provenance::Analytic);
        let probes = p.standard_probes(100, 0);
        assert!(p.validate(&probes).unwrap().pass());
    }

    #[test]
    fn least_squares_interpolates() {
        let p = gen_interpolated_least_squares(20, 50, 1, None).unwrap();
        assert!(p.objective.sample_values(&p.w_star).iter().all(|&r| r <= 1e-12));
        assert!((p.w_star.norm() - 1.0).abs() < 1e-12);
        assert_eq!(p.kind, ProblemKind::LeastSquares);
    }

    #[test]
    fn pl_constant_is_tight_along_least_singular_direction() {
        let p = gen_interpolated_least_squares(20, 50, 2, None).unwrap();
        let f = p.data.as_ref().unwrap();
        let v = f.v.column(f.rank - 1).into_owned();
        let w = &p.w_star + v * 0.7;
        let ratio = p.objective.gradient(&w).norm_squared() / p.objective.value(&w);
        assert!((ratio - p.constants.alpha.value).abs() <= 1e-6 * p.constants.alpha.value);
    }

    #[test]
    fn prescribed_spectrum() {
        let spectrum = [3.0, 2.0, 1.0, 0.5];
        let p = gen_interpolated_least_squares(4, 9, 3, Some(&spectrum)).unwrap();
        let f = p.data.as_ref().unwrap();
        for (got, want) in f.singular_values.iter().zip(spectrum) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((p.constants.lambda.value - 9.0 / 4.0).abs() < 1e-12);
        assert!((p.constants.alpha.value - 2.0 * 0.25 / 4.0).abs() < 1e-12);
        assert!(gen_interpolated_least_squares(4, 9, 3, Some(&[1.0, 2.0])).is_err());
        assert!(gen_interpolated_least_squares(4, 9, 3, Some(&[1.0, 2.0, 0.0, 1.0])).is_err());
        assert!(gen_interpolated_least_squares(5, 4, 3, None).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_interpolated_least_squares(5, 8, 42, None).unwrap();
        let b = gen_interpolated_least_squares(5, 8, 42, None).unwrap();
        assert_eq!(a.w_star, b.w_star);
        assert_eq!(a.data.unwrap().a, b.data.unwrap().a);
        let c = gen_composed_linear(12, 10, 6, 4, 9).unwrap();
        let d = gen_composed_linear(12, 10, 6, 4, 9).unwrap();
        assert_eq!(c.linmap.unwrap().factorization.a, d.linmap.unwrap().factorization.a);
    }

    #[test]
    fn composed_linear_identity_map_is_strongly_convex() {
        let p = composed_linear_from_map(Matrix::identity(5, 5), 12, 4).unwrap();
        let lp = p.linmap.as_ref().unwrap();
        assert!((lp.sigma_min() - 1.0).abs() < 1e-12 && (lp.sigma_max() - 1.0).abs() < 1e-12);
        let eta = linmap::step_size_theorem2(lp.tilde_beta, lp.tilde_lambda, 1.0, 2).unwrap();
        let q = linmap::theorem2_rate_factor(lp.tilde_alpha, 1.0, eta).unwrap();
        assert!((q - (1.0 - lp.tilde_alpha * eta)).abs() < 1e-15);
        assert!(p.constants.alpha.value > 0.0);
    }

    #[test]
    fn composed_linear_is_flat_along_the_null_space() {
        let p = gen_composed_linear(40, 30, 10, 8, 5).unwrap();
        let lp = p.linmap.as_ref().unwrap();
        assert_eq!(lp.factorization.rank, 8);
        assert!((lp.sigma_max() - 2.0).abs() < 1e-12 && (lp.sigma_min() - 1.0).abs() < 1e-12);
        let null = lp.factorization.null_space_basis();
        assert_eq!(null.ncols(), 22);
        let v = null.column(0).into_owned();
        let base = p.objective.value(&p.w_star);
        for s in [-100.0, -1.0, 0.5, 3.0, 1e4] {
            let w = &p.w_star + &v * s;
            assert!((p.objective.value(&w) - base).abs() <= 1e-12 * s.abs().max(1.0));
            assert!(p
                .objective
                .sample_values(&w)
                .iter()
                .all(|&r| r <= 1e-12 * s.abs().max(1.0)));
        }
        assert!(p.constants.lambda.value > 0.0);
        assert!(gen_composed_linear(40, 30, 10, 11, 5).is_err());
        assert!(gen_composed_linear(40, 30, 10, 0, 5).is_err());
        assert!(gen_composed_linear(5, 30, 10, 8, 5).is_err());
    }

    #[test]
    fn composed_nonlinear_constants_and_identity_limit() {
        let base = gen_interpolated_least_squares(6, 10, 6, None).unwrap();
        let p = gen_composed_nonlinear(&base, 0.5).unwrap();
        let t = p.transform.as_ref().unwrap();
        assert_eq!((t.a(), t.b()), (0.25, 2.25));
        assert!((p.constants.alpha.value - 0.25 * base.constants.alpha.value).abs() < 1e-15);
        assert!((p.constants.lambda.value - 2.25 * base.constants.lambda.value).abs() < 1e-15);
        assert!(p.measured_lambda.unwrap() > 0.0);
        let j = t.jacobian(&Vector::zeros(10));
        let eig = numerics::symmetric_eigenvalues(&(j.transpose() * &j)).unwrap();
        assert!(eig.iter().all(|e| (e - 2.25).abs() < 1e-15));

        let near = gen_composed_nonlinear(&base, 1e-9).unwrap();
        let w = rng::gaussian_vector(&mut rng::stream(1, 0), 10);
        assert!((near.objective.value(&w) - base.objective.value(&w)).abs() <= 1e-7 * base.objective.value(&w));

        assert!(gen_composed_nonlinear(&base, 0.0).is_err());
        assert!(gen_composed_nonlinear(&base, 1.0).is_err());
        assert!(gen_composed_nonlinear(&p, 0.5).is_err());
    }

    #[test]
    fn composed_nonlinear_is_nonconvex() {
        let base = gen_interpolated_least_squares(3, 4, 7, None).unwrap();
        let p = gen_composed_nonlinear(&base, 0.9).unwrap();
        let (u, v, excess) =
            find_midpoint_convexity_violation(&p.objective, &p.w_star, 3.0, 10_000, 1).expect("no violation");
        let mid = (&u + &v) * 0.5;
        assert!(excess > 0.0);
        assert!(p.objective.value(&mid) > 0.5 * (p.objective.value(&u) + p.objective.value(&v)));
        assert!(find_midpoint_convexity_violation(&base.objective, &base.w_star, 3.0, 2000, 1).is_none());
    }

    #[test]
    fn inflated_alpha_fails_validation() {
        let p = gen_interpolated_least_squares(20, 50, 8, None).unwrap();
        let probes = p.standard_probes(1000, 3);
        assert_eq!(probes.len(), 1000);
        let report = p.validate_with_alpha(1.5 * p.constants.alpha.value, &probes).unwrap();
        assert!(!report.pass());
        assert!(report
            .failures()
            .iter()
            .any(|f| f.starts_with("pl: inequality fails at probe 997 ")));
        assert!(p.validate(&probes).unwrap().pass());
    }

    #[test]
    fn kind_round_trip() {
        for k in [
            ProblemKind::LeastSquares,
            ProblemKind::ComposedLinear,
            ProblemKind::ComposedNonlinear,
        ] {
            assert_eq!(k.as_str().parse::<ProblemKind>().unwrap(), k);
        }
        assert!("ridge".parse::<ProblemKind>().is_err());
    }
}
