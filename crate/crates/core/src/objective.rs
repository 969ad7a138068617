//! Empirical risk `𝓛(w) = (1/n) Σᵢ ℓᵢ(w)` over non-negative, smooth sample
//! losses whose common infimum is zero.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{ScalarField, Vector};

/// Losses with `‖∇ℓ(w)‖² / (2βℓ(w))` are ignored when `ℓ(w)` is below this.
pub const SAMPLE_LOSS_FLOOR: f64 = 1e-14;
const GRADIENT_BOUND_SLACK: f64 = 1e-8;

/// A single non-negative, `beta`-smooth sample loss.
pub trait SampleLoss: ScalarField + Send + Sync + fmt::Debug {
    /// Smoothness constant claimed for this loss.
    fn beta(&self) -> f64;
}

/// `ℓ(w) = ½ (xᵀw − y)²`, which is `‖x‖²`-smooth.
#[derive(Debug, Clone)]
pub struct QuadraticResidual {
    pub x: Vector,
    pub y: f64,
}

impl QuadraticResidual {
    pub fn new(x: Vector, y: f64) -> Self {
        Self { x, y }
    }

    fn residual(&self, w: &Vector) -> f64 {
        self.x.dot(w) - self.y
    }
}

impl ScalarField for QuadraticResidual {
    fn dim(&self) -> usize {
        self.x.len()
    }
    fn value(&self, w: &Vector) -> f64 {
        let r = self.residual(w);
        0.5 * r * r
    }
    fn gradient(&self, w: &Vector) -> Vector {
        &self.x * self.residual(w)
    }
}

impl SampleLoss for QuadraticResidual {
    fn beta(&self) -> f64 {
        self.x.norm_squared()
    }
}

/// `ℓ(w) = ½ Σₚ κₚ (wₚ − cₚ)²` with `κₚ ≥ 0`; smoothness `max κₚ`.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    pub center: Vector,
    pub curvature: Vector,
}

impl DiagonalQuadratic {
    pub fn new(center: Vector, curvature: Vector) -> Result<Self> {
        if center.len() != curvature.len() || center.is_empty() {
            return Err(Error::invalid("center and curvature must share a positive dimension"));
        }
        if curvature.iter().any(|&k| !(k >= 0.0 && k.is_finite())) {
            return Err(Error::invalid("curvatures must be finite and non-negative"));
        }
        if curvature.max() <= 0.0 {
            return Err(Error::invalid("at least one curvature must be positive"));
        }
        Ok(Self { center, curvature })
    }

    /// `½ κ ‖w − c‖²`.
    pub fn isotropic(center: Vector, kappa: f64) -> Result<Self> {
        let curvature = Vector::from_element(center.len(), kappa);
        Self::new(center, curvature)
    }
}

impl ScalarField for DiagonalQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, w: &Vector) -> f64 {
        let d = w - &self.center;
        0.5 * d.component_mul(&d).dot(&self.curvature)
    }
    fn gradient(&self, w: &Vector) -> Vector {
        (w - &self.center).component_mul(&self.curvature)
    }
}

impl SampleLoss for DiagonalQuadratic {
    fn beta(&self) -> f64 {
        self.curvature.max()
    }
}

/// Ordered collection of sample losses sharing one parameter dimension.
#[derive(Debug, Clone)]
pub struct ErmObjective {
    losses: Vec<Arc<dyn SampleLoss>>,
    dim: usize,
}

impl ErmObjective {
    pub fn new(losses: Vec<Arc<dyn SampleLoss>>) -> Result<Self> {
        let dim = losses
            .first()
            .ok_or_else(|| Error::invalid("objective needs at least one sample loss"))?
            .dim();
        if let Some(i) = losses.iter().position(|l| l.dim() != dim) {
            return Err(Error::invalid(format!(
                "sample loss {i} has dimension {} but loss 0 has {dim}",
                losses[i].dim()
            )));
        }
        Ok(Self { losses, dim })
    }

    pub fn n(&self) -> usize {
        self.losses.len()
    }

    pub fn losses(&self) -> &[Arc<dyn SampleLoss>] {
        &self.losses
    }

    pub fn loss(&self, i: usize) -> &dyn SampleLoss {
        self.losses[i].as_ref()
    }

    /// Largest per-sample smoothness constant.
    pub fn max_beta(&self) -> f64 {
        self.losses.iter().map(|l| l.beta()).fold(0.0, f64::max)
    }

    pub fn check_dim(&self, w: &Vector) -> Result<()> {
        if w.len() == self.dim {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "parameter has dimension {} but the objective expects {}",
                w.len(),
                self.dim
            )))
        }
    }

    pub fn sample_values(&self, w: &Vector) -> Vec<f64> {
        self.losses.iter().map(|l| l.value(w)).collect()
    }

    /// `(1/m) Σⱼ ∇ℓ_{iⱼ}(w)`; indices are trusted.
    pub(crate) fn batch_gradient(&self, w: &Vector, batch: &BatchIndices) -> Vector {
        let mut g = Vector::zeros(self.dim);
        for &i in batch.indices() {
            g += self.losses[i].gradient(w);
        }
        g / batch.len() as f64
    }
}

impl ScalarField for ErmObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, w: &Vector) -> f64 {
        self.losses.iter().map(|l| l.value(w)).sum::<f64>() / self.n() as f64
    }
    fn gradient(&self, w: &Vector) -> Vector {
        let mut g = Vector::zeros(self.dim);
        for l in &self.losses {
            g += l.gradient(w);
        }
        g / self.n() as f64
    }
}

/// Mini-batch of sample indices, drawn with replacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchIndices(Vec<usize>);

impl BatchIndices {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::invalid("batch must contain at least one index"));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn erm_value(obj: &ErmObjective, w: &Vector) -> Result<f64> {
    obj.check_dim(w)?;
    Ok(obj.value(w))
}

pub fn erm_gradient(obj: &ErmObjective, w: &Vector) -> Result<Vector> {
    obj.check_dim(w)?;
    Ok(obj.gradient(w))
}

pub fn minibatch_gradient(obj: &ErmObjective, w: &Vector, batch: &BatchIndices) -> Result<Vector> {
    obj.check_dim(w)?;
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if let Some(&bad) = batch.indices().iter().find(|&&i| i >= obj.n()) {
        return Err(Error::invalid(format!(
            "batch index {bad} out of range for {} samples",
            obj.n()
        )));
    }
    Ok(obj.batch_gradient(w, batch))
}

/// `m` i.i.d. uniform draws from `{0, …, n−1}`.
pub fn sample_batch<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<BatchIndices> {
    if n == 0 {
        return Err(Error::invalid("cannot sample from zero samples"));
    }
    if m == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    Ok(BatchIndices((0..m).map(|_| rng.random_range(0..n)).collect()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpolationReport {
    pub max_residual: f64,
    pub residuals: Vec<f64>,
    pub pass: bool,
}

pub fn check_interpolation(obj: &ErmObjective, w: &Vector, tol: f64) -> Result<InterpolationReport> {
    obj.check_dim(w)?;
    if !(tol > 0.0) {
        return Err(Error::invalid("interpolation tolerance must be positive"));
    }
    let residuals = obj.sample_values(w);
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(InterpolationReport {
        max_residual,
        pass: max_residual <= tol,
        residuals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoundReport {
    /// Largest `‖∇ℓᵢ‖² / (2βᵢℓᵢ)` over probes and samples above the floor.
    pub worst_ratio: f64,
    pub worst_sample: Option<usize>,
    pub worst_probe: Option<usize>,
    pub checked: usize,
    pub pass: bool,
}

/// Checks `‖∇ℓᵢ(w)‖² ≤ 2βᵢ ℓᵢ(w)` for every sample at every probe.
pub fn check_sample_gradient_bound(obj: &ErmObjective, probes: &[Vector]) -> GradientBoundReport {
    let mut report = GradientBoundReport {
        worst_ratio: 0.0,
        worst_sample: None,
        worst_probe: None,
        checked: 0,
        pass: true,
    };
    for (p, w) in probes.iter().enumerate() {
        if w.len() != obj.dim() {
            report.pass = false;
            continue;
        }
        for (i, loss) in obj.losses().iter().enumerate() {
            let value = loss.value(w);
            if !(value > SAMPLE_LOSS_FLOOR) {
                continue;
            }
            report.checked += 1;
            let ratio = loss.gradient(w).norm_squared() / (2.0 * loss.beta() * value);
            if !(ratio <= report.worst_ratio) {
                report.worst_ratio = ratio;
                report.worst_sample = Some(i);
                report.worst_probe = Some(p);
            }
        }
    }
    report.pass &= report.worst_ratio <= 1.0 + GRADIENT_BOUND_SLACK;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::finite_difference_gradient;
    use crate::rng;

    fn least_squares(n: usize, d: usize, seed: u64) -> (ErmObjective, nalgebra::DMatrix<f64>, Vector, Vector) {
        let mut s = rng::stream(seed, 0);
        let x = rng::gaussian_matrix(&mut s, n, d);
        let w_star = rng::gaussian_vector(&mut s, d);
        let y = &x * &w_star;
        let losses: Vec<Arc<dyn SampleLoss>> = (0..n)
            .map(|i| Arc::new(QuadraticResidual::new(x.row(i).transpose(), y[i])) as Arc<dyn SampleLoss>)
            .collect();
        (ErmObjective::new(losses).unwrap(), x, y, w_star)
    }

    fn half_norm_squared(dim: usize) -> ErmObjective {
        let l = DiagonalQuadratic::isotropic(Vector::zeros(dim), 1.0).unwrap();
        ErmObjective::new(vec![Arc::new(l)]).unwrap()
    }

    #[test]
    fn value_of_single_quadratic() {
        let obj = half_norm_squared(2);
        assert_eq!(erm_value(&obj, &Vector::from_vec(vec![2.0, 0.0])).unwrap(), 2.0);
        assert!(erm_value(&obj, &Vector::zeros(3)).is_err());
    }

    #[test]
    fn value_matches_direct_residual() {
        let (obj, x, y, w_star) = least_squares(7, 11, 3);
        let mut s = rng::stream(4, 0);
        let w = rng::gaussian_vector(&mut s, 11);
        let direct = (&x * &w - &y).norm_squared() / (2.0 * 7.0);
        let v = erm_value(&obj, &w).unwrap();
        assert!((v - direct).abs() <= 1e-12 * direct);
        assert!(erm_value(&obj, &w_star).unwrap() <= 1e-12 * y.norm_squared().max(1.0));
    }

    #[test]
    fn full_batch_equals_full_gradient() {
        let (obj, _, _, _) = least_squares(5, 8, 9);
        let w = rng::gaussian_vector(&mut rng::stream(1, 1), 8);
        let batch = BatchIndices::new((0..5).collect()).unwrap();
        let g = minibatch_gradient(&obj, &w, &batch).unwrap();
        assert!((g - obj.gradient(&w)).norm() <= 1e-12 * obj.gradient(&w).norm().max(1.0));
    }

    #[test]
    fn single_sample_batches() {
        let l = DiagonalQuadratic::new(Vector::from_vec(vec![1.0, -1.0]), Vector::from_vec(vec![2.0, 3.0])).unwrap();
        let obj = ErmObjective::new(vec![Arc::new(l)]).unwrap();
        let w = Vector::from_vec(vec![0.5, 0.25]);
        for m in 1..5 {
            let batch = BatchIndices::new(vec![0; m]).unwrap();
            let g = minibatch_gradient(&obj, &w, &batch).unwrap();
            assert!((g - obj.gradient(&w)).norm() < 1e-15);
        }
    }

    #[test]
    fn batch_enumeration_recovers_full_gradient() {
        let (obj, _, _, _) = least_squares(3, 4, 2);
        let w = rng::gaussian_vector(&mut rng::stream(2, 2), 4);
        let mut mean = Vector::zeros(4);
        for i in 0..3 {
            for j in 0..3 {
                let b = BatchIndices::new(vec![i, j]).unwrap();
                mean += minibatch_gradient(&obj, &w, &b).unwrap();
            }
        }
        mean /= 9.0;
        let full = obj.gradient(&w);
        assert!((mean - &full).norm() <= 1e-12 * full.norm().max(1.0));
    }

    #[test]
    fn batch_errors() {
        let obj = half_norm_squared(1);
        assert!(BatchIndices::new(vec![]).is_err());
        let b = BatchIndices::new(vec![1]).unwrap();
        assert!(minibatch_gradient(&obj, &Vector::zeros(1), &b).is_err());
    }

    #[test]
    fn sampling() {
        let mut s = rng::stream(0, 0);
        assert_eq!(sample_batch(1, 3, &mut s).unwrap().indices(), &[0, 0, 0]);
        assert!(sample_batch(0, 3, &mut s).is_err());
        assert!(sample_batch(3, 0, &mut s).is_err());

        let draws = 100_000;
        let zeros = sample_batch(2, draws, &mut rng::stream(12, 0))
            .unwrap()
            .indices()
            .iter()
            .filter(|&&i| i == 0)
            .count();
        let freq = zeros as f64 / draws as f64;
        assert!((0.49..=0.51).contains(&freq), "frequency {freq}");

        let a = sample_batch(10, 50, &mut rng::stream(99, 5)).unwrap();
        let b = sample_batch(10, 50, &mut rng::stream(99, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interpolation_checks() {
        let (obj, _, _, w_star) = least_squares(6, 10, 5);
        let at = check_interpolation(&obj, &w_star, 1e-12).unwrap();
        assert!(at.pass);
        assert_eq!(at.residuals.len(), 6);

        let mut dir = rng::unit_vector(&mut rng::stream(8, 0), 10);
        dir += &w_star;
        let off = check_interpolation(&obj, &dir, 1e-12).unwrap();
        assert!(!off.pass);
        assert!(off.max_residual > 1e-12);

        let single = half_norm_squared(3);
        assert!(check_interpolation(&single, &Vector::zeros(3), 1e-12).unwrap().pass);
        assert!(check_interpolation(&single, &Vector::zeros(3), 0.0).is_err());
    }

    #[test]
    fn scalar_quadratic_saturates_gradient_bound() {
        let l = DiagonalQuadratic::isotropic(Vector::from_vec(vec![1.5]), 3.0).unwrap();
        let obj = ErmObjective::new(vec![Arc::new(l)]).unwrap();
        let probes: Vec<Vector> = (-5..=5).map(|k| Vector::from_vec(vec![k as f64 * 0.7])).collect();
        let r = check_sample_gradient_bound(&obj, &probes);
        assert!(r.pass);
        assert!((r.worst_ratio - 1.0).abs() < 1e-12);
    }

    #[derive(Debug)]
    struct Understated(QuadraticResidual);
    impl ScalarField for Understated {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, w: &Vector) -> f64 {
            self.0.value(w)
        }
        fn gradient(&self, w: &Vector) -> Vector {
            self.0.gradient(w)
        }
    }
    impl SampleLoss for Understated {
        fn beta(&self) -> f64 {
            0.5 * self.0.beta()
        }
    }

    #[test]
    fn least_squares_gradient_bound_and_violation() {
        let (obj, x, y, _) = least_squares(8, 12, 17);
        let mut s = rng::stream(3, 3);
        let probes: Vec<Vector> = (0..1000).map(|_| rng::gaussian_vector(&mut s, 12) * 3.0).collect();
        assert!(check_sample_gradient_bound(&obj, &probes).pass);

        let halved: Vec<Arc<dyn SampleLoss>> = (0..8)
            .map(|i| Arc::new(Understated(QuadraticResidual::new(x.row(i).transpose(), y[i]))) as Arc<dyn SampleLoss>)
            .collect();
        let bad = ErmObjective::new(halved).unwrap();
        assert!(!check_sample_gradient_bound(&bad, &probes).pass);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (obj, _, _, _) = least_squares(9, 15, 23);
        let mut s = rng::stream(6, 0);
        for _ in 0..20 {
            let w = rng::gaussian_vector(&mut s, 15);
            let fd = finite_difference_gradient(|v| obj.value(v), &w, crate::numerics::default_fd_step(&w)).unwrap();
            assert!(crate::numerics::relative_error(&obj.gradient(&w), &fd) <= 1e-6);
        }
    }

    #[test]
    fn rejects_mixed_dimensions() {
        let a = DiagonalQuadratic::isotropic(Vector::zeros(2), 1.0).unwrap();
        let b = DiagonalQuadratic::isotropic(Vector::zeros(3), 1.0).unwrap();
        assert!(ErmObjective::new(vec![Arc::new(a), Arc::new(b)]).is_err());
        assert!(ErmObjective::new(vec![]).is_err());
    }
}
