//! Brute-force references: exact one-step expectations over every ordered
//! batch, and PL constants by grid search in one or two dimensions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{self, ScalarField, Vector};
use crate::objective::{BatchIndices, ErmObjective};

/// Largest number of ordered batches the enumeration accepts.
pub const ENUMERATION_BUDGET: u128 = 1_000_000;

const CHUNK: usize = 4096;

fn outcome_count(n: usize, m: usize) -> Result<usize> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("n and m must be at least 1"));
    }
    let outcomes = (n as u128).checked_pow(m as u32).filter(|_| m <= u32::MAX as usize);
    match outcomes {
        Some(o) if o <= ENUMERATION_BUDGET => Ok(o as usize),
        other => Err(Error::EnumerationTooLarge {
            outcomes: other.unwrap_or(u128::MAX),
            budget: ENUMERATION_BUDGET,
        }),
    }
}

/// Ordered batch number `code` in base `n`, most significant index first.
fn decode(mut code: usize, n: usize, m: usize, out: &mut [usize]) {
    for slot in out[..m].iter_mut().rev() {
        *slot = code % n;
        code /= n;
    }
}

/// All `n^m` ordered batches in lexicographic order.
pub fn enumerate_batches(n: usize, m: usize) -> Result<Vec<BatchIndices>> {
    let total = outcome_count(n, m)?;
    let mut idx = vec![0; m];
    (0..total)
        .map(|code| {
            decode(code, n, m, &mut idx);
            BatchIndices::new(idx.clone())
        })
        .collect()
}

/// `E[𝓛(w − η·∇𝓛_B(w))]` over batches `B` of `m` indices drawn uniformly
/// with replacement, computed by averaging over all `n^m` ordered batches.
pub fn exact_one_step_expectation(obj: &ErmObjective, w: &Vector, eta: f64, m: usize) -> Result<f64> {
    obj.check_dim(w)?;
    if !eta.is_finite() {
        return Err(Error::invalid(format!("step size must be finite, got {eta}")));
    }
    let n = obj.n();
    let total = outcome_count(n, m)?;
    let grads: Vec<Vector> = obj.losses().iter().map(|l| l.gradient(w)).collect();
    let scale = eta / m as f64;
    let partials: Vec<f64> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut idx = vec![0; m];
            let mut sum = 0.0;
            for code in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                decode(code, n, m, &mut idx);
                let mut next = w.clone();
                for &i in &idx {
                    next.axpy(-scale, &grads[i], 1.0);
                }
                sum += obj.value(&next);
            }
            sum
        })
        .collect();
    let mean = partials.iter().sum::<f64>() / total as f64;
    if !mean.is_finite() {
        return Err(Error::NumericalFailure("expected loss is not finite".into()));
    }
    Ok(mean)
}

/// `min ‖∇f‖² / f` over a uniform grid of `resolution` points per axis on the
/// box, skipping points with `f ≤ loss_floor`. Gradients are central
/// differences.
pub fn grid_pl_constant<F>(f: &F, bounds: &[(f64, f64)], resolution: usize, loss_floor: f64) -> Result<f64>
where
    F: ScalarField + ?Sized,
{
    let dim = f.dim();
    if dim == 0 || dim > 2 {
        return Err(Error::invalid(format!(
            "grid search supports dimension 1 or 2, got {dim}"
        )));
    }
    if bounds.len() != dim {
        return Err(Error::invalid(format!("expected {dim} bounds, got {}", bounds.len())));
    }
    if bounds
        .iter()
        .any(|&(lo, hi)| !(lo < hi && lo.is_finite() && hi.is_finite()))
    {
        return Err(Error::invalid("each bound must satisfy lo < hi"));
    }
    if resolution < 2 {
        return Err(Error::invalid("resolution must be at least 2"));
    }
    let axis = |j: usize, i: usize| {
        let (lo, hi) = bounds[j];
        lo + (hi - lo) * i as f64 / (resolution - 1) as f64
    };
    let total = resolution.pow(dim as u32);
    let mut best = f64::INFINITY;
    let mut qualifying = 0;
    for code in 0..total {
        let w = Vector::from_fn(dim, |j, _| {
            let i = if j == 0 { code % resolution } else { code / resolution };
            axis(j, i)
        });
        let value = f.value(&w);
        if !(value > loss_floor) {
            continue;
        }
        qualifying += 1;
        let g = numerics::finite_difference_gradient(|v| f.value(v), &w, numerics::default_fd_step(&w))?;
        best = best.min(g.norm_squared() / value);
    }
    if qualifying == 0 {
        return Err(Error::InsufficientProbes {
            qualifying,
            total,
            floor: loss_floor,
        });
    }
    Ok(best)
}
