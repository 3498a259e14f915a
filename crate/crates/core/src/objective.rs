//! Squared-error objective, its per-day split, and the Gaussian likelihood it
//! corresponds to.

use ndarray::{Array2, Axis, Zip};

use crate::error::{Error, Result};
use crate::model::{ensure_same_shape, DisaggregationModel};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue<T> {
    /// `½‖X − X̃‖²_F`.
    pub total: T,
    /// `½‖x(n) − x̃(n)‖²` for each day.
    pub per_sample: Vec<T>,
}

pub fn frobenius_objective<T: Scalar>(
    x: &Array2<T>,
    model: &DisaggregationModel<T>,
) -> Result<ObjectiveValue<T>> {
    let approx = model.reconstruct()?;
    objective_between(x, &approx)
}

/// Objective between data and an already-computed reconstruction.
pub fn objective_between<T: Scalar>(x: &Array2<T>, approx: &Array2<T>) -> Result<ObjectiveValue<T>> {
    ensure_same_shape("reconstruction", x.dim(), approx)?;
    let half = T::lit(0.5);
    let per_sample: Vec<T> = x
        .axis_iter(Axis(1))
        .zip(approx.axis_iter(Axis(1)))
        .map(|(xc, ac)| {
            let sq: T = xc.iter().zip(ac.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum();
            half * sq
        })
        .collect();
    let total = per_sample.iter().copied().sum();
    Ok(ObjectiveValue { total, per_sample })
}

/// `-log p(X | model)` under i.i.d. Gaussian noise of standard deviation
/// `sigma`: `Φ/σ² + N·log(σ^D (2π)^{D/2})`.
///
/// Only a diagnostic: it is a strictly increasing affine function of `Φ` for
/// a fixed `sigma`, so it ranks models exactly as the objective does.
pub fn negative_log_likelihood<T: Scalar>(
    x: &Array2<T>,
    model: &DisaggregationModel<T>,
    sigma: T,
) -> Result<T> {
    if !(sigma.is_finite() && sigma > T::zero()) {
        return Err(Error::InvalidConfig(format!("sigma must be positive, got {sigma}")));
    }
    let phi = frobenius_objective(x, model)?.total;
    let (d, n) = x.dim();
    let d_t = T::from_usize(d).expect("dimension fits");
    let n_t = T::from_usize(n).expect("dimension fits");
    let two_pi = T::lit(std::f64::consts::TAU);
    let log_norm = d_t * sigma.ln() + d_t * T::lit(0.5) * two_pi.ln();
    Ok(phi / (sigma * sigma) + n_t * log_norm)
}

/// Generalized KL divergence `Σ x log(x/y) − x + y`, with `0 log 0 = 0` and
/// `y` floored at `epsilon`.
pub fn generalized_kl<T: Scalar>(x: &Array2<T>, approx: &Array2<T>, epsilon: T) -> Result<T> {
    ensure_same_shape("reconstruction", x.dim(), approx)?;
    let mut total = T::zero();
    Zip::from(x).and(approx).for_each(|&a, &b| {
        let b = b.max(epsilon);
        total += if a > T::zero() { a * (a / b).ln() - a + b } else { b };
    });
    Ok(total)
}
