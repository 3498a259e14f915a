//! Multiplicative updates and column normalization for the fixed-load
//! factors.

use ndarray::{Array1, Array2, Axis, Zip};

use crate::config::UpdateRule;
use crate::error::Result;
use crate::model::{ensure_same_shape, DisaggregationModel, FixedLoadFactors};
use crate::scalar::Scalar;

/// Returns the updated fixed-load basis `W^f`.
///
/// `PaperKl`: `W ∘ ((X ⊘ X̃) Hᵀ) ⊘ (1 Hᵀ)`; `Frobenius`: `W ∘ (X Hᵀ) ⊘ (X̃ Hᵀ)`.
/// `X̃` is the full reconstruction including the shiftable classes. `X̃` and
/// every denominator are floored at `epsilon`.
pub fn update_fixed_basis<T: Scalar>(
    x: &Array2<T>,
    model: &DisaggregationModel<T>,
    rule: UpdateRule,
    epsilon: T,
) -> Result<Array2<T>> {
    let approx = model.reconstruct()?;
    ensure_same_shape("data", approx.dim(), x)?;
    let weights_t = model.fixed.weights.t();
    let (numer, denom) = match rule {
        UpdateRule::PaperKl => {
            let ratio = ratio_floored(x, &approx, epsilon);
            let ones = Array2::<T>::ones(x.dim());
            (ratio.dot(&weights_t), ones.dot(&weights_t))
        }
        UpdateRule::Frobenius => (x.dot(&weights_t), approx.dot(&weights_t)),
    };
    Ok(apply_factor(&model.fixed.basis, &numer, &denom, epsilon))
}

/// Returns the updated fixed-load weights `H^f`.
///
/// `PaperKl`: `H ∘ (Wᵀ (X ⊘ X̃)) ⊘ (Wᵀ 1)`; `Frobenius`: `H ∘ (Wᵀ X) ⊘ (Wᵀ X̃)`.
pub fn update_fixed_weights<T: Scalar>(
    x: &Array2<T>,
    model: &DisaggregationModel<T>,
    rule: UpdateRule,
    epsilon: T,
) -> Result<Array2<T>> {
    let approx = model.reconstruct()?;
    ensure_same_shape("data", approx.dim(), x)?;
    let basis_t = model.fixed.basis.t();
    let (numer, denom) = match rule {
        UpdateRule::PaperKl => {
            let ratio = ratio_floored(x, &approx, epsilon);
            let ones = Array2::<T>::ones(x.dim());
            (basis_t.dot(&ratio), basis_t.dot(&ones))
        }
        UpdateRule::Frobenius => (basis_t.dot(x), basis_t.dot(&approx)),
    };
    Ok(apply_factor(&model.fixed.weights, &numer, &denom, epsilon))
}

fn ratio_floored<T: Scalar>(x: &Array2<T>, approx: &Array2<T>, epsilon: T) -> Array2<T> {
    Zip::from(x)
        .and(approx)
        .map_collect(|&a, &b| a / b.max(epsilon))
}

fn apply_factor<T: Scalar>(base: &Array2<T>, numer: &Array2<T>, denom: &Array2<T>, epsilon: T) -> Array2<T> {
    Zip::from(base)
        .and(numer)
        .and(denom)
        .map_collect(|&p, &a, &b| p * (a / b.max(epsilon)))
}

/// Scales every column of `basis` to unit Euclidean norm and returns the
/// pre-normalization norms.
///
/// A column whose norm is below `epsilon` is replaced by the uniform unit
/// vector; its reported norm is `None`.
pub fn normalize_basis_columns<T: Scalar>(basis: &Array2<T>, epsilon: T) -> (Array2<T>, Vec<Option<T>>) {
    let mut out = basis.clone();
    let rows = T::from_usize(basis.nrows()).expect("dimension fits");
    let uniform = T::one() / rows.sqrt();
    let norms = out
        .axis_iter_mut(Axis(1))
        .map(|mut col| {
            let norm = col.iter().map(|&v| v * v).sum::<T>().sqrt();
            if norm < epsilon || !norm.is_finite() {
                col.fill(uniform);
                None
            } else {
                col.mapv_inplace(|v| v / norm);
                Some(norm)
            }
        })
        .collect();
    (out, norms)
}

/// Normalizes the basis columns and multiplies each weight row by the
/// matching norm so that `W^f H^f` is unchanged. Rows of reinitialized
/// columns keep their weights.
pub fn normalize_with_compensation<T: Scalar>(fixed: &mut FixedLoadFactors<T>, epsilon: T) {
    let (basis, norms) = normalize_basis_columns(&fixed.basis, epsilon);
    fixed.basis = basis;
    for (mut row, norm) in fixed.weights.axis_iter_mut(Axis(0)).zip(norms) {
        if let Some(norm) = norm {
            row.mapv_inplace(|v| v * norm);
        }
    }
}

/// Column norms of a matrix.
pub fn column_norms<T: Scalar>(m: &Array2<T>) -> Array1<T> {
    m.map_axis(Axis(0), |col| col.iter().map(|&v| v * v).sum::<T>().sqrt())
}
