//! Greedy L0-constrained binary coding of a residual against a sparse binary
//! basis, plus an exhaustive solver used to validate it.
//!
//! Both routines minimize `‖r − W h‖²` over binary `h` with `‖h‖₀ ≤ L`. The
//! greedy routine starts from `h = 0` and repeatedly switches on the column
//! with the largest error reduction. Switching on column `k` changes the
//! error by `Δ_k = Σ_{d ∈ D_k} (1 − 2 r_d)`, where `r` is the residual left
//! after the columns already chosen.

use ndarray::{Array1, ArrayView1, Axis};

use crate::basis::SparseBinaryBasis;
use crate::error::{Error, Result};
use crate::model::{add_selection, DisaggregationModel};
use crate::scalar::Scalar;

/// Largest column count accepted by [`brute_force_best`].
pub const BRUTE_FORCE_MAX_COLUMNS: usize = 20;

/// The target for one class on one day, already divided by the class peak.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual<T>(pub Array1<T>);

impl<T: Scalar> Residual<T> {
    pub fn values(&self) -> &Array1<T> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<T: Scalar> From<Vec<T>> for Residual<T> {
    fn from(v: Vec<T>) -> Self {
        Residual(Array1::from(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    BudgetExhausted,
    NoImprovingMove,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HillClimbTrace<T> {
    /// Chosen columns in selection order.
    pub selected: Vec<usize>,
    /// Error before each accepted step.
    pub objective_before: Vec<T>,
    /// Error after each accepted step.
    pub objective_after: Vec<T>,
    pub termination: Termination,
}

impl<T> HillClimbTrace<T> {
    pub fn steps(&self) -> usize {
        self.selected.len()
    }
}

/// Residual for class `class` on day `sample`:
/// `(x(n) − W^f h^f(n) − Σ_{j'≠j} p_{j'} W_{j'} h_{j'}(n)) / p_j`.
pub fn compute_residual<T: Scalar>(
    x: ArrayView1<T>,
    model: &DisaggregationModel<T>,
    class: usize,
    sample: usize,
) -> Result<Residual<T>> {
    let (d, n) = model.dims()?;
    if x.len() != d {
        return Err(Error::mismatch("sample length", d, x.len()));
    }
    if sample >= n {
        return Err(Error::mismatch("sample index bound", n, sample));
    }
    if class >= model.shiftable.len() {
        return Err(Error::mismatch("class index bound", model.shiftable.len(), class));
    }
    let fixed = model.fixed.basis.dot(&model.fixed.weights.column(sample));
    let mut others = Array1::zeros(d);
    for (j, c) in model.shiftable.iter().enumerate() {
        if j != class {
            c.add_contribution(sample, others.view_mut());
        }
    }
    let peak = model.shiftable[class].peak;
    Ok(Residual((&x - &fixed - &others).mapv(|v| v / peak)))
}

/// Same as [`compute_residual`] but from precomputed pieces; used by the
/// trainer's per-day sweep.
pub(crate) fn residual_from_parts<T: Scalar>(
    x: ArrayView1<T>,
    fixed: ArrayView1<T>,
    classes: &[(&SparseBinaryBasis, T)],
    selections: &[Array1<bool>],
    class: usize,
) -> Residual<T> {
    let mut r = &x - &fixed;
    let mut view = r.view_mut();
    let mut others = Array1::zeros(x.len());
    for (j, ((basis, peak), sel)) in classes.iter().zip(selections).enumerate() {
        if j != class {
            add_selection(basis, *peak, sel.view(), &mut others.view_mut());
        }
    }
    view -= &others;
    let peak = classes[class].1;
    r.mapv_inplace(|v| v / peak);
    Residual(r)
}

/// `‖r − W h‖²`.
pub fn binary_objective<T: Scalar>(basis: &SparseBinaryBasis, r: &Residual<T>, h: &[bool]) -> T {
    let wh: Array1<T> = basis.apply(h);
    r.0.iter().zip(wh.iter()).map(|(&a, &b)| (a - b) * (a - b)).sum()
}

/// Greedy hill climbing for `min ‖r − W h‖²` subject to `‖h‖₀ ≤ budget`.
///
/// Stops once `budget` columns are ON or when no remaining column has
/// `Δ_k < 0`. Ties in `Δ_k` go to the lowest column index. Each column is
/// chosen at most once.
pub fn hill_climb<T: Scalar>(
    basis: &SparseBinaryBasis,
    residual: &Residual<T>,
    budget: usize,
) -> Result<(Vec<bool>, HillClimbTrace<T>)> {
    if basis.rows() != residual.len() {
        return Err(Error::mismatch("residual length", basis.rows(), residual.len()));
    }
    if budget == 0 {
        return Err(Error::InvalidConfig("L0 budget must be at least 1".into()));
    }
    let mut r = residual.0.clone();
    let s = basis.columns();
    let mut h = vec![false; s];
    let mut trace = HillClimbTrace {
        selected: Vec::new(),
        objective_before: Vec::new(),
        objective_after: Vec::new(),
        termination: Termination::NoImprovingMove,
    };
    let one = T::one();
    let two = T::lit(2.0);
    loop {
        if trace.selected.len() == budget {
            trace.termination = Termination::BudgetExhausted;
            break;
        }
        let phi0: T = r.iter().map(|&v| v * v).sum();
        let mut best: Option<(usize, T)> = None;
        for (k, set) in basis.support_sets().iter().enumerate() {
            if h[k] {
                continue;
            }
            let delta: T = set.iter().map(|&d| one - two * r[d]).sum();
            if best.is_none_or(|(_, b)| delta < b) {
                best = Some((k, delta));
            }
        }
        let Some((k, delta)) = best.filter(|&(_, delta)| delta < T::zero()) else {
            trace.termination = Termination::NoImprovingMove;
            break;
        };
        h[k] = true;
        for &d in basis.support(k) {
            r[d] -= one;
        }
        trace.selected.push(k);
        trace.objective_before.push(phi0);
        trace.objective_after.push(phi0 + delta);
    }
    Ok((h, trace))
}

/// Exhaustive minimizer of `‖r − W h‖²` over binary `h` with `‖h‖₀ ≤ budget`.
///
/// Ties go to the lexicographically smallest `h`, comparing `h_0` first with
/// OFF before ON. Refuses bases with more than [`BRUTE_FORCE_MAX_COLUMNS`]
/// columns.
pub fn brute_force_best<T: Scalar>(
    basis: &SparseBinaryBasis,
    residual: &Residual<T>,
    budget: usize,
) -> Result<(Vec<bool>, T)> {
    let s = basis.columns();
    if s > BRUTE_FORCE_MAX_COLUMNS {
        return Err(Error::OracleTooLarge {
            columns: s,
            limit: BRUTE_FORCE_MAX_COLUMNS,
        });
    }
    if basis.rows() != residual.len() {
        return Err(Error::mismatch("residual length", basis.rows(), residual.len()));
    }
    // Bit `s - 1 - k` of the mask holds h_k, so ascending masks visit h in
    // lexicographic order and the first strict minimum wins ties.
    let decode = |mask: u32| -> Vec<bool> { (0..s).map(|k| mask >> (s - 1 - k) & 1 == 1).collect() };
    let mut best: Option<(u32, T)> = None;
    for mask in 0u32..(1u32 << s) {
        if mask.count_ones() as usize > budget {
            continue;
        }
        let value = binary_objective(basis, residual, &decode(mask));
        if best.is_none_or(|(_, b)| value < b) {
            best = Some((mask, value));
        }
    }
    let (mask, value) = best.expect("the empty selection is always feasible");
    Ok((decode(mask), value))
}

/// Number of ON entries per column of a selection matrix.
pub fn l0_per_column(weights: &ndarray::Array2<bool>) -> Vec<usize> {
    weights
        .axis_iter(Axis(1))
        .map(|c| c.iter().filter(|&&b| b).count())
        .collect()
}
