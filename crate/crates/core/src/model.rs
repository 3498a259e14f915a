//! Data and factor types shared by training, evaluation and I/O.

use ndarray::{Array1, Array2, ArrayView1, ArrayViewMut1, Axis};

use crate::basis::SparseBinaryBasis;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A `D x N` matrix of non-negative energy readings, one column per day.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDataset<T> {
    values: Array2<T>,
    interval_minutes: u32,
    day_labels: Vec<String>,
}

impl<T: Scalar> EnergyDataset<T> {
    pub fn new(values: Array2<T>, interval_minutes: u32, day_labels: Vec<String>) -> Result<Self> {
        if interval_minutes == 0 {
            return Err(Error::InvalidData("interval_minutes must be positive".into()));
        }
        if day_labels.len() != values.ncols() {
            return Err(Error::mismatch(
                "day labels",
                values.ncols(),
                day_labels.len(),
            ));
        }
        if let Some(((d, n), v)) = values
            .indexed_iter()
            .find(|(_, v)| !(v.is_finite() && **v >= T::zero()))
        {
            return Err(Error::InvalidData(format!(
                "entry ({d}, {n}) = {v} is not a finite non-negative reading"
            )));
        }
        Ok(Self {
            values,
            interval_minutes,
            day_labels,
        })
    }

    /// Wraps a bare matrix with numbered day labels and an interval inferred
    /// from a 24-hour day where possible.
    pub fn from_matrix(values: Array2<T>) -> Result<Self> {
        let interval = if values.nrows() > 0 && 1440 % values.nrows() == 0 {
            (1440 / values.nrows()) as u32
        } else {
            1
        };
        let labels = (0..values.ncols()).map(|n| format!("day{n}")).collect();
        Self::new(values, interval, labels)
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn interval_minutes(&self) -> u32 {
        self.interval_minutes
    }

    pub fn day_labels(&self) -> &[String] {
        &self.day_labels
    }

    /// Number of intervals per day.
    pub fn d(&self) -> usize {
        self.values.nrows()
    }

    /// Number of days.
    pub fn n(&self) -> usize {
        self.values.ncols()
    }
}

/// Real-valued fixed-load factors: `basis` is `D x |F|`, `weights` is `|F| x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLoadFactors<T> {
    pub basis: Array2<T>,
    pub weights: Array2<T>,
}

impl<T: Scalar> FixedLoadFactors<T> {
    pub fn zeros(d: usize, rank: usize, n: usize) -> Self {
        Self {
            basis: Array2::zeros((d, rank)),
            weights: Array2::zeros((rank, n)),
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn reconstruction(&self) -> Array2<T> {
        self.basis.dot(&self.weights)
    }
}

/// One shiftable appliance class with binary weights over a fixed sparse basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftableLoadClass<T> {
    pub name: String,
    pub peak: T,
    pub l0_budget: usize,
    basis: SparseBinaryBasis,
    /// `S x N` selection matrix.
    pub weights: Array2<bool>,
}

impl<T: Scalar> ShiftableLoadClass<T> {
    /// A class with every weight OFF.
    pub fn new(name: impl Into<String>, peak: T, l0_budget: usize, basis: SparseBinaryBasis, n: usize) -> Self {
        let s = basis.columns();
        Self {
            name: name.into(),
            peak,
            l0_budget,
            basis,
            weights: Array2::from_elem((s, n), false),
        }
    }

    pub fn basis(&self) -> &SparseBinaryBasis {
        &self.basis
    }

    /// Count of ON weights for day `n`.
    pub fn l0(&self, n: usize) -> usize {
        self.weights.column(n).iter().filter(|&&b| b).count()
    }

    /// Adds `peak * W h(n)` into `out`.
    pub fn add_contribution(&self, n: usize, mut out: ArrayViewMut1<T>) {
        add_selection(&self.basis, self.peak, self.weights.column(n), &mut out);
    }

    pub fn contribution(&self, n: usize) -> Array1<T> {
        let mut out = Array1::zeros(self.basis.rows());
        self.add_contribution(n, out.view_mut());
        out
    }

    /// The class's `D x N` share of the reconstruction.
    pub fn reconstruction(&self) -> Array2<T> {
        let mut out = Array2::zeros((self.basis.rows(), self.weights.ncols()));
        for (n, col) in out.axis_iter_mut(Axis(1)).enumerate() {
            self.add_contribution(n, col);
        }
        out
    }

    fn check(&self, d: usize, n: usize) -> Result<()> {
        let component = format!("shiftable class {:?}", self.name);
        if self.basis.rows() != d {
            return Err(Error::mismatch(format!("{component} basis rows"), d, self.basis.rows()));
        }
        if self.weights.dim() != (self.basis.columns(), n) {
            return Err(Error::mismatch(
                format!("{component} weights"),
                format!("{}x{}", self.basis.columns(), n),
                format!("{}x{}", self.weights.nrows(), self.weights.ncols()),
            ));
        }
        Ok(())
    }
}

pub(crate) fn add_selection<T: Scalar>(
    basis: &SparseBinaryBasis,
    peak: T,
    selection: ArrayView1<bool>,
    out: &mut ArrayViewMut1<T>,
) {
    for (k, _) in selection.iter().enumerate().filter(|(_, &on)| on) {
        for &d in basis.support(k) {
            out[d] += peak;
        }
    }
}

/// Fixed-load factors plus an ordered list of shiftable classes.
#[derive(Debug, Clone, PartialEq)]
pub struct DisaggregationModel<T> {
    pub fixed: FixedLoadFactors<T>,
    pub shiftable: Vec<ShiftableLoadClass<T>>,
}

impl<T: Scalar> DisaggregationModel<T> {
    /// `(D, N)` after checking that every component agrees on them.
    pub fn dims(&self) -> Result<(usize, usize)> {
        let (d, rank) = self.fixed.basis.dim();
        let (rank_w, n) = self.fixed.weights.dim();
        if rank != rank_w {
            return Err(Error::mismatch("fixed-load weights rows", rank, rank_w));
        }
        for class in &self.shiftable {
            class.check(d, n)?;
        }
        Ok((d, n))
    }

    pub fn fixed_reconstruction(&self) -> Array2<T> {
        self.fixed.reconstruction()
    }

    /// Sum of all shiftable contributions, `Σ_j p_j W_j H_j`.
    pub fn shiftable_reconstruction(&self) -> Result<Array2<T>> {
        let (d, n) = self.dims()?;
        let mut out = Array2::zeros((d, n));
        for (n, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            for class in &self.shiftable {
                class.add_contribution(n, col.view_mut());
            }
        }
        Ok(out)
    }

    /// `X̃ = W^f H^f + Σ_j p_j W_j H_j`.
    pub fn reconstruct(&self) -> Result<Array2<T>> {
        self.dims()?;
        let mut out = self.fixed_reconstruction();
        for (n, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            for class in &self.shiftable {
                class.add_contribution(n, col.view_mut());
            }
        }
        Ok(out)
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.shiftable.iter().position(|c| c.name == name)
    }
}

pub(crate) fn ensure_same_shape<T>(what: &str, expected: (usize, usize), found: &Array2<T>) -> Result<()> {
    if found.dim() != expected {
        return Err(Error::mismatch(
            what,
            format!("{}x{}", expected.0, expected.1),
            format!("{}x{}", found.nrows(), found.ncols()),
        ));
    }
    Ok(())
}
