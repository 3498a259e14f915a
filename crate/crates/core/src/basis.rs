//! Sparse binary dictionaries for shiftable loads, stored as per-column
//! support sets.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    /// One column per time slot: column `k` is ON only at slot `k`.
    #[default]
    Identity,
    /// Sliding rectangular pulses of a fixed width.
    RectangularPulses,
}

/// A `rows x columns` binary matrix held as the row indices where each column
/// is nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryBasis {
    rows: usize,
    support: Vec<Vec<usize>>,
}

impl SparseBinaryBasis {
    /// Builds a basis from explicit support sets. Indices must lie in
    /// `[0, rows)` and be unique within each set; they are stored sorted.
    pub fn new(rows: usize, support: Vec<Vec<usize>>) -> Result<Self> {
        let mut support = support;
        for (k, set) in support.iter_mut().enumerate() {
            set.sort_unstable();
            if let Some(&last) = set.last() {
                if last >= rows {
                    return Err(Error::InvalidBasis(format!(
                        "column {k} has row index {last} outside [0, {rows})"
                    )));
                }
            }
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidBasis(format!(
                    "column {k} lists a row index twice"
                )));
            }
        }
        Ok(Self { rows, support })
    }

    pub fn identity(rows: usize) -> Self {
        Self {
            rows,
            support: (0..rows).map(|k| vec![k]).collect(),
        }
    }

    /// Column `k` covers rows `[k, k + width)`; there are `rows - width + 1`
    /// columns.
    pub fn rectangular_pulses(rows: usize, width: usize) -> Result<Self> {
        if width == 0 {
            return Err(Error::InvalidBasis("pulse width must be at least 1".into()));
        }
        if width > rows {
            return Err(Error::InvalidBasis(format!(
                "pulse width {width} exceeds {rows} rows"
            )));
        }
        Ok(Self {
            rows,
            support: (0..=rows - width).map(|k| (k..k + width).collect()).collect(),
        })
    }

    pub fn make(kind: BasisKind, rows: usize, pulse_width: usize) -> Result<Self> {
        if rows == 0 {
            return Err(Error::InvalidBasis("basis needs at least one row".into()));
        }
        if pulse_width == 0 {
            return Err(Error::InvalidBasis("pulse width must be at least 1".into()));
        }
        if pulse_width > rows {
            return Err(Error::InvalidBasis(format!(
                "pulse width {pulse_width} exceeds {rows} rows"
            )));
        }
        match kind {
            BasisKind::Identity => Ok(Self::identity(rows)),
            BasisKind::RectangularPulses => Self::rectangular_pulses(rows, pulse_width),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self, column: usize) -> &[usize] {
        &self.support[column]
    }

    pub fn support_sets(&self) -> &[Vec<usize>] {
        &self.support
    }

    pub fn to_dense<T: Scalar>(&self) -> Array2<T> {
        let mut dense = Array2::zeros((self.rows, self.columns()));
        for (k, set) in self.support.iter().enumerate() {
            for &d in set {
                dense[[d, k]] = T::one();
            }
        }
        dense
    }

    /// Computes `W h` for a binary selection `h`.
    pub fn apply<T: Scalar>(&self, selection: &[bool]) -> Array1<T> {
        let mut out = Array1::zeros(self.rows);
        for (k, _) in selection.iter().enumerate().filter(|(_, &on)| on) {
            for &d in &self.support[k] {
                out[d] += T::one();
            }
        }
        out
    }
}
