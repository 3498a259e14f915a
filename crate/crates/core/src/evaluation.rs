//! Scoring a disaggregation against sub-metered ground truth.
//!
//! An interval counts as ON when the energy there exceeds half the class
//! peak, for the truth and the prediction alike.

use std::fmt;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::data::ApplianceGroundTruth;
use crate::error::{Error, Result};
use crate::model::{ensure_same_shape, DisaggregationModel, EnergyDataset};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub name: String,
    pub rmse: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// `(predicted − true) / true` total energy; `None` when the truth is
    /// all zero.
    pub energy_relative_error: Option<f64>,
    /// Set when precision or recall had an empty denominator and was fixed
    /// by convention (see [`confusion_scores`]).
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<ClassScore>,
    pub aggregate_rmse: f64,
}

impl EvalReport {
    pub fn class(&self, name: &str) -> Option<&ClassScore> {
        self.classes.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16} {:>10} {:>9} {:>9} {:>9} {:>10}",
            "class", "rmse", "precision", "recall", "f1", "energy_err"
        )?;
        for c in &self.classes {
            let energy = c
                .energy_relative_error
                .map_or_else(|| "n/a".to_string(), |e| format!("{e:+.4}"));
            writeln!(
                f,
                "{:<16} {:>10.6} {:>9.4} {:>9.4} {:>9.4} {:>10}{}",
                c.name,
                c.rmse,
                c.precision,
                c.recall,
                c.f1,
                energy,
                if c.degenerate { "  *" } else { "" }
            )?;
        }
        write!(f, "aggregate rmse {:.6}", self.aggregate_rmse)
    }
}

/// Precision, recall, F1 and the degeneracy flag from confusion counts.
///
/// With no predicted positives precision is 0; with no actual positives
/// recall is 0; when both are empty the prediction agrees with the truth and
/// all three scores are 1. Each of these cases sets the flag.
pub fn confusion_scores(tp: usize, fp: usize, fn_: usize) -> (f64, f64, f64, bool) {
    let predicted = tp + fp;
    let actual = tp + fn_;
    if predicted == 0 && actual == 0 {
        return (1.0, 1.0, 1.0, true);
    }
    let precision = if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 };
    let recall = if actual == 0 { 0.0 } else { tp as f64 / actual as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1, predicted == 0 || actual == 0)
}

pub fn rmse<T: Scalar>(a: &Array2<T>, b: &Array2<T>) -> Result<f64> {
    ensure_same_shape("rmse operands", a.dim(), b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    Zip::from(a).and(b).for_each(|&x, &y| {
        let e = (x - y).as_f64();
        sum += e * e;
    });
    Ok((sum / a.len() as f64).sqrt())
}

/// Scores one class given its predicted and true `D x N` energy.
pub fn score_class<T: Scalar>(name: &str, peak: f64, predicted: &Array2<T>, truth: &Array2<T>) -> Result<ClassScore> {
    ensure_same_shape(&format!("prediction for {name:?}"), truth.dim(), predicted)?;
    let threshold = peak / 2.0;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let (mut pred_total, mut true_total) = (0.0, 0.0);
    Zip::from(predicted).and(truth).for_each(|&p, &t| {
        let (p, t) = (p.as_f64(), t.as_f64());
        pred_total += p;
        true_total += t;
        match (p > threshold, t > threshold) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    });
    let (precision, recall, f1, degenerate) = confusion_scores(tp, fp, fn_);
    Ok(ClassScore {
        name: name.to_string(),
        rmse: rmse(predicted, truth)?,
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
        energy_relative_error: (true_total > 0.0).then(|| (pred_total - true_total) / true_total),
        degenerate,
    })
}

/// One predicted class: name, peak, and `D x N` energy.
pub struct ClassPrediction<'a, T> {
    pub name: &'a str,
    pub peak: f64,
    pub energy: &'a Array2<T>,
}

/// Scores precomputed class reconstructions. Every prediction needs a truth
/// entry of the same name and vice versa.
pub fn evaluate_predictions<T: Scalar>(
    predictions: &[ClassPrediction<'_, T>],
    truth: &ApplianceGroundTruth<T>,
    data: &Array2<T>,
    reconstruction: &Array2<T>,
) -> Result<EvalReport> {
    let mut unmatched: Vec<String> = predictions
        .iter()
        .filter(|p| truth.get(p.name).is_none())
        .map(|p| p.name.to_string())
        .collect();
    unmatched.extend(
        truth
            .names()
            .iter()
            .filter(|n| !predictions.iter().any(|p| p.name == n.as_str()))
            .cloned(),
    );
    if !unmatched.is_empty() {
        return Err(Error::ClassMismatch(unmatched));
    }
    let classes = predictions
        .iter()
        .map(|p| score_class(p.name, p.peak, p.energy, truth.get(p.name).expect("matched above")))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport {
        classes,
        aggregate_rmse: rmse(data, reconstruction)?,
    })
}

pub fn evaluate<T: Scalar>(
    model: &DisaggregationModel<T>,
    truth: &ApplianceGroundTruth<T>,
    data: &EnergyDataset<T>,
) -> Result<EvalReport> {
    let energies: Vec<Array2<T>> = model.shiftable.iter().map(|c| c.reconstruction()).collect();
    let predictions: Vec<_> = model
        .shiftable
        .iter()
        .zip(&energies)
        .map(|(c, e)| ClassPrediction {
            name: &c.name,
            peak: c.peak.as_f64(),
            energy: e,
        })
        .collect();
    evaluate_predictions(&predictions, truth, data.values(), &model.reconstruct()?)
}
