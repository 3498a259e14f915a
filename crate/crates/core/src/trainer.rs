//! Block-coordinate training loop: one multiplicative update of the fixed
//! load per iteration followed by a hill-climbing sweep over every day and
//! every shiftable class.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::SparseBinaryBasis;
use crate::config::{ModelConfig, Order};
use crate::error::{Error, Result};
use crate::fixed::{normalize_basis_columns, normalize_with_compensation, update_fixed_basis, update_fixed_weights};
use crate::hillclimb::{hill_climb, residual_from_parts};
use crate::model::{DisaggregationModel, EnergyDataset, FixedLoadFactors, ShiftableLoadClass};
use crate::objective::objective_between;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitTermination {
    Converged,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Objective before the first iteration and after each one.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub termination: FitTermination,
    /// Not serialized, so that reports of identical runs are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
    pub config: ModelConfig,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

/// State handed to the observer after every iteration.
pub struct IterationEvent<'a, T> {
    pub iteration: usize,
    pub objective: T,
    pub model: &'a DisaggregationModel<T>,
}

/// Builds the starting point for training: fixed-load factors drawn uniformly
/// from `(0, 1]` with the configured seed (basis columns then normalized) and
/// every shiftable weight OFF.
pub fn initial_model<T: Scalar>(d: usize, n: usize, cfg: &ModelConfig) -> Result<DisaggregationModel<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    initial_model_with(d, n, cfg, &mut rng)
}

fn initial_model_with<T: Scalar>(
    d: usize,
    n: usize,
    cfg: &ModelConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DisaggregationModel<T>> {
    cfg.validate()?;
    let rank = cfg.fixed_rank;
    let mut draw = || T::lit(1.0 - rng.random::<f64>());
    let basis = Array2::from_shape_simple_fn((d, rank), &mut draw);
    let weights = Array2::from_shape_simple_fn((rank, n), &mut draw);
    let (basis, _) = normalize_basis_columns(&basis, T::lit(cfg.epsilon));
    let shiftable = cfg
        .classes
        .iter()
        .map(|c| {
            let basis = SparseBinaryBasis::make(c.basis_kind, d, c.pulse_width)?;
            Ok(ShiftableLoadClass::new(c.name.clone(), T::lit(c.peak), c.l0_budget, basis, n))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DisaggregationModel {
        fixed: FixedLoadFactors { basis, weights },
        shiftable,
    })
}

/// Fits a model from the seeded initialization.
pub fn fit<T: Scalar>(data: &EnergyDataset<T>, cfg: &ModelConfig) -> Result<(DisaggregationModel<T>, FitReport)> {
    fit_with(data, cfg, None, |_| {})
}

/// Fits a model, optionally from a caller-supplied starting point, calling
/// `observer` after every iteration.
pub fn fit_with<T: Scalar, F>(
    data: &EnergyDataset<T>,
    cfg: &ModelConfig,
    init: Option<DisaggregationModel<T>>,
    mut observer: F,
) -> Result<(DisaggregationModel<T>, FitReport)>
where
    F: FnMut(&IterationEvent<T>),
{
    cfg.validate()?;
    let start = Instant::now();
    let x = data.values();
    let (d, n) = x.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut model = match init {
        Some(m) => m,
        None => initial_model_with(d, n, cfg, &mut rng)?,
    };
    if model.dims()? != (d, n) {
        return Err(Error::mismatch(
            "initial model",
            format!("{d}x{n}"),
            format!("{:?}", model.dims()?),
        ));
    }
    if model.shiftable.len() != cfg.classes.len() {
        return Err(Error::mismatch("initial model classes", cfg.classes.len(), model.shiftable.len()));
    }

    let epsilon = T::lit(cfg.epsilon);
    let mut previous = objective_between(x, &model.reconstruct()?)?.total;
    check_finite(previous, 0)?;
    let mut trace = vec![previous.as_f64()];
    let mut termination = FitTermination::MaxIterations;
    let mut iterations_run = 0;

    for iteration in 1..=cfg.max_iterations {
        step(x, &mut model, cfg, &mut rng)?;
        let phi = objective_between(x, &model.reconstruct()?)?.total;
        check_finite(phi, iteration)?;
        trace.push(phi.as_f64());
        iterations_run = iteration;
        log::debug!("iteration {iteration}: objective {phi}");
        observer(&IterationEvent {
            iteration,
            objective: phi,
            model: &model,
        });
        let change = (phi - previous).abs() / previous.max(epsilon);
        previous = phi;
        if change < T::lit(cfg.convergence_tol) {
            termination = FitTermination::Converged;
            break;
        }
    }

    let report = FitReport {
        objective_trace: trace,
        iterations_run,
        termination,
        wall_time: start.elapsed(),
        config: cfg.clone(),
    };
    log::info!(
        "fit finished after {} iterations ({:?}), objective {}",
        report.iterations_run,
        report.termination,
        report.final_objective()
    );
    Ok((model, report))
}

fn check_finite<T: Scalar>(phi: T, iteration: usize) -> Result<()> {
    if phi.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite {
            iteration,
            value: phi.as_f64(),
        })
    }
}

/// One outer iteration: basis update, normalization, weight update, then the
/// shiftable sweep.
fn step<T: Scalar>(
    x: &Array2<T>,
    model: &mut DisaggregationModel<T>,
    cfg: &ModelConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let epsilon = T::lit(cfg.epsilon);
    model.fixed.basis = update_fixed_basis(x, model, cfg.update_rule, epsilon)?;
    normalize_with_compensation(&mut model.fixed, epsilon);
    model.fixed.weights = update_fixed_weights(x, model, cfg.update_rule, epsilon)?;
    shiftable_sweep(x, model, cfg, rng);
    Ok(())
}

/// Replaces every `h_j(n)` with the hill-climbing solution for its residual.
///
/// Days are independent once the fixed load is frozen, so they run in
/// parallel; classes within a day are visited in order, each seeing the
/// others' latest selections. Random orders are drawn up front so the result
/// does not depend on scheduling.
fn shiftable_sweep<T: Scalar>(x: &Array2<T>, model: &mut DisaggregationModel<T>, cfg: &ModelConfig, rng: &mut ChaCha8Rng) {
    let classes = model.shiftable.len();
    if classes == 0 {
        return;
    }
    let n = x.ncols();
    let mut days: Vec<usize> = (0..n).collect();
    if cfg.sample_order == Order::Random {
        days.shuffle(rng);
    }
    let class_orders: Vec<Vec<usize>> = days
        .iter()
        .map(|_| {
            let mut order: Vec<usize> = (0..classes).collect();
            if cfg.class_order == Order::Random {
                order.shuffle(rng);
            }
            order
        })
        .collect();

    let fixed = model.fixed_reconstruction();
    let parts: Vec<(&SparseBinaryBasis, T)> = model.shiftable.iter().map(|c| (c.basis(), c.peak)).collect();
    let budgets: Vec<usize> = model.shiftable.iter().map(|c| c.l0_budget).collect();
    let current = &model.shiftable;

    let updated: Vec<(usize, Vec<Array1<bool>>)> = days
        .par_iter()
        .zip(class_orders.par_iter())
        .map(|(&day, order)| {
            let mut selections: Vec<Array1<bool>> =
                current.iter().map(|c| c.weights.column(day).to_owned()).collect();
            for &j in order {
                let r = residual_from_parts(x.column(day), fixed.column(day), &parts, &selections, j);
                let (h, _) = hill_climb(parts[j].0, &r, budgets[j]).expect("dimensions checked by the caller");
                selections[j] = Array1::from(h);
            }
            (day, selections)
        })
        .collect();

    for (day, selections) in updated {
        for (class, sel) in model.shiftable.iter_mut().zip(selections) {
            class.weights.column_mut(day).assign(&sel);
        }
    }
}

/// Weights of every class as 0/1 scalars, `S x N`.
pub fn weights_as_scalars<T: Scalar>(class: &ShiftableLoadClass<T>) -> Array2<T> {
    class.weights.mapv(|b| if b { T::one() } else { T::zero() })
}

/// Per-day ON counts for a class.
pub fn on_counts<T>(class: &ShiftableLoadClass<T>) -> Vec<usize> {
    class
        .weights
        .axis_iter(Axis(1))
        .map(|c| c.iter().filter(|&&b| b).count())
        .collect()
}
