//! Training configuration and its validation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::basis::BasisKind;
use crate::error::{Error, Result};

/// Which multiplicative rule drives the fixed-load factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateRule {
    /// `X ⊘ X̃` ratio updates with all-ones denominators (generalized KL form).
    #[default]
    PaperKl,
    /// Lee–Seung Euclidean updates.
    Frobenius,
}

impl std::str::FromStr for UpdateRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-kl" => Ok(UpdateRule::PaperKl),
            "frobenius" => Ok(UpdateRule::Frobenius),
            other => Err(Error::InvalidConfig(format!("unknown update rule {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    #[default]
    Sequential,
    Random,
}

impl std::str::FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sequential" => Ok(Order::Sequential),
            "random" => Ok(Order::Random),
            other => Err(Error::InvalidConfig(format!("unknown order {other:?}"))),
        }
    }
}

/// One shiftable appliance class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassConfig {
    pub name: String,
    /// Energy drawn per ON interval.
    pub peak: f64,
    /// Maximum ON selections per day.
    pub l0_budget: usize,
    #[serde(default)]
    pub basis_kind: BasisKind,
    #[serde(default = "default_pulse_width")]
    pub pulse_width: usize,
}

impl ClassConfig {
    pub fn new(name: impl Into<String>, peak: f64, l0_budget: usize) -> Self {
        Self {
            name: name.into(),
            peak,
            l0_budget,
            basis_kind: BasisKind::Identity,
            pulse_width: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak.is_finite() && self.peak > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "class {:?}: peak must be positive, got {}",
                self.name, self.peak
            )));
        }
        if self.l0_budget == 0 {
            return Err(Error::InvalidConfig(format!(
                "class {:?}: l0_budget must be at least 1",
                self.name
            )));
        }
        if self.pulse_width == 0 {
            return Err(Error::InvalidConfig(format!(
                "class {:?}: pulse_width must be at least 1",
                self.name
            )));
        }
        Ok(())
    }
}

fn default_pulse_width() -> usize {
    1
}

/// Duty-cycle parameters of the four sub-metered appliances in the reference
/// household (peak kWh per minute, maximum ON minutes per day).
pub fn reference_household_classes() -> Vec<ClassConfig> {
    vec![
        ClassConfig::new("furnace", 0.465, 150),
        ClassConfig::new("washer/dryer", 2.50, 20),
        ClassConfig::new("oven", 5.00, 10),
        ClassConfig::new("kitchen apps", 0.37, 60),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Number of fixed-load basis vectors.
    pub fixed_rank: usize,
    #[serde(rename = "class")]
    pub classes: Vec<ClassConfig>,
    pub update_rule: UpdateRule,
    /// Floor applied to the reconstruction and to every update denominator.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Stop once the relative change in the objective falls below this.
    pub convergence_tol: f64,
    pub sample_order: Order,
    pub class_order: Order,
    pub rng_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            fixed_rank: 1,
            classes: Vec::new(),
            update_rule: UpdateRule::PaperKl,
            epsilon: 1e-12,
            max_iterations: 200,
            convergence_tol: 1e-6,
            sample_order: Order::Sequential,
            class_order: Order::Sequential,
            rng_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn with_classes(classes: Vec<ClassConfig>) -> Self {
        Self {
            classes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fixed_rank == 0 {
            return Err(Error::InvalidConfig("fixed_rank must be at least 1".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "convergence_tol must be non-negative, got {}",
                self.convergence_tol
            )));
        }
        validate_classes(&self.classes)
    }
}

pub(crate) fn validate_classes(classes: &[ClassConfig]) -> Result<()> {
    let mut seen = HashSet::new();
    for class in classes {
        class.validate()?;
        if !seen.insert(class.name.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "duplicate class name {:?}",
                class.name
            )));
        }
    }
    Ok(())
}
