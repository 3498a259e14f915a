//! Synthetic households with known ground truth: a scaled daily fixed-load
//! profile plus rectangular duty-cycle pulses per appliance, with optional
//! Gaussian noise.

use chrono::{Days, NaiveDate};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::basis::SparseBinaryBasis;
use crate::config::{ClassConfig, ModelConfig};
use crate::data::ApplianceGroundTruth;
use crate::error::{Error, Result};
use crate::model::{DisaggregationModel, EnergyDataset, FixedLoadFactors, ShiftableLoadClass};
use crate::scalar::Scalar;

const PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FixedProfile {
    Constant { level: f64 },
    /// `base` plus a raised-cosine hump peaking at `peak_at` (fraction of the
    /// day).
    SinusoidalDay {
        base: f64,
        amplitude: f64,
        #[serde(default = "default_peak_at")]
        peak_at: f64,
    },
    Explicit { values: Vec<f64> },
}

fn default_peak_at() -> f64 {
    0.8
}

impl Default for FixedProfile {
    fn default() -> Self {
        FixedProfile::SinusoidalDay {
            base: 0.3,
            amplitude: 0.4,
            peak_at: default_peak_at(),
        }
    }
}

impl FixedProfile {
    pub fn values(&self, d: usize) -> Result<Vec<f64>> {
        let v = match self {
            FixedProfile::Constant { level } => vec![*level; d],
            FixedProfile::SinusoidalDay { base, amplitude, peak_at } => (0..d)
                .map(|i| {
                    let t = i as f64 / d as f64 - peak_at;
                    base + amplitude * 0.5 * (1.0 + (std::f64::consts::TAU * t).cos())
                })
                .collect(),
            FixedProfile::Explicit { values } => {
                if values.len() != d {
                    return Err(Error::mismatch("explicit fixed profile", d, values.len()));
                }
                values.clone()
            }
        };
        if v.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidConfig("fixed profile must be finite and non-negative".into()));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Placement {
    #[default]
    Uniform,
    /// Pulse starts drawn from a normal around `center` with deviation
    /// `spread`, both as fractions of the day.
    Clustered { center: f64, spread: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthClass {
    pub name: String,
    pub peak: f64,
    /// Maximum ON intervals per day.
    pub l0_budget: usize,
    /// Length of one duty cycle, in intervals.
    #[serde(default = "one")]
    pub pulse_width: usize,
    /// Expected ON intervals per day.
    pub on_count: f64,
    #[serde(default)]
    pub placement: Placement,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    /// Intervals per day; must divide 1440.
    pub d: usize,
    /// Number of days.
    pub n: usize,
    #[serde(default)]
    pub fixed_profile: FixedProfile,
    /// Each day's fixed load is the profile times a factor drawn from
    /// `[1 - spread, 1 + spread]`.
    #[serde(default = "default_day_spread")]
    pub day_scale_spread: f64,
    #[serde(default, rename = "class")]
    pub classes: Vec<SynthClass>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// First day label, `YYYY-MM-DD`.
    #[serde(default = "default_start")]
    pub start_date: String,
    /// Keep pulses of different classes apart by at least `min_gap`
    /// intervals.
    #[serde(default)]
    pub exclusive_classes: bool,
    #[serde(default)]
    pub min_gap: usize,
}

fn default_day_spread() -> f64 {
    0.1
}

fn default_start() -> String {
    "2019-04-01".into()
}

/// Generated data together with what produced it.
#[derive(Debug, Clone)]
pub struct Synthetic<T> {
    pub dataset: EnergyDataset<T>,
    pub truth: ApplianceGroundTruth<T>,
    pub model: DisaggregationModel<T>,
}

impl SynthSpec {
    /// Full-day, minute-resolution household with the four reference
    /// appliances, pulses kept apart across classes.
    pub fn reference_household(n: usize, noise_sigma: f64, rng_seed: u64) -> Self {
        let class = |name: &str, peak, l0_budget, pulse_width, on_count, placement| SynthClass {
            name: name.into(),
            peak,
            l0_budget,
            pulse_width,
            on_count,
            placement,
        };
        Self {
            d: 1440,
            n,
            fixed_profile: FixedProfile::default(),
            day_scale_spread: default_day_spread(),
            classes: vec![
                class("oven", 5.00, 10, 5, 5.0, Placement::Clustered { center: 0.75, spread: 0.03 }),
                class(
                    "washer/dryer",
                    2.50,
                    20,
                    10,
                    10.0,
                    Placement::Clustered { center: 0.94, spread: 0.02 },
                ),
                class("furnace", 0.465, 150, 10, 150.0, Placement::Uniform),
                class(
                    "kitchen apps",
                    0.37,
                    60,
                    5,
                    30.0,
                    Placement::Clustered { center: 0.35, spread: 0.1 },
                ),
            ],
            noise_sigma,
            rng_seed,
            start_date: default_start(),
            exclusive_classes: true,
            min_gap: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || 1440 % self.d != 0 {
            return Err(Error::InvalidConfig(format!("d = {} must divide 1440", self.d)));
        }
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise_sigma must be non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.day_scale_spread) {
            return Err(Error::InvalidConfig("day_scale_spread must lie in [0, 1)".into()));
        }
        self.start()?;
        self.fixed_profile.values(self.d)?;
        let cfg = ModelConfig::with_classes(self.model_classes());
        cfg.validate()?;
        for c in &self.classes {
            let max_pulses = c.l0_budget / c.pulse_width;
            if c.pulse_width > self.d || max_pulses == 0 {
                return Err(Error::Infeasible {
                    class: c.name.clone(),
                    reason: format!(
                        "pulse width {} does not fit the budget {} within {} intervals",
                        c.pulse_width, c.l0_budget, self.d
                    ),
                });
            }
            let capacity = (max_pulses * c.pulse_width) as f64;
            if !(c.on_count.is_finite() && c.on_count >= 0.0 && c.on_count <= capacity) {
                return Err(Error::InvalidConfig(format!(
                    "class {:?}: on_count {} must lie in [0, {capacity}]",
                    c.name, c.on_count
                )));
            }
        }
        Ok(())
    }

    fn start(&self) -> Result<NaiveDate> {
        NaiveDate::parse_from_str(&self.start_date, "%Y-%m-%d")
            .map_err(|_| Error::InvalidConfig(format!("start_date {:?} is not YYYY-MM-DD", self.start_date)))
    }

    /// Identity-basis classes matching the generator, for training.
    pub fn model_classes(&self) -> Vec<ClassConfig> {
        self.classes
            .iter()
            .map(|c| ClassConfig::new(c.name.clone(), c.peak, c.l0_budget))
            .collect()
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig::with_classes(self.model_classes())
    }
}

fn free(occupied: &[bool], start: usize, width: usize, gap: usize) -> bool {
    let lo = start.saturating_sub(gap);
    let hi = (start + width + gap).min(occupied.len());
    occupied[lo..hi].iter().all(|&o| !o)
}

fn draw_start(rng: &mut ChaCha8Rng, placement: Placement, d: usize, width: usize) -> usize {
    let last = d - width;
    match placement {
        Placement::Uniform => rng.random_range(0..=last),
        Placement::Clustered { center, spread } => {
            let normal = Normal::new(center * d as f64, (spread * d as f64).max(1e-9)).expect("finite parameters");
            let s = normal.sample(rng).round();
            s.clamp(0.0, last as f64) as usize
        }
    }
}

/// Draws a dataset from `spec`. With `noise_sigma = 0` the dataset equals
/// the returned model's reconstruction exactly.
pub fn generate<T: Scalar>(spec: &SynthSpec) -> Result<Synthetic<T>> {
    spec.validate()?;
    let (d, n) = (spec.d, spec.n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);

    let profile = spec.fixed_profile.values(d)?;
    let norm = profile.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scales: Vec<f64> = (0..n)
        .map(|_| 1.0 + spec.day_scale_spread * (2.0 * rng.random::<f64>() - 1.0))
        .collect();
    let fixed = if norm > 0.0 {
        FixedLoadFactors {
            basis: Array2::from_shape_fn((d, 1), |(i, _)| T::lit(profile[i] / norm)),
            weights: Array2::from_shape_fn((1, n), |(_, j)| T::lit(norm * scales[j])),
        }
    } else {
        FixedLoadFactors {
            basis: Array2::from_elem((d, 1), T::lit(1.0 / (d as f64).sqrt())),
            weights: Array2::zeros((1, n)),
        }
    };

    let mut classes: Vec<ShiftableLoadClass<T>> = spec
        .classes
        .iter()
        .map(|c| ShiftableLoadClass::new(c.name.clone(), T::lit(c.peak), c.l0_budget, SparseBinaryBasis::identity(d), n))
        .collect();

    for day in 0..n {
        let mut shared = vec![false; d];
        for (c, class) in spec.classes.iter().zip(classes.iter_mut()) {
            let max_pulses = (c.l0_budget / c.pulse_width) as u64;
            let p = (c.on_count / (max_pulses as f64 * c.pulse_width as f64)).clamp(0.0, 1.0);
            let pulses = Binomial::new(max_pulses, p).expect("probability in [0, 1]").sample(&mut rng);
            let mut own = vec![false; d];
            for _ in 0..pulses {
                let start = (0..PLACEMENT_ATTEMPTS)
                    .map(|_| draw_start(&mut rng, c.placement, d, c.pulse_width))
                    .find(|&s| {
                        free(&own, s, c.pulse_width, 1) && (!spec.exclusive_classes || free(&shared, s, c.pulse_width, spec.min_gap))
                    })
                    .ok_or_else(|| Error::Infeasible {
                        class: c.name.clone(),
                        reason: format!("could not place {pulses} pulses of width {} on day {day}", c.pulse_width),
                    })?;
                for slot in start..start + c.pulse_width {
                    own[slot] = true;
                    shared[slot] = true;
                    class.weights[[slot, day]] = true;
                }
            }
        }
    }

    let model = DisaggregationModel { fixed, shiftable: classes };
    let mut values = model.reconstruct()?;
    if spec.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, spec.noise_sigma).expect("finite sigma");
        values.mapv_inplace(|v| (v + T::lit(noise.sample(&mut rng))).max(T::zero()));
    }

    let start = spec.start()?;
    let labels = (0..n)
        .map(|i| {
            start
                .checked_add_days(Days::new(i as u64))
                .map(|d| d.format("%Y-%m-%d").to_string())
                .ok_or_else(|| Error::InvalidConfig("date overflow".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let dataset = EnergyDataset::new(values, (1440 / d) as u32, labels)?;
    let truth = ApplianceGroundTruth::new(
        model.shiftable.iter().map(|c| c.name.clone()).collect(),
        model.shiftable.iter().map(|c| c.reconstruction()).collect(),
    )?;
    Ok(Synthetic { dataset, truth, model })
}

/// Profile of the fixed load for one day of a synthetic model.
pub fn fixed_day<T: Scalar>(model: &DisaggregationModel<T>, day: usize) -> Array1<T> {
    model.fixed.basis.dot(&model.fixed.weights.column(day))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::frobenius_objective;

    fn single_class(sigma: f64) -> SynthSpec {
        SynthSpec {
            d: 48,
            n: 3,
            fixed_profile: FixedProfile::Constant { level: 0.0 },
            day_scale_spread: 0.0,
            classes: vec![SynthClass {
                name: "oven".into(),
                peak: 2.0,
                l0_budget: 6,
                pulse_width: 3,
                on_count: 3.0,
                placement: Placement::Uniform,
            }],
            noise_sigma: sigma,
            rng_seed: 1,
            start_date: "2019-04-01".into(),
            exclusive_classes: false,
            min_gap: 0,
        }
    }

    #[test]
    fn noiseless_single_source_equals_truth() {
        let s = generate::<f64>(&single_class(0.0)).unwrap();
        assert_eq!(s.dataset.values(), s.truth.get("oven").unwrap());
    }

    #[test]
    fn noiseless_objective_is_zero() {
        let spec = SynthSpec::reference_household(4, 0.0, 3);
        let s = generate::<f64>(&spec).unwrap();
        assert_eq!(frobenius_objective(s.dataset.values(), &s.model).unwrap().total, 0.0);
        assert_eq!(&s.model.reconstruct().unwrap(), s.dataset.values());
    }

    #[test]
    fn reference_shape() {
        let s = generate::<f64>(&SynthSpec::reference_household(15, 0.01, 0)).unwrap();
        assert_eq!((s.dataset.d(), s.dataset.n()), (1440, 15));
        let names: Vec<_> = s.truth.names().to_vec();
        assert_eq!(names, vec!["oven", "washer/dryer", "furnace", "kitchen apps"]);
        assert_eq!(s.dataset.day_labels()[0], "2019-04-01");
        assert!(s.dataset.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn budgets_hold_and_seed_is_deterministic() {
        let spec = SynthSpec::reference_household(6, 0.05, 9);
        let a = generate::<f64>(&spec).unwrap();
        let b = generate::<f64>(&spec).unwrap();
        assert_eq!(a.dataset, b.dataset);
        for class in &a.model.shiftable {
            for day in 0..spec.n {
                assert!(class.l0(day) <= class.l0_budget);
            }
        }
    }

    #[test]
    fn classes_do_not_overlap_when_exclusive() {
        let spec = SynthSpec::reference_household(5, 0.0, 2);
        let s = generate::<f64>(&spec).unwrap();
        for day in 0..spec.n {
            for slot in 0..spec.d {
                let on = s.model.shiftable.iter().filter(|c| c.weights[[slot, day]]).count();
                assert!(on <= 1);
            }
        }
    }

    #[test]
    fn infeasible_placement() {
        let mut spec = single_class(0.0);
        spec.d = 6;
        spec.classes[0].pulse_width = 3;
        spec.classes[0].l0_budget = 6;
        spec.classes[0].on_count = 6.0;
        // Two width-3 pulses that may not touch cannot fit into six slots.
        assert!(matches!(generate::<f64>(&spec), Err(Error::Infeasible { .. })));

        let mut spec = single_class(0.0);
        spec.classes[0].on_count = 7.0;
        assert!(generate::<f64>(&spec).is_err());
    }
}
