use disagg_core::objective::frobenius_objective;
use disagg_core::synth::{generate, FixedProfile, Placement, SynthClass, SynthSpec};
use disagg_core::Error;
use proptest::prelude::*;

fn class(name: &str, peak: f64, l0_budget: usize, pulse_width: usize, on_count: f64) -> SynthClass {
    SynthClass {
        name: name.into(),
        peak,
        l0_budget,
        pulse_width,
        on_count,
        placement: Placement::Uniform,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_weights_respect_budgets_and_never_overlap(
        seed in any::<u64>(),
        width in 1usize..6,
        pulses in 1usize..6,
        sigma in 0.0..0.2f64,
    ) {
        let budget = width * pulses;
        let spec = SynthSpec {
            d: 144,
            n: 4,
            fixed_profile: FixedProfile::Constant { level: 0.2 },
            day_scale_spread: 0.0,
            classes: vec![class("a", 2.0, budget, width, budget as f64 * 0.7), class("b", 0.7, 10, 2, 6.0)],
            noise_sigma: sigma,
            rng_seed: seed,
            start_date: "2019-04-01".into(),
            exclusive_classes: false,
            min_gap: 0,
        };
        let synth = generate::<f64>(&spec).unwrap();
        prop_assert!(synth.dataset.values().iter().all(|&v| v >= 0.0));
        for (c, spec_class) in synth.model.shiftable.iter().zip(&spec.classes) {
            let truth = synth.truth.get(&c.name).unwrap();
            for n in 0..4 {
                prop_assert!(c.l0(n) <= spec_class.l0_budget);
                // Pulses within a class never stack.
                prop_assert!(truth.column(n).iter().all(|&v| v == 0.0 || v == spec_class.peak));
            }
        }
        let again = generate::<f64>(&spec).unwrap();
        prop_assert_eq!(&again.dataset, &synth.dataset);
    }

    #[test]
    fn noiseless_data_equals_its_model(seed in any::<u64>()) {
        let mut spec = SynthSpec::reference_household(2, 0.0, seed);
        spec.d = 720;
        let synth = generate::<f64>(&spec).unwrap();
        prop_assert_eq!(synth.dataset.values(), &synth.model.reconstruct().unwrap());
        prop_assert_eq!(frobenius_objective(synth.dataset.values(), &synth.model).unwrap().total, 0.0);
    }
}

#[test]
fn single_noiseless_source_is_its_ground_truth() {
    let spec = SynthSpec {
        d: 60,
        n: 3,
        fixed_profile: FixedProfile::Constant { level: 0.0 },
        day_scale_spread: 0.0,
        classes: vec![class("only", 1.5, 12, 3, 9.0)],
        noise_sigma: 0.0,
        rng_seed: 1,
        start_date: "2019-04-01".into(),
        exclusive_classes: false,
        min_gap: 0,
    };
    let synth = generate::<f64>(&spec).unwrap();
    assert_eq!(synth.dataset.values(), synth.truth.get("only").unwrap());
}

#[test]
fn reference_household_has_the_expected_shape() {
    let spec = SynthSpec::reference_household(15, 0.01, 0);
    let synth = generate::<f64>(&spec).unwrap();
    assert_eq!(synth.dataset.values().dim(), (1440, 15));
    let mut names: Vec<&str> = synth.truth.names().iter().map(String::as_str).collect();
    names.sort_unstable();
    assert_eq!(names, ["furnace", "kitchen apps", "oven", "washer/dryer"]);
}

#[test]
fn impossible_placement_is_an_error() {
    let spec = SynthSpec {
        d: 10,
        n: 1,
        fixed_profile: FixedProfile::Constant { level: 0.0 },
        day_scale_spread: 0.0,
        classes: vec![class("a", 1.0, 10, 5, 10.0), class("b", 1.0, 10, 5, 10.0)],
        noise_sigma: 0.0,
        rng_seed: 0,
        start_date: "2019-04-01".into(),
        exclusive_classes: true,
        min_gap: 1,
    };
    assert!(matches!(generate::<f64>(&spec), Err(Error::Infeasible { .. } | Error::InvalidConfig(_))));
}
