use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn disagg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disagg"))
        .args(args)
        .env_remove("DISAGG_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL_SPEC: &str = r#"
d = 96
n = 15
noise_sigma = 0.0
rng_seed = 3
exclusive_classes = true
min_gap = 3

[fixed_profile]
kind = "sinusoidal-day"
base = 0.3
amplitude = 0.4

[[class]]
name = "heater"
peak = 3.0
l0_budget = 8
pulse_width = 4
on_count = 8.0

[[class]]
name = "pump"
peak = 1.2
l0_budget = 6
pulse_width = 3
on_count = 6.0
"#;

const SMALL_CONFIG: &str = r#"
max_iterations = 100
convergence_tol = 1e-9

[[class]]
name = "heater"
peak = 3.0
l0_budget = 8

[[class]]
name = "pump"
peak = 1.2
l0_budget = 6
"#;

/// Synthesizes the small household into `dir/syn`.
fn small_synth(dir: &Path) -> PathBuf {
    let spec = dir.join("spec.toml");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let out = dir.join("syn");
    let o = disagg(&["synth", p(&spec), "--out-dir", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, SMALL_CONFIG).unwrap();
    path
}

fn small_fit(dir: &Path, name: &str, extra: &[&str]) -> (PathBuf, Output) {
    let syn = small_synth(dir);
    let cfg = small_config(dir);
    let out = dir.join(name);
    let series = syn.join("series.csv");
    let mut args = vec!["fit", p(&series), p(&cfg), "--out-dir", p(&out), "--interval", "15"];
    args.extend_from_slice(extra);
    let o = disagg(&args);
    (out, o)
}

fn trace(dir: &Path) -> Vec<f64> {
    fs::read_to_string(dir.join("objective_trace.csv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn synth_writes_dataset_and_truth_model() {
    let dir = TempDir::new().unwrap();
    let out = small_synth(dir.path());
    for file in ["series.csv", "truth_model/model.json", "truth_model/data.csv", "truth_model/weights_0_heater.csv"] {
        assert!(out.join(file).exists(), "{file}");
    }
}

#[test]
fn reference_synth_gives_a_day_by_minute_matrix() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ref");
    let spec = configs().join("synthetic_household.toml");
    let o = disagg(&["synth", p(&spec), "--out-dir", p(&out)]);
    assert!(o.status.success());
    let text = fs::read_to_string(out.join("truth_model/data.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 16);
    assert_eq!(lines.count(), 1440);
}

#[test]
fn bad_spec_leaves_no_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("never");
    let o = disagg(&["synth", p(&dir.path().join("missing.toml")), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());

    let spec = dir.path().join("crowded.toml");
    fs::write(
        &spec,
        "d = 10\nn = 1\nexclusive_classes = true\nmin_gap = 2\n\
         [[class]]\nname = \"a\"\npeak = 1.0\nl0_budget = 10\npulse_width = 5\non_count = 10.0\n\
         [[class]]\nname = \"b\"\npeak = 1.0\nl0_budget = 10\npulse_width = 5\non_count = 10.0\n",
    )
    .unwrap();
    let o = disagg(&["synth", p(&spec), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn noiseless_fit_drives_the_objective_to_zero() {
    let dir = TempDir::new().unwrap();
    let (out, o) = small_fit(dir.path(), "fit", &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = trace(&out);
    assert!(t.last().unwrap() < &(1e-6 * t[0]), "trace {t:?}");
    for file in ["report.json", "model.json", "data.csv", "reconstruction.csv", "fixed_load.csv", "shiftable_1_pump.csv"] {
        assert!(out.join(file).exists(), "{file}");
    }
}

#[test]
fn both_update_rules_are_accepted_and_others_are_usage_errors() {
    let dir = TempDir::new().unwrap();
    for rule in ["frobenius", "paper-kl"] {
        let (_, o) = small_fit(dir.path(), rule, &["--update-rule", rule, "--max-iters", "3"]);
        assert!(o.status.success(), "{rule}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let (_, o) = small_fit(dir.path(), "bad", &["--update-rule", "euclid"]);
    assert_eq!(o.status.code(), Some(1));
    let (_, o) = small_fit(dir.path(), "bad", &["--tol=-1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let (out, o) = small_fit(dir.path(), "fit", &["--max-iters", "2", "--tol", "0", "--seed", "9", "--sample-order", "random"]);
    assert!(o.status.success());
    let report = fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"max_iterations\": 2"));
    assert!(report.contains("\"rng_seed\": 9"));
    assert!(report.contains("\"sample_order\": \"random\""));
    assert_eq!(trace(&out).len(), 3);
}

#[test]
fn identical_seeds_give_identical_files() {
    let dir = TempDir::new().unwrap();
    let (a, _) = small_fit(dir.path(), "a", &["--seed", "5", "--class-order", "random"]);
    let (b, _) = small_fit(dir.path(), "b", &["--seed", "5", "--class-order", "random"]);
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 10);
    for name in names {
        assert_eq!(fs::read(a.join(&name)).unwrap(), fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn inputs_are_left_untouched() {
    let dir = TempDir::new().unwrap();
    let syn = small_synth(dir.path());
    let cfg = small_config(dir.path());
    let series = syn.join("series.csv");
    let before = (fs::read(&series).unwrap(), fs::read(&cfg).unwrap());
    let out = dir.path().join("fit");
    assert!(disagg(&["fit", p(&series), p(&cfg), "--out-dir", p(&out), "--interval", "15"]).status.success());
    assert!(disagg(&["eval", p(&out), p(&series)]).status.success());
    assert_eq!(before, (fs::read(&series).unwrap(), fs::read(&cfg).unwrap()));
}

#[test]
fn output_directory_defaults_from_the_environment() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.toml");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_disagg"))
        .args(["synth", p(&spec)])
        .env("DISAGG_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(out.join("series.csv").exists());
}

#[test]
fn eval_of_the_generating_model_is_perfect() {
    let dir = TempDir::new().unwrap();
    let syn = small_synth(dir.path());
    let json = dir.path().join("eval.json");
    let o = disagg(&["eval", p(&syn.join("truth_model")), p(&syn.join("series.csv")), "--json", p(&json)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    for name in ["heater", "pump"] {
        let line = stdout.lines().find(|l| l.starts_with(name)).unwrap();
        let fields: Vec<&str> = line.split_whitespace().collect();
        assert_eq!(fields[4], "1.0000", "{line}");
    }
    assert!(fs::read_to_string(json).unwrap().contains("\"f1\": 1.0"));
}

#[test]
fn eval_with_mismatched_classes_fails() {
    let dir = TempDir::new().unwrap();
    let syn = small_synth(dir.path());
    let series = fs::read_to_string(syn.join("series.csv")).unwrap();
    let renamed = series.replacen("pump", "boiler", 1);
    let truth = dir.path().join("renamed.csv");
    fs::write(&truth, renamed).unwrap();
    let o = disagg(&["eval", p(&syn.join("truth_model")), p(&truth)]);
    assert_eq!(o.status.code(), Some(2));
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("pump") && stderr.contains("boiler"), "{stderr}");
}

#[test]
fn plot_writes_one_panel_per_class_plus_two() {
    let dir = TempDir::new().unwrap();
    let (out, o) = small_fit(dir.path(), "fit", &["--max-iters", "5"]);
    assert!(o.status.success());
    let svg = dir.path().join("day.svg");
    assert!(disagg(&["plot", p(&out), "14", p(&svg)]).status.success());
    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let panels = doc
        .descendants()
        .filter(|n| n.has_tag_name("g") && n.attribute("class") == Some("panel"))
        .count();
    assert_eq!(panels, 4);

    let o = disagg(&["plot", p(&out), "15", p(&dir.path().join("no.svg"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("no.svg").exists());
}

#[test]
fn bad_data_and_usage_have_distinct_exit_codes() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let data = dir.path().join("data.csv");
    fs::write(&data, "timestamp,kwh\n2019-04-01T00:00:00,x\n").unwrap();
    let out = dir.path().join("o");
    assert_eq!(disagg(&["fit", p(&data), p(&cfg), "--out-dir", p(&out)]).status.code(), Some(2));
    assert_eq!(disagg(&["fit"]).status.code(), Some(1));
    assert_eq!(disagg(&["--help"]).status.code(), Some(0));
}

#[test]
fn overflowing_data_is_a_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = small_config(dir.path());
    let data = dir.path().join("huge.csv");
    let mut text = String::from("timestamp,kwh\n");
    for h in 0..24 {
        text.push_str(&format!("2019-04-01T{h:02}:00:00,{:e}\n", 1e300 * (1.0 + h as f64)));
    }
    fs::write(&data, text).unwrap();
    let out = dir.path().join("o");
    let o = disagg(&["fit", p(&data), p(&cfg), "--out-dir", p(&out), "--interval", "60"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn reference_household_round_trip_reports_four_named_classes() {
    let dir = TempDir::new().unwrap();
    let syn = dir.path().join("syn");
    let spec = configs().join("synthetic_household.toml");
    assert!(disagg(&["synth", p(&spec), "--out-dir", p(&syn)]).status.success());
    let series = syn.join("series.csv");
    let fit = dir.path().join("fit");
    let cfg = configs().join("household.toml");
    let o = disagg(&["fit", p(&series), p(&cfg), "--out-dir", p(&fit), "--weekdays-only"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = disagg(&["eval", p(&fit), p(&series)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    for name in ["furnace", "washer/dryer", "oven", "kitchen apps"] {
        assert!(stdout.lines().any(|l| l.starts_with(name)), "{name} missing from\n{stdout}");
    }
    let svg = dir.path().join("day0.svg");
    assert!(disagg(&["plot", p(&fit), "0", p(&svg)]).status.success());
    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    let panels = doc.descendants().filter(|n| n.attribute("class") == Some("panel")).count();
    assert_eq!(panels, 6);
}
