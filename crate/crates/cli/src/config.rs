//! Experiment configuration files.
//!
//! TOML with five sections, every one optional:
//!
//! ```toml
//! [net]
//! input_width = 2
//! hidden_width = 2
//! output_width = 1
//!
//! [train]
//! task = "xor"                  # or "or"; supplies samples and initial weights
//! samples = [[1, 0, 1], ...]    # inputs followed by the label
//! initial_weights = "w.csv"     # path relative to the config file
//! batch_size = 2
//! eta = 0.9
//! threshold = 0.5
//! judge_rates = [8, 1, 2, 0.4375]
//! default_conc = 1e-6
//! annihilation_rate = 1
//!
//! [schedule]
//! mode = "phased"               # or "oscillator"
//! window = 50
//! max_cycles = 100
//! clock_species = 32
//! k_o = 2
//!
//! [integrator]
//! method = "dopri45"            # or "rk4"
//! step = 0.01
//! rel_tol = 1e-8
//! abs_tol = 1e-10
//! record_stride = 1
//!
//! [run]
//! seed = 1
//! output_dir = "out"
//! grid_size = 10
//! svg = true
//! property_cases = 10
//! ```
//!
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use chemnn::{presets, IntegratorConfig, Method, NetSpec, OscillatorSpec, Recording, Sample, TrainSpec, WeightSet};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Phased,
    Oscillator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Task {
    Xor,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum MethodName {
    Dopri45,
    Rk4,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    net: RawNet,
    #[serde(default)]
    train: RawTrain,
    #[serde(default)]
    schedule: RawSchedule,
    #[serde(default)]
    integrator: RawIntegrator,
    #[serde(default)]
    run: RawRun,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawNet {
    input_width: usize,
    hidden_width: usize,
    output_width: usize,
}

impl Default for RawNet {
    fn default() -> Self {
        let n = NetSpec::default();
        Self {
            input_width: n.input_width,
            hidden_width: n.hidden_width,
            output_width: n.output_width,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawTrain {
    task: Option<Task>,
    samples: Option<Vec<Vec<f64>>>,
    initial_weights: Option<PathBuf>,
    batch_size: usize,
    eta: f64,
    threshold: f64,
    judge_rates: [f64; 4],
    default_conc: f64,
    annihilation_rate: f64,
}

impl Default for RawTrain {
    fn default() -> Self {
        Self {
            task: None,
            samples: None,
            initial_weights: None,
            batch_size: presets::BATCH_SIZE,
            eta: presets::ETA,
            threshold: presets::THRESHOLD,
            judge_rates: presets::JUDGE_RATES,
            default_conc: 1e-6,
            annihilation_rate: 1.0,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSchedule {
    mode: Mode,
    window: f64,
    max_cycles: usize,
    clock_species: usize,
    k_o: f64,
}

impl Default for RawSchedule {
    fn default() -> Self {
        Self {
            mode: Mode::Phased,
            window: 50.0,
            max_cycles: 100,
            clock_species: presets::CLOCK_SPECIES,
            k_o: presets::K_O,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawIntegrator {
    method: MethodName,
    step: f64,
    rel_tol: f64,
    abs_tol: f64,
    record_stride: usize,
}

impl Default for RawIntegrator {
    fn default() -> Self {
        let c = IntegratorConfig::default();
        Self {
            method: MethodName::Dopri45,
            step: c.step,
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            record_stride: 1,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawRun {
    seed: u64,
    output_dir: PathBuf,
    grid_size: usize,
    svg: bool,
    property_cases: usize,
}

impl Default for RawRun {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("out"),
            grid_size: 10,
            svg: true,
            property_cases: 10,
        }
    }
}

/// Fully resolved experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub net: NetSpec,
    pub train: TrainSpec,
    pub mode: Mode,
    pub window: f64,
    pub max_cycles: usize,
    pub oscillator: OscillatorSpec,
    pub integrator: IntegratorConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid_size: usize,
    pub svg: bool,
    pub property_cases: usize,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub max_cycles: Option<usize>,
    pub window: Option<f64>,
}

fn samples_from_rows(rows: &[Vec<f64>], width: usize) -> Result<Vec<Sample>, CliError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != width + 1 {
                return Err(CliError::Config(format!(
                    "train.samples[{i}] has {} values, expected {} inputs and a label",
                    r.len(),
                    width
                )));
            }
            Ok(Sample::new(&r[..width], r[width]))
        })
        .collect()
}

impl ExperimentConfig {
    /// `require_train` rejects files without training samples and weights;
    /// otherwise the XOR task fills them in.
    pub fn load(path: Option<&Path>, ov: &Overrides, require_train: bool) -> Result<Self, CliError> {
        let (raw, base) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                let raw: RawConfig = toml::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                (raw, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (RawConfig::default(), PathBuf::new()),
        };
        Self::resolve(raw, &base, ov, require_train)
    }

    #[cfg(test)]
    pub fn from_toml(text: &str, ov: &Overrides) -> Result<Self, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Self::resolve(raw, Path::new(""), ov, true)
    }

    fn resolve(raw: RawConfig, base: &Path, ov: &Overrides, require_train: bool) -> Result<Self, CliError> {
        let net = NetSpec::new(raw.net.input_width, raw.net.hidden_width, raw.net.output_width);
        net.validate()?;
        let mut t = raw.train;
        if !require_train && t.task.is_none() {
            t.task = Some(Task::Xor);
        }
        let samples = match (&t.samples, t.task) {
            (Some(rows), _) => samples_from_rows(rows, net.input_width)?,
            (None, Some(Task::Xor)) => presets::xor_samples(),
            (None, Some(Task::Or)) => presets::or_samples(),
            (None, None) => {
                return Err(CliError::Config(
                    "train.samples or train.task is required".into(),
                ))
            }
        };
        let init = match (&t.initial_weights, t.task) {
            (Some(p), _) => {
                let p = base.join(p);
                let f = std::fs::File::open(&p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                WeightSet::read_csv(f)?
            }
            (None, Some(Task::Xor)) => presets::xor_initial_weights(),
            (None, Some(Task::Or)) => presets::or_initial_weights(),
            (None, None) => {
                return Err(CliError::Config(
                    "train.initial_weights or train.task is required".into(),
                ))
            }
        };
        let mut train = TrainSpec::new(samples, init);
        train.batch_size = t.batch_size;
        train.eta = t.eta;
        train.threshold = t.threshold;
        train.judge_rates = t.judge_rates;
        train.default_conc = t.default_conc;
        train.annihilation_rate = t.annihilation_rate;
        train.validate(&net)?;

        let s = raw.schedule;
        let window = ov.window.unwrap_or(s.window);
        if !(window > 0.0 && window.is_finite()) {
            return Err(CliError::Config(format!("window must be positive, got {window}")));
        }
        let max_cycles = ov.max_cycles.unwrap_or(s.max_cycles);
        if max_cycles == 0 {
            return Err(CliError::Config("max_cycles must be at least 1".into()));
        }
        let oscillator = OscillatorSpec::new(s.clock_species, s.k_o);
        oscillator.validate()?;

        let i = raw.integrator;
        if i.record_stride == 0 {
            return Err(CliError::Config("integrator.record_stride must be at least 1".into()));
        }
        let integrator = IntegratorConfig {
            method: match i.method {
                MethodName::Dopri45 => Method::Dopri45,
                MethodName::Rk4 => Method::Rk4,
            },
            step: i.step,
            rel_tol: i.rel_tol,
            abs_tol: i.abs_tol,
            record: match i.record_stride {
                1 => Recording::EveryStep,
                n => Recording::Stride(n),
            },
            ..IntegratorConfig::default()
        };
        integrator.validate()?;

        let r = raw.run;
        if r.grid_size == 0 {
            return Err(CliError::Config("run.grid_size must be at least 1".into()));
        }
        Ok(Self {
            net,
            train,
            mode: ov.mode.unwrap_or(s.mode),
            window,
            max_cycles,
            oscillator,
            integrator,
            seed: r.seed,
            output_dir: ov.out.clone().unwrap_or(r.output_dir),
            grid_size: r.grid_size,
            svg: r.svg,
            property_cases: r.property_cases,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn task_fills_samples_and_weights() {
        let c = ExperimentConfig::from_toml("[train]\ntask = \"xor\"\n", &Overrides::default()).unwrap();
        assert_eq!(c.train.samples, presets::xor_samples());
        assert_eq!(c.train.init_weights, presets::xor_initial_weights());
        assert_eq!(c.mode, Mode::Phased);
        assert_eq!(c.window, 50.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = ExperimentConfig::from_toml("[train]\ntask = \"or\"\netaa = 0.9\n", &Overrides::default())
            .unwrap_err();
        assert!(e.to_string().contains("etaa"), "{e}");
        let e = ExperimentConfig::from_toml("[trian]\n", &Overrides::default()).unwrap_err();
        assert!(matches!(e, CliError::Config(_)));
    }

    #[test]
    fn overrides_win() {
        let ov = Overrides {
            mode: Some(Mode::Oscillator),
            out: Some("elsewhere".into()),
            max_cycles: Some(3),
            window: Some(20.0),
        };
        let c = ExperimentConfig::from_toml("[train]\ntask = \"or\"\n[schedule]\nwindow = 80\n", &ov).unwrap();
        assert_eq!(c.mode, Mode::Oscillator);
        assert_eq!(c.output_dir, PathBuf::from("elsewhere"));
        assert_eq!(c.max_cycles, 3);
        assert_eq!(c.window, 20.0);
    }

    #[test]
    fn explicit_samples_need_a_label() {
        let text = "[train]\ntask = \"xor\"\nsamples = [[1, 0, 1], [0, 0]]\n";
        assert!(ExperimentConfig::from_toml(text, &Overrides::default()).is_err());
        let text = "[train]\ntask = \"xor\"\nsamples = [[1, 0, 1], [0, 0, 0]]\n";
        let c = ExperimentConfig::from_toml(text, &Overrides::default()).unwrap();
        assert_eq!(c.train.samples[1], Sample::new(&[0.0, 0.0], 0.0));
    }

    #[test]
    fn missing_task_is_an_error() {
        assert!(ExperimentConfig::from_toml("", &Overrides::default()).is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        for text in [
            "[train]\ntask = \"xor\"\n[schedule]\nwindow = -1\n",
            "[train]\ntask = \"xor\"\n[schedule]\nmode = \"both\"\n",
            "[train]\ntask = \"xor\"\nbatch_size = 3\n",
            "[train]\ntask = \"xor\"\n[integrator]\nrel_tol = 0\n",
            "[train]\ntask = \"xor\"\n[schedule]\nclock_species = 1\n",
        ] {
            assert!(ExperimentConfig::from_toml(text, &Overrides::default()).is_err(), "{text}");
        }
    }
}
