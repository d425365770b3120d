//! Experiment configuration files.
//!
//! A config is TOML with a required `[instance]` table and optional `[cccp]`
//! and `[sweep]` tables. Tasks and devices are given either as shorthand
//! (one value shared by all, plus `task_count` / `device_count`) or as
//! explicit `[[instance.tasks]]` / `[[instance.devices]]` arrays.

use std::path::PathBuf;

use edgecast_core::{zipf_popularity, CccpConfig, DeviceSpec, Instance, TaskSpec, DEFAULT_DEADLINE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_ENERGY_COEFF: f64 = 1e-27;
pub const DEFAULT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Exhaustive search over feasible policies.
    Exact,
    /// Multi-start concave-convex procedure.
    Cccp,
    /// Closed-form optimum of a symmetric instance.
    Symmetric,
    /// Every request computed at the edge server.
    Mec,
    /// Multi-start procedure restricted to output caching and edge computing.
    CachingOnly,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Cccp => "cccp",
            Method::Symmetric => "symmetric",
            Method::Mec => "mec",
            Method::CachingOnly => "caching-only",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputDraw {
    /// Evenly spaced over `input_range`, smallest first.
    #[default]
    Grid,
    /// Uniform over `input_range`, drawn from the experiment seed.
    Uniform,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Popularity {
    #[default]
    Uniform,
    /// Zipf exponent; the same ranking on every device.
    Zipf(f64),
    /// One row per device.
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskEntry {
    pub input_bits: f64,
    pub load: f64,
    pub output_bits: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    pub cpu_rate: f64,
    pub avg_energy: f64,
    pub cache_bits: f64,
    pub inv_spectral_efficiency: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub task_count: Option<usize>,
    pub input_bits: Option<f64>,
    pub input_range: Option<[f64; 2]>,
    #[serde(default)]
    pub input_draw: InputDraw,
    pub output_bits: Option<f64>,
    /// Output size as a multiple of the input size.
    pub alpha: Option<f64>,
    pub load: Option<f64>,
    pub tasks: Option<Vec<TaskEntry>>,

    pub device_count: Option<usize>,
    pub cpu_rate: Option<f64>,
    pub avg_energy: Option<f64>,
    pub cache_bits: Option<f64>,
    pub inv_spectral_efficiency: Option<f64>,
    pub devices: Option<Vec<DeviceEntry>>,

    #[serde(default)]
    pub popularity: Popularity,
    pub deadline: Option<f64>,
    pub energy_coeff: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    CacheBits,
    CpuRate,
    AvgEnergy,
    InvSpectralEfficiency,
    InputBits,
    OutputBits,
    Alpha,
    Load,
    TaskCount,
    DeviceCount,
    Deadline,
    ZipfGamma,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::CacheBits => "cache_bits",
            SweepParameter::CpuRate => "cpu_rate",
            SweepParameter::AvgEnergy => "avg_energy",
            SweepParameter::InvSpectralEfficiency => "inv_spectral_efficiency",
            SweepParameter::InputBits => "input_bits",
            SweepParameter::OutputBits => "output_bits",
            SweepParameter::Alpha => "alpha",
            SweepParameter::Load => "load",
            SweepParameter::TaskCount => "task_count",
            SweepParameter::DeviceCount => "device_count",
            SweepParameter::Deadline => "deadline",
            SweepParameter::ZipfGamma => "zipf_gamma",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub from: f64,
    pub to: f64,
    /// Number of intervals; the grid has `steps + 1` points.
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub grid: Option<Vec<f64>>,
    pub range: Option<GridRange>,
    /// Methods run at every grid point; defaults to the top-level method.
    pub methods: Option<Vec<Method>>,
}

impl SweepConfig {
    pub fn points(&self) -> Vec<f64> {
        match (&self.grid, &self.range) {
            (Some(g), _) => g.clone(),
            (None, Some(r)) => (0..=r.steps)
                .map(|i| {
                    if i == r.steps {
                        r.to
                    } else {
                        r.from + (r.to - r.from) * i as f64 / r.steps as f64
                    }
                })
                .collect(),
            (None, None) => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Monte Carlo samples when the request state space is too large to
    /// evaluate exactly.
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub out: Option<PathBuf>,
    pub instance: InstanceConfig,
    #[serde(default)]
    pub cccp: CccpConfig,
    pub sweep: Option<SweepConfig>,
}

fn default_method() -> Method {
    Method::Cccp
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

/// Parses and validates a config, filling in defaults. The solver seed is
/// the top-level `seed`.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut config: ExperimentConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        CliError::Parse {
            line,
            message: e.message().trim().to_string(),
        }
    })?;
    if config.cccp.seed != 0 && config.cccp.seed != config.seed {
        return Err(CliError::Validation(vec![
            "set seed at the top level; [cccp] seed must be left out".into(),
        ]));
    }
    config.cccp.seed = config.seed;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// Checks everything that can be checked without solving. All problems
    /// are reported together.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut problems = self.instance.problems();
        if let Err(e) = self.cccp.validate() {
            problems.push(e.to_string());
        }
        if self.samples == 0 {
            problems.push("samples must be >= 1".into());
        }
        if let Some(sweep) = &self.sweep {
            problems.extend(sweep_problems(sweep, &self.instance));
        }
        if problems.is_empty() {
            // Catches what only the core constructors know (deadlines etc.).
            match &self.sweep {
                Some(sweep) => {
                    for v in sweep.points() {
                        if let Err(e) = self.instance.with_parameter(sweep.parameter, v).and_then(|i| i.build(self.seed)) {
                            problems.push(format!("{} = {v}: {e}", sweep.parameter.name()));
                        }
                    }
                }
                None => {
                    if let Err(e) = self.instance.build(self.seed) {
                        problems.push(e.to_string());
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems))
        }
    }

    /// The config as TOML, for the comment block of an output table.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn sweep_problems(sweep: &SweepConfig, instance: &InstanceConfig) -> Vec<String> {
    let mut out = Vec::new();
    if sweep.grid.is_some() == sweep.range.is_some() {
        out.push("sweep needs exactly one of grid and range".into());
        return out;
    }
    if let Some(r) = &sweep.range {
        if r.steps == 0 || !(r.from.is_finite() && r.to.is_finite()) {
            out.push("sweep range needs finite ends and steps >= 1".into());
        }
    }
    let points = sweep.points();
    if points.is_empty() {
        out.push("sweep grid is empty".into());
    }
    if points.windows(2).any(|w| w[1] <= w[0]) {
        out.push("sweep grid must be strictly increasing".into());
    }
    if matches!(sweep.methods.as_deref(), Some([])) {
        out.push("sweep methods list is empty".into());
    }
    if let Some(v) = points.first() {
        if let Err(e) = instance.with_parameter(sweep.parameter, *v) {
            out.push(e.to_string());
        }
    }
    out
}

fn check(out: &mut Vec<String>, name: &str, value: Option<f64>, allow_zero: bool) {
    if let Some(v) = value {
        let ok = v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
        if !ok {
            let bound = if allow_zero { ">= 0" } else { "> 0" };
            out.push(format!("{name} must be {bound}, got {v}"));
        }
    }
}

impl InstanceConfig {
    /// Problems with the instance description itself.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let shorthand_tasks = self.task_count.is_some()
            || self.input_bits.is_some()
            || self.input_range.is_some()
            || self.output_bits.is_some()
            || self.alpha.is_some()
            || self.load.is_some();
        match &self.tasks {
            Some(_) if shorthand_tasks => {
                out.push("give tasks either as [[instance.tasks]] or as shorthand fields, not both".into())
            }
            Some(list) if list.is_empty() => out.push("instance.tasks is empty".into()),
            Some(list) => {
                for (i, t) in list.iter().enumerate() {
                    check(&mut out, &format!("tasks[{i}].input_bits"), Some(t.input_bits), false);
                    check(&mut out, &format!("tasks[{i}].load"), Some(t.load), false);
                    check(&mut out, &format!("tasks[{i}].output_bits"), Some(t.output_bits), false);
                }
            }
            None => {
                match self.task_count {
                    None => out.push("task_count is required without [[instance.tasks]]".into()),
                    Some(0) => out.push("task_count must be >= 1".into()),
                    _ => {}
                }
                match (self.input_bits, self.input_range) {
                    (None, None) => out.push("one of input_bits and input_range is required".into()),
                    (Some(_), Some(_)) => out.push("give only one of input_bits and input_range".into()),
                    (_, Some([lo, hi])) => {
                        check(&mut out, "input_range[0]", Some(lo), false);
                        check(&mut out, "input_range[1]", Some(hi), false);
                        if hi < lo {
                            out.push("input_range must be [low, high]".into());
                        }
                    }
                    _ => {}
                }
                if self.output_bits.is_some() == self.alpha.is_some() {
                    out.push("exactly one of output_bits and alpha is required".into());
                }
                if self.load.is_none() {
                    out.push("load is required without [[instance.tasks]]".into());
                }
                check(&mut out, "input_bits", self.input_bits, false);
                check(&mut out, "output_bits", self.output_bits, false);
                check(&mut out, "alpha", self.alpha, false);
                check(&mut out, "load", self.load, false);
            }
        }

        let shorthand_devices = self.device_count.is_some()
            || self.cpu_rate.is_some()
            || self.avg_energy.is_some()
            || self.cache_bits.is_some()
            || self.inv_spectral_efficiency.is_some();
        match &self.devices {
            Some(_) if shorthand_devices => {
                out.push("give devices either as [[instance.devices]] or as shorthand fields, not both".into())
            }
            Some(list) if list.is_empty() => out.push("instance.devices is empty".into()),
            Some(list) => {
                for (i, d) in list.iter().enumerate() {
                    check(&mut out, &format!("devices[{i}].cpu_rate"), Some(d.cpu_rate), false);
                    check(&mut out, &format!("devices[{i}].avg_energy"), Some(d.avg_energy), true);
                    check(&mut out, &format!("devices[{i}].cache_bits"), Some(d.cache_bits), true);
                    check(
                        &mut out,
                        &format!("devices[{i}].inv_spectral_efficiency"),
                        Some(d.inv_spectral_efficiency),
                        false,
                    );
                }
            }
            None => {
                match self.device_count {
                    None => out.push("device_count is required without [[instance.devices]]".into()),
                    Some(0) => out.push("device_count must be >= 1".into()),
                    _ => {}
                }
                for (name, v) in [
                    ("cpu_rate", self.cpu_rate),
                    ("avg_energy", self.avg_energy),
                    ("cache_bits", self.cache_bits),
                    ("inv_spectral_efficiency", self.inv_spectral_efficiency),
                ] {
                    if v.is_none() {
                        out.push(format!("{name} is required without [[instance.devices]]"));
                    }
                }
                check(&mut out, "cpu_rate", self.cpu_rate, false);
                check(&mut out, "avg_energy", self.avg_energy, true);
                check(&mut out, "cache_bits", self.cache_bits, true);
                check(&mut out, "inv_spectral_efficiency", self.inv_spectral_efficiency, false);
            }
        }

        check(&mut out, "deadline", self.deadline, false);
        check(&mut out, "energy_coeff", self.energy_coeff, false);
        match &self.popularity {
            Popularity::Zipf(g) if !(g.is_finite() && *g >= 0.0) => {
                out.push(format!("zipf exponent must be >= 0, got {g}"))
            }
            Popularity::Matrix(rows) => {
                let (f, k) = (self.task_len(), self.device_len());
                if k.is_some_and(|k| rows.len() != k) || f.is_some_and(|f| rows.iter().any(|r| r.len() != f)) {
                    out.push("popularity matrix must have one row per device and one column per task".into());
                }
            }
            _ => {}
        }
        out
    }

    fn task_len(&self) -> Option<usize> {
        self.tasks.as_ref().map(Vec::len).or(self.task_count)
    }

    fn device_len(&self) -> Option<usize> {
        self.devices.as_ref().map(Vec::len).or(self.device_count)
    }

    /// A copy with one parameter set to `value` on every task or device.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<InstanceConfig, CliError> {
        let mut out = self.clone();
        let fail = |reason: &str| CliError::Validation(vec![format!("cannot sweep {}: {reason}", parameter.name())]);
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(fail(&format!("{v} is not a positive integer")))
            }
        };
        match parameter {
            SweepParameter::CacheBits
            | SweepParameter::CpuRate
            | SweepParameter::AvgEnergy
            | SweepParameter::InvSpectralEfficiency => {
                if let Some(list) = &mut out.devices {
                    for d in list {
                        match parameter {
                            SweepParameter::CacheBits => d.cache_bits = value,
                            SweepParameter::CpuRate => d.cpu_rate = value,
                            SweepParameter::AvgEnergy => d.avg_energy = value,
                            _ => d.inv_spectral_efficiency = value,
                        }
                    }
                } else {
                    let slot = match parameter {
                        SweepParameter::CacheBits => &mut out.cache_bits,
                        SweepParameter::CpuRate => &mut out.cpu_rate,
                        SweepParameter::AvgEnergy => &mut out.avg_energy,
                        _ => &mut out.inv_spectral_efficiency,
                    };
                    *slot = Some(value);
                }
            }
            SweepParameter::InputBits | SweepParameter::OutputBits | SweepParameter::Load => {
                if let Some(list) = &mut out.tasks {
                    for t in list {
                        match parameter {
                            SweepParameter::InputBits => t.input_bits = value,
                            SweepParameter::OutputBits => t.output_bits = value,
                            _ => t.load = value,
                        }
                    }
                } else {
                    match parameter {
                        SweepParameter::InputBits => {
                            out.input_range = None;
                            out.input_bits = Some(value);
                        }
                        SweepParameter::OutputBits => {
                            out.alpha = None;
                            out.output_bits = Some(value);
                        }
                        _ => out.load = Some(value),
                    }
                }
            }
            SweepParameter::Alpha => {
                if out.tasks.is_some() {
                    return Err(fail("alpha needs shorthand tasks"));
                }
                out.output_bits = None;
                out.alpha = Some(value);
            }
            SweepParameter::TaskCount => {
                if out.tasks.is_some() || matches!(out.popularity, Popularity::Matrix(_)) {
                    return Err(fail("task_count needs shorthand tasks and a uniform or zipf popularity"));
                }
                out.task_count = Some(count(value)?);
            }
            SweepParameter::DeviceCount => {
                if out.devices.is_some() || matches!(out.popularity, Popularity::Matrix(_)) {
                    return Err(fail("device_count needs shorthand devices and a uniform or zipf popularity"));
                }
                out.device_count = Some(count(value)?);
            }
            SweepParameter::Deadline => out.deadline = Some(value),
            SweepParameter::ZipfGamma => {
                if !matches!(out.popularity, Popularity::Zipf(_)) {
                    return Err(fail("zipf_gamma needs a zipf popularity"));
                }
                out.popularity = Popularity::Zipf(value);
            }
        }
        Ok(out)
    }

    /// Builds the instance. `seed` is only used by `input_draw = "uniform"`.
    pub fn build(&self, seed: u64) -> Result<Instance, CliError> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(CliError::Validation(problems));
        }
        let tasks = match &self.tasks {
            Some(list) => list
                .iter()
                .map(|t| TaskSpec::new(t.input_bits, t.load, t.output_bits))
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let count = self.task_count.expect("validated");
                let inputs: Vec<f64> = match (self.input_bits, self.input_range) {
                    (Some(i), _) => vec![i; count],
                    (None, Some([lo, hi])) => match self.input_draw {
                        InputDraw::Grid if count == 1 => vec![lo],
                        InputDraw::Grid => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
                        InputDraw::Uniform => {
                            let mut rng = ChaCha8Rng::seed_from_u64(seed);
                            (0..count)
                                .map(|_| if hi > lo { rng.random_range(lo..hi) } else { lo })
                                .collect()
                        }
                    },
                    (None, None) => unreachable!("validated"),
                };
                let load = self.load.expect("validated");
                inputs
                    .into_iter()
                    .map(|i| TaskSpec::new(i, load, self.output_bits.unwrap_or_else(|| i * self.alpha.unwrap_or(1.0))))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        let devices = match &self.devices {
            Some(list) => list
                .iter()
                .map(|d| DeviceSpec::new(d.cpu_rate, d.avg_energy, d.cache_bits, d.inv_spectral_efficiency))
                .collect::<Result<Vec<_>, _>>()?,
            None => {
                let d = DeviceSpec::new(
                    self.cpu_rate.expect("validated"),
                    self.avg_energy.expect("validated"),
                    self.cache_bits.expect("validated"),
                    self.inv_spectral_efficiency.expect("validated"),
                )?;
                vec![d; self.device_count.expect("validated")]
            }
        };
        let (f, k) = (tasks.len(), devices.len());
        let popularity = match &self.popularity {
            Popularity::Uniform => vec![vec![1.0 / f as f64; f]; k],
            Popularity::Zipf(g) => vec![zipf_popularity(f, *g)?; k],
            Popularity::Matrix(rows) => rows.clone(),
        };
        Ok(Instance::new(
            tasks,
            devices,
            popularity,
            self.deadline.unwrap_or(DEFAULT_DEADLINE),
            self.energy_coeff.unwrap_or(DEFAULT_ENERGY_COEFF),
        )?)
    }
}
