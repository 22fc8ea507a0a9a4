//! Run configuration: a strict JSON schema covering data source, kernel,
//! graph and solver parameters, and the experiment protocol. Unknown keys
//! are rejected so a typo in a sweep never silently runs defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{load_csv_dataset, make_concentric_rings, make_gaussian_blobs, Dataset};
use crate::error::{Error, Result};
use crate::eval::{ExperimentParams, Method};
use crate::kernel::{KernelConfig, CHI_SQUARED_EPSILON};
use crate::solver::DEFAULT_DROP_TOLERANCE;

/// Where samples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    /// Row-per-sample data CSV plus a one-label-per-line labels file.
    Csv { data: PathBuf, labels: PathBuf },
    /// Well-separated Gaussian clusters.
    Blobs {
        classes: usize,
        per_class: usize,
        dim: usize,
        spread: f64,
        seed: u64,
    },
    /// Two concentric circles with radial noise.
    Rings {
        per_class: usize,
        noise: f64,
        seed: u64,
    },
}

impl DataConfig {
    pub fn materialize(&self) -> Result<Dataset> {
        match self {
            DataConfig::Csv { data, labels } => load_csv_dataset(data, labels),
            DataConfig::Blobs {
                classes,
                per_class,
                dim,
                spread,
                seed,
            } => make_gaussian_blobs(*classes, *per_class, *dim, *spread, *seed),
            DataConfig::Rings {
                per_class,
                noise,
                seed,
            } => make_concentric_rings(*per_class, *noise, *seed),
        }
    }
}

fn default_epsilon() -> f64 {
    CHI_SQUARED_EPSILON
}

/// Kernel section; omitting `gamma` selects the median heuristic on the
/// training half of each run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSetting {
    Rbf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
    Chi2 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    Linear,
    Precomputed { path: PathBuf },
}

impl KernelSetting {
    pub fn to_kernel_config(&self) -> KernelConfig {
        match self {
            KernelSetting::Rbf { gamma } => KernelConfig::Rbf { gamma: *gamma },
            KernelSetting::Chi2 { gamma, epsilon } => KernelConfig::ChiSquared {
                gamma: *gamma,
                epsilon: *epsilon,
            },
            KernelSetting::Linear => KernelConfig::Linear,
            KernelSetting::Precomputed { path } => KernelConfig::Precomputed { path: path.clone() },
        }
    }
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Lambda,
    R,
    K,
    Theta,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::R => "r",
            SweepAxis::K => "k",
            SweepAxis::Theta => "theta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn default_theta() -> f64 {
    1.0
}
fn default_k() -> usize {
    3
}
fn default_lambda() -> f64 {
    1.0
}
fn default_drop_tolerance() -> f64 {
    DEFAULT_DROP_TOLERANCE
}
fn default_ridge() -> f64 {
    1.0
}
fn default_repeats() -> usize {
    5
}
fn default_methods() -> Vec<Method> {
    vec![Method::Ours]
}

/// Complete run description. One config file drives every subcommand; each
/// command reads the sections it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub kernel: KernelSetting,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Output dimensionality; omitted means the class count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default = "default_drop_tolerance")]
    pub drop_tolerance: f64,
    #[serde(default = "default_ridge")]
    pub ridge: f64,
    /// Labels revealed per class when the input is fully labeled.
    pub labels_per_class: usize,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Extra dataset for `transform` to project instead of the training data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform_data: Option<DataConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    /// Default output directory; the `--out` flag overrides it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn kernel_config(&self) -> KernelConfig {
        self.kernel.to_kernel_config()
    }

    pub fn experiment_params(&self) -> ExperimentParams {
        ExperimentParams {
            kernel: self.kernel_config(),
            theta: self.theta,
            clique_k: self.k,
            lambda: self.lambda,
            r: self.r,
            drop_tolerance: self.drop_tolerance,
            ridge: self.ridge,
            labels_per_class: self.labels_per_class,
        }
    }

    /// Check every numeric range and structural rule, reporting all
    /// violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.theta.is_finite() && self.theta > 0.0) {
            problems.push(format!("theta must be finite and > 0 (got {})", self.theta));
        }
        if self.k == 0 {
            problems.push("k must be >= 1".to_string());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            problems.push(format!("lambda must be finite and >= 0 (got {})", self.lambda));
        }
        if self.r == Some(0) {
            problems.push("r must be >= 1 when given".to_string());
        }
        if !(self.drop_tolerance.is_finite() && self.drop_tolerance >= 0.0) {
            problems.push(format!(
                "drop_tolerance must be finite and >= 0 (got {})",
                self.drop_tolerance
            ));
        }
        if !(self.ridge.is_finite() && self.ridge > 0.0) {
            problems.push(format!("ridge must be finite and > 0 (got {})", self.ridge));
        }
        if self.labels_per_class == 0 {
            problems.push("labels_per_class must be >= 1".to_string());
        }
        if self.repeats == 0 {
            problems.push("repeats must be >= 1".to_string());
        }
        if self.methods.is_empty() {
            problems.push("methods must not be empty".to_string());
        }
        for (i, a) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(a) {
                problems.push(format!("method {} listed twice", a.as_str()));
            }
        }
        match &self.kernel {
            KernelSetting::Rbf { gamma: Some(g) } if !(g.is_finite() && *g > 0.0) => {
                problems.push(format!("kernel gamma must be finite and > 0 (got {g})"));
            }
            KernelSetting::Chi2 { gamma, epsilon } => {
                if let Some(g) = gamma {
                    if !(g.is_finite() && *g > 0.0) {
                        problems.push(format!("kernel gamma must be finite and > 0 (got {g})"));
                    }
                }
                if !(epsilon.is_finite() && *epsilon > 0.0) {
                    problems.push(format!(
                        "kernel epsilon must be finite and > 0 (got {epsilon})"
                    ));
                }
            }
            _ => {}
        }
        match &self.data {
            DataConfig::Blobs {
                classes,
                per_class,
                dim,
                spread,
                ..
            } => {
                if *classes == 0 || *per_class == 0 || *dim == 0 {
                    problems.push("blobs classes, per_class, and dim must be >= 1".to_string());
                }
                if !(spread.is_finite() && *spread >= 0.0) {
                    problems.push(format!("blobs spread must be finite and >= 0 (got {spread})"));
                }
            }
            DataConfig::Rings {
                per_class, noise, ..
            } => {
                if *per_class < 3 {
                    problems.push(format!("rings per_class must be >= 3 (got {per_class})"));
                }
                if !(noise.is_finite() && *noise >= 0.0) {
                    problems.push(format!("rings noise must be finite and >= 0 (got {noise})"));
                }
            }
            DataConfig::Csv { .. } => {}
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                problems.push("sweep values must not be empty".to_string());
            }
            for &v in &sweep.values {
                let ok = match sweep.axis {
                    SweepAxis::Lambda => v.is_finite() && v >= 0.0,
                    SweepAxis::Theta => v.is_finite() && v > 0.0,
                    SweepAxis::R | SweepAxis::K => {
                        v.is_finite() && v >= 1.0 && v.fract() == 0.0
                    }
                };
                if !ok {
                    problems.push(format!(
                        "sweep value {v} is illegal for axis {}",
                        sweep.axis.as_str()
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Read and validate a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}
