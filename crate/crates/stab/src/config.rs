//! Experiment configuration. Values come from command-line flags, then a
//! JSON config file, then built-in defaults, in that order of precedence.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use stab_core::rng::derive_seed;
use stab_core::stab::{EllRule, Estimator, SketchSize, StabConfig};

use crate::doc::InfluenceDoc;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.01;
pub const DEFAULT_EPSILON: f64 = 0.25;
pub const DEFAULT_MC_SAMPLES: u64 = 10_000;
pub const DEFAULT_TIME_LIMIT_S: u64 = 3600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    C1,
    C2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Stab,
    Celf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EllRuleKind {
    Hoeffding,
    Conservative,
}

/// Sketch-size rule: fixed relative error, or scaled by `alpha T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SketchPreset {
    Epsilon,
    Threshold,
}

/// Where the graph comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphSource {
    /// A `TAPG` file.
    File { path: PathBuf },
    Er {
        n: usize,
        #[serde(default)]
        p: Option<f64>,
        #[serde(default)]
        seed: u64,
    },
    Ba {
        n: usize,
        #[serde(default = "one")]
        m: usize,
        #[serde(default)]
        seed: u64,
    },
    Snap {
        path: PathBuf,
        #[serde(default)]
        symmetrize: bool,
    },
}

fn one() -> usize {
    1
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: Option<GraphSource>,
    pub influence: Option<InfluenceDoc>,
    pub alpha: Option<f64>,
    pub delta: Option<f64>,
    pub c: Option<f64>,
    pub ell_rule: Option<EllRuleKind>,
    pub sketch: Option<SketchPreset>,
    pub epsilon: Option<f64>,
    pub ell: Option<usize>,
    pub k: Option<usize>,
    pub cea_stop: Option<bool>,
    pub estimator: Option<EstimatorKind>,
    pub lazy: Option<bool>,
    pub algorithm: Option<Algorithm>,
    pub thresholds: Option<Vec<f64>>,
    pub ep_max: Option<Vec<f64>>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub mc_samples: Option<u64>,
    pub celf_samples: Option<usize>,
    pub time_limit_s: Option<u64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks the sweep lists, if present.
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::Config("threshold list is empty".into()));
        }
        if self.ep_max.as_ref().is_some_and(Vec::is_empty) {
            return Err(Error::Config("ep_max list is empty".into()));
        }
        Ok(())
    }
}

/// First present value among flag and file, else the default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Parameters that fix the number of worlds and the sketch size. Stored with
/// every oracle so a later run can check it is using a matching one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabParams {
    pub alpha: f64,
    pub delta: f64,
    pub c: f64,
    pub ell_rule: EllRuleKind,
    pub sketch: SketchPreset,
    pub epsilon: f64,
    pub ell: Option<usize>,
    pub k: Option<usize>,
    pub cea_stop: bool,
}

impl Default for StabParams {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            delta: DEFAULT_DELTA,
            c: 1.0,
            ell_rule: EllRuleKind::Hoeffding,
            sketch: SketchPreset::Epsilon,
            epsilon: DEFAULT_EPSILON,
            ell: None,
            k: None,
            cea_stop: true,
        }
    }
}

impl StabParams {
    pub fn to_config(&self, threshold: f64, estimator: EstimatorKind, lazy: bool) -> StabConfig {
        let mut cfg = StabConfig::new(threshold, self.alpha);
        cfg.delta = self.delta;
        cfg.c = self.c;
        cfg.estimator = match estimator {
            EstimatorKind::C1 => Estimator::C1,
            EstimatorKind::C2 => Estimator::C2,
        };
        cfg.lazy_eval = lazy;
        cfg.ell_override = self.ell;
        cfg.k_override = self.k;
        cfg.enforce_cea_stop = self.cea_stop;
        cfg.ell_rule = match self.ell_rule {
            EllRuleKind::Hoeffding => EllRule::Hoeffding,
            EllRuleKind::Conservative => EllRule::Conservative,
        };
        cfg.sketch_size = match self.sketch {
            SketchPreset::Epsilon => SketchSize::Epsilon(self.epsilon),
            SketchPreset::Threshold => SketchSize::ThresholdScaled,
        };
        cfg
    }
}

/// Every random seed used by a command, all derived from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSeeds {
    pub master: u64,
    pub worlds: u64,
    pub ranks: u64,
    pub eval: u64,
    pub celf: u64,
}

impl RunSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            master,
            worlds: derive_seed(master, 1),
            ranks: derive_seed(master, 2),
            eval: derive_seed(master, 3),
            celf: derive_seed(master, 4),
        }
    }
}
