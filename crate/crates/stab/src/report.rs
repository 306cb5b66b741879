//! JSON and CSV artifacts.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stab_core::baselines::EvalReport;
use stab_core::stab::{StopReason, TapSolution};

use crate::config::{Algorithm, EstimatorKind, RunSeeds, StabParams};
use crate::doc::InfluenceDoc;
use crate::error::{Error, Result};

/// Version of every JSON and CSV layout written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Sidecar written next to an oracle file (`<oracle>.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleMeta {
    pub schema: u32,
    pub graph_hash: String,
    pub nodes: usize,
    pub edges: usize,
    pub influence: InfluenceDoc,
    pub params: StabParams,
    /// Threshold used to size `k` under the threshold-scaled preset.
    pub threshold: Option<f64>,
    pub ell: usize,
    pub k: usize,
    pub offset: f64,
    pub seeds: RunSeeds,
    pub workers: usize,
    pub build_ms: u64,
}

pub fn meta_path(oracle: &Path) -> PathBuf {
    let mut s = oracle.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceDoc {
    pub node: u32,
    pub gain: f64,
    pub sigma_hat_after: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalDoc {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub normalized: Option<f64>,
}

impl From<EvalReport> for EvalDoc {
    fn from(r: EvalReport) -> Self {
        Self {
            mean: r.mean,
            stderr: r.std_error,
            samples: r.samples,
            normalized: r.normalized,
        }
    }
}

/// Everything needed to reproduce one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub algorithm: Algorithm,
    pub threshold: f64,
    pub estimator: Option<EstimatorKind>,
    pub lazy: Option<bool>,
    pub params: Option<StabParams>,
    pub influence: InfluenceDoc,
    pub graph_hash: String,
    pub mc_samples: u64,
    pub celf_samples: Option<usize>,
    pub seeds: RunSeeds,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionDoc {
    pub schema: u32,
    pub seeds: Vec<u32>,
    pub sigma_hat: f64,
    #[serde(rename = "offset_O")]
    pub offset: f64,
    pub trace: Vec<TraceDoc>,
    pub stopped_by: String,
    pub guard_tripped: bool,
    pub evaluations: u64,
    pub eval: EvalDoc,
    pub greedy_ms: u64,
    pub eval_ms: u64,
    pub config_echo: ConfigEcho,
}

pub fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::ThresholdMet => "threshold_met",
        StopReason::MarginalGainBelowOne => "marginal_gain_below_one",
        StopReason::Exhausted => "exhausted",
    }
}

impl SolutionDoc {
    pub fn new(sol: &TapSolution, eval: EvalReport, greedy_ms: u64, eval_ms: u64, echo: ConfigEcho) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            seeds: sol.seeds.clone(),
            sigma_hat: sol.estimated_activation,
            offset: sol.offset,
            trace: sol
                .trace
                .iter()
                .map(|t| TraceDoc {
                    node: t.node,
                    gain: t.gain,
                    sigma_hat_after: t.sigma_hat_after,
                })
                .collect(),
            stopped_by: stop_name(sol.stopped_by).into(),
            guard_tripped: sol.guard_tripped,
            evaluations: sol.evaluations,
            eval: eval.into(),
            greedy_ms,
            eval_ms,
            config_echo: echo,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// One line of `results.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub schema: u32,
    pub threshold: f64,
    pub algorithm: String,
    pub seeds: usize,
    pub mean: f64,
    pub stderr: f64,
    pub normalized: f64,
    pub runtime_ms: u64,
    pub stopped_by: String,
    pub master_seed: u64,
}

/// One line of `sweep_external.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema: u32,
    pub ep_max: f64,
    pub threshold: f64,
    pub seeds: usize,
    pub offset: f64,
    pub external_fraction: f64,
    pub mean: f64,
    pub stderr: f64,
    pub normalized: f64,
    pub build_ms: u64,
    pub greedy_ms: u64,
    pub master_seed: u64,
}

/// Appends rows to a CSV file, writing the header only when the file is new
/// or empty.
pub fn append_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let fresh = fs::metadata(path).map_or(true, |m| m.len() == 0);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(fresh).from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64) -> ResultRow {
        ResultRow {
            schema: SCHEMA_VERSION,
            threshold: t,
            algorithm: "stab-c2".into(),
            seeds: 3,
            mean: 10.5,
            stderr: 0.25,
            normalized: 10.5 / t,
            runtime_ms: 7,
            stopped_by: "threshold_met".into(),
            master_seed: 1,
        }
    }

    #[test]
    fn csv_appends_with_one_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        append_csv(&p, &[row(10.0)]).unwrap();
        append_csv(&p, &[row(20.0), row(30.0)]).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with(
            "schema,threshold,algorithm,seeds,mean,stderr,normalized,runtime_ms,stopped_by,master_seed\n"
        ));
        let back: Vec<ResultRow> = read_csv(&p).unwrap();
        assert_eq!(back, vec![row(10.0), row(20.0), row(30.0)]);
    }

    #[test]
    fn meta_path_appends_suffix() {
        assert_eq!(meta_path(Path::new("a/b.tapo")), Path::new("a/b.tapo.json"));
    }
}
