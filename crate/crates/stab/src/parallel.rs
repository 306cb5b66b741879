//! Multi-threaded versions of the expensive steps. Every function here gives
//! the same result as its sequential counterpart in `stab_core`, whatever the
//! number of threads: worlds and cascades draw from index-addressed streams,
//! and partial results are combined with exact (integer or set) operations.

use std::ops::Range;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use stab_core::baselines::{cascade_sums, celf_tap_with, report_from_sums, EvalReport, McActivation};
use stab_core::influence::{make_world, InfluenceSpec, SampledWorld};
use stab_core::sketch::{OracleBuilder, SketchOracle};
use stab_core::stab::{better_candidate, run_stab_with, CandidateScan, StabConfig, TapSolution};
use stab_core::{DirectedGraph, NodeId, NodeSet, TapError};

use crate::error::{Error, Result};

/// Cascades per work item in [`evaluate`].
pub const EVAL_BLOCK: u64 = 256;

/// Builds a thread pool with `workers` threads, or one per available core.
pub fn thread_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = workers.unwrap_or_else(default_workers);
    if n == 0 {
        return Err(Error::Config("worker count must be >= 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Samples worlds `0..ell` in parallel, returned in index order.
pub fn sample_worlds(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    ell: usize,
    world_seed: u64,
) -> Result<Vec<SampledWorld>> {
    spec.validate(g)?;
    (0..ell as u64)
        .into_par_iter()
        .map(|i| make_world(g, spec, i, world_seed))
        .collect::<Result<Vec<_>, TapError>>()
        .map_err(Error::from)
}

/// Samples `ell` worlds and builds their sketches. Each worker folds the
/// worlds it is handed into its own builder; builders are then merged. No
/// more than one world per worker is held in memory at a time.
pub fn build_oracle(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    ell: usize,
    k: usize,
    world_seed: u64,
    rank_seed: u64,
) -> Result<SketchOracle> {
    spec.validate(g)?;
    let empty = OracleBuilder::new(g.node_count(), k, rank_seed)?;
    let built = (0..ell as u64)
        .into_par_iter()
        .try_fold(
            || empty.clone(),
            |mut b, i| {
                let w = make_world(g, spec, i, world_seed)?;
                b.add_worlds(std::slice::from_ref(&w))?;
                Ok::<_, TapError>(b)
            },
        )
        .try_reduce(
            || empty.clone(),
            |mut a, b| {
                a.merge(b)?;
                Ok(a)
            },
        )?;
    Ok(built.finish()?)
}

/// Monte Carlo evaluation split into blocks of [`EVAL_BLOCK`] cascades.
/// Matches `stab_core::baselines::evaluate_seed_set` exactly.
pub fn evaluate(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    seeds: &NodeSet,
    num_samples: u64,
    rng_seed: u64,
    threshold: Option<f64>,
) -> Result<EvalReport> {
    if num_samples == 0 {
        return Err(Error::Config("need at least one evaluation sample".into()));
    }
    spec.validate(g)?;
    let blocks: Vec<Range<u64>> = (0..num_samples.div_ceil(EVAL_BLOCK))
        .map(|b| b * EVAL_BLOCK..((b + 1) * EVAL_BLOCK).min(num_samples))
        .collect();
    let (sum, sq) = blocks
        .into_par_iter()
        .map(|r| cascade_sums(g, spec, seeds, r, rng_seed))
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(report_from_sums(sum, sq, num_samples, threshold))
}

/// Candidate scan spread over the current thread pool.
#[derive(Clone, Copy, Debug, Default)]
pub struct RayonScan;

impl CandidateScan for RayonScan {
    fn best(
        &self,
        n: usize,
        taken: &NodeSet,
        gain: &(dyn Fn(NodeId) -> f64 + Sync),
    ) -> (Option<(NodeId, f64)>, u64) {
        (0..n as NodeId)
            .into_par_iter()
            .filter(|&u| !taken.contains(u))
            .map(|u| (Some((u, gain(u))), 1u64))
            .reduce(
                || (None, 0),
                |(a, ea), (b, eb)| {
                    let best = match (a, b) {
                        (Some(x), Some(y)) => Some(better_candidate(x, y)),
                        (x, None) => x,
                        (None, y) => y,
                    };
                    (best, ea + eb)
                },
            )
    }
}

/// STAB with the candidate scan on the thread pool.
pub fn run_stab(g: &DirectedGraph, cfg: &StabConfig, oracle: &SketchOracle) -> Result<TapSolution> {
    Ok(run_stab_with(g, cfg, oracle, &RayonScan)?)
}

/// CELF with a wall-clock limit; once it passes, the partial seed set is
/// returned with `guard_tripped` set.
pub fn celf_with_time_limit(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    threshold: f64,
    num_mc_samples: usize,
    rng_seed: u64,
    limit: Duration,
) -> Result<TapSolution> {
    if threshold.is_nan() || threshold > g.node_count() as f64 {
        return Err(Error::Config(format!(
            "threshold {threshold} exceeds the {} nodes of the graph",
            g.node_count()
        )));
    }
    let start = Instant::now();
    let mut oracle = McActivation::new(g, spec, num_mc_samples, rng_seed)?;
    Ok(celf_tap_with(&mut oracle, threshold, &mut || start.elapsed() >= limit)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use stab_core::baselines::evaluate_seed_set;
    use stab_core::graph::generate_er;
    use stab_core::influence::{ExternalSpec, TriggeringSpec};
    use stab_core::sketch::build_oracles;
    use stab_core::stab::{SequentialScan, StopReason};

    fn instance() -> (DirectedGraph, InfluenceSpec) {
        let g = generate_er(150, 0.03, 4).unwrap();
        let spec = InfluenceSpec::new(
            TriggeringSpec::uniform_ic(&g, 0.9, 1).unwrap(),
            ExternalSpec::uniform(150, 0.02, 1).unwrap(),
        );
        (g, spec)
    }

    #[test]
    fn parallel_build_matches_sequential() {
        let (g, spec) = instance();
        let worlds: Vec<_> = (0..13).map(|i| make_world(&g, &spec, i, 8).unwrap()).collect();
        let seq = build_oracles(&worlds, 16, 3).unwrap();
        for threads in [1, 3] {
            let pool = thread_pool(Some(threads)).unwrap();
            let par = pool.install(|| build_oracle(&g, &spec, 13, 16, 8, 3)).unwrap();
            assert_eq!(par, seq);
            let sampled = pool.install(|| sample_worlds(&g, &spec, 13, 8)).unwrap();
            assert_eq!(sampled.len(), 13);
            assert!(sampled.iter().zip(&worlds).all(|(a, b)| a.residual == b.residual));
        }
    }

    #[test]
    fn parallel_eval_matches_sequential() {
        let (g, spec) = instance();
        let seeds: NodeSet = [1, 5, 9].into_iter().collect();
        let seq = evaluate_seed_set(&g, &spec, &seeds, 1000, 2).unwrap();
        let pool = thread_pool(Some(4)).unwrap();
        let par = pool.install(|| evaluate(&g, &spec, &seeds, 1000, 2, Some(50.0))).unwrap();
        assert_eq!(par.mean, seq.mean);
        assert_eq!(par.std_error, seq.std_error);
        assert_eq!(par.normalized, Some(seq.mean / 50.0));
    }

    #[test]
    fn rayon_scan_matches_sequential() {
        let (g, spec) = instance();
        let pool = thread_pool(Some(3)).unwrap();
        let o = pool.install(|| build_oracle(&g, &spec, 20, 24, 1, 2)).unwrap();
        let mut cfg = StabConfig::new(60.0, 0.1);
        cfg.ell_override = Some(20);
        cfg.k_override = Some(24);
        let a = pool.install(|| run_stab(&g, &cfg, &o)).unwrap();
        let b = run_stab_with(&g, &cfg, &o, &SequentialScan).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn time_guard_returns_partial_result() {
        let (g, spec) = instance();
        let sol = celf_with_time_limit(&g, &spec, 150.0, 50, 1, Duration::ZERO).unwrap();
        assert!(sol.guard_tripped);
        assert_eq!(sol.stopped_by, StopReason::Exhausted);
        assert!(sol.seeds.is_empty());
        assert!(celf_with_time_limit(&g, &spec, 151.0, 50, 1, Duration::ZERO).is_err());
    }
}
