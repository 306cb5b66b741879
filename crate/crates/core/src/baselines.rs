//! Ground truth and reference solvers: Monte Carlo evaluation of a seed set,
//! the CELF greedy for TAP, plain greedy, and exhaustive minimum seed sets.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Result, TapError};
use crate::exact::ExactSigma;
use crate::graph::{DirectedGraph, NodeId, NodeSet, Traversal};
use crate::influence::{
    residual_reach_total, sample_external_seeds, sample_live_edge_graph, simulate_cascade, InfluenceSpec,
    SampledWorld,
};
use crate::rng::{self, Domain};
use crate::stab::{pop_fresh, Bound, StopReason, TapSolution, TraceStep};

/// Largest instance accepted by the exhaustive solvers.
pub const MAX_EXHAUSTIVE_NODES: usize = 14;

/// Default number of Monte Carlo worlds per CELF round.
pub const DEFAULT_CELF_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalReport {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    /// `mean / T`, when a threshold was given.
    pub normalized: Option<f64>,
}

/// Sum and sum of squares of cascade sizes for samples `range`. Sample `i`
/// always uses stream `i`, so disjoint ranges can run anywhere and be added.
pub fn cascade_sums(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    seeds: &NodeSet,
    range: Range<u64>,
    rng_seed: u64,
) -> Result<(u64, u128)> {
    let mut sum = 0u64;
    let mut sq = 0u128;
    for i in range {
        let size = simulate_cascade(g, spec, seeds, &mut rng::stream(rng_seed, Domain::Cascade, i))? as u64;
        sum += size;
        sq += size as u128 * size as u128;
    }
    Ok((sum, sq))
}

/// Mean and standard error from integer sums.
pub fn report_from_sums(sum: u64, sum_sq: u128, samples: u64, threshold: Option<f64>) -> EvalReport {
    let n = samples as f64;
    let mean = sum as f64 / n;
    let std_error = if samples > 1 {
        let s = sum as u128;
        let spread = (samples as u128 * sum_sq).saturating_sub(s * s);
        libm::sqrt(spread as f64 / (n * (n - 1.0)) / n)
    } else {
        0.0
    };
    EvalReport {
        mean,
        std_error,
        samples,
        normalized: threshold.map(|t| mean / t),
    }
}

/// Monte Carlo estimate of `sigma(seeds)` from `num_samples` cascades.
pub fn evaluate_seed_set(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    seeds: &NodeSet,
    num_samples: u64,
    rng_seed: u64,
) -> Result<EvalReport> {
    if num_samples == 0 {
        return Err(TapError::InvalidInput("num_samples must be >= 1".into()));
    }
    let (sum, sq) = cascade_sums(g, spec, seeds, 0..num_samples, rng_seed)?;
    Ok(report_from_sums(sum, sq, num_samples, None))
}

/// Source of activation estimates for the greedy baselines. Each round may
/// use its own randomness; gains within a round are mutually consistent.
pub trait ActivationOracle {
    fn node_count(&self) -> usize;
    /// Starts round `round` with seed set `seeds`; returns `sigma(seeds)`.
    fn begin_round(&mut self, round: usize, seeds: &NodeSet) -> Result<f64>;
    /// `sigma(seeds + u) - sigma(seeds)` for the current round.
    fn gain(&mut self, u: NodeId) -> f64;
}

/// Monte Carlo oracle: every round draws fresh live-edge worlds, shared by
/// all gain evaluations of that round.
pub struct McActivation<'a> {
    g: &'a DirectedGraph,
    spec: &'a InfluenceSpec,
    samples: usize,
    seed: u64,
    worlds: Vec<DirectedGraph>,
    base: Vec<NodeSet>,
    seen: Vec<u32>,
    epoch: u32,
    queue: Vec<NodeId>,
}

impl<'a> McActivation<'a> {
    pub fn new(g: &'a DirectedGraph, spec: &'a InfluenceSpec, samples: usize, seed: u64) -> Result<Self> {
        if samples == 0 {
            return Err(TapError::InvalidInput("CELF needs at least one sample".into()));
        }
        spec.validate(g)?;
        Ok(Self {
            g,
            spec,
            samples,
            seed,
            worlds: Vec::new(),
            base: Vec::new(),
            seen: vec![0; g.node_count()],
            epoch: 0,
            queue: Vec::new(),
        })
    }
}

impl ActivationOracle for McActivation<'_> {
    fn node_count(&self) -> usize {
        self.g.node_count()
    }

    fn begin_round(&mut self, round: usize, seeds: &NodeSet) -> Result<f64> {
        let n = self.g.node_count();
        self.worlds.clear();
        self.base.clear();
        let mut trav = Traversal::new(n);
        let mut total = 0u64;
        for j in 0..self.samples {
            let index = (round as u64) << 32 | j as u64;
            let mut r = rng::stream(self.seed, Domain::Celf, index);
            let live = sample_live_edge_graph(self.g, &self.spec.trig, &mut r)?;
            let mut start = sample_external_seeds(&self.spec.ext, n, &mut r);
            start.union_with(seeds);
            let mut reached = NodeSet::with_capacity(n);
            trav.forward(&live, start.iter(), |v| {
                reached.insert(v);
            });
            total += reached.len() as u64;
            self.worlds.push(live);
            self.base.push(reached);
        }
        Ok(total as f64 / self.samples as f64)
    }

    fn gain(&mut self, u: NodeId) -> f64 {
        let mut total = 0u64;
        for (live, base) in self.worlds.iter().zip(&self.base) {
            if base.contains(u) {
                continue;
            }
            self.epoch = self.epoch.wrapping_add(1);
            if self.epoch == 0 {
                self.seen.iter_mut().for_each(|s| *s = 0);
                self.epoch = 1;
            }
            let epoch = self.epoch;
            self.queue.clear();
            self.queue.push(u);
            self.seen[u as usize] = epoch;
            let mut head = 0;
            while head < self.queue.len() {
                let x = self.queue[head];
                head += 1;
                for &y in live.out_neighbors(x) {
                    if self.seen[y as usize] != epoch && !base.contains(y) {
                        self.seen[y as usize] = epoch;
                        self.queue.push(y);
                    }
                }
            }
            total += self.queue.len() as u64;
        }
        total as f64 / self.samples as f64
    }
}

/// Exact oracle over an enumerated instance.
pub struct ExactActivation<'a> {
    sigma: &'a ExactSigma,
    mask: u64,
}

impl<'a> ExactActivation<'a> {
    pub fn new(sigma: &'a ExactSigma) -> Self {
        Self { sigma, mask: 0 }
    }
}

impl ActivationOracle for ExactActivation<'_> {
    fn node_count(&self) -> usize {
        self.sigma.node_count()
    }

    fn begin_round(&mut self, _round: usize, seeds: &NodeSet) -> Result<f64> {
        self.mask = self.sigma.mask_of(seeds)?;
        Ok(self.sigma.sigma_f64(self.mask))
    }

    fn gain(&mut self, u: NodeId) -> f64 {
        self.sigma.gain_f64(self.mask, u)
    }
}

struct GreedyRun {
    seeds: Vec<NodeId>,
    taken: NodeSet,
    trace: Vec<TraceStep>,
    evaluations: u64,
}

fn run_greedy<O, G, P>(oracle: &mut O, threshold: f64, guard: &mut G, mut pick: P) -> Result<TapSolution>
where
    O: ActivationOracle + ?Sized,
    G: FnMut() -> bool + ?Sized,
    P: FnMut(&mut O, usize, &NodeSet, &mut u64) -> Option<(NodeId, f64)>,
{
    let n = oracle.node_count();
    let mut run = GreedyRun {
        seeds: Vec::new(),
        taken: NodeSet::with_capacity(n),
        trace: Vec::new(),
        evaluations: 0,
    };
    let mut guard_tripped = false;
    let (estimate, stop) = loop {
        let round = run.seeds.len();
        let est = oracle.begin_round(round, &run.taken)?;
        if est >= threshold {
            break (est, StopReason::ThresholdMet);
        }
        if guard() {
            guard_tripped = true;
            break (est, StopReason::Exhausted);
        }
        let Some((u, gain)) = pick(oracle, round, &run.taken, &mut run.evaluations) else {
            break (est, StopReason::Exhausted);
        };
        run.seeds.push(u);
        run.taken.insert(u);
        run.trace.push(TraceStep {
            node: u,
            gain,
            sigma_hat_after: est + gain,
        });
    };
    Ok(TapSolution {
        seeds: run.seeds,
        estimated_activation: estimate,
        offset: 0.0,
        trace: run.trace,
        stopped_by: stop,
        evaluations: run.evaluations,
        guard_tripped,
    })
}

/// Plain greedy: every round evaluates every remaining node.
pub fn greedy_tap<O, G>(oracle: &mut O, threshold: f64, guard: &mut G) -> Result<TapSolution>
where
    O: ActivationOracle + ?Sized,
    G: FnMut() -> bool + ?Sized,
{
    run_greedy(oracle, threshold, guard, |o, _, taken, evals| {
        let mut best: Option<(NodeId, f64)> = None;
        for u in 0..o.node_count() as NodeId {
            if taken.contains(u) {
                continue;
            }
            let g = o.gain(u);
            *evals += 1;
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((u, g));
            }
        }
        best
    })
}

/// Lazy greedy over any activation oracle. `guard` is polled once per round;
/// returning true ends the run early with the partial seed set.
pub fn celf_tap_with<O, G>(oracle: &mut O, threshold: f64, guard: &mut G) -> Result<TapSolution>
where
    O: ActivationOracle + ?Sized,
    G: FnMut() -> bool + ?Sized,
{
    let mut heap: Option<BinaryHeap<Bound>> = None;
    run_greedy(oracle, threshold, guard, |o, round, _, evals| {
        let heap = heap.get_or_insert_with(|| {
            let n = o.node_count();
            *evals += n as u64;
            (0..n as NodeId)
                .map(|u| Bound {
                    gain: o.gain(u),
                    node: u,
                    round,
                })
                .collect()
        });
        pop_fresh(heap, round, evals, |u| o.gain(u)).map(|b| (b.node, b.gain))
    })
}

/// CELF with Monte Carlo gains: stops once the estimated activation of the
/// seed set reaches `threshold`.
pub fn celf_tap(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    threshold: f64,
    num_mc_samples: usize,
    rng_seed: u64,
) -> Result<TapSolution> {
    if threshold.is_nan() || threshold > g.node_count() as f64 {
        return Err(TapError::InvalidInput("threshold exceeds n".into()));
    }
    let mut oracle = McActivation::new(g, spec, num_mc_samples, rng_seed)?;
    celf_tap_with(&mut oracle, threshold, &mut || false)
}

/// Smallest set (then lexicographically smallest) whose mask satisfies
/// `meets`, searching sets of size 0, 1, ... Returns `None` if no subset does.
pub fn exhaustive_min_set<F: FnMut(u64) -> bool>(n: usize, cap: usize, mut meets: F) -> Result<Option<NodeSet>> {
    if n > cap || n > 63 {
        return Err(TapError::TooLarge(alloc::format!(
            "exhaustive search over {n} nodes exceeds the cap of {cap}"
        )));
    }
    for size in 0..=n {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let mask = idx.iter().fold(0u64, |m, &i| m | 1 << i);
            if meets(mask) {
                return Ok(Some(NodeSet::from_mask(mask)));
            }
            let Some(pos) = (0..size).rev().find(|&p| idx[p] < n - size + p) else {
                break;
            };
            idx[pos] += 1;
            for p in pos + 1..size {
                idx[p] = idx[p - 1] + 1;
            }
        }
    }
    Ok(None)
}

/// Minimum seed set with exact `sigma(A) >= threshold`.
pub fn exhaustive_tap_exact(sigma: &ExactSigma, threshold: f64) -> Result<Option<NodeSet>> {
    exhaustive_min_set(sigma.node_count(), MAX_EXHAUSTIVE_NODES, |m| sigma.meets(m, threshold))
}

/// `tau(A) + O` over fixed worlds, computed the way an exact sketch oracle
/// computes it.
pub fn sigma_hat_worlds(worlds: &[SampledWorld], seeds: &NodeSet) -> Result<f64> {
    if worlds.is_empty() {
        return Err(TapError::InvalidInput("need at least one world".into()));
    }
    let ell = worlds.len() as f64;
    let ext: u64 = worlds.iter().map(|w| w.external_reach_size as u64).sum();
    Ok(residual_reach_total(worlds, seeds)? as f64 / ell + ext as f64 / ell)
}

/// Minimum seed set with `sigma_hat(A) >= threshold` over fixed worlds.
pub fn exhaustive_tap_worlds(worlds: &[SampledWorld], threshold: f64) -> Result<Option<NodeSet>> {
    let n = worlds
        .first()
        .ok_or_else(|| TapError::InvalidInput("need at least one world".into()))?
        .residual
        .node_count();
    let mut err = None;
    let found = exhaustive_min_set(n, MAX_EXHAUSTIVE_NODES, |m| {
        match sigma_hat_worlds(worlds, &NodeSet::from_mask(m)) {
            Ok(v) => v >= threshold,
            Err(e) => {
                err = Some(e);
                true
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::influence::{ExternalSpec, TriggeringSpec};

    fn ic(g: &DirectedGraph, p: f64) -> InfluenceSpec {
        InfluenceSpec::new(
            TriggeringSpec::IndependentCascade {
                edge_prob: vec![p; g.edge_count()],
            },
            ExternalSpec::None,
        )
    }

    fn chain(n: u32) -> DirectedGraph {
        DirectedGraph::from_edges(n as usize, (1..n).map(|v| (v - 1, v))).unwrap()
    }

    #[test]
    fn evaluation_trivia() {
        let g = chain(5);
        let seeds: NodeSet = [0, 2].into_iter().collect();
        let r = evaluate_seed_set(&g, &ic(&g, 0.0), &seeds, 50, 1).unwrap();
        assert_eq!((r.mean, r.std_error, r.samples), (2.0, 0.0, 50));
        let r = evaluate_seed_set(&g, &ic(&g, 1.0), &[0].into_iter().collect(), 10, 1).unwrap();
        assert_eq!(r.mean, 5.0);
        assert!(evaluate_seed_set(&g, &ic(&g, 1.0), &seeds, 0, 1).is_err());
    }

    #[test]
    fn report_statistics() {
        // sizes 1, 2, 3: mean 2, sample variance 1
        let r = report_from_sums(6, 14, 3, Some(4.0));
        assert_eq!(r.mean, 2.0);
        assert!((r.std_error - libm::sqrt(1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(r.normalized, Some(0.5));
    }

    #[test]
    fn celf_on_star_and_small_threshold() {
        let g = DirectedGraph::from_edges(6, (1..6).map(|v| (0, v))).unwrap();
        let sol = celf_tap(&g, &ic(&g, 1.0), 6.0, 20, 3).unwrap();
        assert_eq!(sol.seeds, [0]);
        assert_eq!(sol.stopped_by, StopReason::ThresholdMet);
        let sol = celf_tap(&g, &ic(&g, 1.0), 1.0, 20, 3).unwrap();
        assert_eq!(sol.seeds, [0]);
        assert!(celf_tap(&g, &ic(&g, 1.0), 7.0, 20, 3).is_err());
    }

    #[test]
    fn exhaustive_examples() {
        let g = chain(5);
        let exact = ExactSigma::new(&g, &ic(&g, 1.0)).unwrap();
        assert_eq!(exhaustive_tap_exact(&exact, 0.0).unwrap(), Some(NodeSet::new()));
        assert_eq!(exhaustive_tap_exact(&exact, 5.0).unwrap(), Some([0].into_iter().collect()));
        let split = ExactSigma::new(&g, &ic(&g, 0.0)).unwrap();
        assert_eq!(exhaustive_tap_exact(&split, 2.0).unwrap(), Some([0, 1].into_iter().collect()));
        assert!(exhaustive_min_set(15, MAX_EXHAUSTIVE_NODES, |_| true).is_err());
    }

    #[test]
    fn exhaustive_enumerates_lexicographically() {
        let mut seen = Vec::new();
        let _ = exhaustive_min_set(4, 14, |m| {
            seen.push(m);
            false
        });
        assert_eq!(seen.len(), 16);
        assert_eq!(&seen[..8], &[0, 1, 2, 4, 8, 0b11, 0b101, 0b1001]);
    }

    #[test]
    fn exact_celf_equals_plain_greedy() {
        let g = DirectedGraph::from_edges(5, [(0, 1), (1, 2), (3, 4), (0, 3)]).unwrap();
        let spec = ic(&g, 0.5);
        let exact = ExactSigma::new(&g, &spec).unwrap();
        let a = greedy_tap(&mut ExactActivation::new(&exact), 4.5, &mut || false).unwrap();
        let b = celf_tap_with(&mut ExactActivation::new(&exact), 4.5, &mut || false).unwrap();
        assert_eq!(a.seeds, b.seeds);
        assert_eq!(a.trace, b.trace);
        assert!(b.evaluations <= a.evaluations);
    }

    #[test]
    fn guard_stops_run() {
        let g = chain(4);
        let exact = ExactSigma::new(&g, &ic(&g, 0.0)).unwrap();
        let sol = celf_tap_with(&mut ExactActivation::new(&exact), 4.0, &mut || true).unwrap();
        assert!(sol.seeds.is_empty());
        assert!(sol.guard_tripped);
        assert_eq!(sol.stopped_by, StopReason::Exhausted);
    }
}
