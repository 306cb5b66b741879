//! The STAB greedy: sample-count selection, greedy seed accumulation
//! against a sketch oracle, and the stopping rules.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;
use rustc_hash::FxBuildHasher;

use crate::error::{Result, TapError};
use crate::graph::{DirectedGraph, NodeId, NodeSet};
use crate::sketch::{c1_from_stats, merge_entries, merge_stats, RankEntry, SketchOracle};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimator {
    C1,
    C2,
}

/// How the number of worlds follows from `alpha` and `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EllRule {
    /// `ln(2/delta) / (2 alpha^2)`.
    #[default]
    Hoeffding,
    /// `ln(2/delta) / alpha^2`.
    Conservative,
}

/// How the sketch size `k` is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SketchSize {
    /// `(2 + c) ln n / eps^2` for a fixed relative error `eps`.
    Epsilon(f64),
    /// `(2 + c) ln n / (alpha T)^2`.
    ThresholdScaled,
}

impl Default for SketchSize {
    fn default() -> Self {
        SketchSize::Epsilon(0.25)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabConfig {
    pub threshold: f64,
    pub alpha: f64,
    pub delta: f64,
    pub c: f64,
    pub estimator: Estimator,
    pub lazy_eval: bool,
    pub ell_override: Option<usize>,
    pub k_override: Option<usize>,
    pub enforce_cea_stop: bool,
    pub ell_rule: EllRule,
    pub sketch_size: SketchSize,
}

impl StabConfig {
    pub fn new(threshold: f64, alpha: f64) -> Self {
        Self {
            threshold,
            alpha,
            delta: 0.01,
            c: 1.0,
            estimator: Estimator::C2,
            lazy_eval: false,
            ell_override: None,
            k_override: None,
            enforce_cea_stop: true,
            ell_rule: EllRule::Hoeffding,
            sketch_size: SketchSize::default(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |what: &str| Err(TapError::InvalidInput(alloc::format!("invalid config: {what}")));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0,1)");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0,1)");
        }
        if !(self.threshold > 0.0 && self.threshold <= n as f64) {
            return bad("threshold must lie in (0, n]");
        }
        if self.c.is_nan() || self.c < 0.0 {
            return bad("c must be non-negative");
        }
        if let SketchSize::Epsilon(eps) = self.sketch_size {
            if !(eps > 0.0 && eps.is_finite()) {
                return bad("sketch epsilon must be positive");
            }
        }
        if self.ell_override == Some(0) || self.k_override == Some(0) {
            return bad("overrides must be positive");
        }
        Ok(())
    }

    /// The stopping level `T - alpha T`.
    pub fn target(&self) -> f64 {
        self.threshold - self.alpha * self.threshold
    }
}

/// `eta / n^3`, the failure probability under which the size guarantee holds
/// with probability `1 - eta`.
pub fn strict_delta(eta: f64, n: usize) -> f64 {
    let n = n as f64;
    eta / (n * n * n)
}

/// Number of worlds `l` and sketch size `k` for a configuration on `n` nodes.
pub fn choose_sample_counts(cfg: &StabConfig, n: usize) -> Result<(usize, usize)> {
    cfg.validate(n)?;
    let a2 = cfg.alpha * cfg.alpha;
    let base = libm::log(2.0 / cfg.delta);
    let ell = match cfg.ell_rule {
        EllRule::Hoeffding => base / (2.0 * a2),
        EllRule::Conservative => base / a2,
    };
    let ln_n = libm::log(n as f64);
    let k = match cfg.sketch_size {
        SketchSize::Epsilon(eps) => (2.0 + cfg.c) * ln_n / (eps * eps),
        SketchSize::ThresholdScaled => {
            let e = cfg.alpha * cfg.threshold;
            (2.0 + cfg.c) * ln_n / (e * e)
        }
    };
    let ell = cfg.ell_override.unwrap_or(libm::ceil(ell) as usize).max(1);
    let k = cfg.k_override.unwrap_or((libm::ceil(k) as usize).max(2));
    Ok((ell, k))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    ThresholdMet,
    MarginalGainBelowOne,
    Exhausted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceStep {
    pub node: NodeId,
    pub gain: f64,
    pub sigma_hat_after: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TapSolution {
    /// Seeds in the order they were chosen.
    pub seeds: Vec<NodeId>,
    pub estimated_activation: f64,
    pub offset: f64,
    pub trace: Vec<TraceStep>,
    pub stopped_by: StopReason,
    /// Number of marginal-gain evaluations.
    pub evaluations: u64,
    /// Set when a resource guard cut the run short.
    pub guard_tripped: bool,
}

impl TapSolution {
    pub fn seed_set(&self) -> NodeSet {
        self.seeds.iter().copied().collect()
    }
}

/// Incremental estimate of `tau(A)` as seeds are added.
pub trait GreedyState: Sync {
    fn tau(&self) -> f64;
    /// `tau(A + u) - tau(A)`.
    fn gain(&self, oracle: &SketchOracle, u: NodeId) -> f64;
    fn add(&mut self, oracle: &SketchOracle, u: NodeId);
}

/// Keeps the merged sketch `X_A`.
#[derive(Clone, Debug, Default)]
pub struct C1State {
    entries: Vec<RankEntry>,
    tau: f64,
}

impl C1State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn merged(&self) -> &[RankEntry] {
        &self.entries
    }
}

impl GreedyState for C1State {
    fn tau(&self) -> f64 {
        self.tau
    }

    fn gain(&self, oracle: &SketchOracle, u: NodeId) -> f64 {
        let k = oracle.k();
        let (len, last) = merge_stats(&self.entries, oracle.sketch(u).entries(), k);
        let gamma = last.map_or(1.0, |e| e.rank);
        c1_from_stats(len, gamma, k, oracle.ell()) - self.tau
    }

    fn add(&mut self, oracle: &SketchOracle, u: NodeId) {
        let k = oracle.k();
        self.entries = merge_entries(&self.entries, oracle.sketch(u).entries(), k);
        let gamma = self.entries.last().map_or(1.0, |e| e.rank);
        self.tau = c1_from_stats(self.entries.len(), gamma, k, oracle.ell());
    }
}

/// Keeps, for every counted pair, the largest threshold rank among the seeds
/// holding it, plus the running sum of inverse thresholds.
#[derive(Clone, Debug, Default)]
pub struct C2State {
    best: HashMap<u64, f64, FxBuildHasher>,
    inv_sum: f64,
    ell: usize,
}

impl C2State {
    pub fn new() -> Self {
        Self::default()
    }

    fn inv_delta(&self, oracle: &SketchOracle, u: NodeId) -> f64 {
        let x = oracle.sketch(u);
        let gamma = x.threshold_rank().gamma;
        let inv = 1.0 / gamma;
        let counted = x.below_threshold();
        if self.best.is_empty() {
            return counted.len() as f64 * inv;
        }
        let mut fresh = 0usize;
        let mut raise = 0.0;
        for e in counted {
            match self.best.get(&e.pair_key()) {
                None => fresh += 1,
                Some(&cur) if gamma > cur => raise += inv - 1.0 / cur,
                Some(_) => {}
            }
        }
        fresh as f64 * inv + raise
    }
}

impl GreedyState for C2State {
    fn tau(&self) -> f64 {
        if self.ell == 0 {
            0.0
        } else {
            self.inv_sum / self.ell as f64
        }
    }

    fn gain(&self, oracle: &SketchOracle, u: NodeId) -> f64 {
        self.inv_delta(oracle, u) / oracle.ell() as f64
    }

    fn add(&mut self, oracle: &SketchOracle, u: NodeId) {
        self.inv_sum += self.inv_delta(oracle, u);
        self.ell = oracle.ell();
        let x = oracle.sketch(u);
        let gamma = x.threshold_rank().gamma;
        for e in x.below_threshold() {
            let slot = self.best.entry(e.pair_key()).or_insert(gamma);
            if gamma > *slot {
                *slot = gamma;
            }
        }
    }
}

/// Finds the best candidate of one greedy round.
pub trait CandidateScan {
    /// Returns the node with the largest gain among those not in `taken`,
    /// ties going to the smallest id, and the number of evaluations made.
    fn best(
        &self,
        n: usize,
        taken: &NodeSet,
        gain: &(dyn Fn(NodeId) -> f64 + Sync),
    ) -> (Option<(NodeId, f64)>, u64);
}

/// Single-threaded scan in id order.
#[derive(Clone, Copy, Debug, Default)]
pub struct SequentialScan;

impl CandidateScan for SequentialScan {
    fn best(
        &self,
        n: usize,
        taken: &NodeSet,
        gain: &(dyn Fn(NodeId) -> f64 + Sync),
    ) -> (Option<(NodeId, f64)>, u64) {
        let mut best: Option<(NodeId, f64)> = None;
        let mut evals = 0;
        for u in 0..n as NodeId {
            if taken.contains(u) {
                continue;
            }
            let g = gain(u);
            evals += 1;
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((u, g));
            }
        }
        (best, evals)
    }
}

/// Prefers the larger gain, then the smaller id.
pub fn better_candidate(a: (NodeId, f64), b: (NodeId, f64)) -> (NodeId, f64) {
    match a.1.total_cmp(&b.1) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if a.0 <= b.0 {
                a
            } else {
                b
            }
        }
    }
}

fn check_oracle(g: &DirectedGraph, cfg: &StabConfig, oracle: &SketchOracle) -> Result<()> {
    let n = g.node_count();
    let (ell, k) = choose_sample_counts(cfg, n)?;
    if oracle.node_count() != n {
        return Err(TapError::Mismatch(alloc::format!(
            "oracle covers {} nodes, graph has {n}",
            oracle.node_count()
        )));
    }
    if oracle.ell() != ell || oracle.k() != k {
        return Err(TapError::Mismatch(alloc::format!(
            "oracle has l = {}, k = {}; config asks for l = {ell}, k = {k}",
            oracle.ell(),
            oracle.k()
        )));
    }
    Ok(())
}

/// Runs STAB with a sequential candidate scan.
pub fn run_stab(g: &DirectedGraph, cfg: &StabConfig, oracle: &SketchOracle) -> Result<TapSolution> {
    run_stab_with(g, cfg, oracle, &SequentialScan)
}

/// Runs STAB; `scan` is used by the plain (non-lazy) greedy.
pub fn run_stab_with<S: CandidateScan + ?Sized>(
    g: &DirectedGraph,
    cfg: &StabConfig,
    oracle: &SketchOracle,
    scan: &S,
) -> Result<TapSolution> {
    check_oracle(g, cfg, oracle)?;
    match (cfg.estimator, cfg.lazy_eval) {
        (Estimator::C1, false) => Ok(greedy(cfg, oracle, C1State::new(), scan)),
        (Estimator::C2, false) => Ok(greedy(cfg, oracle, C2State::new(), scan)),
        (Estimator::C1, true) => Ok(lazy_greedy(cfg, oracle, C1State::new())),
        (Estimator::C2, true) => Ok(lazy_greedy(cfg, oracle, C2State::new())),
    }
}

struct Run {
    seeds: Vec<NodeId>,
    taken: NodeSet,
    trace: Vec<TraceStep>,
    evaluations: u64,
}

impl Run {
    fn new(n: usize) -> Self {
        Self {
            seeds: Vec::new(),
            taken: NodeSet::with_capacity(n),
            trace: Vec::new(),
            evaluations: 0,
        }
    }

    fn push<St: GreedyState>(&mut self, state: &mut St, oracle: &SketchOracle, u: NodeId, gain: f64) {
        state.add(oracle, u);
        self.seeds.push(u);
        self.taken.insert(u);
        self.trace.push(TraceStep {
            node: u,
            gain,
            sigma_hat_after: oracle.sigma_hat(state.tau()),
        });
    }

    fn finish<St: GreedyState>(self, state: &St, oracle: &SketchOracle, stopped_by: StopReason) -> TapSolution {
        TapSolution {
            seeds: self.seeds,
            estimated_activation: oracle.sigma_hat(state.tau()),
            offset: oracle.offset(),
            trace: self.trace,
            stopped_by,
            evaluations: self.evaluations,
            guard_tripped: false,
        }
    }
}

/// Greedy loop shared by both estimators.
pub fn greedy<St: GreedyState, S: CandidateScan + ?Sized>(
    cfg: &StabConfig,
    oracle: &SketchOracle,
    mut state: St,
    scan: &S,
) -> TapSolution {
    let n = oracle.node_count();
    let target = cfg.target();
    let mut run = Run::new(n);
    let stop = loop {
        if oracle.sigma_hat(state.tau()) >= target {
            break StopReason::ThresholdMet;
        }
        if run.seeds.len() == n {
            break StopReason::Exhausted;
        }
        let st = &state;
        let (best, evals) = scan.best(n, &run.taken, &|u| st.gain(oracle, u));
        run.evaluations += evals;
        let Some((u, gain)) = best else {
            break StopReason::Exhausted;
        };
        if cfg.enforce_cea_stop && gain < 1.0 {
            break StopReason::MarginalGainBelowOne;
        }
        run.push(&mut state, oracle, u, gain);
    };
    run.finish(&state, oracle, stop)
}

/// Queue entry of a lazy greedy: a possibly stale gain and the round it was
/// computed in. The queue top is the largest gain, then the smallest id.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Bound {
    pub gain: f64,
    pub node: NodeId,
    pub round: usize,
}

impl PartialEq for Bound {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Bound {}

impl PartialOrd for Bound {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Bound {
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then(other.node.cmp(&self.node))
    }
}

/// Lazy greedy: stale gains serve as upper bounds and only the top of the
/// queue is re-evaluated.
pub fn lazy_greedy<St: GreedyState>(cfg: &StabConfig, oracle: &SketchOracle, mut state: St) -> TapSolution {
    let n = oracle.node_count();
    let target = cfg.target();
    let mut run = Run::new(n);
    let mut heap: BinaryHeap<Bound> = BinaryHeap::new();
    let mut started = false;
    let stop = loop {
        if oracle.sigma_hat(state.tau()) >= target {
            break StopReason::ThresholdMet;
        }
        if run.seeds.len() == n {
            break StopReason::Exhausted;
        }
        let round = run.seeds.len();
        if !started {
            let mut all = vec![];
            for u in 0..n as NodeId {
                all.push(Bound {
                    gain: state.gain(oracle, u),
                    node: u,
                    round,
                });
            }
            run.evaluations += n as u64;
            heap = BinaryHeap::from(all);
            started = true;
        }
        let st = &state;
        let Some(top) = pop_fresh(&mut heap, round, &mut run.evaluations, |u| st.gain(oracle, u)) else {
            break StopReason::Exhausted;
        };
        if cfg.enforce_cea_stop && top.gain < 1.0 {
            break StopReason::MarginalGainBelowOne;
        }
        run.push(&mut state, oracle, top.node, top.gain);
    };
    run.finish(&state, oracle, stop)
}

/// Re-evaluates the queue top until it is current for `round`, then pops it.
pub(crate) fn pop_fresh<F: FnMut(NodeId) -> f64>(
    heap: &mut BinaryHeap<Bound>,
    round: usize,
    evaluations: &mut u64,
    mut gain: F,
) -> Option<Bound> {
    loop {
        let mut top = heap.pop()?;
        if top.round == round {
            return Some(top);
        }
        top.gain = gain(top.node);
        top.round = round;
        *evaluations += 1;
        heap.push(top);
    }
}
