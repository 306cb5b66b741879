//! Triggering-model and external-influence specifications, live-edge world
//! sampling, and a process-level cascade simulator used as an independent
//! check of the live-edge view.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, RngCore};

use crate::error::{Result, TapError};
use crate::graph::{reachable_set, remove_closed_set, DirectedGraph, NodeId, NodeSet, Traversal};
use crate::rng::{self, Domain};

/// User-supplied triggering distribution: fills `out` with a random subset of
/// the in-neighbors of `v`.
pub trait TriggerSampler: Send + Sync {
    fn sample_triggers(
        &self,
        g: &DirectedGraph,
        v: NodeId,
        rng: &mut dyn RngCore,
        out: &mut Vec<NodeId>,
    );
}

/// User-supplied distribution over externally activated node sets.
pub trait ExternalSampler: Send + Sync {
    fn sample_external(&self, n: usize, rng: &mut dyn RngCore, out: &mut NodeSet);
}

/// Internal propagation model.
#[derive(Clone)]
pub enum TriggeringSpec {
    /// Independent cascade; one probability per edge id.
    IndependentCascade { edge_prob: Vec<f64> },
    /// Linear threshold; one weight per edge id, incoming weights sum to at
    /// most one at every node.
    LinearThreshold { edge_weight: Vec<f64> },
    Generic(Arc<dyn TriggerSampler>),
}

impl fmt::Debug for TriggeringSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IndependentCascade { edge_prob } => f
                .debug_struct("IndependentCascade")
                .field("edges", &edge_prob.len())
                .finish(),
            Self::LinearThreshold { edge_weight } => f
                .debug_struct("LinearThreshold")
                .field("edges", &edge_weight.len())
                .finish(),
            Self::Generic(_) => f.write_str("Generic"),
        }
    }
}

impl TriggeringSpec {
    /// Independent cascade with `ip_e ~ U[0, ip_max]`, drawn once from the
    /// parameter stream of `param_seed`.
    pub fn uniform_ic(g: &DirectedGraph, ip_max: f64, param_seed: u64) -> Result<Self> {
        check_unit("ip_max", ip_max)?;
        let mut rng = rng::stream(param_seed, Domain::Params, 0);
        let edge_prob = (0..g.edge_count())
            .map(|_| ip_max * rng.random::<f64>())
            .collect();
        Ok(Self::IndependentCascade { edge_prob })
    }

    /// Linear threshold with `w(u, v) = U[0, ip_max] / indeg(v)`, which keeps
    /// every incoming sum at or below `ip_max`.
    pub fn uniform_lt(g: &DirectedGraph, ip_max: f64, param_seed: u64) -> Result<Self> {
        check_unit("ip_max", ip_max)?;
        let mut rng = rng::stream(param_seed, Domain::Params, 0);
        let mut edge_weight = vec![0.0; g.edge_count()];
        for v in 0..g.node_count() as NodeId {
            let d = g.in_degree(v) as f64;
            for (_, e) in g.in_edges(v) {
                edge_weight[e] = ip_max * rng.random::<f64>() / d;
            }
        }
        Ok(Self::LinearThreshold { edge_weight })
    }

    pub fn validate(&self, g: &DirectedGraph) -> Result<()> {
        match self {
            Self::IndependentCascade { edge_prob } => {
                check_len("edge_prob", edge_prob.len(), g.edge_count())?;
                edge_prob.iter().try_for_each(|&p| check_unit("edge_prob", p))
            }
            Self::LinearThreshold { edge_weight } => {
                check_len("edge_weight", edge_weight.len(), g.edge_count())?;
                edge_weight.iter().try_for_each(|&w| check_unit("edge_weight", w))?;
                for v in 0..g.node_count() as NodeId {
                    let total: f64 = g.in_edges(v).map(|(_, e)| edge_weight[e]).sum();
                    if total > 1.0 + 1e-12 {
                        return Err(TapError::InvalidProbability {
                            what: "incoming weight sum",
                            value: total,
                        });
                    }
                }
                Ok(())
            }
            Self::Generic(_) => Ok(()),
        }
    }
}

/// External activation model.
#[derive(Clone, Default)]
pub enum ExternalSpec {
    #[default]
    None,
    /// Node `u` is activated externally with probability `node_prob[u]`.
    IndependentBernoulli { node_prob: Vec<f64> },
    Generic(Arc<dyn ExternalSampler>),
}

impl fmt::Debug for ExternalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("None"),
            Self::IndependentBernoulli { node_prob } => f
                .debug_struct("IndependentBernoulli")
                .field("nodes", &node_prob.len())
                .finish(),
            Self::Generic(_) => f.write_str("Generic"),
        }
    }
}

impl ExternalSpec {
    /// `ep_u = ep_max * U_u` with `U_u` frozen by `param_seed`, so a sweep
    /// over `ep_max` scales one fixed draw.
    pub fn uniform(n: usize, ep_max: f64, param_seed: u64) -> Result<Self> {
        check_unit("ep_max", ep_max)?;
        if ep_max == 0.0 {
            return Ok(Self::None);
        }
        let mut rng = rng::stream(param_seed, Domain::Params, 1);
        let node_prob = (0..n).map(|_| ep_max * rng.random::<f64>()).collect();
        Ok(Self::IndependentBernoulli { node_prob })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::IndependentBernoulli { node_prob } => {
                check_len("node_prob", node_prob.len(), n)?;
                node_prob.iter().try_for_each(|&p| check_unit("node_prob", p))
            }
            Self::None | Self::Generic(_) => Ok(()),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, Self::None)
    }
}

/// Internal model combined with external activation.
#[derive(Clone, Debug)]
pub struct InfluenceSpec {
    pub trig: TriggeringSpec,
    pub ext: ExternalSpec,
}

impl InfluenceSpec {
    pub fn new(trig: TriggeringSpec, ext: ExternalSpec) -> Self {
        Self { trig, ext }
    }

    pub fn validate(&self, g: &DirectedGraph) -> Result<()> {
        self.trig.validate(g)?;
        self.ext.validate(g.node_count())
    }
}

fn check_unit(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TapError::InvalidProbability { what, value: p })
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got == want {
        Ok(())
    } else {
        Err(TapError::InvalidInput(alloc::format!(
            "{what} has {got} entries, graph needs {want}"
        )))
    }
}

/// One residual reachability instance: the live-edge graph with the closure
/// of its external seed set deleted.
#[derive(Clone, Debug)]
pub struct SampledWorld {
    pub residual: DirectedGraph,
    pub external_reach_size: usize,
    pub world_index: u64,
}

/// Draws one live-edge graph.
pub fn sample_live_edge_graph(
    g: &DirectedGraph,
    trig: &TriggeringSpec,
    rng: &mut dyn RngCore,
) -> Result<DirectedGraph> {
    let n = g.node_count();
    match trig {
        TriggeringSpec::IndependentCascade { edge_prob } => {
            let kept: Vec<(NodeId, NodeId)> = g
                .edges()
                .zip(edge_prob)
                .filter(|(_, &p)| rng.random::<f64>() < p)
                .map(|(e, _)| e)
                .collect();
            Ok(DirectedGraph::from_sorted_unique(n, &kept, None))
        }
        TriggeringSpec::LinearThreshold { edge_weight } => {
            let mut kept = Vec::new();
            for v in 0..n as NodeId {
                let r: f64 = rng.random();
                let mut acc = 0.0;
                for (u, e) in g.in_edges(v) {
                    acc += edge_weight[e];
                    if r < acc {
                        kept.push((u, v));
                        break;
                    }
                }
            }
            kept.sort_unstable();
            Ok(DirectedGraph::from_sorted_unique(n, &kept, None))
        }
        TriggeringSpec::Generic(sampler) => {
            let mut kept = Vec::new();
            let mut buf = Vec::new();
            for v in 0..n as NodeId {
                buf.clear();
                sampler.sample_triggers(g, v, rng, &mut buf);
                buf.sort_unstable();
                buf.dedup();
                for &u in &buf {
                    if g.in_neighbors(v).binary_search(&u).is_err() {
                        return Err(TapError::InvalidTrigger { node: v, member: u });
                    }
                    kept.push((u, v));
                }
            }
            kept.sort_unstable();
            Ok(DirectedGraph::from_sorted_unique(n, &kept, None))
        }
    }
}

/// Draws one externally activated seed set.
pub fn sample_external_seeds(ext: &ExternalSpec, n: usize, rng: &mut dyn RngCore) -> NodeSet {
    let mut out = NodeSet::with_capacity(n);
    match ext {
        ExternalSpec::None => {}
        ExternalSpec::IndependentBernoulli { node_prob } => {
            for (u, &p) in node_prob.iter().enumerate() {
                if rng.random::<f64>() < p {
                    out.insert(u as NodeId);
                }
            }
        }
        ExternalSpec::Generic(sampler) => sampler.sample_external(n, rng, &mut out),
    }
    out
}

/// Live-edge graph and external seeds of world `world_index`, each from its
/// own stream under `seed`.
pub fn sample_world_parts(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    world_index: u64,
    seed: u64,
) -> Result<(DirectedGraph, NodeSet)> {
    let live = sample_live_edge_graph(
        g,
        &spec.trig,
        &mut rng::stream(seed, Domain::LiveEdge, world_index),
    )?;
    let ext = sample_external_seeds(
        &spec.ext,
        g.node_count(),
        &mut rng::stream(seed, Domain::External, world_index),
    );
    Ok((live, ext))
}

/// Samples world `world_index` and converts it to a residual instance.
pub fn make_world(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    world_index: u64,
    seed: u64,
) -> Result<SampledWorld> {
    let (live, ext) = sample_world_parts(g, spec, world_index, seed)?;
    let closure = reachable_set(&live, &ext)?;
    let residual = remove_closed_set(&live, &closure)?;
    Ok(SampledWorld {
        residual,
        external_reach_size: closure.len(),
        world_index,
    })
}

/// Activation count of `seeds` in one freshly sampled live-edge world,
/// external seeds included.
pub fn live_edge_activation(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    seeds: &NodeSet,
    rng: &mut dyn RngCore,
) -> Result<usize> {
    let live = sample_live_edge_graph(g, &spec.trig, rng)?;
    let mut start = sample_external_seeds(&spec.ext, g.node_count(), rng);
    start.union_with(seeds);
    Ok(reachable_set(&live, &start)?.len())
}

/// Runs the discrete-time activation process and returns the number of
/// active nodes once it stops. External activation happens once, at t = 0,
/// alongside the seeds.
pub fn simulate_cascade(
    g: &DirectedGraph,
    spec: &InfluenceSpec,
    seeds: &NodeSet,
    rng: &mut dyn RngCore,
) -> Result<usize> {
    let n = g.node_count();
    if let Some(id) = seeds.max_id() {
        g.check_node(id)?;
    }
    let mut active = vec![false; n];
    let mut frontier: Vec<NodeId> = Vec::new();
    let ext = sample_external_seeds(&spec.ext, n, rng);
    for v in seeds.iter().chain(ext.iter()) {
        if !active[v as usize] {
            active[v as usize] = true;
            frontier.push(v);
        }
    }
    let mut head = 0;
    match &spec.trig {
        TriggeringSpec::IndependentCascade { edge_prob } => {
            while head < frontier.len() {
                let u = frontier[head];
                head += 1;
                for (e, &v) in g.out_edge_ids(u).zip(g.out_neighbors(u)) {
                    if !active[v as usize] && rng.random::<f64>() < edge_prob[e] {
                        active[v as usize] = true;
                        frontier.push(v);
                    }
                }
            }
        }
        TriggeringSpec::LinearThreshold { edge_weight } => {
            let mut threshold = vec![f64::NAN; n];
            let mut incoming = vec![0.0f64; n];
            while head < frontier.len() {
                let u = frontier[head];
                head += 1;
                for (e, &v) in g.out_edge_ids(u).zip(g.out_neighbors(u)) {
                    let vi = v as usize;
                    if active[vi] {
                        continue;
                    }
                    if threshold[vi].is_nan() {
                        threshold[vi] = rng::open_unit(rng.next_u64());
                    }
                    incoming[vi] += edge_weight[e];
                    if incoming[vi] >= threshold[vi] {
                        active[vi] = true;
                        frontier.push(v);
                    }
                }
            }
        }
        TriggeringSpec::Generic(sampler) => {
            let mut triggers: Vec<Option<Vec<NodeId>>> = vec![None; n];
            while head < frontier.len() {
                let u = frontier[head];
                head += 1;
                for &v in g.out_neighbors(u) {
                    let vi = v as usize;
                    if active[vi] {
                        continue;
                    }
                    let set = triggers[vi].get_or_insert_with(|| {
                        let mut buf = Vec::new();
                        sampler.sample_triggers(g, v, rng, &mut buf);
                        buf
                    });
                    if set.contains(&u) {
                        active[vi] = true;
                        frontier.push(v);
                    }
                }
            }
        }
    }
    Ok(frontier.len())
}

/// Exact average residual reach `(1/l) * sum_i tau_i(seeds)`, as the integer
/// numerator `sum_i tau_i(seeds)`.
pub fn residual_reach_total(worlds: &[SampledWorld], seeds: &NodeSet) -> Result<u64> {
    let mut t = Traversal::new(worlds.first().map_or(0, |w| w.residual.node_count()));
    let mut total = 0u64;
    for w in worlds {
        if let Some(id) = seeds.max_id() {
            w.residual.check_node(id)?;
        }
        total += t.forward_count(&w.residual, seeds.iter()) as u64;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_er;

    fn chain(n: usize) -> DirectedGraph {
        DirectedGraph::from_edges(n, (0..n as u32 - 1).map(|i| (i, i + 1))).unwrap()
    }

    fn ic(g: &DirectedGraph, p: f64) -> TriggeringSpec {
        TriggeringSpec::IndependentCascade {
            edge_prob: vec![p; g.edge_count()],
        }
    }

    #[test]
    fn certain_and_impossible_edges() {
        let g = generate_er(30, 0.2, 3).unwrap();
        let mut r = rng::stream(1, Domain::LiveEdge, 0);
        assert_eq!(sample_live_edge_graph(&g, &ic(&g, 1.0), &mut r).unwrap(), g);
        assert_eq!(sample_live_edge_graph(&g, &ic(&g, 0.0), &mut r).unwrap().edge_count(), 0);
    }

    #[test]
    fn lt_keeps_at_most_one_in_edge() {
        let g = generate_er(40, 0.2, 5).unwrap();
        let spec = TriggeringSpec::uniform_lt(&g, 1.0, 2).unwrap();
        spec.validate(&g).unwrap();
        let mut r = rng::stream(1, Domain::LiveEdge, 0);
        for _ in 0..20 {
            let h = sample_live_edge_graph(&g, &spec, &mut r).unwrap();
            assert!((0..40).all(|v| h.in_degree(v) <= 1));
        }
    }

    #[test]
    fn lt_rejects_overweight_node() {
        let g = DirectedGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        let spec = TriggeringSpec::LinearThreshold {
            edge_weight: vec![0.7, 0.6],
        };
        assert!(spec.validate(&g).is_err());
    }

    #[test]
    fn external_variants() {
        let mut r = rng::stream(1, Domain::External, 0);
        assert!(sample_external_seeds(&ExternalSpec::None, 10, &mut r).is_empty());
        let all = ExternalSpec::IndependentBernoulli {
            node_prob: vec![1.0; 10],
        };
        assert_eq!(sample_external_seeds(&all, 10, &mut r).len(), 10);
        assert!(ExternalSpec::uniform(10, 0.0, 1).unwrap().is_none());
        assert!(ExternalSpec::uniform(10, 2.0, 1).is_err());
    }

    #[test]
    fn world_without_external_is_the_live_graph() {
        let g = generate_er(25, 0.1, 1).unwrap();
        let spec = InfluenceSpec::new(ic(&g, 0.5), ExternalSpec::None);
        let w = make_world(&g, &spec, 3, 11).unwrap();
        let (live, _) = sample_world_parts(&g, &spec, 3, 11).unwrap();
        assert_eq!(w.external_reach_size, 0);
        assert_eq!(w.residual, live);
    }

    #[test]
    fn full_closure_empties_residual() {
        let n = 6;
        let g = DirectedGraph::from_edges(n, (0..n as u32).map(|i| (i, (i + 1) % n as u32))).unwrap();
        let mut node_prob = vec![0.0; n];
        node_prob[2] = 1.0;
        let spec = InfluenceSpec::new(ic(&g, 1.0), ExternalSpec::IndependentBernoulli { node_prob });
        let w = make_world(&g, &spec, 0, 0).unwrap();
        assert_eq!(w.external_reach_size, n);
        assert_eq!(w.residual.active_count(), 0);
        assert_eq!(w.residual.edge_count(), 0);
    }

    #[test]
    fn cascade_trivia() {
        let g = chain(5);
        let seeds: NodeSet = [0].into_iter().collect();
        let mut r = rng::stream(0, Domain::Cascade, 0);
        let none = InfluenceSpec::new(ic(&g, 0.0), ExternalSpec::None);
        assert_eq!(simulate_cascade(&g, &none, &seeds, &mut r).unwrap(), 1);
        let all = InfluenceSpec::new(ic(&g, 1.0), ExternalSpec::None);
        assert_eq!(simulate_cascade(&g, &all, &seeds, &mut r).unwrap(), 5);
        let lt = InfluenceSpec::new(
            TriggeringSpec::LinearThreshold {
                edge_weight: vec![1.0; 4],
            },
            ExternalSpec::None,
        );
        assert_eq!(simulate_cascade(&g, &lt, &seeds, &mut r).unwrap(), 5);
    }

    struct Everything;
    impl TriggerSampler for Everything {
        fn sample_triggers(&self, g: &DirectedGraph, v: NodeId, _: &mut dyn RngCore, out: &mut Vec<NodeId>) {
            out.extend_from_slice(g.in_neighbors(v));
        }
    }

    struct SelfTrigger;
    impl TriggerSampler for SelfTrigger {
        fn sample_triggers(&self, _: &DirectedGraph, v: NodeId, _: &mut dyn RngCore, out: &mut Vec<NodeId>) {
            out.push(v);
        }
    }

    #[test]
    fn generic_triggers() {
        let g = chain(4);
        let spec = InfluenceSpec::new(TriggeringSpec::Generic(Arc::new(Everything)), ExternalSpec::None);
        let mut r = rng::stream(0, Domain::Cascade, 0);
        assert_eq!(sample_live_edge_graph(&g, &spec.trig, &mut r).unwrap(), g);
        let seeds: NodeSet = [1].into_iter().collect();
        assert_eq!(simulate_cascade(&g, &spec, &seeds, &mut r).unwrap(), 3);
        let bad = TriggeringSpec::Generic(Arc::new(SelfTrigger));
        assert!(matches!(
            sample_live_edge_graph(&g, &bad, &mut r),
            Err(TapError::InvalidTrigger { .. })
        ));
    }
}
