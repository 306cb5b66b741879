//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use stab_core::influence::{ExternalSpec, InfluenceSpec, SampledWorld, TriggeringSpec};
use stab_core::sketch::{RankAssignment, RankEntry};
use stab_core::{DirectedGraph, NodeId, NodeSet};

/// Closure by repeated edge relaxation until nothing changes.
pub fn naive_reach(g: &DirectedGraph, seeds: &[NodeId]) -> Vec<bool> {
    let n = g.node_count();
    let mut on = vec![false; n];
    for &s in seeds {
        if !g.is_removed(s) {
            on[s as usize] = true;
        }
    }
    let edges: Vec<(NodeId, NodeId)> = g.edges().collect();
    loop {
        let mut changed = false;
        for &(u, v) in &edges {
            if on[u as usize] && !on[v as usize] {
                on[v as usize] = true;
                changed = true;
            }
        }
        if !changed {
            return on;
        }
    }
}

pub fn naive_reach_count(g: &DirectedGraph, seeds: &[NodeId]) -> usize {
    naive_reach(g, seeds).iter().filter(|&&b| b).count()
}

/// Plain BFS, used where relaxation would be too slow.
pub fn bfs_reach(g: &DirectedGraph, seed: NodeId) -> Vec<NodeId> {
    let mut seen = vec![false; g.node_count()];
    if g.is_removed(seed) {
        return Vec::new();
    }
    let mut out = vec![seed];
    seen[seed as usize] = true;
    let mut i = 0;
    while i < out.len() {
        let u = out[i];
        i += 1;
        for &v in g.out_neighbors(u) {
            if !seen[v as usize] {
                seen[v as usize] = true;
                out.push(v);
            }
        }
    }
    out
}

/// Bottom-k of every pair reachable from `seeds`, ranks looked up one by one.
pub fn brute_sketch(worlds: &[SampledWorld], seeds: &[NodeId], k: usize, ranks: &RankAssignment) -> Vec<RankEntry> {
    let mut all = Vec::new();
    for w in worlds {
        let mut hit = vec![false; w.residual.node_count()];
        for &s in seeds {
            for v in bfs_reach(&w.residual, s) {
                hit[v as usize] = true;
            }
        }
        for (v, _) in hit.iter().enumerate().filter(|(_, &h)| h) {
            all.push(ranks.entry(v as NodeId, w.world_index as u32));
        }
    }
    all.sort_by(|a, b| a.key_cmp(b));
    all.truncate(k);
    all
}

/// Exact average residual reach by per-world BFS.
pub fn brute_tau(worlds: &[SampledWorld], seeds: &[NodeId]) -> f64 {
    let total: usize = worlds
        .iter()
        .map(|w| {
            let mut hit = vec![false; w.residual.node_count()];
            for &s in seeds {
                for v in bfs_reach(&w.residual, s) {
                    hit[v as usize] = true;
                }
            }
            hit.iter().filter(|&&h| h).count()
        })
        .sum();
    total as f64 / worlds.len() as f64
}

pub fn ic(g: &DirectedGraph, p: f64) -> InfluenceSpec {
    InfluenceSpec::new(
        TriggeringSpec::IndependentCascade {
            edge_prob: vec![p; g.edge_count()],
        },
        ExternalSpec::None,
    )
}

pub fn set(ids: &[NodeId]) -> NodeSet {
    ids.iter().copied().collect()
}

pub fn subset_of_mask(mask: u64) -> Vec<NodeId> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}
