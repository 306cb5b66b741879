//! Bottom-k reachability sketches over a collection of residual worlds, and
//! the two average-reachability estimators built on them.
//!
//! Every `(node, world)` pair carries an independent uniform rank. The sketch
//! `X_u` of a node keeps the `k` smallest ranks among the pairs reachable from
//! `u` across all worlds. Entries remember their pair so that unions
//! deduplicate exactly instead of comparing floats.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use hashbrown::HashMap;
use rand::RngCore;
use rustc_hash::FxBuildHasher;

use crate::error::{Result, TapError};
use crate::graph::{NodeId, NodeSet};
use crate::influence::{residual_reach_total, SampledWorld};
use crate::rng::{self, Domain};

/// A rank tagged with the pair it belongs to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankEntry {
    pub rank: f64,
    pub node: NodeId,
    pub world: u32,
}

impl RankEntry {
    /// Total order: rank, then `(node, world)`.
    #[inline]
    pub fn key_cmp(&self, other: &Self) -> Ordering {
        self.rank
            .total_cmp(&other.rank)
            .then(self.node.cmp(&other.node))
            .then(self.world.cmp(&other.world))
    }

    #[inline]
    pub fn pair_key(&self) -> u64 {
        (self.world as u64) << 32 | self.node as u64
    }

    #[inline]
    fn same_pair(&self, other: &Self) -> bool {
        self.node == other.node && self.world == other.world
    }
}

/// Lazily realized ranks `r(v, i)`, uniform on (0, 1).
///
/// `r(v, i)` is the `v`-th 64-bit word pair of the rank stream of world `i`,
/// so single ranks and whole worlds produce the same values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankAssignment {
    pub seed: u64,
}

impl RankAssignment {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn rank(&self, node: NodeId, world: u32) -> f64 {
        let mut r = rng::stream(self.seed, Domain::Rank, world as u64);
        r.set_word_pos(2 * node as u128);
        rng::open_unit(r.next_u64())
    }

    /// Ranks of nodes `0..n` in world `world`.
    pub fn world_ranks(&self, world: u32, n: usize) -> Vec<f64> {
        let mut r = rng::stream(self.seed, Domain::Rank, world as u64);
        (0..n).map(|_| rng::open_unit(r.next_u64())).collect()
    }

    pub fn entry(&self, node: NodeId, world: u32) -> RankEntry {
        RankEntry {
            rank: self.rank(node, world),
            node,
            world,
        }
    }
}

/// Bottom-k sketch: at most `k` entries, strictly ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct Sketch {
    k: usize,
    entries: Vec<RankEntry>,
}

/// Threshold rank of a sketch: its maximum when full, 1 otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdRank {
    pub gamma: f64,
    pub saturated: bool,
}

impl Sketch {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            entries: Vec::new(),
        }
    }

    /// Bottom-k of an arbitrary collection; repeated pairs count once.
    pub fn from_entries<I: IntoIterator<Item = RankEntry>>(k: usize, entries: I) -> Self {
        let mut v: Vec<RankEntry> = entries.into_iter().collect();
        v.sort_unstable_by(RankEntry::key_cmp);
        v.dedup_by(|a, b| a.same_pair(b));
        v.truncate(k);
        Self { k, entries: v }
    }

    /// Wraps entries that already satisfy the invariants.
    pub fn from_sorted(k: usize, entries: Vec<RankEntry>) -> Result<Self> {
        let ordered = entries
            .windows(2)
            .all(|w| w[0].key_cmp(&w[1]) == Ordering::Less);
        let in_range = entries.iter().all(|e| e.rank > 0.0 && e.rank < 1.0);
        if entries.len() > k || !ordered || !in_range {
            return Err(TapError::InvalidInput(
                "sketch entries must be strictly ascending ranks in (0,1), at most k".into(),
            ));
        }
        Ok(Self { k, entries })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_saturated(&self) -> bool {
        self.entries.len() == self.k
    }

    pub fn ranks(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.rank)
    }

    pub fn threshold_rank(&self) -> ThresholdRank {
        threshold_rank(self)
    }

    /// Entries that count toward estimator C2: all of them, minus the
    /// threshold entry of a saturated sketch.
    pub fn below_threshold(&self) -> &[RankEntry] {
        if self.is_saturated() {
            &self.entries[..self.entries.len() - 1]
        } else {
            &self.entries
        }
    }
}

pub fn threshold_rank(x: &Sketch) -> ThresholdRank {
    match x.entries.last() {
        Some(last) if x.is_saturated() => ThresholdRank {
            gamma: last.rank,
            saturated: true,
        },
        _ => ThresholdRank {
            gamma: 1.0,
            saturated: false,
        },
    }
}

/// Bottom-k of the union of two sketches with the same `k`.
pub fn merge_sketch(xa: &Sketch, xu: &Sketch) -> Result<Sketch> {
    if xa.k != xu.k {
        return Err(TapError::InvalidInput(alloc::format!(
            "cannot merge sketches with k = {} and k = {}",
            xa.k,
            xu.k
        )));
    }
    Ok(Sketch {
        k: xa.k,
        entries: merge_entries(&xa.entries, &xu.entries, xa.k),
    })
}

/// Two-pointer bottom-k union of sorted entry lists.
pub fn merge_entries(a: &[RankEntry], b: &[RankEntry], k: usize) -> Vec<RankEntry> {
    let mut out = Vec::with_capacity(k.min(a.len() + b.len()));
    merge_walk(a, b, k, |e| out.push(*e));
    out
}

/// Size and last entry of the bottom-k union, without materializing it.
pub fn merge_stats(a: &[RankEntry], b: &[RankEntry], k: usize) -> (usize, Option<RankEntry>) {
    let mut len = 0;
    let mut last = None;
    merge_walk(a, b, k, |e| {
        len += 1;
        last = Some(*e);
    });
    (len, last)
}

#[inline]
fn merge_walk<F: FnMut(&RankEntry)>(a: &[RankEntry], b: &[RankEntry], k: usize, mut emit: F) {
    let (mut i, mut j, mut taken) = (0, 0, 0);
    while taken < k {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) => match x.key_cmp(y) {
                Ordering::Less => {
                    i += 1;
                    x
                }
                Ordering::Greater => {
                    j += 1;
                    y
                }
                Ordering::Equal => {
                    i += 1;
                    j += 1;
                    x
                }
            },
            (Some(x), None) => {
                i += 1;
                x
            }
            (None, Some(y)) => {
                j += 1;
                y
            }
            (None, None) => break,
        };
        emit(next);
        taken += 1;
    }
}

/// Estimator C1 from the size and threshold of a sketch: `(k-1)/(l*gamma)`
/// when saturated, the exact count `|X|/l` otherwise.
#[inline]
pub fn c1_from_stats(len: usize, gamma: f64, k: usize, ell: usize) -> f64 {
    if len == k {
        (k - 1) as f64 / (ell as f64 * gamma)
    } else {
        len as f64 / ell as f64
    }
}

pub fn c1_estimate(x: &Sketch, ell: usize) -> f64 {
    let gamma = x.entries.last().map_or(1.0, |e| e.rank);
    c1_from_stats(x.len(), gamma, x.k, ell)
}

/// The oracle collection `{X_u}` plus the mean external closure size.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchOracle {
    k: usize,
    ell: usize,
    offset: f64,
    rank_seed: u64,
    sketches: Vec<Sketch>,
}

impl SketchOracle {
    /// Assembles an oracle from stored parts, checking every sketch.
    pub fn from_parts(
        k: usize,
        ell: usize,
        offset: f64,
        rank_seed: u64,
        sketches: Vec<Sketch>,
    ) -> Result<Self> {
        if k == 0 || ell == 0 {
            return Err(TapError::InvalidInput("oracle needs k >= 1 and l >= 1".into()));
        }
        if offset.is_nan() || offset < 0.0 {
            return Err(TapError::InvalidInput("oracle offset must be non-negative".into()));
        }
        if sketches.iter().any(|s| s.k != k) {
            return Err(TapError::InvalidInput("sketch capacity differs from oracle k".into()));
        }
        Ok(Self {
            k,
            ell,
            offset,
            rank_seed,
            sketches,
        })
    }

    pub fn node_count(&self) -> usize {
        self.sketches.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Mean size of the external closures, `O`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn rank_seed(&self) -> u64 {
        self.rank_seed
    }

    pub fn sketch(&self, u: NodeId) -> &Sketch {
        &self.sketches[u as usize]
    }

    pub fn sketches(&self) -> &[Sketch] {
        &self.sketches
    }

    pub fn c1(&self, x: &Sketch) -> f64 {
        c1_estimate(x, self.ell)
    }

    pub fn c2(&self, seeds: &NodeSet) -> Result<f64> {
        c2_estimate(seeds, self)
    }

    /// `tau + O`.
    pub fn sigma_hat(&self, tau: f64) -> f64 {
        tau + self.offset
    }
}

/// Estimator C2: every pair in some seed's sketch (threshold entry excluded)
/// contributes the inverse of the largest threshold rank among the seeds
/// whose sketch holds it.
pub fn c2_estimate(seeds: &NodeSet, oracle: &SketchOracle) -> Result<f64> {
    let mut best: HashMap<u64, (f64, usize), FxBuildHasher> = HashMap::default();
    for u in seeds.iter() {
        if u as usize >= oracle.node_count() {
            return Err(TapError::NodeOutOfRange {
                id: u,
                n: oracle.node_count(),
            });
        }
        let x = oracle.sketch(u);
        let gamma = x.threshold_rank().gamma;
        for (pos, e) in x.below_threshold().iter().enumerate() {
            let slot = best.entry(e.pair_key()).or_insert((gamma, pos));
            if gamma > slot.0 {
                slot.0 = gamma;
            }
        }
    }
    let mut terms: Vec<(u64, f64)> = best.into_iter().map(|(key, (g, _))| (key, g)).collect();
    terms.sort_unstable_by_key(|t| t.0);
    Ok(terms.iter().map(|t| 1.0 / t.1).sum::<f64>() / oracle.ell as f64)
}

/// Exact `tau(A)` over the worlds, by one BFS per world.
pub fn tau_exact(seeds: &NodeSet, worlds: &[SampledWorld]) -> Result<f64> {
    if worlds.is_empty() {
        return Err(TapError::InvalidInput("tau_exact needs at least one world".into()));
    }
    Ok(residual_reach_total(worlds, seeds)? as f64 / worlds.len() as f64)
}

/// Incremental oracle construction. Worlds can be added in chunks and
/// builders over disjoint world sets merged; the result depends only on the
/// set of worlds, not on how it was split.
#[derive(Clone, Debug)]
pub struct OracleBuilder {
    n: usize,
    k: usize,
    ranks: RankAssignment,
    sketches: Vec<Vec<RankEntry>>,
    ell: usize,
    external_total: u64,
}

impl OracleBuilder {
    pub fn new(n: usize, k: usize, rank_seed: u64) -> Result<Self> {
        if k == 0 {
            return Err(TapError::InvalidInput("sketch size k must be >= 1".into()));
        }
        Ok(Self {
            n,
            k,
            ranks: RankAssignment::new(rank_seed),
            sketches: vec![Vec::new(); n],
            ell: 0,
            external_total: 0,
        })
    }

    pub fn worlds_added(&self) -> usize {
        self.ell
    }

    /// Adds a chunk of worlds.
    ///
    /// Each world is handled on its own. Its pairs are visited in increasing
    /// rank order, and each runs a reverse BFS that gives the rank to every
    /// node holding fewer than `k` entries from this world. A node with `k`
    /// such entries stops the search, since every node upstream of it in
    /// this world reaches those `k` smaller pairs too. The per-world sketches
    /// are then merged into the running ones.
    pub fn add_worlds(&mut self, worlds: &[SampledWorld]) -> Result<()> {
        let n = self.n;
        let k = self.k;
        let mut part: Vec<Vec<RankEntry>> = vec![Vec::new(); n];
        let mut touched: Vec<NodeId> = Vec::new();
        let mut stamp = vec![u32::MAX; n];
        let mut queue: Vec<NodeId> = Vec::new();
        let mut pairs: Vec<RankEntry> = Vec::with_capacity(n);
        for w in worlds {
            let g = &w.residual;
            if g.node_count() != n {
                return Err(TapError::InvalidInput(alloc::format!(
                    "world {} has {} nodes, expected {n}",
                    w.world_index,
                    g.node_count()
                )));
            }
            let world = u32::try_from(w.world_index)
                .map_err(|_| TapError::InvalidInput("world index exceeds u32".into()))?;
            pairs.clear();
            for (v, rank) in self.ranks.world_ranks(world, n).into_iter().enumerate() {
                if !g.is_removed(v as NodeId) {
                    pairs.push(RankEntry { rank, node: v as NodeId, world });
                }
            }
            pairs.sort_unstable_by(RankEntry::key_cmp);
            stamp.iter_mut().for_each(|s| *s = u32::MAX);
            for (epoch, entry) in pairs.iter().enumerate() {
                let epoch = epoch as u32;
                let v = entry.node;
                stamp[v as usize] = epoch;
                if part[v as usize].len() >= k {
                    continue;
                }
                if part[v as usize].is_empty() {
                    touched.push(v);
                }
                part[v as usize].push(*entry);
                queue.clear();
                queue.push(v);
                let mut head = 0;
                while head < queue.len() {
                    let u = queue[head];
                    head += 1;
                    for &x in g.in_neighbors(u) {
                        let xi = x as usize;
                        if stamp[xi] == epoch {
                            continue;
                        }
                        stamp[xi] = epoch;
                        if part[xi].len() < k {
                            if part[xi].is_empty() {
                                touched.push(x);
                            }
                            part[xi].push(*entry);
                            queue.push(x);
                        }
                    }
                }
            }
            for &u in &touched {
                let theirs = core::mem::take(&mut part[u as usize]);
                let mine = &mut self.sketches[u as usize];
                if mine.is_empty() {
                    *mine = theirs;
                } else {
                    *mine = merge_entries(mine, &theirs, k);
                    part[u as usize] = theirs;
                    part[u as usize].clear();
                }
            }
            touched.clear();
            self.ell += 1;
            self.external_total += w.external_reach_size as u64;
        }
        Ok(())
    }

    fn absorb(&mut self, part: Vec<Vec<RankEntry>>) {
        let k = self.k;
        for (mine, theirs) in self.sketches.iter_mut().zip(part) {
            if mine.is_empty() {
                *mine = theirs;
            } else if !theirs.is_empty() {
                *mine = merge_entries(mine, &theirs, k);
            }
        }
    }

    /// Folds in a builder that covered a disjoint set of worlds.
    pub fn merge(&mut self, other: OracleBuilder) -> Result<()> {
        if other.n != self.n || other.k != self.k || other.ranks != self.ranks {
            return Err(TapError::Mismatch("builders differ in n, k or rank seed".into()));
        }
        self.ell += other.ell;
        self.external_total += other.external_total;
        self.absorb(other.sketches);
        Ok(())
    }

    pub fn finish(self) -> Result<SketchOracle> {
        if self.ell == 0 {
            return Err(TapError::InvalidInput("oracle needs at least one world".into()));
        }
        let k = self.k;
        let sketches = self
            .sketches
            .into_iter()
            .map(|entries| Sketch { k, entries })
            .collect();
        Ok(SketchOracle {
            k,
            ell: self.ell,
            offset: self.external_total as f64 / self.ell as f64,
            rank_seed: self.ranks.seed,
            sketches,
        })
    }
}

/// Builds `{X_u}` and `O` from a list of sampled worlds.
pub fn build_oracles(worlds: &[SampledWorld], k: usize, rank_seed: u64) -> Result<SketchOracle> {
    let n = worlds
        .first()
        .ok_or_else(|| TapError::InvalidInput("build_oracles needs at least one world".into()))?
        .residual
        .node_count();
    let mut b = OracleBuilder::new(n, k, rank_seed)?;
    b.add_worlds(worlds)?;
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::DirectedGraph;

    fn e(rank: f64, node: u32) -> RankEntry {
        RankEntry { rank, node, world: 0 }
    }

    fn sk(k: usize, ranks: &[f64]) -> Sketch {
        Sketch::from_entries(k, ranks.iter().map(|&r| e(r, (r * 100.0) as u32)))
    }

    fn world(g: DirectedGraph, i: u64) -> SampledWorld {
        SampledWorld {
            residual: g,
            external_reach_size: 0,
            world_index: i,
        }
    }

    #[test]
    fn rank_lookup_matches_world_stream() {
        let r = RankAssignment::new(5);
        let all = r.world_ranks(3, 10);
        for v in 0..10 {
            assert_eq!(r.rank(v, 3), all[v as usize]);
        }
        assert!(all.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn merge_examples() {
        let a = sk(3, &[0.1, 0.3, 0.5]);
        let b = sk(3, &[0.2, 0.4, 0.9]);
        let m = merge_sketch(&a, &b).unwrap();
        assert_eq!(m.ranks().collect::<Vec<_>>(), [0.1, 0.2, 0.3]);
        assert_eq!(merge_sketch(&a, &a).unwrap(), a);
        assert!(merge_sketch(&a, &sk(4, &[0.1])).is_err());
        let (len, last) = merge_stats(a.entries(), b.entries(), 3);
        assert_eq!((len, last.map(|e| e.rank)), (3, Some(0.3)));
    }

    #[test]
    fn threshold_rank_cases() {
        let full = Sketch::from_entries(3, [e(0.1, 0), e(0.2, 1), e(0.42, 2)]);
        assert_eq!(full.threshold_rank(), ThresholdRank { gamma: 0.42, saturated: true });
        let partial = Sketch::from_entries(3, [e(0.1, 0), e(0.2, 1)]);
        assert_eq!(partial.threshold_rank(), ThresholdRank { gamma: 1.0, saturated: false });
        assert_eq!(Sketch::new(3).threshold_rank(), ThresholdRank { gamma: 1.0, saturated: false });
    }

    #[test]
    fn c1_cases() {
        let full = Sketch::from_entries(3, [e(0.1, 0), e(0.2, 1), e(0.5, 2)]);
        assert_eq!(c1_estimate(&full, 1), 4.0);
        let partial = Sketch::from_entries(3, [e(0.1, 0), e(0.2, 1)]);
        assert_eq!(c1_estimate(&partial, 1), 2.0);
    }

    #[test]
    fn c2_single_seed_cases() {
        let full = Sketch::from_entries(3, [e(0.2, 0), e(0.5, 1), e(0.9, 2)]);
        let o = SketchOracle::from_parts(3, 1, 0.0, 0, alloc::vec![full]).unwrap();
        let v = c2_estimate(&[0].into_iter().collect(), &o).unwrap();
        assert!((v - 2.0 / 0.9).abs() < 1e-12);
        let partial = Sketch::from_entries(3, [e(0.2, 0), e(0.5, 1)]);
        let o = SketchOracle::from_parts(3, 1, 0.0, 0, alloc::vec![partial]).unwrap();
        assert_eq!(c2_estimate(&[0].into_iter().collect(), &o).unwrap(), 2.0);
    }

    #[test]
    fn chain_sketches_are_full_reach_sets() {
        let g = DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let o = build_oracles(&[world(g, 0)], 8, 1).unwrap();
        let lens: Vec<usize> = o.sketches().iter().map(Sketch::len).collect();
        assert_eq!(lens, [3, 2, 1]);
        assert_eq!(o.offset(), 0.0);
    }

    #[test]
    fn two_single_node_worlds() {
        let ws = [world(DirectedGraph::empty(1), 0), world(DirectedGraph::empty(1), 1)];
        let o = build_oracles(&ws, 2, 9).unwrap();
        assert_eq!(o.sketch(0).len(), 2);
        assert_eq!(o.ell(), 2);
    }

    #[test]
    fn empty_world_list_is_rejected() {
        assert!(build_oracles(&[], 4, 0).is_err());
        assert!(OracleBuilder::new(3, 0, 0).is_err());
    }

    #[test]
    fn from_sorted_checks_order() {
        assert!(Sketch::from_sorted(2, alloc::vec![e(0.5, 0), e(0.1, 1)]).is_err());
        assert!(Sketch::from_sorted(1, alloc::vec![e(0.1, 0), e(0.5, 1)]).is_err());
        assert!(Sketch::from_sorted(2, alloc::vec![e(0.1, 0), e(0.5, 1)]).is_ok());
    }
}
