//! Directed graphs in compressed adjacency form, node sets, traversals and
//! random generators.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand::{Rng, RngCore};

use crate::error::{Result, TapError};
use crate::rng::{self, Domain};

/// Dense node identifier in `[0, n)`.
pub type NodeId = u32;

/// Immutable directed graph with forward and reverse adjacency.
///
/// Edge ids are positions in the forward adjacency, so edges are numbered in
/// `(source, target)` order. Nodes can be tombstoned: a tombstoned node keeps
/// its id but has no incident edges and is skipped by every traversal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
    in_edge_ids: Vec<u32>,
    removed: Option<NodeSet>,
}

impl DirectedGraph {
    /// Builds a graph from an arbitrary edge list. Self-loops are dropped and
    /// parallel edges collapsed.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        if n > u32::MAX as usize {
            return Err(TapError::InvalidInput("node count exceeds u32 ids".into()));
        }
        let mut list = Vec::new();
        for (u, v) in edges {
            for id in [u, v] {
                if id as usize >= n {
                    return Err(TapError::NodeOutOfRange { id, n });
                }
            }
            if u != v {
                list.push((u, v));
            }
        }
        list.sort_unstable();
        list.dedup();
        Ok(Self::from_sorted_unique(n, &list, None))
    }

    /// Empty graph on `n` nodes.
    pub fn empty(n: usize) -> Self {
        Self::from_sorted_unique(n, &[], None)
    }

    /// `edges` must be sorted by `(source, target)`, free of duplicates and
    /// self-loops, with every id below `n`.
    pub(crate) fn from_sorted_unique(
        n: usize,
        edges: &[(NodeId, NodeId)],
        removed: Option<NodeSet>,
    ) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let m = edges.len();
        let mut out_offsets = vec![0usize; n + 1];
        let mut in_offsets = vec![0usize; n + 1];
        for &(u, v) in edges {
            out_offsets[u as usize + 1] += 1;
            in_offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            out_offsets[i + 1] += out_offsets[i];
            in_offsets[i + 1] += in_offsets[i];
        }
        let out_targets: Vec<NodeId> = edges.iter().map(|&(_, v)| v).collect();
        let mut in_sources = vec![0; m];
        let mut in_edge_ids = vec![0; m];
        let mut cursor = in_offsets.clone();
        for (id, &(u, v)) in edges.iter().enumerate() {
            let slot = &mut cursor[v as usize];
            in_sources[*slot] = u;
            in_edge_ids[*slot] = id as u32;
            *slot += 1;
        }
        Self {
            n,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
            in_edge_ids,
            removed,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    #[inline]
    pub fn out_neighbors(&self, u: NodeId) -> &[NodeId] {
        let u = u as usize;
        &self.out_targets[self.out_offsets[u]..self.out_offsets[u + 1]]
    }

    /// Edge ids of the out-edges of `u`; parallel to [`Self::out_neighbors`].
    #[inline]
    pub fn out_edge_ids(&self, u: NodeId) -> Range<usize> {
        let u = u as usize;
        self.out_offsets[u]..self.out_offsets[u + 1]
    }

    #[inline]
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        let v = v as usize;
        &self.in_sources[self.in_offsets[v]..self.in_offsets[v + 1]]
    }

    /// In-edges of `v` as `(source, edge id)` pairs.
    pub fn in_edges(&self, v: NodeId) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        let r = self.in_offsets[v as usize]..self.in_offsets[v as usize + 1];
        self.in_sources[r.clone()]
            .iter()
            .zip(&self.in_edge_ids[r])
            .map(|(&u, &e)| (u, e as usize))
    }

    /// All edges in id order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.n as NodeId).flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    pub fn edge_endpoints(&self, edge: usize) -> (NodeId, NodeId) {
        let u = self.out_offsets.partition_point(|&o| o <= edge) - 1;
        (u as NodeId, self.out_targets[edge])
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_neighbors(u).len()
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_neighbors(v).len()
    }

    pub fn max_out_degree(&self) -> usize {
        (0..self.n as NodeId).map(|u| self.out_degree(u)).max().unwrap_or(0)
    }

    pub fn max_in_degree(&self) -> usize {
        (0..self.n as NodeId).map(|u| self.in_degree(u)).max().unwrap_or(0)
    }

    /// True when `v` was deleted by [`remove_closed_set`].
    #[inline]
    pub fn is_removed(&self, v: NodeId) -> bool {
        self.removed.as_ref().is_some_and(|r| r.contains(v))
    }

    /// Number of nodes that are not tombstoned.
    pub fn active_count(&self) -> usize {
        self.n - self.removed.as_ref().map_or(0, NodeSet::len)
    }

    pub fn removed_nodes(&self) -> Option<&NodeSet> {
        self.removed.as_ref()
    }

    pub fn check_node(&self, id: NodeId) -> Result<()> {
        if (id as usize) < self.n {
            Ok(())
        } else {
            Err(TapError::NodeOutOfRange { id, n: self.n })
        }
    }

    /// Copy of the graph with every edge reversed as well; used to symmetrize
    /// undirected inputs.
    pub fn symmetrized(&self) -> Self {
        let mut list: Vec<(NodeId, NodeId)> =
            self.edges().flat_map(|(u, v)| [(u, v), (v, u)]).collect();
        list.sort_unstable();
        list.dedup();
        Self::from_sorted_unique(self.n, &list, self.removed.clone())
    }
}

/// Growable bit set of node ids.
#[derive(Clone, Default, Debug)]
pub struct NodeSet {
    words: Vec<u64>,
    len: usize,
}

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
            len: 0,
        }
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        (0..n as NodeId).collect()
    }

    /// Returns true when `id` was not yet present.
    pub fn insert(&mut self, id: NodeId) -> bool {
        let (w, b) = (id as usize / 64, id % 64);
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        self.len += fresh as usize;
        fresh
    }

    pub fn remove(&mut self, id: NodeId) -> bool {
        let (w, b) = (id as usize / 64, id % 64);
        match self.words.get_mut(w) {
            Some(word) if *word & (1 << b) != 0 => {
                *word &= !(1 << b);
                self.len -= 1;
                true
            }
            _ => false,
        }
    }

    #[inline]
    pub fn contains(&self, id: NodeId) -> bool {
        self.words
            .get(id as usize / 64)
            .is_some_and(|w| w & (1 << (id % 64)) != 0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Ascending iteration.
    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            core::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((wi * 64) as NodeId + b)
            })
        })
    }

    pub fn union_with(&mut self, other: &NodeSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        self.len = self.words.iter().map(|w| w.count_ones() as usize).sum();
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.iter().all(|v| other.contains(v))
    }

    pub fn max_id(&self) -> Option<NodeId> {
        self.words
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &w)| w != 0)
            .map(|(i, &w)| (i * 64) as NodeId + 63 - w.leading_zeros())
    }

    /// Subset encoded as a bit mask over ids `< 64`.
    pub fn from_mask(mask: u64) -> Self {
        let mut s = NodeSet::new();
        for b in 0..64 {
            if mask >> b & 1 == 1 {
                s.insert(b);
            }
        }
        s
    }

    /// Bit mask of the set; `None` when some id is `>= 64`.
    pub fn to_mask(&self) -> Option<u64> {
        if self.words.iter().skip(1).any(|&w| w != 0) {
            return None;
        }
        Some(self.words.first().copied().unwrap_or(0))
    }
}

impl PartialEq for NodeSet {
    fn eq(&self, other: &Self) -> bool {
        let n = self.words.len().max(other.words.len());
        self.len == other.len
            && (0..n).all(|i| {
                self.words.get(i).copied().unwrap_or(0) == other.words.get(i).copied().unwrap_or(0)
            })
    }
}

impl Eq for NodeSet {}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut s = NodeSet::new();
        s.extend(iter);
        s
    }
}

impl Extend<NodeId> for NodeSet {
    fn extend<I: IntoIterator<Item = NodeId>>(&mut self, iter: I) {
        for id in iter {
            self.insert(id);
        }
    }
}

/// Reusable BFS scratch space; epoch stamps avoid clearing between runs.
#[derive(Clone, Debug)]
pub struct Traversal {
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<NodeId>,
}

impl Traversal {
    pub fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    fn begin(&mut self, n: usize) {
        if self.stamp.len() < n {
            self.stamp.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.queue.clear();
    }

    #[inline]
    pub fn is_marked(&self, v: NodeId) -> bool {
        self.stamp[v as usize] == self.epoch
    }

    /// Marks `v`; returns false if it was already marked in this epoch.
    #[inline]
    fn mark(&mut self, v: NodeId) -> bool {
        let s = &mut self.stamp[v as usize];
        if *s == self.epoch {
            false
        } else {
            *s = self.epoch;
            true
        }
    }

    /// Visits every node forward-reachable from `seeds`, skipping tombstones.
    /// Seeds must be in range.
    pub fn forward<I, F>(&mut self, g: &DirectedGraph, seeds: I, mut visit: F)
    where
        I: IntoIterator<Item = NodeId>,
        F: FnMut(NodeId),
    {
        self.begin(g.node_count());
        for s in seeds {
            if !g.is_removed(s) && self.mark(s) {
                visit(s);
                self.queue.push(s);
            }
        }
        let mut head = 0;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for &v in g.out_neighbors(u) {
                if self.mark(v) {
                    visit(v);
                    self.queue.push(v);
                }
            }
        }
    }

    pub fn forward_count<I>(&mut self, g: &DirectedGraph, seeds: I) -> usize
    where
        I: IntoIterator<Item = NodeId>,
    {
        let mut count = 0;
        self.forward(g, seeds, |_| count += 1);
        count
    }

    /// Continues a traversal without resetting marks: counts nodes newly
    /// reached from `seeds` that were not marked by earlier calls in the same
    /// epoch. Call [`Self::forward`] first to open the epoch.
    pub fn extend_forward<I>(&mut self, g: &DirectedGraph, seeds: I) -> usize
    where
        I: IntoIterator<Item = NodeId>,
    {
        let start = self.queue.len();
        for s in seeds {
            if !g.is_removed(s) && self.mark(s) {
                self.queue.push(s);
            }
        }
        let mut head = start;
        while head < self.queue.len() {
            let u = self.queue[head];
            head += 1;
            for &v in g.out_neighbors(u) {
                if self.mark(v) {
                    self.queue.push(v);
                }
            }
        }
        self.queue.len() - start
    }
}

fn check_seeds(g: &DirectedGraph, seeds: &NodeSet) -> Result<()> {
    match seeds.max_id() {
        Some(id) => g.check_node(id),
        None => Ok(()),
    }
}

/// Forward-reachable closure of `seeds`, seeds included.
pub fn reachable_set(g: &DirectedGraph, seeds: &NodeSet) -> Result<NodeSet> {
    check_seeds(g, seeds)?;
    let mut out = NodeSet::with_capacity(g.node_count());
    Traversal::new(g.node_count()).forward(g, seeds.iter(), |v| {
        out.insert(v);
    });
    Ok(out)
}

/// Deletes a forward-closed node set and its incident edges. Removed nodes
/// keep their ids as tombstones.
pub fn remove_closed_set(g: &DirectedGraph, removed: &NodeSet) -> Result<DirectedGraph> {
    check_seeds(g, removed)?;
    if cfg!(debug_assertions) {
        for u in removed.iter() {
            if let Some(&v) = g.out_neighbors(u).iter().find(|&&v| !removed.contains(v)) {
                return Err(TapError::NotClosed(v));
            }
        }
    }
    let edges: Vec<(NodeId, NodeId)> = g
        .edges()
        .filter(|&(u, v)| !removed.contains(u) && !removed.contains(v))
        .collect();
    let mut tomb = g.removed.clone().unwrap_or_default();
    tomb.union_with(removed);
    let tomb = if tomb.is_empty() { None } else { Some(tomb) };
    Ok(DirectedGraph::from_sorted_unique(g.node_count(), &edges, tomb))
}

fn check_probability(what: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(TapError::InvalidProbability { what, value: p })
    }
}

/// Directed Erdos-Renyi graph: every ordered pair `(u, v)`, `u != v`, is an
/// edge independently with probability `edge_prob`.
pub fn generate_er(n: usize, edge_prob: f64, rng_seed: u64) -> Result<DirectedGraph> {
    if n == 0 {
        return Err(TapError::InvalidInput("generate_er needs n >= 1".into()));
    }
    check_probability("edge_prob", edge_prob)?;
    let slots = n as u64 * (n as u64 - 1);
    let mut edges = Vec::new();
    let mut push = |idx: u64| {
        let u = idx / (n as u64 - 1);
        let r = idx % (n as u64 - 1);
        let v = if r < u { r } else { r + 1 };
        edges.push((u as NodeId, v as NodeId));
    };
    if edge_prob >= 1.0 {
        (0..slots).for_each(&mut push);
    } else if edge_prob > 0.0 {
        // Geometric skips between successive present slots.
        let mut rng = rng::stream(rng_seed, Domain::Generator, 0);
        let log_q = libm::log1p(-edge_prob);
        let mut idx: u64 = 0;
        loop {
            let u = rng::open_unit(rng.next_u64());
            let skip = libm::floor(libm::log(u) / log_q);
            if skip.is_nan() || skip >= (slots - idx) as f64 {
                break;
            }
            idx += skip as u64;
            push(idx);
            idx += 1;
            if idx >= slots {
                break;
            }
        }
    }
    DirectedGraph::from_edges(n, edges)
}

/// Barabasi-Albert preferential attachment. Each arriving node links to
/// `edges_per_node` distinct earlier nodes chosen proportionally to degree;
/// every link is stored as two directed edges.
pub fn generate_ba(n: usize, edges_per_node: usize, rng_seed: u64) -> Result<DirectedGraph> {
    if edges_per_node == 0 || n <= edges_per_node {
        return Err(TapError::InvalidInput(alloc::format!(
            "generate_ba needs n > edges_per_node >= 1 (n={n}, edges_per_node={edges_per_node})"
        )));
    }
    let mut rng = rng::stream(rng_seed, Domain::Generator, 1);
    let mut endpoints: Vec<NodeId> = Vec::with_capacity(2 * n * edges_per_node);
    let mut edges = Vec::with_capacity(2 * n * edges_per_node);
    let mut picked: Vec<NodeId> = Vec::with_capacity(edges_per_node);
    for t in edges_per_node..n {
        picked.clear();
        while picked.len() < edges_per_node {
            let cand = if endpoints.is_empty() {
                rng.random_range(0..t as NodeId)
            } else {
                endpoints[rng.random_range(0..endpoints.len())]
            };
            if !picked.contains(&cand) {
                picked.push(cand);
            }
        }
        for &s in &picked {
            edges.push((t as NodeId, s));
            edges.push((s, t as NodeId));
            endpoints.push(t as NodeId);
            endpoints.push(s);
        }
    }
    DirectedGraph::from_edges(n, edges)
}
