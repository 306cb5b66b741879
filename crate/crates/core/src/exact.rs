//! Exact expected activation on tiny instances, by enumerating every
//! live-edge graph and every external seed set.
//!
//! Every finite `f64` is a dyadic rational, so all probabilities of an
//! instance share a denominator `2^D`. World weights are then integer
//! numerators over `2^(D * groups)` and the whole table of expected
//! activations is accumulated without rounding.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{AddAssign, Mul};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::float::FloatCore;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Result, TapError};
use crate::graph::{DirectedGraph, NodeId, NodeSet};
use crate::influence::{ExternalSpec, InfluenceSpec, TriggeringSpec};

/// Largest node count accepted by the enumerator.
pub const MAX_EXACT_NODES: usize = 16;
/// Largest number of live-edge graphs enumerated.
pub const MAX_LIVE_EDGE_WORLDS: u64 = 1 << 22;
/// Cap on `worlds * 2^n`, the size of the accumulation loop.
pub const MAX_EXACT_WORK: u64 = 1 << 30;

/// Exact dyadic form `(a, d)` with `p = a / 2^d`.
fn dyadic(p: f64) -> (u64, u32) {
    if p == 0.0 {
        return (0, 0);
    }
    let (mut mant, mut exp, _) = p.integer_decode();
    let tz = mant.trailing_zeros();
    mant >>= tz;
    exp += tz as i16;
    if exp >= 0 {
        (mant << exp, 0)
    } else {
        (mant, (-exp) as u32)
    }
}

/// `num / 2^exp`, exactly.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Dyadic {
    num: BigUint,
    exp: u32,
}

impl Dyadic {
    fn of(p: f64) -> Self {
        let (a, d) = dyadic(p);
        Self {
            num: BigUint::from(a),
            exp: d,
        }
    }

    /// Numerator over the denominator `2^d`, `d >= self.exp`.
    fn scaled(&self, d: u32) -> BigUint {
        &self.num << (d - self.exp) as usize
    }

    /// `1 - sum(parts)`, clamped at zero.
    fn complement(parts: &[&Dyadic]) -> Self {
        let d = parts.iter().map(|p| p.exp).max().unwrap_or(0);
        let sum: BigUint = parts.iter().map(|p| p.scaled(d)).sum();
        let one = BigUint::one() << d as usize;
        Self {
            num: if sum > one { BigUint::zero() } else { one - sum },
            exp: d,
        }
    }
}

/// Table of exact expected activations for every seed subset.
#[derive(Clone, Debug)]
pub struct ExactSigma {
    n: usize,
    numerators: Vec<BigUint>,
    den_log2: u64,
}

impl ExactSigma {
    pub fn new(g: &DirectedGraph, spec: &InfluenceSpec) -> Result<Self> {
        spec.validate(g)?;
        let n = g.node_count();
        if n > MAX_EXACT_NODES {
            return Err(TapError::TooLarge(alloc::format!(
                "{n} nodes (limit {MAX_EXACT_NODES})"
            )));
        }
        let groups = choice_groups(g, &spec.trig)?;
        let worlds = groups
            .iter()
            .try_fold(1u64, |acc, gr| acc.checked_mul(gr.len() as u64))
            .filter(|&w| w <= MAX_LIVE_EDGE_WORLDS)
            .ok_or_else(|| TapError::TooLarge("too many live-edge graphs".into()))?;
        if worlds.saturating_mul(1 << n) > MAX_EXACT_WORK {
            return Err(TapError::TooLarge(alloc::format!(
                "{worlds} live-edge graphs x 2^{n} subsets"
            )));
        }
        let d = groups.iter().flatten().map(|c| c.0.exp).max().unwrap_or(0);
        let trig_den = d as u64 * groups.len() as u64;
        let group_weights: Vec<Vec<Weighted<BigUint>>> = groups
            .iter()
            .map(|gr| gr.iter().map(|(w, edge)| (w.scaled(d), *edge)).collect())
            .collect();

        // Numerators stay below 2^(trig_den) * n, well inside u128 when small.
        let fits_u128 = d <= 63 && trig_den + 8 < 127;
        let mut numerators = if fits_u128 {
            let gw: Vec<Vec<Weighted<u128>>> = group_weights
                .iter()
                .map(|gr| {
                    gr.iter()
                        .map(|(w, e)| (w.to_u128().unwrap_or(0), *e))
                        .collect()
                })
                .collect();
            enumerate_worlds(n, &gw)
                .into_iter()
                .map(BigUint::from)
                .collect()
        } else {
            enumerate_worlds(n, &group_weights)
        };

        let mut den_log2 = trig_den;
        match &spec.ext {
            ExternalSpec::None => {}
            ExternalSpec::IndependentBernoulli { node_prob } => {
                let de = node_prob.iter().map(|&p| dyadic(p).1).max().unwrap_or(0);
                let one = BigUint::one() << de as usize;
                for (u, &p) in node_prob.iter().enumerate() {
                    let a = Dyadic::of(p).scaled(de);
                    let not_a = &one - &a;
                    let bit = 1usize << u;
                    for mask in 0..1usize << n {
                        if mask & bit == 0 {
                            let with = &numerators[mask | bit] * &a;
                            let without = &numerators[mask] * &not_a;
                            numerators[mask] = with + without;
                        } else {
                            numerators[mask] = &numerators[mask] << de as usize;
                        }
                    }
                }
                den_log2 += de as u64 * n as u64;
            }
            ExternalSpec::Generic(_) => {
                return Err(TapError::InvalidInput(
                    "generic external influence cannot be enumerated".into(),
                ))
            }
        }
        Ok(Self {
            n,
            numerators,
            den_log2,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Numerator of `sigma(mask)`; every entry shares the denominator
    /// `2^denominator_log2()`, so numerators compare directly.
    pub fn numerator(&self, mask: u64) -> &BigUint {
        &self.numerators[mask as usize]
    }

    pub fn denominator_log2(&self) -> u64 {
        self.den_log2
    }

    pub fn sigma_mask(&self, mask: u64) -> BigRational {
        BigRational::new(
            BigInt::from(self.numerators[mask as usize].clone()),
            BigInt::from(BigUint::one() << self.den_log2 as usize),
        )
    }

    pub fn sigma(&self, seeds: &NodeSet) -> Result<BigRational> {
        Ok(self.sigma_mask(self.mask_of(seeds)?))
    }

    pub fn sigma_f64(&self, mask: u64) -> f64 {
        self.sigma_mask(mask).to_f64().unwrap_or(f64::NAN)
    }

    /// Exact marginal gain of `u` over `mask`, rounded once to `f64`.
    /// Rounding is monotone, so exact comparisons between gains survive.
    pub fn gain_f64(&self, mask: u64, u: NodeId) -> f64 {
        let with = self.sigma_mask(mask | 1 << u);
        (with - self.sigma_mask(mask)).to_f64().unwrap_or(f64::NAN)
    }

    /// Whether `sigma(mask) >= t`, decided exactly.
    pub fn meets(&self, mask: u64, t: f64) -> bool {
        if t <= 0.0 {
            return true;
        }
        if !t.is_finite() {
            return false;
        }
        let (a, d) = dyadic(t);
        let lhs = &self.numerators[mask as usize] << d as usize;
        let rhs = BigUint::from(a) << self.den_log2 as usize;
        lhs >= rhs
    }

    pub fn mask_of(&self, seeds: &NodeSet) -> Result<u64> {
        match seeds.max_id() {
            Some(id) if id as usize >= self.n => Err(TapError::NodeOutOfRange { id, n: self.n }),
            _ => Ok(seeds.to_mask().unwrap_or(0)),
        }
    }
}

/// Exact expected activation of `seeds`.
pub fn exact_sigma(g: &DirectedGraph, spec: &InfluenceSpec, seeds: &NodeSet) -> Result<BigRational> {
    ExactSigma::new(g, spec)?.sigma(seeds)
}

/// A choice weight with the edge it makes live, if any.
type Weighted<T> = (T, Option<(NodeId, NodeId)>);
type Choice = Weighted<Dyadic>;

/// Independent choices that together determine a live-edge graph: one group
/// per IC edge or per LT node with in-edges. Zero-weight options are dropped.
fn choice_groups(g: &DirectedGraph, trig: &TriggeringSpec) -> Result<Vec<Vec<Choice>>> {
    let mut groups: Vec<Vec<Choice>> = match trig {
        TriggeringSpec::IndependentCascade { edge_prob } => g
            .edges()
            .zip(edge_prob)
            .map(|(e, &p)| {
                let live = Dyadic::of(p);
                vec![(Dyadic::complement(&[&live]), None), (live, Some(e))]
            })
            .collect(),
        TriggeringSpec::LinearThreshold { edge_weight } => (0..g.node_count() as NodeId)
            .filter(|&v| g.in_degree(v) > 0)
            .map(|v| {
                let mut gr: Vec<Choice> = g
                    .in_edges(v)
                    .map(|(u, e)| (Dyadic::of(edge_weight[e]), Some((u, v))))
                    .collect();
                let none = Dyadic::complement(&gr.iter().map(|c| &c.0).collect::<Vec<_>>());
                gr.push((none, None));
                gr
            })
            .collect(),
        TriggeringSpec::Generic(_) => {
            return Err(TapError::InvalidInput(
                "generic triggering distributions cannot be enumerated".into(),
            ))
        }
    };
    for gr in &mut groups {
        gr.retain(|c| !c.0.num.is_zero());
    }
    Ok(groups)
}

/// Accumulates `F[S] = sum_j w_j * |reach_j(S)|` over all live-edge graphs.
fn enumerate_worlds<T>(n: usize, groups: &[Vec<Weighted<T>>]) -> Vec<T>
where
    T: Clone + Zero + One + Mul<Output = T> + AddAssign + From<u32>,
{
    let mut table = vec![T::zero(); 1 << n];
    let mut out = vec![0u32; n];
    let mut reach_of = vec![0u32; 1 << n];
    walk(n, groups, 0, T::one(), &mut out, &mut table, &mut reach_of);
    table
}

fn walk<T>(
    n: usize,
    groups: &[Vec<Weighted<T>>],
    depth: usize,
    weight: T,
    out: &mut [u32],
    table: &mut [T],
    reach_of: &mut [u32],
) where
    T: Clone + Zero + One + Mul<Output = T> + AddAssign + From<u32>,
{
    if weight.is_zero() {
        return;
    }
    if depth == groups.len() {
        let mut reach: Vec<u32> = (0..n).map(|u| out[u] | 1 << u).collect();
        for k in 0..n {
            for i in 0..n {
                if reach[i] >> k & 1 == 1 {
                    reach[i] |= reach[k];
                }
            }
        }
        reach_of[0] = 0;
        for mask in 1usize..1 << n {
            let low = mask.trailing_zeros() as usize;
            reach_of[mask] = reach_of[mask & (mask - 1)] | reach[low];
            table[mask] += weight.clone() * T::from(reach_of[mask].count_ones());
        }
        return;
    }
    for (w, edge) in &groups[depth] {
        if let Some((u, v)) = *edge {
            out[u as usize] |= 1 << v;
        }
        walk(n, groups, depth + 1, weight.clone() * w.clone(), out, table, reach_of);
        if let Some((u, v)) = *edge {
            out[u as usize] &= !(1 << v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn single_edge(p: f64) -> (DirectedGraph, TriggeringSpec) {
        let g = DirectedGraph::from_edges(2, [(0, 1)]).unwrap();
        (g, TriggeringSpec::IndependentCascade { edge_prob: vec![p] })
    }

    fn ratio(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn dyadic_forms() {
        assert_eq!(dyadic(0.5), (1, 1));
        assert_eq!(dyadic(1.0), (1, 0));
        assert_eq!(dyadic(0.375), (3, 3));
        assert_eq!(dyadic(0.0), (0, 0));
    }

    #[test]
    fn single_edge_values() {
        let (g, trig) = single_edge(0.5);
        let spec = InfluenceSpec::new(trig.clone(), ExternalSpec::None);
        let a: NodeSet = [0].into_iter().collect();
        assert_eq!(exact_sigma(&g, &spec, &a).unwrap(), ratio(3, 2));
        assert_eq!(exact_sigma(&g, &spec, &NodeSet::new()).unwrap(), ratio(0, 1));
        let spec = InfluenceSpec::new(
            trig,
            ExternalSpec::IndependentBernoulli {
                node_prob: vec![0.0, 0.5],
            },
        );
        assert_eq!(exact_sigma(&g, &spec, &a).unwrap(), ratio(7, 4));
    }

    #[test]
    fn non_dyadic_probabilities_use_big_path() {
        // 0.3 needs a 2^54 denominator per edge: forces the BigUint branch.
        let g = DirectedGraph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let spec = InfluenceSpec::new(
            TriggeringSpec::IndependentCascade {
                edge_prob: vec![0.3, 0.3, 0.3],
            },
            ExternalSpec::None,
        );
        let t = ExactSigma::new(&g, &spec).unwrap();
        // P(2 reached from 0) = 1 - (1-0.3)(1-0.09) = 0.363
        let v = t.sigma_f64(1);
        assert!((v - (1.0 + 0.3 + 0.363)).abs() < 1e-12, "{v}");
    }

    #[test]
    fn lt_chain_is_exact() {
        // w(0,1) = 1/2, w(1,2) = 1/4: sigma({0}) = 1 + 1/2 + 1/8.
        let g = DirectedGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let spec = InfluenceSpec::new(
            TriggeringSpec::LinearThreshold {
                edge_weight: vec![0.5, 0.25],
            },
            ExternalSpec::None,
        );
        let t = ExactSigma::new(&g, &spec).unwrap();
        assert_eq!(t.sigma_mask(1), ratio(13, 8));
        assert_eq!(t.sigma_mask(0b111), ratio(3, 1));
    }

    #[test]
    fn refuses_large_or_generic() {
        let g = DirectedGraph::empty(20);
        let spec = InfluenceSpec::new(
            TriggeringSpec::IndependentCascade { edge_prob: vec![] },
            ExternalSpec::None,
        );
        assert!(matches!(ExactSigma::new(&g, &spec), Err(TapError::TooLarge(_))));
    }
}
