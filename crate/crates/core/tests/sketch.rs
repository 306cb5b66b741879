mod common;

use common::{bfs_reach, brute_sketch, brute_tau, naive_reach_count, set};
use proptest::prelude::*;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stab_core::graph::generate_er;
use stab_core::influence::{make_world, sample_world_parts, ExternalSpec, InfluenceSpec, SampledWorld, TriggeringSpec};
use stab_core::sketch::{
    build_oracles, c1_estimate, c2_estimate, merge_sketch, tau_exact, OracleBuilder, RankAssignment, RankEntry,
    Sketch,
};
use stab_core::{DirectedGraph, NodeId};

fn worlds(g: &DirectedGraph, spec: &InfluenceSpec, ell: u64, seed: u64) -> Vec<SampledWorld> {
    (0..ell).map(|i| make_world(g, spec, i, seed).unwrap()).collect()
}

fn er_instance(n: usize, ep_max: f64, seed: u64) -> (DirectedGraph, InfluenceSpec) {
    let g = generate_er(n, 2.0 / n as f64, seed).unwrap();
    let spec = InfluenceSpec::new(
        TriggeringSpec::uniform_ic(&g, 1.0, seed).unwrap(),
        ExternalSpec::uniform(n, ep_max, seed).unwrap(),
    );
    (g, spec)
}

#[test]
fn oracle_equals_brute_force_bottom_k() {
    let (g, spec) = er_instance(200, 0.01, 31);
    let ws = worlds(&g, &spec, 20, 7);
    let o = build_oracles(&ws, 64, 5).unwrap();
    let ranks = RankAssignment::new(5);
    assert!(ws.iter().any(|w| w.external_reach_size > 0));
    for u in 0..200 {
        assert_eq!(o.sketch(u).entries(), brute_sketch(&ws, &[u], 64, &ranks).as_slice(), "node {u}");
    }
    let offset = ws.iter().map(|w| w.external_reach_size).sum::<usize>() as f64 / 20.0;
    assert_eq!(o.offset(), offset);
}

#[test]
fn chunked_and_merged_builds_agree() {
    let (g, spec) = er_instance(120, 0.02, 8);
    let ws = worlds(&g, &spec, 12, 2);
    let whole = build_oracles(&ws, 16, 1).unwrap();

    let mut chunked = OracleBuilder::new(120, 16, 1).unwrap();
    for c in ws.chunks(5) {
        chunked.add_worlds(c).unwrap();
    }
    assert_eq!(chunked.finish().unwrap(), whole);

    let mut left = OracleBuilder::new(120, 16, 1).unwrap();
    left.add_worlds(&ws[7..]).unwrap();
    let mut right = OracleBuilder::new(120, 16, 1).unwrap();
    right.add_worlds(&ws[..7]).unwrap();
    left.merge(right).unwrap();
    assert_eq!(left.finish().unwrap(), whole);

    let other = OracleBuilder::new(120, 15, 1).unwrap();
    let mut b = OracleBuilder::new(120, 16, 1).unwrap();
    assert!(b.merge(other).is_err());
}

#[test]
fn merge_equals_rebuild() {
    let (g, spec) = er_instance(50, 0.02, 4);
    let ws = worlds(&g, &spec, 6, 3);
    let k = 24;
    let o = build_oracles(&ws, k, 9).unwrap();
    let ranks = RankAssignment::new(9);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let size = rng.random_range(1..6);
        let a: Vec<NodeId> = sample(&mut rng, 50, size).into_iter().map(|x| x as NodeId).collect();
        let u = rng.random_range(0..50);
        let xa = Sketch::from_entries(k, brute_sketch(&ws, &a, k, &ranks));
        let merged = merge_sketch(&xa, o.sketch(u)).unwrap();
        let mut with_u = a.clone();
        with_u.push(u);
        assert_eq!(merged.entries(), brute_sketch(&ws, &with_u, k, &ranks).as_slice());
    }
}

#[test]
fn unsaturated_sketches_count_exactly() {
    let (g, spec) = er_instance(80, 0.0, 2);
    let ws = worlds(&g, &spec, 5, 1);
    let o = build_oracles(&ws, 30, 0).unwrap();
    for u in 0..80 {
        let pairs: usize = ws.iter().map(|w| bfs_reach(&w.residual, u).len()).sum();
        let x = o.sketch(u);
        if pairs < 30 {
            assert_eq!(x.len(), pairs);
            assert_eq!(c1_estimate(x, 5), brute_tau(&ws, &[u]));
            assert_eq!(c2_estimate(&set(&[u]), &o).unwrap(), brute_tau(&ws, &[u]));
        } else {
            assert!(x.is_saturated());
        }
    }
}

#[test]
fn residual_reach_recovers_activation() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for seed in 0..10u64 {
        let (g, spec) = er_instance(40, 0.05, seed);
        let ws = worlds(&g, &spec, 8, seed);
        let offset = ws.iter().map(|w| w.external_reach_size).sum::<usize>();
        for _ in 0..10 {
            let a: Vec<NodeId> = (0..40).filter(|_| rng.random_bool(0.1)).collect();
            let tau_total: usize = ws.iter().map(|w| naive_reach_count(&w.residual, &a)).sum();
            let sigma_total: usize = (0..8)
                .map(|i| {
                    let (live, ext) = sample_world_parts(&g, &spec, i, seed).unwrap();
                    let mut start = a.clone();
                    start.extend(ext.iter());
                    naive_reach_count(&live, &start)
                })
                .sum();
            assert_eq!(tau_total + offset, sigma_total);
            assert_eq!(tau_exact(&set(&a), &ws).unwrap(), tau_total as f64 / 8.0);
        }
    }
}

#[test]
fn tau_exact_trivia() {
    let (g, spec) = er_instance(30, 0.05, 1);
    let ws = worlds(&g, &spec, 1, 0);
    assert_eq!(tau_exact(&set(&[]), &ws).unwrap(), 0.0);
    let all: Vec<NodeId> = (0..30).collect();
    assert_eq!(tau_exact(&set(&all), &ws).unwrap(), (30 - ws[0].external_reach_size) as f64);
    assert!(tau_exact(&set(&[]), &[]).is_err());
}

fn rel_err(est: f64, truth: f64) -> f64 {
    (est - truth).abs() / truth
}

#[test]
fn c1_singleton_error_within_three_cv() {
    let (g, spec) = er_instance(500, 0.0, 17);
    let ws = worlds(&g, &spec, 50, 4);
    let k = 128;
    let o = build_oracles(&ws, k, 12).unwrap();
    let bound = 3.0 / ((k - 2) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut saturated = 0;
    for _ in 0..100 {
        let u = rng.random_range(0..500);
        let truth = brute_tau(&ws, &[u]);
        saturated += o.sketch(u).is_saturated() as usize;
        assert!(rel_err(o.c1(o.sketch(u)), truth) < bound, "node {u}");
    }
    assert!(saturated > 0);
}

#[test]
fn c2_beats_c1_on_large_seed_sets() {
    // With ip_max = 1 most seeds sit in one giant component whose sketches
    // coincide, and the two estimators see the same information.
    let g = generate_er(500, 2.0 / 500.0, 17).unwrap();
    let spec = InfluenceSpec::new(TriggeringSpec::uniform_ic(&g, 0.5, 17).unwrap(), ExternalSpec::None);
    let ws = worlds(&g, &spec, 50, 4);
    let k = 128;
    let o = build_oracles(&ws, k, 12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut wins = 0;
    for _ in 0..100 {
        let a: Vec<NodeId> = sample(&mut rng, 500, 50).into_iter().map(|x| x as NodeId).collect();
        let truth = brute_tau(&ws, &a);
        let merged = a
            .iter()
            .fold(Sketch::new(k), |x, &u| merge_sketch(&x, o.sketch(u)).unwrap());
        let e1 = rel_err(c1_estimate(&merged, 50), truth);
        let e2 = rel_err(c2_estimate(&set(&a), &o).unwrap(), truth);
        wins += (e2 < e1) as usize;
    }
    assert!(wins >= 80, "C2 better in {wins} of 100");
}

#[test]
fn c1_concentration_at_default_size() {
    let n = 500usize;
    let (g, spec) = er_instance(n, 0.0, 23);
    let ws = worlds(&g, &spec, 30, 6);
    let eps = 0.25;
    let k = (3.0 * (n as f64).ln() / (eps * eps)).ceil() as usize;
    let o = build_oracles(&ws, k, 2).unwrap();
    let mut checked = 0;
    let mut failures = 0;
    for u in 0..n as NodeId {
        if !o.sketch(u).is_saturated() {
            continue;
        }
        checked += 1;
        failures += (rel_err(o.c1(o.sketch(u)), brute_tau(&ws, &[u])) > eps) as usize;
    }
    assert!(checked >= 50);
    assert!(failures * 20 <= checked, "{failures} of {checked}");
}

fn arb_entries() -> impl Strategy<Value = Vec<RankEntry>> {
    proptest::collection::vec((0u32..30, 0u32..3), 0..25).prop_map(|pairs| {
        let ranks = RankAssignment::new(77);
        pairs.into_iter().map(|(v, i)| ranks.entry(v, i)).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn merge_is_a_semilattice(a in arb_entries(), b in arb_entries(), c in arb_entries(), k in 1usize..12) {
        let (xa, xb, xc) = (Sketch::from_entries(k, a.clone()), Sketch::from_entries(k, b.clone()), Sketch::from_entries(k, c.clone()));
        let ab = merge_sketch(&xa, &xb).unwrap();
        prop_assert_eq!(&ab, &merge_sketch(&xb, &xa).unwrap());
        prop_assert_eq!(&merge_sketch(&xa, &xa).unwrap(), &xa);
        let left = merge_sketch(&ab, &xc).unwrap();
        let right = merge_sketch(&xa, &merge_sketch(&xb, &xc).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        let all = Sketch::from_entries(k, a.into_iter().chain(b).chain(c));
        prop_assert_eq!(&left, &all);
        prop_assert!(ab.entries().windows(2).all(|w| w[0].key_cmp(&w[1]).is_lt()));
    }

    #[test]
    fn c1_never_decreases_under_merge(a in arb_entries(), b in arb_entries(), k in 2usize..12) {
        let xa = Sketch::from_entries(k, a);
        let merged = merge_sketch(&xa, &Sketch::from_entries(k, b)).unwrap();
        prop_assert!(merged.threshold_rank().gamma <= xa.threshold_rank().gamma || !xa.is_saturated());
        prop_assert!(c1_estimate(&merged, 3) >= c1_estimate(&xa, 3) - 1e-12);
    }
}

