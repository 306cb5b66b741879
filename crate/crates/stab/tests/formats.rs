use std::path::Path;

use proptest::prelude::*;
use stab::format::{decode_graph, decode_oracle, encode_graph, encode_oracle, graph_hash};
use stab::parallel;
use stab_core::influence::{ExternalSpec, InfluenceSpec, TriggeringSpec};
use stab_core::DirectedGraph;

fn graph_strategy() -> impl Strategy<Value = DirectedGraph> {
    (1usize..30).prop_flat_map(|n| {
        let nn = n as u32;
        prop::collection::vec((0..nn, 0..nn), 0..80).prop_map(move |edges| {
            let edges = edges.into_iter().filter(|(u, v)| u != v);
            DirectedGraph::from_edges(n, edges).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_bytes_round_trip(g in graph_strategy()) {
        let bytes = encode_graph(&g).unwrap();
        let back = decode_graph(&bytes, Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(graph_hash(&back).unwrap(), graph_hash(&g).unwrap());
    }

    #[test]
    fn oracle_bytes_round_trip(
        g in graph_strategy(),
        ep in prop_oneof![Just(0.0), 0.0..0.5f64],
        ell in 1usize..6,
        k in 2usize..12,
        seed in any::<u64>(),
    ) {
        let spec = InfluenceSpec::new(
            TriggeringSpec::uniform_ic(&g, 0.6, seed).unwrap(),
            ExternalSpec::uniform(g.node_count(), ep, seed).unwrap(),
        );
        let o = parallel::build_oracle(&g, &spec, ell, k, seed, seed ^ 1).unwrap();
        let bytes = encode_oracle(&o).unwrap();
        let back = decode_oracle(&bytes, Path::new("mem")).unwrap();
        prop_assert_eq!(&back, &o);
        prop_assert_eq!(encode_oracle(&back).unwrap(), bytes);
    }

    #[test]
    fn truncated_inputs_are_rejected(g in graph_strategy(), cut in 0usize..1000) {
        let bytes = encode_graph(&g).unwrap();
        let cut = cut % bytes.len();
        prop_assert!(decode_graph(&bytes[..cut], Path::new("mem")).is_err());

        let spec = InfluenceSpec::new(
            TriggeringSpec::uniform_ic(&g, 0.5, 3).unwrap(),
            ExternalSpec::None,
        );
        let o = parallel::build_oracle(&g, &spec, 2, 4, 5, 6).unwrap();
        let bytes = encode_oracle(&o).unwrap();
        let cut = cut % bytes.len();
        prop_assert!(decode_oracle(&bytes[..cut], Path::new("mem")).is_err());
    }
}
