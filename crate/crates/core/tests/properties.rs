//! Randomized invariants over graph sizes the exhaustive suites do not
//! reach.

use proptest::prelude::*;

use pavlov::dynamics::{run, step, Configuration};
use pavlov::gf2::schedule_matrix;
use pavlov::graph::{maximum_matching, sample_gnp, spanning_tree, Graph};

fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n, 0u64..1_000_000).prop_map(|(n, seed)| sample_gnp(n, 0.4, seed).unwrap())
}

fn arb_config(n: usize) -> impl Strategy<Value = Configuration> {
    prop::collection::vec(any::<bool>(), n).prop_map(move |bits| {
        let mut x = Configuration::zeros(n);
        for (v, b) in bits.into_iter().enumerate() {
            x.set(v, b);
        }
        x
    })
}

proptest! {
    /// Text serialization round-trips.
    #[test]
    fn graph_text_round_trip(g in arb_graph(20)) {
        let parsed = Graph::from_text(&g.to_text()).unwrap();
        prop_assert_eq!(g, parsed);
    }

    /// One step is linear over XOR of configurations.
    #[test]
    fn step_is_linear(g in arb_graph(16), seed in any::<u64>()) {
        prop_assume!(g.m() > 0);
        let e = g.edge(seed as usize % g.m());
        let runner = |bits: u64| {
            let mut x = Configuration::zeros(g.n());
            for v in 0..g.n() {
                x.set(v, bits >> v & 1 == 1);
            }
            x
        };
        let (x, y) = (runner(seed), runner(seed.rotate_left(17)));
        let mut xy = x.clone();
        xy.xor_assign(&y);
        let lhs = step(&g, &xy, e).unwrap();
        let mut rhs = step(&g, &x, e).unwrap();
        rhs.xor_assign(&step(&g, &y, e).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    /// Applying the schedule matrix replays the schedule.
    #[test]
    fn schedule_matrix_replays(g in arb_graph(12), picks in prop::collection::vec(any::<usize>(), 0..24), x0 in arb_config(12)) {
        prop_assume!(g.m() > 0);
        let x0 = {
            let mut x = Configuration::zeros(g.n());
            for v in 0..g.n() {
                x.set(v, x0.get(v % x0.n()));
            }
            x
        };
        let seq: Vec<(usize, usize)> = picks.iter().map(|&p| g.edge(p % g.m())).collect();
        let m = schedule_matrix(&g, &seq).unwrap();
        let direct = run(&g, &x0, seq.iter().copied(), seq.len(), false).unwrap();
        prop_assert_eq!(m.apply(&x0), direct.final_config);
    }

    /// Maximum matchings are valid and maximal (no two unmatched
    /// neighbors remain).
    #[test]
    fn matching_is_valid_and_maximal(g in arb_graph(24)) {
        let m = maximum_matching(&g);
        prop_assert!(m.is_valid_on(&g));
        for &(u, v) in g.edges() {
            prop_assert!(m.partner(u).is_some() || m.partner(v).is_some());
        }
    }

    /// Spanning trees of connected graphs span with n-1 graph edges.
    #[test]
    fn spanning_tree_spans(g in arb_graph(20)) {
        prop_assume!(g.is_connected());
        let t = spanning_tree(&g, 0).unwrap();
        prop_assert_eq!(t.graph().m(), g.n() - 1);
        prop_assert!(t.graph().is_connected());
        for &(u, v) in t.graph().edges() {
            prop_assert!(g.has_edge(u, v));
        }
        for v in 1..g.n() {
            prop_assert!(t.parent(v).is_some());
        }
        prop_assert!(t.parent(0).is_none());
    }
}
