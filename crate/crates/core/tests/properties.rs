//! Randomized invariant checks over the library's pure functions.

use fpga3d::arch::test_arch;
use fpga3d::graph::CircuitGraph;
use fpga3d::metrics::{emit_report, parse_machine_report, FlowMetrics, ReportFormat};
use fpga3d::partition::{cut_size, random_balanced_partition};
use fpga3d::rrg::{build_rrg, track_classes};
use proptest::prelude::*;

proptest! {
    /// The single/double/quad track split always covers the channel exactly.
    #[test]
    fn track_classes_partition_width(w in 1usize..=64, gx in 1usize..=6, gy in 1usize..=6) {
        let w = w * 2;
        let arch = test_arch(1, gx, gy);
        let (n1, n2, n4) = track_classes(w, &arch);
        prop_assert_eq!(n1 + n2 + n4, w);
    }

    /// The machine report round-trips through its own parser.
    #[test]
    fn machine_report_round_trip(
        tiers in 1usize..=4,
        wmin in 1usize..=64,
        cut in 0u64..10_000,
        cpd in 0.0f64..1e-6,
    ) {
        let m = FlowMetrics {
            circuit: "prop".into(),
            tiers,
            grid_x: 8,
            grid_y: 8,
            blocks: 17,
            nets: 23,
            tsv_cut: cut,
            tsv_used: 3,
            wmin: wmin * 2,
            route_iterations: 4,
            total_wirelength: 99,
            cpd,
            transistor_total: 123_456,
            tier_blocks: vec![9; tiers],
        };
        let mut back = parse_machine_report(&emit_report(&m, ReportFormat::Machine)).unwrap();
        // cpd is serialized with fixed precision; allow last-ulp wobble.
        prop_assert!((back.cpd - m.cpd).abs() <= 1e-12 * m.cpd.abs().max(1.0));
        back.cpd = m.cpd;
        prop_assert_eq!(back, m);
    }

    /// Every RRG edge targets a live node and wire capacities are all 1.
    #[test]
    fn rrg_edges_in_bounds(w in 1usize..=8, gx in 1usize..=4, gy in 1usize..=4, tiers in 1usize..=3) {
        let arch = test_arch(tiers, gx, gy);
        let rrg = build_rrg(&arch, w * 2).unwrap();
        for u in 0..rrg.node_count() {
            if rrg.nodes[u].kind.is_wire() {
                prop_assert_eq!(rrg.nodes[u].capacity, 1);
            }
            for e in &rrg.out[u] {
                prop_assert!(e.to < rrg.node_count());
            }
        }
    }

    /// A random balanced partition keeps every tier within one block of
    /// even, and its cut never exceeds the total edge weight.
    #[test]
    fn random_partition_is_balanced(n in 4usize..40, tiers in 1usize..=4, seed in 0u64..1000) {
        let edges: Vec<(usize, usize, u32)> = (1..n).map(|v| (v - 1, v, 1)).collect();
        let g = CircuitGraph::from_edges(n, &edges);
        let p = random_balanced_partition(&g, tiers, seed).unwrap();
        let per: Vec<usize> = (0..tiers)
            .map(|t| p.tier_of.iter().filter(|&&x| x == t).count())
            .collect();
        let (lo, hi) = (per.iter().min().unwrap(), per.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
        prop_assert!(cut_size(&g, &p) <= (n as u64 - 1));
    }
}
