//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line on success (run with `--nocapture` to see them).

use fpga3d::arch::{sb_switch_count, test_arch, tsv_rc_delay, DelayModel};
use fpga3d::blif::parse_blif;
use fpga3d::flow::{run_flow, FlowConfig};
use fpga3d::graph::{build_graph, CircuitGraph};
use fpga3d::metrics::transistor_count;
use fpga3d::pack::{pack_blocks, BlockKind, BlockNetlist};
use fpga3d::partition::{
    anneal_partition, anneal_partition_with_report, apply_swap, cut_size,
    random_balanced_partition, setup_gains, swap_delta_cost, Partition,
};
use fpga3d::place::{
    anneal_placement_observed, placement_cost, Placement,
};
use fpga3d::route::{find_wmin, route_nets, RouteConfig, RouteNet};
use fpga3d::rrg::{build_rrg, NodeKind, Rrg, RrgEdge, RrgNode, SitePins};
use fpga3d::sa::{accept_move, cooling_alpha, SaConfig, StallDetector, StopReason};
use fpga3d::timing::{analyze, hpwl_delays};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

fn pass(n: usize, what: &str) {
    println!("acceptance criterion {n:2} ({what}): PASS");
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_graph(r: &mut ChaCha8Rng, max_v: usize, edge_p: f64) -> CircuitGraph {
    let v = r.gen_range(8..=max_v);
    let mut edges = Vec::new();
    for a in 0..v {
        for b in a + 1..v {
            if r.gen_bool(edge_p) {
                edges.push((a, b, r.gen_range(1..=3u32)));
            }
        }
    }
    CircuitGraph::from_edges(v, &edges)
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_01_swap_delta_oracle() {
    let mut r = rng(101);
    for g in 0..100 {
        let graph = random_graph(&mut r, 30, 0.2);
        let n = [2usize, 3, 4][g % 3];
        if graph.vertex_count < 2 * n {
            continue;
        }
        let p0 = random_balanced_partition(&graph, n, r.gen()).unwrap();
        let gains = setup_gains(&graph, &p0);
        let base = cut_size(&graph, &p0) as i64;
        for _ in 0..1000 {
            let i = r.gen_range(0..graph.vertex_count);
            let j = r.gen_range(0..graph.vertex_count);
            if p0.tier_of[i] == p0.tier_of[j] {
                continue;
            }
            let delta = swap_delta_cost(&graph, &gains, &p0, i, j).unwrap();
            let mut q = p0.clone();
            q.tier_of.swap(i, j);
            let after = cut_size(&graph, &q) as i64;
            assert_eq!(delta, after - base, "graph {g} swap ({i},{j}) n={n}");
        }
    }
    pass(1, "swap delta equals cut recompute");
}

// ---------------------------------------------------------------- 2

fn brute_force_bisection(graph: &CircuitGraph) -> u64 {
    let v = graph.vertex_count;
    assert!(v.is_multiple_of(2) && v <= 12);
    let half = v / 2;
    let mut best = u64::MAX;
    // Fix vertex 0 in tier 0 to halve the enumeration.
    for mask in 0u32..(1 << (v - 1)) {
        if mask.count_ones() as usize != half {
            continue;
        }
        let mut p = Partition {
            tier_of: vec![0; v],
            tier_sizes: vec![half, half],
        };
        for b in 0..v - 1 {
            if mask & (1 << b) != 0 {
                p.tier_of[b + 1] = 1;
            }
        }
        best = best.min(cut_size(graph, &p));
    }
    best
}

#[test]
fn criterion_02_partition_optimality() {
    let mut suite: Vec<CircuitGraph> = Vec::new();
    for n in [6usize, 8, 10, 12] {
        // Path.
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1)).collect();
        suite.push(CircuitGraph::from_edges(n, &edges));
        // Cycle.
        let mut c = edges.clone();
        c.push((0, n - 1, 1));
        suite.push(CircuitGraph::from_edges(n, &c));
        // Two (n/2)-cliques joined by one bridge.
        let h = n / 2;
        let mut k = Vec::new();
        for a in 0..h {
            for b in a + 1..h {
                k.push((a, b, 1));
                k.push((h + a, h + b, 1));
            }
        }
        k.push((0, h, 1));
        suite.push(CircuitGraph::from_edges(n, &k));
    }
    let mut r = rng(202);
    while suite.len() < 20 {
        let v = 2 * r.gen_range(4..=6usize);
        let mut edges = Vec::new();
        for a in 0..v {
            for b in a + 1..v {
                if r.gen_bool(0.35) {
                    edges.push((a, b, r.gen_range(1..=2u32)));
                }
            }
        }
        suite.push(CircuitGraph::from_edges(v, &edges));
    }

    let mut optimal_hits = 0;
    for (gi, graph) in suite.iter().enumerate() {
        let opt = brute_force_bisection(graph);
        let mut best = u64::MAX;
        for seed in 0..10u64 {
            let cfg = SaConfig::with_seed(1000 * gi as u64 + seed);
            let p = anneal_partition(graph, 2, &cfg);
            assert!(p.is_balanced());
            best = best.min(cut_size(graph, &p));
        }
        assert!(
            best <= opt + 2,
            "graph {gi}: annealed {best} vs optimal {opt}"
        );
        if best == opt {
            optimal_hits += 1;
        }
    }
    assert!(
        optimal_hits * 100 >= suite.len() * 90,
        "only {optimal_hits}/{} optimal",
        suite.len()
    );
    pass(2, "small-scale bisection optimality");
}

// ---------------------------------------------------------------- 3

#[test]
fn criterion_03_annealer_mechanics() {
    // T0 is the initial cut-size: on K4 every balanced bisection cuts 4.
    let k4 = CircuitGraph::from_edges(4, &[(0, 1, 1), (0, 2, 1), (0, 3, 1), (1, 2, 1), (1, 3, 1), (2, 3, 1)]);
    let (_, rep) = anneal_partition_with_report(&k4, 2, &SaConfig::with_seed(3));
    assert_eq!(rep.t0, 4.0);
    assert_eq!(rep.t_min, 0.5);

    // Geometric cooling and alpha clamp on a larger run.
    let mut r = rng(303);
    let graph = random_graph(&mut r, 24, 0.3);
    let (_, rep) = anneal_partition_with_report(&graph, 2, &SaConfig::with_seed(9));
    for w in rep.temperatures.windows(2) {
        assert_eq!(w[1].temperature, w[0].temperature * w[0].alpha);
    }
    for t in &rep.temperatures {
        assert!((0.5..=0.99).contains(&t.alpha));
    }
    // Zero-edge graph: T0 = 0, immediate stop.
    let empty = CircuitGraph::from_edges(4, &[]);
    let (_, rep0) = anneal_partition_with_report(&empty, 2, &SaConfig::with_seed(1));
    assert_eq!(rep0.t0, 0.0);
    assert_eq!(rep0.stop, StopReason::ZeroInitialCost);

    // Acceptance rule: downhill unconditional; uphill via exp(-d/T).
    assert!(accept_move(-1.0, 0.5, 0.999_999_9));
    assert!(accept_move(0.0, 0.5, 0.999_999_9));
    let d = 2.0f64;
    let t = 3.0f64;
    let threshold = (-d / t).exp();
    assert!(accept_move(d, t, threshold - 1e-12));
    assert!(!accept_move(d, t, threshold + 1e-12));

    // Alpha: ratio of final/initial improving costs, clamped.
    let cfg = SaConfig::default();
    assert_eq!(cooling_alpha(&cfg, Some(100.0), Some(80.0)), 0.8);
    assert_eq!(cooling_alpha(&cfg, Some(100.0), Some(10.0)), 0.5);
    assert_eq!(cooling_alpha(&cfg, Some(100.0), Some(100.0)), 0.99);
    assert_eq!(cooling_alpha(&cfg, None, None), cfg.alpha_fallback);

    // Stall prong 1: no best-cost improvement over 5 temperatures.
    let mut s = StallDetector::new(&cfg, 100);
    let mut fired = false;
    s.record_temperature(50.0); // baseline
    for _ in 0..5 {
        fired = s.record_temperature(50.0);
    }
    assert!(fired);
    // Stall prong 2: 20 * N consecutive rejections.
    let mut s = StallDetector::new(&cfg, 10);
    let mut fired = false;
    for _ in 0..200 {
        fired = s.record_move(false);
        if fired {
            break;
        }
    }
    assert!(fired);
    // An acceptance resets the rejection run.
    let mut s = StallDetector::new(&cfg, 10);
    for _ in 0..199 {
        assert!(!s.record_move(false) || false);
    }
    pass(3, "annealing schedule mechanics");
}

// ---------------------------------------------------------------- 4

fn synth_circuit(seed: u64, n_luts: usize, n_pis: usize, n_pos: usize) -> String {
    let mut r = rng(seed);
    let mut sigs: Vec<String> = (0..n_pis).map(|i| format!("pi{i}")).collect();
    let mut body = String::new();
    let mut produced: Vec<String> = Vec::new();
    for i in 0..n_luts {
        let fanin = r.gen_range(2..=4usize).min(sigs.len());
        let mut ins: Vec<String> = Vec::new();
        while ins.len() < fanin {
            let s = sigs[r.gen_range(0..sigs.len())].clone();
            if !ins.contains(&s) {
                ins.push(s);
            }
        }
        let out = format!("n{i}");
        body.push_str(&format!(".names {} {}\n{} 1\n", ins.join(" "), out, "1".repeat(ins.len())));
        sigs.push(out.clone());
        produced.push(out);
    }
    // Outputs: the last n_pos produced signals.
    let outs: Vec<String> = produced.iter().rev().take(n_pos).rev().cloned().collect();
    let mut s = String::from(".model synth\n.inputs ");
    s.push_str(&(0..n_pis).map(|i| format!("pi{i}")).collect::<Vec<_>>().join(" "));
    s.push_str("\n.outputs ");
    s.push_str(&outs.join(" "));
    s.push('\n');
    s.push_str(&body);
    // Feed every unconsumed non-output signal into a sink LUT per output
    // is unnecessary: unconsumed signals simply drive no net.
    s.push_str(".end\n");
    s
}

fn packed(seed: u64, n_luts: usize) -> BlockNetlist {
    let blif = synth_circuit(seed, n_luts, 6, 6);
    let nl = parse_blif(&blif, 6).unwrap();
    pack_blocks(&nl, 1)
}

#[test]
fn criterion_04_incremental_consistency() {
    // Partition: 10,000 random cross-tier swaps with incremental cost and
    // gain-table maintenance, checked against recomputation.
    let mut r = rng(404);
    let graph = random_graph(&mut r, 30, 0.25);
    let n = 3;
    let mut p = random_balanced_partition(&graph, n, 11).unwrap();
    let mut gains = setup_gains(&graph, &p);
    let mut tracked = cut_size(&graph, &p) as i64;
    let mut accepted = 0usize;
    let mut moves = 0usize;
    while moves < 10_000 {
        moves += 1;
        let i = r.gen_range(0..graph.vertex_count);
        let j = r.gen_range(0..graph.vertex_count);
        if p.tier_of[i] == p.tier_of[j] {
            continue;
        }
        let delta = swap_delta_cost(&graph, &gains, &p, i, j).unwrap();
        // Accept a random 60% of moves regardless of sign.
        if r.gen_bool(0.6) {
            apply_swap(&graph, &mut p, &mut gains, i, j);
            tracked += delta;
            accepted += 1;
            assert_eq!(tracked, cut_size(&graph, &p) as i64, "after move {moves}");
            if accepted.is_multiple_of(100) {
                let fresh = setup_gains(&graph, &p);
                assert_eq!(gains.to_tier, fresh.to_tier, "gains at move {moves}");
            }
        }
    }
    assert!(accepted > 1000);

    // Placement: audit the annealer's tracked cost after every accepted
    // move until 10,000 audits have run.
    let bn = packed(44, 90);
    let graph = build_graph(&bn);
    let p = random_balanced_partition(&graph, 2, 5).unwrap();
    let arch = test_arch(2, 10, 10);
    let mut audits = 0usize;
    let mut cfg = SaConfig::with_seed(77);
    cfg.moves_per_temperature = Some(4000);
    let arch_ref = &arch;
    let bn_ref = &bn;
    anneal_placement_observed(&bn, &p, &arch, &cfg, &mut |pl: &Placement, tracked: i64| {
        if audits < 10_000 {
            assert_eq!(tracked, placement_cost(bn_ref, pl, arch_ref), "audit {audits}");
        }
        audits += 1;
    })
    .unwrap();
    assert!(audits >= 10_000, "only {audits} accepted moves audited");
    pass(4, "incremental costs match recomputation");
}

// ---------------------------------------------------------------- 5

/// Independent Dijkstra over the RRG with pure base costs (congestion-free
/// router semantics, zero criticality): min over paths of the sum of
/// base_cost over every node after the start.
fn oracle_cost(rrg: &Rrg, src: usize, dst: usize) -> Option<f64> {
    let n = rrg.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut heap = std::collections::BinaryHeap::new();
    dist[src] = 0.0;
    heap.push((std::cmp::Reverse(ordered_float::NotNan::new(0.0).unwrap()), src));
    while let Some((std::cmp::Reverse(c), u)) = heap.pop() {
        let c = c.into_inner();
        if c > dist[u] {
            continue;
        }
        if u == dst {
            return Some(c);
        }
        for e in &rrg.out[u] {
            if rrg.nodes[e.to].kind == NodeKind::Sink && e.to != dst {
                continue;
            }
            let nd = c + rrg.nodes[e.to].base_cost;
            if nd < dist[e.to] {
                dist[e.to] = nd;
                heap.push((std::cmp::Reverse(ordered_float::NotNan::new(nd).unwrap()), e.to));
            }
        }
    }
    None
}

fn random_clb(r: &mut ChaCha8Rng, gx: usize, gy: usize, tiers: usize) -> (usize, usize, usize) {
    (
        r.gen_range(1..=gx),
        r.gen_range(1..=gy),
        r.gen_range(0..tiers),
    )
}

#[test]
fn criterion_05_router_correctness() {
    // (a) Congestion-free routing equals the shortest-path oracle.
    let mut r = rng(505);
    for case in 0..50 {
        let tiers = 1 + case % 2;
        let g = r.gen_range(3..=6usize);
        let w = if r.gen_bool(0.5) { 2 } else { 4 };
        let arch = test_arch(tiers, g, g);
        let rrg = build_rrg(&arch, w).unwrap();
        let src = random_clb(&mut r, g, g, tiers);
        let mut dst = src;
        while dst == src {
            dst = random_clb(&mut r, g, g, tiers);
        }
        let nets = vec![RouteNet {
            id: 0,
            name: "o".into(),
            source: src,
            sinks: vec![dst],
        }];
        let res = route_nets(&rrg, &nets, &[], &RouteConfig::default()).unwrap();
        let path = &res.nets[0].connections[0].path;
        let routed_cost: f64 = path[1..].iter().map(|&n| rrg.nodes[n].base_cost).sum();
        let want = oracle_cost(&rrg, path[0], *path.last().unwrap()).unwrap();
        assert!(
            (routed_cost - want).abs() < 1e-9,
            "case {case}: routed {routed_cost} oracle {want}"
        );
    }

    // (b) Hand-built two-net corridor with two capacity-1 wires of skewed
    // cost: both nets prefer the cheap wire first; negotiation must end
    // with zero overuse.
    let (rrg, nets) = corridor_fixture();
    let res = route_nets(&rrg, &nets, &[], &RouteConfig::default()).unwrap();
    let mut usage: HashMap<usize, usize> = HashMap::new();
    for net in &res.nets {
        for nd in net.used_nodes() {
            *usage.entry(nd).or_default() += 1;
        }
    }
    for (&nd, &u) in &usage {
        assert!(u <= rrg.nodes[nd].capacity, "node {nd} overused");
    }
    assert!(res.iterations > 1, "conflict must require negotiation");

    // (c) Zero overuse and connected acyclic route trees on random
    // multi-net instances.
    for case in 0..10 {
        let g = 5;
        let tiers = 1 + case % 3;
        let arch = test_arch(tiers, g, g);
        let rrg = build_rrg(&arch, 4).unwrap();
        let mut used_srcs = Vec::new();
        let nets: Vec<RouteNet> = (0..8)
            .map(|id| {
                let mut src = random_clb(&mut r, g, g, tiers);
                while used_srcs.iter().filter(|&&s| s == src).count() >= 2 {
                    src = random_clb(&mut r, g, g, tiers);
                }
                used_srcs.push(src);
                let n_sinks = r.gen_range(1..=3usize);
                let mut sinks = Vec::new();
                while sinks.len() < n_sinks {
                    let d = random_clb(&mut r, g, g, tiers);
                    if d != src && !sinks.contains(&d) {
                        sinks.push(d);
                    }
                }
                RouteNet {
                    id,
                    name: format!("n{id}"),
                    source: src,
                    sinks,
                }
            })
            .collect();
        let res = route_nets(&rrg, &nets, &[], &RouteConfig::default()).unwrap();
        let mut usage: HashMap<usize, usize> = HashMap::new();
        for net in &res.nets {
            for nd in net.used_nodes() {
                *usage.entry(nd).or_default() += 1;
            }
        }
        for (&nd, &u) in &usage {
            assert!(u <= rrg.nodes[nd].capacity, "case {case}: node {nd} overused");
        }
        for (net, spec) in res.nets.iter().zip(nets.iter()) {
            let mut tree: Vec<usize> = Vec::new();
            for (ci, conn) in net.connections.iter().enumerate() {
                // Acyclic: no repeated nodes within one connection path.
                let mut seen = conn.path.clone();
                seen.sort_unstable();
                seen.dedup();
                assert_eq!(seen.len(), conn.path.len(), "cycle in connection");
                // Connected: starts at the source (first) or on the tree.
                if ci == 0 {
                    assert_eq!(
                        conn.path[0],
                        rrg.pins(spec.source.0, spec.source.1, spec.source.2).source
                    );
                } else {
                    assert!(tree.contains(&conn.path[0]), "disconnected branch");
                }
                tree.extend_from_slice(&conn.path);
            }
        }

        // (d) Tier-crossing nets carry at least tier-span wire_z nodes.
        if tiers > 1 {
            for (net, spec) in res.nets.iter().zip(nets.iter()) {
                let span = spec
                    .sinks
                    .iter()
                    .map(|s| s.2.abs_diff(spec.source.2))
                    .max()
                    .unwrap();
                let wz = net
                    .used_nodes()
                    .iter()
                    .filter(|&&n| rrg.nodes[n].kind == NodeKind::WireZ)
                    .count();
                assert!(wz >= span, "net spans {span} tiers but uses {wz} TSVs");
            }
        }
    }
    pass(5, "router oracle, negotiation, tree validity, TSV bound");
}

/// Two sources, two sinks, two parallel capacity-1 wires; the cheaper
/// wire is everyone's first choice.
fn corridor_fixture() -> (Rrg, Vec<RouteNet>) {
    let mut nodes = Vec::new();
    let mut out: Vec<Vec<RrgEdge>> = Vec::new();
    let add = |nodes: &mut Vec<RrgNode>, out: &mut Vec<Vec<RrgEdge>>, kind, cap, cost| {
        nodes.push(RrgNode {
            kind,
            x: 0,
            y: 0,
            z: 0,
            track: 0,
            len: if matches!(kind, NodeKind::WireX) { 1 } else { 0 },
            capacity: cap,
            base_cost: cost,
            intrinsic_delay: 1e-10,
        });
        out.push(Vec::new());
        nodes.len() - 1
    };
    let src0 = add(&mut nodes, &mut out, NodeKind::Source, 1, 1.0);
    let src1 = add(&mut nodes, &mut out, NodeKind::Source, 1, 1.0);
    let op0 = add(&mut nodes, &mut out, NodeKind::Opin, 1, 1.0);
    let op1 = add(&mut nodes, &mut out, NodeKind::Opin, 1, 1.0);
    let wire_cheap = add(&mut nodes, &mut out, NodeKind::WireX, 1, 1.0);
    let wire_dear = add(&mut nodes, &mut out, NodeKind::WireX, 1, 2.0);
    let ip0 = add(&mut nodes, &mut out, NodeKind::Ipin, 1, 1.0);
    let ip1 = add(&mut nodes, &mut out, NodeKind::Ipin, 1, 1.0);
    let sk0 = add(&mut nodes, &mut out, NodeKind::Sink, 1, 1.0);
    let sk1 = add(&mut nodes, &mut out, NodeKind::Sink, 1, 1.0);
    let edge = |out: &mut Vec<Vec<RrgEdge>>, a: usize, b: usize| {
        out[a].push(RrgEdge { to: b, delay: 1e-11 });
    };
    edge(&mut out, src0, op0);
    edge(&mut out, src1, op1);
    for op in [op0, op1] {
        edge(&mut out, op, wire_cheap);
        edge(&mut out, op, wire_dear);
    }
    for w in [wire_cheap, wire_dear] {
        edge(&mut out, w, ip0);
        edge(&mut out, w, ip1);
    }
    edge(&mut out, ip0, sk0);
    edge(&mut out, ip1, sk1);

    let mut site_pins = HashMap::new();
    site_pins.insert(
        (0, 0, 0),
        SitePins { source: src0, sink: sk0, opins: vec![op0], ipins: vec![ip0] },
    );
    site_pins.insert(
        (1, 0, 0),
        SitePins { source: src1, sink: sk1, opins: vec![op1], ipins: vec![ip1] },
    );
    let rrg = Rrg { nodes, out, width: 2, site_pins };
    let nets = vec![
        RouteNet { id: 0, name: "a".into(), source: (0, 0, 0), sinks: vec![(0, 0, 0)] },
        RouteNet { id: 1, name: "b".into(), source: (1, 0, 0), sinks: vec![(1, 0, 0)] },
    ];
    (rrg, nets)
}

// ---------------------------------------------------------------- 6

#[test]
fn criterion_06_wmin_search() {
    let mut r = rng(606);
    let cfg = RouteConfig::default();
    for case in 0..10 {
        let tiers = 1 + case % 2;
        let g = r.gen_range(3..=4usize);
        let arch = test_arch(tiers, g, g);
        let n_nets = r.gen_range(6..=14usize);
        let mut used = Vec::new();
        let nets: Vec<RouteNet> = (0..n_nets)
            .map(|id| {
                let mut src = random_clb(&mut r, g, g, tiers);
                while used.iter().filter(|&&s| s == src).count() >= 2 {
                    src = random_clb(&mut r, g, g, tiers);
                }
                used.push(src);
                let mut dst = src;
                while dst == src {
                    dst = random_clb(&mut r, g, g, tiers);
                }
                RouteNet { id, name: format!("n{id}"), source: src, sinks: vec![dst] }
            })
            .collect();
        let res = match find_wmin(&arch, &nets, &[], &cfg) {
            Ok(res) => res,
            Err(_) => continue, // instance unroutable even at max width
        };
        let w = res.width;
        let probe = |pw: usize| {
            let rrg = build_rrg(&arch, pw).unwrap();
            route_nets(&rrg, &nets, &[], &cfg).is_ok()
        };
        assert!(probe(w), "case {case}: success at wmin {w} not reproducible");
        assert!(probe(w + 2), "case {case}: failure at wmin+2");
        if w > 2 {
            assert!(!probe(w - 2), "case {case}: wmin {w} not minimal");
        }
    }
    pass(6, "minimum channel width bracketed by probes");
}

// ---------------------------------------------------------------- 7

/// Exhaustive path enumeration oracle for pure-combinational packed
/// netlists: recursively follow every connection from every launch.
fn oracle_cpd(bn: &BlockNetlist, delays: &[Vec<f64>], d: &DelayModel) -> f64 {
    let mut out_net = vec![usize::MAX; bn.blocks.len()];
    for net in &bn.nets {
        out_net[net.driver.block] = net.id;
    }
    fn downstream(
        bn: &BlockNetlist,
        delays: &[Vec<f64>],
        d: &DelayModel,
        out_net: &[usize],
        net: usize,
    ) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for (si, sink) in bn.nets[net].sinks.iter().enumerate() {
            let t = delays[net][si];
            let tail = match bn.blocks[sink.block].kind {
                BlockKind::PadOut => 0.0,
                BlockKind::Clb => {
                    if out_net[sink.block] == usize::MAX {
                        continue;
                    }
                    d.t_lut + downstream(bn, delays, d, out_net, out_net[sink.block])
                }
                BlockKind::PadIn => continue,
            };
            if tail > f64::NEG_INFINITY && t + tail > best {
                best = t + tail;
            }
        }
        best
    }
    let mut cpd = 0.0f64;
    for net in &bn.nets {
        if bn.blocks[net.driver.block].kind == BlockKind::PadIn {
            let t = downstream(bn, delays, d, &out_net, net.id);
            if t.is_finite() {
                cpd = cpd.max(t);
            }
        }
    }
    cpd
}

#[test]
fn criterion_07_sta_oracle() {
    let mut r = rng(707);
    let d = test_arch(1, 4, 4).delays;
    for case in 0..50 {
        let bn = packed(7000 + case, r.gen_range(4..=15usize));
        let delays: Vec<Vec<f64>> = bn
            .nets
            .iter()
            .map(|n| (0..n.sinks.len()).map(|_| r.gen_range(0.0..1e-9)).collect())
            .collect();
        let rep = analyze(&bn, &delays, &d).unwrap();
        let want = oracle_cpd(&bn, &delays, &d);
        assert!(
            (rep.critical_path_delay - want).abs() < 1e-12,
            "case {case}: {0} vs oracle {want}",
            rep.critical_path_delay
        );
        // Slack/criticality invariants.
        let mut max_crit = 0.0f64;
        for row in &rep.criticality {
            for &c in row {
                assert!((0.0..=1.0).contains(&c));
                max_crit = max_crit.max(c);
            }
        }
        if rep.critical_path_delay > 0.0 {
            assert!((max_crit - 1.0).abs() < 1e-9);
        }
    }

    // The canonical 3-LUT chain at t_lut = 0.3 ns and zero net delay.
    let blif = "\
.model chain3
.inputs a
.outputs y
.names a b
1 1
.names b c
1 1
.names c y
1 1
.end
";
    let nl = parse_blif(blif, 6).unwrap();
    let bn = pack_blocks(&nl, 1);
    let mut dm = d;
    dm.t_lut = 0.3e-9;
    let zeros: Vec<Vec<f64>> = bn.nets.iter().map(|n| vec![0.0; n.sinks.len()]).collect();
    let rep = analyze(&bn, &zeros, &dm).unwrap();
    assert!((rep.critical_path_delay - 0.9e-9).abs() < 1e-12);
    pass(7, "critical path equals exhaustive enumeration");
}

// ---------------------------------------------------------------- 8

#[test]
fn criterion_08_formula_fidelity() {
    // Planar special case: one tier reduces to X + Y.
    let a1 = test_arch(1, 8, 8);
    assert_eq!(a1.dmax(), 16.0);
    // Multi-tier: (X + Y) + (n - 1) * h, with h = 20 um at 0.1 units/um.
    let a3 = test_arch(3, 8, 8);
    assert_eq!(a3.dmax(), 16.0 + 2.0 * 2.0);
    let a2 = test_arch(2, 10, 6);
    assert_eq!(a2.dmax(), 16.0 + 2.0);

    // Switch counts: 1.5 W for 2D, 2.5 W for 3D, round-half-up.
    assert_eq!(sb_switch_count(24, false), 36);
    assert_eq!(sb_switch_count(10, false), 15);
    assert_eq!(sb_switch_count(7, false), 11); // 10.5 rounds up
    assert_eq!(sb_switch_count(24, true), 60);
    assert_eq!(sb_switch_count(10, true), 25);
    assert_eq!(sb_switch_count(7, true), 18); // 17.5 rounds up

    // TSV RC: 0.35 ohm x 3 fF.
    let tsv = test_arch(2, 4, 4).tsv;
    assert!((tsv_rc_delay(&tsv) - 1.05e-15).abs() < 1e-27);
    pass(8, "distance, switch-count, and TSV formulas");
}

// ---------------------------------------------------------------- 9

struct TrendRun {
    wmin: usize,
    cpd: f64,
}

fn trend_flow(bn: &BlockNetlist, tiers: usize, grid: usize, seed: u64) -> TrendRun {
    let arch = test_arch(tiers, grid, grid);
    let graph = build_graph(bn);
    let p = anneal_partition(&graph, tiers, &SaConfig::with_seed(seed));
    let mut pcfg = SaConfig::with_seed(seed.wrapping_add(1));
    pcfg.moves_per_temperature = Some(2000);
    let pl = anneal_placement_observed(bn, &p, &arch, &pcfg, &mut |_, _| {}).unwrap();
    let est = hpwl_delays(bn, &pl, &arch);
    let pre = analyze(bn, &est, &arch.delays).unwrap();
    let nets = fpga3d::route::nets_for_routing(bn, &pl);
    let res = find_wmin(&arch, &nets, &pre.criticality, &RouteConfig::default()).unwrap();
    let rep = analyze(bn, &res.net_delays(), &arch.delays).unwrap();
    TrendRun {
        wmin: res.width,
        cpd: rep.critical_path_delay,
    }
}

#[test]
fn criterion_09_tier_trend() {
    let sizes = [48usize, 56, 64, 80, 96, 112, 128, 150];
    let mut wins = 0usize;
    let mut cpd1 = Vec::new();
    let mut cpd2 = Vec::new();
    for (i, &n_luts) in sizes.iter().enumerate() {
        let bn = packed(9000 + i as u64, n_luts);
        let clbs = bn
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Clb)
            .count();
        let g1 = (clbs as f64).sqrt().ceil() as usize + 1;
        let g2 = ((clbs as f64 / 2.0).sqrt().ceil() as usize + 1).max(4);
        let one = trend_flow(&bn, 1, g1, 17);
        let two = trend_flow(&bn, 2, g2, 17);
        if two.wmin <= one.wmin {
            wins += 1;
        }
        cpd1.push(one.cpd);
        cpd2.push(two.cpd);
        // Reported, not thresholded: area at equal per-tier grid.
        let t1 = transistor_count(&test_arch(1, g1, g1), one.wmin);
        let t2_equal = transistor_count(&test_arch(2, g1, g1), one.wmin);
        let t2_small = transistor_count(&test_arch(2, g2, g2), two.wmin);
        println!(
            "trend {i}: luts={n_luts} w1={} w2={} cpd1={:.3}ns cpd2={:.3}ns t1={t1} t2(equal grid)={t2_equal} t2(reduced)={t2_small}",
            one.wmin, two.wmin, one.cpd * 1e9, two.cpd * 1e9
        );
        assert!(t2_equal >= t1, "equal-grid 2-tier area must not shrink");
    }
    assert!(wins * 10 >= sizes.len() * 7, "2-tier wmin wins only {wins}/8");
    let m1: f64 = cpd1.iter().sum::<f64>() / cpd1.len() as f64;
    let m2: f64 = cpd2.iter().sum::<f64>() / cpd2.len() as f64;
    assert!(m2 <= m1, "mean CPD 2-tier {m2} > 1-tier {m1}");
    pass(9, "two-tier wmin/CPD trend");
}

// ---------------------------------------------------------------- 10

#[test]
fn criterion_10_flow_determinism() {
    let arch = concat!(env!("CARGO_MANIFEST_DIR"), "/../../arch/reference.toml");
    let fixtures = [
        (".model f1\n.inputs a b\n.outputs y\n.names a b y\n11 1\n.end\n", 1usize),
        (
            ".model f2\n.inputs a b clk\n.outputs y\n.names a b c\n11 1\n.latch c q re clk 0\n.names q y\n1 1\n.end\n",
            2,
        ),
        (
            ".model f3\n.inputs a b c\n.outputs y z\n.names a b m\n11 1\n.names m c y\n11 1\n.names m z\n1 1\n.end\n",
            2,
        ),
    ];
    for (i, (blif, tiers)) in fixtures.iter().enumerate() {
        let dir = tempfile::tempdir().unwrap();
        let bpath = dir.path().join("c.blif");
        std::fs::write(&bpath, blif).unwrap();
        let mut artifacts: Vec<HashMap<String, Vec<u8>>> = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("out{run}"));
            let mut cfg = FlowConfig::new(arch, &bpath, &out);
            cfg.tiers = Some(*tiers);
            cfg.seed = 42 + i as u64;
            run_flow(&cfg).unwrap();
            let mut files = HashMap::new();
            for entry in std::fs::read_dir(&out).unwrap() {
                let e = entry.unwrap();
                files.insert(
                    e.file_name().to_string_lossy().into_owned(),
                    std::fs::read(e.path()).unwrap(),
                );
            }
            artifacts.push(files);
        }
        assert_eq!(artifacts[0].len(), 7, "fixture {i}: artifact count");
        assert_eq!(artifacts[0], artifacts[1], "fixture {i} not deterministic");
    }
    pass(10, "byte-identical artifacts across reruns");
}

// ---------------------------------------------------------------- 11

#[test]
fn criterion_11_3d_sb_density() {
    for gx in 6..=20 {
        for gy in 6..=20 {
            let arch = test_arch(2, gx, gy);
            let total = (gx + 1) * (gy + 1);
            let hits = (0..=gx)
                .flat_map(|x| (0..=gy).map(move |y| (x, y)))
                .filter(|&(x, y)| arch.is_3d_sb(x, y).unwrap())
                .count();
            let frac = hits as f64 / total as f64;
            assert!(
                (0.30..=0.37).contains(&frac),
                "grid {gx}x{gy}: 3D-SB fraction {frac}"
            );
        }
    }
    pass(11, "3D switch-box density near one third");
}
