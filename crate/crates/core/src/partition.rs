//! Balanced n-way tier partitioning by simulated annealing.
//!
//! The cost is the cut size: total multiplicity of edges whose endpoints
//! lie on different tiers, the proxy for required TSVs. Moves are pairwise
//! swaps of vertices on different tiers, so tier sizes never change. Gains
//! are maintained incrementally as per-vertex, per-tier edge multiplicities.

use crate::graph::CircuitGraph;
use crate::sa::{
    accept_move, cooling_alpha, AnnealReport, SaConfig, StallDetector, StopReason,
    TemperatureRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub tier_of: Vec<usize>,
    pub tier_sizes: Vec<usize>,
}

impl Partition {
    pub fn tiers(&self) -> usize {
        self.tier_sizes.len()
    }

    pub fn is_balanced(&self) -> bool {
        let max = *self.tier_sizes.iter().max().unwrap_or(&0);
        let min = *self.tier_sizes.iter().min().unwrap_or(&0);
        max - min <= 1
    }

    /// Line-oriented dump: header then `block_id tier` per vertex.
    pub fn dump(&self, cut: u64, seed: u64) -> String {
        let mut s = format!("# tiers {}\n# cut_size {}\n# seed {}\n", self.tiers(), cut, seed);
        for (v, &t) in self.tier_of.iter().enumerate() {
            s.push_str(&format!("{v} {t}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<(Partition, u64, u64), PartitionError> {
        let mut tiers = 0usize;
        let mut cut = 0u64;
        let mut seed = 0u64;
        let mut tier_of = Vec::new();
        for line in text.lines() {
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks.as_slice() {
                ["#", "tiers", v] => tiers = v.parse().map_err(|_| bad_dump())?,
                ["#", "cut_size", v] => cut = v.parse().map_err(|_| bad_dump())?,
                ["#", "seed", v] => seed = v.parse().map_err(|_| bad_dump())?,
                [id, t] => {
                    let id: usize = id.parse().map_err(|_| bad_dump())?;
                    let t: usize = t.parse().map_err(|_| bad_dump())?;
                    if id != tier_of.len() {
                        return Err(bad_dump());
                    }
                    tier_of.push(t);
                }
                [] => {}
                _ => return Err(bad_dump()),
            }
        }
        if tiers == 0 {
            return Err(bad_dump());
        }
        let mut tier_sizes = vec![0usize; tiers];
        for &t in &tier_of {
            if t >= tiers {
                return Err(bad_dump());
            }
            tier_sizes[t] += 1;
        }
        Ok((Partition { tier_of, tier_sizes }, cut, seed))
    }
}

fn bad_dump() -> PartitionError {
    PartitionError::MalformedDump
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PartitionError {
    #[error("graph has fewer vertices than tiers")]
    TooFewVertices,
    #[error("vertices are on the same tier")]
    SameTier,
    #[error("malformed partition dump")]
    MalformedDump,
}

/// Per-vertex edge multiplicities into every tier. External cost E_i,
/// internal cost I_i, and the gain D_i = E_i - I_i all derive from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GainTable {
    pub to_tier: Vec<Vec<i64>>,
}

impl GainTable {
    pub fn internal(&self, v: usize, p: &Partition) -> i64 {
        self.to_tier[v][p.tier_of[v]]
    }

    pub fn external(&self, v: usize, p: &Partition) -> i64 {
        self.to_tier[v].iter().sum::<i64>() - self.internal(v, p)
    }

    pub fn gain(&self, v: usize, p: &Partition) -> i64 {
        self.external(v, p) - self.internal(v, p)
    }

    /// Edge multiplicity from `v` into a specific tier.
    pub fn toward(&self, v: usize, tier: usize) -> i64 {
        self.to_tier[v][tier]
    }
}

/// Uniformly random assignment subject to the balance invariant; tier sizes
/// differ by at most one, deterministically given the seed.
#[allow(clippy::needless_range_loop)]
pub fn random_balanced_partition(
    graph: &CircuitGraph,
    n: usize,
    seed: u64,
) -> Result<Partition, PartitionError> {
    assert!(n >= 1);
    if graph.vertex_count < n {
        return Err(PartitionError::TooFewVertices);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..graph.vertex_count).collect();
    // Fisher-Yates.
    for i in (1..order.len()).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let base = graph.vertex_count / n;
    let extra = graph.vertex_count % n;
    let mut tier_of = vec![0usize; graph.vertex_count];
    let mut tier_sizes = vec![0usize; n];
    let mut idx = 0;
    for tier in 0..n {
        let size = base + usize::from(tier < extra);
        for _ in 0..size {
            tier_of[order[idx]] = tier;
            idx += 1;
        }
        tier_sizes[tier] = size;
    }
    Ok(Partition { tier_of, tier_sizes })
}

/// Build the gain table from scratch.
pub fn setup_gains(graph: &CircuitGraph, p: &Partition) -> GainTable {
    let n = p.tiers();
    let mut to_tier = vec![vec![0i64; n]; graph.vertex_count];
    for &(u, v, m) in &graph.edges {
        to_tier[u][p.tier_of[v]] += m as i64;
        to_tier[v][p.tier_of[u]] += m as i64;
    }
    GainTable { to_tier }
}

/// Total multiplicity of cross-tier edges.
pub fn cut_size(graph: &CircuitGraph, p: &Partition) -> u64 {
    graph
        .edges
        .iter()
        .filter(|&&(u, v, _)| p.tier_of[u] != p.tier_of[v])
        .map(|&(_, _, m)| m as u64)
        .sum()
}

/// Cut-size change of swapping `v_i` and `v_j` (which must sit on
/// different tiers), without applying it.
///
/// For a bipartition this is exactly
/// `(I_i + I_j) - (E_i + E_j) + 2*C_ij`; for n > 2 the external terms are
/// restricted to edges into the partner's tier, which keeps the value equal
/// to the full recompute difference.
pub fn swap_delta_cost(
    graph: &CircuitGraph,
    gains: &GainTable,
    p: &Partition,
    v_i: usize,
    v_j: usize,
) -> Result<i64, PartitionError> {
    let ti = p.tier_of[v_i];
    let tj = p.tier_of[v_j];
    if ti == tj {
        return Err(PartitionError::SameTier);
    }
    let c_ij = graph.multiplicity(v_i, v_j) as i64;
    let i_i = gains.internal(v_i, p);
    let i_j = gains.internal(v_j, p);
    let e_i = gains.toward(v_i, tj);
    let e_j = gains.toward(v_j, ti);
    Ok((i_i + i_j) - (e_i + e_j) + 2 * c_ij)
}

/// Exchange the tiers of an accepted swap and update the gain table
/// incrementally. Tier sizes are untouched.
pub fn apply_swap(
    graph: &CircuitGraph,
    p: &mut Partition,
    gains: &mut GainTable,
    v_i: usize,
    v_j: usize,
) {
    let ti = p.tier_of[v_i];
    let tj = p.tier_of[v_j];
    debug_assert_ne!(ti, tj);
    for &(u, m) in &graph.adjacency[v_i] {
        gains.to_tier[u][ti] -= m as i64;
        gains.to_tier[u][tj] += m as i64;
    }
    for &(u, m) in &graph.adjacency[v_j] {
        gains.to_tier[u][tj] -= m as i64;
        gains.to_tier[u][ti] += m as i64;
    }
    p.tier_of[v_i] = tj;
    p.tier_of[v_j] = ti;
}

/// The annealing loop: per temperature, N candidate pairwise swaps; downhill
/// moves always accepted, uphill with probability exp(-delta/T); geometric
/// cooling with the adaptive alpha; stops at T <= T_min or on stall.
/// Returns the best (lowest-cut) partition observed.
pub fn anneal_partition(graph: &CircuitGraph, n: usize, cfg: &SaConfig) -> Partition {
    anneal_partition_with_report(graph, n, cfg).0
}

pub fn anneal_partition_with_report(
    graph: &CircuitGraph,
    n: usize,
    cfg: &SaConfig,
) -> (Partition, AnnealReport) {
    assert!(graph.vertex_count >= 2 * n, "need at least 2 vertices per tier");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut p = random_balanced_partition(graph, n, rng.gen()).expect("sized above");
    let mut gains = setup_gains(graph, &p);
    let mut cost = cut_size(graph, &p) as i64;
    let t0 = cost as f64;
    let mut best = p.clone();
    let mut best_cost = cost;
    let mut report = AnnealReport {
        t0,
        t_min: cfg.t_min,
        temperatures: Vec::new(),
        stop: StopReason::ZeroInitialCost,
        best_cost: cost as f64,
    };
    if cost == 0 {
        return (p, report);
    }

    // Per-tier member lists for O(1) vertex selection.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut pos = vec![0usize; graph.vertex_count];
    for (v, &t) in p.tier_of.iter().enumerate() {
        pos[v] = members[t].len();
        members[t].push(v);
    }

    let moves = cfg.moves_for(graph.vertex_count);
    let mut stall = StallDetector::new(cfg, moves);
    let mut temperature = t0;
    let mut stop = StopReason::TemperatureFloor;

    'outer: while temperature > cfg.t_min {
        let mut first_improving: Option<f64> = None;
        let mut last_improving: Option<f64> = None;
        let mut accepted = 0usize;
        for _ in 0..moves {
            // V_Selection: two distinct uniform tiers, one uniform vertex each.
            let ta = rng.gen_range(0..n);
            let tb = {
                let t = rng.gen_range(0..n - 1);
                if t >= ta {
                    t + 1
                } else {
                    t
                }
            };
            let v_i = members[ta][rng.gen_range(0..members[ta].len())];
            let v_j = members[tb][rng.gen_range(0..members[tb].len())];
            let delta = swap_delta_cost(graph, &gains, &p, v_i, v_j).expect("distinct tiers");
            let r: f64 = rng.gen();
            let take = accept_move(delta as f64, temperature, r);
            if take {
                apply_swap(graph, &mut p, &mut gains, v_i, v_j);
                members[ta][pos[v_i]] = v_j;
                members[tb][pos[v_j]] = v_i;
                pos.swap(v_i, v_j);
                cost += delta;
                accepted += 1;
                if delta < 0 {
                    let c = cost as f64;
                    if first_improving.is_none() {
                        first_improving = Some(c);
                    }
                    last_improving = Some(c);
                }
                if cost < best_cost {
                    best_cost = cost;
                    best = p.clone();
                }
            }
            if stall.record_move(take) {
                stop = StopReason::StallRejections;
                report.temperatures.push(TemperatureRecord {
                    temperature,
                    alpha: f64::NAN,
                    accepted,
                    attempted: moves,
                });
                break 'outer;
            }
        }
        let alpha = cooling_alpha(cfg, first_improving, last_improving);
        report.temperatures.push(TemperatureRecord {
            temperature,
            alpha,
            accepted,
            attempted: moves,
        });
        if stall.record_temperature(best_cost as f64) {
            stop = StopReason::StallTemperatures;
            break;
        }
        temperature *= alpha;
    }

    report.stop = stop;
    report.best_cost = best_cost as f64;
    (best, report)
}
