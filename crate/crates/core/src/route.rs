//! Negotiated-congestion router over the 3D routing-resource graph.
//!
//! Classic iterated scheme: every net is routed by Dijkstra search with a
//! per-node cost `crit * delay + (1 - crit) * base * hist * present`; the
//! first iteration ignores congestion entirely, later iterations raise the
//! present-sharing penalty geometrically and accumulate a history penalty on
//! every node that stays overused, until no node exceeds its capacity.
//! By default only nets touching an overused node are ripped up and
//! rerouted each iteration.

use crate::pack::BlockNetlist;
use crate::place::Placement;
use crate::rrg::{NodeKind, Rrg, RrgError};
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct RouteConfig {
    pub max_iterations: usize,
    pub pres_fac_init: f64,
    pub pres_fac_mult: f64,
    /// Rip up and reroute every net each iteration instead of only the
    /// nets that touch an overused node.
    pub full_rip_up: bool,
}

impl Default for RouteConfig {
    fn default() -> Self {
        RouteConfig {
            max_iterations: 50,
            pres_fac_init: 0.5,
            pres_fac_mult: 1.8,
            full_rip_up: false,
        }
    }
}

/// One net's routing problem in placement coordinates.
#[derive(Debug, Clone)]
pub struct RouteNet {
    pub id: usize,
    pub name: String,
    pub source: (usize, usize, usize),
    pub sinks: Vec<(usize, usize, usize)>,
}

/// Derive routing problems from the packed netlist and a placement.
pub fn nets_for_routing(bn: &BlockNetlist, placement: &Placement) -> Vec<RouteNet> {
    bn.nets
        .iter()
        .map(|net| RouteNet {
            id: net.id,
            name: net.name.clone(),
            source: placement.loc[net.driver.block],
            sinks: net.sinks.iter().map(|s| placement.loc[s.block]).collect(),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RoutedConnection {
    /// Node ids from a tree node (source on the first connection) to the
    /// target sink node, inclusive.
    pub path: Vec<usize>,
    /// Source-to-sink delay in seconds.
    pub delay: f64,
}

#[derive(Debug, Clone)]
pub struct RoutedNet {
    pub id: usize,
    pub name: String,
    pub connections: Vec<RoutedConnection>,
}

impl RoutedNet {
    /// Distinct RRG nodes used by this net.
    pub fn used_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .connections
            .iter()
            .flat_map(|c| c.path.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone)]
pub struct RouteResult {
    pub width: usize,
    pub iterations: usize,
    pub nets: Vec<RoutedNet>,
    /// Total planar wirelength in grid units.
    pub wirelength: usize,
    /// TSV tracks actually used.
    pub tsvs_used: usize,
}

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("unroutable at width {width}: {overused} nodes still overused after {iterations} iterations")]
    Unroutable {
        width: usize,
        overused: usize,
        iterations: usize,
    },
    #[error("no path from net {net} source to sink {sink}")]
    Disconnected { net: usize, sink: usize },
    #[error(transparent)]
    Rrg(#[from] RrgError),
}

/// Per-connection timing criticalities, indexed like `nets[i].sinks`.
/// An empty outer slice means "all zero" (pure congestion routing).
pub type Criticalities<'a> = &'a [Vec<f64>];

struct Searcher {
    dist: Vec<f64>,
    delay: Vec<f64>,
    prev: Vec<usize>,
    stamp: Vec<u32>,
    gen: u32,
}

impl Searcher {
    fn new(n: usize) -> Self {
        Searcher {
            dist: vec![0.0; n],
            delay: vec![0.0; n],
            prev: vec![usize::MAX; n],
            stamp: vec![0; n],
            gen: 0,
        }
    }
}

#[derive(PartialEq)]
struct HeapKey(f64, usize);
impl Eq for HeapKey {}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Route all nets at the RRG's channel width.
pub fn route_nets(
    rrg: &Rrg,
    nets: &[RouteNet],
    crit: Criticalities,
    cfg: &RouteConfig,
) -> Result<RouteResult, RouteError> {
    let n = rrg.node_count();
    let mut occ = vec![0usize; n];
    let mut hist = vec![1.0f64; n];
    let mut routed: Vec<Option<RoutedNet>> = vec![None; nets.len()];
    let mut search = Searcher::new(n);
    let mut pres_fac = 0.0; // congestion-free first iteration
    let mut last_overused = 0;
    let mut iterations = 0;

    for iter in 1..=cfg.max_iterations {
        iterations = iter;
        for (i, net) in nets.iter().enumerate() {
            let needs_route = match &routed[i] {
                None => true,
                Some(r) => {
                    cfg.full_rip_up
                        || r.used_nodes()
                            .iter()
                            .any(|&nd| occ[nd] > rrg.nodes[nd].capacity)
                }
            };
            if !needs_route {
                continue;
            }
            if let Some(old) = routed[i].take() {
                for nd in old.used_nodes() {
                    occ[nd] -= 1;
                }
            }
            let crits = crit.get(i).map(|v| v.as_slice()).unwrap_or(&[]);
            let r = route_one(rrg, net, crits, &occ, &hist, pres_fac, &mut search)?;
            for nd in r.used_nodes() {
                occ[nd] += 1;
            }
            routed[i] = Some(r);
        }
        let overused = (0..n).filter(|&nd| occ[nd] > rrg.nodes[nd].capacity).count();
        last_overused = overused;
        if overused == 0 {
            break;
        }
        for nd in 0..n {
            if occ[nd] > rrg.nodes[nd].capacity {
                hist[nd] += (occ[nd] - rrg.nodes[nd].capacity) as f64;
            }
        }
        pres_fac = if iter == 1 {
            cfg.pres_fac_init
        } else {
            pres_fac * cfg.pres_fac_mult
        };
    }

    if last_overused > 0 {
        return Err(RouteError::Unroutable {
            width: rrg.width,
            overused: last_overused,
            iterations,
        });
    }

    let nets_out: Vec<RoutedNet> = routed.into_iter().map(|r| r.unwrap()).collect();
    let mut wirelength = 0;
    let mut tsvs_used = 0;
    for net in &nets_out {
        for &nd in &net.used_nodes() {
            match rrg.nodes[nd].kind {
                NodeKind::WireX | NodeKind::WireY => wirelength += rrg.nodes[nd].len,
                NodeKind::WireZ => tsvs_used += 1,
                _ => {}
            }
        }
    }
    Ok(RouteResult {
        width: rrg.width,
        iterations,
        nets: nets_out,
        wirelength,
        tsvs_used,
    })
}

/// Route one net: connections in sink order, each Dijkstra search seeded
/// with the net's partial routing tree at zero cost.
fn route_one(
    rrg: &Rrg,
    net: &RouteNet,
    crits: &[f64],
    occ: &[usize],
    hist: &[f64],
    pres_fac: f64,
    s: &mut Searcher,
) -> Result<RoutedNet, RouteError> {
    let src = rrg.pins(net.source.0, net.source.1, net.source.2).source;
    // Net tree: node -> delay from source.
    let mut tree: Vec<(usize, f64)> = vec![(src, rrg.nodes[src].intrinsic_delay)];
    let mut connections = Vec::with_capacity(net.sinks.len());

    for (si, &(sx, sy, sz)) in net.sinks.iter().enumerate() {
        let target = rrg.pins(sx, sy, sz).sink;
        // Cap below 1.0 so every connection keeps a congestion term and
        // can be pushed off overused nodes.
        let crit = crits.get(si).copied().unwrap_or(0.0).clamp(0.0, 0.99);
        s.gen += 1;
        let mut heap = BinaryHeap::new();
        for &(nd, dly) in &tree {
            s.stamp[nd] = s.gen;
            s.dist[nd] = 0.0;
            s.delay[nd] = dly;
            s.prev[nd] = usize::MAX;
            heap.push(Reverse(HeapKey(0.0, nd)));
        }
        let mut found = false;
        while let Some(Reverse(HeapKey(cost, u))) = heap.pop() {
            if s.stamp[u] != s.gen || cost > s.dist[u] {
                continue;
            }
            if u == target {
                found = true;
                break;
            }
            for e in &rrg.out[u] {
                let v = e.to;
                let node = &rrg.nodes[v];
                // Sinks other than the target are dead ends.
                if node.kind == NodeKind::Sink && v != target {
                    continue;
                }
                let over = (occ[v] + 1).saturating_sub(node.capacity) as f64;
                let present = 1.0 + over * pres_fac;
                let cong = node.base_cost * hist[v] * present;
                let dly = e.delay + node.intrinsic_delay;
                let step = crit * dly + (1.0 - crit) * cong;
                let nd = cost + step;
                if s.stamp[v] != s.gen || nd < s.dist[v] {
                    s.stamp[v] = s.gen;
                    s.dist[v] = nd;
                    s.delay[v] = s.delay[u] + dly;
                    s.prev[v] = u;
                    heap.push(Reverse(HeapKey(nd, v)));
                }
            }
        }
        if !found {
            return Err(RouteError::Disconnected {
                net: net.id,
                sink: si,
            });
        }
        // Trace back to the tree and extend it.
        let mut path = vec![target];
        let mut u = target;
        while s.prev[u] != usize::MAX {
            u = s.prev[u];
            path.push(u);
        }
        path.reverse();
        for &nd in path.iter().skip(1) {
            // Sinks and ipins terminate branches; don't seed future
            // searches from them.
            if !matches!(rrg.nodes[nd].kind, NodeKind::Sink | NodeKind::Ipin) {
                tree.push((nd, s.delay[nd]));
            }
        }
        connections.push(RoutedConnection {
            path,
            delay: s.delay[target],
        });
    }
    Ok(RoutedNet {
        id: net.id,
        name: net.name.clone(),
        connections,
    })
}

pub const W_MAX: usize = 128;

/// Route at a fixed width when given, otherwise search for the minimum.
pub fn build_route(
    arch: &crate::arch::Arch3D,
    nets: &[RouteNet],
    crit: Criticalities,
    cfg: &RouteConfig,
    width: Option<usize>,
) -> Result<RouteResult, RouteError> {
    match width {
        Some(w) => {
            let rrg = crate::rrg::build_rrg(arch, w)?;
            route_nets(&rrg, nets, crit, cfg)
        }
        None => find_wmin(arch, nets, crit, cfg),
    }
}

/// Smallest even channel width that routes successfully, by binary search
/// over even widths in [2, W_MAX].
pub fn find_wmin(
    arch: &crate::arch::Arch3D,
    nets: &[RouteNet],
    crit: Criticalities,
    cfg: &RouteConfig,
) -> Result<RouteResult, RouteError> {
    let try_w = |w: usize| -> Result<RouteResult, RouteError> {
        let rrg = crate::rrg::build_rrg(arch, w)?;
        route_nets(&rrg, nets, crit, cfg)
    };
    let mut best = try_w(W_MAX)?;
    // Invariant: lo unroutable (0 = sentinel), hi routable.
    let (mut lo, mut hi) = (0usize, W_MAX);
    while hi - lo > 2 {
        let mid = ((lo + hi) / 2 + 1) & !1; // even midpoint
        match try_w(mid) {
            Ok(r) => {
                hi = mid;
                best = r;
            }
            Err(_) => lo = mid,
        }
    }
    Ok(best)
}

impl RouteResult {
    /// Text dump: header lines then, per net, one line per connection with
    /// its delay and the node path as kind@(x,y,z):track descriptors.
    pub fn dump(&self, rrg: &Rrg) -> String {
        let mut s = String::new();
        s.push_str(&format!("width {}\n", self.width));
        s.push_str(&format!("iterations {}\n", self.iterations));
        s.push_str("overused 0\n");
        s.push_str(&format!("wirelength {}\n", self.wirelength));
        s.push_str(&format!("tsvs {}\n", self.tsvs_used));
        for net in &self.nets {
            s.push_str(&format!("net {} {}\n", net.id, net.name));
            for (i, c) in net.connections.iter().enumerate() {
                s.push_str(&format!("  conn {} {:.6e} :", i, c.delay));
                for &nd in &c.path {
                    let n = &rrg.nodes[nd];
                    s.push_str(&format!(
                        " {}@({},{},{}):{}",
                        n.kind.as_str(),
                        n.x,
                        n.y,
                        n.z,
                        n.track
                    ));
                }
                s.push('\n');
            }
        }
        s
    }

    /// Per-net per-sink delays, indexed by net id.
    pub fn net_delays(&self) -> Vec<Vec<f64>> {
        let max_id = self.nets.iter().map(|n| n.id).max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); max_id];
        for net in &self.nets {
            out[net.id] = net.connections.iter().map(|c| c.delay).collect();
        }
        out
    }
}

/// Header values and per-net per-sink delays recovered from a routing
/// dump, for staged flows.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteDump {
    pub width: usize,
    pub iterations: usize,
    pub wirelength: usize,
    pub tsvs_used: usize,
    pub net_delays: Vec<Vec<f64>>,
}

pub fn parse_dump(text: &str) -> Result<RouteDump, String> {
    let mut width = None;
    let mut iterations = 0;
    let mut wirelength = 0;
    let mut tsvs_used = 0;
    let mut nets: Vec<Vec<f64>> = Vec::new();
    let mut cur: Option<usize> = None;
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix("width ") {
            width = Some(rest.parse::<usize>().map_err(|e| e.to_string())?);
        } else if let Some(rest) = t.strip_prefix("iterations ") {
            iterations = rest.parse::<usize>().map_err(|e| e.to_string())?;
        } else if let Some(rest) = t.strip_prefix("wirelength ") {
            wirelength = rest.parse::<usize>().map_err(|e| e.to_string())?;
        } else if let Some(rest) = t.strip_prefix("tsvs ") {
            tsvs_used = rest.parse::<usize>().map_err(|e| e.to_string())?;
        } else if let Some(rest) = t.strip_prefix("net ") {
            let id: usize = rest
                .split_whitespace()
                .next()
                .ok_or("malformed net line")?
                .parse()
                .map_err(|e: std::num::ParseIntError| e.to_string())?;
            if nets.len() <= id {
                nets.resize(id + 1, Vec::new());
            }
            cur = Some(id);
        } else if let Some(rest) = t.strip_prefix("conn ") {
            let id = cur.ok_or("conn line before net line")?;
            let mut parts = rest.split_whitespace();
            let _idx = parts.next();
            let delay: f64 = parts
                .next()
                .ok_or("malformed conn line")?
                .parse()
                .map_err(|e: std::num::ParseFloatError| e.to_string())?;
            nets[id].push(delay);
        }
    }
    Ok(RouteDump {
        width: width.ok_or("missing width header")?,
        iterations,
        wirelength,
        tsvs_used,
        net_delays: nets,
    })
}
