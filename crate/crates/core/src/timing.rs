//! Static timing analysis over the packed netlist.
//!
//! The graph lives on nets (signals). A net launches at time 0 from an
//! input pad or at the clock-to-Q delay from a latch output; a net driven
//! by a combinational LUT arrives at the worst input arrival plus the LUT
//! delay. Paths are captured at output pads (no extra delay) and at latch
//! inputs (plus the setup time, plus the LUT delay when the latch sits
//! behind a LUT in the same block). Per-connection net delays come either
//! from the router or from the pre-route wirelength estimate.

use crate::arch::{Arch3D, DelayModel};
use crate::pack::{BlockKind, BlockNetlist, Primitive};
use crate::place::{net_hpwl3d, Placement};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TimingError {
    #[error("combinational loop through: {}", .0.join(" -> "))]
    CombinationalLoop(Vec<String>),
    #[error("net {net} has {got} delays for {want} sinks")]
    DelayShape { net: usize, got: usize, want: usize },
}

#[derive(Debug, Clone)]
pub struct TimingReport {
    /// Critical path delay in seconds; 0.0 when there are no paths.
    pub critical_path_delay: f64,
    /// Signal names along one critical path, launch to capture.
    pub critical_path: Vec<String>,
    /// Per-net per-sink criticality in [0, 1], indexed like `nets`.
    pub criticality: Vec<Vec<f64>>,
    /// Per-net arrival time at the driver output.
    pub arrival: Vec<f64>,
}

/// How a block terminates or propagates a combinational path.
#[derive(Clone, Copy, PartialEq)]
enum BlockTiming {
    /// Output pad: capture with no extra delay.
    Capture,
    /// Latch input reached directly: capture after setup.
    CaptureSetup,
    /// Latch behind a LUT: capture after LUT delay plus setup.
    CaptureLutSetup,
    /// Pure LUT: propagate with the LUT delay.
    Lut,
    /// Input pad: launches, no inputs.
    Launch,
}

fn classify(bn: &BlockNetlist, block: usize) -> BlockTiming {
    let b = &bn.blocks[block];
    match b.kind {
        BlockKind::PadIn => BlockTiming::Launch,
        BlockKind::PadOut => BlockTiming::Capture,
        BlockKind::Clb => {
            let has_lut = b.primitives.iter().any(|p| matches!(p, Primitive::Lut { .. }));
            let has_latch = b
                .primitives
                .iter()
                .any(|p| matches!(p, Primitive::Latch { .. }));
            match (has_lut, has_latch) {
                (true, true) => BlockTiming::CaptureLutSetup,
                (false, true) => BlockTiming::CaptureSetup,
                _ => BlockTiming::Lut,
            }
        }
    }
}

/// Pre-route per-connection delay estimate: the net's 3D half-perimeter
/// wirelength (grid units) times the unit-segment delay.
pub fn hpwl_delays(bn: &BlockNetlist, placement: &Placement, arch: &Arch3D) -> Vec<Vec<f64>> {
    bn.nets
        .iter()
        .map(|net| {
            let wl = net_hpwl3d(net, placement, arch);
            vec![wl * arch.delays.t_seg1; net.sinks.len()]
        })
        .collect()
}

/// Run STA. `net_delays` is indexed like `bn.nets`, one delay per sink.
pub fn analyze(
    bn: &BlockNetlist,
    net_delays: &[Vec<f64>],
    d: &DelayModel,
) -> Result<TimingReport, TimingError> {
    let nn = bn.nets.len();
    for (i, net) in bn.nets.iter().enumerate() {
        let got = net_delays.get(i).map_or(0, |v| v.len());
        if got != net.sinks.len() {
            return Err(TimingError::DelayShape {
                net: i,
                got,
                want: net.sinks.len(),
            });
        }
    }

    let timing: Vec<BlockTiming> = (0..bn.blocks.len()).map(|b| classify(bn, b)).collect();
    // net id driven by each block (at most one output net per block here).
    let mut out_net = vec![usize::MAX; bn.blocks.len()];
    for net in &bn.nets {
        out_net[net.driver.block] = net.id;
    }

    // Combinational net-to-net edges: u -> v when u sinks on v's driver
    // block and that block propagates (pure LUT).
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nn];
    let mut indeg = vec![0usize; nn];
    for net in &bn.nets {
        for sink in &net.sinks {
            if timing[sink.block] == BlockTiming::Lut && out_net[sink.block] != usize::MAX {
                succ[net.id].push(out_net[sink.block]);
                indeg[out_net[sink.block]] += 1;
            }
        }
    }

    // Kahn's algorithm for topological order; leftovers form a loop.
    let mut order = Vec::with_capacity(nn);
    let mut queue: Vec<usize> = (0..nn).filter(|&i| indeg[i] == 0).collect();
    queue.reverse();
    while let Some(u) = queue.pop() {
        order.push(u);
        for &v in &succ[u] {
            indeg[v] -= 1;
            if indeg[v] == 0 {
                queue.push(v);
            }
        }
    }
    if order.len() != nn {
        let cycle: Vec<String> = (0..nn)
            .filter(|&i| indeg[i] > 0)
            .map(|i| bn.nets[i].name.clone())
            .collect();
        return Err(TimingError::CombinationalLoop(cycle));
    }

    // Incoming connections (net id, sink index) per block.
    let mut preds: Vec<Vec<(usize, usize)>> = vec![Vec::new(); bn.blocks.len()];
    for net in &bn.nets {
        for (si, sink) in net.sinks.iter().enumerate() {
            preds[sink.block].push((net.id, si));
        }
    }

    // Forward pass: arrival at each net's driver output, plus the incoming
    // connection realizing it (for path reconstruction).
    let mut arrival = vec![0.0f64; nn];
    let mut arr_from: Vec<Option<usize>> = vec![None; nn];
    for &v in &order {
        let drv = bn.nets[v].driver.block;
        arrival[v] = match timing[drv] {
            BlockTiming::Launch => 0.0,
            BlockTiming::CaptureSetup | BlockTiming::CaptureLutSetup => d.t_ff_clk_to_q,
            _ => 0.0,
        };
        if timing[drv] == BlockTiming::Lut {
            let mut best = 0.0f64;
            for &(u, si) in &preds[drv] {
                let a = arrival[u] + net_delays[u][si];
                if a > best {
                    best = a;
                    arr_from[v] = Some(u);
                }
            }
            arrival[v] = best + d.t_lut;
        }
    }

    // Worst downstream delay from each block's input pins to any capture
    // point, in reverse topological order of the driving nets.
    let mut down = vec![f64::NEG_INFINITY; bn.blocks.len()];
    for (b, t) in timing.iter().enumerate() {
        match t {
            BlockTiming::Capture => down[b] = 0.0,
            BlockTiming::CaptureSetup => down[b] = d.t_ff_setup,
            BlockTiming::CaptureLutSetup => down[b] = d.t_lut + d.t_ff_setup,
            _ => {}
        }
    }
    for &v in order.iter().rev() {
        let drv = bn.nets[v].driver.block;
        if timing[drv] != BlockTiming::Lut {
            continue;
        }
        let mut worst = f64::NEG_INFINITY;
        for (si, sink) in bn.nets[v].sinks.iter().enumerate() {
            let dw = down[sink.block];
            if dw.is_finite() {
                worst = worst.max(net_delays[v][si] + dw);
            }
        }
        if worst.is_finite() {
            down[drv] = down[drv].max(d.t_lut + worst);
        }
    }

    // Per-connection path delay through that connection; the max is the
    // critical path delay.
    let mut cpd = 0.0f64;
    let mut crit_conn: Option<(usize, usize)> = None;
    let mut conn_delay: Vec<Vec<f64>> = Vec::with_capacity(nn);
    for net in &bn.nets {
        let mut row = Vec::with_capacity(net.sinks.len());
        for (si, sink) in net.sinks.iter().enumerate() {
            let dw = down[sink.block];
            let total = if dw.is_finite() {
                arrival[net.id] + net_delays[net.id][si] + dw
            } else {
                f64::NEG_INFINITY
            };
            row.push(total);
            if total > cpd {
                cpd = total;
                crit_conn = Some((net.id, si));
            }
        }
        conn_delay.push(row);
    }

    let criticality: Vec<Vec<f64>> = conn_delay
        .iter()
        .map(|row| {
            row.iter()
                .map(|&t| {
                    if cpd > 0.0 && t.is_finite() {
                        let slack = cpd - t;
                        (1.0 - slack / cpd).clamp(0.0, 1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();

    // Reconstruct one critical path: backwards through `arr_from`, then
    // forwards through the successors realizing the downstream worst case.
    let mut critical_path = Vec::new();
    if let Some((net, si)) = crit_conn {
        let mut cur = Some(net);
        while let Some(n) = cur {
            critical_path.push(bn.nets[n].name.clone());
            cur = arr_from[n];
        }
        critical_path.reverse();
        let mut blk = bn.nets[net].sinks[si].block;
        loop {
            if timing[blk] != BlockTiming::Lut || out_net[blk] == usize::MAX {
                critical_path.push(bn.blocks[blk].name().to_string());
                break;
            }
            let v = out_net[blk];
            critical_path.push(bn.nets[v].name.clone());
            let mut next: Option<usize> = None;
            let mut worst = f64::NEG_INFINITY;
            for (si2, sink) in bn.nets[v].sinks.iter().enumerate() {
                let dw = down[sink.block];
                if dw.is_finite() && net_delays[v][si2] + dw > worst {
                    worst = net_delays[v][si2] + dw;
                    next = Some(sink.block);
                }
            }
            match next {
                Some(b) => blk = b,
                None => break,
            }
        }
    }

    Ok(TimingReport {
        critical_path_delay: cpd,
        critical_path,
        criticality,
        arrival,
    })
}
