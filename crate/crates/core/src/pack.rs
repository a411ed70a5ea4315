//! Pack BLIF primitives into CLB-level blocks.
//!
//! Each LUT is paired with a latch it directly drives when possible (a BLE);
//! BLEs are then grouped greedily by shared-signal count into CLBs holding up
//! to `cluster_size` BLEs. Primary inputs and outputs become pad blocks.
//! Clock signals never produce nets: the global clock network is not part of
//! the modeled routing fabric.

use crate::blif::Netlist;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    PadIn,
    PadOut,
    Clb,
}

impl BlockKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BlockKind::PadIn => "pad_in",
            BlockKind::PadOut => "pad_out",
            BlockKind::Clb => "clb",
        }
    }
}

/// A primitive absorbed into a block. Pads carry the pad signal name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Primitive {
    /// LUT producing `output` from `inputs`.
    Lut { output: String, inputs: Vec<String> },
    /// Latch capturing `input` into `output`.
    Latch { input: String, output: String },
    /// Pad carrying the named primary input or output signal.
    Pad { signal: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicBlock {
    pub id: usize,
    pub kind: BlockKind,
    pub primitives: Vec<Primitive>,
}

impl LogicBlock {
    /// A stable human-readable name: the first driven/pad signal.
    pub fn name(&self) -> &str {
        match &self.primitives[0] {
            Primitive::Lut { output, .. } => output,
            Primitive::Latch { output, .. } => output,
            Primitive::Pad { signal } => signal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetPin {
    pub block: usize,
    pub pin: usize,
}

/// A signal with one driver and at least one sink, after intra-block
/// connections are absorbed. Sinks are deduplicated per block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub id: usize,
    pub name: String,
    pub driver: NetPin,
    pub sinks: Vec<NetPin>,
}

#[derive(Debug, Clone, Default)]
pub struct BlockNetlist {
    pub blocks: Vec<LogicBlock>,
    pub nets: Vec<Net>,
    pub cluster_size: usize,
}

impl BlockNetlist {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Line-oriented dump: `id kind primitive-list`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for b in &self.blocks {
            let prims: Vec<String> = b
                .primitives
                .iter()
                .map(|p| match p {
                    Primitive::Lut { output, .. } => format!("lut:{output}"),
                    Primitive::Latch { output, .. } => format!("latch:{output}"),
                    Primitive::Pad { signal } => format!("pad:{signal}"),
                })
                .collect();
            s.push_str(&format!("{} {} {}\n", b.id, b.kind.as_str(), prims.join(",")));
        }
        s
    }
}

/// One LUT plus the latch it directly drives, or a lone LUT / lone latch.
#[derive(Debug, Clone)]
struct Ble {
    lut: Option<usize>,
    latch: Option<usize>,
}

/// Pack a parsed netlist into blocks. Always succeeds on a valid netlist.
pub fn pack_blocks(netlist: &Netlist, cluster_size: usize) -> BlockNetlist {
    assert!(cluster_size >= 1, "cluster_size must be >= 1");
    let clocks: HashSet<String> = netlist
        .clock_signals()
        .into_iter()
        .map(|s| s.to_string())
        .collect();

    // BLE formation: pair each latch with the LUT driving it, at most one
    // latch per LUT (first by file order).
    let lut_of_output: HashMap<&str, usize> = netlist
        .luts
        .iter()
        .enumerate()
        .map(|(i, l)| (l.output.as_str(), i))
        .collect();
    let mut lut_paired = vec![false; netlist.luts.len()];
    let mut latch_paired = vec![false; netlist.latches.len()];
    let mut bles: Vec<Ble> = Vec::new();
    for (li, latch) in netlist.latches.iter().enumerate() {
        if let Some(&lut_idx) = lut_of_output.get(latch.input.as_str()) {
            if !lut_paired[lut_idx] {
                lut_paired[lut_idx] = true;
                latch_paired[li] = true;
                bles.push(Ble {
                    lut: Some(lut_idx),
                    latch: Some(li),
                });
            }
        }
    }
    for (i, _) in netlist.luts.iter().enumerate() {
        if !lut_paired[i] {
            bles.push(Ble {
                lut: Some(i),
                latch: None,
            });
        }
    }
    for (i, _) in netlist.latches.iter().enumerate() {
        if !latch_paired[i] {
            bles.push(Ble {
                lut: None,
                latch: Some(i),
            });
        }
    }

    // Signals touching a BLE (excluding clocks), for the sharing metric.
    let ble_signals: Vec<BTreeSet<&str>> = bles
        .iter()
        .map(|b| {
            let mut s = BTreeSet::new();
            if let Some(l) = b.lut {
                let lut = &netlist.luts[l];
                s.insert(lut.output.as_str());
                for i in &lut.inputs {
                    s.insert(i.as_str());
                }
            }
            if let Some(l) = b.latch {
                let latch = &netlist.latches[l];
                s.insert(latch.input.as_str());
                s.insert(latch.output.as_str());
            }
            s.retain(|x| !clocks.contains(*x));
            s
        })
        .collect();

    // Greedy clustering: seed with the lowest unassigned BLE, then repeatedly
    // absorb the unassigned BLE sharing the most signals with the cluster.
    // A BLE with zero sharing never joins; independent logic stays separate.
    let mut assigned = vec![false; bles.len()];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for seed in 0..bles.len() {
        if assigned[seed] {
            continue;
        }
        assigned[seed] = true;
        let mut cluster = vec![seed];
        let mut cluster_sigs = ble_signals[seed].clone();
        while cluster.len() < cluster_size {
            let mut best: Option<(usize, usize)> = None; // (share, ble)
            for (b, sigs) in ble_signals.iter().enumerate() {
                if assigned[b] {
                    continue;
                }
                let share = sigs.intersection(&cluster_sigs).count();
                if share > 0 && best.is_none_or(|(s, _)| share > s) {
                    best = Some((share, b));
                }
            }
            match best {
                Some((_, b)) => {
                    assigned[b] = true;
                    cluster_sigs.extend(ble_signals[b].iter().copied());
                    cluster.push(b);
                }
                None => break,
            }
        }
        clusters.push(cluster);
    }

    // Blocks: pad_in per PI, pad_out per PO, one CLB per cluster.
    let mut blocks: Vec<LogicBlock> = Vec::new();
    for pi in &netlist.primary_inputs {
        blocks.push(LogicBlock {
            id: blocks.len(),
            kind: BlockKind::PadIn,
            primitives: vec![Primitive::Pad { signal: pi.clone() }],
        });
    }
    for po in &netlist.primary_outputs {
        blocks.push(LogicBlock {
            id: blocks.len(),
            kind: BlockKind::PadOut,
            primitives: vec![Primitive::Pad { signal: po.clone() }],
        });
    }
    for cluster in &clusters {
        let mut prims = Vec::new();
        for &b in cluster {
            if let Some(l) = bles[b].lut {
                let lut = &netlist.luts[l];
                prims.push(Primitive::Lut {
                    output: lut.output.clone(),
                    inputs: lut.inputs.clone(),
                });
            }
            if let Some(l) = bles[b].latch {
                let latch = &netlist.latches[l];
                prims.push(Primitive::Latch {
                    input: latch.input.clone(),
                    output: latch.output.clone(),
                });
            }
        }
        blocks.push(LogicBlock {
            id: blocks.len(),
            kind: BlockKind::Clb,
            primitives: prims,
        });
    }

    // Signal -> driving block, and signal -> consuming blocks.
    let mut driver_of: BTreeMap<&str, usize> = BTreeMap::new();
    let mut consumers: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for b in &blocks {
        let internal_outputs: HashSet<&str> = b
            .primitives
            .iter()
            .filter_map(|p| match p {
                Primitive::Lut { output, .. } => Some(output.as_str()),
                Primitive::Latch { output, .. } => Some(output.as_str()),
                Primitive::Pad { .. } => None,
            })
            .collect();
        for p in &b.primitives {
            match p {
                Primitive::Lut { output, inputs } => {
                    driver_of.insert(output, b.id);
                    for i in inputs {
                        if !internal_outputs.contains(i.as_str()) {
                            consumers.entry(i).or_default().push(b.id);
                        }
                    }
                }
                Primitive::Latch { input, output } => {
                    driver_of.insert(output, b.id);
                    if !internal_outputs.contains(input.as_str()) {
                        consumers.entry(input).or_default().push(b.id);
                    }
                }
                Primitive::Pad { signal } => match b.kind {
                    BlockKind::PadIn => {
                        driver_of.insert(signal, b.id);
                    }
                    BlockKind::PadOut => {
                        consumers.entry(signal).or_default().push(b.id);
                    }
                    BlockKind::Clb => unreachable!(),
                },
            }
        }
    }
    // Nets: one per driven non-clock signal with external sinks, sinks
    // deduplicated per block, pins numbered per block in net order.
    let mut next_out_pin = vec![0usize; blocks.len()];
    let mut next_in_pin = vec![0usize; blocks.len()];
    let mut nets = Vec::new();
    for (signal, &driver) in &driver_of {
        if clocks.contains(*signal) {
            continue;
        }
        let mut sink_blocks: Vec<usize> = consumers.get(signal).cloned().unwrap_or_default();
        sink_blocks.sort_unstable();
        sink_blocks.dedup();
        sink_blocks.retain(|&b| b != driver);
        if sink_blocks.is_empty() {
            continue;
        }
        let dpin = next_out_pin[driver];
        next_out_pin[driver] += 1;
        let sinks = sink_blocks
            .into_iter()
            .map(|b| {
                let pin = next_in_pin[b];
                next_in_pin[b] += 1;
                NetPin { block: b, pin }
            })
            .collect();
        nets.push(Net {
            id: nets.len(),
            name: signal.to_string(),
            driver: NetPin {
                block: driver,
                pin: dpin,
            },
            sinks,
        });
    }

    BlockNetlist {
        blocks,
        nets,
        cluster_size,
    }
}
