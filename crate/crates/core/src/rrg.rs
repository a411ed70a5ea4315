//! The 3D routing-resource graph.
//!
//! Geometry (CLB grid coords cx in 0..X, cy in 0..Y):
//! - horizontal channels run at boundary rows y in 0..=Y with unit spans
//!   x in 0..X; vertical channels at boundary columns x in 0..=X with spans
//!   y in 0..Y; switch boxes sit at the (X+1) x (Y+1) channel intersections.
//! - a track's segment class tiles its channel from span 0 in steps of the
//!   nominal length; the last segment is truncated to fit. One node per
//!   logical segment, capacity 1, switch access at its two endpoints.
//! - switch boxes use the subset pattern: track i connects only to track i
//!   on the other sides (F_s = 3 at a full crossing).
//! - TSV tracks (wire_z) exist only at 3D switch-box sites and join tiers
//!   z and z+1; ceil(r_z * w) tracks per site per tier pair.
//!
//! Site pins are addressed in placement coordinates, where CLBs occupy
//! (1..=X, 1..=Y) and pads the perimeter ring.

use crate::arch::Arch3D;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Source,
    Sink,
    Opin,
    Ipin,
    WireX,
    WireY,
    WireZ,
}

impl NodeKind {
    pub fn is_wire(self) -> bool {
        matches!(self, NodeKind::WireX | NodeKind::WireY | NodeKind::WireZ)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Source => "source",
            NodeKind::Sink => "sink",
            NodeKind::Opin => "opin",
            NodeKind::Ipin => "ipin",
            NodeKind::WireX => "wire_x",
            NodeKind::WireY => "wire_y",
            NodeKind::WireZ => "wire_z",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RrgNode {
    pub kind: NodeKind,
    pub x: usize,
    pub y: usize,
    pub z: usize,
    pub track: usize,
    /// Spanned grid units for planar wires; 0 for pins and TSVs.
    pub len: usize,
    pub capacity: usize,
    pub base_cost: f64,
    pub intrinsic_delay: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct RrgEdge {
    pub to: usize,
    pub delay: f64,
}

/// Pin nodes of one placement site.
#[derive(Debug, Clone, Default)]
pub struct SitePins {
    pub source: usize,
    pub sink: usize,
    pub opins: Vec<usize>,
    pub ipins: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Rrg {
    pub nodes: Vec<RrgNode>,
    pub out: Vec<Vec<RrgEdge>>,
    pub width: usize,
    /// Placement coordinate (x, y, z) -> pins.
    pub site_pins: HashMap<(usize, usize, usize), SitePins>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RrgError {
    #[error("channel width {0} must be even and >= 2")]
    InvalidWidth(usize),
}

impl Rrg {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(|v| v.len()).sum()
    }

    pub fn pins(&self, x: usize, y: usize, z: usize) -> &SitePins {
        &self.site_pins[&(x, y, z)]
    }
}

/// Number of tracks per length class: double/quad by rounding the mix,
/// remainder to single.
pub fn track_classes(w: usize, arch: &Arch3D) -> (usize, usize, usize) {
    let mut n2 = (arch.segment_mix.double * w as f64).round() as usize;
    let mut n4 = (arch.segment_mix.quad * w as f64).round() as usize;
    while n2 + n4 > w {
        if n4 > 0 {
            n4 -= 1;
        } else {
            n2 -= 1;
        }
    }
    (w - n2 - n4, n2, n4)
}

fn track_len(t: usize, n1: usize, n2: usize) -> usize {
    if t < n1 {
        1
    } else if t < n1 + n2 {
        2
    } else {
        4
    }
}

struct Builder {
    nodes: Vec<RrgNode>,
    out: Vec<Vec<RrgEdge>>,
}

impl Builder {
    fn add(&mut self, node: RrgNode) -> usize {
        self.nodes.push(node);
        self.out.push(Vec::new());
        self.nodes.len() - 1
    }

    fn edge(&mut self, from: usize, to: usize, delay: f64) {
        self.out[from].push(RrgEdge { to, delay });
    }

    fn biedge(&mut self, a: usize, b: usize, delay: f64) {
        self.edge(a, b, delay);
        self.edge(b, a, delay);
    }
}

/// Build the routing-resource graph for channel width `w` (even, >= 2).
#[allow(clippy::needless_range_loop)]
pub fn build_rrg(arch: &Arch3D, w: usize) -> Result<Rrg, RrgError> {
    if w < 2 || !w.is_multiple_of(2) {
        return Err(RrgError::InvalidWidth(w));
    }
    let (gx, gy, tiers) = (arch.grid_x, arch.grid_y, arch.tiers);
    let (n1, n2, _n4) = track_classes(w, arch);
    let d = &arch.delays;
    let mut b = Builder {
        nodes: Vec::new(),
        out: Vec::new(),
    };

    // chanx_cover[z][cy_b][t][sx] / chany_cover[z][cx_b][t][sy]: covering node.
    let mut chanx_cover = vec![vec![vec![vec![usize::MAX; gx]; w]; gy + 1]; tiers];
    let mut chany_cover = vec![vec![vec![vec![usize::MAX; gy]; w]; gx + 1]; tiers];
    // Wires with an endpoint at SB (i, j, z), per track.
    let mut sb_ends: HashMap<(usize, usize, usize, usize), Vec<usize>> = HashMap::new();

    for z in 0..tiers {
        for t in 0..w {
            let class = track_len(t, n1, n2);
            // Horizontal channels.
            for cy_b in 0..=gy {
                let mut sx = 0;
                while sx < gx {
                    let len = class.min(gx - sx);
                    let id = b.add(RrgNode {
                        kind: NodeKind::WireX,
                        x: sx,
                        y: cy_b,
                        z,
                        track: t,
                        len,
                        capacity: 1,
                        base_cost: len as f64,
                        intrinsic_delay: d.t_seg(class as u8) * len as f64 / class as f64,
                    });
                    for s in sx..sx + len {
                        chanx_cover[z][cy_b][t][s] = id;
                    }
                    sb_ends.entry((sx, cy_b, z, t)).or_default().push(id);
                    sb_ends.entry((sx + len, cy_b, z, t)).or_default().push(id);
                    sx += len;
                }
            }
            // Vertical channels.
            for cx_b in 0..=gx {
                let mut sy = 0;
                while sy < gy {
                    let len = class.min(gy - sy);
                    let id = b.add(RrgNode {
                        kind: NodeKind::WireY,
                        x: cx_b,
                        y: sy,
                        z,
                        track: t,
                        len,
                        capacity: 1,
                        base_cost: len as f64,
                        intrinsic_delay: d.t_seg(class as u8) * len as f64 / class as f64,
                    });
                    for s in sy..sy + len {
                        chany_cover[z][cx_b][t][s] = id;
                    }
                    sb_ends.entry((cx_b, sy, z, t + w)).or_default().push(id);
                    sb_ends.entry((cx_b, sy + len, z, t + w)).or_default().push(id);
                    sy += len;
                }
            }
        }
    }

    // Switch-box edges: at SB (i, j) connect every pair of incident
    // same-track wires (subset pattern).
    for z in 0..tiers {
        for i in 0..=gx {
            for j in 0..=gy {
                for t in 0..w {
                    let mut incident: Vec<usize> = Vec::new();
                    if let Some(v) = sb_ends.get(&(i, j, z, t)) {
                        // Horizontal wires keyed by their SB x-endpoint; only
                        // those whose channel is row j.
                        incident.extend(v.iter().filter(|&&n| b.nodes[n].y == j));
                    }
                    if let Some(v) = sb_ends.get(&(i, j, z, t + w)) {
                        incident.extend(v.iter().filter(|&&n| b.nodes[n].x == i));
                    }
                    for a in 0..incident.len() {
                        for c in a + 1..incident.len() {
                            b.biedge(incident[a], incident[c], d.t_sb_switch);
                        }
                    }
                }
            }
        }
    }

    // TSV tracks at 3D switch boxes.
    let nz = arch.vertical_tracks(w);
    for z in 0..tiers.saturating_sub(1) {
        for i in 0..=gx {
            for j in 0..=gy {
                if !arch.is_3d_sb(i, j).unwrap() {
                    continue;
                }
                for k in 0..nz {
                    let id = b.add(RrgNode {
                        kind: NodeKind::WireZ,
                        x: i,
                        y: j,
                        z,
                        track: k,
                        len: 0,
                        capacity: 1,
                        base_cost: 1.0,
                        intrinsic_delay: d.t_tsv,
                    });
                    for dz in [z, z + 1] {
                        let mut planar: Vec<usize> = Vec::new();
                        if let Some(v) = sb_ends.get(&(i, j, dz, k)) {
                            planar.extend(v.iter().filter(|&&n| b.nodes[n].y == j));
                        }
                        if let Some(v) = sb_ends.get(&(i, j, dz, k + w)) {
                            planar.extend(v.iter().filter(|&&n| b.nodes[n].x == i));
                        }
                        for p in planar {
                            b.biedge(id, p, d.t_sb_switch);
                        }
                    }
                }
            }
        }
    }

    // Pins. CLB at placement (px, py) has CLB-grid coords (px-1, py-1) and
    // taps its four adjacent spans; pads tap the one facing span.
    let mut site_pins = HashMap::new();
    let k = arch.lut_size;
    let cs = arch.cluster_size;
    for z in 0..tiers {
        for px in 1..=gx {
            for py in 1..=gy {
                let (cx, cy) = (px - 1, py - 1);
                let spans = [
                    chan_span(ChanDir::X, cy, cx),
                    chan_span(ChanDir::X, cy + 1, cx),
                    chan_span(ChanDir::Y, cx, cy),
                    chan_span(ChanDir::Y, cx + 1, cy),
                ];
                let pins = add_site(&mut b, &spans, px, py, z, 2 * cs, k * cs, w,
                                    &chanx_cover, &chany_cover, d.t_cb);
                site_pins.insert((px, py, z), pins);
            }
        }
        // Pads.
        for px in 1..=gx {
            let s0 = [chan_span(ChanDir::X, 0, px - 1)];
            site_pins.insert(
                (px, 0, z),
                add_site(&mut b, &s0, px, 0, z, 1, 1, w, &chanx_cover, &chany_cover, d.t_cb),
            );
            let s1 = [chan_span(ChanDir::X, gy, px - 1)];
            site_pins.insert(
                (px, gy + 1, z),
                add_site(&mut b, &s1, px, gy + 1, z, 1, 1, w, &chanx_cover, &chany_cover, d.t_cb),
            );
        }
        for py in 1..=gy {
            let s0 = [chan_span(ChanDir::Y, 0, py - 1)];
            site_pins.insert(
                (0, py, z),
                add_site(&mut b, &s0, 0, py, z, 1, 1, w, &chanx_cover, &chany_cover, d.t_cb),
            );
            let s1 = [chan_span(ChanDir::Y, gx, py - 1)];
            site_pins.insert(
                (gx + 1, py, z),
                add_site(&mut b, &s1, gx + 1, py, z, 1, 1, w, &chanx_cover, &chany_cover, d.t_cb),
            );
        }
    }

    Ok(Rrg {
        nodes: b.nodes,
        out: b.out,
        width: w,
        site_pins,
    })
}

#[derive(Clone, Copy)]
enum ChanDir {
    X,
    Y,
}

#[derive(Clone, Copy)]
struct Span {
    dir: ChanDir,
    chan: usize,
    span: usize,
}

fn chan_span(dir: ChanDir, chan: usize, span: usize) -> Span {
    Span { dir, chan, span }
}

#[allow(clippy::too_many_arguments)]
fn add_site(
    b: &mut Builder,
    spans: &[Span],
    x: usize,
    y: usize,
    z: usize,
    n_opins: usize,
    n_ipins: usize,
    w: usize,
    chanx_cover: &[Vec<Vec<Vec<usize>>>],
    chany_cover: &[Vec<Vec<Vec<usize>>>],
    t_cb: f64,
) -> SitePins {
    let mk = |b: &mut Builder, kind, track, cap| {
        b.add(RrgNode {
            kind,
            x,
            y,
            z,
            track,
            len: 0,
            capacity: cap,
            base_cost: 1.0,
            intrinsic_delay: 0.0,
        })
    };
    let source = mk(b, NodeKind::Source, 0, n_opins);
    let sink = mk(b, NodeKind::Sink, 0, n_ipins);
    let opins: Vec<usize> = (0..n_opins).map(|i| mk(b, NodeKind::Opin, i, 1)).collect();
    let ipins: Vec<usize> = (0..n_ipins).map(|i| mk(b, NodeKind::Ipin, i, 1)).collect();

    // Adjacent wires, deduplicated (a long segment can cover two spans).
    let mut wires: Vec<usize> = Vec::new();
    for s in spans {
        for t in 0..w {
            let id = match s.dir {
                ChanDir::X => chanx_cover[z][s.chan][t][s.span],
                ChanDir::Y => chany_cover[z][s.chan][t][s.span],
            };
            if id != usize::MAX && !wires.contains(&id) {
                wires.push(id);
            }
        }
    }
    for &o in &opins {
        b.edge(source, o, 0.0);
        for &wn in &wires {
            b.edge(o, wn, t_cb);
        }
    }
    for &i in &ipins {
        for &wn in &wires {
            b.edge(wn, i, t_cb);
        }
        b.edge(i, sink, 0.0);
    }
    SitePins {
        source,
        sink,
        opins,
        ipins,
    }
}
