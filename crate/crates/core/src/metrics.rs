//! Flow metrics: TSV usage, wirelength, minimum channel width, critical
//! path delay, and transistor-count area, with text and JSON reports plus
//! chart-ready tabular series.

use crate::arch::{sb_switch_count, Arch3D};
use crate::partition::Partition;
use crate::route::RouteResult;
use crate::timing::TimingReport;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMetrics {
    pub circuit: String,
    pub tiers: usize,
    pub grid_x: usize,
    pub grid_y: usize,
    pub blocks: usize,
    pub nets: usize,
    /// Partition cut-size: inter-tier connection demand.
    pub tsv_cut: u64,
    /// wire_z nodes actually occupied by routes.
    pub tsv_used: usize,
    /// Channel width the routing succeeded at.
    pub wmin: usize,
    pub route_iterations: usize,
    /// Total planar wirelength in unit segment lengths.
    pub total_wirelength: usize,
    /// Critical path delay in seconds.
    pub cpd: f64,
    /// Transistor-count area proxy, all tiers.
    pub transistor_total: u64,
    /// Logic blocks per tier.
    pub tier_blocks: Vec<usize>,
}

/// Transistor-count area at channel width `w`: switch transistors over
/// every switch-box site on every tier (3D pattern sites count as 3D
/// boxes whenever more than one tier exists), plus per-CLB logic and
/// per-CB-track transistors. Each CLB is served by two connection boxes
/// of `w` tracks each.
pub fn transistor_count(arch: &Arch3D, w: usize) -> u64 {
    let mut total: u64 = 0;
    for x in 0..=arch.grid_x {
        for y in 0..=arch.grid_y {
            let is_3d = arch.tiers > 1 && arch.is_3d_sb(x, y).unwrap();
            total += sb_switch_count(w, is_3d) * arch.tiers as u64;
        }
    }
    let clbs = (arch.grid_x * arch.grid_y * arch.tiers) as u64;
    total += clbs * arch.area.transistors_per_clb;
    let cb_tracks = 2 * clbs * w as u64;
    total += cb_tracks * arch.area.transistors_per_cb_per_track;
    total
}

/// Assemble the final metrics from the completed stage results.
#[allow(clippy::too_many_arguments)]
pub fn collect_metrics(
    circuit: &str,
    arch: &Arch3D,
    partition: &Partition,
    cut_size: u64,
    route: &RouteResult,
    timing: &TimingReport,
    blocks: usize,
    nets: usize,
) -> FlowMetrics {
    FlowMetrics {
        circuit: circuit.to_string(),
        tiers: arch.tiers,
        grid_x: arch.grid_x,
        grid_y: arch.grid_y,
        blocks,
        nets,
        tsv_cut: cut_size,
        tsv_used: route.tsvs_used,
        wmin: route.width,
        route_iterations: route.iterations,
        total_wirelength: route.wirelength,
        cpd: timing.critical_path_delay,
        transistor_total: transistor_count(arch, route.width),
        tier_blocks: partition.tier_sizes.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Machine,
}

/// Render the report. Text mirrors a per-design results table; machine is
/// JSON that round-trips through [`parse_machine_report`].
pub fn emit_report(m: &FlowMetrics, format: ReportFormat) -> String {
    match format {
        ReportFormat::Machine => {
            let mut s = serde_json::to_string_pretty(m).expect("metrics serialize");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut s = String::new();
            s.push_str(&format!("circuit        {}\n", m.circuit));
            s.push_str(&format!(
                "grid           {} x {} x {} tiers\n",
                m.grid_x, m.grid_y, m.tiers
            ));
            s.push_str(&format!("blocks         {}\n", m.blocks));
            s.push_str(&format!("nets           {}\n", m.nets));
            s.push_str(&format!(
                "tier blocks    {}\n",
                m.tier_blocks
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
            s.push_str(&format!("cut size       {}\n", m.tsv_cut));
            s.push_str(&format!("tsv used       {}\n", m.tsv_used));
            s.push_str(&format!("cpd_ns         {:.4}\n", m.cpd * 1e9));
            s.push_str(&format!("wmin           {}\n", m.wmin));
            s.push_str(&format!("area           {}\n", m.transistor_total));
            s.push_str(&format!("wirelength     {}\n", m.total_wirelength));
            s.push_str(&format!("route iters    {}\n", m.route_iterations));
            s
        }
    }
}

pub fn parse_machine_report(text: &str) -> Result<FlowMetrics, serde_json::Error> {
    serde_json::from_str(text)
}

/// Flat chart series: one `circuit metric tiers value` row per metric, for
/// cross-tier comparison plots.
pub fn chart_rows(all: &[FlowMetrics]) -> String {
    let mut s = String::new();
    for m in all {
        s.push_str(&format!("{} cpd_ns {} {:.6}\n", m.circuit, m.tiers, m.cpd * 1e9));
        s.push_str(&format!("{} wmin {} {}\n", m.circuit, m.tiers, m.wmin));
        s.push_str(&format!(
            "{} transistors {} {}\n",
            m.circuit, m.tiers, m.transistor_total
        ));
        s.push_str(&format!(
            "{} wirelength {} {}\n",
            m.circuit, m.tiers, m.total_wirelength
        ));
        s.push_str(&format!("{} tsv {} {}\n", m.circuit, m.tiers, m.tsv_used));
    }
    s
}
