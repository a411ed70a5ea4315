//! Flow orchestration: the end-to-end run and the per-stage subcommand
//! entry points, all communicating through files in the output directory
//! so a staged run is bit-identical to an end-to-end run.
//!
//! Artifacts: `partition.txt`, `placement.txt`, `routing.txt`,
//! `timing.txt`, `report.txt`, `report.json`, `chart.txt`.
//!
//! All randomness derives from the single config seed: each randomized
//! stage uses `stage_seed(seed, ordinal)` (splitmix64-style mixing), so
//! re-running one stage reproduces its in-flow behavior.

use crate::arch::{load_arch, Arch3D, ArchError};
use crate::blif::{parse_blif, BlifError};
use crate::graph::build_graph;
use crate::metrics::{
    chart_rows, collect_metrics, emit_report, parse_machine_report, FlowMetrics, ReportFormat,
};
use crate::pack::{pack_blocks, BlockNetlist};
use crate::partition::{anneal_partition, cut_size, Partition, PartitionError};
use crate::place::{anneal_placement, placement_cost_units, PlaceError, Placement};
use crate::route::{
    build_route, nets_for_routing, parse_dump, RouteConfig, RouteError, RouteResult,
};
use crate::rrg::build_rrg;
use crate::sa::SaConfig;
use crate::timing::{analyze, hpwl_delays, TimingError, TimingReport};
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub arch_path: PathBuf,
    pub blif_path: PathBuf,
    /// Override the architecture file's tier count.
    pub tiers: Option<usize>,
    pub seed: u64,
    /// Fixed channel width; `None` runs the minimum-width search.
    pub width: Option<usize>,
    pub out_dir: PathBuf,
    pub moves_per_temp: Option<usize>,
    pub max_route_iters: Option<usize>,
    pub format: ReportFormat,
}

impl FlowConfig {
    pub fn new(arch: impl Into<PathBuf>, blif: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        FlowConfig {
            arch_path: arch.into(),
            blif_path: blif.into(),
            tiers: None,
            seed: 1,
            width: None,
            out_dir: out.into(),
            moves_per_temp: None,
            max_route_iters: None,
            format: ReportFormat::Text,
        }
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("architecture stage: {0}")]
    Arch(#[from] ArchError),
    #[error("netlist stage: {0}")]
    Blif(#[from] BlifError),
    #[error("partition stage: {0}")]
    Partition(#[from] PartitionError),
    #[error("placement stage: {0}")]
    Place(#[from] PlaceError),
    #[error("routing stage: {0}")]
    Route(#[from] RouteError),
    #[error("timing stage: {0}")]
    Timing(#[from] TimingError),
    #[error("stage `{stage}` requires missing artifact {artifact}")]
    MissingPrerequisite { stage: &'static str, artifact: PathBuf },
    #[error("malformed artifact {artifact}: {reason}")]
    MalformedArtifact { artifact: PathBuf, reason: String },
}

/// Per-stage seed derivation: splitmix64 finalizer over seed xor ordinal.
pub fn stage_seed(seed: u64, ordinal: u64) -> u64 {
    let mut z = seed ^ ordinal.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const STAGE_PARTITION: u64 = 1;
pub const STAGE_PLACE: u64 = 2;

fn read(path: &Path) -> Result<String, FlowError> {
    fs::read_to_string(path).map_err(|source| FlowError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), FlowError> {
    fs::write(path, text).map_err(|source| FlowError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_artifact(cfg: &FlowConfig, stage: &'static str, name: &str) -> Result<String, FlowError> {
    let path = cfg.out_dir.join(name);
    if !path.exists() {
        return Err(FlowError::MissingPrerequisite {
            stage,
            artifact: path,
        });
    }
    read(&path)
}

/// Parsed common inputs every stage needs.
pub struct FlowInputs {
    pub arch: Arch3D,
    pub netlist: BlockNetlist,
    pub circuit: String,
}

pub fn load_inputs(cfg: &FlowConfig) -> Result<FlowInputs, FlowError> {
    let arch_text = read(&cfg.arch_path)?;
    let mut arch = load_arch(&arch_text)?;
    if let Some(t) = cfg.tiers {
        if t < 1 {
            return Err(FlowError::Config("tiers must be >= 1".into()));
        }
        arch.tiers = t;
        arch.validate()?;
    }
    let blif_text = read(&cfg.blif_path)?;
    let nl = parse_blif(&blif_text, arch.lut_size)?;
    let netlist = pack_blocks(&nl, arch.cluster_size);
    Ok(FlowInputs {
        arch,
        netlist,
        circuit: nl.model_name,
    })
}

fn ensure_out_dir(cfg: &FlowConfig) -> Result<(), FlowError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|source| FlowError::Io {
        path: cfg.out_dir.clone(),
        source,
    })
}

fn sa_config(cfg: &FlowConfig, ordinal: u64) -> SaConfig {
    let mut sa = SaConfig::with_seed(stage_seed(cfg.seed, ordinal));
    sa.moves_per_temperature = cfg.moves_per_temp;
    sa
}

/// Partition stage: netlist -> tiers; writes `partition.txt`.
pub fn stage_partition(cfg: &FlowConfig) -> Result<Partition, FlowError> {
    ensure_out_dir(cfg)?;
    let inp = load_inputs(cfg)?;
    let graph = build_graph(&inp.netlist);
    let sa = sa_config(cfg, STAGE_PARTITION);
    let p = anneal_partition(&graph, inp.arch.tiers, &sa);
    let cut = cut_size(&graph, &p);
    write(&cfg.out_dir.join("partition.txt"), &p.dump(cut, sa.seed))?;
    Ok(p)
}

/// Placement stage: partition -> per-tier placement; writes `placement.txt`.
pub fn stage_place(cfg: &FlowConfig) -> Result<Placement, FlowError> {
    ensure_out_dir(cfg)?;
    let inp = load_inputs(cfg)?;
    let text = read_artifact(cfg, "place", "partition.txt")?;
    let (p, _cut, _seed) =
        Partition::parse(&text).map_err(|e| FlowError::MalformedArtifact {
            artifact: cfg.out_dir.join("partition.txt"),
            reason: e.to_string(),
        })?;
    let sa = sa_config(cfg, STAGE_PLACE);
    let pl = anneal_placement(&inp.netlist, &p, &inp.arch, &sa)?;
    let cost = placement_cost_units(&inp.netlist, &pl, &inp.arch);
    write(&cfg.out_dir.join("placement.txt"), &pl.dump(cost, sa.seed))?;
    Ok(pl)
}

/// Routing stage: placement -> routed nets; writes `routing.txt`.
/// Pre-route criticalities come from the wirelength timing estimate.
pub fn stage_route(cfg: &FlowConfig) -> Result<RouteResult, FlowError> {
    ensure_out_dir(cfg)?;
    let inp = load_inputs(cfg)?;
    let text = read_artifact(cfg, "route", "placement.txt")?;
    let (pl, _cost, _seed) =
        Placement::parse(&text).map_err(|e| FlowError::MalformedArtifact {
            artifact: cfg.out_dir.join("placement.txt"),
            reason: e.to_string(),
        })?;
    let est = hpwl_delays(&inp.netlist, &pl, &inp.arch);
    let pre = analyze(&inp.netlist, &est, &inp.arch.delays)?;
    let nets = nets_for_routing(&inp.netlist, &pl);
    let mut rc = RouteConfig::default();
    if let Some(it) = cfg.max_route_iters {
        rc.max_iterations = it;
    }
    let result = build_route(&inp.arch, &nets, &pre.criticality, &rc, cfg.width)?;
    let rrg = build_rrg(&inp.arch, result.width).map_err(RouteError::from)?;
    write(&cfg.out_dir.join("routing.txt"), &result.dump(&rrg))?;
    Ok(result)
}

/// Timing stage: routed delays -> CPD; writes `timing.txt`.
pub fn stage_sta(cfg: &FlowConfig) -> Result<TimingReport, FlowError> {
    ensure_out_dir(cfg)?;
    let inp = load_inputs(cfg)?;
    let text = read_artifact(cfg, "sta", "routing.txt")?;
    let dump = parse_dump(&text).map_err(|reason| FlowError::MalformedArtifact {
        artifact: cfg.out_dir.join("routing.txt"),
        reason,
    })?;
    let report = analyze(&inp.netlist, &dump.net_delays, &inp.arch.delays)?;
    let mut out = format!("cpd {:.9e}\n", report.critical_path_delay);
    out.push_str(&format!("path {}\n", report.critical_path.join(" ")));
    write(&cfg.out_dir.join("timing.txt"), &out)?;
    Ok(report)
}

/// Report stage: all prior artifacts -> metrics; writes `report.txt`,
/// `report.json` and `chart.txt`.
pub fn stage_report(cfg: &FlowConfig) -> Result<FlowMetrics, FlowError> {
    ensure_out_dir(cfg)?;
    let inp = load_inputs(cfg)?;
    let ptext = read_artifact(cfg, "report", "partition.txt")?;
    let (p, cut, _seed) =
        Partition::parse(&ptext).map_err(|e| FlowError::MalformedArtifact {
            artifact: cfg.out_dir.join("partition.txt"),
            reason: e.to_string(),
        })?;
    let rtext = read_artifact(cfg, "report", "routing.txt")?;
    let dump = parse_dump(&rtext).map_err(|reason| FlowError::MalformedArtifact {
        artifact: cfg.out_dir.join("routing.txt"),
        reason,
    })?;
    let ttext = read_artifact(cfg, "report", "timing.txt")?;
    let cpd = parse_timing_cpd(&ttext).map_err(|reason| FlowError::MalformedArtifact {
        artifact: cfg.out_dir.join("timing.txt"),
        reason,
    })?;

    let route = RouteResult {
        width: dump.width,
        iterations: dump.iterations,
        nets: Vec::new(),
        wirelength: dump.wirelength,
        tsvs_used: dump.tsvs_used,
    };
    let timing = TimingReport {
        critical_path_delay: cpd,
        critical_path: Vec::new(),
        criticality: Vec::new(),
        arrival: Vec::new(),
    };
    let m = collect_metrics(
        &inp.circuit,
        &inp.arch,
        &p,
        cut,
        &route,
        &timing,
        inp.netlist.block_count(),
        inp.netlist.nets.len(),
    );
    write(&cfg.out_dir.join("report.txt"), &emit_report(&m, ReportFormat::Text))?;
    write(
        &cfg.out_dir.join("report.json"),
        &emit_report(&m, ReportFormat::Machine),
    )?;
    write(&cfg.out_dir.join("chart.txt"), &chart_rows(std::slice::from_ref(&m)))?;
    Ok(m)
}

fn parse_timing_cpd(text: &str) -> Result<f64, String> {
    for line in text.lines() {
        if let Some(rest) = line.trim().strip_prefix("cpd ") {
            return rest.parse::<f64>().map_err(|e| e.to_string());
        }
    }
    Err("missing cpd line".into())
}

/// Full flow: runs every stage in order over the shared output directory.
pub fn run_flow(cfg: &FlowConfig) -> Result<FlowMetrics, FlowError> {
    stage_partition(cfg)?;
    stage_place(cfg)?;
    stage_route(cfg)?;
    stage_sta(cfg)?;
    let m = stage_report(cfg)?;
    // Sanity: the machine artifact round-trips to what we return.
    let json = read(&cfg.out_dir.join("report.json"))?;
    debug_assert_eq!(parse_machine_report(&json).ok().as_ref(), Some(&m));
    Ok(m)
}
