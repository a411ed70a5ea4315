use clap::{Args, Parser, Subcommand};
use fpga3d::flow::{
    run_flow, stage_partition, stage_place, stage_report, stage_route, stage_sta, FlowConfig,
    FlowError,
};
use fpga3d::metrics::{emit_report, ReportFormat};
use std::path::PathBuf;
use std::process::ExitCode;

/// 3D FPGA implementation flow: partition, place, route, analyze, report.
#[derive(Parser)]
#[command(name = "fpga3d", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Architecture description file (TOML).
    #[arg(long)]
    arch: PathBuf,
    /// Technology-mapped BLIF netlist.
    #[arg(long)]
    blif: PathBuf,
    /// Override the architecture file's tier count.
    #[arg(long)]
    tiers: Option<usize>,
    /// Master seed; every stage derives its own seed from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Route at this fixed channel width.
    #[arg(long, conflicts_with = "wmin_search")]
    width: Option<usize>,
    /// Search for the minimum routable channel width (the default).
    #[arg(long)]
    wmin_search: bool,
    /// Directory for stage artifacts and reports.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Simulated-annealing moves per temperature (default: 10x instance size).
    #[arg(long)]
    moves_per_temp: Option<usize>,
    /// Router iteration cap.
    #[arg(long)]
    max_route_iters: Option<usize>,
    /// Report format printed to stdout.
    #[arg(long, default_value = "text", value_parser = ["text", "machine"])]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full flow end to end.
    Run(CommonArgs),
    /// Partition the packed netlist across tiers.
    Partition(CommonArgs),
    /// Place each tier (requires partition.txt).
    Place(CommonArgs),
    /// Route the placed design (requires placement.txt).
    Route(CommonArgs),
    /// Static timing analysis (requires routing.txt).
    Sta(CommonArgs),
    /// Collect metrics and emit reports (requires prior stage artifacts).
    Report(CommonArgs),
}

impl CommonArgs {
    fn to_config(&self) -> FlowConfig {
        let mut cfg = FlowConfig::new(&self.arch, &self.blif, &self.out_dir);
        cfg.tiers = self.tiers;
        cfg.seed = self.seed;
        cfg.width = self.width;
        cfg.moves_per_temp = self.moves_per_temp;
        cfg.max_route_iters = self.max_route_iters;
        cfg.format = if self.format == "machine" {
            ReportFormat::Machine
        } else {
            ReportFormat::Text
        };
        cfg
    }
}

fn run(cli: Cli) -> Result<(), FlowError> {
    match cli.command {
        Command::Run(a) => {
            let cfg = a.to_config();
            let m = run_flow(&cfg)?;
            print!("{}", emit_report(&m, cfg.format));
        }
        Command::Partition(a) => {
            stage_partition(&a.to_config())?;
        }
        Command::Place(a) => {
            stage_place(&a.to_config())?;
        }
        Command::Route(a) => {
            stage_route(&a.to_config())?;
        }
        Command::Sta(a) => {
            stage_sta(&a.to_config())?;
        }
        Command::Report(a) => {
            let cfg = a.to_config();
            let m = stage_report(&cfg)?;
            print!("{}", emit_report(&m, cfg.format));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ FlowError::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
