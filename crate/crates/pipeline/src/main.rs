//! cuestream CLI: simulate, bench, replay and export-events.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cuestream_core::memory_bank::PreloadBank;
use cuestream_core::{FrameIdx, Precision, StorageTier};
use cuestream_pipeline::bench::{run_grid, rows_to_csv, BenchGrid};
use cuestream_pipeline::config::{load_scenario, PipelineConfig};
use cuestream_pipeline::report::{
    events_jsonl, memory_report_csv, parse_events_jsonl, write_partial, write_report,
};
use cuestream_pipeline::run::{run_with_preload, RunOutput};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "cuestream", version, about = "Streaming billiards segmentation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario through the full two-worker pipeline.
    Simulate(Box<SimulateArgs>),
    /// Sweep a (K, M, D, retention) grid over one scenario.
    Bench {
        /// Grid description (JSON).
        #[arg(long)]
        grid: PathBuf,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Pretty-print an exported event log, marking corrections.
    Replay {
        /// Events file (JSONL).
        #[arg(long)]
        events: PathBuf,
    },
    /// Run a scenario and write the event log as JSONL (stdout by default).
    ExportEvents {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Pipeline config file (JSON); defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preload memory bank file to seed inference with.
    #[arg(long)]
    preload: Option<PathBuf>,
    /// Write the event log (JSONL) here.
    #[arg(long)]
    out_events: Option<PathBuf>,
    /// Write the per-propagation memory report (CSV) here.
    #[arg(long)]
    out_memory_report: Option<PathBuf>,
    /// Export a preload bank from the retained memory after the run.
    #[arg(long)]
    export_preload: Option<PathBuf>,
    /// Frames to export into the preload bank (comma separated).
    #[arg(long, value_delimiter = ',')]
    preload_frames: Vec<FrameIdx>,

    /// Override: frames accumulated per flush (K).
    #[arg(long)]
    buffer_size: Option<usize>,
    /// Override: max frames per propagation (M); "none" for unbounded.
    #[arg(long)]
    max_track: Option<Bound>,
    /// Override: condition-frame interval (D).
    #[arg(long)]
    detection_interval: Option<usize>,
    /// Override: resident-frame retention; "none" keeps everything.
    #[arg(long)]
    retention: Option<Bound>,
    /// Override: attention frame limit.
    #[arg(long)]
    attention_limit: Option<usize>,
    /// Override: back-update window for new objects.
    #[arg(long)]
    update_window: Option<usize>,
    /// Override: detector noise seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Override: square model-input resolution for byte accounting.
    #[arg(long)]
    internal_side: Option<u32>,
    /// Override: internal-tensor precision ("single" or "half").
    #[arg(long, value_parser = parse_precision)]
    precision: Option<Precision>,
    /// Override: accounting tier for frame data ("fast" or "slow").
    #[arg(long, value_parser = parse_tier)]
    tier: Option<StorageTier>,
    /// Override: artificial post-processing delay per frame (ms).
    #[arg(long)]
    consumer_delay_ms: Option<u64>,

    /// Override: detector box dropout probability.
    #[arg(long)]
    dropout_prob: Option<f64>,
    /// Override: detector box jitter std-dev (px).
    #[arg(long)]
    box_jitter_px: Option<f64>,
    /// Override: mask erosion (px).
    #[arg(long)]
    mask_erosion_px: Option<u32>,

    /// Override: goal/jaw "near pocket" radius (px).
    #[arg(long)]
    near_pocket_radius: Option<f64>,
    /// Override: significant velocity-change threshold (px/frame).
    #[arg(long)]
    velocity_change_threshold: Option<f64>,
    /// Override: ball-ball proximity radius (px).
    #[arg(long)]
    proximity_radius: Option<f64>,
    /// Override: perpendicular reversal tolerance (fraction).
    #[arg(long)]
    perpendicular_reversal_tolerance: Option<f64>,
    /// Override: parallel consistency tolerance (fraction).
    #[arg(long)]
    parallel_consistency_tolerance: Option<f64>,
    /// Override: rebound buffer-zone inset (px).
    #[arg(long)]
    buffer_margin: Option<f64>,
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    match s {
        "single" => Ok(Precision::Single),
        "half" => Ok(Precision::Half),
        _ => Err("expected \"single\" or \"half\"".into()),
    }
}

fn parse_tier(s: &str) -> Result<StorageTier, String> {
    match s {
        "fast" => Ok(StorageTier::Fast),
        "slow" => Ok(StorageTier::Slow),
        _ => Err("expected \"fast\" or \"slow\"".into()),
    }
}

/// A possibly-unbounded knob: a number, or "none"/"inf" for unbounded.
#[derive(Clone, Copy, Debug)]
struct Bound(Option<usize>);

impl std::str::FromStr for Bound {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" | "inf" | "unbounded" => Ok(Bound(None)),
            _ => s
                .parse::<usize>()
                .map(|v| Bound(Some(v)))
                .map_err(|e| format!("expected a number or \"none\": {e}")),
        }
    }
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate(*args),
        Command::Bench { grid, out } => bench(&grid, &out),
        Command::Replay { events } => replay(&events),
        Command::ExportEvents {
            scenario,
            config,
            out,
        } => export_events(&scenario, config.as_deref(), out.as_deref()),
    }
}

fn load_config(path: Option<&std::path::Path>) -> Result<PipelineConfig, CliError> {
    match path {
        Some(p) => PipelineConfig::from_file(p).map_err(|e| CliError::config(e.to_string())),
        None => Ok(PipelineConfig::default()),
    }
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let mut scenario =
        load_scenario(&args.scenario).map_err(|e| CliError::config(e.to_string()))?;
    let mut config = load_config(args.config.as_deref())?;

    if let Some(k) = args.buffer_size {
        config.propagation.buffer_size = k;
    }
    if let Some(Bound(m)) = args.max_track {
        config.propagation.max_frames_to_track = m;
    }
    if let Some(d) = args.detection_interval {
        config.propagation.detection_interval = d;
    }
    if let Some(Bound(r)) = args.retention {
        config.propagation.retention = r;
    }
    if let Some(a) = args.attention_limit {
        config.propagation.attention_limit = a;
    }
    if let Some(w) = args.update_window {
        config.propagation.update_window = Some(w);
    }
    if let Some(seed) = args.seed {
        scenario.noise.seed = seed;
    }
    if let Some(side) = args.internal_side {
        config.internal_side = side;
    }
    if let Some(p) = args.precision {
        config.precision = p;
    }
    if let Some(t) = args.tier {
        config.tier = t;
    }
    if let Some(ms) = args.consumer_delay_ms {
        config.consumer_delay_ms = ms;
    }
    if let Some(p) = args.dropout_prob {
        scenario.noise.dropout_prob = p;
    }
    if let Some(j) = args.box_jitter_px {
        scenario.noise.box_jitter_px = j;
    }
    if let Some(e) = args.mask_erosion_px {
        scenario.noise.mask_erosion_px = e;
    }
    let threshold_overrides = [
        args.near_pocket_radius,
        args.velocity_change_threshold,
        args.proximity_radius,
        args.perpendicular_reversal_tolerance,
        args.parallel_consistency_tolerance,
        args.buffer_margin,
    ];
    if threshold_overrides.iter().any(Option::is_some) {
        let mut t = config.thresholds_for(&scenario);
        if let Some(v) = args.near_pocket_radius {
            t.near_pocket_radius = v;
        }
        if let Some(v) = args.velocity_change_threshold {
            t.velocity_change_threshold = v;
        }
        if let Some(v) = args.proximity_radius {
            t.proximity_radius = v;
        }
        if let Some(v) = args.perpendicular_reversal_tolerance {
            t.perpendicular_reversal_tolerance = v;
        }
        if let Some(v) = args.parallel_consistency_tolerance {
            t.parallel_consistency_tolerance = v;
        }
        if let Some(v) = args.buffer_margin {
            t.buffer_margin = v;
        }
        config.thresholds = Some(t);
    }
    config
        .propagation
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;

    let preload = match &args.preload {
        Some(path) => {
            let bytes = std::fs::read(path)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            Some(
                PreloadBank::from_bytes(&bytes)
                    .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };

    let output = match run_with_preload(&config, &scenario, preload.as_ref()) {
        Ok(out) => out,
        Err(e) if e.is_config_error() => return Err(CliError::config(e.to_string())),
        Err(e) => {
            flag_partial_reports(&args);
            return Err(CliError::runtime(e.to_string()));
        }
    };

    if let Some(path) = &args.out_events {
        write_report(path, &events_jsonl(&output.events))
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    if let Some(path) = &args.out_memory_report {
        write_report(path, &memory_report_csv(&output.stats))
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    if let Some(path) = &args.export_preload {
        let bank = output
            .bank
            .export_preload(&args.preload_frames)
            .map_err(|e| CliError::runtime(e.to_string()))?;
        std::fs::write(path, bank.to_bytes()).map_err(|e| CliError::runtime(e.to_string()))?;
    }
    print_summary(&output);
    Ok(())
}

fn flag_partial_reports(args: &SimulateArgs) {
    for path in [&args.out_events, &args.out_memory_report]
        .into_iter()
        .flatten()
    {
        let _ = write_partial(path, "");
    }
}

fn print_summary(output: &RunOutput) {
    println!(
        "frames pushed: {}, processed: {}, propagated total: {}",
        output.frames_pushed, output.frames_processed, output.stats.frames_propagated_total
    );
    println!(
        "propagation calls: {}, peak resident frames: {}, peak staged frames: {}",
        output.stats.propagation_calls,
        output.stats.peak_resident_frames(),
        output.peak_segments
    );
    println!("events recorded: {}", output.events.total_events());
}

fn bench(grid_path: &std::path::Path, out: &std::path::Path) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(grid_path).map_err(|e| CliError::config(e.to_string()))?;
    let grid: BenchGrid =
        serde_json::from_str(&text).map_err(|e| CliError::config(e.to_string()))?;
    let scenario_path = if grid.scenario.is_relative() {
        grid_path
            .parent()
            .map(|p| p.join(&grid.scenario))
            .unwrap_or_else(|| grid.scenario.clone())
    } else {
        grid.scenario.clone()
    };
    let scenario = load_scenario(&scenario_path).map_err(|e| CliError::config(e.to_string()))?;
    let rows = run_grid(&grid, &scenario, &PipelineConfig::default());
    write_report(out, &rows_to_csv(&rows)).map_err(|e| CliError::runtime(e.to_string()))?;
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn replay(events: &std::path::Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(events).map_err(|e| CliError::config(e.to_string()))?;
    let records = parse_events_jsonl(&text).map_err(|e| CliError::config(e.to_string()))?;
    for r in &records {
        let balls = r
            .balls
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join("+");
        let location = r.location.as_deref().unwrap_or("-");
        let corrected = if r.revision_counter > 1 {
            format!("  (corrected x{})", r.revision_counter - 1)
        } else {
            String::new()
        };
        println!(
            "frame {:>6}  {:<9} balls {:<7} at {:<6}{}",
            r.frame, r.kind, balls, location, corrected
        );
    }
    println!("{} events", records.len());
    Ok(())
}

fn export_events(
    scenario: &std::path::Path,
    config: Option<&std::path::Path>,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let scenario = load_scenario(scenario).map_err(|e| CliError::config(e.to_string()))?;
    let config = load_config(config)?;
    config
        .propagation
        .validate()
        .map_err(|e| CliError::config(e.to_string()))?;
    let output = run_with_preload(&config, &scenario, None).map_err(|e| {
        if e.is_config_error() {
            CliError::config(e.to_string())
        } else {
            CliError::runtime(e.to_string())
        }
    })?;
    let jsonl = events_jsonl(&output.events);
    match out {
        Some(path) => {
            write_report(path, &jsonl).map_err(|e| CliError::runtime(e.to_string()))?
        }
        None => print!("{jsonl}"),
    }
    Ok(())
}
