use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use r2usbl::config::{self, Config, ConfigError, Mode, OutputConfig};
use r2usbl::output::FixSink;
use r2usbl::rawfile;
use r2usbl::runner::{self, MissionSource};
use r2usbl::scene::SceneTimeline;
use r2usbl::sweep;
use r2usbl_core::detector::{FrameSource, MultichannelFrame};

#[derive(Parser)]
#[command(name = "r2usbl", about = "Software-defined piUSBL acoustic positioning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (YAML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the config's log directory.
    #[arg(long, global = true)]
    log_dir: Option<PathBuf>,
    /// Write per-cell CSV reports where a command produces them.
    #[arg(long, global = true)]
    emit_csv: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the config, write the reference waveform, print the
    /// transmit schedule.
    Beacon,
    /// Process raw frames arriving on stdin and publish fixes.
    Receive,
    /// Synthesize a mission from a scene timeline and process it.
    Simulate,
    /// Process recorded raw-frame files through the identical pipeline.
    Replay,
    /// Run the 828-cell range/bearing accuracy grid.
    Sweep,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_NO_FIXES: u8 = 4;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(EXIT_CONFIG)
            } else if err.downcast_ref::<std::io::Error>().is_some()
                || err.downcast_ref::<rawfile::RawFileError>().is_some()
            {
                ExitCode::from(EXIT_IO)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

fn load(cli: &Cli, mode: Mode) -> anyhow::Result<Config> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| ConfigError::Validation {
            key: "--config".into(),
            reason: "a config file is required".into(),
        })?;
    let mut cfg = config::load_config(path)?;
    cfg.mode = mode;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &cli.log_dir {
        cfg.log_dir = Some(dir.clone());
    }
    match mode {
        Mode::Simulate if cfg.scene_file.is_none() => Err(ConfigError::Validation {
            key: "scene_file".into(),
            reason: "required in simulate mode".into(),
        }
        .into()),
        Mode::Replay if cfg.frames_path.is_none() => Err(ConfigError::Validation {
            key: "frames_path".into(),
            reason: "required in replay mode".into(),
        }
        .into()),
        _ => Ok(cfg),
    }
}

fn open_sink(cfg: &Config) -> anyhow::Result<FixSink> {
    Ok(match &cfg.output {
        None => FixSink::none(),
        Some(OutputConfig::Tcp { tcp_port }) => FixSink::tcp(*tcp_port)?,
        Some(OutputConfig::Serial { serial_path }) => FixSink::serial(serial_path)?,
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Beacon => {
            let cfg = load(&cli, Mode::Beacon)?;
            let setup = runner::build_setup(&cfg)?;
            let reference = &setup.pipeline.reference;
            if let Some(dir) = &cfg.log_dir {
                std::fs::create_dir_all(dir)?;
                let frame = MultichannelFrame {
                    channels: vec![reference.samples.clone()],
                    sample_rate: reference.sample_rate,
                    trigger_epoch_ns: 0,
                    gain_db: 0.0,
                    source: FrameSource::Simulated,
                };
                let mut file = std::fs::File::create(dir.join("reference.r2ub"))?;
                rawfile::write_frame(&mut file, &frame, setup.capture_format)?;
            }
            println!(
                "reference: {:.0}-{:.0} Hz LFM, {} samples at {:.0} Hz",
                reference.f_start,
                reference.f_stop,
                reference.len(),
                reference.sample_rate
            );
            let mut t = 0.0;
            for i in 0..5 {
                t = setup.beacon_clock.next_trigger(t + 1e-9);
                println!("trigger {i}: t = {t:.9} s (local PPS edge)");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Receive => {
            let cfg = load(&cli, Mode::Receiver)?;
            let mut sink = open_sink(&cfg)?;
            let summary = runner::run_mission(&cfg, MissionSource::Stdin, &mut sink, true)?;
            finish(summary)
        }
        Command::Simulate => {
            let cfg = load(&cli, Mode::Simulate)?;
            let timeline = SceneTimeline::load(cfg.scene_file.as_ref().unwrap())?;
            let mut sink = open_sink(&cfg)?;
            let summary =
                runner::run_mission(&cfg, MissionSource::Simulate(timeline), &mut sink, true)?;
            finish(summary)
        }
        Command::Replay => {
            let cfg = load(&cli, Mode::Replay)?;
            let paths = runner::replay_paths(cfg.frames_path.as_ref().unwrap())?;
            let mut sink = open_sink(&cfg)?;
            let summary =
                runner::run_mission(&cfg, MissionSource::Replay(paths), &mut sink, true)?;
            finish(summary)
        }
        Command::Sweep => {
            let cfg = load(&cli, Mode::Sweep)?;
            let report = sweep::run_sweep(&cfg)?;
            println!(
                "sweep: {} cells, {} failures, max range error {:.4}% of slant, max bearing error {:.4} deg",
                report.rows.len(),
                report.failures,
                report.max_range_error_fraction * 100.0,
                report.max_bearing_error_deg
            );
            println!(
                "aggregate RMSE: north {:.4} m, east {:.4} m, horizontal {:.4} m over {} cells",
                report.metrics.rmse_north,
                report.metrics.rmse_east,
                report.metrics.rmse_horizontal,
                report.metrics.sample_count
            );
            if cli.emit_csv {
                let dir = cfg.log_dir.clone().unwrap_or_else(|| PathBuf::from("."));
                let path = dir.join("sweep.csv");
                sweep::write_sweep_csv(&report, &path)?;
                println!("wrote {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn finish(summary: runner::MissionSummary) -> anyhow::Result<ExitCode> {
    eprintln!(
        "mission: {} pings, {} fixes, {} skipped, {} dropped",
        summary.pings_seen,
        summary.fixes.len(),
        summary.skipped,
        summary.dropped
    );
    if summary.fixes.is_empty() {
        return Ok(ExitCode::from(EXIT_NO_FIXES));
    }
    Ok(ExitCode::SUCCESS)
}
