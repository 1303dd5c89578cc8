//! Turns a validated config into a live receive chain and drives missions:
//! a producer (simulator, file reader, or stdin) feeds a bounded queue of
//! depth 2, a single consumer runs detection → beamforming → fix → emit.
//!
//! Simulated and replayed sources use blocking sends so every ping is
//! processed deterministically; the live stdin source never blocks the
//! producer and drops frames on overrun instead.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{sync_channel, TrySendError};
use std::sync::Arc;

use anyhow::Context;
use r2usbl_core::agc::{agc_update, AgcState};
use r2usbl_core::array::{circular_array, fixed_sound_speed, npl_sound_speed, WaterProperties};
use r2usbl_core::beamformer::degree_grid;
use r2usbl_core::chansim::{synthesize_frame, PingContext};
use r2usbl_core::clock::ClockModel;
use r2usbl_core::detector::MultichannelFrame;
use r2usbl_core::fix::PositionFix;
use r2usbl_core::pipeline::{NavInput, ReceiverPipeline};
use r2usbl_core::waveform::{generate_lfm, Window};

use crate::artifacts::MissionLogger;
use crate::config::{CaptureFormat, Config, ConfigError, SoundSpeedConfig, WindowKind};
use crate::output::FixSink;
use crate::rawfile::{self, SampleFormat};
use crate::scene::SceneTimeline;
use crate::sentence::format_fix_sentence;

/// Config resolved into live objects.
pub struct Setup {
    pub pipeline: ReceiverPipeline,
    pub agc: AgcState,
    pub beacon_clock: ClockModel,
    pub receiver_clock: ClockModel,
    pub frame_samples: usize,
    pub nav: NavInput,
    pub capture_format: SampleFormat,
}

fn config_err(key: &str, err: impl std::fmt::Display) -> ConfigError {
    ConfigError::Validation { key: key.to_string(), reason: err.to_string() }
}

pub fn build_setup(cfg: &Config) -> Result<Setup, ConfigError> {
    let window = match cfg.chirp.window {
        WindowKind::Rectangular => Window::Rectangular,
        WindowKind::Tukey => Window::Tukey(cfg.chirp.tukey_alpha),
    };
    let reference = generate_lfm(
        cfg.chirp.f_start,
        cfg.chirp.f_stop,
        cfg.chirp.duration,
        cfg.sample_rate,
        window,
    )
    .map_err(|e| config_err("chirp", e))?;
    let geometry = circular_array(cfg.array.radius, cfg.array.elements)
        .map_err(|e| config_err("array", e))?;
    let sound_speed = match cfg.sound_speed {
        SoundSpeedConfig::Fixed { fixed } => {
            fixed_sound_speed(fixed).map_err(|e| config_err("sound_speed", e))?
        }
        SoundSpeedConfig::Water { temperature, salinity, depth, latitude } => {
            npl_sound_speed(&WaterProperties {
                temperature_c: temperature,
                salinity_psu: salinity,
                depth_m: depth,
                latitude_deg: latitude,
            })
            .map_err(|e| config_err("sound_speed", e))?
        }
    };
    let (low, high) = cfg.bandpass_edges();
    let filter = r2usbl_core::design_bandpass(low, high, cfg.bandpass.taps, cfg.sample_rate)
        .map_err(|e| config_err("bandpass", e))?;
    let pipeline = ReceiverPipeline {
        reference,
        filter,
        geometry,
        sound_speed,
        theta_grid: degree_grid(cfg.doa.grid_deg),
        band: (cfg.chirp.f_start, cfg.chirp.f_stop),
        detection_threshold: cfg.detector.threshold,
        subsample: cfg.detector.subsample,
        refine: cfg.doa.refine,
        clock_correction_s: cfg.clock_correction,
    };
    let agc = AgcState::new(
        cfg.agc.initial_db,
        cfg.agc.lower,
        cfg.agc.upper,
        cfg.agc.step_db,
        cfg.agc.min_db,
        cfg.agc.max_db,
    )
    .map_err(|e| config_err("agc", e))?;
    let clock = |c: &crate::config::ClockConfig| {
        ClockModel::new(c.initial_offset, c.drift_rate, c.pps_interval.unwrap_or(cfg.ping_interval))
    };
    let beacon_clock = clock(&cfg.clocks.beacon).map_err(|e| config_err("clocks.beacon", e))?;
    let receiver_clock =
        clock(&cfg.clocks.receiver).map_err(|e| config_err("clocks.receiver", e))?;
    Ok(Setup {
        pipeline,
        agc,
        beacon_clock,
        receiver_clock,
        frame_samples: cfg.frame_samples(),
        nav: NavInput {
            receiver_ne: (cfg.nav.north, cfg.nav.east),
            receiver_depth_m: cfg.nav.depth,
            heading_deg: cfg.nav.heading,
            beacon_depth_m: cfg.nav.beacon_depth,
        },
        capture_format: match cfg.capture_format {
            CaptureFormat::Int16 => SampleFormat::Int16,
            CaptureFormat::Float32 => SampleFormat::Float32,
        },
    })
}

pub enum MissionSource {
    Simulate(SceneTimeline),
    Replay(Vec<PathBuf>),
    Stdin,
}

#[derive(Debug, Default)]
pub struct MissionSummary {
    pub pings_seen: u64,
    pub fixes: Vec<(u64, PositionFix)>,
    pub skipped: u64,
    pub dropped: u64,
}

struct QueuedPing {
    index: u64,
    frame: MultichannelFrame,
    nav: Option<NavInput>,
}

/// Shared AGC gain, read by the simulator producer and written after each
/// processed ping.
#[derive(Clone)]
struct SharedGain(Arc<AtomicU64>);

impl SharedGain {
    fn new(db: f64) -> Self {
        Self(Arc::new(AtomicU64::new(db.to_bits())))
    }
    fn get(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }
    fn set(&self, db: f64) {
        self.0.store(db.to_bits(), Ordering::Relaxed);
    }
}

pub fn run_mission(
    cfg: &Config,
    source: MissionSource,
    sink: &mut FixSink,
    echo_sentences: bool,
) -> anyhow::Result<MissionSummary> {
    let setup = build_setup(cfg)?;
    let mut logger = match &cfg.log_dir {
        Some(dir) => Some(
            MissionLogger::create(dir, cfg.log_raw, setup.capture_format)
                .with_context(|| format!("creating log dir {}", dir.display()))?,
        ),
        None => None,
    };
    let gain = SharedGain::new(setup.agc.gain_db);
    let dropped = Arc::new(AtomicU64::new(0));
    let (tx, rx) = sync_channel::<QueuedPing>(2);

    let producer: std::thread::JoinHandle<anyhow::Result<()>> = {
        let gain = gain.clone();
        let dropped = Arc::clone(&dropped);
        let reference = setup.pipeline.reference.clone();
        let geometry = setup.pipeline.geometry.clone();
        let sound_speed = setup.pipeline.sound_speed;
        let (beacon_clock, receiver_clock) = (setup.beacon_clock, setup.receiver_clock);
        let frame_samples = setup.frame_samples;
        let seed = cfg.seed;
        let pings = cfg.pings;
        std::thread::spawn(move || -> anyhow::Result<()> {
            match source {
                MissionSource::Simulate(timeline) => {
                    let total = pings.unwrap_or(timeline.pings).min(timeline.pings.max(1));
                    for ping in 0..total {
                        let scene = timeline.scene_at(ping, geometry.clone(), sound_speed);
                        let nav = NavInput {
                            receiver_ne: (scene.receiver.north, scene.receiver.east),
                            receiver_depth_m: scene.receiver.depth,
                            heading_deg: scene.receiver_heading_deg,
                            beacon_depth_m: scene.beacon.depth,
                        };
                        let ctx = PingContext {
                            ping_index: ping,
                            frame_len: frame_samples,
                            gain_db: gain.get(),
                            seed: seed.wrapping_add(ping),
                        };
                        let frame = synthesize_frame(
                            &scene,
                            &reference,
                            (&beacon_clock, &receiver_clock),
                            &ctx,
                        )?;
                        if tx.send(QueuedPing { index: ping, frame, nav: Some(nav) }).is_err() {
                            break;
                        }
                    }
                    Ok(())
                }
                MissionSource::Replay(paths) => {
                    let mut ping = 0;
                    for path in paths {
                        let mut file = std::fs::File::open(&path)
                            .with_context(|| format!("opening {}", path.display()))?;
                        while let Some(frame) = rawfile::read_frame(&mut file)? {
                            if tx.send(QueuedPing { index: ping, frame, nav: None }).is_err() {
                                return Ok(());
                            }
                            ping += 1;
                        }
                    }
                    Ok(())
                }
                MissionSource::Stdin => {
                    let stdin = std::io::stdin();
                    let mut lock = stdin.lock();
                    let mut ping = 0;
                    while let Some(frame) = rawfile::read_frame(&mut lock)? {
                        match tx.try_send(QueuedPing { index: ping, frame, nav: None }) {
                            Ok(()) => {}
                            Err(TrySendError::Full(_)) => {
                                dropped.fetch_add(1, Ordering::Relaxed);
                            }
                            Err(TrySendError::Disconnected(_)) => return Ok(()),
                        }
                        ping += 1;
                    }
                    Ok(())
                }
            }
        })
    };

    let mut summary = MissionSummary::default();
    let mut agc_state = setup.agc;
    for queued in rx.iter() {
        summary.pings_seen += 1;
        let nav = queued.nav.unwrap_or(setup.nav);
        if let Some(logger) = logger.as_mut() {
            logger.log_raw_frame(queued.index, &queued.frame)?;
        }
        match setup.pipeline.process(&queued.frame, &nav) {
            Ok(result) => {
                let update = agc_update(&agc_state, result.agc_peak);
                agc_state = update.state;
                gain.set(agc_state.gain_db);
                if let Some(logger) = logger.as_mut() {
                    logger.log_ping(queued.index, &result)?;
                }
                let line = format_fix_sentence(&result.fix);
                sink.publish(&line);
                if echo_sentences {
                    print!("{line}");
                }
                summary.fixes.push((queued.index, result.fix));
            }
            Err(err) => {
                summary.skipped += 1;
                if let Some(logger) = logger.as_mut() {
                    logger.log_event(queued.index, &err.to_string())?;
                }
            }
        }
    }
    producer.join().expect("producer thread panicked")?;
    summary.dropped = dropped.load(Ordering::Relaxed);
    if let Some(logger) = logger.as_mut() {
        if summary.dropped > 0 {
            logger.log_event(summary.pings_seen, &format!("{} frames dropped", summary.dropped))?;
        }
        logger.flush()?;
    }
    Ok(summary)
}

/// Replay-file discovery: a single record file or a directory of them.
pub fn replay_paths(path: &std::path::Path) -> anyhow::Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|entry| entry.ok())
            .map(|entry| entry.path())
            .filter(|p| p.extension().map(|e| e == "r2ub").unwrap_or(false))
            .collect();
        paths.sort();
        anyhow::ensure!(!paths.is_empty(), "no .r2ub files in {}", path.display());
        Ok(paths)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}
