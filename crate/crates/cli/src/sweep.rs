//! Anechoic-analog sweep harness: a noiseless plane-wave grid of
//! 1..23 m × 0..350° in 10° steps, the full receive chain per cell, per-cell
//! error rows, and aggregate RMSE.

use std::io::Write;
use std::path::Path;

use r2usbl_core::chansim::{synthesize_frame, PathSpec, PingContext, Position, PropagationMode, SceneSpec};
use r2usbl_core::clock::ClockModel;
use r2usbl_core::fix::{rmse, ErrorMetrics};
use r2usbl_core::pipeline::NavInput;

use crate::config::Config;
use crate::runner::build_setup;

pub const RANGES_M: std::ops::RangeInclusive<u32> = 1..=23;
pub const BEARING_STEP_DEG: f64 = 10.0;
pub const BEARING_COUNT: u32 = 36;

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub true_range_m: f64,
    pub true_bearing_deg: f64,
    pub est_range_m: f64,
    pub est_bearing_deg: f64,
    pub range_error_m: f64,
    pub bearing_error_deg: f64,
    pub status: String,
}

#[derive(Debug)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub metrics: ErrorMetrics,
    pub max_range_error_fraction: f64,
    pub max_bearing_error_deg: f64,
    pub failures: usize,
}

/// Run the grid with the config's chirp/array/bandpass/DOA settings. The
/// protocol itself is fixed: noiseless, plane-wave, ideal clocks, and
/// sub-sample peak interpolation for the precision this grid demands.
pub fn run_sweep(cfg: &Config) -> anyhow::Result<SweepReport> {
    let mut setup = build_setup(cfg)?;
    setup.pipeline.subsample = true;
    setup.pipeline.refine = true;
    let ideal = ClockModel::ideal();
    let depth = 5.0;
    let fs = cfg.sample_rate;
    let c = setup.pipeline.sound_speed;
    let max_delay = 23.0 / c;
    let frame_len =
        (setup.pipeline.reference.len() + (max_delay * fs).ceil() as usize + 64).next_power_of_two();

    let mut rows = Vec::with_capacity(828);
    let mut estimates = Vec::new();
    let mut truths = Vec::new();
    let mut failures = 0;
    let mut max_range_frac = 0.0_f64;
    let mut max_bearing = 0.0_f64;
    for range in RANGES_M {
        for bearing_idx in 0..BEARING_COUNT {
            let bearing = bearing_idx as f64 * BEARING_STEP_DEG;
            let az = bearing.to_radians();
            let range_m = range as f64;
            let scene = SceneSpec {
                beacon: Position {
                    north: range_m * az.cos(),
                    east: range_m * az.sin(),
                    depth,
                },
                receiver: Position { north: 0.0, east: 0.0, depth },
                receiver_heading_deg: 0.0,
                geometry: setup.pipeline.geometry.clone(),
                sound_speed: c,
                paths: vec![PathSpec::direct()],
                water_depth: 100.0,
                snr_db: None,
                mode: PropagationMode::PlaneWave,
            };
            let nav = NavInput {
                receiver_ne: (0.0, 0.0),
                receiver_depth_m: depth,
                heading_deg: 0.0,
                beacon_depth_m: depth,
            };
            let ctx = PingContext {
                ping_index: 0,
                frame_len,
                gain_db: 0.0,
                seed: cfg.seed,
            };
            let outcome = synthesize_frame(
                &scene,
                &setup.pipeline.reference,
                (&ideal, &ideal),
                &ctx,
            )
            .map_err(anyhow::Error::from)
            .and_then(|frame| setup.pipeline.process(&frame, &nav).map_err(anyhow::Error::from));
            match outcome {
                Ok(result) => {
                    let range_err = result.fix.slant_range_m - range_m;
                    let bearing_err = (result.fix.absolute_bearing_deg - bearing + 540.0)
                        .rem_euclid(360.0)
                        - 180.0;
                    max_range_frac = max_range_frac.max(range_err.abs() / range_m);
                    max_bearing = max_bearing.max(bearing_err.abs());
                    estimates.push((result.fix.north_m, result.fix.east_m));
                    truths.push((scene.beacon.north, scene.beacon.east));
                    rows.push(SweepRow {
                        true_range_m: range_m,
                        true_bearing_deg: bearing,
                        est_range_m: result.fix.slant_range_m,
                        est_bearing_deg: result.fix.absolute_bearing_deg,
                        range_error_m: range_err,
                        bearing_error_deg: bearing_err,
                        status: "ok".into(),
                    });
                }
                Err(err) => {
                    failures += 1;
                    rows.push(SweepRow {
                        true_range_m: range_m,
                        true_bearing_deg: bearing,
                        est_range_m: f64::NAN,
                        est_bearing_deg: f64::NAN,
                        range_error_m: f64::NAN,
                        bearing_error_deg: f64::NAN,
                        status: err.to_string(),
                    });
                }
            }
        }
    }
    let metrics = if estimates.is_empty() {
        ErrorMetrics { rmse_north: f64::NAN, rmse_east: f64::NAN, rmse_horizontal: f64::NAN, sample_count: 0 }
    } else {
        rmse(&estimates, &truths)?
    };
    Ok(SweepReport {
        rows,
        metrics,
        max_range_error_fraction: max_range_frac,
        max_bearing_error_deg: max_bearing,
        failures,
    })
}

pub fn write_sweep_csv(report: &SweepReport, path: &Path) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        file,
        "true_range_m,true_bearing_deg,est_range_m,est_bearing_deg,range_error_m,bearing_error_deg,status"
    )?;
    for row in &report.rows {
        writeln!(
            file,
            "{},{},{:.6},{:.4},{:.6},{:.4},{}",
            row.true_range_m,
            row.true_bearing_deg,
            row.est_range_m,
            row.est_bearing_deg,
            row.range_error_m,
            row.bearing_error_deg,
            row.status
        )?;
    }
    file.flush()
}
