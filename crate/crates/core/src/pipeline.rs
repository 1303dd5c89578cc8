//! The receive chain as one reusable unit: bandpass → matched filter → TOF →
//! segment → beamform → DOA → fix.
//!
//! Pings whose fused TOF is marked suspect are rejected with an error rather
//! than silently published; mission runners log and skip them.

use thiserror::Error;

use crate::array::ArrayGeometry;
use crate::beamformer::{
    broadband_beam_power, degree_grid, estimate_doa, BeamPattern, BeamformerError, DoaEstimate,
};
use crate::detector::{
    correlate_frame, estimate_snr, estimate_tof, extract_segment, transit_spread_bound,
    DetectorError, MultichannelFrame, TofEstimate,
};
use crate::fix::{
    absolute_position, horizontal_project, slant_range, FixError, FixQuality, PositionFix,
};
use crate::waveform::{apply_filter, design_bandpass, FirFilter, ReferenceWaveform, WaveformError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Waveform(#[from] WaveformError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Beamformer(#[from] BeamformerError),
    #[error(transparent)]
    Fix(#[from] FixError),
}

/// Navigation inputs consumed per ping (from config, scene truth, or replay
/// metadata).
#[derive(Debug, Clone, Copy)]
pub struct NavInput {
    pub receiver_ne: (f64, f64),
    pub receiver_depth_m: f64,
    pub heading_deg: f64,
    pub beacon_depth_m: f64,
}

/// Per-channel correlation diagnostics retained for logging.
#[derive(Debug, Clone)]
pub struct CorrelationSummary {
    pub peak_indices: Vec<usize>,
    pub peak_values: Vec<f64>,
    pub normalized_peaks: Vec<f64>,
    pub snr_db: Vec<f64>,
}

/// Everything one ping produces.
#[derive(Debug, Clone)]
pub struct PingResult {
    pub tof: TofEstimate,
    pub correlation: CorrelationSummary,
    pub pattern: BeamPattern,
    pub doa: DoaEstimate,
    pub fix: PositionFix,
    /// Maximum raw matched-filter peak, the AGC amplitude indicator.
    pub agc_peak: f64,
}

/// Static receive-chain configuration.
#[derive(Debug, Clone)]
pub struct ReceiverPipeline {
    pub reference: ReferenceWaveform,
    pub filter: FirFilter,
    pub geometry: ArrayGeometry,
    pub sound_speed: f64,
    pub theta_grid: Vec<f64>,
    pub band: (f64, f64),
    pub detection_threshold: f64,
    /// Envelope-interpolated sub-sample peaks (off = faithful integer argmax).
    pub subsample: bool,
    /// Parabolic refinement of the DOA grid peak.
    pub refine: bool,
    pub clock_correction_s: f64,
}

impl ReceiverPipeline {
    /// Standard chain for a reference chirp: bandpass at band ± 500 Hz with
    /// 255 taps, 1° grid with refinement, detection threshold 0.3.
    pub fn with_defaults(
        reference: ReferenceWaveform,
        geometry: ArrayGeometry,
        sound_speed: f64,
    ) -> Result<Self, WaveformError> {
        let (f1, f2) = reference.band();
        let filter = design_bandpass(
            (f1 - 500.0).max(1.0),
            (f2 + 500.0).min(reference.sample_rate / 2.0 - 1.0),
            255,
            reference.sample_rate,
        )?;
        Ok(Self {
            band: reference.band(),
            reference,
            filter,
            geometry,
            sound_speed,
            theta_grid: degree_grid(1.0),
            detection_threshold: 0.3,
            subsample: false,
            refine: true,
            clock_correction_s: 0.0,
        })
    }

    /// Run the full chain on one frame.
    pub fn process(
        &self,
        frame: &MultichannelFrame,
        nav: &NavInput,
    ) -> Result<PingResult, PipelineError> {
        let fs = frame.sample_rate;
        let filtered = apply_filter(frame, &self.filter)?;
        let corr = correlate_frame(&filtered, &self.reference, self.subsample)?;
        let bound = transit_spread_bound(self.geometry.radius, self.sound_speed, fs);
        let tof = estimate_tof(&corr, fs, self.detection_threshold, bound)?;
        let snr_db: Vec<f64> = corr
            .channels
            .iter()
            .map(|z| estimate_snr(z).unwrap_or(f64::NAN))
            .collect();
        let segment = extract_segment(&filtered, &tof, self.reference.len())?;
        let pattern = broadband_beam_power(
            &segment.rows,
            &self.geometry,
            self.sound_speed,
            fs,
            &self.theta_grid,
            self.band,
        )?;
        let doa = if self.refine {
            estimate_doa(&pattern)?
        } else {
            coarse_doa(&pattern)?
        };
        let slant = slant_range(tof.tof, self.sound_speed, self.clock_correction_s)?;
        let depth_diff = nav.beacon_depth_m - nav.receiver_depth_m;
        let horizontal = horizontal_project(slant, depth_diff)?;
        let (north, east) =
            absolute_position(horizontal, doa.theta_deg, nav.heading_deg, nav.receiver_ne);
        let agc_peak = corr.peak_values.iter().fold(0.0_f64, |m, &v| m.max(v));
        let best_snr = snr_db.iter().copied().filter(|v| v.is_finite()).fold(0.0_f64, f64::max);
        let fix = PositionFix {
            trigger_epoch_ns: frame.trigger_epoch_ns,
            tof_s: tof.tof,
            slant_range_m: slant,
            relative_bearing_deg: doa.theta_deg,
            absolute_bearing_deg: crate::array::wrap_degrees(nav.heading_deg + doa.theta_deg),
            horizontal_range_m: horizontal,
            north_m: north,
            east_m: east,
            gain_db: frame.gain_db,
            snr_db: best_snr,
            quality: FixQuality::Ok,
        };
        Ok(PingResult {
            tof,
            correlation: CorrelationSummary {
                peak_indices: corr.peak_indices,
                peak_values: corr.peak_values,
                normalized_peaks: corr.normalized_peaks,
                snr_db,
            },
            pattern,
            doa,
            fix,
            agc_peak,
        })
    }
}

/// Grid argmax without refinement (doa.refine = false).
fn coarse_doa(pattern: &BeamPattern) -> Result<DoaEstimate, BeamformerError> {
    let refined = estimate_doa(pattern)?;
    let step = pattern.angles_deg[1] - pattern.angles_deg[0];
    let snapped = (refined.theta_deg / step).round() * step;
    Ok(DoaEstimate { theta_deg: crate::array::wrap_degrees(snapped), ..refined })
}
