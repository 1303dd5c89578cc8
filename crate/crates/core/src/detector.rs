//! Matched filtering, time-of-flight fusion, and target-segment extraction.
//!
//! Per channel i the matched filter output is
//! z_i[n] = Σ_{m=0}^{M−1} y_i[m]·x[m−n] for n ∈ [0, N+M−2]; a copy of the
//! reference delayed by d samples peaks at n = d. The fused TOF is the mean
//! of the per-channel peak positions divided by the sample rate.

use thiserror::Error;

use crate::fft;
use crate::waveform::ReferenceWaveform;

#[derive(Debug, Error, PartialEq)]
pub enum DetectorError {
    #[error("reference length {reference} exceeds frame length {frame}")]
    ReferenceLongerThanFrame { reference: usize, frame: usize },
    #[error("no channel peak above the detection threshold {threshold}")]
    NoPeakAboveFloor { threshold: f64 },
    #[error("segment start {start} is beyond the frame length {frame}")]
    SegmentOutOfFrame { start: usize, frame: usize },
    #[error("correlation input is degenerate (all zero or too short)")]
    DegenerateInput,
    #[error("TOF estimate is marked suspect; refusing to extract a segment")]
    SuspectQuality,
    #[error("frame has no channels")]
    EmptyFrame,
}

/// Where a frame came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameSource {
    Simulated,
    Replayed,
    Live,
}

/// One trigger-aligned block of multichannel samples.
#[derive(Debug, Clone)]
pub struct MultichannelFrame {
    /// One sample sequence per hydrophone channel, all the same length.
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: f64,
    /// Trigger time in nanoseconds since the mission epoch.
    pub trigger_epoch_ns: u64,
    /// Front-end gain in effect when the frame was captured.
    pub gain_db: f64,
    pub source: FrameSource,
}

impl MultichannelFrame {
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn samples_per_channel(&self) -> usize {
        self.channels.first().map(|c| c.len()).unwrap_or(0)
    }
}

/// Matched filter of one channel against the reference.
pub fn matched_filter(
    channel: &[f64],
    reference: &ReferenceWaveform,
) -> Result<Vec<f64>, DetectorError> {
    let n = reference.len();
    let m = channel.len();
    if n < 2 || m < n {
        return Err(DetectorError::ReferenceLongerThanFrame { reference: n, frame: m });
    }
    Ok(fft::correlate_full(channel, &reference.samples))
}

/// Per-channel matched-filter outputs plus peak statistics.
#[derive(Debug, Clone)]
pub struct CorrelationResult {
    /// z_i[n], one sequence of length N+M−1 per channel.
    pub channels: Vec<Vec<f64>>,
    /// argmax of each z_i (ties broken toward the lowest index).
    pub peak_indices: Vec<usize>,
    /// z_i at the peak.
    pub peak_values: Vec<f64>,
    /// Robust noise floor 1.4826·MAD of each z_i.
    pub noise_floors: Vec<f64>,
    /// Correlation coefficient of the peak against the best-matching
    /// N-sample window of the channel (1.0 for an exact copy).
    pub normalized_peaks: Vec<f64>,
    /// Sub-sample peak positions from envelope interpolation, when enabled.
    pub refined_peaks: Option<Vec<f64>>,
    pub reference_length: usize,
    pub frame_length: usize,
}

fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = i;
        }
    }
    best
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// 1.4826·median(|z − median(z)|), a robust sigma estimate.
fn mad_floor(z: &[f64]) -> f64 {
    let med = median_of(z.to_vec());
    1.4826 * median_of(z.iter().map(|&v| (v - med).abs()).collect())
}

/// Parabolic vertex of three samples around a peak, clamped to ±0.5 bins.
fn parabolic_offset(lm: f64, l0: f64, lp: f64) -> f64 {
    let denom = lm - 2.0 * l0 + lp;
    if denom >= 0.0 {
        return 0.0;
    }
    (0.5 * (lm - lp) / denom).clamp(-0.5, 0.5)
}

/// Run the matched filter on every channel of a frame and collect peak
/// statistics. `subsample` additionally interpolates the correlation
/// envelope for sub-sample peak positions.
pub fn correlate_frame(
    frame: &MultichannelFrame,
    reference: &ReferenceWaveform,
    subsample: bool,
) -> Result<CorrelationResult, DetectorError> {
    if frame.channels.is_empty() {
        return Err(DetectorError::EmptyFrame);
    }
    let n = reference.len();
    let m = frame.samples_per_channel();
    let ref_energy = reference.energy();
    let mut channels = Vec::with_capacity(frame.channel_count());
    let mut peak_indices = Vec::new();
    let mut peak_values = Vec::new();
    let mut noise_floors = Vec::new();
    let mut normalized_peaks = Vec::new();
    let mut refined = Vec::new();
    for ch in &frame.channels {
        if ch.len() < n || n < 2 {
            return Err(DetectorError::ReferenceLongerThanFrame { reference: n, frame: ch.len() });
        }
        let (z, env) = if subsample {
            let (z, env) = fft::correlate_with_envelope(ch, &reference.samples);
            (z, Some(env))
        } else {
            (fft::correlate_full(ch, &reference.samples), None)
        };
        let peak = argmax(&z);
        // Energy of the frame window the reference aligns with at the peak.
        let win_end = (peak + n).min(m);
        let window_energy: f64 = ch[peak.min(m - 1)..win_end].iter().map(|v| v * v).sum();
        let norm = ref_energy * window_energy;
        normalized_peaks.push(if norm > 0.0 { z[peak] / norm.sqrt() } else { 0.0 });
        if let Some(env) = env {
            let k = argmax(&env);
            if k == 0 || k + 1 >= env.len() {
                refined.push(k as f64);
            } else {
                let lm = env[k - 1].max(1e-300);
                let l0 = env[k].max(1e-300);
                let lp = env[k + 1].max(1e-300);
                refined.push(k as f64 + parabolic_offset(lm.ln(), l0.ln(), lp.ln()));
            }
        }
        peak_values.push(z[peak]);
        noise_floors.push(mad_floor(&z));
        peak_indices.push(peak);
        channels.push(z);
    }
    Ok(CorrelationResult {
        channels,
        peak_indices,
        peak_values,
        noise_floors,
        normalized_peaks,
        refined_peaks: if subsample { Some(refined) } else { None },
        reference_length: n,
        frame_length: m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TofQuality {
    Ok,
    Suspect,
}

/// Fused time of flight across channels.
#[derive(Debug, Clone)]
pub struct TofEstimate {
    /// Mean per-channel peak time in seconds.
    pub tof: f64,
    /// Peak position per channel, in samples (fractional when refined).
    pub per_channel_peaks: Vec<f64>,
    /// max − min of the per-channel peak times, seconds.
    pub spread: f64,
    pub quality: TofQuality,
}

/// Spread bound 2R/c + 2/fs beyond which an estimate is marked suspect.
pub fn transit_spread_bound(radius: f64, c: f64, sample_rate: f64) -> f64 {
    2.0 * radius / c + 2.0 / sample_rate
}

/// Fuse per-channel peaks into a single TOF (mean of argmax positions).
pub fn estimate_tof(
    corr: &CorrelationResult,
    sample_rate: f64,
    detection_threshold: f64,
    max_spread_s: f64,
) -> Result<TofEstimate, DetectorError> {
    if corr.normalized_peaks.iter().all(|&p| p < detection_threshold) {
        return Err(DetectorError::NoPeakAboveFloor { threshold: detection_threshold });
    }
    let peaks: Vec<f64> = match &corr.refined_peaks {
        Some(r) => r.clone(),
        None => corr.peak_indices.iter().map(|&i| i as f64).collect(),
    };
    let mean = peaks.iter().sum::<f64>() / peaks.len() as f64;
    let max = peaks.iter().fold(f64::MIN, |m, &v| m.max(v));
    let min = peaks.iter().fold(f64::MAX, |m, &v| m.min(v));
    let spread = (max - min) / sample_rate;
    let quality = if spread > max_spread_s { TofQuality::Suspect } else { TofQuality::Ok };
    Ok(TofEstimate { tof: mean / sample_rate, per_channel_peaks: peaks, spread, quality })
}

/// A×N matrix of channel samples aligned on the fused peak.
#[derive(Debug, Clone)]
pub struct Segment {
    pub rows: Vec<Vec<f64>>,
    /// First frame sample index of every row.
    pub start_index: usize,
    /// Set when the window ran past the frame end and was zero-filled.
    pub truncated: bool,
}

/// Extract the target segment: row i = channel i over
/// [k, k+N) with k = round(mean peak index).
pub fn extract_segment(
    frame: &MultichannelFrame,
    tof: &TofEstimate,
    ref_length: usize,
) -> Result<Segment, DetectorError> {
    if tof.quality != TofQuality::Ok {
        return Err(DetectorError::SuspectQuality);
    }
    let m = frame.samples_per_channel();
    let k = (tof.tof * frame.sample_rate).round() as i64;
    if k < 0 || k as usize >= m {
        return Err(DetectorError::SegmentOutOfFrame { start: k.max(0) as usize, frame: m });
    }
    let k = k as usize;
    let truncated = k + ref_length > m;
    let rows = frame
        .channels
        .iter()
        .map(|ch| {
            (k..k + ref_length).map(|i| ch.get(i).copied().unwrap_or(0.0)).collect()
        })
        .collect();
    Ok(Segment { rows, start_index: k, truncated })
}

/// Correlation-domain SNR in dB: 20·log10(peak / noise floor), capped at 60.
pub fn estimate_snr(z: &[f64]) -> Result<f64, DetectorError> {
    if z.len() < 100 || z.iter().all(|&v| v == 0.0) {
        return Err(DetectorError::DegenerateInput);
    }
    let peak = z[argmax(z)];
    let floor = mad_floor(z);
    if floor <= 0.0 {
        return if peak > 0.0 { Ok(60.0) } else { Err(DetectorError::DegenerateInput) };
    }
    Ok((20.0 * (peak / floor).log10()).min(60.0))
}
