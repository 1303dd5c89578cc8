//! Reference-waveform generation and receive-side bandpass filtering.
//!
//! The transmitted signal is a linear frequency-modulated (LFM) chirp,
//! unit-peak normalized. The receive filter is a linear-phase windowed-sinc
//! FIR bandpass whose integer group delay is compensated exactly on apply,
//! so in-band content suffers zero net time shift.

use thiserror::Error;

use crate::detector::MultichannelFrame;
use crate::fft;

#[derive(Debug, Error, PartialEq)]
pub enum WaveformError {
    #[error("chirp band [{f_start}, {f_stop}] Hz exceeds Nyquist ({nyquist} Hz) or is inverted")]
    BandExceedsNyquist { f_start: f64, f_stop: f64, nyquist: f64 },
    #[error("duration {0} s does not yield at least two samples")]
    NonPositiveDuration(f64),
    #[error("tukey taper fraction {0} outside [0, 1]")]
    InvalidWindow(f64),
    #[error("bandpass edges [{low}, {high}] Hz invalid for sample rate {sample_rate} Hz")]
    InvalidBand { low: f64, high: f64, sample_rate: f64 },
    #[error("tap count {0} must be odd")]
    EvenTapCount(usize),
    #[error("tap count {0} below minimum of 31")]
    TooFewTaps(usize),
    #[error("frame sample rate {frame} Hz does not match filter sample rate {filter} Hz")]
    SampleRateMismatch { frame: f64, filter: f64 },
}

/// Amplitude taper applied to the chirp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    Rectangular,
    /// Tukey (tapered cosine) window; the parameter is the tapered fraction.
    Tukey(f64),
}

impl Window {
    fn value(&self, i: usize, len: usize) -> f64 {
        match *self {
            Window::Rectangular => 1.0,
            Window::Tukey(alpha) => {
                if alpha <= 0.0 || len < 2 {
                    return 1.0;
                }
                let edge = alpha * (len - 1) as f64 / 2.0;
                let i = i as f64;
                let last = (len - 1) as f64;
                if i < edge {
                    0.5 * (1.0 + (std::f64::consts::PI * (i / edge - 1.0)).cos())
                } else if i > last - edge {
                    0.5 * (1.0 + (std::f64::consts::PI * ((last - i) / edge - 1.0)).cos())
                } else {
                    1.0
                }
            }
        }
    }

    /// Mean of w² over the window; 1 for rectangular, 1 − 5α/8 for Tukey.
    pub fn energy_factor(&self) -> f64 {
        match *self {
            Window::Rectangular => 1.0,
            Window::Tukey(alpha) => 1.0 - 5.0 * alpha / 8.0,
        }
    }
}

/// The transmitted LFM chirp and its band/duration metadata.
#[derive(Debug, Clone)]
pub struct ReferenceWaveform {
    /// Unit-peak amplitude sequence.
    pub samples: Vec<f64>,
    pub f_start: f64,
    pub f_stop: f64,
    pub duration: f64,
    pub sample_rate: f64,
    pub window: Window,
}

impl ReferenceWaveform {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Σ x² of the reference.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// (f_start, f_stop) of the sweep.
    pub fn band(&self) -> (f64, f64) {
        (self.f_start, self.f_stop)
    }
}

/// Generate the reference LFM chirp.
///
/// Phase is φ(t) = 2π(f_start·t + (f_stop−f_start)·t²/(2·duration)); samples
/// are window(t)·sin(φ(t)), normalized to unit peak. A zero sweep
/// (f_start == f_stop) produces a pure tone.
pub fn generate_lfm(
    f_start: f64,
    f_stop: f64,
    duration: f64,
    sample_rate: f64,
    window: Window,
) -> Result<ReferenceWaveform, WaveformError> {
    let nyquist = sample_rate / 2.0;
    if !(f_start >= 0.0 && f_start <= f_stop && f_stop > 0.0 && f_stop < nyquist) {
        return Err(WaveformError::BandExceedsNyquist { f_start, f_stop, nyquist });
    }
    if let Window::Tukey(alpha) = window {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(WaveformError::InvalidWindow(alpha));
        }
    }
    let len = (duration * sample_rate).round() as i64;
    if duration <= 0.0 || len < 2 {
        return Err(WaveformError::NonPositiveDuration(duration));
    }
    let len = len as usize;
    let sweep_rate = (f_stop - f_start) / (2.0 * duration);
    let mut samples: Vec<f64> = (0..len)
        .map(|i| {
            let t = i as f64 / sample_rate;
            let phase = 2.0 * std::f64::consts::PI * (f_start * t + sweep_rate * t * t);
            window.value(i, len) * phase.sin()
        })
        .collect();
    let peak = samples.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));
    if peak > 0.0 {
        for v in samples.iter_mut() {
            *v /= peak;
        }
    }
    Ok(ReferenceWaveform { samples, f_start, f_stop, duration, sample_rate, window })
}

/// Linear-phase FIR bandpass; odd tap count, symmetric taps, integer group
/// delay of (taps−1)/2 samples.
#[derive(Debug, Clone)]
pub struct FirFilter {
    pub taps: Vec<f64>,
    pub low_cut: f64,
    pub high_cut: f64,
    pub sample_rate: f64,
}

impl FirFilter {
    pub fn group_delay_samples(&self) -> usize {
        (self.taps.len() - 1) / 2
    }

    /// Magnitude of the frequency response at `freq` Hz.
    pub fn magnitude_at(&self, freq: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI * freq / self.sample_rate;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &t) in self.taps.iter().enumerate() {
            re += t * (w * k as f64).cos();
            im -= t * (w * k as f64).sin();
        }
        (re * re + im * im).sqrt()
    }
}

/// Design a windowed-sinc (Hamming) bandpass filter with unity gain at the
/// band center.
pub fn design_bandpass(
    low_cut: f64,
    high_cut: f64,
    tap_count: usize,
    sample_rate: f64,
) -> Result<FirFilter, WaveformError> {
    if !(low_cut > 0.0 && low_cut < high_cut && high_cut < sample_rate / 2.0) {
        return Err(WaveformError::InvalidBand { low: low_cut, high: high_cut, sample_rate });
    }
    if tap_count % 2 == 0 {
        return Err(WaveformError::EvenTapCount(tap_count));
    }
    if tap_count < 31 {
        return Err(WaveformError::TooFewTaps(tap_count));
    }
    let mid = (tap_count - 1) / 2;
    // Widen the design cutoffs by half the Hamming transition band so the
    // −6 dB points land outside [low_cut, high_cut].
    let transition = 3.3 / tap_count as f64 * sample_rate;
    let fl = (low_cut - transition / 2.0).max(0.55 * low_cut) / sample_rate;
    let fh = (high_cut + transition / 2.0).min(0.499 * sample_rate) / sample_rate;
    let mut taps = vec![0.0; tap_count];
    for k in 0..=mid {
        let n = (mid - k) as f64;
        let ideal = if n == 0.0 {
            2.0 * (fh - fl)
        } else {
            ((2.0 * std::f64::consts::PI * fh * n).sin()
                - (2.0 * std::f64::consts::PI * fl * n).sin())
                / (std::f64::consts::PI * n)
        };
        let hamming =
            0.54 + 0.46 * (std::f64::consts::PI * n / mid as f64).cos();
        taps[k] = ideal * hamming;
        // Mirror so symmetry is bit-exact.
        taps[tap_count - 1 - k] = taps[k];
    }
    let mut filter = FirFilter { taps: taps.clone(), low_cut, high_cut, sample_rate };
    let center_gain = filter.magnitude_at((low_cut + high_cut) / 2.0);
    if center_gain > 0.0 {
        for t in taps.iter_mut() {
            *t /= center_gain;
        }
    }
    filter.taps = taps;
    Ok(filter)
}

/// Total-sample threshold above which convolution moves to the transform
/// domain; both routes agree to floating-point precision.
const FAST_CONV_THRESHOLD: usize = 4096;

/// Bandpass-filter every channel of a frame with exact group-delay
/// compensation; output length equals input length, edges zero-padded.
pub fn apply_filter(
    frame: &MultichannelFrame,
    filter: &FirFilter,
) -> Result<MultichannelFrame, WaveformError> {
    if frame.sample_rate != filter.sample_rate {
        return Err(WaveformError::SampleRateMismatch {
            frame: frame.sample_rate,
            filter: filter.sample_rate,
        });
    }
    let delay = filter.group_delay_samples();
    let channels = frame
        .channels
        .iter()
        .map(|ch| {
            let full = if ch.len() + filter.taps.len() > FAST_CONV_THRESHOLD {
                fft::convolve_fft(ch, &filter.taps)
            } else {
                fft::convolve_direct(ch, &filter.taps)
            };
            // Advance by the group delay; pad past the convolution tail.
            (0..ch.len()).map(|i| full.get(i + delay).copied().unwrap_or(0.0)).collect()
        })
        .collect();
    Ok(MultichannelFrame { channels, ..frame.clone() })
}
