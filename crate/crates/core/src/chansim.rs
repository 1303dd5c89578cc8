//! Ground-truth channel simulator: spreading loss, image-method multipath,
//! fractional delays, clock effects, and calibrated noise.
//!
//! Spherical mode propagates from the beacon (and its surface/bottom images)
//! to each hydrophone over the exact 3D distance, so elements nearer the
//! beacon receive earlier. Plane-wave mode uses the common range to the
//! array center plus the per-element steering offsets of the true bearing.
//! Fractional delays are realized as transform-domain phase ramps, exact for
//! band-limited signals.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::array::{steering_delays, ArrayGeometry};
use crate::clock::ClockModel;
use crate::detector::{FrameSource, MultichannelFrame};
use crate::fft;
use crate::waveform::ReferenceWaveform;

#[derive(Debug, Error, PartialEq)]
pub enum ChansimError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("frame of {frame} samples cannot hold the reference plus a {required}-sample delay")]
    FrameTooShort { frame: usize, required: usize },
}

/// North/east/depth position in meters; depth grows downward from the surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub north: f64,
    pub east: f64,
    pub depth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Direct,
    Surface,
    Bottom,
}

/// One propagation path and its boundary reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSpec {
    pub kind: PathKind,
    pub reflection_coeff: f64,
}

impl PathSpec {
    pub fn direct() -> Self {
        Self { kind: PathKind::Direct, reflection_coeff: 1.0 }
    }

    /// Pressure-release surface image.
    pub fn surface() -> Self {
        Self { kind: PathKind::Surface, reflection_coeff: -1.0 }
    }

    pub fn bottom() -> Self {
        Self { kind: PathKind::Bottom, reflection_coeff: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagationMode {
    Spherical,
    PlaneWave,
}

/// Ground truth for one ping: geometry, water column, paths, and noise level.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub beacon: Position,
    pub receiver: Position,
    pub receiver_heading_deg: f64,
    pub geometry: ArrayGeometry,
    pub sound_speed: f64,
    pub paths: Vec<PathSpec>,
    pub water_depth: f64,
    /// In-band SNR at the array in dB; `None` disables noise.
    pub snr_db: Option<f64>,
    pub mode: PropagationMode,
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), ChansimError> {
        if self.beacon.depth < 0.0 || self.receiver.depth < 0.0 {
            return Err(ChansimError::InvalidScene("depths must be non-negative".into()));
        }
        if self.water_depth < self.beacon.depth.max(self.receiver.depth) {
            return Err(ChansimError::InvalidScene("water depth above an endpoint".into()));
        }
        if !self.paths.iter().any(|p| p.kind == PathKind::Direct) {
            return Err(ChansimError::InvalidScene("direct path missing".into()));
        }
        if self.sound_speed <= 0.0 {
            return Err(ChansimError::InvalidScene("sound speed must be positive".into()));
        }
        if self.geometry.element_count() < 3 {
            return Err(ChansimError::InvalidScene("too few array elements".into()));
        }
        Ok(())
    }

    /// Beacon bearing in the vehicle frame (degrees from the nose, toward
    /// starboard), i.e. the relative bearing the receiver should estimate.
    pub fn true_relative_bearing_deg(&self) -> f64 {
        let dn = self.beacon.north - self.receiver.north;
        let de = self.beacon.east - self.receiver.east;
        let h = self.receiver_heading_deg.to_radians();
        let fwd = dn * h.cos() + de * h.sin();
        let stb = -dn * h.sin() + de * h.cos();
        crate::array::wrap_degrees(stb.atan2(fwd).to_degrees())
    }

    /// True slant range from the beacon to the array center.
    pub fn true_slant_range(&self) -> f64 {
        let dn = self.beacon.north - self.receiver.north;
        let de = self.beacon.east - self.receiver.east;
        let dz = self.beacon.depth - self.receiver.depth;
        (dn * dn + de * de + dz * dz).sqrt()
    }

    fn image_depth(&self, kind: PathKind) -> f64 {
        match kind {
            PathKind::Direct => self.beacon.depth,
            PathKind::Surface => -self.beacon.depth,
            PathKind::Bottom => 2.0 * self.water_depth - self.beacon.depth,
        }
    }

    /// Element positions in the north/east plane (at receiver depth).
    fn element_ne(&self) -> Vec<(f64, f64)> {
        let h = self.receiver_heading_deg.to_radians();
        self.geometry
            .positions
            .iter()
            .map(|&(x, y)| {
                (
                    self.receiver.north + x * h.cos() - y * h.sin(),
                    self.receiver.east + x * h.sin() + y * h.cos(),
                )
            })
            .collect()
    }
}

/// One arrival: absolute delay and linear amplitude (1/r spreading times the
/// boundary reflection coefficient).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathArrival {
    pub delay_s: f64,
    pub amplitude: f64,
}

/// Per-element, per-path arrivals for a scene.
pub fn path_delays(scene: &SceneSpec) -> Result<Vec<Vec<PathArrival>>, ChansimError> {
    scene.validate()?;
    let c = scene.sound_speed;
    match scene.mode {
        PropagationMode::Spherical => {
            let elements = scene.element_ne();
            Ok(elements
                .iter()
                .map(|&(en, ee)| {
                    scene
                        .paths
                        .iter()
                        .map(|p| {
                            let iz = scene.image_depth(p.kind);
                            let dn = scene.beacon.north - en;
                            let de = scene.beacon.east - ee;
                            let dz = iz - scene.receiver.depth;
                            let dist = (dn * dn + de * de + dz * dz).sqrt();
                            PathArrival { delay_s: dist / c, amplitude: p.reflection_coeff / dist }
                        })
                        .collect()
                })
                .collect())
        }
        PropagationMode::PlaneWave => {
            let theta = scene.true_relative_bearing_deg();
            let offsets = steering_delays(&scene.geometry, theta, c);
            Ok(offsets
                .iter()
                .map(|&tau| {
                    scene
                        .paths
                        .iter()
                        .map(|p| {
                            let iz = scene.image_depth(p.kind);
                            let dn = scene.beacon.north - scene.receiver.north;
                            let de = scene.beacon.east - scene.receiver.east;
                            let dz = iz - scene.receiver.depth;
                            let dist = (dn * dn + de * de + dz * dz).sqrt();
                            // Elements toward the beacon lead the array center.
                            PathArrival {
                                delay_s: dist / c - tau,
                                amplitude: p.reflection_coeff / dist,
                            }
                        })
                        .collect()
                })
                .collect())
        }
    }
}

/// Per-ping synthesis parameters.
#[derive(Debug, Clone, Copy)]
pub struct PingContext {
    /// Ping number; the trigger fires on the (index+1)-th PPS edge.
    pub ping_index: u64,
    pub frame_len: usize,
    /// Front-end gain applied linearly to the whole frame.
    pub gain_db: f64,
    pub seed: u64,
}

/// Synthesize one trigger-aligned multichannel frame.
///
/// The beacon transmits on its own PPS edge and the receiver samples from its
/// own, so the arrival positions carry the receiver-minus-beacon clock offset.
pub fn synthesize_frame(
    scene: &SceneSpec,
    reference: &ReferenceWaveform,
    clocks: (&ClockModel, &ClockModel),
    ctx: &PingContext,
) -> Result<MultichannelFrame, ChansimError> {
    let (beacon_clock, receiver_clock) = clocks;
    let arrivals = path_delays(scene)?;
    let fs = reference.sample_rate;
    let nominal = (ctx.ping_index + 1) as f64 * receiver_clock.pps_interval;
    let t_tx = beacon_clock.next_trigger(nominal - 0.5 * beacon_clock.pps_interval);
    let t_rx = receiver_clock.next_trigger(nominal - 0.5 * receiver_clock.pps_interval);
    let clock_shift = t_tx - t_rx;

    let max_delay = arrivals
        .iter()
        .flatten()
        .map(|a| a.delay_s + clock_shift)
        .fold(0.0_f64, f64::max);
    let required = reference.len() + (max_delay * fs).ceil() as usize;
    if ctx.frame_len < required {
        return Err(ChansimError::FrameTooShort { frame: ctx.frame_len, required });
    }

    let gain = 10.0_f64.powf(ctx.gain_db / 20.0);
    let mut channels: Vec<Vec<f64>> = arrivals
        .iter()
        .map(|paths| {
            let terms: Vec<(f64, f64)> =
                paths.iter().map(|a| (a.delay_s + clock_shift, a.amplitude)).collect();
            fft::delayed_sum(&reference.samples, ctx.frame_len, fs, &terms)
        })
        .collect();

    if let Some(snr_db) = scene.snr_db {
        // Calibrate white noise so the in-band SNR over the pulse equals snr_db.
        let (f1, f2) = reference.band();
        let bandwidth = (f2 - f1).max(1.0);
        let band_power: f64 = channels
            .iter()
            .map(|ch| {
                let spec = fft::half_spectrum(ch, ctx.frame_len);
                let bin_w = fs / ctx.frame_len as f64;
                let energy: f64 = spec
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| {
                        let f = *k as f64 * bin_w;
                        f >= f1 && f <= f2
                    })
                    .map(|(_, v)| 2.0 * v.norm_sqr())
                    .sum();
                energy / ctx.frame_len as f64 / reference.len() as f64
            })
            .sum::<f64>()
            / channels.len() as f64;
        let noise_power = band_power / 10.0_f64.powf(snr_db / 10.0);
        let sigma = (noise_power * fs / (2.0 * bandwidth)).sqrt();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed);
        for ch in channels.iter_mut() {
            for v in ch.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * n;
            }
        }
    }

    for ch in channels.iter_mut() {
        for v in ch.iter_mut() {
            *v *= gain;
        }
    }

    Ok(MultichannelFrame {
        channels,
        sample_rate: fs,
        trigger_epoch_ns: (t_rx.max(0.0) * 1e9).round() as u64,
        gain_db: ctx.gain_db,
        source: FrameSource::Simulated,
    })
}
