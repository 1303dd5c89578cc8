//! Signal-processing core for a passive inverted ultra-short-baseline (piUSBL)
//! acoustic positioning toolkit.
//!
//! The receive chain is: bandpass filtering → per-channel matched filtering →
//! time-of-flight fusion → target-segment extraction → frequency-domain
//! conventional beamforming → bearing estimation → position fix. A channel
//! simulator ([`chansim`]) synthesizes multichannel frames from ground-truth
//! scenes (multipath images, spreading loss, clock offsets, noise) so the full
//! chain can be exercised without hardware.

pub mod agc;
pub mod array;
pub mod beamformer;
pub mod chansim;
pub mod clock;
pub mod detector;
mod fft;
pub mod fix;
pub mod pipeline;
pub mod waveform;

pub use agc::{agc_update, AgcCommand, AgcState, AgcUpdate};
pub use array::{circular_array, npl_sound_speed, steering_delays, ArrayGeometry, WaterProperties};
pub use beamformer::{broadband_beam_power, estimate_doa, BeamPattern, DoaEstimate};
pub use chansim::{path_delays, synthesize_frame, PathSpec, PropagationMode, SceneSpec};
pub use clock::ClockModel;
pub use detector::{
    correlate_frame, estimate_snr, estimate_tof, extract_segment, matched_filter,
    CorrelationResult, FrameSource, MultichannelFrame, TofEstimate, TofQuality,
};
pub use fix::{
    absolute_position, horizontal_project, rmse, slant_range, ErrorMetrics, FixQuality,
    PositionFix,
};
pub use pipeline::{NavInput, PingResult, ReceiverPipeline};
pub use waveform::{apply_filter, design_bandpass, generate_lfm, FirFilter, ReferenceWaveform, Window};
