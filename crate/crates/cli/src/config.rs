//! YAML configuration: schema, defaults, and validation.
//!
//! Unknown keys are rejected with their path, duplicate keys are parse
//! errors with a line number, and every physical value is range-checked
//! before the pipeline is built.

use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown key `{path}` at line {line}")]
    UnknownKey { path: String, line: usize },
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Beacon,
    Receiver,
    Simulate,
    Replay,
    Sweep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpConfig {
    #[serde(default = "defaults::f_start")]
    pub f_start: f64,
    #[serde(default = "defaults::f_stop")]
    pub f_stop: f64,
    #[serde(default = "defaults::chirp_duration")]
    pub duration: f64,
    #[serde(default = "defaults::window")]
    pub window: WindowKind,
    #[serde(default = "defaults::tukey_alpha")]
    pub tukey_alpha: f64,
}

impl Default for ChirpConfig {
    fn default() -> Self {
        Self {
            f_start: defaults::f_start(),
            f_stop: defaults::f_stop(),
            duration: defaults::chirp_duration(),
            window: defaults::window(),
            tukey_alpha: defaults::tukey_alpha(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Rectangular,
    Tukey,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SoundSpeedConfig {
    Fixed {
        fixed: f64,
    },
    Water {
        temperature: f64,
        salinity: f64,
        depth: f64,
        #[serde(default = "defaults::latitude")]
        latitude: f64,
    },
}

impl Default for SoundSpeedConfig {
    fn default() -> Self {
        SoundSpeedConfig::Fixed { fixed: 1500.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayConfig {
    #[serde(default = "defaults::radius")]
    pub radius: f64,
    #[serde(default = "defaults::elements")]
    pub elements: usize,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self { radius: defaults::radius(), elements: defaults::elements() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandpassConfig {
    /// Defaults to chirp.f_start − 500.
    pub low: Option<f64>,
    /// Defaults to chirp.f_stop + 500.
    pub high: Option<f64>,
    #[serde(default = "defaults::taps")]
    pub taps: usize,
}

impl Default for BandpassConfig {
    fn default() -> Self {
        Self { low: None, high: None, taps: defaults::taps() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoaConfig {
    #[serde(default = "defaults::grid_deg")]
    pub grid_deg: f64,
    #[serde(default = "defaults::yes")]
    pub refine: bool,
}

impl Default for DoaConfig {
    fn default() -> Self {
        Self { grid_deg: defaults::grid_deg(), refine: true }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default = "defaults::threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub subsample: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self { threshold: defaults::threshold(), subsample: false }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgcConfig {
    #[serde(default = "defaults::agc_lower")]
    pub lower: f64,
    #[serde(default = "defaults::agc_upper")]
    pub upper: f64,
    #[serde(default = "defaults::agc_step")]
    pub step_db: f64,
    #[serde(default)]
    pub min_db: f64,
    #[serde(default = "defaults::agc_max")]
    pub max_db: f64,
    #[serde(default)]
    pub initial_db: f64,
}

impl Default for AgcConfig {
    fn default() -> Self {
        Self {
            lower: defaults::agc_lower(),
            upper: defaults::agc_upper(),
            step_db: defaults::agc_step(),
            min_db: 0.0,
            max_db: defaults::agc_max(),
            initial_db: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ClockConfig {
    #[serde(default)]
    pub initial_offset: f64,
    #[serde(default)]
    pub drift_rate: f64,
    /// Defaults to the ping interval.
    pub pps_interval: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ClocksConfig {
    #[serde(default)]
    pub beacon: ClockConfig,
    #[serde(default)]
    pub receiver: ClockConfig,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OutputConfig {
    Tcp { tcp_port: u16 },
    Serial { serial_path: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NavConfig {
    #[serde(default)]
    pub north: f64,
    #[serde(default)]
    pub east: f64,
    #[serde(default)]
    pub depth: f64,
    #[serde(default)]
    pub heading: f64,
    #[serde(default)]
    pub beacon_depth: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self { north: 0.0, east: 0.0, depth: 0.0, heading: 0.0, beacon_depth: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaptureFormat {
    Int16,
    Float32,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mode: Mode,
    #[serde(default = "defaults::sample_rate")]
    pub sample_rate: f64,
    #[serde(default = "defaults::ping_interval")]
    pub ping_interval: f64,
    #[serde(default)]
    pub chirp: ChirpConfig,
    #[serde(default)]
    pub sound_speed: SoundSpeedConfig,
    #[serde(default)]
    pub array: ArrayConfig,
    #[serde(default)]
    pub bandpass: BandpassConfig,
    #[serde(default)]
    pub doa: DoaConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub agc: AgcConfig,
    #[serde(default)]
    pub clocks: ClocksConfig,
    #[serde(default)]
    pub output: Option<OutputConfig>,
    #[serde(default)]
    pub log_dir: Option<PathBuf>,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default)]
    pub nav: NavConfig,
    /// Scene timeline for `simulate`.
    #[serde(default)]
    pub scene_file: Option<PathBuf>,
    /// Raw-frame file or directory for `replay`.
    #[serde(default)]
    pub frames_path: Option<PathBuf>,
    /// Ping count for `simulate` (defaults to the scene file's count).
    #[serde(default)]
    pub pings: Option<u64>,
    /// Defaults to round(ping_interval × sample_rate).
    #[serde(default)]
    pub frame_samples: Option<usize>,
    #[serde(default)]
    pub log_raw: bool,
    #[serde(default = "defaults::capture_format")]
    pub capture_format: CaptureFormat,
    /// Known clock correction subtracted from the measured TOF.
    #[serde(default)]
    pub clock_correction: f64,
}

mod defaults {
    use super::{CaptureFormat, WindowKind};

    pub fn sample_rate() -> f64 {
        48_000.0
    }
    pub fn ping_interval() -> f64 {
        1.0
    }
    pub fn f_start() -> f64 {
        10_000.0
    }
    pub fn f_stop() -> f64 {
        12_000.0
    }
    pub fn chirp_duration() -> f64 {
        0.05
    }
    pub fn window() -> WindowKind {
        WindowKind::Tukey
    }
    pub fn tukey_alpha() -> f64 {
        0.1
    }
    pub fn latitude() -> f64 {
        45.0
    }
    pub fn radius() -> f64 {
        0.075
    }
    pub fn elements() -> usize {
        6
    }
    pub fn taps() -> usize {
        255
    }
    pub fn grid_deg() -> f64 {
        1.0
    }
    pub fn yes() -> bool {
        true
    }
    pub fn threshold() -> f64 {
        0.3
    }
    pub fn agc_lower() -> f64 {
        100.0
    }
    pub fn agc_upper() -> f64 {
        2_000.0
    }
    pub fn agc_step() -> f64 {
        6.0
    }
    pub fn agc_max() -> f64 {
        48.0
    }
    pub fn seed() -> u64 {
        1
    }
    pub fn capture_format() -> CaptureFormat {
        CaptureFormat::Float32
    }
}

fn map_yaml_error(err: serde_yaml::Error) -> ConfigError {
    let line = err.location().map(|l| l.line()).unwrap_or(0);
    let message = err.to_string();
    if let Some(rest) = message.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return ConfigError::UnknownKey { path: rest[..end].to_string(), line };
        }
    }
    ConfigError::Parse { line, message }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<Config, ConfigError> {
    let cfg: Config = serde_yaml::from_str(text).map_err(map_yaml_error)?;
    validate(&cfg)?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<Config, ConfigError> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn bad(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation { key: key.to_string(), reason: reason.into() }
}

fn validate(cfg: &Config) -> Result<(), ConfigError> {
    if cfg.sample_rate <= 0.0 {
        return Err(bad("sample_rate", "must be positive"));
    }
    if cfg.ping_interval <= 0.0 {
        return Err(bad("ping_interval", "must be positive"));
    }
    let nyquist = cfg.sample_rate / 2.0;
    if cfg.chirp.f_stop >= nyquist {
        return Err(bad("chirp.f_stop", format!("{} Hz exceeds Nyquist {nyquist} Hz", cfg.chirp.f_stop)));
    }
    if cfg.chirp.f_start <= 0.0 || cfg.chirp.f_start > cfg.chirp.f_stop {
        return Err(bad("chirp.f_start", "band must satisfy 0 < f_start <= f_stop"));
    }
    if cfg.chirp.duration <= 0.0 || cfg.chirp.duration > cfg.ping_interval {
        return Err(bad("chirp.duration", "must be positive and within the ping interval"));
    }
    if !(0.0..=1.0).contains(&cfg.chirp.tukey_alpha) {
        return Err(bad("chirp.tukey_alpha", "must be in [0, 1]"));
    }
    if let SoundSpeedConfig::Fixed { fixed } = cfg.sound_speed {
        if !(1400.0..=1600.0).contains(&fixed) {
            return Err(bad("sound_speed.fixed", "must be within [1400, 1600] m/s"));
        }
    }
    if cfg.array.radius <= 0.0 {
        return Err(bad("array.radius", "must be positive"));
    }
    if cfg.array.elements < 3 {
        return Err(bad("array.elements", "need at least 3 elements"));
    }
    if let (Some(low), Some(high)) = (cfg.bandpass.low, cfg.bandpass.high) {
        if !(low > 0.0 && low < high && high < nyquist) {
            return Err(bad("bandpass", "need 0 < low < high < Nyquist"));
        }
    }
    if cfg.bandpass.taps % 2 == 0 || cfg.bandpass.taps < 31 {
        return Err(bad("bandpass.taps", "must be odd and at least 31"));
    }
    if cfg.doa.grid_deg <= 0.0 || cfg.doa.grid_deg > 120.0 {
        return Err(bad("doa.grid_deg", "must be in (0, 120]"));
    }
    if !(0.0..=1.0).contains(&cfg.detector.threshold) {
        return Err(bad("detector.threshold", "must be in [0, 1]"));
    }
    if cfg.agc.lower >= cfg.agc.upper {
        return Err(bad("agc", "lower threshold must be below upper"));
    }
    if cfg.agc.step_db <= 0.0 || cfg.agc.min_db > cfg.agc.max_db {
        return Err(bad("agc", "invalid step or gain range"));
    }
    for (name, clock) in [("clocks.beacon", &cfg.clocks.beacon), ("clocks.receiver", &cfg.clocks.receiver)] {
        if clock.drift_rate.abs() > 1e-6 {
            return Err(bad(name, "drift rate beyond the 1e-6 s/s sanity bound"));
        }
        if let Some(p) = clock.pps_interval {
            if p <= 0.0 {
                return Err(bad(name, "pps_interval must be positive"));
            }
        }
    }
    let frame_samples = cfg.frame_samples.unwrap_or((cfg.ping_interval * cfg.sample_rate).round() as usize);
    let ref_len = (cfg.chirp.duration * cfg.sample_rate).round() as usize;
    if frame_samples < ref_len {
        return Err(bad("frame_samples", "frame must hold at least one reference length"));
    }
    match cfg.mode {
        Mode::Simulate if cfg.scene_file.is_none() => {
            Err(bad("scene_file", "required in simulate mode"))
        }
        Mode::Replay if cfg.frames_path.is_none() => {
            Err(bad("frames_path", "required in replay mode"))
        }
        _ => Ok(()),
    }
}

impl Config {
    pub fn frame_samples(&self) -> usize {
        self.frame_samples
            .unwrap_or((self.ping_interval * self.sample_rate).round() as usize)
    }

    pub fn bandpass_edges(&self) -> (f64, f64) {
        let low = self.bandpass.low.unwrap_or(self.chirp.f_start - 500.0);
        let high = self.bandpass.high.unwrap_or(self.chirp.f_stop + 500.0);
        (low.max(1.0), high.min(self.sample_rate / 2.0 - 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_receiver_config_gets_defaults() {
        let cfg = parse_config("mode: receiver\nsample_rate: 48000\n").unwrap();
        assert_eq!(cfg.mode, Mode::Receiver);
        assert_eq!(cfg.chirp.f_start, 10_000.0);
        assert_eq!(cfg.chirp.f_stop, 12_000.0);
        assert_eq!(cfg.chirp.duration, 0.05);
        assert_eq!(cfg.ping_interval, 1.0);
        assert_eq!(cfg.bandpass_edges(), (9_500.0, 12_500.0));
        assert_eq!(cfg.frame_samples(), 48_000);
    }

    #[test]
    fn nyquist_violation_is_reported_with_key() {
        let err = parse_config("mode: receiver\nchirp: {f_stop: 30000}\n").unwrap_err();
        match err {
            ConfigError::Validation { key, reason } => {
                assert_eq!(key, "chirp.f_stop");
                assert!(reason.contains("Nyquist"), "{reason}");
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn duplicate_key_is_a_parse_error_with_line() {
        let err = parse_config("mode: receiver\nseed: 1\nseed: 2\n").unwrap_err();
        match err {
            ConfigError::Parse { line, message } => {
                assert!(message.contains("duplicate"), "{message}");
                assert!(line >= 1);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected_with_path() {
        let err = parse_config("mode: receiver\nbogus: 1\n").unwrap_err();
        match err {
            ConfigError::UnknownKey { path, line } => {
                assert_eq!(path, "bogus");
                assert_eq!(line, 2);
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn mission_inputs_required_per_mode() {
        assert!(matches!(
            parse_config("mode: simulate\n").unwrap_err(),
            ConfigError::Validation { .. }
        ));
        assert!(matches!(
            parse_config("mode: replay\n").unwrap_err(),
            ConfigError::Validation { .. }
        ));
        parse_config("mode: replay\nframes_path: capture.r2ub\n").unwrap();
    }

    #[test]
    fn output_variants_parse() {
        let cfg = parse_config("mode: receiver\noutput: {tcp_port: 5077}\n").unwrap();
        assert_eq!(cfg.output, Some(OutputConfig::Tcp { tcp_port: 5077 }));
        let cfg = parse_config("mode: receiver\noutput: {serial_path: /dev/ttyUSB0}\n").unwrap();
        assert!(matches!(cfg.output, Some(OutputConfig::Serial { .. })));
    }

    #[test]
    fn water_sound_speed_parses() {
        let cfg = parse_config(
            "mode: receiver\nsound_speed: {temperature: 20, salinity: 35, depth: 10}\n",
        )
        .unwrap();
        assert!(matches!(cfg.sound_speed, SoundSpeedConfig::Water { .. }));
    }
}
