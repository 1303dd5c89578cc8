//! Scene timeline files for mission simulation: a list of ground-truth
//! states keyed by ping number, optionally interpolated between entries so a
//! moving platform is two waypoints, not two hundred entries.

use std::path::Path;

use r2usbl_core::array::ArrayGeometry;
use r2usbl_core::chansim::{PathSpec, Position, PropagationMode, SceneSpec};
use serde::Deserialize;

use crate::config::ConfigError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub north: f64,
    pub east: f64,
    pub depth: f64,
    #[serde(default)]
    pub heading: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PathEntry {
    Named(String),
    Full { kind: String, coeff: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineEntry {
    #[serde(default)]
    pub from_ping: u64,
    pub beacon: Option<PointConfig>,
    pub receiver: Option<PointConfig>,
    pub water_depth: Option<f64>,
    pub paths: Option<Vec<PathEntry>>,
    /// In-band SNR in dB; omit for noiseless.
    #[serde(default)]
    pub snr_db: Option<f64>,
    pub mode: Option<String>,
    /// Linearly interpolate positions and heading toward the next entry.
    #[serde(default)]
    pub interpolate_to_next: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub pings: u64,
    pub timeline: Vec<TimelineEntry>,
}

/// A resolved timeline ready to be queried per ping.
#[derive(Debug, Clone)]
pub struct SceneTimeline {
    pub pings: u64,
    entries: Vec<ResolvedEntry>,
}

#[derive(Debug, Clone)]
struct ResolvedEntry {
    from_ping: u64,
    beacon: Position,
    receiver: Position,
    heading_deg: f64,
    water_depth: f64,
    paths: Vec<PathSpec>,
    snr_db: Option<f64>,
    mode: PropagationMode,
    interpolate_to_next: bool,
}

fn parse_path(entry: &PathEntry) -> Result<PathSpec, ConfigError> {
    let (kind_str, coeff) = match entry {
        PathEntry::Named(name) => (name.as_str(), None),
        PathEntry::Full { kind, coeff } => (kind.as_str(), Some(*coeff)),
    };
    let default = match kind_str {
        "direct" => PathSpec::direct(),
        "surface" => PathSpec::surface(),
        "bottom" => PathSpec::bottom(),
        other => {
            return Err(ConfigError::Validation {
                key: "timeline.paths".into(),
                reason: format!("unknown path kind `{other}`"),
            })
        }
    };
    Ok(match coeff {
        Some(c) if (-1.0..=1.0).contains(&c) => PathSpec { reflection_coeff: c, ..default },
        Some(c) => {
            return Err(ConfigError::Validation {
                key: "timeline.paths.coeff".into(),
                reason: format!("reflection coefficient {c} outside [-1, 1]"),
            })
        }
        None => default,
    })
}

fn parse_mode(name: &str) -> Result<PropagationMode, ConfigError> {
    match name {
        "spherical" => Ok(PropagationMode::Spherical),
        "planewave" => Ok(PropagationMode::PlaneWave),
        other => Err(ConfigError::Validation {
            key: "timeline.mode".into(),
            reason: format!("unknown propagation mode `{other}`"),
        }),
    }
}

impl SceneTimeline {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let file: SceneFile = serde_yaml::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.location().map(|l| l.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        if file.timeline.is_empty() {
            return Err(ConfigError::Validation {
                key: "timeline".into(),
                reason: "needs at least one entry".into(),
            });
        }
        let mut entries: Vec<ResolvedEntry> = Vec::new();
        for (i, entry) in file.timeline.iter().enumerate() {
            let prev = entries.last();
            let point = |p: &PointConfig| Position { north: p.north, east: p.east, depth: p.depth };
            let beacon = match (&entry.beacon, prev) {
                (Some(p), _) => point(p),
                (None, Some(prev)) => prev.beacon,
                (None, None) => missing("timeline[0].beacon")?,
            };
            let (receiver, heading) = match (&entry.receiver, prev) {
                (Some(p), _) => (point(p), p.heading),
                (None, Some(prev)) => (prev.receiver, prev.heading_deg),
                (None, None) => missing("timeline[0].receiver")?,
            };
            let water_depth = match (entry.water_depth, prev) {
                (Some(w), _) => w,
                (None, Some(prev)) => prev.water_depth,
                (None, None) => missing("timeline[0].water_depth")?,
            };
            let paths = match (&entry.paths, prev) {
                (Some(list), _) => {
                    list.iter().map(parse_path).collect::<Result<Vec<_>, _>>()?
                }
                (None, Some(prev)) => prev.paths.clone(),
                (None, None) => vec![PathSpec::direct()],
            };
            let mode = match (&entry.mode, prev) {
                (Some(name), _) => parse_mode(name)?,
                (None, Some(prev)) => prev.mode,
                (None, None) => PropagationMode::Spherical,
            };
            let snr_db = if entry.snr_db.is_some() || i == 0 {
                entry.snr_db
            } else {
                prev.and_then(|p| p.snr_db)
            };
            if let Some(prev) = entries.last() {
                if entry.from_ping <= prev.from_ping {
                    return Err(ConfigError::Validation {
                        key: "timeline.from_ping".into(),
                        reason: "entries must be in strictly increasing ping order".into(),
                    });
                }
            }
            entries.push(ResolvedEntry {
                from_ping: entry.from_ping,
                beacon,
                receiver,
                heading_deg: heading,
                water_depth,
                paths,
                snr_db,
                mode,
                interpolate_to_next: entry.interpolate_to_next,
            });
        }
        Ok(Self { pings: file.pings, entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Ground truth for ping `p`, with waypoint interpolation where enabled.
    pub fn scene_at(&self, ping: u64, geometry: ArrayGeometry, sound_speed: f64) -> SceneSpec {
        let idx = match self.entries.iter().rposition(|e| e.from_ping <= ping) {
            Some(i) => i,
            None => 0,
        };
        let entry = &self.entries[idx];
        let mut beacon = entry.beacon;
        let mut receiver = entry.receiver;
        let mut heading = entry.heading_deg;
        if entry.interpolate_to_next {
            if let Some(next) = self.entries.get(idx + 1) {
                let span = (next.from_ping - entry.from_ping) as f64;
                let t = ((ping.saturating_sub(entry.from_ping)) as f64 / span).clamp(0.0, 1.0);
                let lerp = |a: f64, b: f64| a + t * (b - a);
                beacon = Position {
                    north: lerp(entry.beacon.north, next.beacon.north),
                    east: lerp(entry.beacon.east, next.beacon.east),
                    depth: lerp(entry.beacon.depth, next.beacon.depth),
                };
                receiver = Position {
                    north: lerp(entry.receiver.north, next.receiver.north),
                    east: lerp(entry.receiver.east, next.receiver.east),
                    depth: lerp(entry.receiver.depth, next.receiver.depth),
                };
                heading = lerp(entry.heading_deg, next.heading_deg);
            }
        }
        SceneSpec {
            beacon,
            receiver,
            receiver_heading_deg: heading,
            geometry,
            sound_speed,
            paths: entry.paths.clone(),
            water_depth: entry.water_depth,
            snr_db: entry.snr_db,
            mode: entry.mode,
        }
    }
}

fn missing<T>(key: &str) -> Result<T, ConfigError> {
    Err(ConfigError::Validation { key: key.into(), reason: "required in the first entry".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use r2usbl_core::circular_array;

    const BASIC: &str = "\
pings: 10
timeline:
  - beacon: {north: 0.0, east: 0.0, depth: 5.0}
    receiver: {north: -50.0, east: 0.0, depth: 3.0, heading: 90.0}
    water_depth: 30.0
    paths: [direct, surface, {kind: bottom, coeff: 0.4}]
    snr_db: 5.0
    interpolate_to_next: true
  - from_ping: 9
    receiver: {north: 50.0, east: 0.0, depth: 3.0, heading: 90.0}
";

    #[test]
    fn timeline_parses_and_interpolates() {
        let tl = SceneTimeline::parse(BASIC).unwrap();
        assert_eq!(tl.pings, 10);
        let g = circular_array(0.075, 6).unwrap();
        let first = tl.scene_at(0, g.clone(), 1500.0);
        assert_eq!(first.receiver.north, -50.0);
        assert_eq!(first.paths.len(), 3);
        assert_eq!(first.paths[2].reflection_coeff, 0.4);
        assert_eq!(first.snr_db, Some(5.0));
        let mid = tl.scene_at(4, g.clone(), 1500.0);
        let expected = -50.0 + 4.0 / 9.0 * 100.0;
        assert!((mid.receiver.north - expected).abs() < 1e-9);
        let last = tl.scene_at(9, g, 1500.0);
        assert_eq!(last.receiver.north, 50.0);
        // Inherited fields survive into the second entry.
        assert_eq!(last.paths.len(), 3);
        assert_eq!(last.snr_db, Some(5.0));
    }

    #[test]
    fn first_entry_must_be_complete() {
        let err = SceneTimeline::parse("pings: 1\ntimeline:\n  - water_depth: 10.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Validation { .. }));
    }

    #[test]
    fn unknown_path_kind_rejected() {
        let text = "\
pings: 1
timeline:
  - beacon: {north: 0.0, east: 0.0, depth: 1.0}
    receiver: {north: 9.0, east: 0.0, depth: 1.0}
    water_depth: 10.0
    paths: [sideways]
";
        assert!(SceneTimeline::parse(text).is_err());
    }
}
