//! Threshold-driven gain state machine.
//!
//! The signal amplitude indicator is the maximum matched-filter peak across
//! channels. Below the lower threshold the gain steps up, above the upper
//! threshold it steps down, otherwise it holds; steps clamp at the gain
//! bounds and report saturation.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AgcError {
    #[error("invalid AGC bounds: lower {lower} must be below upper {upper}")]
    BadThresholds { lower: f64, upper: f64 },
    #[error("invalid AGC gain range [{min}, {max}] or step {step}")]
    BadGainRange { min: f64, max: f64, step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgcState {
    pub gain_db: f64,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub step_db: f64,
    pub min_gain_db: f64,
    pub max_gain_db: f64,
}

impl AgcState {
    pub fn new(
        gain_db: f64,
        lower_threshold: f64,
        upper_threshold: f64,
        step_db: f64,
        min_gain_db: f64,
        max_gain_db: f64,
    ) -> Result<Self, AgcError> {
        if lower_threshold >= upper_threshold {
            return Err(AgcError::BadThresholds { lower: lower_threshold, upper: upper_threshold });
        }
        if step_db <= 0.0 || min_gain_db > max_gain_db {
            return Err(AgcError::BadGainRange { min: min_gain_db, max: max_gain_db, step: step_db });
        }
        Ok(Self {
            gain_db: gain_db.clamp(min_gain_db, max_gain_db),
            lower_threshold,
            upper_threshold,
            step_db,
            min_gain_db,
            max_gain_db,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgcCommand {
    Raise,
    Lower,
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgcUpdate {
    pub state: AgcState,
    pub command: AgcCommand,
    /// Set when a commanded step was clamped at a gain bound.
    pub saturated: bool,
}

/// One gain update from the latest correlation peak. Total and pure: the same
/// (state, peak) always yields the same result.
pub fn agc_update(state: &AgcState, peak: f64) -> AgcUpdate {
    let mut next = *state;
    let (command, target) = if peak < state.lower_threshold {
        (AgcCommand::Raise, state.gain_db + state.step_db)
    } else if peak > state.upper_threshold {
        (AgcCommand::Lower, state.gain_db - state.step_db)
    } else {
        (AgcCommand::Hold, state.gain_db)
    };
    let clamped = target.clamp(state.min_gain_db, state.max_gain_db);
    next.gain_db = clamped;
    AgcUpdate { state: next, command, saturated: clamped != target }
}
