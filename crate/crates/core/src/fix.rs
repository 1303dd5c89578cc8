//! Range/bearing geometry: TOF to slant range, horizontal projection,
//! compass-frame absolute position, and RMSE metrics.
//!
//! Frame conventions: the vehicle frame is x forward / y starboard, so the
//! beamformer's look angle is directly the relative bearing (clockwise from
//! the nose). Absolute azimuth = heading + relative bearing, clockwise from
//! north in the north/east plane.

use thiserror::Error;

use crate::array::wrap_degrees;

#[derive(Debug, Error, PartialEq)]
pub enum FixError {
    #[error("slant range is not positive (tof {tof} s, correction {correction} s)")]
    NonPositiveRange { tof: f64, correction: f64 },
    #[error("depth difference {depth_diff} m exceeds slant range {slant} m")]
    InvalidGeometry { slant: f64, depth_diff: f64 },
    #[error("estimate and truth series lengths differ: {estimates} vs {truth}")]
    LengthMismatch { estimates: usize, truth: usize },
    #[error("cannot compute metrics over an empty series")]
    EmptySeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixQuality {
    Ok,
    Suspect,
}

impl FixQuality {
    pub fn as_str(&self) -> &'static str {
        match self {
            FixQuality::Ok => "ok",
            FixQuality::Suspect => "suspect",
        }
    }
}

/// One published position solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionFix {
    pub trigger_epoch_ns: u64,
    pub tof_s: f64,
    pub slant_range_m: f64,
    pub relative_bearing_deg: f64,
    pub absolute_bearing_deg: f64,
    pub horizontal_range_m: f64,
    pub north_m: f64,
    pub east_m: f64,
    pub gain_db: f64,
    pub snr_db: f64,
    pub quality: FixQuality,
}

/// r = c·(tof − clock_correction); the result must be positive.
pub fn slant_range(tof: f64, c: f64, clock_correction: f64) -> Result<f64, FixError> {
    let r = c * (tof - clock_correction);
    if r <= 0.0 {
        return Err(FixError::NonPositiveRange { tof, correction: clock_correction });
    }
    Ok(r)
}

/// h = √(slant² − Δz²).
pub fn horizontal_project(slant: f64, depth_difference: f64) -> Result<f64, FixError> {
    if depth_difference.abs() > slant {
        return Err(FixError::InvalidGeometry { slant, depth_diff: depth_difference });
    }
    Ok((slant * slant - depth_difference * depth_difference).sqrt())
}

/// Beacon north/east from horizontal range, relative bearing, heading, and
/// the receiver position. Azimuth is measured clockwise from north.
pub fn absolute_position(
    horizontal: f64,
    relative_bearing_deg: f64,
    heading_deg: f64,
    receiver_ne: (f64, f64),
) -> (f64, f64) {
    let az = wrap_degrees(heading_deg + relative_bearing_deg).to_radians();
    (receiver_ne.0 + horizontal * az.cos(), receiver_ne.1 + horizontal * az.sin())
}

/// Componentwise and horizontal RMSE over matched series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub rmse_north: f64,
    pub rmse_east: f64,
    pub rmse_horizontal: f64,
    pub sample_count: usize,
}

pub fn rmse(estimates: &[(f64, f64)], truth: &[(f64, f64)]) -> Result<ErrorMetrics, FixError> {
    if estimates.len() != truth.len() {
        return Err(FixError::LengthMismatch { estimates: estimates.len(), truth: truth.len() });
    }
    if estimates.is_empty() {
        return Err(FixError::EmptySeries);
    }
    let n = estimates.len() as f64;
    let (mut sn, mut se) = (0.0, 0.0);
    for (est, tru) in estimates.iter().zip(truth.iter()) {
        sn += (est.0 - tru.0).powi(2);
        se += (est.1 - tru.1).powi(2);
    }
    Ok(ErrorMetrics {
        rmse_north: (sn / n).sqrt(),
        rmse_east: (se / n).sqrt(),
        rmse_horizontal: ((sn + se) / n).sqrt(),
        sample_count: estimates.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slant_range_basics() {
        assert_eq!(slant_range(0.05, 1500.0, 0.0).unwrap(), 75.0);
        // A 180 µs uncorrected offset biases the range by +0.27 m.
        let biased = slant_range(0.05 + 180e-6, 1500.0, 0.0).unwrap();
        assert!((biased - 75.27).abs() < 1e-9);
        assert!(matches!(
            slant_range(1e-5, 1500.0, 1e-4),
            Err(FixError::NonPositiveRange { .. })
        ));
    }

    #[test]
    fn horizontal_projection() {
        assert_eq!(horizontal_project(10.0, 6.0).unwrap(), 8.0);
        assert_eq!(horizontal_project(42.0, 0.0).unwrap(), 42.0);
        assert!(matches!(
            horizontal_project(5.0, 6.0),
            Err(FixError::InvalidGeometry { .. })
        ));
    }

    #[test]
    fn absolute_position_examples() {
        let close = |(a, b): (f64, f64), (c, d): (f64, f64)| {
            ((a - c).abs() < 1e-9 && (b - d).abs() < 1e-9, format!("({a},{b}) vs ({c},{d})"))
        };
        let (ok, msg) = close(absolute_position(10.0, 0.0, 90.0, (0.0, 0.0)), (0.0, 10.0));
        assert!(ok, "{msg}");
        let (ok, msg) = close(absolute_position(10.0, 0.0, 0.0, (0.0, 0.0)), (10.0, 0.0));
        assert!(ok, "{msg}");
        let (ok, msg) = close(absolute_position(10.0, 45.0, 45.0, (0.0, 0.0)), (0.0, 10.0));
        assert!(ok, "{msg}");
    }

    #[test]
    fn rmse_fixture_values() {
        let truth = vec![(0.0, 0.0), (10.0, -5.0), (2.0, 7.0)];
        let exact = rmse(&truth, &truth).unwrap();
        assert_eq!(exact.rmse_north, 0.0);
        assert_eq!(exact.rmse_east, 0.0);
        assert_eq!(exact.rmse_horizontal, 0.0);

        let north_off: Vec<(f64, f64)> = truth.iter().map(|&(n, e)| (n + 3.0, e)).collect();
        let m = rmse(&north_off, &truth).unwrap();
        assert!((m.rmse_north - 3.0).abs() < 1e-12);
        assert_eq!(m.rmse_east, 0.0);
        assert!((m.rmse_horizontal - 3.0).abs() < 1e-12);

        let both_off: Vec<(f64, f64)> = truth.iter().map(|&(n, e)| (n + 3.0, e + 4.0)).collect();
        let m = rmse(&both_off, &truth).unwrap();
        assert!((m.rmse_horizontal - 5.0).abs() < 1e-12);
        // Components recombine into the horizontal RMSE.
        let recomb = (m.rmse_north.powi(2) + m.rmse_east.powi(2)).sqrt();
        assert!((recomb - m.rmse_horizontal).abs() < 1e-9 * m.rmse_horizontal);
    }

    #[test]
    fn rmse_errors() {
        assert!(matches!(
            rmse(&[(0.0, 0.0)], &[]),
            Err(FixError::LengthMismatch { .. })
        ));
        assert!(matches!(rmse(&[], &[]), Err(FixError::EmptySeries)));
    }

    proptest! {
        #[test]
        fn heading_bearing_equivariance(
            h in 0.0..720.0f64,
            b in 0.0..360.0f64,
            delta in -180.0..180.0f64,
            range in 0.1..500.0f64,
        ) {
            let a = absolute_position(range, b, h, (12.0, -7.0));
            let c = absolute_position(range, b - delta, h + delta, (12.0, -7.0));
            prop_assert!((a.0 - c.0).abs() < 1e-6 && (a.1 - c.1).abs() < 1e-6);
        }
    }
}
