//! Circular hydrophone array geometry, sound speed, and steering delays.
//!
//! Element a (1-based) of an A-element circle of radius R sits at
//! (R·cos(2πa/A), R·sin(2πa/A)) in the vehicle frame. The relative steering
//! delay toward look angle θ is Δτ_a(θ) = (x_a·cosθ + y_a·sinθ)/c.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ArrayError {
    #[error("array needs at least 3 elements, got {0}")]
    TooFewElements(usize),
    #[error("array radius {0} m must be positive")]
    NonPositiveRadius(f64),
    #[error("{quantity} = {value} outside validity range [{low}, {high}]")]
    OutOfValidityRange { quantity: &'static str, value: f64, low: f64, high: f64 },
}

/// Planar circular array in the vehicle frame (x forward, y starboard).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub radius: f64,
    pub positions: Vec<(f64, f64)>,
}

impl ArrayGeometry {
    pub fn element_count(&self) -> usize {
        self.positions.len()
    }
}

/// Build a regular circular array of `element_count` hydrophones.
pub fn circular_array(radius: f64, element_count: usize) -> Result<ArrayGeometry, ArrayError> {
    if element_count < 3 {
        return Err(ArrayError::TooFewElements(element_count));
    }
    if radius <= 0.0 {
        return Err(ArrayError::NonPositiveRadius(radius));
    }
    let positions = (1..=element_count)
        .map(|a| {
            let ang = 2.0 * std::f64::consts::PI * a as f64 / element_count as f64;
            (radius * ang.cos(), radius * ang.sin())
        })
        .collect();
    Ok(ArrayGeometry { radius, positions })
}

/// In-situ water properties driving the sound-speed polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaterProperties {
    pub temperature_c: f64,
    pub salinity_psu: f64,
    pub depth_m: f64,
    pub latitude_deg: f64,
}

/// Sound speed from temperature, salinity, depth, and latitude
/// (Leroy–Robinson–Goldsmith 2008 polynomial).
pub fn npl_sound_speed(props: &WaterProperties) -> Result<f64, ArrayError> {
    let WaterProperties { temperature_c: t, salinity_psu: s, depth_m: z, latitude_deg: lat } =
        *props;
    if !(-2.0..=40.0).contains(&t) {
        return Err(ArrayError::OutOfValidityRange {
            quantity: "temperature",
            value: t,
            low: -2.0,
            high: 40.0,
        });
    }
    if !(0.0..=42.0).contains(&s) {
        return Err(ArrayError::OutOfValidityRange {
            quantity: "salinity",
            value: s,
            low: 0.0,
            high: 42.0,
        });
    }
    if z < 0.0 {
        return Err(ArrayError::OutOfValidityRange {
            quantity: "depth",
            value: z,
            low: 0.0,
            high: f64::INFINITY,
        });
    }
    Ok(1402.5 + 5.0 * t - 5.44e-2 * t * t + 2.1e-4 * t * t * t
        + 1.33 * s - 1.23e-2 * s * t + 8.7e-5 * s * t * t
        + 1.56e-2 * z + 2.55e-7 * z * z - 7.3e-12 * z * z * z
        + 1.2e-6 * z * (lat - 45.0)
        - 9.5e-13 * t * z * z * z
        + 3e-7 * t * t * z
        + 1.43e-5 * s * z)
}

/// A fixed override for the sound speed, validated against a plausible range.
pub fn fixed_sound_speed(c: f64) -> Result<f64, ArrayError> {
    if !(1400.0..=1600.0).contains(&c) {
        return Err(ArrayError::OutOfValidityRange {
            quantity: "sound speed",
            value: c,
            low: 1400.0,
            high: 1600.0,
        });
    }
    Ok(c)
}

/// Per-element relative delays Δτ_a(θ) for a look angle in degrees.
pub fn steering_delays(geometry: &ArrayGeometry, theta_deg: f64, c: f64) -> Vec<f64> {
    let theta = theta_deg.to_radians();
    let (ct, st) = (theta.cos(), theta.sin());
    geometry.positions.iter().map(|&(x, y)| (x * ct + y * st) / c).collect()
}

/// Wrap an angle in degrees into [0, 360).
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg % 360.0;
    if w < 0.0 {
        w + 360.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn six_element_array_matches_position_formula() {
        let g = circular_array(0.075, 6).unwrap();
        // Element a=6 sits at angle 2π, i.e. (R, 0).
        let (x, y) = g.positions[5];
        assert!((x - 0.075).abs() < 1e-15 && y.abs() < 1e-12);
        for &(px, py) in &g.positions {
            assert!(((px * px + py * py).sqrt() - 0.075).abs() < 1e-12);
        }
        let (sx, sy) = g.positions.iter().fold((0.0, 0.0), |(ax, ay), &(x, y)| (ax + x, ay + y));
        assert!(sx.abs() < 1e-12 && sy.abs() < 1e-12, "centroid at origin");
    }

    #[test]
    fn too_few_elements_rejected() {
        assert_eq!(circular_array(0.075, 2).unwrap_err(), ArrayError::TooFewElements(2));
    }

    #[test]
    fn npl_regression_point() {
        // Frozen from a one-off evaluation of the published polynomial.
        let c = npl_sound_speed(&WaterProperties {
            temperature_c: 20.0,
            salinity_psu: 0.0,
            depth_m: 0.0,
            latitude_deg: 45.0,
        })
        .unwrap();
        assert!((c - 1482.42).abs() < 1e-9, "c = {c}");
    }

    #[test]
    fn npl_warms_up_with_temperature() {
        let at = |t: f64| {
            npl_sound_speed(&WaterProperties {
                temperature_c: t,
                salinity_psu: 35.0,
                depth_m: 10.0,
                latitude_deg: 45.0,
            })
            .unwrap()
        };
        let h = 1e-4;
        let slope = (at(20.0 + h) - at(20.0 - h)) / (2.0 * h);
        assert!(slope > 0.0, "∂c/∂T = {slope}");
    }

    #[test]
    fn npl_validity_enforced() {
        let bad = WaterProperties {
            temperature_c: 50.0,
            salinity_psu: 35.0,
            depth_m: 0.0,
            latitude_deg: 45.0,
        };
        assert!(matches!(npl_sound_speed(&bad), Err(ArrayError::OutOfValidityRange { .. })));
    }

    #[test]
    fn fixed_speed_passthrough() {
        assert_eq!(fixed_sound_speed(1500.0).unwrap(), 1500.0);
        assert!(fixed_sound_speed(900.0).is_err());
    }

    #[test]
    fn steering_delay_of_boresight_element() {
        let g = circular_array(0.075, 6).unwrap();
        let d = steering_delays(&g, 0.0, 1500.0);
        // Element 6 at (0.075, 0): 0.075/1500 = 5e-5 s.
        assert!((d[5] - 5.0e-5).abs() < 1e-18);
    }

    #[test]
    fn rotating_by_element_angle_permutes_delays() {
        let g = circular_array(0.075, 6).unwrap();
        let a = steering_delays(&g, 25.0, 1500.0);
        let b = steering_delays(&g, 25.0 + 60.0, 1500.0);
        // Rotating the look angle by 360/A shifts element indices by one.
        for i in 0..6 {
            assert!((a[i] - b[(i + 1) % 6]).abs() < 1e-18);
        }
    }

    proptest! {
        #[test]
        fn delays_sum_to_zero_and_are_periodic(theta in -720.0..720.0f64) {
            let g = circular_array(0.075, 6).unwrap();
            let d = steering_delays(&g, theta, 1500.0);
            let sum: f64 = d.iter().sum();
            prop_assert!(sum.abs() < 1e-18);
            let d2 = steering_delays(&g, theta + 360.0, 1500.0);
            for (a, b) in d.iter().zip(d2.iter()) {
                prop_assert!((a - b).abs() < 1e-16);
            }
            // Transit-time bound R/c.
            for &v in &d {
                prop_assert!(v.abs() <= 0.075 / 1500.0 + 1e-18);
            }
        }
    }
}
