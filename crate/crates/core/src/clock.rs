//! Disciplined-oscillator model and PPS trigger arithmetic.
//!
//! Linear drift: local_time(t) = t + initial_offset + drift_rate·t, with t in
//! true seconds since the mission epoch. A receiver-minus-beacon offset adds
//! directly to the measured one-way travel time.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClockError {
    #[error("drift rate {0} s/s exceeds the 1e-6 sanity bound")]
    DriftOutOfRange(f64),
    #[error("PPS interval {0} s must be positive")]
    NonPositiveInterval(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockModel {
    pub initial_offset: f64,
    pub drift_rate: f64,
    pub pps_interval: f64,
}

impl ClockModel {
    pub fn new(initial_offset: f64, drift_rate: f64, pps_interval: f64) -> Result<Self, ClockError> {
        if drift_rate.abs() > 1e-6 {
            return Err(ClockError::DriftOutOfRange(drift_rate));
        }
        if pps_interval <= 0.0 {
            return Err(ClockError::NonPositiveInterval(pps_interval));
        }
        Ok(Self { initial_offset, drift_rate, pps_interval })
    }

    /// A perfectly disciplined clock with a 1 s PPS.
    pub fn ideal() -> Self {
        Self { initial_offset: 0.0, drift_rate: 0.0, pps_interval: 1.0 }
    }

    /// Clock offset after `elapsed` true seconds.
    pub fn offset_at(&self, elapsed: f64) -> f64 {
        self.initial_offset + self.drift_rate * elapsed
    }

    /// Local time shown by this clock at true time `t`.
    pub fn local_time(&self, t: f64) -> f64 {
        t + self.offset_at(t)
    }

    /// True time of the next local PPS edge at or after `now`: the smallest
    /// t ≥ now with local_time(t) ≡ 0 (mod pps_interval).
    pub fn next_trigger(&self, now: f64) -> f64 {
        let p = self.pps_interval;
        let slope = 1.0 + self.drift_rate;
        // local(t) = slope·t + o0 = k·p  ⇒  t = (k·p − o0)/slope
        let mut k = ((now * slope + self.initial_offset) / p).ceil();
        let mut t = (k * p - self.initial_offset) / slope;
        // Float guards at the boundary.
        while t < now {
            k += 1.0;
            t = (k * p - self.initial_offset) / slope;
        }
        while k > f64::MIN && ((k - 1.0) * p - self.initial_offset) / slope >= now {
            k -= 1.0;
            t = (k * p - self.initial_offset) / slope;
        }
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drift_bound_example() {
        // 180 µs accumulated over 12 hours.
        let m = ClockModel::new(0.0, 180e-6 / 43_200.0, 1.0).unwrap();
        assert!((m.offset_at(43_200.0) - 180e-6).abs() < 1e-18);
        assert_eq!(m.offset_at(0.0), 0.0);
        // At 1500 m/s that offset is a 0.27 m range bias.
        assert!((m.offset_at(43_200.0) * 1500.0 - 0.27).abs() < 1e-12);
    }

    #[test]
    fn ideal_clock_triggers_on_the_second() {
        let m = ClockModel::ideal();
        assert_eq!(m.next_trigger(3.2), 4.0);
        assert_eq!(m.next_trigger(4.0), 4.0);
    }

    #[test]
    fn positive_offset_fires_early_in_true_time() {
        let m = ClockModel::new(100e-6, 0.0, 1.0).unwrap();
        let t = m.next_trigger(3.2);
        assert!((t - 3.9999).abs() < 1e-12, "t = {t}");
    }

    #[test]
    fn drifting_clock_matches_bisection_oracle() {
        let m = ClockModel::new(37e-6, 1e-8, 1.0).unwrap();
        let now = 1.0e5;
        let t = m.next_trigger(now);
        // Independent bisection on local_time(t) mod p around the answer.
        let p = m.pps_interval;
        let k = (m.local_time(t) / p).round();
        let (mut lo, mut hi) = (now - 2.0, now + 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if m.local_time(mid) < k * p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((t - oracle).abs() < 1e-9, "closed form {t} vs bisection {oracle}");
        assert!(t >= now);
        assert!((m.local_time(t) / p - k).abs() < 1e-12);
    }

    #[test]
    fn sanity_bounds_enforced() {
        assert!(ClockModel::new(0.0, 2e-6, 1.0).is_err());
        assert!(ClockModel::new(0.0, 0.0, 0.0).is_err());
    }
}
