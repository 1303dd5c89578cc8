//! Shared FFT plumbing: fast correlation in the exact index layout of the
//! matched filter, fast linear convolution, envelopes, and spectra.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub(crate) fn fft_in_place(buf: &mut [Complex64]) {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()).process(buf));
}

pub(crate) fn ifft_in_place(buf: &mut [Complex64]) {
    let len = buf.len();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len).process(buf));
    let scale = 1.0 / len as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

fn to_complex(x: &[f64], len: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (o, &v) in out.iter_mut().zip(x.iter()) {
        o.re = v;
    }
    out
}

/// Cross-correlation in the layout z[n] = Σ_m y[m]·x[m−n], n ∈ [0, N+M−2].
///
/// Lags beyond M−1 have no overlap and are exactly zero. The transform length
/// is at least M+N so wrapped negative lags cannot alias into the output.
pub(crate) fn correlate_full(y: &[f64], x: &[f64]) -> Vec<f64> {
    correlate_impl(y, x, false).0
}

/// Correlation plus its magnitude envelope over the valid arrival lags
/// [0, M−1]. The analytic signal is taken on the padded circular grid, where
/// the correlation sequence is smooth across the wrap, so the envelope is
/// free of edge artifacts even for peaks near lag zero.
pub(crate) fn correlate_with_envelope(y: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (z, env) = correlate_impl(y, x, true);
    (z, env.unwrap())
}

fn correlate_impl(y: &[f64], x: &[f64], want_envelope: bool) -> (Vec<f64>, Option<Vec<f64>>) {
    let m = y.len();
    let n = x.len();
    let out_len = n + m - 1;
    let fft_len = (m + n).next_power_of_two();
    let mut yb = to_complex(y, fft_len);
    let mut xb = to_complex(x, fft_len);
    fft_in_place(&mut yb);
    fft_in_place(&mut xb);
    for (a, b) in yb.iter_mut().zip(xb.iter()) {
        *a *= b.conj();
    }
    let envelope = want_envelope.then(|| {
        let half = fft_len / 2;
        let mut analytic = yb.clone();
        for (k, v) in analytic.iter_mut().enumerate() {
            if k == 0 || k == half {
                continue;
            } else if k < half {
                *v *= 2.0;
            } else {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        ifft_in_place(&mut analytic);
        analytic.iter().take(m).map(|v| v.norm()).collect()
    });
    ifft_in_place(&mut yb);
    let mut out = vec![0.0; out_len];
    for (o, v) in out.iter_mut().take(m).zip(yb.iter()) {
        *o = v.re;
    }
    (out, envelope)
}

/// Full linear convolution via the transform domain.
pub(crate) fn convolve_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    let fft_len = out_len.next_power_of_two();
    let mut ab = to_complex(a, fft_len);
    let mut bb = to_complex(b, fft_len);
    fft_in_place(&mut ab);
    fft_in_place(&mut bb);
    for (x, y) in ab.iter_mut().zip(bb.iter()) {
        *x *= y;
    }
    ifft_in_place(&mut ab);
    ab.iter().take(out_len).map(|v| v.re).collect()
}

/// Full linear convolution, direct form.
pub(crate) fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &av) in a.iter().enumerate() {
        if av == 0.0 {
            continue;
        }
        for (j, &bv) in b.iter().enumerate() {
            out[i + j] += av * bv;
        }
    }
    out
}

/// Forward spectrum of a real sequence zero-padded to `fft_len`; returns the
/// non-negative-frequency bins 0..=fft_len/2.
pub(crate) fn half_spectrum(x: &[f64], fft_len: usize) -> Vec<Complex64> {
    let mut buf = to_complex(x, fft_len);
    fft_in_place(&mut buf);
    buf.truncate(fft_len / 2 + 1);
    buf
}

/// Synthesize a real frame of length `len` as a sum of fractionally delayed
/// copies of `x`, one (delay seconds, amplitude) pair per term. Delays are
/// realized as phase ramps, exact for band-limited content.
pub(crate) fn delayed_sum(x: &[f64], len: usize, sample_rate: f64, terms: &[(f64, f64)]) -> Vec<f64> {
    let mut base = to_complex(x, len);
    fft_in_place(&mut base);
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    for &(delay_s, amp) in terms {
        for (k, v) in base.iter().enumerate() {
            // Signed bin frequency so the ramp keeps Hermitian symmetry.
            let kf = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
            let f = kf * sample_rate / len as f64;
            let phase = -2.0 * std::f64::consts::PI * f * delay_s;
            acc[k] += v * amp * Complex64::new(phase.cos(), phase.sin());
        }
    }
    ifft_in_place(&mut acc);
    acc.iter().map(|v| v.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn correlate_matches_shift() {
        let x = [1.0, 2.0, -1.0];
        let mut y = vec![0.0; 10];
        for (i, &v) in x.iter().enumerate() {
            y[4 + i] = v;
        }
        let z = correlate_full(&y, &x);
        assert_eq!(z.len(), y.len() + x.len() - 1);
        let peak = z
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, 4);
        // Tail lags beyond M-1 have no overlap.
        for &v in &z[y.len()..] {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn convolve_routes_agree() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..12).map(|i| (i as f64 * 1.3).cos()).collect();
        let d = convolve_direct(&a, &b);
        let f = convolve_fft(&a, &b);
        for (x, y) in d.iter().zip(f.iter()) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn envelope_tracks_correlation_magnitude_near_the_edge() {
        // A reference placed right at the frame start: the envelope peak must
        // sit at the true lag even though it is close to the array boundary.
        let x: Vec<f64> = (0..64)
            .map(|i| (2.0 * std::f64::consts::PI * 0.23 * i as f64).sin())
            .collect();
        let mut y = vec![0.0; 400];
        y[5..5 + 64].copy_from_slice(&x);
        let (z, env) = correlate_with_envelope(&y, &x);
        assert_eq!(env.len(), 400);
        let argmax = |v: &[f64]| {
            v.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0
        };
        assert_eq!(argmax(&env), 5);
        assert!(env[5] >= z[5]);
    }

    #[test]
    fn delayed_sum_shifts_by_integer() {
        let x: Vec<f64> = (0..64).map(|i| (i as f64 * 0.35).sin() * (-((i as f64 - 32.0) / 12.0).powi(2)).exp()).collect();
        let y = delayed_sum(&x, 256, 1.0, &[(10.0, 1.0)]);
        for i in 0..64 {
            assert!((y[i + 10] - x[i]).abs() < 1e-9);
        }
    }
}
