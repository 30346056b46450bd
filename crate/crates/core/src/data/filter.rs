use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Second-order Butterworth low-pass section, applied forward and backward
/// so the result has zero phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowPass {
    b: [f64; 3],
    a: [f64; 3],
}

impl LowPass {
    /// Odd-extension padding on each end, matching the usual `3 * taps` rule.
    pub const PAD: usize = 9;

    pub fn new(cutoff_hz: f64, fs: f64) -> Result<Self> {
        if !(cutoff_hz > 0.0 && fs > 2.0 * cutoff_hz) {
            return Err(Error::InvalidParameter(format!(
                "low-pass needs 0 < cutoff < fs/2, got cutoff {cutoff_hz} Hz at fs {fs} Hz"
            )));
        }
        // bilinear transform with pre-warped cutoff
        let k = (PI * cutoff_hz / fs).tan();
        let k2 = k * k;
        let norm = 1.0 / (1.0 + SQRT_2 * k + k2);
        let b0 = k2 * norm;
        Ok(Self {
            b: [b0, 2.0 * b0, b0],
            a: [1.0, 2.0 * (k2 - 1.0) * norm, (1.0 - SQRT_2 * k + k2) * norm],
        })
    }

    pub fn coefficients(&self) -> ([f64; 3], [f64; 3]) {
        (self.b, self.a)
    }

    /// Zero-phase filtering; output length equals input length.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        let pad = Self::PAD;
        if n <= pad {
            return Err(Error::InsufficientLength { len: n, min: pad + 1 });
        }
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let fwd = self.run(&ext);
        let mut rev: Vec<f64> = fwd.into_iter().rev().collect();
        rev = self.run(&rev);
        rev.reverse();
        Ok(rev[pad..pad + n].to_vec())
    }

    /// Direct-form II transposed pass started from the steady state of its
    /// first input sample.
    fn run(&self, x: &[f64]) -> Vec<f64> {
        let [b0, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let x0 = x[0];
        let mut z1 = (1.0 - b0) * x0;
        let mut z2 = (b2 - a2) * x0;
        x.iter()
            .map(|&xi| {
                let y = b0 * xi + z1;
                z1 = b1 * xi - a1 * y + z2;
                z2 = b2 * xi - a2 * y;
                y
            })
            .collect()
    }
}

/// Zero-phase low-pass of `series` at `cutoff` Hz for sample rate `fs`.
pub fn lowpass(series: &[f64], cutoff: f64, fs: f64) -> Result<Vec<f64>> {
    LowPass::new(cutoff, fs)?.apply(series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const FS: f64 = 65.0;

    fn sine(freq: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / FS).sin()).collect()
    }

    /// Amplitude over the middle half, away from edge transients.
    fn mid_amplitude(y: &[f64]) -> f64 {
        let n = y.len();
        y[n / 4..3 * n / 4].iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Analog Butterworth magnitude at the pre-warped frequency, squared for
    /// the two passes.
    fn zero_phase_gain(freq: f64, cutoff: f64) -> f64 {
        let r = (PI * freq / FS).tan() / (PI * cutoff / FS).tan();
        1.0 / (1.0 + r.powi(4))
    }

    #[test]
    fn constant_passes_unchanged() {
        let x = vec![3.25; 200];
        let y = lowpass(&x, 6.0, FS).unwrap();
        assert_eq!(y.len(), x.len());
        for v in y {
            assert_abs_diff_eq!(v, 3.25, epsilon = 1e-9);
        }
    }

    #[test]
    fn one_hertz_is_preserved() {
        let y = lowpass(&sine(1.0, 1300), 6.0, FS).unwrap();
        let amp = mid_amplitude(&y);
        assert!((amp - 1.0).abs() < 0.02, "amplitude {amp}");
        assert_abs_diff_eq!(amp, zero_phase_gain(1.0, 6.0), epsilon = 2e-3);
    }

    #[test]
    fn twenty_hertz_is_attenuated() {
        let y = lowpass(&sine(20.0, 1300), 6.0, FS).unwrap();
        let amp = mid_amplitude(&y);
        let db = 20.0 * amp.log10();
        assert!(db <= -20.0, "attenuation {db} dB");
        assert_abs_diff_eq!(amp, zero_phase_gain(20.0, 6.0), epsilon = 1e-3);
    }

    #[test]
    fn no_phase_shift() {
        let x = sine(1.5, 1300);
        let y = lowpass(&x, 6.0, FS).unwrap();
        // a zero-phase filter keeps the zero crossings in place
        let g = zero_phase_gain(1.5, 6.0);
        for i in 300..1000 {
            assert_abs_diff_eq!(y[i], g * x[i], epsilon = 1e-3);
        }
    }

    #[test]
    fn filtering_is_nearly_idempotent_for_band_limited_signals() {
        let x: Vec<f64> = (0..1300)
            .map(|i| {
                let t = i as f64 / FS;
                (2.0 * PI * 0.5 * t).sin() + 0.3 * (2.0 * PI * 1.5 * t).cos()
            })
            .collect();
        let once = lowpass(&x, 6.0, FS).unwrap();
        let twice = lowpass(&once, 6.0, FS).unwrap();
        let rms = |v: &[f64]| (v.iter().map(|a| a * a).sum::<f64>() / v.len() as f64).sqrt();
        let diff: Vec<f64> = once.iter().zip(&twice).map(|(a, b)| a - b).collect();
        assert!(rms(&diff) < 0.01 * rms(&once));
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            lowpass(&[1.0; 9], 6.0, FS),
            Err(Error::InsufficientLength { len: 9, min: 10 })
        ));
        assert!(lowpass(&[1.0; 10], 6.0, FS).is_ok());
    }

    #[test]
    fn cutoff_above_nyquist_rejected() {
        assert!(lowpass(&[0.0; 100], 40.0, FS).is_err());
    }
}
