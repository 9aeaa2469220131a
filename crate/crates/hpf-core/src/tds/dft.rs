use num_complex::Complex64;

use crate::spectral::{HarmonicSpectrum, PolyphaseSpectrum, SpectralParams};

use super::TdsError;

/// Two-sided harmonic coefficients of a sampled waveform, from a DFT over
/// the trailing `window_periods` fundamental periods.
///
/// Harmonic order `h` maps to DFT bin `window_periods * h`; the
/// normalization is such that a unit-amplitude cosine yields coefficients
/// of 0.5 at orders +-1. The window must span an integer number of samples
/// per period; no resampling is attempted.
pub fn dft_extract(
    samples: &[f64],
    sp: SpectralParams,
    window_periods: u32,
    dt: f64,
) -> Result<HarmonicSpectrum, TdsError> {
    let period = sp.period();
    let per_period = period / dt;
    let rounded = per_period.round();
    if (per_period - rounded).abs() > 1e-6 * per_period || rounded < 1.0 {
        return Err(TdsError::NonIntegerWindow(format!(
            "{per_period:.6} samples per period at dt = {dt:.3e}"
        )));
    }
    let n_window = rounded as usize * window_periods as usize;
    if samples.len() < n_window {
        return Err(TdsError::NonIntegerWindow(format!(
            "window needs {n_window} samples, got {}",
            samples.len()
        )));
    }
    let tail = &samples[samples.len() - n_window..];
    let mut out = HarmonicSpectrum::zero(sp);
    let w0 = std::f64::consts::TAU / n_window as f64;
    for h in 0..=sp.h_max() {
        let bin = (window_periods * h) as f64;
        let mut acc = Complex64::ZERO;
        // Recurrence-free accumulation keeps bin phases exact over long
        // windows.
        for (n, &x) in tail.iter().enumerate() {
            let ang = -w0 * bin * n as f64;
            acc += Complex64::from_polar(x, ang);
        }
        let coeff = acc / n_window as f64;
        out.set_conjugate_pair(h, coeff).unwrap();
    }
    Ok(out)
}

/// Per-phase DFT extraction of a three-phase record.
pub fn dft_extract_polyphase(
    phases: &[Vec<f64>; 3],
    sp: SpectralParams,
    window_periods: u32,
    dt: f64,
) -> Result<PolyphaseSpectrum, TdsError> {
    let a = dft_extract(&phases[0], sp, window_periods, dt)?;
    let b = dft_extract(&phases[1], sp, window_periods, dt)?;
    let c = dft_extract(&phases[2], sp, window_periods, dt)?;
    PolyphaseSpectrum::new([a, b, c])
        .map_err(|e| TdsError::ParamsMismatch(e.to_string()))
}

/// Sample the signal represented by a spectrum on a uniform grid.
pub fn synthesize_samples(spec: &HarmonicSpectrum, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| spec.synthesize(k as f64 * dt)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp() -> SpectralParams {
        SpectralParams::new(50.0, 25)
    }

    #[test]
    fn unit_cosine_lands_in_the_fundamental_bin() {
        let dt = 1e-4; // 10 kHz
        let n = 5 * 200;
        let w = sp().omega1();
        let samples: Vec<f64> = (0..n).map(|k| (w * k as f64 * dt).cos()).collect();
        let spec = dft_extract(&samples, sp(), 5, dt).unwrap();
        let x1 = spec.get(1);
        assert!((x1 - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        for h in 2..=25 {
            assert!(spec.get(h).norm() < 1e-12, "leak at h={h}");
        }
    }

    #[test]
    fn superposed_harmonic_magnitude_and_phase() {
        let dt = 1e-5;
        let n = 5 * 2000;
        let w = sp().omega1();
        let phase5 = 22.5f64.to_radians();
        let samples: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                (w * t).cos() + 0.06 * (5.0 * w * t + phase5).cos()
            })
            .collect();
        let spec = dft_extract(&samples, sp(), 5, dt).unwrap();
        assert!((spec.get(5).norm() - 0.03).abs() < 1e-12);
        assert!((spec.get(5).arg().to_degrees() - 22.5).abs() < 1e-9);
    }

    #[test]
    fn parseval_on_band_limited_signal() {
        let dt = 2e-5;
        let n = 5 * 1000;
        let w = sp().omega1();
        let samples: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                0.3 + (w * t).cos() + 0.2 * (7.0 * w * t + 0.4).cos() - 0.05 * (25.0 * w * t).sin()
            })
            .collect();
        let spec = dft_extract(&samples, sp(), 5, dt).unwrap();
        let energy: f64 = spec.coeffs().iter().map(|c| c.norm_sqr()).sum();
        let mean_sq: f64 =
            samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64;
        assert!((energy - mean_sq).abs() < 1e-10);
    }

    #[test]
    fn synthesis_round_trip_is_identity_for_band_limited_signals() {
        let mut spec = HarmonicSpectrum::zero(sp());
        spec.set_conjugate_pair(1, Complex64::new(0.4, -0.2)).unwrap();
        spec.set_conjugate_pair(13, Complex64::new(0.01, 0.02)).unwrap();
        spec.set_conjugate_pair(25, Complex64::new(-0.003, 0.001)).unwrap();
        let dt = 1e-5 / 2.0; // 40 samples of order 25 per its period
        let n = (5.0 * sp().period() / dt).round() as usize;
        let samples = synthesize_samples(&spec, dt, n);
        let back = dft_extract(&samples, sp(), 5, dt).unwrap();
        for h in sp().orders() {
            assert!(
                (back.get(h) - spec.get(h)).norm() < 1e-10,
                "round trip off at h={h}"
            );
        }
    }

    #[test]
    fn non_integer_sampling_is_refused() {
        let samples = vec![0.0; 10_000];
        assert!(dft_extract(&samples, sp(), 5, 3.1e-5).is_err());
    }
}
