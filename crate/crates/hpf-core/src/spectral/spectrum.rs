use num_complex::Complex64;

use super::{SpectralError, SpectralParams};

/// Two-sided Fourier coefficients of one real scalar signal.
///
/// Coefficients are stored for every order of the parameter set;
/// constructors that take only non-negative orders mirror them as
/// `X_{-h} = conj(X_h)` so the represented signal is real.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicSpectrum {
    params: SpectralParams,
    coeffs: Vec<Complex64>,
}

impl HarmonicSpectrum {
    /// All-zero spectrum.
    pub fn zero(params: SpectralParams) -> Self {
        Self {
            params,
            coeffs: vec![Complex64::ZERO; params.len()],
        }
    }

    /// Build from coefficients at non-negative orders; negative orders are
    /// filled by conjugation. The DC term is forced real (imaginary part
    /// discarded must be zero).
    pub fn from_positive_orders<I>(params: SpectralParams, entries: I) -> Result<Self, SpectralError>
    where
        I: IntoIterator<Item = (u32, Complex64)>,
    {
        let mut s = Self::zero(params);
        for (h, x) in entries {
            if h == 0 {
                if x.im.abs() > 1e-30 * (1.0 + x.re.abs()) {
                    return Err(SpectralError::NonHermitian {
                        order: 0,
                        deviation: x.im.abs(),
                    });
                }
                s.set(0, x)?;
            } else {
                s.set(h as i32, x)?;
                s.set(-(h as i32), x.conj())?;
            }
        }
        Ok(s)
    }

    /// Build from a full two-sided coefficient list ordered `-h_max..=h_max`.
    /// Fails if the set is not Hermitian within `tol` (relative).
    pub fn from_two_sided(
        params: SpectralParams,
        coeffs: Vec<Complex64>,
        tol: f64,
    ) -> Result<Self, SpectralError> {
        assert_eq!(coeffs.len(), params.len());
        let s = Self { params, coeffs };
        s.check_hermitian(tol)?;
        Ok(s)
    }

    pub fn params(&self) -> SpectralParams {
        self.params
    }

    /// Coefficient at order `h` (zero outside the band).
    pub fn get(&self, h: i32) -> Complex64 {
        self.params
            .index_of(h)
            .map_or(Complex64::ZERO, |i| self.coeffs[i])
    }

    pub fn set(&mut self, h: i32, x: Complex64) -> Result<(), SpectralError> {
        let i = self
            .params
            .index_of(h)
            .ok_or(SpectralError::OrderOutOfBand {
                order: h,
                max: self.params.h_max() as i32,
            })?;
        self.coeffs[i] = x;
        Ok(())
    }

    /// Set `X_h` and `X_{-h} = conj(X_h)` together.
    pub fn set_conjugate_pair(&mut self, h: u32, x: Complex64) -> Result<(), SpectralError> {
        self.set(h as i32, x)?;
        if h > 0 {
            self.set(-(h as i32), x.conj())?;
        }
        Ok(())
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Largest Hermitian-symmetry violation `|X_{-h} - conj(X_h)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut worst: f64 = self.get(0).im.abs();
        for h in 1..=self.params.h_max() as i32 {
            worst = worst.max((self.get(-h) - self.get(h).conj()).norm());
        }
        worst
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<(), SpectralError> {
        let dev = self.hermitian_deviation();
        let scale = 1.0 + self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if dev > tol * scale {
            return Err(SpectralError::NonHermitian {
                order: 0,
                deviation: dev,
            });
        }
        Ok(())
    }

    /// Evaluate the represented signal at time `t`.
    pub fn synthesize(&self, t: f64) -> f64 {
        let w1 = self.params.omega1();
        let mut acc = Complex64::ZERO;
        for (i, c) in self.coeffs.iter().enumerate() {
            let h = self.params.order_at(i) as f64;
            acc += c * Complex64::from_polar(1.0, h * w1 * t);
        }
        acc.re
    }

    /// Reported magnitude at order `h`: RMS value of the order-`h` tone,
    /// `sqrt(2)*|X_h|`, so a nominal fundamental reads 1.0 in per-unit.
    pub fn mag_rms(&self, h: i32) -> f64 {
        std::f64::consts::SQRT_2 * self.get(h).norm()
    }

    /// Pointwise scale by a real factor.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            params: self.params,
            coeffs: self.coeffs.iter().map(|c| c * k).collect(),
        }
    }
}

/// Phase labels of a three-phase quantity, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    A = 0,
    B = 1,
    C = 2,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::A, Phase::B, Phase::C];

    pub fn label(&self) -> &'static str {
        match self {
            Phase::A => "A",
            Phase::B => "B",
            Phase::C => "C",
        }
    }
}

/// Per-phase spectra of one three-phase electrical quantity (A, B, C order).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyphaseSpectrum {
    phases: [HarmonicSpectrum; 3],
}

impl PolyphaseSpectrum {
    pub fn zero(params: SpectralParams) -> Self {
        Self {
            phases: [
                HarmonicSpectrum::zero(params),
                HarmonicSpectrum::zero(params),
                HarmonicSpectrum::zero(params),
            ],
        }
    }

    /// Assemble from per-phase spectra; all must share one parameter set.
    pub fn new(phases: [HarmonicSpectrum; 3]) -> Result<Self, SpectralError> {
        let p0 = phases[0].params();
        for ph in &phases[1..] {
            if ph.params() != p0 {
                return Err(SpectralError::ParamsMismatch(
                    "polyphase spectrum phases share one parameter set".into(),
                ));
            }
        }
        Ok(Self { phases })
    }

    /// Balanced positive-sequence set from the phase-A spectrum entries:
    /// at every order, B lags A by 120 degrees and C leads by 120 degrees.
    pub fn balanced_positive(phase_a: &HarmonicSpectrum) -> Self {
        let alpha = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let params = phase_a.params();
        let mut b = HarmonicSpectrum::zero(params);
        let mut c = HarmonicSpectrum::zero(params);
        for h in 1..=params.h_max() {
            let xa = phase_a.get(h as i32);
            b.set_conjugate_pair(h, xa * alpha.conj()).unwrap();
            c.set_conjugate_pair(h, xa * alpha).unwrap();
        }
        // DC carries over unchanged.
        b.set(0, phase_a.get(0)).unwrap();
        c.set(0, phase_a.get(0)).unwrap();
        Self {
            phases: [phase_a.clone(), b, c],
        }
    }

    pub fn params(&self) -> SpectralParams {
        self.phases[0].params()
    }

    pub fn phase(&self, p: Phase) -> &HarmonicSpectrum {
        &self.phases[p as usize]
    }

    pub fn phase_mut(&mut self, p: Phase) -> &mut HarmonicSpectrum {
        &mut self.phases[p as usize]
    }

    pub fn phases(&self) -> &[HarmonicSpectrum; 3] {
        &self.phases
    }

    /// Coefficients of all three phases at order `h` as a 3-vector.
    pub fn at_order(&self, h: i32) -> [Complex64; 3] {
        [
            self.phases[0].get(h),
            self.phases[1].get(h),
            self.phases[2].get(h),
        ]
    }

    pub fn set_order(&mut self, h: i32, v: [Complex64; 3]) -> Result<(), SpectralError> {
        for (p, x) in v.into_iter().enumerate() {
            self.phases[p].set(h, x)?;
        }
        Ok(())
    }

    /// Set a conjugate pair on all phases at once.
    pub fn set_order_pair(&mut self, h: u32, v: [Complex64; 3]) -> Result<(), SpectralError> {
        for (p, x) in v.into_iter().enumerate() {
            self.phases[p].set_conjugate_pair(h, x)?;
        }
        Ok(())
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.phases
            .iter()
            .map(|p| p.hermitian_deviation())
            .fold(0.0, f64::max)
    }

    /// Largest coefficient magnitude over phases and orders.
    pub fn max_coeff(&self) -> f64 {
        self.phases
            .iter()
            .flat_map(|p| p.coeffs().iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute coefficient difference against another spectrum.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut worst = 0.0f64;
        for p in 0..3 {
            for (a, b) in self.phases[p]
                .coeffs()
                .iter()
                .zip(other.phases[p].coeffs())
            {
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }
}
