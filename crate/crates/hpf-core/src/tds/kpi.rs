use crate::spectral::{PolyphaseSpectrum, SpectralParams};

use super::TdsError;

/// Magnitude below which phase angles are numerically meaningless and are
/// excluded from the phase error.
const PHASE_FLOOR: f64 = 1e-9;

/// Errors of one harmonic order between two polyphase spectra.
#[derive(Debug, Clone, Copy)]
pub struct KpiEntry {
    pub h: u32,
    /// Maximum over phases of the reported-magnitude difference, per-unit.
    pub e_abs: f64,
    /// Maximum over phases of the wrapped phase difference, degrees, in
    /// `[0, 180]`; zero when both magnitudes sit below the floor.
    pub e_arg_deg: f64,
}

/// Per-order comparison of two spectra of the same quantity.
#[derive(Debug, Clone)]
pub struct KpiReport {
    pub entries: Vec<KpiEntry>,
}

impl KpiReport {
    pub fn at(&self, h: u32) -> &KpiEntry {
        &self.entries[(h - 1) as usize]
    }

    pub fn max_e_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.e_abs).fold(0.0, f64::max)
    }

    pub fn max_e_arg_deg(&self) -> f64 {
        self.entries.iter().map(|e| e.e_arg_deg).fold(0.0, f64::max)
    }
}

fn wrap_deg(d: f64) -> f64 {
    let mut d = d.abs() % 360.0;
    if d > 180.0 {
        d = 360.0 - d;
    }
    d
}

/// Compare two spectra order by order: the magnitude error is the largest
/// per-phase difference of reported (RMS-convention) magnitudes, the phase
/// error the largest wrapped per-phase angle difference where both sides
/// carry signal.
pub fn compute_kpis(
    a: &PolyphaseSpectrum,
    b: &PolyphaseSpectrum,
) -> Result<KpiReport, TdsError> {
    if a.params() != b.params() {
        return Err(TdsError::ParamsMismatch(format!(
            "{:?} vs {:?}",
            a.params(),
            b.params()
        )));
    }
    let sp: SpectralParams = a.params();
    let mut entries = Vec::with_capacity(sp.h_max() as usize);
    for h in 1..=sp.h_max() {
        let mut e_abs: f64 = 0.0;
        let mut e_arg: f64 = 0.0;
        for p in 0..3 {
            let xa = a.phases()[p].get(h as i32);
            let xb = b.phases()[p].get(h as i32);
            let ma = std::f64::consts::SQRT_2 * xa.norm();
            let mb = std::f64::consts::SQRT_2 * xb.norm();
            e_abs = e_abs.max((ma - mb).abs());
            if ma > PHASE_FLOOR && mb > PHASE_FLOOR {
                let d = wrap_deg((xa.arg() - xb.arg()).to_degrees());
                e_arg = e_arg.max(d);
            }
        }
        entries.push(KpiEntry { h, e_abs, e_arg_deg: e_arg });
    }
    Ok(KpiReport { entries })
}
