//! Result persistence: fixed-schema CSV files and small SVG charts.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use hpf_core::spectral::{Phase, PolyphaseSpectrum};
use hpf_core::tds::KpiReport;

/// One named quantity spectrum attached to a node.
pub struct SpectrumRow<'a> {
    pub node: &'a str,
    pub quantity: &'a str,
    pub spectrum: &'a PolyphaseSpectrum,
}

/// `spectra_*.csv`: `node,quantity,phase,h,mag_pu,phase_deg`.
pub fn write_spectra_csv(path: &Path, rows: &[SpectrumRow]) -> Result<()> {
    let mut out = String::from("node,quantity,phase,h,mag_pu,phase_deg\n");
    for row in rows {
        let sp = row.spectrum.params();
        for phase in Phase::ALL {
            let spec = row.spectrum.phase(phase);
            for h in 1..=sp.h_max() {
                let x = spec.get(h as i32);
                writeln!(
                    out,
                    "{},{},{},{},{:.12e},{:.7}",
                    row.node,
                    row.quantity,
                    phase.label(),
                    h,
                    spec.mag_rms(h as i32),
                    x.arg().to_degrees()
                )?;
            }
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// One KPI set for a node/quantity pair.
pub struct KpiRow<'a> {
    pub node: &'a str,
    pub quantity: &'a str,
    pub report: &'a KpiReport,
}

/// `kpi.csv`: `node,quantity,h,e_abs_pu,e_arg_deg`.
pub fn write_kpi_csv(path: &Path, rows: &[KpiRow]) -> Result<()> {
    let mut out = String::from("node,quantity,h,e_abs_pu,e_arg_deg\n");
    for row in rows {
        for e in &row.report.entries {
            writeln!(
                out,
                "{},{},{},{:.6e},{:.6}",
                row.node, row.quantity, e.h, e.e_abs, e.e_arg_deg
            )?;
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `residuals.csv`: `iteration,residual_inf_pu`.
pub fn write_residuals_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut out = String::from("iteration,residual_inf_pu\n");
    for (i, r) in history.iter().enumerate() {
        writeln!(out, "{i},{r:.6e}")?;
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// One timing record.
pub struct TimingRow {
    pub study: String,
    pub case: String,
    pub n_repeats: usize,
    pub mean_s: f64,
    pub std_s: f64,
}

/// `timing.csv`: `study,case,n_repeats,mean_s,std_s`.
pub fn write_timing_csv(path: &Path, rows: &[TimingRow]) -> Result<()> {
    let mut out = String::from("study,case,n_repeats,mean_s,std_s\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            r.study, r.case, r.n_repeats, r.mean_s, r.std_s
        )?;
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Mean and standard deviation of a sample.
pub fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len().max(1) as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
