//! Configuration files: a study file selecting what to run and how, and a
//! network file describing the grid. Field names carry explicit units to
//! keep the mixed-unit source data honest.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use hpf_core::components::{ControllerStageParams, FilterStageParams, LegConfig};
use hpf_core::network::{
    HarmonicEntry, LineSpec, LoadSpec, NetworkSpec, ResourceAttachment, SequenceParams,
    TheveninSpec,
};
use hpf_core::pu::PerUnit;
use hpf_core::resources::{CiderKind, CiderSpec, Setpoint, StagePair};
use hpf_core::solver::{InitStrategy, SolverConfig};
use hpf_core::spectral::SpectralParams;
use hpf_core::tds::TdsConfig;

/// Top-level study configuration file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyFile {
    pub study: String,
    /// Path to the network file, relative to this file, or a bundled name
    /// like `builtin:cigre_lv_modified`.
    pub network: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub output_dir: String,
    pub spectral: SpectralSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub tds: TdsSection,
    #[serde(default)]
    pub study_options: StudyOptions,
}

fn default_out() -> String {
    "out".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralSection {
    pub f1_hz: f64,
    pub h_max: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSection {
    pub tol_pu: f64,
    pub max_iter: usize,
    pub fd_step_pu: f64,
    /// `flat` or `random`.
    pub init: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            tol_pu: 1e-8,
            max_iter: 50,
            fd_step_pu: 1e-6,
            init: "flat".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TdsSection {
    pub dt_us: f64,
    pub t_end_s: f64,
    pub min_time_s: f64,
    pub steady_tol: f64,
    pub window_periods: u32,
}

impl Default for TdsSection {
    fn default() -> Self {
        Self {
            dt_us: 2.0,
            t_end_s: 8.0,
            min_time_s: 0.5,
            steady_tol: 1e-7,
            window_periods: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyOptions {
    /// Repetitions for timing statistics.
    pub timing_repeats: usize,
    /// Random initial points for the robustness study.
    pub robustness_runs: usize,
    /// Maximum harmonic orders swept by the scalability study.
    pub scalability_h_max: Vec<u32>,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            timing_repeats: 50,
            robustness_runs: 20,
            scalability_h_max: vec![11, 13, 15, 17, 19, 21, 23, 25],
        }
    }
}

impl StudyFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading study file {}", path.display()))?;
        let file: StudyFile = toml::from_str(&text)
            .with_context(|| format!("parsing study file {}", path.display()))?;
        Ok(file)
    }

    pub fn spectral_params(&self) -> SpectralParams {
        SpectralParams::new(self.spectral.f1_hz, self.spectral.h_max)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let init = match self.solver.init.as_str() {
            "flat" => InitStrategy::Flat,
            "random" => InitStrategy::random(self.seed),
            other => bail!("unknown solver init '{other}' (expected 'flat' or 'random')"),
        };
        Ok(SolverConfig {
            tol: self.solver.tol_pu,
            max_iter: self.solver.max_iter,
            fd_step: self.solver.fd_step_pu,
            init,
        })
    }

    pub fn tds_config(&self) -> TdsConfig {
        TdsConfig {
            dt: self.tds.dt_us * 1e-6,
            t_end: self.tds.t_end_s,
            min_time: self.tds.min_time_s,
            steady_tol: self.tds.steady_tol,
            window_periods: self.tds.window_periods,
            record_states: false,
            trace: false,
            exact_reference: false,
        }
    }

    /// Resolve the network reference against the study file location.
    pub fn network_path(&self, study_path: &Path) -> Option<PathBuf> {
        if self.network.starts_with("builtin:") {
            None
        } else {
            let base = study_path.parent().unwrap_or(Path::new("."));
            Some(base.join(&self.network))
        }
    }
}

// ---------------------------------------------------------------------------
// Network file schema
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub base: BaseSection,
    pub nodes: Vec<String>,
    pub source: SourceSection,
    #[serde(default)]
    pub cable_types: std::collections::BTreeMap<String, CableType>,
    #[serde(default)]
    pub lines: Vec<LineEntry>,
    #[serde(default)]
    pub loads: Vec<LoadEntry>,
    #[serde(default)]
    pub converters: std::collections::BTreeMap<String, ConverterType>,
    #[serde(default)]
    pub resources: Vec<ResourceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseSection {
    pub v_base_v_rms: f64,
    pub s_base_va: f64,
    pub f1_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSection {
    pub node: String,
    pub v_nominal_v_rms: f64,
    pub s_sc_va: f64,
    pub z_sc_ohm: f64,
    pub r_over_x: f64,
    pub harmonics: Vec<SourceHarmonic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceHarmonic {
    pub h: u32,
    pub mag_pct: f64,
    pub phase_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CableType {
    pub r1_ohm_per_km: f64,
    pub r0_ohm_per_km: f64,
    pub l1_mh_per_km: f64,
    pub l0_mh_per_km: f64,
    pub c1_nf_per_km: f64,
    pub c0_nf_per_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineEntry {
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub cable: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadEntry {
    pub node: String,
    pub s_va: f64,
    pub power_factor: f64,
    pub phase_weights: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverterType {
    pub rated_va: f64,
    pub stages: Vec<StageEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEntry {
    /// `inductive` or `capacitive`.
    pub kind: String,
    #[serde(default)]
    pub l_mh: Option<f64>,
    #[serde(default)]
    pub r_mohm: Option<f64>,
    #[serde(default)]
    pub c_uf: Option<f64>,
    #[serde(default)]
    pub g_s: Option<f64>,
    pub k_fb: f64,
    pub t_fb_s: f64,
    pub k_ft: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceEntry {
    pub node: String,
    /// Resource-model kind from the registry (`forming` / `following`).
    pub kind: String,
    pub converter: String,
    #[serde(default)]
    pub v_set_v_rms: Option<f64>,
    #[serde(default)]
    pub f_set_hz: Option<f64>,
    #[serde(default)]
    pub p_set_w: Option<f64>,
    #[serde(default)]
    pub q_set_var: Option<f64>,
}

impl NetworkFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading network file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in network file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: NetworkFile = toml::from_str(text)?;
        Ok(file)
    }

    pub fn dump(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    fn stage(&self, entry: &StageEntry) -> Result<FilterStageParams> {
        match entry.kind.as_str() {
            "inductive" => {
                let l = entry.l_mh.context("inductive stage needs l_mh")? * 1e-3;
                let r = entry.r_mohm.context("inductive stage needs r_mohm")? * 1e-3;
                Ok(FilterStageParams::inductive(l, r))
            }
            "capacitive" => {
                let c = entry.c_uf.context("capacitive stage needs c_uf")? * 1e-6;
                let g = entry.g_s.unwrap_or(0.0);
                Ok(FilterStageParams::capacitive(c, g))
            }
            other => bail!("unknown stage kind '{other}'"),
        }
    }

    /// Convert to the engine's network description.
    pub fn to_spec(&self) -> Result<NetworkSpec> {
        let node_index = |name: &str| -> Result<usize> {
            self.nodes
                .iter()
                .position(|n| n == name)
                .with_context(|| format!("unknown node '{name}'"))
        };

        let mut lines = Vec::new();
        for (i, l) in self.lines.iter().enumerate() {
            let cable = self
                .cable_types
                .get(&l.cable)
                .with_context(|| format!("line #{i}: unknown cable type '{}'", l.cable))?;
            lines.push(LineSpec {
                from: node_index(&l.from)?,
                to: node_index(&l.to)?,
                length_m: l.length_m,
                seq: SequenceParams {
                    r1_ohm_per_km: cable.r1_ohm_per_km,
                    r0_ohm_per_km: cable.r0_ohm_per_km,
                    l1_h_per_km: cable.l1_mh_per_km * 1e-3,
                    l0_h_per_km: cable.l0_mh_per_km * 1e-3,
                    c1_f_per_km: cable.c1_nf_per_km * 1e-9,
                    c0_f_per_km: cable.c0_nf_per_km * 1e-9,
                },
            });
        }

        let mut loads = Vec::new();
        for l in &self.loads {
            loads.push(LoadSpec {
                node: node_index(&l.node)?,
                s_va: l.s_va,
                pf: l.power_factor,
                weights: l.phase_weights,
            });
        }

        let mut resources = Vec::new();
        for r in &self.resources {
            let conv = self
                .converters
                .get(&r.converter)
                .with_context(|| format!("resource at {}: unknown converter '{}'", r.node, r.converter))?;
            let kind = CiderKind::from_name(&r.kind)
                .map_err(|e| anyhow::anyhow!("resource at {}: {e}", r.node))?;
            let stages: Result<Vec<StagePair>> = conv
                .stages
                .iter()
                .map(|s| {
                    Ok(StagePair {
                        filter: self.stage(s)?,
                        controller: ControllerStageParams::new(s.k_fb, s.t_fb_s, s.k_ft),
                    })
                })
                .collect();
            let (legs, setpoint) = match kind {
                CiderKind::Forming => (
                    LegConfig::FourLeg,
                    Setpoint::Forming {
                        v_rms: r
                            .v_set_v_rms
                            .with_context(|| format!("forming resource at {} needs v_set_v_rms", r.node))?,
                        f_hz: r
                            .f_set_hz
                            .with_context(|| format!("forming resource at {} needs f_set_hz", r.node))?,
                    },
                ),
                CiderKind::Following => (
                    LegConfig::ThreeLeg,
                    Setpoint::Following {
                        p: r.p_set_w
                            .with_context(|| format!("following resource at {} needs p_set_w", r.node))?,
                        q: r.q_set_var
                            .with_context(|| format!("following resource at {} needs q_set_var", r.node))?,
                    },
                ),
            };
            resources.push(ResourceAttachment {
                node: node_index(&r.node)?,
                spec: CiderSpec {
                    kind,
                    legs,
                    stages: stages?,
                    rated_power_va: conv.rated_va,
                    setpoint,
                },
            });
        }

        let spec = NetworkSpec {
            base: PerUnit::new(self.base.v_base_v_rms, self.base.s_base_va),
            f1_hz: self.base.f1_hz,
            node_names: self.nodes.clone(),
            lines,
            loads,
            thevenin: TheveninSpec {
                node: node_index(&self.source.node)?,
                v_n_rms: self.source.v_nominal_v_rms,
                s_sc_va: self.source.s_sc_va,
                z_sc_ohm: self.source.z_sc_ohm,
                r_over_x: self.source.r_over_x,
                harmonics: self
                    .source
                    .harmonics
                    .iter()
                    .map(|e| HarmonicEntry {
                        h: e.h,
                        mag: e.mag_pct / 100.0,
                        phase_deg: e.phase_deg,
                    })
                    .collect(),
            },
            resources,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Load a network from a path or a bundled name.
pub fn load_network(reference: &str, base_dir: &Path) -> Result<(NetworkFile, NetworkSpec)> {
    let file = if let Some(name) = reference.strip_prefix("builtin:") {
        match name {
            "cigre_lv_modified" => NetworkFile::parse(include_str!("../networks/cigre_lv_modified.toml"))?,
            "resource_validation_forming" => {
                NetworkFile::parse(include_str!("../networks/resource_validation_forming.toml"))?
            }
            "resource_validation_following" => {
                NetworkFile::parse(include_str!("../networks/resource_validation_following.toml"))?
            }
            other => bail!("unknown builtin network '{other}'"),
        }
    } else {
        NetworkFile::load(&base_dir.join(reference))?
    };
    let spec = file.to_spec()?;
    Ok((file, spec))
}
