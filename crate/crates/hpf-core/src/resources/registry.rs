use std::collections::BTreeMap;
use std::sync::Arc;

use crate::pu::PerUnit;
use crate::spectral::{PolyphaseSpectrum, SpectralParams};

use super::timedomain::{CiderDynamics, ResourceDynamics};
use super::{CiderKind, CiderSpec, LiftedCider, ResourceError};

/// Which port quantity a resource imposes on the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortRole {
    /// Injects current as a function of its terminal voltage (following).
    CurrentInjector,
    /// Imposes voltage as a function of the current drawn (forming).
    VoltageFormer,
}

/// The steady-state harmonic response of a resource at its grid port.
pub trait HarmonicResponse: Send + Sync {
    fn params(&self) -> SpectralParams;
    fn role(&self) -> PortRole;
    /// Map the grid-side input spectrum to the complementary port quantity.
    fn respond(&self, input: &PolyphaseSpectrum) -> Result<PolyphaseSpectrum, ResourceError>;

    /// Central-difference Jacobian of the response in the solver's real
    /// unknown layout (positive orders, three phases, re/im interleaved).
    /// Implementations may batch the underlying solves but must produce the
    /// plain central-difference values.
    fn port_jacobian_fd(
        &self,
        input: &PolyphaseSpectrum,
        fd_step: f64,
    ) -> Result<nalgebra::DMatrix<f64>, ResourceError> {
        let sp = self.params();
        let stride = sp.h_max() as usize * 6;
        let mut base = vec![0.0; stride];
        crate::solver::encode_port_slice(sp, input, &mut base);
        let mut out = nalgebra::DMatrix::zeros(stride, stride);
        let mut work = base.clone();
        for c in 0..stride {
            work[c] = base[c] + fd_step;
            let plus = self.respond(&crate::solver::decode_port_spectrum(sp, &work))?;
            work[c] = base[c] - fd_step;
            let minus = self.respond(&crate::solver::decode_port_spectrum(sp, &work))?;
            work[c] = base[c];
            let mut col_p = vec![0.0; stride];
            let mut col_m = vec![0.0; stride];
            crate::solver::encode_port_slice(sp, &plus, &mut col_p);
            crate::solver::encode_port_slice(sp, &minus, &mut col_m);
            for r in 0..stride {
                out[(r, c)] = (col_p[r] - col_m[r]) / (2.0 * fd_step);
            }
        }
        Ok(out)
    }
}

/// One resource variant: a named strategy producing both the harmonic-domain
/// response used by the solver and the time-domain realization used by the
/// simulation oracle, from one validated specification.
pub trait ResourceModel: Send + Sync {
    fn kind_name(&self) -> &'static str;
    fn port_role(&self) -> PortRole;
    fn spec(&self) -> &CiderSpec;
    /// Build the lifted harmonic response over the given order set.
    fn response(&self, sp: SpectralParams) -> Result<Arc<dyn HarmonicResponse>, ResourceError>;
    /// Build a fresh time-domain realization. `ext_series` merges an
    /// external series impedance `(L, R)` into the grid-side branch, used
    /// when the resource couples directly to a stiff source.
    fn dynamics(
        &self,
        f1_hz: f64,
        ext_series: Option<(f64, f64)>,
    ) -> Result<Box<dyn ResourceDynamics>, ResourceError>;
}

struct BuiltResource {
    spec_pu: CiderSpec,
}

impl ResourceModel for BuiltResource {
    fn kind_name(&self) -> &'static str {
        self.spec_pu.kind.name()
    }

    fn port_role(&self) -> PortRole {
        match self.spec_pu.kind {
            CiderKind::Forming => PortRole::VoltageFormer,
            CiderKind::Following => PortRole::CurrentInjector,
        }
    }

    fn spec(&self) -> &CiderSpec {
        &self.spec_pu
    }

    fn response(&self, sp: SpectralParams) -> Result<Arc<dyn HarmonicResponse>, ResourceError> {
        Ok(Arc::new(LiftedCider::new(&self.spec_pu, sp)?))
    }

    fn dynamics(
        &self,
        f1_hz: f64,
        ext_series: Option<(f64, f64)>,
    ) -> Result<Box<dyn ResourceDynamics>, ResourceError> {
        Ok(Box::new(CiderDynamics::new(&self.spec_pu, f1_hz, ext_series)?))
    }
}

type ModelBuilder =
    fn(spec_pu: CiderSpec) -> Result<Arc<dyn ResourceModel>, ResourceError>;

fn build_forming(spec_pu: CiderSpec) -> Result<Arc<dyn ResourceModel>, ResourceError> {
    if spec_pu.kind != CiderKind::Forming {
        return Err(ResourceError::StageMismatch("not a forming spec".into()));
    }
    spec_pu.validate()?;
    Ok(Arc::new(BuiltResource { spec_pu }))
}

fn build_following(spec_pu: CiderSpec) -> Result<Arc<dyn ResourceModel>, ResourceError> {
    if spec_pu.kind != CiderKind::Following {
        return Err(ResourceError::StageMismatch("not a following spec".into()));
    }
    spec_pu.validate()?;
    Ok(Arc::new(BuiltResource { spec_pu }))
}

/// Registry of resource-model variants, keyed by kind name. The built-in
/// variants are `forming` and `following`; additional variants can be
/// registered for experimentation.
pub struct ResourceRegistry {
    builders: BTreeMap<&'static str, ModelBuilder>,
}

impl Default for ResourceRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl ResourceRegistry {
    pub fn with_builtin() -> Self {
        let mut builders: BTreeMap<&'static str, ModelBuilder> = BTreeMap::new();
        builders.insert("forming", build_forming);
        builders.insert("following", build_following);
        Self { builders }
    }

    pub fn register(&mut self, name: &'static str, builder: ModelBuilder) {
        self.builders.insert(name, builder);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.builders.keys().copied()
    }

    /// Build the model for a specification given in SI units, normalizing
    /// onto the system base first.
    pub fn build(
        &self,
        spec_si: &CiderSpec,
        base: &PerUnit,
    ) -> Result<Arc<dyn ResourceModel>, ResourceError> {
        let builder = self
            .builders
            .get(spec_si.kind.name())
            .ok_or_else(|| ResourceError::UnknownKind(spec_si.kind.name().into()))?;
        builder(spec_si.to_per_unit(base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let reg = ResourceRegistry::with_builtin();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names, vec!["following", "forming"]);
    }

    #[test]
    fn builds_by_kind_and_reports_role() {
        let reg = ResourceRegistry::with_builtin();
        let base = PerUnit::new(230.0, 10e3);
        let m = reg
            .build(&CiderSpec::forming_100kva(241.5, 50.0), &base)
            .unwrap();
        assert_eq!(m.kind_name(), "forming");
        assert_eq!(m.port_role(), PortRole::VoltageFormer);
        let m = reg
            .build(&CiderSpec::following_60kva(50e3, 16.4e3), &base)
            .unwrap();
        assert_eq!(m.port_role(), PortRole::CurrentInjector);
    }
}
