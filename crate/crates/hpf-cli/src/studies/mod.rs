//! Study orchestration: each study variant implements [`Study`] and is
//! selected by name through the [`StudyRegistry`].

mod resource;
mod robustness;
mod scalability;
mod system;

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::Result;

use crate::config::StudyFile;
use hpf_core::network::NetworkSpec;

/// Everything a study needs to run.
pub struct StudyContext {
    pub file: StudyFile,
    pub net: NetworkSpec,
    pub out_dir: PathBuf,
    pub with_oracle: bool,
    pub verbose: bool,
}

impl StudyContext {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// One runnable study variant.
pub trait Study: Sync {
    fn name(&self) -> &'static str;
    fn describe(&self) -> &'static str;
    fn run(&self, ctx: &StudyContext) -> Result<()>;
}

/// Name-keyed registry of the available studies.
pub struct StudyRegistry {
    studies: BTreeMap<&'static str, Box<dyn Study>>,
}

impl Default for StudyRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

impl StudyRegistry {
    pub fn with_builtin() -> Self {
        let mut studies: BTreeMap<&'static str, Box<dyn Study>> = BTreeMap::new();
        for s in [
            Box::new(resource::ResourceStudy::forming()) as Box<dyn Study>,
            Box::new(resource::ResourceStudy::following()),
            Box::new(system::SystemStudy),
            Box::new(robustness::RobustnessStudy),
            Box::new(scalability::ScalabilityStudy),
        ] {
            studies.insert(s.name(), s);
        }
        Self { studies }
    }

    pub fn get(&self, name: &str) -> Option<&dyn Study> {
        self.studies.get(name).map(|s| s.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.studies.keys().copied()
    }
}
