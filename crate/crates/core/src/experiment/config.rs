//! Campaign configuration, from flags or a TOML file.

use super::ExperimentError;
use crate::engine::{Budget, CampaignSettings, EngineKind, MutationParams};
use crate::gen::{generator_by_name, load_pool, Generator, GeneratorConfig};
use crate::targets::{target_by_name, MiniScript, Target, TARGET_NAMES};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Which executions go to `events.jsonl`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogMode {
    /// Every execution.
    #[default]
    Full,
    /// Executions that added coverage or failed.
    Interesting,
}

impl FromStr for LogMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(LogMode::Full),
            "interesting" => Ok(LogMode::Interesting),
            _ => Err(format!("unknown log mode `{s}` (expected full or interesting)")),
        }
    }
}

impl fmt::Display for LogMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogMode::Full => "full",
            LogMode::Interesting => "interesting",
        })
    }
}

/// Overrides on top of a generator's built-in configuration.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorOverrides {
    pub max_depth: Option<u32>,
    pub max_children: Option<u32>,
    pub max_str_len: Option<u32>,
    pub max_attributes: Option<u32>,
    /// Files with one literal per line; they replace the built-in pools.
    pub name_pool: Option<PathBuf>,
    pub attribute_pool: Option<PathBuf>,
    pub value_pool: Option<PathBuf>,
}

impl GeneratorOverrides {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn apply(&self, mut base: GeneratorConfig) -> Result<GeneratorConfig, ExperimentError> {
        if let Some(v) = self.max_depth {
            base.max_depth = v;
        }
        if let Some(v) = self.max_children {
            base.max_children = v;
        }
        if let Some(v) = self.max_str_len {
            base.max_str_len = v;
        }
        if let Some(v) = self.max_attributes {
            base.max_attributes = v;
        }
        let load = |path: &Path| {
            load_pool(path).map_err(|e| ExperimentError::Config(format!("pool file {}: {e}", path.display())))
        };
        if let Some(p) = &self.name_pool {
            base.name_pool = load(p)?;
        }
        if let Some(p) = &self.attribute_pool {
            base.attribute_pool = load(p)?;
        }
        if let Some(p) = &self.value_pool {
            base.value_pool = load(p)?;
        }
        Ok(base)
    }
}

/// The on-disk form of a configuration. Every field is optional so a file
/// can be completed by flags.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub engine: Option<String>,
    /// Engines of an experiment.
    pub engines: Option<Vec<String>>,
    pub target: Option<String>,
    pub generator: Option<String>,
    pub budget: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub seed_inputs: Vec<PathBuf>,
    pub log: Option<String>,
    pub virtual_clock_us: Option<u64>,
    pub strict_warnings: Option<bool>,
    pub mean_mutations: Option<f64>,
    pub mean_length: Option<f64>,
    pub ci95: Option<bool>,
    pub jobs: Option<usize>,
    #[serde(default, rename = "generator-config")]
    pub generator_config: GeneratorOverrides,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut file: ConfigFile = toml::from_str(&text)
            .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        // relative paths in a config file are relative to the file
        let dir = path.parent().unwrap_or(Path::new("."));
        for p in file.seed_inputs.iter_mut().chain(file.output.as_mut()) {
            *p = dir.join(&*p);
        }
        let g = &mut file.generator_config;
        for pool in [&mut g.name_pool, &mut g.attribute_pool, &mut g.value_pool].into_iter().flatten() {
            *pool = dir.join(&*pool);
        }
        Ok(file)
    }

    /// Fields set in `other` replace fields set here.
    pub fn overlay(&mut self, other: ConfigFile) {
        macro_rules! take {
            ($($f:ident),*) => { $( if other.$f.is_some() { self.$f = other.$f; } )* };
        }
        take!(
            engine, engines, target, generator, budget, seed, output, repetitions, log, virtual_clock_us,
            strict_warnings, mean_mutations, mean_length, ci95, jobs
        );
        if !other.seed_inputs.is_empty() {
            self.seed_inputs = other.seed_inputs;
        }
        let (g, o) = (&mut self.generator_config, other.generator_config);
        take_opt(&mut g.max_depth, o.max_depth);
        take_opt(&mut g.max_children, o.max_children);
        take_opt(&mut g.max_str_len, o.max_str_len);
        take_opt(&mut g.max_attributes, o.max_attributes);
        take_opt(&mut g.name_pool, o.name_pool);
        take_opt(&mut g.attribute_pool, o.attribute_pool);
        take_opt(&mut g.value_pool, o.value_pool);
    }

    pub fn budget(&self) -> Result<Option<Budget>, ExperimentError> {
        self.budget.as_deref().map(str::parse).transpose().map_err(ExperimentError::Config)
    }

    pub fn log_mode(&self) -> Result<LogMode, ExperimentError> {
        Ok(self.log.as_deref().map(str::parse).transpose().map_err(ExperimentError::Config)?.unwrap_or_default())
    }

    pub fn mutation(&self) -> MutationParams {
        let d = MutationParams::default();
        MutationParams {
            mean_count: self.mean_mutations.unwrap_or(d.mean_count),
            mean_length: self.mean_length.unwrap_or(d.mean_length),
            rng_seed: d.rng_seed,
        }
    }

    /// Resolve into a single campaign.
    pub fn campaign(&self) -> Result<CampaignConfig, ExperimentError> {
        let required = |v: &Option<String>, what: &str| {
            v.clone().ok_or_else(|| ExperimentError::Config(format!("missing {what}")))
        };
        let engine: EngineKind = required(&self.engine, "engine")?.parse().map_err(ExperimentError::Config)?;
        let target = required(&self.target, "target")?;
        let output = self.output.clone().ok_or_else(|| ExperimentError::Config("missing output directory".into()))?;
        let mut c = CampaignConfig::new(engine, &target, self.generator.as_deref(), output);
        c.generator_overrides = self.generator_config.clone();
        if let Some(b) = self.budget()? {
            c.budget = b;
        }
        c.seed = self.seed.unwrap_or(0);
        c.mutation = self.mutation();
        c.seed_inputs = self.seed_inputs.clone();
        c.log = self.log_mode()?;
        c.virtual_clock_us = self.virtual_clock_us;
        c.strict_warnings = self.strict_warnings.unwrap_or(false);
        Ok(c)
    }
}

fn take_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

/// One fully resolved campaign.
#[derive(Clone, Debug, PartialEq)]
pub struct CampaignConfig {
    pub engine: EngineKind,
    pub target: String,
    /// Required unless the engine is CGF.
    pub generator: Option<String>,
    pub generator_overrides: GeneratorOverrides,
    pub budget: Budget,
    pub seed: u64,
    pub mutation: MutationParams,
    pub output: PathBuf,
    /// Raw seed inputs for CGF.
    pub seed_inputs: Vec<PathBuf>,
    pub log: LogMode,
    pub virtual_clock_us: Option<u64>,
    pub strict_warnings: bool,
}

impl CampaignConfig {
    /// Defaults for everything but the required names.
    pub fn new(engine: EngineKind, target: &str, generator: Option<&str>, output: impl Into<PathBuf>) -> Self {
        Self {
            engine,
            target: target.into(),
            generator: generator.map(String::from),
            generator_overrides: GeneratorOverrides::default(),
            budget: Budget::Duration(std::time::Duration::from_secs(60)),
            seed: 0,
            mutation: MutationParams::default(),
            output: output.into(),
            seed_inputs: Vec::new(),
            log: LogMode::Full,
            virtual_clock_us: None,
            strict_warnings: false,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !TARGET_NAMES.contains(&self.target.as_str()) {
            return Err(ExperimentError::Config(format!(
                "unknown target `{}` (expected one of {})",
                self.target,
                TARGET_NAMES.join(", ")
            )));
        }
        match (self.engine, &self.generator) {
            (EngineKind::Cgf, _) if self.seed_inputs.is_empty() => {
                return Err(ExperimentError::Config("cgf needs at least one --seed-input".into()))
            }
            (EngineKind::Cgf, Some(_)) => {
                return Err(ExperimentError::Config("cgf works on raw inputs and takes no generator".into()))
            }
            (EngineKind::Zest | EngineKind::QuickCheck, None) => {
                return Err(ExperimentError::Config(format!("{} needs a --generator", self.engine)))
            }
            _ => {}
        }
        if self.engine != EngineKind::Cgf && !self.seed_inputs.is_empty() {
            return Err(ExperimentError::Config(format!("{} does not take seed inputs", self.engine)));
        }
        self.settings().validate()?;
        Ok(())
    }

    pub fn settings(&self) -> CampaignSettings {
        let mut settings = CampaignSettings::new(self.budget, self.seed);
        settings.mutation.mean_count = self.mutation.mean_count;
        settings.mutation.mean_length = self.mutation.mean_length;
        if let Some(us) = self.virtual_clock_us {
            settings = settings.with_virtual_clock(us);
        }
        settings
    }

    pub fn build_target(&self) -> Result<Box<dyn Target>, ExperimentError> {
        build_target(&self.target, self.strict_warnings)
    }

    pub fn build_generator(&self) -> Result<Option<Box<dyn Generator>>, ExperimentError> {
        match &self.generator {
            Some(name) => build_generator(name, &self.generator_overrides).map(Some),
            None => Ok(None),
        }
    }
}

/// A built-in target with its options applied.
pub fn build_target(name: &str, strict_warnings: bool) -> Result<Box<dyn Target>, ExperimentError> {
    if strict_warnings {
        return match name {
            "miniscript" => Ok(Box::new(MiniScript::strict())),
            _ => Err(ExperimentError::Config(format!("target `{name}` has no strict warnings mode"))),
        };
    }
    target_by_name(name).ok_or_else(|| {
        ExperimentError::Config(format!("unknown target `{name}` (expected one of {})", TARGET_NAMES.join(", ")))
    })
}

pub fn build_generator(name: &str, overrides: &GeneratorOverrides) -> Result<Box<dyn Generator>, ExperimentError> {
    let base = generator_by_name(name, None).map_err(|e| ExperimentError::Config(e.to_string()))?;
    if overrides.is_empty() {
        return Ok(base);
    }
    let config = overrides.apply(base.config().clone())?;
    generator_by_name(name, Some(config)).map_err(|e| ExperimentError::Config(e.to_string()))
}

/// The generator that pairs with a built-in target.
pub fn default_generator_for(target: &str) -> Option<&'static str> {
    match target {
        "minixml" => Some("xml"),
        "miniscript" => Some("script"),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn cgf_without_seed_inputs_is_rejected() {
        let c = CampaignConfig::new(EngineKind::Cgf, "minixml", None, "out");
        assert!(matches!(c.validate(), Err(ExperimentError::Config(m)) if m.contains("seed-input")));
    }

    #[test]
    fn generator_engines_need_a_generator() {
        let c = CampaignConfig::new(EngineKind::Zest, "minixml", None, "out");
        assert!(c.validate().is_err());
        let c = CampaignConfig::new(EngineKind::Zest, "minixml", Some("xml"), "out");
        c.validate().unwrap();
    }

    #[test]
    fn unknown_target_is_rejected() {
        let c = CampaignConfig::new(EngineKind::QuickCheck, "maven", Some("xml"), "out");
        assert!(c.validate().is_err());
    }

    #[test]
    fn strict_warnings_only_for_scripts() {
        assert!(build_target("miniscript", true).is_ok());
        assert!(build_target("minixml", true).is_err());
    }

    #[test]
    fn config_file_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "engine = \"cgf\"\nseed_inputs = [\"a.xml\"]\n[generator-config]\nname_pool = \"names.txt\"").unwrap();
        let c = ConfigFile::load(&path).unwrap();
        assert_eq!(c.seed_inputs, vec![dir.path().join("a.xml")]);
        assert_eq!(c.generator_config.name_pool, Some(dir.path().join("names.txt")));
    }

    #[test]
    fn unknown_keys_are_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "engnie = \"zest\"\n").unwrap();
        assert!(ConfigFile::load(&path).is_err());
    }

    #[test]
    fn overrides_replace_pools() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("n.txt"), "alpha\n\nbeta\n").unwrap();
        let o = GeneratorOverrides {
            max_depth: Some(2),
            name_pool: Some(dir.path().join("n.txt")),
            ..Default::default()
        };
        let g = build_generator("xml", &o).unwrap();
        assert_eq!(g.config().max_depth, 2);
        assert_eq!(g.config().name_pool, vec!["alpha", "beta"]);
    }
}
