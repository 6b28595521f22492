//! Optional TOML configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use avexplain::causal::CausalOptions;
use avexplain::grammar::StrTable;
use avexplain::planner::{PlannerConfig, PlanningSetup};
use avexplain::recognition::RecognitionConfig;
use avexplain::reward::RewardConfig;
use serde::Deserialize;

use crate::error::CliError;

/// Environment variable naming a config file when `--config` is absent.
pub const CONFIG_ENV: &str = "AVEXPLAIN_CONFIG";

/// Phrasing preset used when neither the flag nor the config names one.
pub const DEFAULT_PRESET: &str = "narrative";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub planner: PlannerConfig,
    pub rewards: RewardConfig,
    pub recognition: RecognitionConfig,
    pub causal: CausalOptions,
    /// Phrase table overrides; see [`StrTable::from_toml`].
    pub phrasing: Option<toml::Table>,
}

impl Config {
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })?;
        Self::parse(&text, path)
    }

    /// Loads `explicit`, else the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self, CliError> {
        let path = explicit.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        match path {
            Some(p) => Self::load(&p),
            None => Ok(Self::default()),
        }
    }

    pub fn setup(&self) -> PlanningSetup {
        PlanningSetup { planner: self.planner.clone(), rewards: self.rewards.clone(), recognition: self.recognition.clone() }
    }

    /// Phrase table from the config, with `preset` taking precedence over
    /// the config's own preset.
    pub fn table(&self, preset: Option<&str>) -> Result<StrTable, CliError> {
        let mut t = self.phrasing.clone().unwrap_or_default();
        match preset {
            Some(p) => {
                t.insert("preset".into(), p.into());
            }
            None => {
                t.entry("preset").or_insert_with(|| DEFAULT_PRESET.into());
            }
        }
        let text = toml::to_string(&t).map_err(|e| CliError::Config { path: "phrasing".into(), message: e.to_string() })?;
        Ok(StrTable::from_toml(&text)?)
    }
}
