use std::path::Path;

use avexplain::bayes::BayesError;
use avexplain::causal::CausalError;
use avexplain::grammar::GrammarError;
use avexplain::planner::PlannerError;
use avexplain::world::ScenarioError;
use thiserror::Error;

/// Process exit codes, one per failure class.
pub mod exit {
    pub const SCENARIO_PARSE: i32 = 10;
    pub const VALIDATION: i32 = 11;
    pub const PLANNING: i32 = 12;
    pub const INFERENCE: i32 = 13;
    pub const UNEXPLORED: i32 = 14;
    pub const QUERY: i32 = 15;
    pub const ARTIFACTS: i32 = 16;
    pub const PHRASING: i32 = 17;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] avexplain::Error),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("run directory {path}: {message}")]
    Artifacts { path: String, message: String },
    /// First failing row of a batch; the table itself was written.
    #[error("seed {seed}, query {query}: {message}")]
    Batch { seed: u64, query: String, message: String, code: i32 },
}

macro_rules! from_core {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Core(e.into())
            }
        }
    )*};
}

from_core!(ScenarioError, PlannerError, BayesError, CausalError, GrammarError);

impl CliError {
    pub fn artifacts(path: &Path, message: impl ToString) -> Self {
        CliError::Artifacts { path: path.display().to_string(), message: message.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        use avexplain::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Scenario(ScenarioError::Io { .. } | ScenarioError::Parse(_)) => exit::SCENARIO_PARSE,
                E::Scenario(_) | E::Planner(PlannerError::Config(_)) => exit::VALIDATION,
                E::Planner(_) | E::Maneuver(_) | E::Recognition(_) => exit::PLANNING,
                E::Bayes(_) | E::Causal(CausalError::Bayes(_)) => exit::INFERENCE,
                E::Causal(CausalError::Unexplored(_)) => exit::UNEXPLORED,
                E::Causal(CausalError::InvalidQuery(_)) => exit::QUERY,
                E::Grammar(_) => exit::PHRASING,
            },
            CliError::Config { .. } => exit::VALIDATION,
            CliError::Artifacts { .. } => exit::ARTIFACTS,
            CliError::Batch { code, .. } => *code,
        }
    }
}
