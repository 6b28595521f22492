use thiserror::Error;

use crate::bayes::BayesError;
use crate::causal::CausalError;
use crate::grammar::GrammarError;
use crate::maneuver::ManeuverError;
use crate::planner::PlannerError;
use crate::recognition::RecognitionError;
use crate::world::ScenarioError;

/// Any failure of the explanation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Maneuver(#[from] ManeuverError),
    #[error(transparent)]
    Recognition(#[from] RecognitionError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error(transparent)]
    Causal(#[from] CausalError),
    #[error(transparent)]
    Grammar(#[from] GrammarError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
