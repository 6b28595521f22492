//! Repeated seeded runs of one scenario with a fixed query set.

use std::path::Path;

use avexplain::causal::CausalOptions;
use avexplain::grammar::StrTable;
use avexplain::planner::PlanningSetup;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::run::plan_run;

#[derive(Debug, Clone)]
pub struct BatchSpec {
    pub first_seed: u64,
    pub runs: u64,
    pub queries: Vec<String>,
    pub setup: PlanningSetup,
    pub n_causes: usize,
    pub n_effects: usize,
    pub causal: CausalOptions,
    pub table: StrTable,
}

/// One (seed, query) row; failed rows carry the error and its exit code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRow {
    pub seed: u64,
    pub plan: String,
    pub query: String,
    pub outcome: String,
    pub probability: Option<f64>,
    pub collided_with: Option<u32>,
    pub explanation: String,
    pub error: String,
    pub exit_code: i32,
}

impl BatchRow {
    fn failed(seed: u64, plan: String, query: &str, e: &CliError) -> Self {
        BatchRow {
            seed,
            plan,
            query: query.to_string(),
            outcome: String::new(),
            probability: None,
            collided_with: None,
            explanation: String::new(),
            error: e.to_string(),
            exit_code: e.exit_code(),
        }
    }
}

fn plan_names(plan: &[avexplain::maneuver::MacroAction]) -> String {
    plan.iter().map(|a| a.name()).collect::<Vec<_>>().join(",")
}

fn run_seed(scenario: &Path, spec: &BatchSpec, seed: u64) -> Vec<BatchRow> {
    let mut setup = spec.setup.clone();
    setup.planner.seed = seed;
    let run = match plan_run(scenario, &setup) {
        Ok(r) => r,
        Err(e) => return spec.queries.iter().map(|q| BatchRow::failed(seed, String::new(), q, &e)).collect(),
    };
    let plan = plan_names(&run.artifacts.plan);
    spec.queries
        .iter()
        .map(|q| match run.explain(q, spec.n_causes, spec.n_effects, &spec.causal, &spec.table) {
            Ok(x) => BatchRow {
                seed,
                plan: plan.clone(),
                query: x.query,
                outcome: x.summary.outcome.outcome.to_string(),
                // an elided probability is a certain outcome
                probability: Some(x.summary.outcome.probability.unwrap_or(1.0)),
                collided_with: x.summary.outcome.collided_with,
                explanation: x.text,
                error: String::new(),
                exit_code: 0,
            },
            Err(e) => BatchRow::failed(seed, plan.clone(), q, &e),
        })
        .collect()
}

/// Runs every seed in parallel; rows come back in seed then query order.
pub fn run_batch(scenario: &Path, spec: &BatchSpec) -> Vec<BatchRow> {
    (spec.first_seed..spec.first_seed + spec.runs)
        .into_par_iter()
        .map(|seed| run_seed(scenario, spec, seed))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn write_csv(rows: &[BatchRow], out: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(out).map_err(|e| CliError::artifacts(out, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| CliError::artifacts(out, e))?;
    }
    w.flush().map_err(|e| CliError::artifacts(out, e))
}
