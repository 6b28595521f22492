//! Planning runs, their persisted artifacts and queries against them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use avexplain::bayes::{build_bn, BnExport, BnModel};
use avexplain::causal::{explain, CausalError, CausalOptions, CausalSummary, CounterfactualQuery};
use avexplain::grammar::{explain_text, StrTable};
use avexplain::maneuver::MacroAction;
use avexplain::planner::{plan_scenario, PlanningSetup, SearchTree, TraceLog};
use avexplain::reward::Outcome;
use avexplain::world::load_scenario;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const RUN_FILE: &str = "run.json";
pub const TRACE_FILE: &str = "trace.json";
pub const TREE_FILE: &str = "tree.json";
pub const BN_FILE: &str = "bn.json";

/// Search statistics of one first action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstAction {
    pub visits: u64,
    pub mean_reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub records: usize,
    pub outcomes: BTreeMap<Outcome, usize>,
    pub mean_reward: f64,
    pub first_actions: BTreeMap<MacroAction, FirstAction>,
}

impl TraceSummary {
    pub fn new(trace: &TraceLog, tree: &SearchTree) -> Self {
        let mut outcomes: BTreeMap<Outcome, usize> = Outcome::ALL.into_iter().map(|o| (o, 0)).collect();
        for r in &trace.records {
            *outcomes.entry(r.outcome).or_default() += 1;
        }
        let n = trace.records.len();
        let mean_reward = trace.records.iter().map(|r| r.reward).sum::<f64>() / n.max(1) as f64;
        let first_actions = tree
            .root()
            .map(|root| {
                root.children.iter().map(|(a, c)| (*a, FirstAction { visits: c.visits, mean_reward: c.q })).collect()
            })
            .unwrap_or_default();
        Self { records: n, outcomes, mean_reward, first_actions }
    }
}

/// One answered query: the summary and both renderings of the sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub query: String,
    pub summary: CausalSummary,
    pub raw: String,
    pub text: String,
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArtifacts {
    pub scenario: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub setup: PlanningSetup,
    pub plan: Vec<MacroAction>,
    pub summary: TraceSummary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub explanations: Vec<Explanation>,
}

/// A planning run held in memory.
#[derive(Debug, Clone)]
pub struct Run {
    pub artifacts: RunArtifacts,
    pub trace: TraceLog,
    pub tree: Option<SearchTree>,
    pub model: BnModel,
}

/// Loads `scenario`, plans with `setup` and builds the network.
pub fn plan_run(scenario: &Path, setup: &PlanningSetup) -> Result<Run, CliError> {
    let bytes = fs::read(scenario).map_err(|source| {
        avexplain::world::ScenarioError::Io { path: scenario.display().to_string(), source }
    })?;
    let sc = load_scenario(scenario)?;
    let (_, out) = plan_scenario(&sc, setup)?;
    let model = build_bn(&out.trace)?;
    let artifacts = RunArtifacts {
        scenario: scenario.display().to_string(),
        scenario_sha256: hex::encode(Sha256::digest(&bytes)),
        seed: setup.planner.seed,
        setup: setup.clone(),
        plan: out.plan.clone(),
        summary: TraceSummary::new(&out.trace, &out.tree),
        explanations: Vec::new(),
    };
    Ok(Run { artifacts, trace: out.trace, tree: Some(out.tree), model })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifacts serialise");
    s.push('\n');
    s
}

fn write(dir: &Path, name: &str, text: String) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::artifacts(&path, e))
}

fn read<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T, CliError> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).map_err(|e| CliError::artifacts(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::artifacts(&path, e))
}

impl Run {
    /// Writes `run.json`, `trace.json`, `tree.json` and `bn.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::artifacts(dir, e))?;
        write(dir, RUN_FILE, to_json(&self.artifacts))?;
        write(dir, TRACE_FILE, to_json(&self.trace))?;
        if let Some(tree) = &self.tree {
            write(dir, TREE_FILE, to_json(tree))?;
        }
        write(dir, BN_FILE, to_json(&self.export()))
    }

    /// Reads a saved run and rebuilds the network from its trace.
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        if !dir.is_dir() {
            return Err(CliError::artifacts(dir, "not a directory"));
        }
        let artifacts: RunArtifacts = read(dir, RUN_FILE)?;
        let trace: TraceLog = read(dir, TRACE_FILE)?;
        let tree = dir.join(TREE_FILE).exists().then(|| read(dir, TREE_FILE)).transpose()?;
        let model = build_bn(&trace)?;
        Ok(Run { artifacts, trace, tree, model })
    }

    pub fn export(&self) -> BnExport {
        self.model.export()
    }

    /// Answers `query` against this run.
    pub fn explain(
        &self,
        query: &str,
        n_causes: usize,
        n_effects: usize,
        options: &CausalOptions,
        table: &StrTable,
    ) -> Result<Explanation, CliError> {
        let depth = self.model.max_depth;
        let q: CounterfactualQuery = query.parse().map_err(|e| match e {
            CausalError::InvalidQuery(m) => CausalError::InvalidQuery(format!("{m}; this run has depths omega1..omega{depth}")),
            other => other,
        })?;
        let q = q.with_counts(n_causes, n_effects);
        let summary = explain(&self.model, &self.artifacts.plan, &q, options)?;
        let (raw, text) = explain_text(&summary, table)?;
        Ok(Explanation { query: q.to_string(), summary, raw, text })
    }
}
