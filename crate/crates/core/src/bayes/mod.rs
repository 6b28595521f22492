//! Bayesian network over goals, trajectories, ego actions, rewards and
//! outcomes, estimated from a planning trace.

mod export;
mod infer;
mod variables;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maneuver::MacroAction;
use crate::planner::{Sample, TraceLog};
use crate::reward::{Component, RewardConfig};
use crate::world::VehicleId;

pub use export::{ActionEntry, BnExport, JointEntry, RewardEntry, VariableEntry};
pub use infer::{Atom, Distribution};
pub use variables::{outcome_flags, FullAssignment, Value, Variable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BayesError {
    #[error("empty trace log")]
    EmptyTraceLog,
    #[error("incomplete assignment: {0}")]
    IncompleteAssignment(String),
    #[error("zero-probability evidence")]
    ZeroProbabilityEvidence,
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("invalid trace log: {0}")]
    InvalidTrace(String),
}

/// Joint non-ego assignment, one entry per vehicle in [`BnModel::vehicles`] order.
pub type JointKey = Vec<Sample>;

/// Selection counts of the action taken after a prefix in one joint state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ActionCounts {
    /// `None` counts traces that ended after the prefix.
    pub counts: BTreeMap<Option<MacroAction>, u64>,
    pub total: u64,
    pub records: Vec<usize>,
}

impl ActionCounts {
    pub fn probability(&self, action: Option<MacroAction>) -> f64 {
        self.counts.get(&action).map_or(0.0, |&n| n as f64 / self.total as f64)
    }
}

/// Sample statistics of one reward component in one reached state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComponentStats {
    /// Traces in which the component was set.
    pub count: u64,
    pub mean: f64,
    /// Unbiased sample variance; zero for a single sample.
    pub variance: f64,
}

/// Reward statistics of the traces that reached one (ω, s) state.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardStats {
    pub total: u64,
    pub components: BTreeMap<Component, ComponentStats>,
    /// Observed presence masks and their counts. Outcomes are mutually
    /// exclusive, so presence is tracked jointly rather than per component.
    pub patterns: BTreeMap<u8, u64>,
    /// How often each vehicle was the one collided with.
    pub collisions: BTreeMap<VehicleId, u64>,
    pub records: Vec<usize>,
}

impl RewardStats {
    /// Probability that `c` is set (not the empty value).
    pub fn presence(&self, c: Component) -> f64 {
        self.components.get(&c).map_or(0.0, |s| s.count as f64 / self.total as f64)
    }

    pub fn pattern_probability(&self, mask: u8) -> f64 {
        self.patterns.get(&mask).map_or(0.0, |&n| n as f64 / self.total as f64)
    }
}

/// Goal and trajectory probabilities of one non-ego vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleFactor {
    pub vehicle: VehicleId,
    pub goal_labels: Vec<String>,
    pub goals: Vec<f64>,
    /// `trajectories[g][t]` is p(t | g).
    pub trajectories: Vec<Vec<f64>>,
    pub macros: Vec<Vec<Vec<MacroAction>>>,
}

impl VehicleFactor {
    pub fn probability(&self, s: Sample) -> f64 {
        let pg = self.goals.get(s.goal).copied().unwrap_or(0.0);
        let pt = self.trajectories.get(s.goal).and_then(|t| t.get(s.trajectory)).copied().unwrap_or(0.0);
        pg * pt
    }

    /// Assignments with non-zero probability.
    pub fn support(&self) -> Vec<Sample> {
        let mut out = Vec::new();
        for (g, ts) in self.trajectories.iter().enumerate() {
            for t in 0..ts.len() {
                let s = Sample { goal: g, trajectory: t };
                if self.probability(s) > 0.0 {
                    out.push(s);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BnModel {
    pub ego: VehicleId,
    pub max_depth: usize,
    pub vehicles: Vec<VehicleFactor>,
    pub actions: BTreeMap<(Vec<MacroAction>, JointKey), ActionCounts>,
    pub rewards: BTreeMap<(Vec<MacroAction>, JointKey), RewardStats>,
    /// Realised actions per depth (index 0 is depth 1).
    pub action_support: Vec<Vec<MacroAction>>,
    pub reward_weights: RewardConfig,
    atoms: Vec<Atom>,
}

/// Raw reward samples of one (ω, s) state before summarising.
#[derive(Default)]
struct StateSamples {
    total: u64,
    values: BTreeMap<Component, Vec<f64>>,
    patterns: BTreeMap<u8, u64>,
    collisions: BTreeMap<VehicleId, u64>,
    records: Vec<usize>,
}

fn sample_stats(values: &[f64]) -> ComponentStats {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    ComponentStats { count: n as u64, mean, variance }
}

/// Builds the network from a planning trace and the predictions it carries.
pub fn build_bn(trace: &TraceLog) -> Result<BnModel, BayesError> {
    if trace.records.is_empty() {
        return Err(BayesError::EmptyTraceLog);
    }
    let mut vehicles: Vec<VehicleFactor> = trace
        .predictions
        .iter()
        .map(|p| VehicleFactor {
            vehicle: p.vehicle,
            goal_labels: p.goals.iter().map(|g| g.label.clone()).collect(),
            goals: p.goals.iter().map(|g| g.probability).collect(),
            trajectories: p.goals.iter().map(|g| g.trajectories.iter().map(|t| t.probability).collect()).collect(),
            macros: p.goals.iter().map(|g| g.trajectories.iter().map(|t| t.macros.clone()).collect()).collect(),
        })
        .collect();
    vehicles.sort_by_key(|v| v.vehicle);

    let mut actions: BTreeMap<(Vec<MacroAction>, JointKey), ActionCounts> = BTreeMap::new();
    let mut samples: BTreeMap<(Vec<MacroAction>, JointKey), StateSamples> = BTreeMap::new();
    let mut action_support = vec![Vec::new(); trace.max_depth];
    for (i, r) in trace.records.iter().enumerate() {
        if r.macros.len() > trace.max_depth {
            return Err(BayesError::InvalidTrace(format!("record {i} is deeper than {}", trace.max_depth)));
        }
        let key: JointKey = vehicles
            .iter()
            .map(|v| {
                let s = r.samples.get(&v.vehicle).copied().ok_or_else(|| {
                    BayesError::InvalidTrace(format!("record {i} has no sample for vehicle {}", v.vehicle))
                })?;
                if v.probability(s) <= 0.0 {
                    return Err(BayesError::InvalidTrace(format!("record {i} samples an impossible trajectory")));
                }
                Ok(s)
            })
            .collect::<Result<_, _>>()?;
        for (d, support) in action_support.iter_mut().enumerate().take(r.macros.len() + 1) {
            let next = r.macros.get(d).copied();
            let e = actions.entry((r.macros[..d].to_vec(), key.clone())).or_default();
            *e.counts.entry(next).or_default() += 1;
            e.total += 1;
            e.records.push(i);
            if let Some(a) = next.filter(|a| !support.contains(a)) {
                support.push(a);
            }
        }
        let e = samples.entry((r.macros.clone(), key)).or_default();
        e.total += 1;
        *e.patterns.entry(r.components.presence()).or_default() += 1;
        if let Some(v) = r.collided_with {
            *e.collisions.entry(v).or_default() += 1;
        }
        e.records.push(i);
        for (c, v) in &r.components.0 {
            e.values.entry(*c).or_default().push(*v);
        }
    }
    for s in &mut action_support {
        s.sort();
    }
    let rewards = samples
        .into_iter()
        .map(|(k, s)| {
            let components = s.values.into_iter().map(|(c, v)| (c, sample_stats(&v))).collect();
            (k, RewardStats { total: s.total, components, patterns: s.patterns, collisions: s.collisions, records: s.records })
        })
        .collect();
    let mut model = BnModel { ego: trace.ego, max_depth: trace.max_depth, vehicles, actions, rewards, action_support, reward_weights: trace.rewards.clone(), atoms: vec![] };
    model.atoms = infer::enumerate_atoms(&model);
    Ok(model)
}

#[cfg(test)]
mod tests;
