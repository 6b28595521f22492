//! Counterfactual outcomes, reward effects and agent influences.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{BayesError, BnModel, Value, Variable};
use crate::maneuver::MacroAction;
use crate::planner::Sample;
use crate::reward::{Component, Outcome};
use crate::world::VehicleId;

#[derive(Debug, Error)]
pub enum CausalError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("unexplored counterfactual: {0}")]
    Unexplored(String),
    #[error(transparent)]
    Bayes(#[from] BayesError),
}

/// Macro actions assigned at some depths (1-based), with output sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualQuery {
    pub actions: BTreeMap<usize, MacroAction>,
    pub n_causes: usize,
    pub n_effects: usize,
}

impl CounterfactualQuery {
    pub fn new(actions: impl IntoIterator<Item = (usize, MacroAction)>) -> Self {
        Self { actions: actions.into_iter().collect(), n_causes: 1, n_effects: 1 }
    }

    pub fn with_counts(mut self, n_causes: usize, n_effects: usize) -> Self {
        self.n_causes = n_causes;
        self.n_effects = n_effects;
        self
    }

    /// Assigned actions in depth order.
    pub fn macros(&self) -> Vec<MacroAction> {
        self.actions.values().copied().collect()
    }

    pub fn evidence(&self) -> Vec<(Variable, Value)> {
        self.actions.iter().map(|(&d, &a)| (Variable::Action(d), Value::Action(Some(a)))).collect()
    }

    pub fn validate(&self, model: &BnModel) -> Result<(), CausalError> {
        if self.actions.is_empty() {
            return Err(CausalError::InvalidQuery("no actions assigned".into()));
        }
        for (&d, &a) in &self.actions {
            if d == 0 || d > model.max_depth {
                return Err(CausalError::InvalidQuery(format!(
                    "depth omega{d} out of range, valid depths are omega1..omega{}",
                    model.max_depth
                )));
            }
            if !model.action_support[d - 1].contains(&a) {
                return Err(CausalError::Unexplored(format!("{a} at depth {d} was never explored by the planner")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for CounterfactualQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.actions.iter().map(|(d, a)| format!("omega{d}={a}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Parses `omega1=Continue,omega2=Exit-right`.
impl FromStr for CounterfactualQuery {
    type Err = CausalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let names: Vec<&str> = MacroAction::ALL.iter().map(|a| a.name()).collect();
        let bad = |part: &str| {
            CausalError::InvalidQuery(format!(
                "cannot parse '{part}', expected omegaD=ACTION with D a depth from 1 and ACTION one of {}",
                names.join(", ")
            ))
        };
        let mut actions = BTreeMap::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (lhs, rhs) = part.split_once('=').ok_or_else(|| bad(part))?;
            let d: usize = lhs.trim().strip_prefix("omega").and_then(|d| d.parse().ok()).ok_or_else(|| bad(part))?;
            let a: MacroAction = rhs.parse().map_err(|_| bad(part))?;
            if actions.insert(d, a).is_some() {
                return Err(CausalError::InvalidQuery(format!("depth omega{d} assigned twice")));
            }
        }
        if actions.is_empty() {
            return Err(bad(s));
        }
        Ok(Self::new(actions))
    }
}

fn unexplored(e: BayesError, what: impl FnOnce() -> String) -> CausalError {
    match e {
        BayesError::ZeroProbabilityEvidence => CausalError::Unexplored(what()),
        e => CausalError::Bayes(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeResult {
    pub distribution: BTreeMap<Outcome, f64>,
    pub outcome: Outcome,
    pub probability: f64,
    /// Most likely collision partner when the outcome is a collision.
    pub collided_with: Option<VehicleId>,
}

/// Order used to break ties between equally likely outcomes.
pub const OUTCOME_PRIORITY: [Outcome; 4] = [Outcome::Collision, Outcome::Done, Outcome::Termination, Outcome::Dead];

/// Outcome distribution given the counterfactual actions.
pub fn outcome_given_cf(model: &BnModel, query: &CounterfactualQuery) -> Result<OutcomeResult, CausalError> {
    query.validate(model)?;
    let evidence = query.evidence();
    let dist = model.query(&[Variable::Outcome], &evidence).map_err(|e| unexplored(e, || query.to_string()))?;
    let distribution: BTreeMap<Outcome, f64> =
        Outcome::ALL.into_iter().map(|o| (o, dist.get(&[Value::Outcome(o)]))).collect();
    let mut best = (OUTCOME_PRIORITY[0], distribution[&OUTCOME_PRIORITY[0]]);
    for o in &OUTCOME_PRIORITY[1..] {
        if distribution[o] > best.1 + 1e-12 {
            best = (*o, distribution[o]);
        }
    }
    let collided_with = (best.0 == Outcome::Collision).then(|| collision_partner(model, &evidence)).flatten();
    Ok(OutcomeResult { distribution, outcome: best.0, probability: best.1, collided_with })
}

fn collision_partner(model: &BnModel, evidence: &[(Variable, Value)]) -> Option<VehicleId> {
    let mut mass: BTreeMap<VehicleId, f64> = BTreeMap::new();
    for atom in model.matching_atoms(evidence) {
        if Outcome::from_presence(atom.pattern) != Outcome::Collision {
            continue;
        }
        let Some(stats) = model.rewards.get(&(atom.macros.clone(), atom.key.clone())) else { continue };
        let n: u64 = stats.collisions.values().sum();
        for (v, k) in &stats.collisions {
            *mass.entry(*v).or_default() += atom.weight * *k as f64 / n as f64;
        }
    }
    mass.into_iter().fold(None, |best: Option<(VehicleId, f64)>, (v, m)| match best {
        Some(b) if b.1 >= m => Some(b),
        _ => Some((v, m)),
    })
    .map(|(v, _)| v)
}

/// Difference of one reward component between factual and counterfactual.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub component: Component,
    /// Quantity difference, counterfactual minus factual; what the text reports.
    pub delta: f64,
    /// Weighted reward difference, factual minus counterfactual; used for ordering.
    pub reward_delta: f64,
}

/// Evidence fixing the first actions to the factual plan.
pub fn factual_evidence(model: &BnModel, omega_f: &[MacroAction]) -> Vec<(Variable, Value)> {
    omega_f
        .iter()
        .take(model.max_depth)
        .enumerate()
        .map(|(d, a)| (Variable::Action(d + 1), Value::Action(Some(*a))))
        .collect()
}

/// Per-component effects between two conditioning sets, largest |reward δ| first.
pub fn effects_between(
    model: &BnModel,
    factual: &[(Variable, Value)],
    counterfactual: &[(Variable, Value)],
) -> Result<Vec<Effect>, CausalError> {
    let mut out = Vec::new();
    for c in Component::ALL {
        let f = model.expectation(c, factual).map_err(|e| unexplored(e, || "factual plan".into()))?;
        let cf = model.expectation(c, counterfactual).map_err(|e| unexplored(e, || "counterfactual".into()))?;
        if let (Some(f), Some(cf)) = (f, cf) {
            let w = model.reward_weights.weight(c);
            out.push(Effect { component: c, delta: cf - f, reward_delta: w * f - w * cf });
        }
    }
    out.sort_by(|a, b| b.reward_delta.abs().total_cmp(&a.reward_delta.abs()));
    Ok(out)
}

/// Reward effects of the query relative to the factual plan, truncated to
/// the requested count.
pub fn reward_deltas(model: &BnModel, omega_f: &[MacroAction], query: &CounterfactualQuery) -> Result<Vec<Effect>, CausalError> {
    query.validate(model)?;
    let mut effects = effects_between(model, &factual_evidence(model, omega_f), &query.evidence())?;
    effects.truncate(query.n_effects);
    Ok(effects)
}

/// Kullback-Leibler divergence in bits. Terms with `p = 0` vanish; a term
/// with `p > 0` and `q = 0` makes the divergence infinite. Rounding below
/// zero is clamped.
pub fn kl_bits<T: Float>(p: &[T], q: &[T]) -> T {
    let d = p
        .iter().zip(q).fold(T::zero(), |acc, (&p, &q)| {
        if p <= T::zero() {
            acc
        } else if q <= T::zero() {
            T::infinity()
        } else {
            acc + p * (p / q).log2()
        }
    });
    d.max(T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub vehicle: VehicleId,
    pub sample: Sample,
    pub bits: f64,
}

/// Divergence of the ego's action distribution from its value conditioned
/// on each goal and trajectory of each vehicle. `depth` limits the actions
/// compared to the first `depth`; `None` compares whole traces.
pub fn influence_divergences(model: &BnModel, depth: Option<usize>) -> Result<Vec<Divergence>, CausalError> {
    let targets: Vec<Variable> = match depth {
        Some(d) => (1..=d.clamp(1, model.max_depth)).map(Variable::Action).collect(),
        None => vec![Variable::Omega],
    };
    let marginal = model.query(&targets, &[])?;
    let mut out = Vec::new();
    for v in &model.vehicles {
        for s in v.support() {
            let evidence = [
                (Variable::Goal(v.vehicle), Value::Index(s.goal)),
                (Variable::Trajectory(v.vehicle), Value::Index(s.trajectory)),
            ];
            let cond = model.query(&targets, &evidence)?;
            let (p, q): (Vec<f64>, Vec<f64>) = marginal.entries.iter().map(|(k, p)| (*p, cond.get(k))).unzip();
            out.push(Divergence { vehicle: v.vehicle, sample: s, bits: kl_bits(&p, &q) });
        }
    }
    Ok(out)
}

/// A non-ego trajectory offered as a reason for the ego's behaviour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cause {
    pub vehicle: VehicleId,
    pub goal: String,
    pub macros: Vec<MacroAction>,
    /// p(goal | observations) · p(trajectory | goal).
    pub probability: f64,
    /// `None` stands for an infinite divergence.
    pub divergence_bits: Option<f64>,
}

/// Vehicles whose trajectories change the ego's behaviour, least divergent
/// from the overall behaviour first; equal divergences, infinite ones
/// included, put the more probable trajectory first.
pub fn agent_influences(model: &BnModel, n_causes: usize, options: &CausalOptions) -> Result<Vec<Cause>, CausalError> {
    let all = influence_divergences(model, options.divergence_depth)?;
    let mut causes = Vec::new();
    for v in &model.vehicles {
        let ds: Vec<&Divergence> = all.iter().filter(|d| d.vehicle == v.vehicle).collect();
        // all-infinite divergences mean every hypothesis moves the ego, so only finite ties count
        let constant = ds.iter().all(|d| d.bits.is_finite())
            && ds.windows(2).all(|w| (w[0].bits - w[1].bits).abs() < 1e-12);
        if constant {
            continue;
        }
        for d in ds {
            causes.push(Cause {
                vehicle: v.vehicle,
                goal: v.goal_labels[d.sample.goal].clone(),
                macros: v.macros[d.sample.goal][d.sample.trajectory].clone(),
                probability: v.probability(d.sample),
                divergence_bits: d.bits.is_finite().then_some(d.bits),
            });
        }
    }
    causes.sort_by(|a, b| {
        let key = |c: &Cause| c.divergence_bits.unwrap_or(f64::INFINITY);
        key(a).total_cmp(&key(b)).then(b.probability.total_cmp(&a.probability)).then(a.vehicle.cmp(&b.vehicle))
    });
    causes.truncate(n_causes);
    Ok(causes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOutcome {
    pub omega: Vec<MacroAction>,
    pub outcome: Outcome,
    /// `None` elides the adverb.
    pub probability: Option<f64>,
    pub collided_with: Option<VehicleId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryCause {
    pub vehicle: VehicleId,
    pub omega: Vec<MacroAction>,
    pub probability: Option<f64>,
}

/// Everything the sentence generator needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalSummary {
    pub outcome: SummaryOutcome,
    pub effects: Vec<Effect>,
    pub causes: Vec<SummaryCause>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CausalOptions {
    /// Drop the adverb for probabilities of exactly one.
    pub elide_certain: bool,
    /// Number of leading actions compared when ranking causes; `None`
    /// compares whole traces.
    pub divergence_depth: Option<usize>,
}

impl Default for CausalOptions {
    fn default() -> Self {
        Self { elide_certain: true, divergence_depth: None }
    }
}

pub fn assemble_summary(
    outcome: &OutcomeResult,
    effects: &[Effect],
    causes: &[Cause],
    query: &CounterfactualQuery,
    options: &CausalOptions,
) -> CausalSummary {
    let shown = |p: f64| (!(options.elide_certain && p >= 1.0 - 1e-12)).then_some(p);
    CausalSummary {
        outcome: SummaryOutcome {
            omega: query.macros(),
            outcome: outcome.outcome,
            probability: shown(outcome.probability),
            collided_with: outcome.collided_with,
        },
        effects: effects.iter().filter(|e| e.delta != 0.0).take(query.n_effects).copied().collect(),
        causes: causes
            .iter()
            .take(query.n_causes)
            .map(|c| SummaryCause { vehicle: c.vehicle, omega: c.macros.clone(), probability: shown(c.probability) })
            .collect(),
    }
}

/// Runs every causal step for one query.
pub fn explain(
    model: &BnModel,
    omega_f: &[MacroAction],
    query: &CounterfactualQuery,
    options: &CausalOptions,
) -> Result<CausalSummary, CausalError> {
    let outcome = outcome_given_cf(model, query)?;
    let effects = effects_between(model, &factual_evidence(model, omega_f), &query.evidence())?;
    let causes = agent_influences(model, query.n_causes, options)?;
    Ok(assemble_summary(&outcome, &effects, &causes, query, options))
}

#[cfg(test)]
mod tests;
