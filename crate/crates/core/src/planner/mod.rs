//! Monte Carlo tree search over ego macro actions.

mod trace;
mod tree;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maneuver::{applicable_macros, execute_macro, AgentState, MacroAction, ManeuverError, MotionParams, Traffic, Trajectory};
use crate::recognition::{predict_vehicle, RecognitionConfig, RecognitionError, VehiclePrediction};
use crate::reward::{terminal_reward, Outcome, RewardConfig};
use crate::world::{sample_initial_states, Goal, JointState, RoadLayout, Scenario, VehicleId};

pub use trace::{Sample, TraceLog, TraceRecord};
pub use tree::{ChildStats, Node, SearchTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid planner configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Maneuver(#[from] ManeuverError),
    #[error(transparent)]
    Recognition(#[from] RecognitionError),
    #[error("no predicted trajectory for vehicle {0}")]
    MissingTrajectory(VehicleId),
    #[error("ego vehicle {0} missing from the initial state")]
    MissingEgo(VehicleId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub iterations: usize,
    pub max_depth: usize,
    pub exploration: f64,
    pub seed: u64,
    /// Vehicles are discs of this radius for collision checks.
    pub collision_radius_m: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self { iterations: 300, max_depth: 3, exploration: 1.0, seed: 0, collision_radius_m: 1.5 }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.iterations == 0 {
            return Err(PlannerError::Config("iterations must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(PlannerError::Config("max_depth must be at least 1".into()));
        }
        if !(self.exploration >= 0.0 && self.exploration.is_finite()) {
            return Err(PlannerError::Config("exploration constant must be finite and non-negative".into()));
        }
        if !(self.collision_radius_m > 0.0) {
            return Err(PlannerError::Config("collision radius must be positive".into()));
        }
        Ok(())
    }
}

/// Result of executing one macro action in simulation.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// Ego motion during the step, cut at a terminal event.
    pub trajectory: Trajectory,
    pub end: AgentState,
    pub outcome: Option<Outcome>,
    pub collided_with: Option<VehicleId>,
}

/// Fixed inputs of a forward simulation.
#[derive(Debug, Clone, Copy)]
pub struct SimContext<'a> {
    pub ego: VehicleId,
    pub layout: &'a RoadLayout,
    pub goal: &'a Goal,
    pub params: &'a MotionParams,
    pub collision_radius_m: f64,
}

/// Executes `action` from `agent` at global `step` while other vehicles
/// follow `traffic`. Terminal checks run per step in the order collision,
/// goal reached; running out of horizon ends the step as a termination.
pub fn simulate_step(ctx: &SimContext<'_>, agent: &AgentState, step: usize, action: MacroAction, traffic: Traffic<'_>) -> StepResult {
    let generated = match execute_macro(ctx.ego, action, agent, step, ctx.layout, ctx.goal, ctx.params, Some(traffic)) {
        Ok(g) => g,
        Err(_) => {
            let trajectory = Trajectory { vehicle: ctx.ego, dt: ctx.params.dt, start_step: step, states: vec![agent.state], truncated: false };
            return StepResult { trajectory, end: *agent, outcome: Some(Outcome::Dead), collided_with: None };
        }
    };
    let mut trajectory = generated.trajectory;
    let limit = 2.0 * ctx.collision_radius_m;
    for (i, s) in trajectory.states.iter().enumerate().skip(1) {
        let hit = traffic.at(step + i).find(|(_, o)| o.position.distance(s.position) < limit).map(|(id, _)| id);
        if hit.is_some() || ctx.goal.contains(ctx.layout, s.position) {
            trajectory.states.truncate(i + 1);
            trajectory.truncated = false;
            let outcome = if hit.is_some() { Outcome::Collision } else { Outcome::Done };
            let end = AgentState::on_lane(ctx.layout, generated.end.lane, *trajectory.states.last().expect("non-empty"));
            return StepResult { trajectory, end, outcome: Some(outcome), collided_with: hit };
        }
    }
    let outcome = generated.truncated.then_some(Outcome::Termination);
    StepResult { trajectory, end: generated.end, outcome, collided_with: None }
}

/// Planning output: factual plan, search statistics and the trace log.
#[derive(Debug, Clone)]
pub struct PlanOutput {
    pub plan: Vec<MacroAction>,
    pub tree: SearchTree,
    pub trace: TraceLog,
}

fn ucb_select(
    node: Option<&Node>,
    actions: &[MacroAction],
    exploration: f64,
    range: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> MacroAction {
    let stats = |a: &MacroAction| node.and_then(|n| n.children.get(a)).copied().unwrap_or_default();
    let unvisited: Vec<MacroAction> = actions.iter().copied().filter(|a| stats(a).visits == 0).collect();
    if let Some(a) = unvisited.choose(rng) {
        return *a;
    }
    let total: u64 = actions.iter().map(|a| stats(a).visits).sum();
    let ln_n = (total as f64).ln();
    let (lo, hi) = range;
    let scale = if hi > lo { hi - lo } else { 1.0 };
    let score = |a: &MacroAction| {
        let s = stats(a);
        (s.q - lo) / scale + exploration * (ln_n / s.visits as f64).sqrt()
    };
    *actions
        .iter()
        .max_by(|a, b| score(a).total_cmp(&score(b)).then_with(|| b.cmp(a)))
        .expect("at least one applicable action")
}

/// Runs `config.iterations` simulations from `initial`.
///
/// Before each simulation every non-ego vehicle draws a goal and trajectory
/// from its prediction and follows it; the ego then descends the tree by
/// UCB1 on mean returns normalised to the range seen so far.
pub fn run_mcts(
    scenario: &Scenario,
    initial: &JointState,
    predictions: &[VehiclePrediction],
    config: &PlannerConfig,
    rewards: &RewardConfig,
    params: &MotionParams,
) -> Result<PlanOutput, PlannerError> {
    config.validate()?;
    rewards.validate().map_err(PlannerError::Config)?;
    let ego = scenario.ego_id;
    let ego_state = *initial.vehicles.get(&ego).ok_or(PlannerError::MissingEgo(ego))?;
    let ego_lane = scenario.vehicle(ego).ok_or(PlannerError::MissingEgo(ego))?.lane;
    let start = AgentState::on_lane(&scenario.layout, ego_lane, ego_state);
    for p in predictions {
        for g in p.goals.iter().filter(|g| g.probability > 0.0) {
            if g.trajectories.iter().any(|t| t.probability > 0.0 && t.trajectory.is_none()) {
                return Err(PlannerError::MissingTrajectory(p.vehicle));
            }
        }
    }
    let ctx = SimContext {
        ego,
        layout: &scenario.layout,
        goal: &scenario.ego_goal,
        params,
        collision_radius_m: config.collision_radius_m,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    let mut tree = SearchTree::default();
    let mut records = Vec::with_capacity(config.iterations);

    for _ in 0..config.iterations {
        let mut samples = BTreeMap::new();
        let mut fixed = Vec::with_capacity(predictions.len());
        for p in predictions {
            let (g, t) = p.sample(&mut rng);
            samples.insert(p.vehicle, crate::planner::Sample { goal: g, trajectory: t });
            fixed.push(p.goals[g].trajectories[t].trajectory.clone().expect("checked above"));
        }
        let traffic = Traffic { trajectories: &fixed };

        let mut agent = start;
        let mut step = initial.time;
        let mut path = Vec::new();
        let mut ego_traj = Trajectory { vehicle: ego, dt: params.dt, start_step: step, states: vec![start.state], truncated: false };
        let mut outcome = Outcome::Termination;
        let mut collided_with = None;
        while path.len() < config.max_depth {
            let others: Vec<_> = traffic.at(step).map(|(_, s)| *s).collect();
            let actions = applicable_macros(&agent, &others, ctx.layout, ctx.goal, params)?;
            let action = ucb_select(tree.node(&path), &actions, config.exploration, range, &mut rng);
            let res = simulate_step(&ctx, &agent, step, action, traffic);
            path.push(action);
            step += res.trajectory.states.len() - 1;
            ego_traj.extend_with(&res.trajectory);
            agent = res.end;
            if let Some(o) = res.outcome {
                outcome = o;
                collided_with = res.collided_with;
                break;
            }
        }
        let (reward, components) = terminal_reward(&ego_traj, outcome, ctx.goal, ctx.layout, rewards);
        range = (range.0.min(reward), range.1.max(reward));
        tree.backpropagate(&path, reward);
        records.push(TraceRecord { samples, macros: path, components, outcome, reward, collided_with });
    }

    let plan = tree.extract_plan();
    let trace = TraceLog {
        ego,
        max_depth: config.max_depth,
        rewards: rewards.clone(),
        predictions: predictions.to_vec(),
        records,
    };
    Ok(PlanOutput { plan, tree, trace })
}

/// Settings of a complete planning run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanningSetup {
    pub planner: PlannerConfig,
    pub rewards: RewardConfig,
    pub recognition: RecognitionConfig,
}

/// Samples the initial state with `setup.planner.seed`, predicts every
/// non-ego vehicle and runs the search.
pub fn plan_scenario(scenario: &Scenario, setup: &PlanningSetup) -> Result<(JointState, PlanOutput), PlannerError> {
    setup.planner.validate()?;
    let initial = sample_initial_states(scenario, setup.planner.seed);
    let params = MotionParams::for_scenario(scenario);
    let mut predictions = Vec::new();
    for spec in scenario.non_ego() {
        let state = initial.vehicles.get(&spec.id).ok_or(RecognitionError::UnknownVehicle(spec.id))?;
        predictions.push(predict_vehicle(scenario, spec, state, &params, &setup.rewards, &setup.recognition)?);
    }
    let out = run_mcts(scenario, &initial, &predictions, &setup.planner, &setup.rewards, &params)?;
    Ok((initial, out))
}
