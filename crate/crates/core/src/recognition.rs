//! Goal and trajectory prediction for non-ego vehicles.
//!
//! A goal is scored by how much the observed motion costs compared with the
//! best plan from where the observation started. Trajectories to a goal are
//! weighted by their reward relative to the best trajectory to that goal.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maneuver::{applicable_macros, execute_macro, AgentState, MacroAction, MotionParams, Trajectory};
use crate::reward::{done_components, RewardConfig};
use crate::world::{Goal, LaneId, RoadLayout, Scenario, VehicleId, VehicleSpec, VehicleState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecognitionError {
    #[error("vehicle {0} has no reachable goal")]
    NoReachableGoal(VehicleId),
    #[error("vehicle {0} is not in the scenario")]
    UnknownVehicle(VehicleId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecognitionConfig {
    /// Rationality of the Boltzmann models.
    pub beta: f64,
    /// Longest macro sequence considered when searching plans to a goal.
    pub max_depth: usize,
    /// Trajectories kept per goal, best first.
    pub max_trajectories: usize,
}

impl Default for RecognitionConfig {
    fn default() -> Self {
        Self { beta: 1.0, max_depth: 3, max_trajectories: 3 }
    }
}

/// A macro sequence reaching a goal.
#[derive(Debug, Clone)]
pub struct PlanCandidate {
    pub macros: Vec<MacroAction>,
    /// Motion from the planning start, cut where the goal is first entered.
    pub trajectory: Trajectory,
    pub reward: f64,
}

fn cut_at_goal(traj: &mut Trajectory, goal: &Goal, layout: &RoadLayout) -> bool {
    match traj.states.iter().position(|s| goal.contains(layout, s.position)) {
        Some(i) => {
            traj.states.truncate(i + 1);
            traj.truncated = false;
            true
        }
        None => false,
    }
}

/// Reward of the goal-reaching trajectory `traj`.
pub fn trajectory_reward(traj: &Trajectory, goal: &Goal, layout: &RoadLayout, cfg: &RewardConfig) -> f64 {
    done_components(traj, goal, layout).scalar(cfg)
}

/// Every macro sequence of length at most `max_depth` that reaches `goal`
/// from `start`, sorted best first. Rewards are scored on `prefix`
/// followed by the plan when a prefix is given.
#[allow(clippy::too_many_arguments)]
pub fn plans_to_goal(
    vehicle: VehicleId,
    start: &AgentState,
    layout: &RoadLayout,
    goal: &Goal,
    params: &MotionParams,
    rewards: &RewardConfig,
    max_depth: usize,
    prefix: Option<&Trajectory>,
) -> Vec<PlanCandidate> {
    let mut out = Vec::new();
    let root = Trajectory { vehicle, dt: params.dt, start_step: 0, states: vec![start.state], truncated: false };
    if cut_at_goal(&mut root.clone(), goal, layout) {
        out.push(PlanCandidate { macros: vec![], trajectory: root.clone(), reward: 0.0 });
    } else {
        search(vehicle, start, 0, &root, &mut Vec::new(), layout, goal, params, max_depth, &mut out);
    }
    for c in &mut out {
        c.reward = match prefix {
            Some(p) => {
                let mut full = p.clone();
                full.extend_with(&c.trajectory);
                trajectory_reward(&full, goal, layout, rewards)
            }
            None => trajectory_reward(&c.trajectory, goal, layout, rewards),
        };
    }
    out.sort_by(|a, b| b.reward.total_cmp(&a.reward).then_with(|| a.macros.cmp(&b.macros)));
    out
}

#[allow(clippy::too_many_arguments)]
fn search(
    vehicle: VehicleId,
    agent: &AgentState,
    step: usize,
    so_far: &Trajectory,
    macros: &mut Vec<MacroAction>,
    layout: &RoadLayout,
    goal: &Goal,
    params: &MotionParams,
    max_depth: usize,
    out: &mut Vec<PlanCandidate>,
) {
    if macros.len() >= max_depth || step >= params.horizon_steps {
        return;
    }
    let Ok(actions) = applicable_macros(agent, &[], layout, goal, params) else { return };
    for action in actions {
        let Ok(generated) = execute_macro(vehicle, action, agent, step, layout, goal, params, None) else { continue };
        let mut seg = generated.trajectory;
        if seg.states.len() < 2 {
            continue;
        }
        let reached = cut_at_goal(&mut seg, goal, layout);
        let mut traj = so_far.clone();
        traj.extend_with(&seg);
        macros.push(action);
        if reached {
            out.push(PlanCandidate { macros: macros.clone(), trajectory: traj, reward: 0.0 });
        } else if !generated.truncated {
            let next = step + seg.states.len() - 1;
            search(vehicle, &generated.end, next, &traj, macros, layout, goal, params, max_depth, out);
        }
        macros.pop();
    }
}

/// Observation history consistent with constant acceleration `accel` over
/// `history_s` seconds ending at `current` on `lane`. Oldest state first.
pub fn observed_prefix(
    vehicle: VehicleId,
    layout: &RoadLayout,
    lane: LaneId,
    current: &VehicleState,
    accel: f64,
    history_s: f64,
    dt: f64,
) -> (Trajectory, f64) {
    let midline = &layout.lane_ref(lane).midline;
    let s_now = midline.project(current.position).s;
    let n = (history_s / dt).round() as usize;
    let (mut s, mut v) = (s_now, current.speed);
    let mut samples = vec![(s, v)];
    for _ in 0..n {
        v = (v - accel * dt).max(0.0);
        s -= v * dt;
        samples.push((s, v));
    }
    samples.reverse();
    let start_heading = midline.heading_at(0.0);
    let states = samples
        .iter()
        .map(|&(s, v)| {
            let p = if s >= 0.0 {
                midline.point_at(s)
            } else {
                midline.point_at(0.0) + crate::geometry::Point2::from_heading(start_heading).scale(s)
            };
            VehicleState::new(p, midline.heading_at(s), v, if n > 0 { accel } else { 0.0 })
        })
        .collect();
    (Trajectory { vehicle, dt, start_step: 0, states, truncated: false }, samples[0].0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHypothesis {
    pub macros: Vec<MacroAction>,
    pub probability: f64,
    pub reward: f64,
    /// Predicted motion from the current state; not persisted.
    #[serde(skip)]
    pub trajectory: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalHypothesis {
    pub label: String,
    pub probability: f64,
    pub trajectories: Vec<TrajectoryHypothesis>,
}

/// Predicted goals and trajectories of one vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehiclePrediction {
    pub vehicle: VehicleId,
    pub goals: Vec<GoalHypothesis>,
}

impl VehiclePrediction {
    /// Draws a (goal, trajectory) index pair.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> (usize, usize) {
        let g = sample_index(self.goals.iter().map(|g| g.probability), rng);
        let t = sample_index(self.goals[g].trajectories.iter().map(|t| t.probability), rng);
        (g, t)
    }

    pub fn goal_probabilities(&self) -> Vec<f64> {
        self.goals.iter().map(|g| g.probability).collect()
    }
}

fn sample_index<R: Rng>(weights: impl Iterator<Item = f64> + Clone, rng: &mut R) -> usize {
    let total: f64 = weights.clone().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w <= 0.0 {
            continue;
        }
        last = i;
        if u < w {
            return i;
        }
        u -= w;
    }
    last
}

/// Normalised `exp(beta * x)` over `values`, computed stably.
pub fn boltzmann(values: &[f64], beta: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = values.iter().map(|v| (beta * (v - max)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Goal posterior and trajectory distributions for vehicle `spec` at `current`.
pub fn predict_vehicle(
    scenario: &Scenario,
    spec: &VehicleSpec,
    current: &VehicleState,
    params: &MotionParams,
    rewards: &RewardConfig,
    cfg: &RecognitionConfig,
) -> Result<VehiclePrediction, RecognitionError> {
    let layout = &scenario.layout;
    let (prefix, s_start) = observed_prefix(
        spec.id,
        layout,
        spec.lane,
        current,
        spec.observed_accel_mps2,
        spec.observed_history_s,
        params.dt,
    );
    let now = AgentState::on_lane(layout, spec.lane, *current);
    let mut origin = AgentState::on_lane(layout, spec.lane, prefix.states[0]);
    origin.s = s_start.max(0.0);
    let observed = prefix.states.len() > 1;

    let mut scores = Vec::new();
    let mut hyps = Vec::new();
    for goal in &spec.goals {
        let plans = plans_to_goal(spec.id, &now, layout, goal, params, rewards, cfg.max_depth, observed.then_some(&prefix));
        if plans.is_empty() {
            hyps.push(GoalHypothesis { label: goal.label.clone(), probability: 0.0, trajectories: vec![] });
            continue;
        }
        let best_observed = plans[0].reward;
        let best_unobserved = if observed {
            plans_to_goal(spec.id, &origin, layout, goal, params, rewards, cfg.max_depth, None)
                .first()
                .map_or(best_observed, |p| p.reward)
        } else {
            best_observed
        };
        scores.push((hyps.len(), best_observed - best_unobserved));
        let kept: Vec<&PlanCandidate> = plans.iter().take(cfg.max_trajectories.max(1)).collect();
        let probs = boltzmann(&kept.iter().map(|p| p.reward).collect::<Vec<_>>(), cfg.beta);
        let trajectories = kept
            .iter()
            .zip(probs)
            .map(|(p, probability)| TrajectoryHypothesis {
                macros: p.macros.clone(),
                probability,
                reward: p.reward,
                trajectory: Some(p.trajectory.clone()),
            })
            .collect();
        hyps.push(GoalHypothesis { label: goal.label.clone(), probability: 0.0, trajectories });
    }
    if scores.is_empty() {
        return Err(RecognitionError::NoReachableGoal(spec.id));
    }
    let post = boltzmann(&scores.iter().map(|s| s.1).collect::<Vec<_>>(), cfg.beta);
    for ((i, _), p) in scores.iter().zip(post) {
        hyps[*i].probability = p;
    }
    Ok(VehiclePrediction { vehicle: spec.id, goals: hyps })
}
