//! Random planning traces for property tests of the inference code.

use std::collections::BTreeMap;

use rand::Rng;

use crate::maneuver::MacroAction;
use crate::planner::{Sample, TraceLog, TraceRecord};
use crate::recognition::{GoalHypothesis, TrajectoryHypothesis, VehiclePrediction};
use crate::reward::{Component, Outcome, RewardComponents, RewardConfig};
use crate::world::VehicleId;

/// Size limits of a random trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceShape {
    pub max_records: usize,
    pub max_depth: usize,
    pub max_vehicles: usize,
    pub max_goals: usize,
    pub max_trajectories: usize,
}

impl Default for TraceShape {
    fn default() -> Self {
        Self { max_records: 20, max_depth: 3, max_vehicles: 2, max_goals: 2, max_trajectories: 2 }
    }
}

const ACTIONS: [MacroAction; 4] = [MacroAction::Continue, MacroAction::ChangeLeft, MacroAction::ChangeRight, MacroAction::Stop];

fn distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

fn pick<R: Rng>(rng: &mut R, p: &[f64]) -> usize {
    let mut u = rng.gen::<f64>();
    for (i, x) in p.iter().enumerate() {
        if u < *x {
            return i;
        }
        u -= x;
    }
    p.len() - 1
}

/// Components consistent with `outcome`, with random values.
pub fn random_components<R: Rng>(rng: &mut R, outcome: Outcome) -> RewardComponents {
    let mut m = BTreeMap::new();
    for c in outcome.required() {
        let v = match c {
            Component::Collision | Component::Termination => 1.0,
            // few distinct values so that states repeat with equal samples too
            _ => f64::from(rng.gen_range(0..4u8)) * 0.5 + 1.0,
        };
        m.insert(*c, v);
    }
    RewardComponents(m)
}

/// A trace log with random predictions, action sequences and outcomes.
pub fn random_trace_log<R: Rng>(rng: &mut R, shape: TraceShape) -> TraceLog {
    let depth = rng.gen_range(1..=shape.max_depth);
    let n_vehicles = rng.gen_range(0..=shape.max_vehicles);
    let predictions: Vec<VehiclePrediction> = (0..n_vehicles)
        .map(|i| {
            let n_goals = rng.gen_range(1..=shape.max_goals);
            let pg = distribution(rng, n_goals);
            let goals = pg
                .into_iter()
                .enumerate()
                .map(|(g, probability)| {
                    let n_t = rng.gen_range(1..=shape.max_trajectories);
                    let pt = distribution(rng, n_t);
                    GoalHypothesis {
                        label: format!("goal {g}"),
                        probability,
                        trajectories: pt
                            .into_iter()
                            .map(|probability| TrajectoryHypothesis {
                                macros: vec![ACTIONS[rng.gen_range(0..ACTIONS.len())]],
                                probability,
                                reward: 0.0,
                                trajectory: None,
                            })
                            .collect(),
                    }
                })
                .collect();
            VehiclePrediction { vehicle: i as u32 + 1, goals }
        })
        .collect();
    let n = rng.gen_range(1..=shape.max_records);
    let records = (0..n)
        .map(|_| {
            let samples = predictions
                .iter()
                .map(|p| {
                    let g = pick(rng, &p.goal_probabilities());
                    let tp: Vec<f64> = p.goals[g].trajectories.iter().map(|t| t.probability).collect();
                    (p.vehicle, Sample { goal: g, trajectory: pick(rng, &tp) })
                })
                .collect();
            let len = rng.gen_range(1..=depth);
            let macros = (0..len).map(|_| ACTIONS[rng.gen_range(0..2)]).collect();
            let outcome = match rng.gen_range(0..10) {
                0..=4 => Outcome::Done,
                5..=6 => Outcome::Collision,
                7..=8 => Outcome::Termination,
                _ => Outcome::Dead,
            };
            let components = random_components(rng, outcome);
            let reward = components.scalar(&RewardConfig::default());
            let collided_with = (outcome == Outcome::Collision).then_some(1);
            TraceRecord { samples, macros, components, outcome, reward, collided_with }
        })
        .collect();
    TraceLog { ego: 0, max_depth: depth, rewards: RewardConfig::default(), predictions, records }
}

/// Trajectory probability and its macro actions.
pub type TrajectorySpec<'a> = (f64, &'a [MacroAction]);

/// Prediction with the given goal probabilities and, per goal, trajectory
/// probabilities and macro actions.
pub fn prediction(vehicle: VehicleId, goals: &[(f64, &[TrajectorySpec])]) -> VehiclePrediction {
    VehiclePrediction {
        vehicle,
        goals: goals
            .iter()
            .enumerate()
            .map(|(g, (p, trajs))| GoalHypothesis {
                label: format!("goal {g}"),
                probability: *p,
                trajectories: trajs
                    .iter()
                    .map(|(q, macros)| TrajectoryHypothesis {
                        macros: macros.to_vec(),
                        probability: *q,
                        reward: 0.0,
                        trajectory: None,
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// Record whose set components are 1 except time, which takes `time`.
pub fn record(samples: &[(VehicleId, usize, usize)], macros: &[MacroAction], outcome: Outcome, time: f64) -> TraceRecord {
    let mut components = RewardComponents(outcome.required().iter().map(|c| (*c, 1.0)).collect());
    if let Some(t) = components.0.get_mut(&Component::Time) {
        *t = time;
    }
    let reward = components.scalar(&RewardConfig::default());
    TraceRecord {
        samples: samples.iter().map(|&(v, goal, trajectory)| (v, Sample { goal, trajectory })).collect(),
        macros: macros.to_vec(),
        components,
        outcome,
        reward,
        collided_with: (outcome == Outcome::Collision).then(|| samples.first().map_or(1, |s| s.0)),
    }
}

pub fn trace_log(max_depth: usize, predictions: Vec<VehiclePrediction>, records: Vec<TraceRecord>) -> TraceLog {
    TraceLog { ego: 0, max_depth, rewards: RewardConfig::default(), predictions, records }
}
