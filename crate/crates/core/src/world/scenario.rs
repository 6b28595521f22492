use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;
use crate::scalar::normalize_angle;
use crate::world::{LaneId, RoadLayout};

pub type VehicleId = u32;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario validation error: {0}")]
    Validation(String),
    #[error("point ({x:.2}, {y:.2}) is off-road")]
    OffRoad { x: f64, y: f64 },
}

/// Kinematic state of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Point2<f64>,
    /// Radians counter-clockwise from +x, in `(-pi, pi]`.
    pub heading: f64,
    pub speed: f64,
    pub acceleration: f64,
}

impl VehicleState {
    pub fn new(position: Point2<f64>, heading: f64, speed: f64, acceleration: f64) -> Self {
        Self { position, heading: normalize_angle(heading), speed: speed.max(0.0), acceleration }
    }
}

/// States of every vehicle at one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub ego: VehicleId,
    pub time: usize,
    pub vehicles: BTreeMap<VehicleId, VehicleState>,
}

impl JointState {
    pub fn new(ego: VehicleId, time: usize, vehicles: BTreeMap<VehicleId, VehicleState>) -> Result<Self, ScenarioError> {
        if !vehicles.contains_key(&ego) {
            return Err(ScenarioError::Validation(format!("joint state lacks ego vehicle {ego}")));
        }
        Ok(Self { ego, time, vehicles })
    }

    pub fn ego_state(&self) -> &VehicleState {
        &self.vehicles[&self.ego]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub lane: LaneId,
    pub from: f64,
    pub to: f64,
}

/// Target region: one or more lane intervals sharing a human label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub label: String,
    pub regions: Vec<GoalRegion>,
}

impl Goal {
    pub fn lanes(&self) -> Vec<LaneId> {
        self.regions.iter().map(|r| r.lane).collect()
    }

    pub fn contains(&self, layout: &RoadLayout, p: Point2<f64>) -> bool {
        self.regions.iter().any(|r| {
            let Some(lane) = layout.lane(r.lane) else { return false };
            let pr = lane.midline.project(p);
            pr.distance <= lane.width / 2.0 + 1e-9 && pr.s >= r.from - 1e-9 && pr.s <= r.to + 1e-9
        })
    }

    /// Whether an arc-length position on `lane` lies in the goal.
    pub fn contains_lane_pos(&self, lane: LaneId, s: f64) -> bool {
        self.regions.iter().any(|r| r.lane == lane && s >= r.from - 1e-9 && s <= r.to + 1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub id: VehicleId,
    pub lane: LaneId,
    /// Nominal arc length along `lane`.
    pub s: f64,
    /// Width of the longitudinal spawn window centred on `s`.
    pub spawn_range_m: f64,
    pub speed_range_mps: (f64, f64),
    pub goals: Vec<Goal>,
    /// Constant acceleration observed over the history window before planning.
    pub observed_accel_mps2: f64,
    pub observed_history_s: f64,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub layout: RoadLayout,
    pub ego_id: VehicleId,
    pub ego_goal: Goal,
    pub vehicles: Vec<VehicleSpec>,
    pub timestep_s: f64,
    pub horizon_steps: usize,
    /// Desired cruising speed of every vehicle.
    pub speed_limit_mps: f64,
}

impl Scenario {
    pub fn vehicle(&self, id: VehicleId) -> Option<&VehicleSpec> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn non_ego(&self) -> impl Iterator<Item = &VehicleSpec> {
        self.vehicles.iter().filter(move |v| v.id != self.ego_id)
    }

    pub fn goals_of(&self, id: VehicleId) -> Vec<Goal> {
        if id == self.ego_id {
            vec![self.ego_goal.clone()]
        } else {
            self.vehicle(id).map(|v| v.goals.clone()).unwrap_or_default()
        }
    }

    /// Nominal state at the middle of the speed range.
    pub fn nominal_state(&self, spec: &VehicleSpec) -> VehicleState {
        let lane = self.layout.lane_ref(spec.lane);
        let speed = 0.5 * (spec.speed_range_mps.0 + spec.speed_range_mps.1);
        VehicleState::new(lane.midline.point_at(spec.s), lane.midline.heading_at(spec.s), speed, 0.0)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let v = |m: String| Err(ScenarioError::Validation(m));
        if !(self.timestep_s > 0.0) {
            return v("timestep_s must be positive".into());
        }
        if self.horizon_steps == 0 {
            return v("horizon_steps must be positive".into());
        }
        if !(self.speed_limit_mps > 0.0) {
            return v("speed_limit_mps must be positive".into());
        }
        let mut ids: Vec<VehicleId> = self.vehicles.iter().map(|s| s.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return v("duplicate vehicle id".into());
        }
        if self.vehicle(self.ego_id).is_none() {
            return v(format!("ego vehicle {} absent from vehicles", self.ego_id));
        }
        for spec in &self.vehicles {
            let Some(lane) = self.layout.lane(spec.lane) else {
                return v(format!("vehicle {} starts on unknown lane {}", spec.id, spec.lane));
            };
            if !(spec.spawn_range_m >= 0.0) {
                return v(format!("vehicle {} has a negative spawn range", spec.id));
            }
            let (lo, hi) = spec.speed_range_mps;
            if !(lo >= 0.0 && hi >= lo) {
                return v(format!("vehicle {} has an invalid speed range", spec.id));
            }
            if spec.s < 0.0 || spec.s > lane.length() {
                return v(format!("vehicle {} nominal position outside lane {}", spec.id, spec.lane));
            }
            if spec.id != self.ego_id && spec.goals.is_empty() {
                return v(format!("vehicle {} has no goals", spec.id));
            }
            for goal in self.goals_of(spec.id) {
                self.validate_goal(&goal)?;
                if !self.layout.reachable(spec.lane, &goal.lanes()) {
                    return v(format!("goal '{}' unreachable for vehicle {}", goal.label, spec.id));
                }
            }
        }
        Ok(())
    }

    fn validate_goal(&self, goal: &Goal) -> Result<(), ScenarioError> {
        if goal.regions.is_empty() {
            return Err(ScenarioError::Validation(format!("goal '{}' has no regions", goal.label)));
        }
        for r in &goal.regions {
            let Some(lane) = self.layout.lane(r.lane) else {
                return Err(ScenarioError::Validation(format!("goal '{}' references unknown lane {}", goal.label, r.lane)));
            };
            if r.from < 0.0 || r.to < r.from || r.to > lane.length() + 1e-9 {
                return Err(ScenarioError::Validation(format!(
                    "goal '{}' interval outside lane {}",
                    goal.label, r.lane
                )));
            }
        }
        Ok(())
    }
}

/// Draws every vehicle's position within its longitudinal spawn window and
/// its speed uniformly from its speed range.
pub fn sample_initial_states(scenario: &Scenario, seed: u64) -> JointState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vehicles = BTreeMap::new();
    for spec in &scenario.vehicles {
        let lane = scenario.layout.lane_ref(spec.lane);
        let half = spec.spawn_range_m / 2.0;
        let shift = if half > 0.0 { rng.gen_range(-half..=half) } else { 0.0 };
        let s = (spec.s + shift).clamp(0.0, lane.length());
        let (lo, hi) = spec.speed_range_mps;
        let speed = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        let state = VehicleState::new(lane.midline.point_at(s), lane.midline.heading_at(s), speed, 0.0);
        vehicles.insert(spec.id, state);
    }
    JointState { ego: scenario.ego_id, time: 0, vehicles }
}
