//! Per-simulation records accumulated during search.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::maneuver::MacroAction;
use crate::recognition::VehiclePrediction;
use crate::reward::{Outcome, RewardComponents, RewardConfig};
use crate::world::VehicleId;

/// Goal and trajectory indices drawn for one non-ego vehicle, into the
/// vehicle's [`VehiclePrediction`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Sample {
    pub goal: usize,
    pub trajectory: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub samples: BTreeMap<VehicleId, Sample>,
    /// Ego macro actions; entry `d` was chosen at depth `d + 1`.
    pub macros: Vec<MacroAction>,
    pub components: RewardComponents,
    pub outcome: Outcome,
    pub reward: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collided_with: Option<VehicleId>,
}

impl TraceRecord {
    /// Whether the stored outcome agrees with the component presence rule.
    pub fn is_consistent(&self) -> bool {
        Outcome::from_presence(self.components.presence()) == self.outcome
    }
}

/// Everything recorded by one planning run that later inference needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLog {
    pub ego: VehicleId,
    pub max_depth: usize,
    pub rewards: RewardConfig,
    pub predictions: Vec<VehiclePrediction>,
    pub records: Vec<TraceRecord>,
}

impl TraceLog {
    pub fn prediction(&self, vehicle: VehicleId) -> Option<&VehiclePrediction> {
        self.predictions.iter().find(|p| p.vehicle == vehicle)
    }
}
