//! JSON view of a built network.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bayes::{BnModel, ComponentStats, JointKey, VehicleFactor};
use crate::maneuver::MacroAction;
use crate::reward::{Component, Outcome};
use crate::world::VehicleId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointEntry {
    pub vehicle: VehicleId,
    pub goal: usize,
    pub trajectory: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableEntry {
    pub name: String,
    pub support: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEntry {
    pub prefix: Vec<MacroAction>,
    pub joint: Vec<JointEntry>,
    /// Non-zero probabilities keyed by action name; "∅" marks the empty action.
    pub probabilities: BTreeMap<String, f64>,
    /// Trace records that selected at this state.
    pub records: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardEntry {
    pub omega: Vec<MacroAction>,
    pub joint: Vec<JointEntry>,
    pub samples: u64,
    pub components: BTreeMap<Component, ComponentStats>,
    /// Outcome frequencies implied by the observed presence patterns.
    pub outcomes: BTreeMap<Outcome, f64>,
    pub records: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BnExport {
    pub ego: VehicleId,
    pub max_depth: usize,
    pub variables: Vec<VariableEntry>,
    pub vehicles: Vec<VehicleFactor>,
    pub actions: Vec<ActionEntry>,
    pub rewards: Vec<RewardEntry>,
}

impl BnModel {
    fn joint(&self, key: &JointKey) -> Vec<JointEntry> {
        self.vehicles
            .iter()
            .zip(key)
            .map(|(v, s)| JointEntry { vehicle: v.vehicle, goal: s.goal, trajectory: s.trajectory })
            .collect()
    }

    pub fn export(&self) -> BnExport {
        let mut variables = Vec::new();
        for v in &self.vehicles {
            variables.push(VariableEntry { name: format!("G{}", v.vehicle), support: v.goal_labels.clone() });
            variables.push(VariableEntry {
                name: format!("S{}", v.vehicle),
                support: v.support().iter().map(|s| format!("{}:{}", s.goal, s.trajectory)).collect(),
            });
        }
        for (d, acts) in self.action_support.iter().enumerate() {
            let mut support: Vec<String> = acts.iter().map(|a| a.to_string()).collect();
            support.push("∅".into());
            variables.push(VariableEntry { name: format!("omega{}", d + 1), support });
        }
        for c in Component::ALL {
            variables.push(VariableEntry { name: format!("R[{c}]"), support: vec!["gaussian".into(), "∅".into()] });
            variables.push(VariableEntry { name: format!("Rb[{c}]"), support: vec!["0".into(), "1".into()] });
        }
        for k in Outcome::ALL {
            variables.push(VariableEntry { name: format!("O[{k}]"), support: vec!["0".into(), "1".into()] });
        }
        let actions = self
            .actions
            .iter()
            .map(|((prefix, key), c)| ActionEntry {
                prefix: prefix.clone(),
                joint: self.joint(key),
                probabilities: c
                    .counts
                    .keys()
                    .map(|a| (a.map_or("∅".to_string(), |m| m.to_string()), c.probability(*a)))
                    .collect(),
                records: c.records.clone(),
            })
            .collect();
        let rewards = self
            .rewards
            .iter()
            .map(|((omega, key), r)| RewardEntry {
                omega: omega.clone(),
                joint: self.joint(key),
                samples: r.total,
                components: r.components.clone(),
                outcomes: r.patterns.keys().fold(BTreeMap::new(), |mut m, &mask| {
                    *m.entry(Outcome::from_presence(mask)).or_default() += r.pattern_probability(mask);
                    m
                }),
                records: r.records.clone(),
            })
            .collect();
        BnExport { ego: self.ego, max_depth: self.max_depth, variables, vehicles: self.vehicles.clone(), actions, rewards }
    }
}
