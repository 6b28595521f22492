//! Variables, values and assignments of the network.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::maneuver::MacroAction;
use crate::reward::{Component, Outcome};
use crate::world::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variable {
    Goal(VehicleId),
    Trajectory(VehicleId),
    /// Ego action at a depth counted from 1.
    Action(usize),
    /// The whole ego action vector.
    Omega,
    /// Whether a reward component is set.
    Present(Component),
    OutcomeFlag(Outcome),
    /// The single active outcome.
    Outcome,
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variable::Goal(v) => write!(f, "G{v}"),
            Variable::Trajectory(v) => write!(f, "S{v}"),
            Variable::Action(d) => write!(f, "omega{d}"),
            Variable::Omega => write!(f, "omega"),
            Variable::Present(c) => write!(f, "Rb[{c}]"),
            Variable::OutcomeFlag(k) => write!(f, "O[{k}]"),
            Variable::Outcome => write!(f, "O"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Index(usize),
    /// `None` is the empty action.
    Action(Option<MacroAction>),
    /// Padded to the maximum depth with empty actions.
    Omega(Vec<Option<MacroAction>>),
    Flag(bool),
    Outcome(Outcome),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let action = |a: &Option<MacroAction>| a.map_or("∅".to_string(), |m| m.to_string());
        match self {
            Value::Index(i) => write!(f, "{i}"),
            Value::Action(a) => f.write_str(&action(a)),
            Value::Omega(v) => write!(f, "[{}]", v.iter().map(action).collect::<Vec<_>>().join(", ")),
            Value::Flag(b) => write!(f, "{}", u8::from(*b)),
            Value::Outcome(o) => write!(f, "{o}"),
        }
    }
}

/// Values of every variable, including reward values, for joint densities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FullAssignment {
    pub goals: BTreeMap<VehicleId, usize>,
    pub trajectories: BTreeMap<VehicleId, usize>,
    /// One entry per depth; shorter vectors are incomplete.
    pub omega: Vec<Option<MacroAction>>,
    pub rewards: BTreeMap<Component, Option<f64>>,
    pub present: BTreeMap<Component, bool>,
    pub outcome_flags: BTreeMap<Outcome, bool>,
}

/// Outcome flags implied by a presence mask: each non-dead outcome holds when
/// all of its components are set; dead holds unless exactly one other does.
pub fn outcome_flags(mask: u8) -> BTreeMap<Outcome, bool> {
    let kind = Outcome::from_presence(mask);
    Outcome::ALL
        .into_iter()
        .map(|k| {
            let on = match k {
                Outcome::Dead => kind == Outcome::Dead,
                _ => mask & k.required_mask() == k.required_mask(),
            };
            (k, on)
        })
        .collect()
}
