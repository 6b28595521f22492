//! Reward components, weights and simulation outcomes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::maneuver::{extract_features, Trajectory};
use crate::world::{Goal, RoadLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Component {
    Time,
    Jerk,
    AngularAcceleration,
    Curvature,
    Collision,
    Termination,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::Time,
        Component::Jerk,
        Component::AngularAcceleration,
        Component::Curvature,
        Component::Collision,
        Component::Termination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Component::Time => "time",
            Component::Jerk => "jerk",
            Component::AngularAcceleration => "angular-acceleration",
            Component::Curvature => "curvature",
            Component::Collision => "collision",
            Component::Termination => "termination",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Bit of this component in a presence mask.
    pub fn bit(self) -> u8 {
        1 << self.index()
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Component::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| format!("unknown reward component '{s}'"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Done,
    Collision,
    Termination,
    Dead,
}

impl Outcome {
    pub const ALL: [Outcome; 4] = [Outcome::Done, Outcome::Collision, Outcome::Termination, Outcome::Dead];

    pub fn name(self) -> &'static str {
        match self {
            Outcome::Done => "done",
            Outcome::Collision => "collision",
            Outcome::Termination => "termination",
            Outcome::Dead => "dead",
        }
    }

    /// Components that must all be present for this outcome. `Dead` has none:
    /// it covers every presence pattern not matched by exactly one other outcome.
    pub fn required(self) -> &'static [Component] {
        match self {
            Outcome::Done => &[Component::Time, Component::Jerk, Component::AngularAcceleration, Component::Curvature],
            Outcome::Collision => &[Component::Collision],
            Outcome::Termination => &[Component::Termination],
            Outcome::Dead => &[],
        }
    }

    /// Presence mask of [`Outcome::required`].
    pub fn required_mask(self) -> u8 {
        self.required().iter().fold(0, |m, c| m | c.bit())
    }

    /// Outcome implied by a component presence mask.
    pub fn from_presence(mask: u8) -> Outcome {
        let active: Vec<Outcome> = [Outcome::Done, Outcome::Collision, Outcome::Termination]
            .into_iter()
            .filter(|o| mask & o.required_mask() == o.required_mask())
            .collect();
        match active.as_slice() {
            [one] => *one,
            _ => Outcome::Dead,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Weight per component; the scalar reward is the weighted sum of present components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub time: f64,
    pub jerk: f64,
    pub angular_acceleration: f64,
    pub curvature: f64,
    pub collision: f64,
    pub termination: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { time: -1.0, jerk: -0.1, angular_acceleration: -0.1, curvature: -0.1, collision: -100.0, termination: -50.0 }
    }
}

impl RewardConfig {
    pub fn weight(&self, c: Component) -> f64 {
        match c {
            Component::Time => self.time,
            Component::Jerk => self.jerk,
            Component::AngularAcceleration => self.angular_acceleration,
            Component::Curvature => self.curvature,
            Component::Collision => self.collision,
            Component::Termination => self.termination,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if Component::ALL.iter().any(|c| !self.weight(*c).is_finite()) {
            return Err("reward weights must be finite".into());
        }
        if self.collision >= 0.0 || self.termination >= 0.0 {
            return Err("collision and termination weights must be negative".into());
        }
        Ok(())
    }
}

/// Values of the components observed at the end of one simulation; absent
/// components are the empty value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RewardComponents(pub BTreeMap<Component, f64>);

impl RewardComponents {
    pub fn get(&self, c: Component) -> Option<f64> {
        self.0.get(&c).copied()
    }

    pub fn presence(&self) -> u8 {
        self.0.keys().fold(0, |m, c| m | c.bit())
    }

    pub fn scalar(&self, cfg: &RewardConfig) -> f64 {
        self.0.iter().map(|(c, v)| cfg.weight(*c) * v).sum()
    }
}

/// Done-outcome component values of a trajectory (quantities, not weighted).
pub fn done_components(traj: &Trajectory, goal: &Goal, layout: &RoadLayout) -> RewardComponents {
    let pos = traj.positions();
    let f = extract_features(&pos, &traj.headings(), &traj.speeds(), traj.dt, |i| goal.contains(layout, pos[i]));
    RewardComponents(BTreeMap::from([
        (Component::Time, f.time_to_goal),
        (Component::Jerk, f.jerk),
        (Component::AngularAcceleration, f.angular_acceleration),
        (Component::Curvature, f.curvature),
    ]))
}

/// Scalar reward and components at the end of a simulation.
///
/// Collision and termination are indicator components with value 1. A dead
/// outcome carries no components but is scored like a collision.
pub fn terminal_reward(
    traj: &Trajectory,
    outcome: Outcome,
    goal: &Goal,
    layout: &RoadLayout,
    cfg: &RewardConfig,
) -> (f64, RewardComponents) {
    let comps = match outcome {
        Outcome::Done => done_components(traj, goal, layout),
        Outcome::Collision => RewardComponents(BTreeMap::from([(Component::Collision, 1.0)])),
        Outcome::Termination => RewardComponents(BTreeMap::from([(Component::Termination, 1.0)])),
        Outcome::Dead => RewardComponents::default(),
    };
    let scalar = if outcome == Outcome::Dead { cfg.collision } else { comps.scalar(cfg) };
    (scalar, comps)
}
