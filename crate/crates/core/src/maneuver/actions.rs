use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::maneuver::motion::{lane_speed_limit, AgentState, MotionParams};
use crate::world::{Connection, Goal, LaneId, RoadLayout, Turn, VehicleState};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ManeuverError {
    #[error("no applicable action for vehicle on lane {lane}")]
    NoApplicableAction { lane: LaneId },
    #[error("macro action {action} is not applicable here")]
    InapplicableMacro { action: MacroAction },
    #[error("vehicle is on unknown lane {0}")]
    OffRoad(LaneId),
    #[error("unknown macro action '{0}'")]
    UnknownAction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// High-level action the planner searches over. The derived order is the
/// lexicographic tie-break order used when extracting plans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MacroAction {
    Continue,
    ChangeLeft,
    ChangeRight,
    Exit(Turn),
    ContinueNextExit,
    Stop,
}

impl MacroAction {
    pub const ALL: [MacroAction; 8] = [
        MacroAction::Continue,
        MacroAction::ChangeLeft,
        MacroAction::ChangeRight,
        MacroAction::Exit(Turn::Left),
        MacroAction::Exit(Turn::Straight),
        MacroAction::Exit(Turn::Right),
        MacroAction::ContinueNextExit,
        MacroAction::Stop,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MacroAction::Continue => "Continue",
            MacroAction::ChangeLeft => "Change-left",
            MacroAction::ChangeRight => "Change-right",
            MacroAction::Exit(Turn::Left) => "Exit-left",
            MacroAction::Exit(Turn::Straight) => "Exit-straight",
            MacroAction::Exit(Turn::Right) => "Exit-right",
            MacroAction::ContinueNextExit => "Continue-next-exit",
            MacroAction::Stop => "Stop",
        }
    }
}

impl fmt::Display for MacroAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MacroAction {
    type Err = ManeuverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MacroAction::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ManeuverError::UnknownAction(s.to_string()))
    }
}

impl From<MacroAction> for String {
    fn from(m: MacroAction) -> Self {
        m.name().to_string()
    }
}

impl TryFrom<String> for MacroAction {
    type Error = ManeuverError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Primitive motion segment.
#[derive(Debug, Clone, PartialEq)]
pub enum Maneuver {
    /// Follow `route` until arc length `end_s` on its last lane, arriving at
    /// no more than `end_speed` when given.
    LaneFollow { route: Vec<LaneId>, end_s: f64, end_speed: Option<f64> },
    LaneChange { side: Side, target: LaneId },
    /// Hold at the junction entry until no priority traffic is predicted in the conflict area.
    GiveWay { junction: u32, connector: LaneId, has_priority: bool },
    Turn { side: Side, connector: LaneId },
    Stop,
}

impl Maneuver {
    pub fn kind(&self) -> &'static str {
        match self {
            Maneuver::LaneFollow { .. } => "lane-follow",
            Maneuver::LaneChange { side: Side::Left, .. } => "lane-change-left",
            Maneuver::LaneChange { side: Side::Right, .. } => "lane-change-right",
            Maneuver::GiveWay { .. } => "give-way",
            Maneuver::Turn { side: Side::Left, .. } => "turn-left",
            Maneuver::Turn { side: Side::Right, .. } => "turn-right",
            Maneuver::Stop => "stop",
        }
    }
}

/// Lanes from the current one up to (and including) the first lane that
/// has junction connections, with the distance to that lane's end.
fn route_to_junction(layout: &RoadLayout, agent: &AgentState) -> Option<(Vec<LaneId>, f64)> {
    let chain = layout.plain_chain(agent.lane);
    let mut dist = -agent.s;
    for (i, &l) in chain.iter().enumerate() {
        dist += layout.lane_ref(l).length();
        if !layout.connections_from(l).is_empty() {
            return Some((chain[..=i].to_vec(), dist.max(0.0)));
        }
    }
    None
}

/// Route along plain successors ending where the goal region starts.
fn route_to_goal(layout: &RoadLayout, agent: &AgentState, goal: &Goal) -> Option<(Vec<LaneId>, f64)> {
    let chain = layout.plain_chain(agent.lane);
    for (i, &l) in chain.iter().enumerate() {
        let here = if i == 0 { agent.s } else { 0.0 };
        let hit = goal
            .regions
            .iter()
            .filter(|r| r.lane == l && r.to >= here - 1e-9)
            .map(|r| r.from.max(here))
            .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))));
        if let Some(end_s) = hit {
            return Some((chain[..=i].to_vec(), end_s));
        }
    }
    None
}

fn chain_length_from(layout: &RoadLayout, lane: LaneId, s: f64) -> f64 {
    layout.plain_chain(lane).iter().map(|&l| layout.lane_ref(l).length()).sum::<f64>() - s
}

fn neighbour(layout: &RoadLayout, lane: LaneId, side: Side) -> Option<LaneId> {
    let l = layout.lane(lane)?;
    match side {
        Side::Left => l.left,
        Side::Right => l.right,
    }
}

fn headway_ok(
    layout: &RoadLayout,
    agent: &AgentState,
    target: LaneId,
    others: &[VehicleState],
    params: &MotionParams,
) -> bool {
    let Some(here) = layout.project_onto(target, agent.state.position) else { return false };
    let width = layout.lane_ref(target).width;
    others.iter().all(|o| {
        let pr = layout.lane_ref(target).midline.project(o.position);
        if pr.offset.abs() >= width / 2.0 || pr.distance > pr.offset.abs() + 1e-6 {
            return true;
        }
        let gap = (pr.s - here.s).abs() - params.vehicle_length;
        // headway is measured from whichever vehicle ends up following
        let follower = if pr.s >= here.s { agent.state.speed } else { o.speed };
        gap >= params.change_headway_s * follower.max(1.0)
    })
}

/// Macro actions whose first manoeuvre is applicable for `agent`.
///
/// `others` are the current states of every other vehicle (used for lane
/// change headway only).
pub fn applicable_macros(
    agent: &AgentState,
    others: &[VehicleState],
    layout: &RoadLayout,
    goal: &Goal,
    params: &MotionParams,
) -> Result<Vec<MacroAction>, ManeuverError> {
    let lane = layout.lane(agent.lane).ok_or(ManeuverError::OffRoad(agent.lane))?;
    let mut out = Vec::new();
    if route_to_goal(layout, agent, goal).is_some() {
        out.push(MacroAction::Continue);
    }
    let change_len = agent.state.speed.max(1.0) * params.lane_change_duration_s + params.vehicle_length;
    for (side, action) in [(Side::Left, MacroAction::ChangeLeft), (Side::Right, MacroAction::ChangeRight)] {
        let Some(target) = (match side {
            Side::Left => lane.left,
            Side::Right => lane.right,
        }) else {
            continue;
        };
        let room = chain_length_from(layout, agent.lane, agent.s).min(chain_length_from(
            layout,
            target,
            layout.project_onto(target, agent.state.position).map_or(0.0, |l| l.s),
        ));
        if room >= change_len && headway_ok(layout, agent, target, others, params) {
            out.push(action);
        }
    }
    let reach = params.speed_limit * params.horizon_steps as f64 * params.dt;
    if let Some((route, dist)) = route_to_junction(layout, agent) {
        if dist <= reach {
            let j = *route.last().expect("non-empty route");
            let conns = layout.connections_from(j);
            let v = agent.state.speed;
            // a junction entry is only available while the vehicle can still brake for it
            let mut turns: Vec<Turn> = conns
                .iter()
                .filter(|(_, c)| {
                    let ve = entry_speed(layout, c, params);
                    v * v - ve * ve <= 2.0 * params.max_brake * dist + 1e-9
                })
                .map(|(_, c)| c.turn)
                .collect();
            turns.dedup();
            out.extend(turns.iter().copied().map(MacroAction::Exit));
            if let Some((_, c)) = conns.iter().find(|(_, c)| c.turn == Turn::Straight && turns.contains(&c.turn)) {
                let after = AgentState::at_lane_start(c.to, agent.state);
                if route_to_junction(layout, &after).is_some() {
                    out.push(MacroAction::ContinueNextExit);
                }
            }
        }
    }
    out.push(MacroAction::Stop);
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(ManeuverError::NoApplicableAction { lane: agent.lane });
    }
    Ok(out)
}

/// Speed at which a vehicle may enter the connector of `conn`.
fn entry_speed(layout: &RoadLayout, conn: &Connection, params: &MotionParams) -> f64 {
    if conn.has_priority {
        lane_speed_limit(layout, conn.to, params)
    } else {
        0.0
    }
}

fn junction_entry(
    layout: &RoadLayout,
    agent: &AgentState,
    turn: Turn,
    params: &MotionParams,
) -> Option<(Vec<Maneuver>, LaneId)> {
    let (route, _) = route_to_junction(layout, agent)?;
    let last = *route.last()?;
    let (junction, conn) = layout.connections_from(last).into_iter().find(|(_, c)| c.turn == turn)?;
    let end_speed = entry_speed(layout, &conn, params);
    let end_s = layout.lane_ref(last).length();
    let mut m = vec![Maneuver::LaneFollow { route, end_s, end_speed: Some(end_speed) }];
    m.push(Maneuver::GiveWay { junction, connector: conn.to, has_priority: conn.has_priority });
    Some((m, conn.to))
}

/// Manoeuvre chain realising `action` from `agent`'s position.
pub fn expand_macro(
    action: MacroAction,
    agent: &AgentState,
    layout: &RoadLayout,
    goal: &Goal,
    params: &MotionParams,
) -> Result<Vec<Maneuver>, ManeuverError> {
    let inapplicable = ManeuverError::InapplicableMacro { action };
    layout.lane(agent.lane).ok_or(ManeuverError::OffRoad(agent.lane))?;
    let chain = match action {
        MacroAction::Continue => {
            let (route, end_s) = route_to_goal(layout, agent, goal).ok_or(inapplicable)?;
            vec![Maneuver::LaneFollow { route, end_s, end_speed: None }]
        }
        MacroAction::ChangeLeft | MacroAction::ChangeRight => {
            let side = if action == MacroAction::ChangeLeft { Side::Left } else { Side::Right };
            let target = neighbour(layout, agent.lane, side).ok_or(inapplicable)?;
            vec![Maneuver::LaneChange { side, target }]
        }
        MacroAction::Exit(turn) => {
            let (mut m, connector) = junction_entry(layout, agent, turn, params).ok_or(inapplicable)?;
            let len = layout.lane_ref(connector).length();
            m.push(match turn {
                Turn::Left => Maneuver::Turn { side: Side::Left, connector },
                Turn::Right => Maneuver::Turn { side: Side::Right, connector },
                Turn::Straight => Maneuver::LaneFollow { route: vec![connector], end_s: len, end_speed: None },
            });
            m
        }
        MacroAction::ContinueNextExit => {
            let (mut m, connector) = junction_entry(layout, agent, Turn::Straight, params).ok_or(inapplicable.clone())?;
            let after = AgentState::at_lane_start(connector, agent.state);
            let (route, _) = route_to_junction(layout, &after).ok_or(inapplicable)?;
            let end_s = layout.lane_ref(*route.last().expect("non-empty")).length();
            m.push(Maneuver::LaneFollow { route, end_s, end_speed: None });
            m
        }
        MacroAction::Stop => vec![Maneuver::Stop],
    };
    Ok(chain)
}
