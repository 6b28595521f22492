use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Polyline};
use crate::world::ScenarioError;

pub type LaneId = u32;

/// Extra lateral slack beyond the lane half-width before a point counts as off-road.
pub const DEFAULT_OFFROAD_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Left,
    Straight,
    Right,
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Turn::Left => "left",
            Turn::Straight => "straight",
            Turn::Right => "right",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Lane {
    pub id: LaneId,
    pub midline: Polyline<f64>,
    pub width: f64,
    pub left: Option<LaneId>,
    pub right: Option<LaneId>,
    pub successors: Vec<LaneId>,
}

impl Lane {
    pub fn length(&self) -> f64 {
        self.midline.length()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub from: LaneId,
    pub to: LaneId,
    pub turn: Turn,
    pub has_priority: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Junction {
    pub id: u32,
    pub connections: Vec<Connection>,
}

/// Result of [`RoadLayout::locate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub lane: LaneId,
    pub s: f64,
    /// Positive to the left of the lane direction.
    pub offset: f64,
}

#[derive(Debug, Clone)]
pub struct RoadLayout {
    lanes: Vec<Lane>,
    junctions: Vec<Junction>,
    index: HashMap<LaneId, usize>,
}

impl RoadLayout {
    /// Builds a layout and checks the structural invariants.
    pub fn new(lanes: Vec<Lane>, junctions: Vec<Junction>) -> Result<Self, ScenarioError> {
        let mut index = HashMap::new();
        for (i, lane) in lanes.iter().enumerate() {
            if index.insert(lane.id, i).is_some() {
                return Err(ScenarioError::Validation(format!("duplicate lane id {}", lane.id)));
            }
            if !(lane.width > 0.0) {
                return Err(ScenarioError::Validation(format!("lane {} has non-positive width", lane.id)));
            }
        }
        let layout = Self { lanes, junctions, index };
        for lane in &layout.lanes {
            for (nb, back) in [(lane.left, true), (lane.right, false)] {
                let Some(nb) = nb else { continue };
                let other = layout
                    .lane(nb)
                    .ok_or_else(|| ScenarioError::Validation(format!("lane {} references unknown lane {nb}", lane.id)))?;
                let mirrored = if back { other.right } else { other.left };
                if mirrored != Some(lane.id) {
                    return Err(ScenarioError::Validation(format!(
                        "asymmetric neighbours between lanes {} and {nb}",
                        lane.id
                    )));
                }
            }
            for succ in &lane.successors {
                if layout.lane(*succ).is_none() {
                    return Err(ScenarioError::Validation(format!(
                        "lane {} references unknown successor {succ}",
                        lane.id
                    )));
                }
            }
        }
        for j in &layout.junctions {
            for c in &j.connections {
                for l in [c.from, c.to] {
                    if layout.lane(l).is_none() {
                        return Err(ScenarioError::Validation(format!(
                            "junction {} references unknown lane {l}",
                            j.id
                        )));
                    }
                }
            }
        }
        Ok(layout)
    }

    pub fn lanes(&self) -> &[Lane] {
        &self.lanes
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn lane(&self, id: LaneId) -> Option<&Lane> {
        self.index.get(&id).map(|&i| &self.lanes[i])
    }

    /// Panicking accessor for ids already validated against this layout.
    pub fn lane_ref(&self, id: LaneId) -> &Lane {
        self.lane(id).unwrap_or_else(|| panic!("lane {id} not in layout"))
    }

    /// Junction connections leaving `lane`, with the owning junction id.
    pub fn connections_from(&self, lane: LaneId) -> Vec<(u32, Connection)> {
        let mut out: Vec<(u32, Connection)> = self
            .junctions
            .iter()
            .flat_map(|j| j.connections.iter().filter(|c| c.from == lane).map(move |c| (j.id, *c)))
            .collect();
        out.sort_by_key(|(j, c)| (*j, c.turn, c.to));
        out
    }

    /// Connection entering `lane`, if `lane` is a junction connector.
    pub fn connection_into(&self, lane: LaneId) -> Option<(u32, Connection)> {
        self.junctions
            .iter()
            .flat_map(|j| j.connections.iter().map(move |c| (j.id, *c)))
            .find(|(_, c)| c.to == lane)
    }

    fn is_connector_edge(&self, from: LaneId, to: LaneId) -> bool {
        self.junctions
            .iter()
            .any(|j| j.connections.iter().any(|c| c.from == from && c.to == to))
    }

    /// Successor reached without passing through a junction connection.
    pub fn plain_successor(&self, lane: LaneId) -> Option<LaneId> {
        self.lane(lane)?
            .successors
            .iter()
            .copied()
            .find(|s| !self.is_connector_edge(lane, *s))
    }

    /// Lanes followed from `lane` through plain successors only (starting lane included).
    pub fn plain_chain(&self, lane: LaneId) -> Vec<LaneId> {
        let mut chain = vec![lane];
        let mut seen: HashSet<LaneId> = HashSet::from([lane]);
        while let Some(next) = self.plain_successor(*chain.last().expect("non-empty")) {
            if !seen.insert(next) {
                break;
            }
            chain.push(next);
        }
        chain
    }

    /// Whether any of `targets` is reachable from `start` through successors and lane changes.
    pub fn reachable(&self, start: LaneId, targets: &[LaneId]) -> bool {
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(l) = queue.pop_front() {
            if targets.contains(&l) {
                return true;
            }
            let Some(lane) = self.lane(l) else { continue };
            for n in lane.successors.iter().copied().chain(lane.left).chain(lane.right) {
                if seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        false
    }

    /// Projection of `p` onto a single lane.
    pub fn project_onto(&self, lane: LaneId, p: Point2<f64>) -> Option<Location> {
        let pr = self.lane(lane)?.midline.project(p);
        Some(Location { lane, s: pr.s, offset: pr.offset })
    }

    pub fn locate(&self, p: Point2<f64>) -> Result<Location, ScenarioError> {
        self.locate_with_margin(p, DEFAULT_OFFROAD_MARGIN)
    }

    /// Lane whose midline is nearest to `p`, with the foot-point parameters.
    pub fn locate_with_margin(&self, p: Point2<f64>, margin: f64) -> Result<Location, ScenarioError> {
        let mut best: Option<(f64, &Lane, Location)> = None;
        for lane in &self.lanes {
            let pr = lane.midline.project(p);
            if best.as_ref().is_none_or(|(d, _, _)| pr.distance < *d - 1e-12) {
                best = Some((pr.distance, lane, Location { lane: lane.id, s: pr.s, offset: pr.offset }));
            }
        }
        match best {
            Some((d, lane, loc)) if d <= lane.width / 2.0 + margin => Ok(loc),
            _ => Err(ScenarioError::OffRoad { x: p.x, y: p.y }),
        }
    }

    /// World point at arc length `s` and lateral `offset` on `lane`.
    pub fn point(&self, lane: LaneId, s: f64, offset: f64) -> Point2<f64> {
        self.lane_ref(lane).midline.offset_point(s, offset)
    }

    /// Lane ids keyed by id, for stable iteration in exports.
    pub fn lane_ids(&self) -> BTreeMap<LaneId, usize> {
        self.index.iter().map(|(k, v)| (*k, *v)).collect()
    }
}
