//! TOML scenario format.

use std::path::Path;

use serde::Deserialize;

use crate::geometry::{arc, Point2, Polyline};
use crate::world::{
    Connection, Goal, GoalRegion, Junction, Lane, LaneId, RoadLayout, Scenario, ScenarioError, Turn, VehicleId,
    VehicleSpec,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: Option<String>,
    timestep_s: f64,
    horizon_steps: usize,
    #[serde(default = "default_speed_limit")]
    speed_limit_mps: f64,
    layout: LayoutFile,
    ego: EgoFile,
    vehicles: Vec<VehicleFile>,
}

fn default_speed_limit() -> f64 {
    12.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutFile {
    lanes: Vec<LaneFile>,
    #[serde(default)]
    junctions: Vec<JunctionFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArcFile {
    centre: [f64; 2],
    radius: f64,
    start_deg: f64,
    sweep_deg: f64,
    #[serde(default = "default_arc_segments")]
    segments: usize,
}

fn default_arc_segments() -> usize {
    16
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaneFile {
    id: LaneId,
    #[serde(default)]
    midline: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    arc: Option<ArcFile>,
    width: f64,
    #[serde(default)]
    left: Option<LaneId>,
    #[serde(default)]
    right: Option<LaneId>,
    #[serde(default)]
    successors: Vec<LaneId>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConnectionFile {
    from: LaneId,
    to: LaneId,
    turn: Turn,
    priority: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct JunctionFile {
    id: u32,
    connections: Vec<ConnectionFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFile {
    lane: LaneId,
    from: f64,
    to: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalFile {
    label: String,
    regions: Vec<RegionFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EgoFile {
    id: VehicleId,
    #[serde(default)]
    goal: Option<GoalFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VehicleFile {
    id: VehicleId,
    lane: LaneId,
    s: f64,
    spawn_range_m: f64,
    speed_range_mps: [f64; 2],
    #[serde(default)]
    goals: Vec<GoalFile>,
    #[serde(default)]
    observed_accel_mps2: f64,
    #[serde(default)]
    observed_history_s: f64,
}

impl From<GoalFile> for Goal {
    fn from(g: GoalFile) -> Self {
        Goal {
            label: g.label,
            regions: g.regions.into_iter().map(|r| GoalRegion { lane: r.lane, from: r.from, to: r.to }).collect(),
        }
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    let mut scenario = parse_scenario(&text)?;
    if scenario.name.is_empty() {
        scenario.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok(scenario)
}

/// Parses and validates scenario text.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    let mut lanes = Vec::with_capacity(file.layout.lanes.len());
    for l in file.layout.lanes {
        let points: Vec<Point2<f64>> = match (l.midline, l.arc) {
            (Some(pts), None) => pts.into_iter().map(|[x, y]| Point2::new(x, y)).collect(),
            (None, Some(a)) => arc(
                Point2::new(a.centre[0], a.centre[1]),
                a.radius,
                a.start_deg.to_radians(),
                a.sweep_deg.to_radians(),
                a.segments,
            ),
            _ => {
                return Err(ScenarioError::Validation(format!(
                    "lane {} needs exactly one of `midline` or `arc`",
                    l.id
                )))
            }
        };
        let midline = Polyline::new(points)
            .ok_or_else(|| ScenarioError::Validation(format!("degenerate midline (lane {})", l.id)))?;
        lanes.push(Lane { id: l.id, midline, width: l.width, left: l.left, right: l.right, successors: l.successors });
    }
    let junctions = file
        .layout
        .junctions
        .into_iter()
        .map(|j| Junction {
            id: j.id,
            connections: j
                .connections
                .into_iter()
                .map(|c| Connection { from: c.from, to: c.to, turn: c.turn, has_priority: c.priority })
                .collect(),
        })
        .collect();
    let layout = RoadLayout::new(lanes, junctions)?;
    let ego_goal = file
        .ego
        .goal
        .map(Goal::from)
        .ok_or_else(|| ScenarioError::Validation("ego goal absent".into()))?;
    let vehicles = file
        .vehicles
        .into_iter()
        .map(|v| VehicleSpec {
            id: v.id,
            lane: v.lane,
            s: v.s,
            spawn_range_m: v.spawn_range_m,
            speed_range_mps: (v.speed_range_mps[0], v.speed_range_mps[1]),
            goals: v.goals.into_iter().map(Goal::from).collect(),
            observed_accel_mps2: v.observed_accel_mps2,
            observed_history_s: v.observed_history_s,
        })
        .collect();
    let scenario = Scenario {
        name: file.name.unwrap_or_default(),
        layout,
        ego_id: file.ego.id,
        ego_goal,
        vehicles,
        timestep_s: file.timestep_s,
        horizon_steps: file.horizon_steps,
        speed_limit_mps: file.speed_limit_mps,
    };
    scenario.validate()?;
    Ok(scenario)
}
