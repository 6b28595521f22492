//! Road layouts, scenarios and randomised initial conditions.

mod file;
mod layout;
mod scenario;

pub use file::{load_scenario, parse_scenario};
pub use layout::{Connection, Junction, Lane, LaneId, Location, RoadLayout, Turn, DEFAULT_OFFROAD_MARGIN};
pub use scenario::{
    sample_initial_states, Goal, GoalRegion, JointState, Scenario, ScenarioError, VehicleId, VehicleSpec,
    VehicleState,
};
