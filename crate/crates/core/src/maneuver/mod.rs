//! Manoeuvres, macro actions, trajectory generation and trajectory features.

mod actions;
mod features;
mod motion;

pub use actions::{applicable_macros, expand_macro, MacroAction, Maneuver, ManeuverError, Side};
pub use features::{extract_features, TrajectoryFeatures};
pub use motion::{
    execute_macro, generate_trajectory, lane_speed_limit, AgentState, Generated, MotionParams, Traffic, Trajectory,
};

#[cfg(test)]
mod tests;
