use proptest::prelude::*;

use super::*;
use crate::geometry::{arc, Point2, Polyline};
use crate::world::{Connection, Goal, GoalRegion, Junction, Lane, RoadLayout, Turn, VehicleState};

fn lane(id: u32, pts: Vec<Point2<f64>>, left: Option<u32>, right: Option<u32>, successors: Vec<u32>) -> Lane {
    Lane { id, midline: Polyline::new(pts).unwrap(), width: 3.5, left, right, successors }
}

/// Two lanes eastbound (1 right, 2 left) to x = 100, continuing to x = 200,
/// with a right-turn connector (5) from lane 1 onto a southbound exit (6).
fn road() -> RoadLayout {
    let p = Point2::new;
    let lanes = vec![
        lane(1, vec![p(0.0, 0.0), p(100.0, 0.0)], Some(2), None, vec![3, 5]),
        lane(2, vec![p(0.0, 3.5), p(100.0, 3.5)], None, Some(1), vec![4]),
        lane(3, vec![p(100.0, 0.0), p(200.0, 0.0)], Some(4), None, vec![]),
        lane(4, vec![p(100.0, 3.5), p(200.0, 3.5)], None, Some(3), vec![]),
        lane(5, arc(p(100.0, -10.0), 10.0, std::f64::consts::FRAC_PI_2, -std::f64::consts::FRAC_PI_2, 16), None, None, vec![6]),
        lane(6, vec![p(110.0, -10.0), p(110.0, -80.0)], None, None, vec![]),
    ];
    let junctions = vec![Junction {
        id: 1,
        connections: vec![Connection { from: 1, to: 5, turn: Turn::Right, has_priority: true }],
    }];
    RoadLayout::new(lanes, junctions).unwrap()
}

fn end_of_road() -> Goal {
    Goal {
        label: "end of road".into(),
        regions: vec![GoalRegion { lane: 3, from: 90.0, to: 100.0 }, GoalRegion { lane: 4, from: 90.0, to: 100.0 }],
    }
}

fn agent_at(layout: &RoadLayout, lane: u32, s: f64, speed: f64) -> AgentState {
    let l = layout.lane_ref(lane);
    let st = VehicleState::new(l.midline.point_at(s), l.midline.heading_at(s), speed, 0.0);
    AgentState { state: st, lane, s, offset: 0.0 }
}

fn params() -> MotionParams {
    MotionParams { horizon_steps: 600, ..MotionParams::default() }
}

#[test]
fn straight_road_with_left_neighbour_offers_change_left_and_continue() {
    let layout = road();
    let acts = applicable_macros(&agent_at(&layout, 3, 10.0, 10.0), &[], &layout, &end_of_road(), &params()).unwrap();
    assert!(acts.contains(&MacroAction::Continue));
    assert!(acts.contains(&MacroAction::ChangeLeft));
    assert!(!acts.contains(&MacroAction::ChangeRight));
    assert!(!acts.iter().any(|a| matches!(a, MacroAction::Exit(_))));
}

#[test]
fn approaching_right_connection_offers_exit_right() {
    let layout = road();
    let acts = applicable_macros(&agent_at(&layout, 1, 20.0, 8.0), &[], &layout, &end_of_road(), &params()).unwrap();
    assert_eq!(
        acts,
        vec![MacroAction::Continue, MacroAction::ChangeLeft, MacroAction::Exit(Turn::Right), MacroAction::Stop]
    );
    let left = applicable_macros(&agent_at(&layout, 2, 20.0, 8.0), &[], &layout, &end_of_road(), &params()).unwrap();
    assert!(left.contains(&MacroAction::ChangeRight));
    assert!(!left.contains(&MacroAction::ChangeLeft));
}

#[test]
fn blocked_target_lane_disables_lane_change() {
    let layout = road();
    let agent = agent_at(&layout, 1, 20.0, 10.0);
    let blocker = agent_at(&layout, 2, 25.0, 10.0).state;
    let acts = applicable_macros(&agent, &[blocker], &layout, &end_of_road(), &params()).unwrap();
    assert!(!acts.contains(&MacroAction::ChangeLeft));
}

#[test]
fn macro_expansions() {
    let layout = road();
    let a = agent_at(&layout, 1, 20.0, 8.0);
    let g = end_of_road();
    let kinds = |m| expand_macro(m, &a, &layout, &g, &params()).unwrap().iter().map(|m| m.kind()).collect::<Vec<_>>();
    assert_eq!(kinds(MacroAction::Exit(Turn::Right)), ["lane-follow", "give-way", "turn-right"]);
    assert_eq!(kinds(MacroAction::Continue), ["lane-follow"]);
    assert_eq!(kinds(MacroAction::Stop), ["stop"]);
    assert_eq!(
        expand_macro(MacroAction::Exit(Turn::Left), &a, &layout, &g, &params()),
        Err(ManeuverError::InapplicableMacro { action: MacroAction::Exit(Turn::Left) })
    );
}

#[test]
fn macro_names_round_trip() {
    for m in MacroAction::ALL {
        assert_eq!(m.name().parse::<MacroAction>().unwrap(), m);
    }
    assert!("Fly".parse::<MacroAction>().is_err());
}

#[test]
fn constant_speed_lane_follow_reaches_lane_end_in_100_steps() {
    let layout = road();
    let p = MotionParams { speed_limit: 10.0, ..params() };
    let start = agent_at(&layout, 3, 0.0, 10.0);
    let g = generate_trajectory(0, &[Maneuver::LaneFollow { route: vec![3], end_s: 100.0, end_speed: None }], &start, 0, &layout, &p, None);
    assert!(!g.truncated);
    assert_eq!(g.trajectory.states.len(), 101);
    let last = g.trajectory.states.last().unwrap();
    assert!(last.position.distance(Point2::new(200.0, 0.0)) < 1e-6);
    assert!(g.trajectory.states.iter().all(|s| (s.speed - 10.0).abs() < 1e-12));
}

#[test]
fn lane_change_left_shifts_by_lane_width_and_realigns() {
    let layout = road();
    let start = agent_at(&layout, 3, 0.0, 10.0);
    let g = generate_trajectory(0, &[Maneuver::LaneChange { side: Side::Left, target: 4 }], &start, 0, &layout, &params(), None);
    let last = g.trajectory.states.last().unwrap();
    assert!((last.position.y - 3.5).abs() < 1e-9, "{:?}", last.position);
    assert!(last.heading.abs() < 1e-3);
    assert_eq!(g.end.lane, 4);
}

#[test]
fn stop_from_ten_metres_per_second_ends_stationary() {
    let layout = road();
    let start = agent_at(&layout, 3, 0.0, 10.0);
    let g = generate_trajectory(0, &[Maneuver::Stop], &start, 0, &layout, &params(), None);
    assert!(!g.truncated);
    assert_eq!(g.trajectory.states.last().unwrap().speed, 0.0);
    assert!(g.trajectory.states.iter().all(|s| s.acceleration >= -params().max_brake - 1e-12));
}

#[test]
fn horizon_exhaustion_truncates_with_flag() {
    let layout = road();
    let p = MotionParams { horizon_steps: 20, ..params() };
    let start = agent_at(&layout, 3, 0.0, 10.0);
    let g = generate_trajectory(0, &[Maneuver::LaneFollow { route: vec![3], end_s: 100.0, end_speed: None }], &start, 0, &layout, &p, None);
    assert!(g.truncated && g.trajectory.truncated);
    assert_eq!(g.trajectory.states.len(), 21);
}

#[test]
fn exit_right_slows_for_turn_and_ends_on_exit_lane() {
    let layout = road();
    let start = agent_at(&layout, 1, 20.0, 10.0);
    let g = execute_macro(0, MacroAction::Exit(Turn::Right), &start, 0, &layout, &end_of_road(), &params(), None).unwrap();
    assert!(!g.truncated);
    let last = g.trajectory.states.last().unwrap();
    assert!(last.position.distance(Point2::new(110.0, -10.0)) < 1e-6);
    let turn_speed = lane_speed_limit(&layout, 5, &params());
    assert!(last.speed <= turn_speed + 0.3, "{} > {turn_speed}", last.speed);
}

#[test]
fn give_way_holds_until_conflict_clears() {
    let base = road();
    let mut junctions = base.junctions().to_vec();
    junctions[0].connections[0].has_priority = false;
    let layout = RoadLayout::new(base.lanes().to_vec(), junctions).unwrap();
    // another vehicle parked on the connector for 3 s, then gone
    let blocker = Trajectory {
        vehicle: 9,
        dt: 0.1,
        start_step: 0,
        states: vec![VehicleState::new(Point2::new(107.07, -2.93), 0.0, 0.0, 0.0); 30],
        truncated: false,
    };
    let trajs = [blocker];
    let start = agent_at(&layout, 1, 95.0, 0.0);
    let chain = vec![Maneuver::GiveWay { junction: 1, connector: 5, has_priority: false }];
    let g = generate_trajectory(0, &chain, &start, 0, &layout, &params(), Some(Traffic { trajectories: &trajs }));
    // conflict is visible while the blocker exists within the window
    assert_eq!(g.trajectory.states.len(), 31);
    assert!(g.trajectory.states.iter().all(|s| s.speed == 0.0));
}

#[test]
fn car_following_keeps_distance_behind_slow_leader() {
    let layout = road();
    let leader = Trajectory {
        vehicle: 9,
        dt: 0.1,
        start_step: 0,
        states: (0..300).map(|k| VehicleState::new(Point2::new(40.0 + 0.4 * k as f64, 0.0), 0.0, 4.0, 0.0)).collect(),
        truncated: false,
    };
    let trajs = [leader.clone()];
    let start = agent_at(&layout, 1, 0.0, 10.0);
    let g = generate_trajectory(
        0,
        &[Maneuver::LaneFollow { route: vec![1, 3], end_s: 100.0, end_speed: None }],
        &start,
        0,
        &layout,
        &params(),
        Some(Traffic { trajectories: &trajs }),
    );
    for (k, s) in g.trajectory.states.iter().enumerate() {
        if let Some(l) = leader.state_at_step(k) {
            assert!(l.position.distance(s.position) > 3.0, "collision at step {k}");
        }
    }
}

fn consistent(t: &Trajectory) -> bool {
    t.states.windows(2).all(|w| w[1].position.distance(w[0].position) / t.dt - w[0].speed <= 0.1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn generated_trajectories_are_kinematically_consistent(
        speed in 0.5f64..12.0,
        s in 0.0f64..40.0,
        which in 0usize..4,
    ) {
        let layout = road();
        let start = agent_at(&layout, 1, s, speed);
        let m = [MacroAction::Continue, MacroAction::ChangeLeft, MacroAction::Exit(Turn::Right), MacroAction::Stop][which];
        let g = execute_macro(0, m, &start, 0, &layout, &end_of_road(), &params(), None).unwrap();
        prop_assert!(consistent(&g.trajectory));
        prop_assert!(g.trajectory.states.iter().all(|st| st.speed >= 0.0));
    }

    #[test]
    fn features_invariant_under_translation(dx in -500.0f64..500.0, dy in -500.0f64..500.0) {
        let layout = road();
        let start = agent_at(&layout, 1, 10.0, 8.0);
        let g = execute_macro(0, MacroAction::Exit(Turn::Right), &start, 0, &layout, &end_of_road(), &params(), None).unwrap();
        let t = &g.trajectory;
        let moved: Vec<Point2<f64>> = t.positions().iter().map(|p| Point2::new(p.x + dx, p.y + dy)).collect();
        let a = extract_features(&t.positions(), &t.headings(), &t.speeds(), t.dt, |_| false);
        let b = extract_features(&moved, &t.headings(), &t.speeds(), t.dt, |_| false);
        prop_assert!((a.time_to_goal - b.time_to_goal).abs() < 1e-9);
        prop_assert!((a.jerk - b.jerk).abs() < 1e-9);
        prop_assert!((a.angular_acceleration - b.angular_acceleration).abs() < 1e-9);
        prop_assert!((a.curvature - b.curvature).abs() < 1e-9);
    }
}
