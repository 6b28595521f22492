//! Point-mass motion along lane midlines.

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::maneuver::actions::{expand_macro, MacroAction, Maneuver, ManeuverError, Side};
use crate::scalar::normalize_angle;
use crate::world::{Goal, LaneId, RoadLayout, Scenario, VehicleId, VehicleState};

/// Tunables of the motion model. None of these come with canonical values;
/// the defaults give plausible urban driving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionParams {
    pub dt: f64,
    pub horizon_steps: usize,
    pub speed_limit: f64,
    pub max_accel: f64,
    pub comfortable_decel: f64,
    pub max_brake: f64,
    pub min_gap: f64,
    pub time_headway: f64,
    pub vehicle_length: f64,
    pub lane_change_duration_s: f64,
    pub change_headway_s: f64,
    pub lateral_accel: f64,
    pub give_way_window_s: f64,
    pub conflict_radius: f64,
    pub stop_dwell_s: f64,
    pub corridor_half_width: f64,
    pub leader_range: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            horizon_steps: 400,
            speed_limit: 12.0,
            max_accel: 2.0,
            comfortable_decel: 1.5,
            max_brake: 6.0,
            min_gap: 2.0,
            time_headway: 1.2,
            vehicle_length: 4.0,
            lane_change_duration_s: 3.0,
            change_headway_s: 1.5,
            lateral_accel: 2.0,
            give_way_window_s: 4.0,
            conflict_radius: 3.0,
            stop_dwell_s: 1.0,
            corridor_half_width: 1.8,
            leader_range: 100.0,
        }
    }
}

impl MotionParams {
    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self {
            dt: scenario.timestep_s,
            horizon_steps: scenario.horizon_steps,
            speed_limit: scenario.speed_limit_mps,
            ..Self::default()
        }
    }
}

/// Vehicle state together with its lane-relative position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub state: VehicleState,
    pub lane: LaneId,
    pub s: f64,
    /// Lateral offset from the lane midline (non-zero only mid lane change).
    pub offset: f64,
}

impl AgentState {
    /// Places the vehicle on `lane` at its projection.
    pub fn on_lane(layout: &RoadLayout, lane: LaneId, state: VehicleState) -> Self {
        let s = layout.project_onto(lane, state.position).map_or(0.0, |l| l.s);
        Self { state, lane, s, offset: 0.0 }
    }

    pub(crate) fn at_lane_start(lane: LaneId, state: VehicleState) -> Self {
        Self { state, lane, s: 0.0, offset: 0.0 }
    }
}

/// State sequence at a fixed time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub vehicle: VehicleId,
    pub dt: f64,
    /// Global simulation step of `states[0]`.
    pub start_step: usize,
    pub states: Vec<VehicleState>,
    /// Set when the horizon ran out before the manoeuvres completed.
    pub truncated: bool,
}

impl Trajectory {
    pub fn state_at_step(&self, step: usize) -> Option<&VehicleState> {
        step.checked_sub(self.start_step).and_then(|i| self.states.get(i))
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.states.len().saturating_sub(1) as f64
    }

    pub fn positions(&self) -> Vec<Point2<f64>> {
        self.states.iter().map(|s| s.position).collect()
    }

    pub fn headings(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.heading).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.speed).collect()
    }

    /// Appends `other`, dropping its first state (shared with our last).
    pub fn extend_with(&mut self, other: &Trajectory) {
        self.states.extend(other.states.iter().skip(1).copied());
        self.truncated = other.truncated;
    }
}

/// Predicted motion of other vehicles, indexed by global step.
#[derive(Debug, Clone, Copy)]
pub struct Traffic<'a> {
    pub trajectories: &'a [Trajectory],
}

impl<'a> Traffic<'a> {
    pub fn at(&self, step: usize) -> impl Iterator<Item = (VehicleId, &'a VehicleState)> + 'a {
        self.trajectories.iter().filter_map(move |t| t.state_at_step(step).map(|s| (t.vehicle, s)))
    }
}

/// Output of [`generate_trajectory`].
#[derive(Debug, Clone)]
pub struct Generated {
    pub trajectory: Trajectory,
    pub end: AgentState,
    pub truncated: bool,
}

/// Highest comfortable speed on `lane` given its curvature.
pub fn lane_speed_limit(layout: &RoadLayout, lane: LaneId, params: &MotionParams) -> f64 {
    let pts = layout.lane_ref(lane).midline.points();
    let mut kappa: f64 = 0.0;
    for w in pts.windows(3) {
        let h0 = w[1] - w[0];
        let h1 = w[2] - w[1];
        let dtheta = normalize_angle(h1.y.atan2(h1.x) - h0.y.atan2(h0.x)).abs();
        let len = 0.5 * (h0.norm() + h1.norm());
        if len > 1e-9 {
            kappa = kappa.max(dtheta / len);
        }
    }
    if kappa <= 1e-9 {
        params.speed_limit
    } else {
        (params.lateral_accel / kappa).sqrt().min(params.speed_limit)
    }
}

struct Runner<'a> {
    layout: &'a RoadLayout,
    params: &'a MotionParams,
    traffic: Option<Traffic<'a>>,
    agent: AgentState,
    step: usize,
    states: Vec<VehicleState>,
}

impl<'a> Runner<'a> {
    fn exhausted(&self) -> bool {
        self.step >= self.params.horizon_steps
    }

    fn len(&self, lane: LaneId) -> f64 {
        self.layout.lane_ref(lane).length()
    }

    fn push(&mut self, state: VehicleState) {
        self.agent.state = state;
        self.states.push(state);
        self.step += 1;
    }

    /// Lanes visible ahead of the agent: the rest of `route` followed by plain successors.
    fn lookahead(&self, route: &[LaneId], idx: usize) -> Vec<LaneId> {
        let mut lanes: Vec<LaneId> = route[idx..].to_vec();
        let tail = *lanes.last().expect("non-empty route");
        lanes.extend(self.layout.plain_chain(tail).into_iter().skip(1));
        lanes.truncate(4);
        lanes
    }

    /// Gap (bumper to bumper) and speed of the nearest vehicle ahead in the agent's corridor.
    fn leader(&self, lanes: &[LaneId]) -> Option<(f64, f64)> {
        let traffic = self.traffic?;
        let mut best: Option<(f64, f64)> = None;
        for (_, other) in traffic.at(self.step) {
            let mut base = -self.agent.s;
            for (i, &l) in lanes.iter().enumerate() {
                let lane = self.layout.lane_ref(l);
                let pr = lane.midline.project(other.position);
                let own_offset = if i == 0 { self.agent.offset } else { 0.0 };
                let interior = pr.distance <= pr.offset.abs() + 1e-6;
                if interior && (pr.offset - own_offset).abs() < self.params.corridor_half_width {
                    let along = base + pr.s;
                    if along > 0.0 && along < self.params.leader_range && best.is_none_or(|(g, _)| along < g) {
                        best = Some((along, other.speed));
                    }
                    break;
                }
                base += lane.length();
            }
        }
        best.map(|(along, v)| (along - self.params.vehicle_length, v))
    }

    /// Longitudinal acceleration from car following plus upcoming speed limits.
    fn control(&self, lanes: &[LaneId], remaining: Option<f64>, end_speed: Option<f64>) -> f64 {
        let p = self.params;
        let v = self.agent.state.speed;
        let v0 = lane_speed_limit(self.layout, lanes[0], p).max(0.1);
        let mut a = p.max_accel * (1.0 - (v / v0).powi(4));
        if let Some((gap, v_lead)) = self.leader(lanes) {
            let gap = gap.max(0.1);
            let s_star = p.min_gap + (v * p.time_headway + v * (v - v_lead) / (2.0 * (p.max_accel * p.comfortable_decel).sqrt())).max(0.0);
            a = p.max_accel * (1.0 - (v / v0).powi(4) - (s_star / gap).powi(2));
        }
        let mut v_allow = f64::INFINITY;
        let mut dist = self.len(lanes[0]) - self.agent.s;
        for &l in &lanes[1..] {
            if dist > 80.0 {
                break;
            }
            let lim = lane_speed_limit(self.layout, l, p);
            v_allow = v_allow.min((lim * lim + 2.0 * p.comfortable_decel * dist.max(0.0)).sqrt());
            dist += self.len(l);
        }
        if let (Some(rem), Some(ve)) = (remaining, end_speed) {
            v_allow = v_allow.min((ve * ve + 2.0 * p.comfortable_decel * rem.max(0.0)).sqrt());
        }
        if v > v_allow {
            a = a.min((v_allow - v) / p.dt);
        }
        a.clamp(-p.max_brake, p.max_accel)
    }

    fn enter(&mut self, lane: LaneId) {
        if self.agent.lane != lane {
            let cur = self.layout.lane_ref(self.agent.lane);
            if cur.successors.contains(&lane) {
                self.agent.s = (self.agent.s - cur.length()).max(0.0);
                self.agent.lane = lane;
            } else {
                // lane given explicitly by the route: re-project
                self.agent = AgentState::on_lane(self.layout, lane, self.agent.state);
            }
        }
    }

    fn lane_follow(&mut self, route: &[LaneId], end_s: f64, end_speed: Option<f64>) -> bool {
        self.enter(route[0]);
        let mut idx = 0;
        loop {
            while idx + 1 < route.len() && self.agent.s >= self.len(route[idx]) - 1e-9 {
                self.agent.s = (self.agent.s - self.len(route[idx])).max(0.0);
                idx += 1;
                self.agent.lane = route[idx];
            }
            let remaining: f64 =
                route[idx..route.len() - 1].iter().map(|&l| self.len(l)).sum::<f64>() + end_s - self.agent.s;
            if remaining <= 1e-9 {
                return true;
            }
            if self.exhausted() {
                return false;
            }
            let lanes = self.lookahead(route, idx);
            let a = self.control(&lanes, Some(remaining), end_speed);
            let v = self.agent.state.speed;
            let mut ds = v * self.params.dt;
            let finish = ds >= remaining - 1e-9;
            if finish {
                ds = remaining;
            }
            self.agent.s += ds;
            while idx + 1 < route.len() && self.agent.s > self.len(route[idx]) {
                self.agent.s -= self.len(route[idx]);
                idx += 1;
                self.agent.lane = route[idx];
            }
            if finish {
                idx = route.len() - 1;
                self.agent.lane = route[idx];
                self.agent.s = end_s;
            }
            let lane = &self.layout.lane_ref(self.agent.lane).midline;
            let state = VehicleState::new(
                lane.point_at(self.agent.s),
                lane.heading_at(self.agent.s),
                (v + a * self.params.dt).max(0.0),
                a,
            );
            self.push(state);
            if finish {
                return true;
            }
        }
    }

    fn lane_change(&mut self, side: Side, mut target: LaneId) -> bool {
        let p = self.params;
        let h = |t: f64| 3.0 * t * t - 2.0 * t * t * t;
        let dh = |t: f64| 6.0 * t * (1.0 - t);
        let mut tau: f64 = 0.0;
        loop {
            if tau >= 1.0 - 1e-12 {
                let loc = self.layout.project_onto(target, self.agent.state.position).expect("target lane exists");
                self.agent.lane = target;
                self.agent.s = loc.s;
                self.agent.offset = 0.0;
                return true;
            }
            if self.exhausted() {
                return false;
            }
            let lane = self.layout.lane_ref(self.agent.lane);
            let centre = lane.midline.point_at(self.agent.s);
            let width = -self.layout.lane_ref(target).midline.project(centre).offset;
            let lanes = self.lookahead(&[self.agent.lane], 0);
            let a = self.control(&lanes, None, None);
            let v = self.agent.state.speed;
            let step_len = v * p.dt;
            let mut dtau = (p.dt / p.lane_change_duration_s).min(1.0 - tau);
            let mut dd = width * (h(tau + dtau) - h(tau));
            if dd.abs() > 0.9 * step_len {
                dtau *= 0.9 * step_len / dd.abs();
                dd = width * (h(tau + dtau) - h(tau));
            }
            let ds = (step_len * step_len - dd * dd).max(0.0).sqrt();
            tau += dtau;
            if 1.0 - tau < 1e-9 {
                tau = 1.0;
            }
            self.agent.offset = width * h(tau);
            self.agent.s += ds;
            if self.agent.s > lane.length() {
                if let Some(next) = self.layout.plain_successor(self.agent.lane) {
                    let over = self.agent.s - lane.length();
                    self.agent.lane = next;
                    self.agent.s = over;
                    if let Some(t) = match side {
                        Side::Left => self.layout.lane_ref(next).left,
                        Side::Right => self.layout.lane_ref(next).right,
                    } {
                        target = t;
                    }
                } else {
                    self.agent.s = lane.length();
                }
            }
            let mid = &self.layout.lane_ref(self.agent.lane).midline;
            let v_lat = if dtau > 0.0 { width * dh(tau) * dtau / p.dt } else { 0.0 };
            let heading = mid.heading_at(self.agent.s) + v_lat.atan2(ds / p.dt);
            let state = VehicleState::new(
                mid.offset_point(self.agent.s, self.agent.offset),
                heading,
                (v + a * p.dt).max(0.0),
                a,
            );
            self.push(state);
        }
    }

    fn conflict_ahead(&self, connector: LaneId) -> bool {
        let Some(traffic) = self.traffic else { return false };
        let mid = &self.layout.lane_ref(connector).midline;
        let n = (mid.length().ceil() as usize).max(1);
        let points: Vec<Point2<f64>> = (0..=n).map(|k| mid.point_at(mid.length() * k as f64 / n as f64)).collect();
        let window = (self.params.give_way_window_s / self.params.dt).round() as usize;
        (self.step..=self.step + window).any(|k| {
            traffic
                .at(k)
                .any(|(_, o)| points.iter().any(|q| q.distance(o.position) < self.params.conflict_radius))
        })
    }

    fn give_way(&mut self, connector: LaneId, has_priority: bool) -> bool {
        if has_priority {
            return true;
        }
        while self.conflict_ahead(connector) {
            if self.exhausted() {
                return false;
            }
            let s = self.agent.state;
            self.push(VehicleState::new(s.position, s.heading, 0.0, 0.0));
        }
        true
    }

    fn stop(&mut self) -> bool {
        let p = self.params;
        let chain = self.layout.plain_chain(self.agent.lane);
        while self.agent.state.speed > 0.0 {
            if self.exhausted() {
                return false;
            }
            let lanes = self.lookahead(&chain[chain.iter().position(|&l| l == self.agent.lane).unwrap_or(0)..], 0);
            let a = self.control(&lanes, None, None).min(-p.comfortable_decel).max(-p.max_brake);
            let v = self.agent.state.speed;
            self.agent.s += v * p.dt;
            let mut v_new = (v + a * p.dt).max(0.0);
            loop {
                let len = self.len(self.agent.lane);
                if self.agent.s <= len {
                    break;
                }
                match self.layout.plain_successor(self.agent.lane) {
                    Some(next) => {
                        self.agent.s -= len;
                        self.agent.lane = next;
                    }
                    None => {
                        self.agent.s = len;
                        v_new = 0.0;
                        break;
                    }
                }
            }
            let mid = &self.layout.lane_ref(self.agent.lane).midline;
            self.push(VehicleState::new(mid.point_at(self.agent.s), mid.heading_at(self.agent.s), v_new, a));
        }
        let dwell = (p.stop_dwell_s / p.dt).round() as usize;
        for _ in 0..dwell {
            if self.exhausted() {
                return false;
            }
            let s = self.agent.state;
            self.push(VehicleState::new(s.position, s.heading, 0.0, 0.0));
        }
        true
    }

    fn run(&mut self, m: &Maneuver) -> bool {
        match m {
            Maneuver::LaneFollow { route, end_s, end_speed } => self.lane_follow(route, *end_s, *end_speed),
            Maneuver::LaneChange { side, target } => self.lane_change(*side, *target),
            Maneuver::GiveWay { connector, has_priority, .. } => self.give_way(*connector, *has_priority),
            Maneuver::Turn { connector, .. } => {
                let len = self.len(*connector);
                self.lane_follow(&[*connector], len, None)
            }
            Maneuver::Stop => self.stop(),
        }
    }
}

/// Executes a manoeuvre chain from `start` at global step `start_step`.
///
/// The returned trajectory starts with `start.state`. When the horizon runs
/// out first the trajectory is returned truncated with the flag set.
pub fn generate_trajectory(
    vehicle: VehicleId,
    maneuvers: &[Maneuver],
    start: &AgentState,
    start_step: usize,
    layout: &RoadLayout,
    params: &MotionParams,
    traffic: Option<Traffic<'_>>,
) -> Generated {
    let mut runner = Runner { layout, params, traffic, agent: *start, step: start_step, states: vec![start.state] };
    let mut completed = true;
    for m in maneuvers {
        if !runner.run(m) {
            completed = false;
            break;
        }
    }
    let truncated = !completed;
    Generated {
        trajectory: Trajectory { vehicle, dt: params.dt, start_step, states: runner.states, truncated },
        end: runner.agent,
        truncated,
    }
}

/// Expands and executes a macro action.
#[allow(clippy::too_many_arguments)]
pub fn execute_macro(
    vehicle: VehicleId,
    action: MacroAction,
    start: &AgentState,
    start_step: usize,
    layout: &RoadLayout,
    goal: &Goal,
    params: &MotionParams,
    traffic: Option<Traffic<'_>>,
) -> Result<Generated, ManeuverError> {
    let chain = expand_macro(action, start, layout, goal, params)?;
    Ok(generate_trajectory(vehicle, &chain, start, start_step, layout, params, traffic))
}
