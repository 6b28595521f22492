use std::collections::BTreeMap;

use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fixtures::{random_components, random_trace_log, TraceShape};
use crate::maneuver::MacroAction::{self, ChangeLeft, Continue};
use crate::planner::{Sample, TraceLog, TraceRecord};
use crate::recognition::{GoalHypothesis, TrajectoryHypothesis, VehiclePrediction};
use crate::reward::{Component, Outcome, RewardComponents, RewardConfig};

fn one_vehicle() -> VehiclePrediction {
    let traj = |p| TrajectoryHypothesis { macros: vec![Continue], probability: p, reward: 0.0, trajectory: None };
    VehiclePrediction {
        vehicle: 1,
        goals: vec![
            GoalHypothesis { label: "a".into(), probability: 0.75, trajectories: vec![traj(1.0)] },
            GoalHypothesis { label: "b".into(), probability: 0.25, trajectories: vec![traj(1.0)] },
        ],
    }
}

fn record(goal: usize, macros: Vec<MacroAction>, outcome: Outcome, time: f64) -> TraceRecord {
    let mut components = random_components(&mut ChaCha8Rng::seed_from_u64(0), outcome);
    if components.0.contains_key(&Component::Time) {
        components.0.insert(Component::Time, time);
    }
    let reward = components.scalar(&RewardConfig::default());
    TraceRecord {
        samples: BTreeMap::from([(1, Sample { goal, trajectory: 0 })]),
        macros,
        components,
        outcome,
        reward,
        collided_with: (outcome == Outcome::Collision).then_some(1),
    }
}

fn log(max_depth: usize, records: Vec<TraceRecord>) -> TraceLog {
    TraceLog { ego: 0, max_depth, rewards: RewardConfig::default(), predictions: vec![one_vehicle()], records }
}

fn key(goal: usize) -> JointKey {
    vec![Sample { goal, trajectory: 0 }]
}

#[test]
fn action_cpd_is_a_count_ratio() {
    let mut records: Vec<_> = (0..30).map(|_| record(0, vec![Continue], Outcome::Done, 5.0)).collect();
    records.extend((0..30).map(|_| record(0, vec![ChangeLeft], Outcome::Done, 5.0)));
    let bn = build_bn(&log(2, records)).unwrap();
    let counts = &bn.actions[&(vec![], key(0))];
    assert_eq!(counts.total, 60);
    assert_relative_eq!(counts.probability(Some(Continue)), 0.5);
}

#[test]
fn reward_stats_use_unbiased_variance() {
    let records = vec![record(0, vec![Continue], Outcome::Done, 4.0), record(0, vec![Continue], Outcome::Done, 6.0)];
    let bn = build_bn(&log(1, records)).unwrap();
    let s = bn.rewards[&(vec![Continue], key(0))].components[&Component::Time];
    assert_relative_eq!(s.mean, 5.0);
    assert_relative_eq!(s.variance, 2.0);
}

#[test]
fn unvisited_state_ends_the_trace() {
    let bn = build_bn(&log(2, vec![record(0, vec![Continue], Outcome::Done, 5.0)])).unwrap();
    assert_relative_eq!(bn.trace_probability(&[], &key(1)), 1.0);
    assert_relative_eq!(bn.trace_probability(&[Continue], &key(1)), 0.0);
    // goal 1 was never sampled, so its mass all sits on the empty trace with dead outcome
    let d = bn
        .query(&[Variable::Omega, Variable::Outcome], &[(Variable::Goal(1), Value::Index(1))])
        .unwrap();
    assert_relative_eq!(d.get(&[Value::Omega(vec![None, None]), Value::Outcome(Outcome::Dead)]), 1.0);
}

#[test]
fn empty_log_is_rejected() {
    let err = build_bn(&log(1, vec![])).unwrap_err();
    assert_eq!(err.to_string(), "empty trace log");
}

#[test]
fn outcome_given_first_action_mixes_traces() {
    let records = vec![record(0, vec![Continue], Outcome::Done, 5.0), record(0, vec![Continue], Outcome::Collision, 0.0)];
    let mut trace = log(1, records);
    trace.predictions[0].goals.truncate(1);
    trace.predictions[0].goals[0].probability = 1.0;
    let bn = build_bn(&trace).unwrap();
    let d = bn.query(&[Variable::Outcome], &[(Variable::Action(1), Value::Action(Some(Continue)))]).unwrap();
    assert_relative_eq!(d.get(&[Value::Outcome(Outcome::Done)]), 0.5);
    assert_relative_eq!(d.get(&[Value::Outcome(Outcome::Collision)]), 0.5);
    assert_relative_eq!(d.total(), 1.0);
}

#[test]
fn full_omega_evidence_is_a_point_mass() {
    let records = vec![
        record(0, vec![Continue, Continue], Outcome::Done, 5.0),
        record(0, vec![ChangeLeft], Outcome::Termination, 5.0),
        record(1, vec![Continue], Outcome::Collision, 5.0),
    ];
    let bn = build_bn(&log(2, records)).unwrap();
    let omega = Value::Omega(vec![Some(Continue), Some(Continue)]);
    let d = bn.query(&[Variable::Omega], &[(Variable::Omega, omega.clone())]).unwrap();
    assert_eq!(d.entries.len(), 1);
    assert_relative_eq!(d.get(&[omega]), 1.0);
}

#[test]
fn single_record_has_unit_mass_on_its_assignment() {
    let mut trace = log(2, vec![record(0, vec![Continue], Outcome::Done, 5.0)]);
    trace.predictions[0].goals.truncate(1);
    trace.predictions[0].goals[0].probability = 1.0;
    let bn = build_bn(&trace).unwrap();
    let d = bn.query(&[Variable::Goal(1), Variable::Omega, Variable::Outcome], &[]).unwrap();
    assert_eq!(d.entries.len(), 1);
    let (mode, p) = d.mode().unwrap();
    assert_relative_eq!(p, 1.0);
    assert_eq!(mode[1], Value::Omega(vec![Some(Continue), None]));
    assert_eq!(mode[2], Value::Outcome(Outcome::Done));
}

#[test]
fn zero_probability_evidence_is_an_error() {
    let bn = build_bn(&log(1, vec![record(0, vec![Continue], Outcome::Done, 5.0)])).unwrap();
    let err = bn.query(&[Variable::Outcome], &[(Variable::Action(1), Value::Action(Some(ChangeLeft)))]).unwrap_err();
    assert!(matches!(err, BayesError::ZeroProbabilityEvidence));
    assert!(matches!(bn.query(&[Variable::Action(2)], &[]), Err(BayesError::UnknownVariable(_))));
    assert!(matches!(bn.query(&[Variable::Goal(9)], &[]), Err(BayesError::UnknownVariable(_))));
}

#[test]
fn expectation_skips_unset_components() {
    let records = vec![
        record(0, vec![Continue], Outcome::Done, 4.0),
        record(0, vec![Continue], Outcome::Done, 6.0),
        record(0, vec![Continue], Outcome::Collision, 0.0),
    ];
    let bn = build_bn(&log(1, records)).unwrap();
    let ev = [(Variable::Goal(1), Value::Index(0))];
    assert_relative_eq!(bn.expectation(Component::Time, &ev).unwrap().unwrap(), 5.0);
    assert_relative_eq!(bn.expectation(Component::Collision, &ev).unwrap().unwrap(), 1.0);
    assert_eq!(bn.expectation(Component::Termination, &ev).unwrap(), None);
}

fn assignment(bn: &BnModel, goal: usize, omega: Vec<Option<MacroAction>>, rewards: &RewardComponents) -> FullAssignment {
    let mut a = FullAssignment {
        goals: BTreeMap::from([(1, goal)]),
        trajectories: BTreeMap::from([(1, 0)]),
        omega,
        ..Default::default()
    };
    let mut mask = 0;
    for c in Component::ALL {
        let v = rewards.get(c);
        a.rewards.insert(c, v);
        a.present.insert(c, v.is_some());
        if v.is_some() {
            mask |= c.bit();
        }
    }
    a.outcome_flags = outcome_flags(mask);
    assert_eq!(a.omega.len(), bn.max_depth);
    a
}

#[test]
fn joint_probability_follows_the_chain_rule() {
    let done = record(0, vec![Continue], Outcome::Done, 5.0);
    let records = vec![done.clone(), record(0, vec![ChangeLeft], Outcome::Termination, 5.0)];
    let bn = build_bn(&log(2, records)).unwrap();
    let a = assignment(&bn, 0, vec![Some(Continue), None], &done.components);
    // p(g) p(Ω1) p(Ω2=∅|Ω1) and point masses for the single-sample rewards
    assert_relative_eq!(bn.joint_probability(&a).unwrap(), 0.75 * 0.5 * 1.0);

    let mut gap = a.clone();
    gap.omega = vec![None, Some(Continue)];
    assert_relative_eq!(bn.joint_probability(&gap).unwrap(), 0.0);

    let mut wrong_flag = a.clone();
    wrong_flag.outcome_flags.insert(Outcome::Collision, true);
    assert_relative_eq!(bn.joint_probability(&wrong_flag).unwrap(), 0.0);

    let mut incomplete = a;
    incomplete.omega.pop();
    assert!(matches!(bn.joint_probability(&incomplete), Err(BayesError::IncompleteAssignment(_))));
}

#[test]
fn joint_probability_uses_gaussian_reward_density() {
    let records = vec![record(0, vec![Continue], Outcome::Done, 4.0), record(0, vec![Continue], Outcome::Done, 6.0)];
    let bn = build_bn(&log(1, records.clone())).unwrap();
    let mut comps = records[0].components.clone();
    comps.0.insert(Component::Time, 5.0);
    let a = assignment(&bn, 0, vec![Some(Continue)], &comps);
    let gauss = 1.0 / (2.0 * std::f64::consts::PI * 2.0).sqrt();
    assert_relative_eq!(bn.joint_probability(&a).unwrap(), 0.75 * gauss, max_relative = 1e-12);
}

#[test]
fn dead_traces_set_only_the_dead_flag() {
    let bn = build_bn(&log(1, vec![record(0, vec![Continue], Outcome::Dead, 0.0)])).unwrap();
    let ev = [(Variable::Goal(1), Value::Index(0))];
    let d = bn.query(&[Variable::OutcomeFlag(Outcome::Dead), Variable::OutcomeFlag(Outcome::Done)], &ev).unwrap();
    assert_relative_eq!(d.get(&[Value::Flag(true), Value::Flag(false)]), 1.0);
}

fn flags_match_presence(bn: &BnModel) {
    for atom in bn.atoms() {
        let o = bn.value(atom, Variable::Outcome);
        let Value::Outcome(o) = o else { unreachable!() };
        assert_eq!(bn.value(atom, Variable::OutcomeFlag(o)), Value::Flag(true));
    }
}

proptest! {
    #[test]
    fn atom_weights_sum_to_one(seed in 0u64..500) {
        let trace = random_trace_log(&mut ChaCha8Rng::seed_from_u64(seed), TraceShape::default());
        let bn = build_bn(&trace).unwrap();
        let total: f64 = bn.atoms().iter().map(|a| a.weight).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        flags_match_presence(&bn);
    }

    #[test]
    fn total_probability_recovers_the_marginal(seed in 0u64..300) {
        let trace = random_trace_log(&mut ChaCha8Rng::seed_from_u64(seed), TraceShape::default());
        let bn = build_bn(&trace).unwrap();
        let prior = bn.query(&[Variable::Outcome], &[]).unwrap();
        let first = bn.query(&[Variable::Action(1)], &[]).unwrap();
        for (o, po) in &prior.entries {
            let mut sum = 0.0;
            for (a, pa) in &first.entries {
                let ev = [(Variable::Action(1), a[0].clone())];
                sum += pa * bn.query(&[Variable::Outcome], &ev).unwrap().get(o);
            }
            prop_assert!((sum - po).abs() < 1e-9);
        }
    }

    #[test]
    fn trace_probabilities_sum_to_one_per_state(seed in 0u64..300) {
        let trace = random_trace_log(&mut ChaCha8Rng::seed_from_u64(seed), TraceShape::default());
        let bn = build_bn(&trace).unwrap();
        let keys: std::collections::BTreeSet<_> = bn.actions.keys().map(|(_, k)| k.clone()).collect();
        for k in keys {
            let omegas: std::collections::BTreeSet<Vec<MacroAction>> =
                bn.rewards.keys().filter(|(_, kk)| *kk == k).map(|(m, _)| m.clone()).collect();
            let total: f64 = omegas.iter().map(|m| bn.trace_probability(m, &k)).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
