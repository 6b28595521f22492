use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::bayes::build_bn;
use crate::fixtures::{prediction, random_trace_log, record, trace_log, TraceShape};
use crate::maneuver::MacroAction::{ChangeLeft, ChangeRight, Continue};
use crate::world::Turn;

const EXIT_RIGHT: MacroAction = MacroAction::Exit(Turn::Right);

fn certain_vehicle() -> Vec<crate::recognition::VehiclePrediction> {
    vec![prediction(1, &[(1.0, &[(1.0, &[ChangeRight])])])]
}

#[test]
fn all_continue_traces_done_is_certain() {
    let records = vec![
        record(&[(1, 0, 0)], &[Continue], Outcome::Done, 5.0),
        record(&[(1, 0, 0)], &[Continue], Outcome::Done, 6.0),
        record(&[(1, 0, 0)], &[ChangeLeft], Outcome::Collision, 0.0),
    ];
    let bn = build_bn(&trace_log(1, certain_vehicle(), records)).unwrap();
    let r = outcome_given_cf(&bn, &CounterfactualQuery::new([(1, Continue)])).unwrap();
    assert_eq!(r.outcome, Outcome::Done);
    assert_relative_eq!(r.probability, 1.0);
    assert_relative_eq!(r.distribution.values().sum::<f64>(), 1.0);
}

#[test]
fn equal_outcomes_favour_collision() {
    let records = vec![
        record(&[(1, 0, 0)], &[Continue], Outcome::Done, 5.0),
        record(&[(1, 0, 0)], &[Continue], Outcome::Collision, 0.0),
    ];
    let bn = build_bn(&trace_log(1, certain_vehicle(), records)).unwrap();
    let r = outcome_given_cf(&bn, &CounterfactualQuery::new([(1, Continue)])).unwrap();
    assert_eq!(r.outcome, Outcome::Collision);
    assert_relative_eq!(r.probability, 0.5);
    assert_eq!(r.collided_with, Some(1));
}

#[test]
fn queries_parse_and_validate() {
    let q: CounterfactualQuery = "omega1=Continue, omega2=Exit-right".parse().unwrap();
    assert_eq!(q.macros(), vec![Continue, EXIT_RIGHT]);
    assert_eq!(q.to_string(), "omega1=Continue,omega2=Exit-right");
    let err = "omega9=Fly".parse::<CounterfactualQuery>().unwrap_err().to_string();
    assert!(err.contains("Change-left") && err.contains("omegaD"), "{err}");
    assert!("omega1=Continue,omega1=Stop".parse::<CounterfactualQuery>().is_err());

    let bn = build_bn(&trace_log(1, certain_vehicle(), vec![record(&[(1, 0, 0)], &[Continue], Outcome::Done, 5.0)]))
        .unwrap();
    let deep = CounterfactualQuery::new([(2, Continue)]);
    assert!(matches!(outcome_given_cf(&bn, &deep), Err(CausalError::InvalidQuery(m)) if m.contains("omega1..omega1")));
    let unexplored = CounterfactualQuery::new([(1, EXIT_RIGHT)]);
    let err = outcome_given_cf(&bn, &unexplored).unwrap_err();
    assert!(matches!(err, CausalError::Unexplored(_)));
    assert!(err.to_string().contains("Exit-right"));
}

#[test]
fn divergence_of_two_point_example() {
    // 0.5·log2(0.5/0.25) + 0.5·log2(0.5/0.75)
    assert_relative_eq!(kl_bits(&[0.5, 0.5], &[0.25, 0.75]), 0.207_518_749, epsilon = 1e-6);
    assert_eq!(kl_bits(&[0.3, 0.7], &[0.3, 0.7]), 0.0);
    assert_eq!(kl_bits(&[0.0, 1.0], &[0.5, 0.5]), 1.0);
    assert!(kl_bits(&[0.5, 0.5], &[1.0, 0.0]).is_infinite());
    assert_relative_eq!(kl_bits(&[0.5f32, 0.5], &[0.25, 0.75]), 0.207_518_75, epsilon = 1e-5);
}

#[test]
fn single_hypothesis_vehicle_has_zero_divergence_and_is_dropped() {
    let records = vec![
        record(&[(1, 0, 0)], &[Continue], Outcome::Done, 5.0),
        record(&[(1, 0, 0)], &[ChangeLeft], Outcome::Done, 6.0),
    ];
    let bn = build_bn(&trace_log(1, certain_vehicle(), records)).unwrap();
    let ds = influence_divergences(&bn, None).unwrap();
    assert_eq!(ds.len(), 1);
    assert_eq!(ds[0].bits, 0.0);
    assert!(agent_influences(&bn, 3, &CausalOptions::default()).unwrap().is_empty());
}

#[test]
fn two_point_divergence_through_the_model() {
    let preds = vec![prediction(1, &[(0.5, &[(1.0, &[Continue])]), (0.5, &[(1.0, &[ChangeRight])])])];
    let mut records = vec![record(&[(1, 0, 0)], &[Continue], Outcome::Done, 5.0)];
    records.extend((0..3).map(|_| record(&[(1, 0, 0)], &[ChangeLeft], Outcome::Done, 5.0)));
    records.extend((0..3).map(|_| record(&[(1, 1, 0)], &[Continue], Outcome::Done, 5.0)));
    records.push(record(&[(1, 1, 0)], &[ChangeLeft], Outcome::Done, 5.0));
    let bn = build_bn(&trace_log(1, preds, records)).unwrap();
    for depth in [None, Some(1)] {
        let ds = influence_divergences(&bn, depth).unwrap();
        for d in ds {
            assert_relative_eq!(d.bits, 0.207_518_749, epsilon = 1e-6);
        }
    }
    let causes = agent_influences(&bn, 2, &CausalOptions::default()).unwrap();
    assert!(causes.is_empty(), "identical divergences mean no influence");
}

#[test]
fn infinite_divergences_rank_by_probability() {
    let preds = vec![prediction(1, &[(0.3, &[(1.0, &[Continue])]), (0.7, &[(1.0, &[ChangeRight])])])];
    let records = vec![
        record(&[(1, 0, 0)], &[Continue], Outcome::Done, 5.0),
        record(&[(1, 1, 0)], &[ChangeLeft], Outcome::Done, 5.0),
    ];
    let bn = build_bn(&trace_log(1, preds, records)).unwrap();
    let causes = agent_influences(&bn, 2, &CausalOptions::default()).unwrap();
    assert_eq!(causes.len(), 2);
    assert!(causes.iter().all(|c| c.divergence_bits.is_none()));
    assert_eq!(causes[0].macros, vec![ChangeRight]);
}

fn two_goal_model() -> BnModel {
    let preds = vec![
        prediction(1, &[(0.6, &[(1.0, &[ChangeRight, EXIT_RIGHT])]), (0.4, &[(1.0, &[Continue])])]),
        prediction(2, &[(1.0, &[(1.0, &[Continue])])]),
    ];
    // ego changes left mostly when vehicle 1 turns, continues when it does not
    let mut records = Vec::new();
    for _ in 0..3 {
        records.push(record(&[(1, 0, 0), (2, 0, 0)], &[ChangeLeft, Continue], Outcome::Done, 10.0));
    }
    records.push(record(&[(1, 0, 0), (2, 0, 0)], &[Continue], Outcome::Done, 14.0));
    records.push(record(&[(1, 1, 0), (2, 0, 0)], &[Continue], Outcome::Done, 9.0));
    records.push(record(&[(1, 1, 0), (2, 0, 0)], &[ChangeLeft, Continue], Outcome::Done, 10.0));
    build_bn(&trace_log(2, preds, records)).unwrap()
}

#[test]
fn influential_vehicle_is_named_with_its_likely_trajectory() {
    let bn = two_goal_model();
    let causes = agent_influences(&bn, 5, &CausalOptions::default()).unwrap();
    assert!(causes.iter().all(|c| c.vehicle == 1));
    assert_eq!(causes.len(), 2);
    assert_eq!(causes[0].macros, vec![ChangeRight, EXIT_RIGHT]);
    assert_relative_eq!(causes[0].probability, 0.6);
    assert!(causes[0].divergence_bits.unwrap() <= causes[1].divergence_bits.unwrap());
    assert_eq!(agent_influences(&bn, 1, &CausalOptions::default()).unwrap().len(), 1);
}

#[test]
fn effects_of_slower_counterfactual() {
    let bn = two_goal_model();
    let q = CounterfactualQuery::new([(1, Continue)]).with_counts(1, 4);
    let effects = reward_deltas(&bn, &[ChangeLeft, Continue], &q).unwrap();
    assert_eq!(effects[0].component, Component::Time);
    // p(Continue, g) is 0.6·1/4 and 0.4·1/2, so E[time | Continue] = (0.15·14 + 0.2·9) / 0.35; factual 10
    assert_relative_eq!(effects[0].delta, 8.0 / 7.0, epsilon = 1e-12);
    assert_relative_eq!(effects[0].reward_delta, 8.0 / 7.0, epsilon = 1e-12);
    assert!(effects[1..].iter().all(|e| e.delta == 0.0));

    let summary = explain(&bn, &[ChangeLeft, Continue], &q, &CausalOptions::default()).unwrap();
    assert_eq!(summary.effects.len(), 1);
    assert_eq!(summary.outcome.outcome, Outcome::Done);
    assert_eq!(summary.outcome.probability, None);
    assert_eq!(summary.causes[0].vehicle, 1);
    let json = serde_json::to_string(&summary).unwrap();
    assert_eq!(serde_json::from_str::<CausalSummary>(&json).unwrap(), summary);
}

#[test]
fn identical_conditioning_gives_zero_effects() {
    let bn = two_goal_model();
    let q = CounterfactualQuery::new([(1, ChangeLeft), (2, Continue)]).with_counts(0, 10);
    let effects = reward_deltas(&bn, &[ChangeLeft, Continue], &q).unwrap();
    assert!(!effects.is_empty());
    assert!(effects.iter().all(|e| e.delta == 0.0 && e.reward_delta == 0.0));
}

#[test]
fn zero_counts_give_empty_lists() {
    let bn = two_goal_model();
    let q = CounterfactualQuery::new([(1, Continue)]).with_counts(0, 0);
    let s = explain(&bn, &[ChangeLeft, Continue], &q, &CausalOptions::default()).unwrap();
    assert!(s.effects.is_empty() && s.causes.is_empty());
    let strict = explain(&bn, &[ChangeLeft, Continue], &q, &CausalOptions { elide_certain: false, ..Default::default() }).unwrap();
    assert_eq!(strict.outcome.probability, Some(1.0));
}

fn first_actions(bn: &BnModel) -> Vec<MacroAction> {
    bn.action_support[0].clone()
}

proptest! {
    #[test]
    fn divergences_are_non_negative(seed in 0u64..300) {
        let trace = random_trace_log(&mut ChaCha8Rng::seed_from_u64(seed), TraceShape::default());
        let bn = build_bn(&trace).unwrap();
        for depth in [None, Some(1), Some(2)] {
            for d in influence_divergences(&bn, depth).unwrap() {
                prop_assert!(d.bits >= 0.0);
            }
        }
    }

    #[test]
    fn effects_are_antisymmetric_sorted_and_prefix_stable(seed in 0u64..300) {
        let trace = random_trace_log(&mut ChaCha8Rng::seed_from_u64(seed), TraceShape::default());
        let bn = build_bn(&trace).unwrap();
        let acts = first_actions(&bn);
        for a in &acts {
            for b in &acts {
                let ea = [(Variable::Action(1), Value::Action(Some(*a)))];
                let eb = [(Variable::Action(1), Value::Action(Some(*b)))];
                let ab = effects_between(&bn, &ea, &eb).unwrap();
                let ba = effects_between(&bn, &eb, &ea).unwrap();
                for e in &ab {
                    let r = ba.iter().find(|x| x.component == e.component).unwrap();
                    prop_assert_eq!(e.delta, -r.delta);
                    prop_assert_eq!(e.reward_delta, -r.reward_delta);
                    if a == b {
                        prop_assert_eq!(e.delta, 0.0);
                    }
                }
                prop_assert!(ab.windows(2).all(|w| w[0].reward_delta.abs() >= w[1].reward_delta.abs()));
                let full = reward_deltas(&bn, &[*a], &CounterfactualQuery::new([(1, *b)]).with_counts(0, 10)).unwrap();
                for n in 0..full.len() {
                    let q = CounterfactualQuery::new([(1, *b)]).with_counts(0, n);
                    prop_assert_eq!(&reward_deltas(&bn, &[*a], &q).unwrap()[..], &full[..n]);
                }
            }
        }
    }
}
