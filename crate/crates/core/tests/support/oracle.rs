//! Brute-force joint table built straight from trace records.

use std::collections::BTreeMap;

use avexplain::bayes::{Value, Variable};
use avexplain::maneuver::MacroAction;
use avexplain::planner::{Sample, TraceLog};
use avexplain::reward::{Component, Outcome};
use avexplain::world::VehicleId;

pub struct Row {
    pub samples: BTreeMap<VehicleId, Sample>,
    pub macros: Vec<MacroAction>,
    pub mask: u8,
    pub weight: f64,
}

fn joint_keys(trace: &TraceLog) -> Vec<(BTreeMap<VehicleId, Sample>, f64)> {
    let mut out = vec![(BTreeMap::new(), 1.0)];
    for pred in &trace.predictions {
        let mut next = Vec::new();
        for (key, p) in &out {
            for (g, goal) in pred.goals.iter().enumerate() {
                for (t, traj) in goal.trajectories.iter().enumerate() {
                    let q = p * goal.probability * traj.probability;
                    if q > 0.0 {
                        let mut k = key.clone();
                        k.insert(pred.vehicle, Sample { goal: g, trajectory: t });
                        next.push((k, q));
                    }
                }
            }
        }
        out = next;
    }
    out
}

/// Every (joint key, trace, presence mask) with its probability. Within a
/// key, traces and masks take their empirical record frequencies; unvisited
/// keys put all mass on the empty trace with nothing present.
pub fn joint_table(trace: &TraceLog) -> Vec<Row> {
    let mut rows = Vec::new();
    for (key, p) in joint_keys(trace) {
        let matching: Vec<_> = trace.records.iter().filter(|r| r.samples == key).collect();
        if matching.is_empty() {
            rows.push(Row { samples: key, macros: vec![], mask: 0, weight: p });
            continue;
        }
        let mut freq: BTreeMap<(Vec<MacroAction>, u8), usize> = BTreeMap::new();
        for r in &matching {
            *freq.entry((r.macros.clone(), r.components.presence())).or_default() += 1;
        }
        for ((macros, mask), n) in freq {
            let weight = p * n as f64 / matching.len() as f64;
            rows.push(Row { samples: key.clone(), macros, mask, weight });
        }
    }
    rows
}

fn outcome_of(mask: u8) -> Outcome {
    let hits: Vec<Outcome> = [Outcome::Done, Outcome::Collision, Outcome::Termination]
        .into_iter()
        .filter(|o| o.required().iter().all(|c| mask & c.bit() != 0))
        .collect();
    if hits.len() == 1 {
        hits[0]
    } else {
        Outcome::Dead
    }
}

pub fn value(row: &Row, var: Variable, max_depth: usize) -> Value {
    match var {
        Variable::Goal(v) => Value::Index(row.samples[&v].goal),
        Variable::Trajectory(v) => Value::Index(row.samples[&v].trajectory),
        Variable::Action(d) => Value::Action(row.macros.get(d - 1).copied()),
        Variable::Omega => Value::Omega((0..max_depth).map(|d| row.macros.get(d).copied()).collect()),
        Variable::Present(c) => Value::Flag(row.mask & c.bit() != 0),
        Variable::OutcomeFlag(k) => Value::Flag(match k {
            Outcome::Dead => outcome_of(row.mask) == Outcome::Dead,
            _ => k.required().iter().all(|c| row.mask & c.bit() != 0),
        }),
        Variable::Outcome => Value::Outcome(outcome_of(row.mask)),
    }
}

/// Conditional table p(targets | evidence); `None` for zero-mass evidence.
pub fn query(
    trace: &TraceLog,
    targets: &[Variable],
    evidence: &[(Variable, Value)],
) -> Option<BTreeMap<Vec<Value>, f64>> {
    let rows = joint_table(trace);
    let mut table: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
    let mut z = 0.0;
    for row in &rows {
        if evidence.iter().all(|(v, x)| value(row, *v, trace.max_depth) == *x) {
            z += row.weight;
            *table.entry(targets.iter().map(|t| value(row, *t, trace.max_depth)).collect()).or_default() += row.weight;
        }
    }
    (z > 0.0).then(|| table.into_iter().map(|(k, p)| (k, p / z)).collect())
}

/// Candidate query variables for a trace.
pub fn variables(trace: &TraceLog) -> Vec<Variable> {
    let mut vars = vec![Variable::Omega, Variable::Outcome];
    for p in &trace.predictions {
        vars.push(Variable::Goal(p.vehicle));
        vars.push(Variable::Trajectory(p.vehicle));
    }
    vars.extend((1..=trace.max_depth).map(Variable::Action));
    vars.extend(Component::ALL.into_iter().map(Variable::Present));
    vars.extend(Outcome::ALL.into_iter().map(Variable::OutcomeFlag));
    vars
}
