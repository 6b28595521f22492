//! Exact inference by enumerating the realised support.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bayes::variables::outcome_flags;
use crate::bayes::{BayesError, BnModel, JointKey, Value, Variable};
use crate::maneuver::MacroAction;
use crate::reward::{Component, Outcome};

/// One point of the discrete joint with non-zero probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub key: JointKey,
    pub macros: Vec<MacroAction>,
    /// Presence mask of the reward components.
    pub pattern: u8,
    pub weight: f64,
}

/// Normalised distribution over value tuples, in value order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Distribution {
    pub entries: Vec<(Vec<Value>, f64)>,
}

impl Distribution {
    pub fn get(&self, values: &[Value]) -> f64 {
        self.entries.iter().find(|(v, _)| v.as_slice() == values).map_or(0.0, |(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Value tuple of highest probability; ties go to the first in value order.
    pub fn mode(&self) -> Option<(&[Value], f64)> {
        self.entries
            .iter()
            .fold(None, |best: Option<&(Vec<Value>, f64)>, e| match best {
                Some(b) if b.1 >= e.1 => Some(b),
                _ => Some(e),
            })
            .map(|(v, p)| (v.as_slice(), *p))
    }
}

fn cartesian(model: &BnModel) -> Vec<(JointKey, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for v in &model.vehicles {
        let support = v.support();
        out = out
            .into_iter()
            .flat_map(|(key, p)| {
                support.iter().map(move |s| {
                    let mut k = key.clone();
                    k.push(*s);
                    (k, p * v.probability(*s))
                })
            })
            .collect();
    }
    out
}

fn patterns(stats: Option<&crate::bayes::RewardStats>) -> Vec<(u8, f64)> {
    match stats {
        None => vec![(0, 1.0)],
        Some(s) => s.patterns.keys().map(|&m| (m, s.pattern_probability(m))).collect(),
    }
}

pub(crate) fn enumerate_atoms(model: &BnModel) -> Vec<Atom> {
    let mut atoms = Vec::new();
    for (key, ps) in cartesian(model) {
        let mut stack = vec![(Vec::<MacroAction>::new(), ps)];
        while let Some((prefix, p)) = stack.pop() {
            let ended = match model.actions.get(&(prefix.clone(), key.clone())) {
                None => 1.0,
                Some(counts) => {
                    for (a, _) in counts.counts.iter().rev() {
                        if let Some(a) = a {
                            let mut next = prefix.clone();
                            next.push(*a);
                            stack.push((next, p * counts.probability(Some(*a))));
                        }
                    }
                    counts.probability(None)
                }
            };
            if ended > 0.0 {
                let stats = model.rewards.get(&(prefix.clone(), key.clone()));
                for (pattern, q) in patterns(stats) {
                    atoms.push(Atom { key: key.clone(), macros: prefix.clone(), pattern, weight: p * ended * q });
                }
            }
        }
    }
    atoms
}

impl BnModel {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn vehicle_index(&self, v: crate::world::VehicleId) -> Result<usize, BayesError> {
        self.vehicles
            .iter()
            .position(|f| f.vehicle == v)
            .ok_or_else(|| BayesError::UnknownVariable(format!("vehicle {v}")))
    }

    fn check(&self, var: Variable) -> Result<(), BayesError> {
        match var {
            Variable::Goal(v) | Variable::Trajectory(v) => self.vehicle_index(v).map(|_| ()),
            Variable::Action(d) if d == 0 || d > self.max_depth => Err(BayesError::UnknownVariable(var.to_string())),
            _ => Ok(()),
        }
    }

    /// Value of `var` at `atom`.
    pub fn value(&self, atom: &Atom, var: Variable) -> Value {
        match var {
            Variable::Goal(v) => Value::Index(atom.key[self.vehicle_index(v).expect("checked")].goal),
            Variable::Trajectory(v) => Value::Index(atom.key[self.vehicle_index(v).expect("checked")].trajectory),
            Variable::Action(d) => Value::Action(atom.macros.get(d - 1).copied()),
            Variable::Omega => Value::Omega((0..self.max_depth).map(|d| atom.macros.get(d).copied()).collect()),
            Variable::Present(c) => Value::Flag(atom.pattern & c.bit() != 0),
            Variable::OutcomeFlag(k) => Value::Flag(outcome_flags(atom.pattern)[&k]),
            Variable::Outcome => Value::Outcome(Outcome::from_presence(atom.pattern)),
        }
    }

    fn matches(&self, atom: &Atom, evidence: &[(Variable, Value)]) -> bool {
        evidence.iter().all(|(var, val)| self.value(atom, *var) == *val)
    }

    /// Atoms consistent with the evidence.
    pub fn matching_atoms<'a>(&'a self, evidence: &'a [(Variable, Value)]) -> impl Iterator<Item = &'a Atom> + 'a {
        self.atoms.iter().filter(move |a| self.matches(a, evidence))
    }

    /// Probability of the evidence.
    pub fn evidence_probability(&self, evidence: &[(Variable, Value)]) -> Result<f64, BayesError> {
        for (v, _) in evidence {
            self.check(*v)?;
        }
        Ok(self.atoms.iter().filter(|a| self.matches(a, evidence)).map(|a| a.weight).sum())
    }

    /// Exact p(targets | evidence), with the presence variables summed out
    /// unless they are targets themselves.
    pub fn query(&self, targets: &[Variable], evidence: &[(Variable, Value)]) -> Result<Distribution, BayesError> {
        for v in targets.iter().chain(evidence.iter().map(|(v, _)| v)) {
            self.check(*v)?;
        }
        let mut table: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        let mut z = 0.0;
        for atom in self.atoms.iter().filter(|a| self.matches(a, evidence)) {
            z += atom.weight;
            let key = targets.iter().map(|t| self.value(atom, *t)).collect();
            *table.entry(key).or_default() += atom.weight;
        }
        if z <= 0.0 {
            return Err(BayesError::ZeroProbabilityEvidence);
        }
        Ok(Distribution { entries: table.into_iter().map(|(k, p)| (k, p / z)).collect() })
    }

    /// E[R_c | evidence] over the states where `c` is set; `None` when it is
    /// never set under the evidence.
    pub fn expectation(&self, c: Component, evidence: &[(Variable, Value)]) -> Result<Option<f64>, BayesError> {
        if self.evidence_probability(evidence)? <= 0.0 {
            return Err(BayesError::ZeroProbabilityEvidence);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for atom in self.atoms.iter().filter(|a| a.pattern & c.bit() != 0 && self.matches(a, evidence)) {
            let stats = &self.rewards[&(atom.macros.clone(), atom.key.clone())];
            num += atom.weight * stats.components[&c].mean;
            den += atom.weight;
        }
        Ok((den > 0.0).then(|| num / den))
    }

    /// p(Ω = `macros` | S = `key`) by the chain rule over per-depth CPDs.
    pub fn trace_probability(&self, macros: &[MacroAction], key: &JointKey) -> f64 {
        let mut p = 1.0;
        for d in 0..=macros.len().min(self.max_depth) {
            let next = macros.get(d).copied();
            if d == self.max_depth {
                break;
            }
            p *= match self.actions.get(&(macros[..d].to_vec(), key.clone())) {
                Some(c) => c.probability(next),
                None => f64::from(u8::from(next.is_none())),
            };
        }
        p
    }

    /// Joint density of a full assignment: mass over the discrete variables
    /// times the reward densities of the set components.
    pub fn joint_probability(&self, a: &crate::bayes::FullAssignment) -> Result<f64, BayesError> {
        let missing = |what: String| Err(BayesError::IncompleteAssignment(what));
        let mut key = Vec::new();
        let mut p = 1.0;
        for v in &self.vehicles {
            let (Some(&g), Some(&t)) = (a.goals.get(&v.vehicle), a.trajectories.get(&v.vehicle)) else {
                return missing(format!("vehicle {}", v.vehicle));
            };
            let s = crate::planner::Sample { goal: g, trajectory: t };
            p *= v.probability(s);
            key.push(s);
        }
        if a.omega.len() != self.max_depth {
            return missing("omega".into());
        }
        for c in Component::ALL {
            if !a.rewards.contains_key(&c) {
                return missing(format!("reward {c}"));
            }
            if !a.present.contains_key(&c) {
                return missing(format!("presence {c}"));
            }
        }
        for k in Outcome::ALL {
            if !a.outcome_flags.contains_key(&k) {
                return missing(format!("outcome {k}"));
            }
        }
        // a non-empty action after an empty one is impossible
        let len = a.omega.iter().take_while(|x| x.is_some()).count();
        if a.omega[len..].iter().any(|x| x.is_some()) {
            return Ok(0.0);
        }
        let macros: Vec<MacroAction> = a.omega[..len].iter().map(|x| x.expect("prefix")).collect();
        p *= self.trace_probability(&macros, &key);
        let stats = self.rewards.get(&(macros, key));
        let mut mask = 0u8;
        for c in Component::ALL {
            if a.present[&c] != a.rewards[&c].is_some() {
                return Ok(0.0);
            }
            let Some(x) = a.rewards[&c] else { continue };
            mask |= c.bit();
            let Some(cs) = stats.and_then(|s| s.components.get(&c)) else { return Ok(0.0) };
            p *= if cs.variance > 0.0 {
                (-(x - cs.mean).powi(2) / (2.0 * cs.variance)).exp() / (2.0 * std::f64::consts::PI * cs.variance).sqrt()
            } else {
                f64::from(u8::from(x == cs.mean))
            };
        }
        p *= stats.map_or(f64::from(u8::from(mask == 0)), |s| s.pattern_probability(mask));
        if a.outcome_flags != outcome_flags(mask) {
            return Ok(0.0);
        }
        Ok(p)
    }
}
