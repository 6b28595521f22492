//! Sentence generation from a causal summary.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::causal::{CausalSummary, Effect, SummaryCause};
use crate::maneuver::MacroAction;
use crate::reward::{Component, Outcome};
use crate::world::{Turn, VehicleId};

#[derive(Debug, Error, PartialEq)]
pub enum GrammarError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("unknown phrasing preset '{0}', expected literal or narrative")]
    UnknownPreset(String),
    #[error("phrasing config: {0}")]
    Config(String),
}

/// Adverb for a probability; `None` gives the empty word.
pub fn adverb(p: Option<f64>) -> Result<&'static str, GrammarError> {
    let Some(p) = p else { return Ok("") };
    if !(0.0..=1.0).contains(&p) {
        return Err(GrammarError::InvalidProbability(p));
    }
    Ok(if p == 0.0 {
        "never"
    } else if p <= 0.33 {
        "unlikely"
    } else if p <= 0.67 {
        "probably"
    } else if p < 1.0 {
        "likely"
    } else {
        "certainly"
    })
}

/// Comparison word for a signed difference.
pub fn relation(delta: f64) -> &'static str {
    if delta < 0.0 {
        "lower"
    } else if delta > 0.0 {
        "higher"
    } else {
        "equal"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tense {
    Ego,
    NonEgo,
}

/// Phrases for every symbol the grammar emits. `{vehicle}` in subjects and
/// outcomes expands to "vehicle <id>".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrTable {
    pub ego_subject: String,
    pub nonego_subject: String,
    pub ego_actions: BTreeMap<MacroAction, String>,
    pub nonego_actions: BTreeMap<MacroAction, String>,
    pub outcomes: BTreeMap<Outcome, String>,
    pub components: BTreeMap<Component, String>,
    /// Used for `{vehicle}` when the vehicle is unknown.
    pub unknown_vehicle: String,
    /// Raw phrase to simpler phrase; applied longest match first.
    pub substitutions: BTreeMap<String, String>,
}

fn turn_word(t: Turn) -> &'static str {
    match t {
        Turn::Left => "left",
        Turn::Straight => "straight",
        Turn::Right => "right",
    }
}

fn actions(f: impl Fn(MacroAction) -> String) -> BTreeMap<MacroAction, String> {
    MacroAction::ALL.into_iter().map(|a| (a, f(a))).collect()
}

fn past(a: MacroAction) -> String {
    match a {
        MacroAction::Continue => "continued ahead".into(),
        MacroAction::ChangeLeft => "changed left".into(),
        MacroAction::ChangeRight => "changed right".into(),
        MacroAction::Exit(Turn::Straight) => "gone straight".into(),
        MacroAction::Exit(t) => format!("turned {}", turn_word(t)),
        MacroAction::ContinueNextExit => "continued to the next exit".into(),
        MacroAction::Stop => "stopped".into(),
    }
}

fn present(a: MacroAction) -> String {
    match a {
        MacroAction::Continue => "continues ahead".into(),
        MacroAction::ChangeLeft => "changes left".into(),
        MacroAction::ChangeRight => "changes right".into(),
        MacroAction::Exit(Turn::Straight) => "goes straight".into(),
        MacroAction::Exit(Turn::Right) => "exits right".into(),
        MacroAction::Exit(t) => format!("turns {}", turn_word(t)),
        MacroAction::ContinueNextExit => "continues to the next exit".into(),
        MacroAction::Stop => "stops".into(),
    }
}

fn default_substitutions() -> BTreeMap<String, String> {
    let mut s: BTreeMap<String, String> = [
        ("with higher time to goal", "slower"),
        ("with lower time to goal", "faster"),
        ("with equal time to goal", "equally fast"),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.to_string()))
    .collect();
    for q in ["jerk", "angular acceleration", "curvature"] {
        s.insert(format!("with higher {q}"), format!("with more {q}"));
        s.insert(format!("with lower {q}"), format!("with less {q}"));
    }
    s
}

impl StrTable {
    /// Conditional-perfect phrasing throughout, e.g. "vehicle 1 would have
    /// probably changed right".
    pub fn literal() -> Self {
        let mut ego_actions = actions(past);
        ego_actions.insert(MacroAction::Exit(Turn::Straight), "gone straight".into());
        Self {
            ego_subject: "ego had".into(),
            nonego_subject: "{vehicle} would have".into(),
            ego_actions,
            nonego_actions: actions(past),
            outcomes: [
                (Outcome::Done, "reached its goal"),
                (Outcome::Collision, "collided with {vehicle}"),
                (Outcome::Termination, "not reached the goal"),
                (Outcome::Dead, "not reached the goal"),
            ]
            .into_iter()
            .map(|(o, s)| (o, s.to_string()))
            .collect(),
            components: Component::ALL.into_iter().map(|c| (c, component_phrase(c).to_string())).collect(),
            unknown_vehicle: "another vehicle".into(),
            substitutions: default_substitutions(),
        }
    }

    /// Present tense for other vehicles and "gone straight" for continuing,
    /// e.g. "vehicle 1 probably changes right then exits right".
    pub fn narrative() -> Self {
        let mut t = Self::literal();
        t.ego_actions.insert(MacroAction::Continue, "gone straight".into());
        t.nonego_subject = "{vehicle}".into();
        t.nonego_actions = actions(present);
        t.outcomes.insert(Outcome::Done, "reached the goal".into());
        t
    }

    pub fn preset(name: &str) -> Result<Self, GrammarError> {
        match name {
            "literal" => Ok(Self::literal()),
            "narrative" => Ok(Self::narrative()),
            other => Err(GrammarError::UnknownPreset(other.to_string())),
        }
    }

    /// Reads a table from TOML: an optional `preset` to start from, then
    /// any fields or map entries to override.
    pub fn from_toml(text: &str) -> Result<Self, GrammarError> {
        let overrides: Overrides = toml::from_str(text).map_err(|e| GrammarError::Config(e.to_string()))?;
        let mut t = Self::preset(overrides.preset.as_deref().unwrap_or("literal"))?;
        overrides.apply(&mut t);
        Ok(t)
    }

    fn vehicle(&self, v: Option<VehicleId>) -> String {
        v.map_or_else(|| self.unknown_vehicle.clone(), |v| format!("vehicle {v}"))
    }
}

impl Default for StrTable {
    fn default() -> Self {
        Self::literal()
    }
}

fn component_phrase(c: Component) -> &'static str {
    match c {
        Component::Time => "time to goal",
        Component::Jerk => "jerk",
        Component::AngularAcceleration => "angular acceleration",
        Component::Curvature => "curvature",
        Component::Collision => "collision",
        Component::Termination => "termination",
    }
}

/// Partial phrase table layered over a preset.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub preset: Option<String>,
    pub ego_subject: Option<String>,
    pub nonego_subject: Option<String>,
    #[serde(default)]
    pub ego_actions: BTreeMap<MacroAction, String>,
    #[serde(default)]
    pub nonego_actions: BTreeMap<MacroAction, String>,
    #[serde(default)]
    pub outcomes: BTreeMap<Outcome, String>,
    #[serde(default)]
    pub components: BTreeMap<Component, String>,
    pub unknown_vehicle: Option<String>,
    #[serde(default)]
    pub substitutions: BTreeMap<String, String>,
}

impl Overrides {
    pub fn apply(self, t: &mut StrTable) {
        if let Some(s) = self.ego_subject {
            t.ego_subject = s;
        }
        if let Some(s) = self.nonego_subject {
            t.nonego_subject = s;
        }
        if let Some(s) = self.unknown_vehicle {
            t.unknown_vehicle = s;
        }
        t.ego_actions.extend(self.ego_actions);
        t.nonego_actions.extend(self.nonego_actions);
        t.outcomes.extend(self.outcomes);
        t.components.extend(self.components);
        t.substitutions.extend(self.substitutions);
    }
}

/// Macro actions joined with "then".
pub fn realize_macros(macros: &[MacroAction], tense: Tense, table: &StrTable) -> String {
    let words = match tense {
        Tense::Ego => &table.ego_actions,
        Tense::NonEgo => &table.nonego_actions,
    };
    macros.iter().map(|a| words[a].as_str()).collect::<Vec<_>>().join(" then ")
}

fn sentence(parts: &[String]) -> String {
    let mut s = parts.iter().filter(|p| !p.is_empty()).cloned().collect::<Vec<_>>().join(" ");
    s.push('.');
    if let Some(first) = s.get(..1) {
        s = first.to_uppercase() + &s[1..];
    }
    s
}

fn action(subject: String, p: Option<f64>, macros: &[MacroAction], tense: Tense, table: &StrTable) -> Result<String, GrammarError> {
    let parts = [subject, adverb(p)?.to_string(), realize_macros(macros, tense, table)];
    Ok(parts.into_iter().filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" "))
}

fn comps(effects: &[Effect], table: &StrTable) -> String {
    effects
        .iter()
        .map(|e| format!("with {} {}", relation(e.delta), table.components[&e.component]))
        .collect::<Vec<_>>()
        .join(" and ")
}

fn causes(causes: &[SummaryCause], table: &StrTable) -> Result<String, GrammarError> {
    let parts = causes
        .iter()
        .map(|c| {
            let subject = table.nonego_subject.replace("{vehicle}", &table.vehicle(Some(c.vehicle)));
            action(subject, c.probability, &c.omega, Tense::NonEgo, table)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.join(" and "))
}

/// The sentence before simplification. "because" is left out when there
/// are no causes.
pub fn generate_raw(summary: &CausalSummary, table: &StrTable) -> Result<String, GrammarError> {
    let s = &summary.outcome;
    let ego = action(table.ego_subject.clone(), None, &s.omega, Tense::Ego, table)?;
    let out = table.outcomes[&s.outcome].replace("{vehicle}", &table.vehicle(s.collided_with));
    let cause = causes(&summary.causes, table)?;
    let because = if cause.is_empty() { String::new() } else { "because".into() };
    Ok(sentence(&[
        "if".into(),
        ego,
        "then".into(),
        "it would have".into(),
        adverb(s.probability)?.into(),
        out,
        comps(&summary.effects, table),
        because,
        cause,
    ]))
}

/// Replaces table phrases scanning left to right, longest match first.
pub fn post_process(raw: &str, table: &StrTable) -> String {
    let mut subs: Vec<(&str, &str)> = table.substitutions.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    subs.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(b.0)));
    let mut out = String::with_capacity(raw.len());
    let mut rest = raw;
    'scan: while let Some(c) = rest.chars().next() {
        for (from, to) in &subs {
            if !from.is_empty() && rest.starts_with(from) {
                out.push_str(to);
                rest = &rest[from.len()..];
                continue 'scan;
            }
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    out
}

/// Raw sentence and its simplified form.
pub fn explain_text(summary: &CausalSummary, table: &StrTable) -> Result<(String, String), GrammarError> {
    let raw = generate_raw(summary, table)?;
    let text = post_process(&raw, table);
    Ok((raw, text))
}
