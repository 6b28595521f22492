//! Search statistics keyed by macro-action prefix.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::maneuver::MacroAction;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChildStats {
    pub visits: u64,
    /// Mean return of the simulations that passed through this child.
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Node {
    /// Selections made at this node; equals the sum of child visits.
    pub visits: u64,
    /// Simulations that ended on arrival at this node.
    pub terminal_visits: u64,
    pub children: BTreeMap<MacroAction, ChildStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NodeEntry {
    prefix: Vec<MacroAction>,
    #[serde(flatten)]
    node: Node,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "Vec<NodeEntry>", from = "Vec<NodeEntry>")]
pub struct SearchTree {
    nodes: BTreeMap<Vec<MacroAction>, Node>,
}

impl From<SearchTree> for Vec<NodeEntry> {
    fn from(t: SearchTree) -> Self {
        t.nodes.into_iter().map(|(prefix, node)| NodeEntry { prefix, node }).collect()
    }
}

impl From<Vec<NodeEntry>> for SearchTree {
    fn from(v: Vec<NodeEntry>) -> Self {
        SearchTree { nodes: v.into_iter().map(|e| (e.prefix, e.node)).collect() }
    }
}

impl SearchTree {
    pub fn node(&self, prefix: &[MacroAction]) -> Option<&Node> {
        self.nodes.get(prefix)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&Vec<MacroAction>, &Node)> {
        self.nodes.iter()
    }

    pub fn root(&self) -> Option<&Node> {
        self.node(&[])
    }

    /// Adds one simulation's return along `path`; `path` lists the actions
    /// taken from the root in order.
    pub fn backpropagate(&mut self, path: &[MacroAction], value: f64) {
        for d in 0..path.len() {
            let node = self.nodes.entry(path[..d].to_vec()).or_default();
            node.visits += 1;
            let child = node.children.entry(path[d]).or_default();
            child.visits += 1;
            child.q += (value - child.q) / child.visits as f64;
        }
        self.nodes.entry(path.to_vec()).or_default().terminal_visits += 1;
    }

    /// Best action at `prefix`: most visits, then highest Q, then the
    /// smallest action.
    pub fn best_child(&self, prefix: &[MacroAction]) -> Option<MacroAction> {
        let node = self.node(prefix)?;
        node.children
            .iter()
            .max_by(|(a, x), (b, y)| {
                x.visits.cmp(&y.visits).then_with(|| x.q.partial_cmp(&y.q).unwrap_or(Ordering::Equal)).then_with(|| b.cmp(a))
            })
            .map(|(a, _)| *a)
    }

    /// Greedy root-to-leaf action sequence.
    pub fn extract_plan(&self) -> Vec<MacroAction> {
        let mut plan = Vec::new();
        while let Some(a) = self.best_child(&plan) {
            plan.push(a);
        }
        plan
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Turn;

    #[test]
    fn visits_and_means_accumulate() {
        let mut t = SearchTree::default();
        t.backpropagate(&[MacroAction::Continue], -10.0);
        t.backpropagate(&[MacroAction::Continue], -20.0);
        t.backpropagate(&[MacroAction::ChangeLeft, MacroAction::Continue], -5.0);
        let root = t.root().unwrap();
        assert_eq!(root.visits, 3);
        assert_eq!(root.children[&MacroAction::Continue].visits, 2);
        assert_eq!(root.children[&MacroAction::Continue].q, -15.0);
        assert_eq!(t.node(&[MacroAction::ChangeLeft]).unwrap().visits, 1);
        assert_eq!(t.node(&[MacroAction::Continue]).unwrap().terminal_visits, 2);
    }

    #[test]
    fn plan_follows_visits_then_q_then_order() {
        let mut t = SearchTree::default();
        t.backpropagate(&[MacroAction::Stop], -1.0);
        t.backpropagate(&[MacroAction::Exit(Turn::Right)], -1.0);
        t.backpropagate(&[MacroAction::Continue], -2.0);
        assert_eq!(t.extract_plan(), [MacroAction::Exit(Turn::Right)]);
        t.backpropagate(&[MacroAction::Continue], -2.0);
        assert_eq!(t.extract_plan(), [MacroAction::Continue]);
    }

    #[test]
    fn serde_round_trip() {
        let mut t = SearchTree::default();
        t.backpropagate(&[MacroAction::ChangeLeft, MacroAction::Continue], -3.5);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<SearchTree>(&json).unwrap(), t);
    }
}
