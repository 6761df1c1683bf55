use serde::{Deserialize, Serialize};

use super::Derivation;
use crate::signature::print_inequality;

/// One line of the JSONL trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub node_id: usize,
    pub parent_id: Option<usize>,
    pub rule_id: String,
    pub principal_inequality: String,
    pub system: Vec<String>,
    pub side_condition_flags: Vec<bool>,
}

pub fn trace_records(d: &Derivation) -> Vec<TraceRecord> {
    d.nodes
        .iter()
        .map(|n| TraceRecord {
            node_id: n.id,
            parent_id: n.parent,
            rule_id: n.rule.as_ref().map_or("Input".into(), |r| r.rule.to_string()),
            principal_inequality: n.principal.clone(),
            system: n.stage.ineqs().iter().map(print_inequality).collect(),
            side_condition_flags: n.stage.flags(),
        })
        .collect()
}

pub fn trace_jsonl(d: &Derivation) -> String {
    let mut s = String::new();
    for r in trace_records(d) {
        s.push_str(&serde_json::to_string(&r).expect("records serialise"));
        s.push('\n');
    }
    s
}
