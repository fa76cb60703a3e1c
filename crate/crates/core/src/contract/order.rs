use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::OrderConstraint;

/// Transitive closure of a set of order constraints, as `(before, after)` pairs.
pub type OrderClosure = BTreeSet<(String, String)>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("order constraints form a cycle through {}", .vertices.iter().cloned().collect::<Vec<_>>().join(", "))]
pub struct CycleError {
    pub vertices: BTreeSet<String>,
}

/// Compute the strict partial order generated by `constraints`, failing with
/// the vertices of every cycle if the relation is not acyclic.
pub fn order_closure(constraints: &[OrderConstraint]) -> Result<OrderClosure, CycleError> {
    let mut succ: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for c in constraints {
        succ.entry(&c.before).or_default().insert(&c.after);
        succ.entry(&c.after).or_default();
    }
    let mut closure = OrderClosure::new();
    let mut on_cycle = BTreeSet::new();
    for &start in succ.keys() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = succ[start].iter().copied().collect();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            stack.extend(succ[n].iter().copied());
        }
        if seen.contains(start) {
            on_cycle.insert(start.to_string());
        }
        for n in seen {
            closure.insert((start.to_string(), n.to_string()));
        }
    }
    if on_cycle.is_empty() {
        Ok(closure)
    } else {
        Err(CycleError { vertices: on_cycle })
    }
}

/// Predecessors of `node` in a closure.
pub(crate) fn predecessors<'a>(closure: &'a OrderClosure, node: &'a str) -> impl Iterator<Item = &'a str> + 'a {
    closure
        .iter()
        .filter(move |(_, a)| a == node)
        .map(|(b, _)| b.as_str())
}
