use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{order_closure, ISContract, OrderConstraint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IssueKind {
    DuplicateName,
    EmptyGroup,
    UnknownEntryPoint,
    UnknownExternal,
    Cycle,
}

/// A well-formedness problem in a parsed contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContractIssue {
    pub kind: IssueKind,
    pub subject: String,
    pub message: String,
}

impl fmt::Display for ContractIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn issue(kind: IssueKind, subject: &str, message: String) -> ContractIssue {
    ContractIssue { kind, subject: subject.to_string(), message }
}

pub fn validate_contract(c: &ISContract) -> Vec<ContractIssue> {
    let mut out = Vec::new();

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for name in c.entry_names().chain(c.external_names()) {
        *counts.entry(name).or_default() += 1;
    }
    for (name, n) in &counts {
        if *n > 1 {
            out.push(issue(
                IssueKind::DuplicateName,
                name,
                format!("function {name} is declared {n} times in the contract"),
            ));
        }
    }

    for g in &c.external_groups {
        if g.decls.is_empty() {
            out.push(issue(
                IssueKind::EmptyGroup,
                &g.group_id,
                format!("external group {} declares no functions", g.group_id),
            ));
        }
    }

    let entries: BTreeSet<&str> = c.entry_names().collect();
    check_refs(&c.entry_order, &entries, IssueKind::UnknownEntryPoint, "entry point", &mut out);
    let externals: BTreeSet<&str> = c.external_names().collect();
    check_refs(&c.external_order, &externals, IssueKind::UnknownExternal, "external function", &mut out);

    for (label, order) in [("entry order", &c.entry_order), ("external call order", &c.external_order)] {
        if let Err(e) = order_closure(order) {
            let names: Vec<_> = e.vertices.iter().cloned().collect();
            out.push(issue(
                IssueKind::Cycle,
                &names.join(","),
                format!("{label} has a cycle through {{{}}}", names.join(", ")),
            ));
        }
    }
    out
}

fn check_refs(
    order: &[OrderConstraint],
    known: &BTreeSet<&str>,
    kind: IssueKind,
    what: &str,
    out: &mut Vec<ContractIssue>,
) {
    let mut reported = BTreeSet::new();
    for c in order {
        for id in [&c.before, &c.after] {
            if !known.contains(id.as_str()) && reported.insert(id.clone()) {
                out.push(issue(kind, id, format!("unknown {what} {id}")));
            }
        }
    }
}
