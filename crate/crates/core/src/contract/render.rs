use std::fmt::Write;

use super::{EntryKeyword, EntryOrderKeyword, ExternalOrderKeyword, ISContract, OrderConstraint};
use crate::sig::FunSignature;

/// Render a contract back to `.is` text using the section keywords it was parsed with.
pub fn render_contract(c: &ISContract) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "module {} {{", c.module_name);
    let entry_kw = match c.spelling.entry {
        EntryKeyword::EntryPoints => "entry_points",
        EntryKeyword::EntryFunctions => "entry_functions",
    };
    let _ = writeln!(s, "  {entry_kw}: {{ {} }}", decls(&c.entry_points));
    let order_kw = match c.spelling.entry_order {
        EntryOrderKeyword::EntryOrder => "entry_order",
        EntryOrderKeyword::CamelCase => "EntryOrder",
    };
    let _ = writeln!(s, "  {order_kw}: {{ {} }}", constraints(&c.entry_order));
    s.push_str("  external_calls: {\n");
    for (i, g) in c.external_groups.iter().enumerate() {
        let sep = if i + 1 < c.external_groups.len() { "," } else { "" };
        let _ = writeln!(s, "    {}: {{ {} }}{sep}", g.group_id, decls(&g.decls));
    }
    s.push_str("  }\n");
    let ext_kw = match c.spelling.external_order {
        ExternalOrderKeyword::ExternalCallOrder => "external_call_order",
        ExternalOrderKeyword::ExternalOrder => "external_order",
    };
    let _ = writeln!(s, "  {ext_kw}: {{ {} }}", constraints(&c.external_order));
    s.push_str("}\n");
    s
}

fn decls(d: &[FunSignature]) -> String {
    d.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", ")
}

fn constraints(o: &[OrderConstraint]) -> String {
    o.iter()
        .map(|c| format!("{} < {}", c.before, c.after))
        .collect::<Vec<_>>()
        .join(", ")
}
