//! Structural validation of a model.
//!
//! Diagnostics come out in document order: attributes, then tables (columns
//! before rows), then flow nodes, then links. Each check emits its own code so
//! that a single broken invariant yields a single, predictable diagnostic.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostic::Diagnostic;
use crate::model::{
    is_identifier, ConditionCell, Domain, JoinKind, NodeKind, Operand, Operator, SplitKind, Value, XttModel,
};

/// Codes reporting dangling references. The parser rejects documents that
/// produce any of these.
pub const REFERENCE_CODES: &[&str] = &["unknown-attribute", "unknown-table-ref", "unknown-node"];

pub fn validate_model(model: &XttModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    check_attributes(model, &mut out);
    check_tables(model, &mut out);
    check_nodes(model, &mut out);
    check_links(model, &mut out);
    out
}

fn check_attributes(model: &XttModel, out: &mut Vec<Diagnostic>) {
    let mut seen = BTreeSet::new();
    for attr in &model.attributes {
        let loc = format!("attributes[{}]", attr.name);
        if !is_identifier(&attr.name) {
            out.push(Diagnostic::error(
                "invalid-identifier",
                &loc,
                format!("attribute name `{}` is not an identifier", attr.name),
            ));
        }
        if !seen.insert(attr.name.as_str()) {
            out.push(Diagnostic::error(
                "duplicate-attribute",
                &loc,
                format!("attribute `{}` declared more than once", attr.name),
            ));
        }
        match &attr.domain {
            Domain::Symbolic(symbols) => {
                if symbols.is_empty() {
                    out.push(Diagnostic::error(
                        "empty-domain",
                        &loc,
                        "symbolic domain has no symbols",
                    ));
                }
                let mut syms = BTreeSet::new();
                for s in symbols {
                    if !syms.insert(s) {
                        out.push(Diagnostic::error(
                            "duplicate-symbol",
                            &loc,
                            format!("symbol `{s}` listed more than once"),
                        ));
                    }
                }
            }
            Domain::IntRange { lo, hi } => {
                if lo > hi {
                    out.push(Diagnostic::error(
                        "invalid-range",
                        &loc,
                        format!("integer range [{lo},{hi}] is empty"),
                    ));
                }
            }
        }
    }
}

fn check_tables(model: &XttModel, out: &mut Vec<Diagnostic>) {
    let mut names = BTreeSet::new();
    for table in &model.tables {
        let loc = format!("tables[{}]", table.name);
        if !is_identifier(&table.name) {
            out.push(Diagnostic::error(
                "invalid-identifier",
                &loc,
                format!("table name `{}` is not an identifier", table.name),
            ));
        }
        if !names.insert(table.name.as_str()) {
            out.push(Diagnostic::error(
                "duplicate-table",
                &loc,
                format!("table `{}` declared more than once", table.name),
            ));
        }
        for (kind, columns) in [
            ("conditionColumns", &table.condition_columns),
            ("decisionColumns", &table.decision_columns),
        ] {
            let mut seen = BTreeSet::new();
            for col in columns {
                if model.attribute(col).is_none() {
                    out.push(Diagnostic::error(
                        "unknown-attribute",
                        format!("{loc}.{kind}[{col}]"),
                        format!("column refers to undeclared attribute `{col}`"),
                    ));
                }
                if !seen.insert(col) {
                    out.push(Diagnostic::error(
                        "duplicate-column",
                        format!("{loc}.{kind}[{col}]"),
                        format!("attribute `{col}` appears twice in {kind}"),
                    ));
                }
            }
        }
        for col in &table.condition_columns {
            if table.decision_columns.contains(col) {
                out.push(Diagnostic::error(
                    "column-overlap",
                    &loc,
                    format!("attribute `{col}` is both a condition and a decision column"),
                ));
            }
        }
        if table.decision_columns.is_empty() {
            out.push(Diagnostic::error(
                "no-decision-columns",
                &loc,
                "table has no decision column",
            ));
        }
        if table.rows.is_empty() {
            out.push(Diagnostic::error("empty-table", &loc, "table has no rows"));
        }
        for (i, row) in table.rows.iter().enumerate() {
            let rloc = format!("{loc}.rows[{}]", i + 1);
            if row.row_id != i + 1 {
                out.push(Diagnostic::error(
                    "row-id-mismatch",
                    &rloc,
                    format!("row id {} does not match its position {}", row.row_id, i + 1),
                ));
            }
            if row.conditions.len() != table.condition_columns.len()
                || row.decisions.len() != table.decision_columns.len()
            {
                out.push(Diagnostic::error(
                    "row-arity",
                    &rloc,
                    format!(
                        "row has {} conditions and {} decisions, schema has {} and {}",
                        row.conditions.len(),
                        row.decisions.len(),
                        table.condition_columns.len(),
                        table.decision_columns.len()
                    ),
                ));
            }
            for (j, cell) in row.conditions.iter().enumerate() {
                let cloc = format!("{rloc}.conditions[{}]", j + 1);
                if let Some(col) = table.condition_columns.get(j) {
                    if &cell.attribute != col {
                        out.push(Diagnostic::error(
                            "column-mismatch",
                            &cloc,
                            format!("cell attribute `{}` does not match column `{col}`", cell.attribute),
                        ));
                    }
                }
                check_condition(model, cell, &cloc, out);
            }
            for (j, cell) in row.decisions.iter().enumerate() {
                let cloc = format!("{rloc}.decisions[{}]", j + 1);
                if let Some(col) = table.decision_columns.get(j) {
                    if &cell.attribute != col {
                        out.push(Diagnostic::error(
                            "column-mismatch",
                            &cloc,
                            format!("cell attribute `{}` does not match column `{col}`", cell.attribute),
                        ));
                    }
                }
                match model.attribute(&cell.attribute) {
                    None => out.push(Diagnostic::error(
                        "unknown-attribute",
                        &cloc,
                        format!("undeclared attribute `{}`", cell.attribute),
                    )),
                    Some(attr) if !attr.domain.contains(&cell.value) => out.push(Diagnostic::error(
                        "value-out-of-domain",
                        &cloc,
                        format!("value `{}` is outside the domain of `{}`", cell.value, cell.attribute),
                    )),
                    Some(_) => {}
                }
            }
        }
    }
}

/// Checks a single condition against the declared attributes. Used for table
/// cells and link guards alike.
pub fn check_condition(model: &XttModel, cell: &ConditionCell, loc: &str, out: &mut Vec<Diagnostic>) {
    let Some(attr) = model.attribute(&cell.attribute) else {
        out.push(Diagnostic::error(
            "unknown-attribute",
            loc,
            format!("undeclared attribute `{}`", cell.attribute),
        ));
        return;
    };
    let domain = &attr.domain;
    if cell.op.is_ordering() && !domain.is_integer() {
        out.push(Diagnostic::error(
            "operator-domain-mismatch",
            loc,
            format!(
                "`{}` needs an integer domain, `{}` is symbolic",
                cell.op, cell.attribute
            ),
        ));
        return;
    }
    let out_of_domain = |v: &Value| {
        Diagnostic::error(
            "value-out-of-domain",
            loc,
            format!("value `{v}` is outside the domain of `{}`", cell.attribute),
        )
    };
    match (cell.op, &cell.operand) {
        (Operator::Any, None) => {}
        (Operator::Any, Some(_)) => {
            out.push(Diagnostic::error("unexpected-operand", loc, "`any` takes no operand"));
        }
        (_, None) => out.push(Diagnostic::error(
            "missing-operand",
            loc,
            format!("`{}` requires an operand", cell.op),
        )),
        (
            Operator::Eq | Operator::Neq | Operator::Lt | Operator::Gt | Operator::Leq | Operator::Geq,
            Some(Operand::Value(v)),
        ) => {
            if !domain.contains(v) {
                out.push(out_of_domain(v));
            }
        }
        (Operator::In | Operator::NotIn, Some(Operand::Set(values))) => {
            if values.is_empty() {
                out.push(Diagnostic::error("empty-set", loc, "value set is empty"));
            }
            for v in values.iter().filter(|v| !domain.contains(v)) {
                out.push(out_of_domain(v));
            }
        }
        (Operator::In | Operator::NotIn, Some(Operand::Interval { lo, hi })) => match domain {
            Domain::IntRange { lo: dlo, hi: dhi } => {
                if lo > hi {
                    out.push(Diagnostic::error(
                        "invalid-interval",
                        loc,
                        format!("interval [{lo},{hi}] has lo > hi"),
                    ));
                } else if lo < dlo || hi > dhi {
                    out.push(Diagnostic::error(
                        "value-out-of-domain",
                        loc,
                        format!("interval [{lo},{hi}] leaves the domain [{dlo},{dhi}]"),
                    ));
                }
            }
            Domain::Symbolic(_) => out.push(Diagnostic::error(
                "operator-domain-mismatch",
                loc,
                format!("interval operand on symbolic attribute `{}`", cell.attribute),
            )),
        },
        (op, Some(_)) => out.push(Diagnostic::error(
            "operand-shape",
            loc,
            format!("operand shape does not fit operator `{op}`"),
        )),
    }
}

fn check_nodes(model: &XttModel, out: &mut Vec<Diagnostic>) {
    let flow = &model.flow;
    let mut ids = BTreeSet::new();
    let mut starts = 0;
    let mut ends = 0;
    let mut table_refs: BTreeMap<&str, usize> = BTreeMap::new();
    for node in &flow.nodes {
        let loc = format!("flow.nodes[{}]", node.id);
        if !is_identifier(&node.id) {
            out.push(Diagnostic::error(
                "invalid-identifier",
                &loc,
                format!("node id `{}` is not an identifier", node.id),
            ));
        }
        if !ids.insert(node.id.as_str()) {
            out.push(Diagnostic::error(
                "duplicate-node",
                &loc,
                format!("node id `{}` declared more than once", node.id),
            ));
        }
        match &node.kind {
            NodeKind::Start => {
                starts += 1;
                if starts == 2 {
                    out.push(Diagnostic::error(
                        "multiple-start",
                        &loc,
                        "flow has more than one start node",
                    ));
                }
            }
            NodeKind::End => ends += 1,
            NodeKind::TableRef(table) => {
                if model.table(table).is_none() {
                    out.push(Diagnostic::error(
                        "unknown-table-ref",
                        &loc,
                        format!("node refers to undefined table `{table}`"),
                    ));
                }
                *table_refs.entry(table.as_str()).or_default() += 1;
            }
            NodeKind::Split(_) => {}
            NodeKind::Join(kind) => {
                if let JoinKind::NOfM(n) = kind {
                    let in_degree = flow.in_degree(&node.id);
                    if *n == 0 {
                        out.push(Diagnostic::error("invalid-n", &loc, "n-of-m join needs n >= 1"));
                    } else if *n as usize > in_degree {
                        out.push(Diagnostic::error(
                            "n-exceeds-in-degree",
                            &loc,
                            format!("n = {n} exceeds the join's in-degree {in_degree}"),
                        ));
                    }
                }
            }
        }
        if node.kind != NodeKind::End && flow.out_degree(&node.id) == 0 {
            out.push(Diagnostic::error(
                "dangling-node",
                &loc,
                format!("`{}` node has no outgoing link", node.kind.name()),
            ));
        }
    }
    if starts == 0 {
        out.push(Diagnostic::error(
            "missing-start",
            "flow.nodes",
            "flow has no start node",
        ));
    }
    if ends == 0 {
        out.push(Diagnostic::error("missing-end", "flow.nodes", "flow has no end node"));
    }
    for table in &model.tables {
        match table_refs.get(table.name.as_str()).copied().unwrap_or(0) {
            0 => out.push(Diagnostic::error(
                "unreferenced-table",
                format!("tables[{}]", table.name),
                "no flow node refers to this table",
            )),
            1 => {}
            k => out.push(Diagnostic::error(
                "table-multiply-referenced",
                format!("tables[{}]", table.name),
                format!("{k} flow nodes refer to this table"),
            )),
        }
    }
}

fn check_links(model: &XttModel, out: &mut Vec<Diagnostic>) {
    let flow = &model.flow;
    let mut defaults: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, link) in flow.links.iter().enumerate() {
        let loc = format!("flow.links[{}]", i + 1);
        let from = flow.node(&link.from);
        let to = flow.node(&link.to);
        for (end, node) in [(&link.from, from), (&link.to, to)] {
            if node.is_none() {
                out.push(Diagnostic::error(
                    "unknown-node",
                    &loc,
                    format!("link endpoint `{end}` is not a node"),
                ));
            }
        }
        if let Some(node) = to {
            if node.kind == NodeKind::Start {
                out.push(Diagnostic::error("start-incoming", &loc, "link enters the start node"));
            }
        }
        if let Some(node) = from {
            if node.kind == NodeKind::End {
                out.push(Diagnostic::error("end-outgoing", &loc, "link leaves an end node"));
            }
        }
        if let Some(row) = link.target_row {
            match to.and_then(|n| n.table_name()) {
                None if to.is_some() => out.push(Diagnostic::error(
                    "target-row-on-non-table",
                    &loc,
                    "targetRow is only allowed on links into a table",
                )),
                None => {}
                Some(table) => {
                    let rows = model.table(table).map_or(0, |t| t.rows.len());
                    if row == 0 || row > rows {
                        out.push(Diagnostic::error(
                            "target-row-out-of-range",
                            &loc,
                            format!("targetRow {row} is not a row of `{table}` (1..={rows})"),
                        ));
                    }
                }
            }
        }
        let from_xor = matches!(from.map(|n| &n.kind), Some(NodeKind::Split(SplitKind::Xor)));
        if let Some(guard) = &link.guard {
            if !from_xor && from.is_some() {
                out.push(Diagnostic::error(
                    "guard-on-non-xor",
                    &loc,
                    "guards are only allowed on links leaving an XOR split",
                ));
            }
            for (j, cell) in guard.iter().enumerate() {
                check_condition(model, cell, &format!("{loc}.guard[{}]", j + 1), out);
            }
        }
        if link.is_default {
            if !from_xor && from.is_some() {
                out.push(Diagnostic::error(
                    "default-on-non-xor",
                    &loc,
                    "only links leaving an XOR split can be default branches",
                ));
            } else {
                let n = defaults.entry(link.from.as_str()).or_default();
                *n += 1;
                if *n == 2 {
                    out.push(Diagnostic::error(
                        "multiple-default",
                        &loc,
                        format!("XOR split `{}` has more than one default branch", link.from),
                    ));
                }
            }
        }
    }
}
