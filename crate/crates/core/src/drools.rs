//! Translation of a model into the three Drools-style artifacts: a ruleflow
//! XML file, a decision-table CSV and a `Workspace` class source.
//!
//! Two structural gaps are bridged here. Ruleset nodes accept a single
//! incoming and a single outgoing connection, so [`normalize_flow`] wraps
//! multi-link tables with AND joins/splits. Decision-table columns carry one
//! operator in their header, so [`plan_decomposition`] splits each condition
//! column into one output column per operator in use.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::diagnostic::{has_errors, Diagnostic};
use crate::model::{
    Domain, FlowGraph, FlowNode, JoinKind, Link, NodeKind, Operand, Operator, SplitKind, Value, XttModel, XttTable,
};
use crate::validate::validate_model;
use crate::xml::{escape, id_from};

/// A flow where every ruleset node has at most one incoming and one outgoing
/// link. `provenance` maps each inserted node id to the table node it wraps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedFlow {
    pub flow: FlowGraph,
    pub provenance: BTreeMap<String, String>,
}

impl NormalizedFlow {
    /// The model with its flow replaced by the normalized one.
    pub fn apply_to(&self, model: &XttModel) -> XttModel {
        XttModel {
            flow: self.flow.clone(),
            ..model.clone()
        }
    }
}

pub fn normalize_flow(model: &XttModel) -> Result<NormalizedFlow, Vec<Diagnostic>> {
    let row_links: Vec<Diagnostic> = model
        .flow
        .links
        .iter()
        .enumerate()
        .filter_map(|(i, l)| {
            l.target_row.map(|row| {
                Diagnostic::error(
                    "row-link-unsupported",
                    format!("flow.links[{}]", i + 1),
                    format!(
                        "link {} -> {} is directed to row {row}; ruleflows cannot target rows",
                        l.from, l.to
                    ),
                )
            })
        })
        .collect();
    if !row_links.is_empty() {
        return Err(row_links);
    }

    let mut used: BTreeSet<String> = model.flow.nodes.iter().map(|n| n.id.clone()).collect();
    let mut fresh = |base: String| {
        let mut id = base.clone();
        let mut k = 2;
        while used.contains(&id) {
            id = format!("{base}_{k}");
            k += 1;
        }
        used.insert(id.clone());
        id
    };

    let mut nodes = Vec::with_capacity(model.flow.nodes.len());
    let mut links = model.flow.links.clone();
    let mut provenance = BTreeMap::new();
    for node in &model.flow.nodes {
        let NodeKind::TableRef(table) = &node.kind else {
            nodes.push(node.clone());
            continue;
        };
        let incoming = model.flow.incoming(&node.id);
        let outgoing = model.flow.outgoing(&node.id);
        if incoming.len() > 1 {
            let join = fresh(format!("{table}_join"));
            for &i in &incoming {
                links[i].to = join.clone();
            }
            links.push(Link::new(join.clone(), node.id.clone()));
            nodes.push(FlowNode::new(join.clone(), NodeKind::Join(JoinKind::And)));
            provenance.insert(join, node.id.clone());
        }
        nodes.push(node.clone());
        if outgoing.len() > 1 {
            let split = fresh(format!("{table}_split"));
            for &i in &outgoing {
                links[i].from = split.clone();
            }
            links.push(Link::new(node.id.clone(), split.clone()));
            nodes.push(FlowNode::new(split.clone(), NodeKind::Split(SplitKind::And)));
            provenance.insert(split, node.id.clone());
        }
    }
    Ok(NormalizedFlow {
        flow: FlowGraph { nodes, links },
        provenance,
    })
}

/// Operator carried by a decision-table column header. Declaration order is
/// the column order within one source column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OutputOperator {
    EqTemplate,
    Gt,
    Lt,
    Geq,
    Leq,
}

impl OutputOperator {
    pub fn symbol(self) -> &'static str {
        match self {
            OutputOperator::EqTemplate => "==",
            OutputOperator::Gt => ">",
            OutputOperator::Lt => "<",
            OutputOperator::Geq => ">=",
            OutputOperator::Leq => "<=",
        }
    }
}

impl fmt::Display for OutputOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputOperator::EqTemplate => "eq-template",
            OutputOperator::Gt => "gt",
            OutputOperator::Lt => "lt",
            OutputOperator::Geq => "geq",
            OutputOperator::Leq => "leq",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputColumn {
    pub attribute: String,
    pub output_operator: OutputOperator,
    pub source_operators: BTreeSet<Operator>,
}

/// Decomposed condition columns of one table, plus the cell each row puts in
/// each column (`None` renders as an empty cell, i.e. no constraint).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnPlan {
    pub table: String,
    pub columns: Vec<OutputColumn>,
    pub cells: Vec<Vec<Option<Value>>>,
}

impl ColumnPlan {
    pub fn column_index(&self, attribute: &str, op: OutputOperator) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.attribute == attribute && c.output_operator == op)
    }
}

fn unsupported(op: Operator, operand: Option<&Operand>) -> Option<&'static str> {
    match (op, operand) {
        (Operator::Neq, _) => Some("neq-unsupported"),
        (Operator::NotIn, _) => Some("notin-unsupported"),
        (Operator::In, Some(Operand::Set(_))) => Some("in-set-unsupported"),
        _ => None,
    }
}

/// Output columns claimed by one condition cell, with their parameters.
fn claims(op: Operator, operand: Option<&Operand>) -> Vec<(OutputOperator, Value)> {
    match (op, operand) {
        (Operator::Eq, Some(Operand::Value(v))) => vec![(OutputOperator::EqTemplate, v.clone())],
        (Operator::Gt, Some(Operand::Value(v))) => vec![(OutputOperator::Gt, v.clone())],
        (Operator::Lt, Some(Operand::Value(v))) => vec![(OutputOperator::Lt, v.clone())],
        (Operator::Geq, Some(Operand::Value(v))) => vec![(OutputOperator::Geq, v.clone())],
        (Operator::Leq, Some(Operand::Value(v))) => vec![(OutputOperator::Leq, v.clone())],
        (Operator::In, Some(Operand::Interval { lo, hi })) => {
            vec![
                (OutputOperator::Geq, Value::Int(*lo)),
                (OutputOperator::Leq, Value::Int(*hi)),
            ]
        }
        _ => vec![],
    }
}

pub fn plan_decomposition(table: &XttTable) -> Result<ColumnPlan, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    for row in &table.rows {
        for (j, cell) in row.conditions.iter().enumerate() {
            if let Some(code) = unsupported(cell.op, cell.operand.as_ref()) {
                errors.push(Diagnostic::error(
                    code,
                    format!("tables[{}].rows[{}].conditions[{}]", table.name, row.row_id, j + 1),
                    format!("`{}` has no decision-table column form", cell.op),
                ));
            }
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let mut columns = Vec::new();
    for (position, attribute) in table.condition_columns.iter().enumerate() {
        let mut used: BTreeMap<OutputOperator, BTreeSet<Operator>> = BTreeMap::new();
        let mut any_seen = false;
        for row in &table.rows {
            let Some(cell) = row.conditions.get(position) else {
                continue;
            };
            if cell.op == Operator::Any {
                any_seen = true;
            }
            for (out, _) in claims(cell.op, cell.operand.as_ref()) {
                used.entry(out).or_default().insert(cell.op);
            }
        }
        // ANY shares the eq-template column; an all-ANY column still gets one.
        if any_seen {
            if let Some(ops) = used.get_mut(&OutputOperator::EqTemplate) {
                ops.insert(Operator::Any);
            } else if used.is_empty() {
                used.insert(OutputOperator::EqTemplate, BTreeSet::from([Operator::Any]));
            }
        }
        columns.extend(
            used.into_iter()
                .map(|(output_operator, source_operators)| OutputColumn {
                    attribute: attribute.clone(),
                    output_operator,
                    source_operators,
                }),
        );
    }

    let mut plan = ColumnPlan {
        table: table.name.clone(),
        columns,
        cells: Vec::new(),
    };
    for row in &table.rows {
        let mut cells = vec![None; plan.columns.len()];
        for cell in &row.conditions {
            for (out, value) in claims(cell.op, cell.operand.as_ref()) {
                let idx = plan
                    .column_index(&cell.attribute, out)
                    .expect("column planned for every claim");
                cells[idx] = Some(value);
            }
        }
        plan.cells.push(cells);
    }
    Ok(plan)
}

fn capitalize(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn is_symbolic(model: &XttModel, attribute: &str) -> bool {
    matches!(model.attribute(attribute).map(|a| &a.domain), Some(Domain::Symbolic(_)))
}

/// Decision-table CSV: one block per table, blocks separated by a blank line.
pub fn emit_decision_table_csv(model: &XttModel, plans: &[ColumnPlan]) -> Result<String, Vec<Diagnostic>> {
    if model.tables.is_empty() {
        return Err(vec![Diagnostic::error(
            "no-tables",
            "tables",
            "model has no tables to emit",
        )]);
    }
    let mut blocks = Vec::with_capacity(model.tables.len());
    for table in &model.tables {
        let Some(plan) = plans.iter().find(|p| p.table == table.name) else {
            return Err(vec![Diagnostic::error(
                "missing-plan",
                format!("tables[{}]", table.name),
                "no column plan supplied for this table",
            )]);
        };
        let width = plan.columns.len() + table.decision_columns.len();
        let mut lines = vec![
            format!("RuleSet,{}", model.name),
            "Import,".to_string(),
            String::new(),
            format!("RuleTable {}", table.name),
        ];
        let kinds: Vec<&str> = plan
            .columns
            .iter()
            .map(|_| "CONDITION")
            .chain(table.decision_columns.iter().map(|_| "ACTION"))
            .collect();
        lines.push(kinds.join(","));
        lines.push(vec!["Workspace"; width].join(","));
        let templates: Vec<String> = plan
            .columns
            .iter()
            .map(|c| {
                let quoted = c.output_operator == OutputOperator::EqTemplate && is_symbolic(model, &c.attribute);
                let param = if quoted { "\"$param\"" } else { "$param" };
                format!("{} {} {param}", c.attribute, c.output_operator.symbol())
            })
            .chain(table.decision_columns.iter().map(|attr| {
                let param = if is_symbolic(model, attr) {
                    "\"$param\""
                } else {
                    "$param"
                };
                format!("set{}({param})", capitalize(attr))
            }))
            .collect();
        lines.push(templates.join(","));
        for (row, cells) in table.rows.iter().zip(&plan.cells) {
            let data: Vec<String> = cells
                .iter()
                .map(|c| c.as_ref().map(Value::to_string).unwrap_or_default())
                .chain(row.decisions.iter().map(|d| d.value.to_string()))
                .collect();
            lines.push(data.join(","));
        }
        blocks.push(lines.iter().map(|l| format!("{l}\n")).collect::<String>());
    }
    Ok(blocks.join("\n"))
}

/// Ruleflow XML listing the flow's nodes and connections.
pub fn emit_ruleflow_xml(flow: &NormalizedFlow, model_name: &str) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<process id=\"{}\" name=\"{}\">\n  <nodes>\n",
        escape(&id_from(model_name)),
        escape(model_name)
    ));
    for node in &flow.flow.nodes {
        let id = escape(&node.id);
        let line = match &node.kind {
            NodeKind::Start => format!("<start id=\"{id}\"/>"),
            NodeKind::End => format!("<end id=\"{id}\"/>"),
            NodeKind::TableRef(t) => {
                let t = escape(t);
                format!("<ruleSet id=\"{id}\" name=\"{t}\" ruleFlowGroup=\"{t}\"/>")
            }
            NodeKind::Split(kind) => format!("<split id=\"{id}\" type=\"{}\"/>", kind.name()),
            NodeKind::Join(JoinKind::NOfM(n)) => format!("<join id=\"{id}\" type=\"N_OF_M\" n=\"{n}\"/>"),
            NodeKind::Join(kind) => format!("<join id=\"{id}\" type=\"{}\"/>", kind.name()),
        };
        out.push_str("    ");
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("  </nodes>\n  <connections>\n");
    for link in &flow.flow.links {
        out.push_str(&format!(
            "    <connection from=\"{}\" to=\"{}\"/>\n",
            escape(&link.from),
            escape(&link.to)
        ));
    }
    out.push_str("  </connections>\n</process>\n");
    out
}

const JAVA_RESERVED: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "false",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "null",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "true",
    "try",
    "void",
    "volatile",
    "while",
    "var",
    "yield",
    "record",
];

/// `Workspace` class: one private field per attribute with a getter/setter
/// pair, nothing else.
pub fn emit_workspace_source(model: &XttModel) -> Result<String, Vec<Diagnostic>> {
    if model.attributes.is_empty() {
        return Err(vec![Diagnostic::error(
            "no-attributes",
            "attributes",
            "model has no attributes",
        )]);
    }
    let mut errors = Vec::new();
    let mut accessors: BTreeMap<String, &str> = BTreeMap::new();
    for attr in &model.attributes {
        let loc = format!("attributes[{}]", attr.name);
        if JAVA_RESERVED.contains(&attr.name.as_str()) {
            errors.push(Diagnostic::error(
                "reserved-word",
                &loc,
                format!("`{}` is a reserved word in the generated class", attr.name),
            ));
        }
        let cap = capitalize(&attr.name);
        if let Some(other) = accessors.insert(cap.clone(), &attr.name) {
            errors.push(Diagnostic::error(
                "accessor-collision",
                &loc,
                format!("`{}` and `{other}` both produce get{cap}/set{cap}", attr.name),
            ));
        }
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let ty = |domain: &Domain| match domain {
        Domain::Symbolic(_) => "String",
        Domain::IntRange { .. } => "int",
    };
    let mut out = String::from("public class Workspace {\n\n");
    for attr in &model.attributes {
        out.push_str(&format!("    private {} {};\n", ty(&attr.domain), attr.name));
    }
    for attr in &model.attributes {
        let (t, name, cap) = (ty(&attr.domain), &attr.name, capitalize(&attr.name));
        out.push_str(&format!(
            "\n    public {t} get{cap}() {{\n        return {name};\n    }}\n\n    public void set{cap}({t} {name}) {{\n        this.{name} = {name};\n    }}\n"
        ));
    }
    out.push_str("}\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroolsFiles {
    pub ruleflow_xml: String,
    pub decision_table_csv: String,
    pub workspace_source: String,
}

/// Export result. `files` is present iff `diagnostics` holds no error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DroolsBundle {
    pub model_name: String,
    pub files: Option<DroolsFiles>,
    pub diagnostics: Vec<Diagnostic>,
}

impl DroolsBundle {
    /// File names and contents, in emission order.
    pub fn named_files(&self) -> Vec<(String, &str)> {
        let Some(f) = &self.files else { return Vec::new() };
        vec![
            (format!("{}.rf.xml", self.model_name), f.ruleflow_xml.as_str()),
            (format!("{}.dtable.csv", self.model_name), f.decision_table_csv.as_str()),
            ("Workspace.java".to_string(), f.workspace_source.as_str()),
        ]
    }

    /// Writes the three files into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        self.named_files()
            .into_iter()
            .map(|(name, text)| {
                let path = dir.join(name);
                fs::write(&path, text)?;
                Ok(path)
            })
            .collect()
    }
}

pub fn export_drools(model: &XttModel) -> DroolsBundle {
    let mut diagnostics: Vec<Diagnostic> = validate_model(model);
    let bundle = |diagnostics: Vec<Diagnostic>, files| DroolsBundle {
        model_name: model.name.clone(),
        files,
        diagnostics,
    };
    if has_errors(&diagnostics) {
        return bundle(diagnostics, None);
    }

    let flow = normalize_flow(model).map_err(|e| diagnostics.extend(e)).ok();
    let mut plans = Vec::new();
    for table in &model.tables {
        match plan_decomposition(table) {
            Ok(plan) => plans.push(plan),
            Err(e) => diagnostics.extend(e),
        }
    }
    let csv = if has_errors(&diagnostics) {
        None
    } else {
        emit_decision_table_csv(model, &plans)
            .map_err(|e| diagnostics.extend(e))
            .ok()
    };
    let workspace = emit_workspace_source(model).map_err(|e| diagnostics.extend(e)).ok();

    match (flow, csv, workspace) {
        (Some(flow), Some(csv), Some(workspace)) if !has_errors(&diagnostics) => {
            let files = DroolsFiles {
                ruleflow_xml: emit_ruleflow_xml(&flow, &model.name),
                decision_table_csv: csv,
                workspace_source: workspace,
            };
            bundle(diagnostics, Some(files))
        }
        _ => bundle(diagnostics, None),
    }
}
