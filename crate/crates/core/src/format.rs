//! The canonical JSON model document.
//!
//! ```json
//! {
//!   "name": "thermostat",
//!   "attributes": [{"name": "hour", "domain": {"kind": "integer-range", "lo": 0, "hi": 23}}],
//!   "tables": [{"name": "...", "conditionColumns": [...], "decisionColumns": [...],
//!               "matchPolicy": "all-hit", "rows": [{"conditions": [...], "decisions": [...]}]}],
//!   "flow": {"nodes": [{"id": "start", "kind": "start"}], "links": [{"from": "a", "to": "b"}]}
//! }
//! ```
//!
//! Operands are a scalar (`"workday"`, `17`), a list (value set) or an
//! object `{"lo": 9, "hi": 17}` (closed interval). Symbols are JSON strings,
//! integers are JSON numbers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::{has_errors, Diagnostic};
use crate::model::{
    AttributeDef, ConditionCell, DecisionCell, Domain, FlowGraph, FlowNode, JoinKind, Link, MatchPolicy, NodeKind,
    Operand, Operator, RuleRow, SplitKind, Value, XttModel, XttTable,
};
use crate::validate::{validate_model, REFERENCE_CODES};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("empty model")]
    Empty,
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid model: {}", summarize(.0))]
    Invalid(Vec<Diagnostic>),
}

impl ParseError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            ParseError::Invalid(d) => d,
            _ => &[],
        }
    }
}

#[derive(Debug, Error)]
#[error("refusing to serialize an invalid model: {}", summarize(.0))]
pub struct SerializeError(pub Vec<Diagnostic>);

fn summarize(diagnostics: &[Diagnostic]) -> String {
    diagnostics
        .iter()
        .map(|d| d.code.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    name: String,
    attributes: Vec<RawAttribute>,
    tables: Vec<RawTable>,
    flow: RawFlow,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttribute {
    name: String,
    domain: RawDomain,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum RawDomain {
    #[serde(rename = "symbolic")]
    Symbolic { symbols: Vec<String> },
    #[serde(rename = "integer-range")]
    IntRange { lo: i64, hi: i64 },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawTable {
    name: String,
    condition_columns: Vec<String>,
    decision_columns: Vec<String>,
    #[serde(default = "default_policy")]
    match_policy: String,
    rows: Vec<RawRow>,
}

fn default_policy() -> String {
    MatchPolicy::default().name().to_string()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRow {
    conditions: Vec<RawCondition>,
    decisions: Vec<RawDecision>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCondition {
    attribute: String,
    op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    operand: Option<RawOperand>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDecision {
    attribute: String,
    value: RawScalar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RawScalar {
    Int(i64),
    Sym(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawOperand {
    Scalar(RawScalar),
    Set(Vec<RawScalar>),
    Interval(RawInterval),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInterval {
    lo: i64,
    hi: i64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    nodes: Vec<RawNode>,
    links: Vec<RawLink>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawNode {
    id: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    table_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    join_kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct RawLink {
    from: String,
    to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target_row: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    guard: Option<Vec<RawCondition>>,
    #[serde(default, skip_serializing_if = "is_false")]
    is_default: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl From<RawScalar> for Value {
    fn from(raw: RawScalar) -> Self {
        match raw {
            RawScalar::Int(i) => Value::Int(i),
            RawScalar::Sym(s) => Value::Sym(s),
        }
    }
}

impl From<&Value> for RawScalar {
    fn from(v: &Value) -> Self {
        match v {
            Value::Int(i) => RawScalar::Int(*i),
            Value::Sym(s) => RawScalar::Sym(s.clone()),
        }
    }
}

/// Parses a model document. Syntax problems are reported with their
/// position; dangling references (attributes, tables, nodes) fail the parse
/// with the full diagnostic list. Other structural defects are left for
/// [`validate_model`].
pub fn parse_model(document: &str) -> Result<XttModel, ParseError> {
    if document.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let raw: RawModel = serde_json::from_str(document).map_err(|e| ParseError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut malformed = Vec::new();
    let model = lower(raw, &mut malformed);
    if !malformed.is_empty() {
        return Err(ParseError::Invalid(malformed));
    }
    let references: Vec<Diagnostic> = validate_model(&model)
        .into_iter()
        .filter(|d| REFERENCE_CODES.contains(&d.code.as_str()))
        .collect();
    if references.is_empty() {
        Ok(model)
    } else {
        Err(ParseError::Invalid(references))
    }
}

/// Serializes a valid model to its canonical, byte-stable text.
pub fn serialize_model(model: &XttModel) -> Result<String, SerializeError> {
    let diagnostics = validate_model(model);
    if has_errors(&diagnostics) {
        return Err(SerializeError(
            diagnostics.into_iter().filter(Diagnostic::is_error).collect(),
        ));
    }
    let mut text = serde_json::to_string_pretty(&raise(model)).expect("model documents always serialize");
    text.push('\n');
    Ok(text)
}

fn lower(raw: RawModel, malformed: &mut Vec<Diagnostic>) -> XttModel {
    let attributes = raw
        .attributes
        .into_iter()
        .map(|a| AttributeDef {
            name: a.name,
            domain: match a.domain {
                RawDomain::Symbolic { symbols } => Domain::Symbolic(symbols),
                RawDomain::IntRange { lo, hi } => Domain::IntRange { lo, hi },
            },
        })
        .collect();

    let tables = raw
        .tables
        .into_iter()
        .map(|t| {
            let loc = format!("tables[{}]", t.name);
            let match_policy = MatchPolicy::from_name(&t.match_policy).unwrap_or_else(|| {
                malformed.push(Diagnostic::error(
                    "unknown-match-policy",
                    &loc,
                    format!("`{}` is not one of first-hit, all-hit", t.match_policy),
                ));
                MatchPolicy::default()
            });
            let rows = t
                .rows
                .into_iter()
                .enumerate()
                .map(|(i, r)| {
                    let rloc = format!("{loc}.rows[{}]", i + 1);
                    RuleRow {
                        row_id: i + 1,
                        conditions: r
                            .conditions
                            .into_iter()
                            .enumerate()
                            .map(|(j, c)| lower_condition(c, &format!("{rloc}.conditions[{}]", j + 1), malformed))
                            .collect(),
                        decisions: r
                            .decisions
                            .into_iter()
                            .map(|d| DecisionCell {
                                attribute: d.attribute,
                                value: d.value.into(),
                            })
                            .collect(),
                    }
                })
                .collect();
            XttTable {
                name: t.name,
                condition_columns: t.condition_columns,
                decision_columns: t.decision_columns,
                rows,
                match_policy,
            }
        })
        .collect();

    let nodes = raw
        .flow
        .nodes
        .into_iter()
        .filter_map(|n| lower_node(n, malformed))
        .collect();
    let links = raw
        .flow
        .links
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            let loc = format!("flow.links[{}]", i + 1);
            Link {
                from: l.from,
                to: l.to,
                target_row: l.target_row,
                guard: l.guard.map(|g| {
                    g.into_iter()
                        .enumerate()
                        .map(|(j, c)| lower_condition(c, &format!("{loc}.guard[{}]", j + 1), malformed))
                        .collect()
                }),
                is_default: l.is_default,
            }
        })
        .collect();

    XttModel {
        name: raw.name,
        attributes,
        tables,
        flow: FlowGraph { nodes, links },
    }
}

fn lower_condition(raw: RawCondition, loc: &str, malformed: &mut Vec<Diagnostic>) -> ConditionCell {
    let op = Operator::from_name(&raw.op).unwrap_or_else(|| {
        malformed.push(Diagnostic::error(
            "unknown-operator",
            loc,
            format!("`{}` is not one of eq, neq, lt, gt, leq, geq, in, notin, any", raw.op),
        ));
        Operator::Any
    });
    let operand = raw.operand.map(|o| match o {
        RawOperand::Scalar(s) => Operand::Value(s.into()),
        RawOperand::Set(values) => Operand::Set(values.into_iter().map(Value::from).collect()),
        RawOperand::Interval(RawInterval { lo, hi }) => Operand::Interval { lo, hi },
    });
    ConditionCell {
        attribute: raw.attribute,
        op,
        operand,
    }
}

fn lower_node(raw: RawNode, malformed: &mut Vec<Diagnostic>) -> Option<FlowNode> {
    let loc = format!("flow.nodes[{}]", raw.id);
    let mut fail = |code: &str, message: String| {
        malformed.push(Diagnostic::error(code, &loc, message));
        None
    };
    let kind = match raw.kind.as_str() {
        "start" => NodeKind::Start,
        "end" => NodeKind::End,
        "table-ref" => match raw.table_name {
            Some(t) => NodeKind::TableRef(t),
            None => return fail("malformed-node", "table-ref node needs `tableName`".into()),
        },
        "split" => match raw.split_kind.as_deref() {
            Some("AND") => NodeKind::Split(SplitKind::And),
            Some("XOR") => NodeKind::Split(SplitKind::Xor),
            other => {
                return fail(
                    "malformed-node",
                    format!("split needs splitKind AND or XOR, got {other:?}"),
                )
            }
        },
        "join" => match (raw.join_kind.as_deref(), raw.n) {
            (Some("AND"), None) => NodeKind::Join(JoinKind::And),
            (Some("OR"), None) => NodeKind::Join(JoinKind::Or),
            (Some("N-OF-M"), Some(n)) => NodeKind::Join(JoinKind::NOfM(n)),
            (Some("N-OF-M"), None) => return fail("malformed-node", "N-OF-M join needs `n`".into()),
            (kind, n) => return fail("malformed-node", format!("invalid join: joinKind {kind:?}, n {n:?}")),
        },
        other => return fail("malformed-node", format!("unknown node kind `{other}`")),
    };
    Some(FlowNode { id: raw.id, kind })
}

fn raise_condition(cell: &ConditionCell) -> RawCondition {
    RawCondition {
        attribute: cell.attribute.clone(),
        op: cell.op.name().to_string(),
        operand: cell.operand.as_ref().map(|o| match o {
            Operand::Value(v) => RawOperand::Scalar(v.into()),
            Operand::Set(values) => RawOperand::Set(values.iter().map(RawScalar::from).collect()),
            Operand::Interval { lo, hi } => RawOperand::Interval(RawInterval { lo: *lo, hi: *hi }),
        }),
    }
}

fn raise(model: &XttModel) -> RawModel {
    RawModel {
        name: model.name.clone(),
        attributes: model
            .attributes
            .iter()
            .map(|a| RawAttribute {
                name: a.name.clone(),
                domain: match &a.domain {
                    Domain::Symbolic(s) => RawDomain::Symbolic { symbols: s.clone() },
                    Domain::IntRange { lo, hi } => RawDomain::IntRange { lo: *lo, hi: *hi },
                },
            })
            .collect(),
        tables: model
            .tables
            .iter()
            .map(|t| RawTable {
                name: t.name.clone(),
                condition_columns: t.condition_columns.clone(),
                decision_columns: t.decision_columns.clone(),
                match_policy: t.match_policy.name().to_string(),
                rows: t
                    .rows
                    .iter()
                    .map(|r| RawRow {
                        conditions: r.conditions.iter().map(raise_condition).collect(),
                        decisions: r
                            .decisions
                            .iter()
                            .map(|d| RawDecision {
                                attribute: d.attribute.clone(),
                                value: (&d.value).into(),
                            })
                            .collect(),
                    })
                    .collect(),
            })
            .collect(),
        flow: RawFlow {
            nodes: model
                .flow
                .nodes
                .iter()
                .map(|n| {
                    let mut raw = RawNode {
                        id: n.id.clone(),
                        kind: n.kind.name().to_string(),
                        table_name: None,
                        split_kind: None,
                        join_kind: None,
                        n: None,
                    };
                    match &n.kind {
                        NodeKind::TableRef(t) => raw.table_name = Some(t.clone()),
                        NodeKind::Split(k) => raw.split_kind = Some(k.name().to_string()),
                        NodeKind::Join(k) => {
                            raw.join_kind = Some(k.name().to_string());
                            if let JoinKind::NOfM(n) = k {
                                raw.n = Some(*n);
                            }
                        }
                        NodeKind::Start | NodeKind::End => {}
                    }
                    raw
                })
                .collect(),
            links: model
                .flow
                .links
                .iter()
                .map(|l| RawLink {
                    from: l.from.clone(),
                    to: l.to.clone(),
                    target_row: l.target_row,
                    guard: l.guard.as_ref().map(|g| g.iter().map(raise_condition).collect()),
                    is_default: l.is_default,
                })
                .collect(),
        },
    }
}
