//! Knowledge model: attributes over finite domains, decision tables and the
//! flow graph that links them.
//!
//! Models are plain immutable values once built. Structural checks live in
//! [`crate::validate`]; the on-disk form lives in [`crate::format`].

use std::collections::BTreeSet;
use std::fmt;

/// A domain value. Symbolic domains hold `Sym`, integer ranges hold `Int`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Sym(String),
    Int(i64),
}

impl Value {
    pub fn sym(s: impl Into<String>) -> Self {
        Value::Sym(s.into())
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            Value::Sym(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Sym(s) => f.write_str(s),
            Value::Int(i) => write!(f, "{i}"),
        }
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Self {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Sym(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Domain {
    Symbolic(Vec<String>),
    IntRange { lo: i64, hi: i64 },
}

impl Domain {
    /// Number of values in the domain; zero only for malformed domains.
    pub fn cardinality(&self) -> u64 {
        match self {
            Domain::Symbolic(symbols) => symbols.len() as u64,
            Domain::IntRange { lo, hi } if lo <= hi => (*hi as i128 - *lo as i128 + 1) as u64,
            Domain::IntRange { .. } => 0,
        }
    }

    pub fn contains(&self, value: &Value) -> bool {
        match (self, value) {
            (Domain::Symbolic(symbols), Value::Sym(s)) => symbols.iter().any(|x| x == s),
            (Domain::IntRange { lo, hi }, Value::Int(i)) => lo <= i && i <= hi,
            _ => false,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, Domain::IntRange { .. })
    }

    /// Values in canonical order: declaration order for symbols, ascending
    /// for integers.
    pub fn values(&self) -> Vec<Value> {
        match self {
            Domain::Symbolic(symbols) => symbols.iter().cloned().map(Value::Sym).collect(),
            Domain::IntRange { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
        }
    }

    /// Parses textual input (e.g. a command-line binding) against this domain.
    pub fn parse_value(&self, text: &str) -> Option<Value> {
        match self {
            Domain::Symbolic(_) => Some(Value::Sym(text.to_string())),
            Domain::IntRange { .. } => text.trim().parse::<i64>().ok().map(Value::Int),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub domain: Domain,
}

impl AttributeDef {
    pub fn new(name: impl Into<String>, domain: Domain) -> Self {
        AttributeDef {
            name: name.into(),
            domain,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operator {
    Eq,
    Neq,
    Lt,
    Gt,
    Leq,
    Geq,
    In,
    NotIn,
    Any,
}

impl Operator {
    pub const ALL: [Operator; 9] = [
        Operator::Eq,
        Operator::Neq,
        Operator::Lt,
        Operator::Gt,
        Operator::Leq,
        Operator::Geq,
        Operator::In,
        Operator::NotIn,
        Operator::Any,
    ];

    /// Name used by the model format.
    pub fn name(self) -> &'static str {
        match self {
            Operator::Eq => "eq",
            Operator::Neq => "neq",
            Operator::Lt => "lt",
            Operator::Gt => "gt",
            Operator::Leq => "leq",
            Operator::Geq => "geq",
            Operator::In => "in",
            Operator::NotIn => "notin",
            Operator::Any => "any",
        }
    }

    pub fn from_name(name: &str) -> Option<Operator> {
        Operator::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Ordering comparisons only make sense on integer ranges.
    pub fn is_ordering(self) -> bool {
        matches!(self, Operator::Lt | Operator::Gt | Operator::Leq | Operator::Geq)
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Right-hand side of a condition. Intervals are closed on both ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Value(Value),
    Set(Vec<Value>),
    Interval { lo: i64, hi: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionCell {
    pub attribute: String,
    pub op: Operator,
    pub operand: Option<Operand>,
}

impl ConditionCell {
    pub fn new(attribute: impl Into<String>, op: Operator, operand: Option<Operand>) -> Self {
        ConditionCell {
            attribute: attribute.into(),
            op,
            operand,
        }
    }

    pub fn eq(attribute: impl Into<String>, value: impl Into<Value>) -> Self {
        Self::new(attribute, Operator::Eq, Some(Operand::Value(value.into())))
    }

    pub fn cmp(attribute: impl Into<String>, op: Operator, value: i64) -> Self {
        Self::new(attribute, op, Some(Operand::Value(Value::Int(value))))
    }

    pub fn between(attribute: impl Into<String>, lo: i64, hi: i64) -> Self {
        Self::new(attribute, Operator::In, Some(Operand::Interval { lo, hi }))
    }

    pub fn any(attribute: impl Into<String>) -> Self {
        Self::new(attribute, Operator::Any, None)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionCell {
    pub attribute: String,
    pub value: Value,
}

impl DecisionCell {
    pub fn new(attribute: impl Into<String>, value: impl Into<Value>) -> Self {
        DecisionCell {
            attribute: attribute.into(),
            value: value.into(),
        }
    }
}

/// One rule. `row_id` is the 1-based position inside its table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleRow {
    pub row_id: usize,
    pub conditions: Vec<ConditionCell>,
    pub decisions: Vec<DecisionCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatchPolicy {
    FirstHit,
    #[default]
    AllHit,
}

impl MatchPolicy {
    pub fn name(self) -> &'static str {
        match self {
            MatchPolicy::FirstHit => "first-hit",
            MatchPolicy::AllHit => "all-hit",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "first-hit" => Some(MatchPolicy::FirstHit),
            "all-hit" => Some(MatchPolicy::AllHit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XttTable {
    pub name: String,
    pub condition_columns: Vec<String>,
    pub decision_columns: Vec<String>,
    pub rows: Vec<RuleRow>,
    pub match_policy: MatchPolicy,
}

impl XttTable {
    pub fn row(&self, row_id: usize) -> Option<&RuleRow> {
        row_id.checked_sub(1).and_then(|i| self.rows.get(i))
    }

    /// Renumbers rows 1..=n in document order.
    pub fn renumber(&mut self) {
        for (i, row) in self.rows.iter_mut().enumerate() {
            row.row_id = i + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    And,
    Xor,
}

impl SplitKind {
    pub fn name(self) -> &'static str {
        match self {
            SplitKind::And => "AND",
            SplitKind::Xor => "XOR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinKind {
    And,
    Or,
    /// Fires on the n-th arrival.
    NOfM(u32),
}

impl JoinKind {
    pub fn name(self) -> &'static str {
        match self {
            JoinKind::And => "AND",
            JoinKind::Or => "OR",
            JoinKind::NOfM(_) => "N-OF-M",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Start,
    End,
    TableRef(String),
    Split(SplitKind),
    Join(JoinKind),
}

impl NodeKind {
    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Start => "start",
            NodeKind::End => "end",
            NodeKind::TableRef(_) => "table-ref",
            NodeKind::Split(_) => "split",
            NodeKind::Join(_) => "join",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowNode {
    pub id: String,
    pub kind: NodeKind,
}

impl FlowNode {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        FlowNode { id: id.into(), kind }
    }

    pub fn table_name(&self) -> Option<&str> {
        match &self.kind {
            NodeKind::TableRef(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Link {
    pub from: String,
    pub to: String,
    /// 1-based row of the target table this link is directed to.
    pub target_row: Option<usize>,
    pub guard: Option<Vec<ConditionCell>>,
    pub is_default: bool,
}

impl Link {
    pub fn new(from: impl Into<String>, to: impl Into<String>) -> Self {
        Link {
            from: from.into(),
            to: to.into(),
            ..Default::default()
        }
    }

    pub fn guarded(mut self, guard: Vec<ConditionCell>) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn default_branch(mut self) -> Self {
        self.is_default = true;
        self
    }

    pub fn to_row(mut self, row: usize) -> Self {
        self.target_row = Some(row);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlowGraph {
    pub nodes: Vec<FlowNode>,
    pub links: Vec<Link>,
}

impl FlowGraph {
    pub fn node(&self, id: &str) -> Option<&FlowNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn start(&self) -> Option<&FlowNode> {
        self.nodes.iter().find(|n| n.kind == NodeKind::Start)
    }

    /// Indices of links leaving `id`, in declaration order.
    pub fn outgoing(&self, id: &str) -> Vec<usize> {
        self.links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.from == id)
            .map(|(i, _)| i)
            .collect()
    }

    /// Indices of links entering `id`, in declaration order.
    pub fn incoming(&self, id: &str) -> Vec<usize> {
        self.links
            .iter()
            .enumerate()
            .filter(|(_, l)| l.to == id)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn in_degree(&self, id: &str) -> usize {
        self.links.iter().filter(|l| l.to == id).count()
    }

    pub fn out_degree(&self, id: &str) -> usize {
        self.links.iter().filter(|l| l.from == id).count()
    }

    /// Node ids reachable from `from` (inclusive) along directed links.
    pub fn reachable_from(&self, from: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from.to_string()];
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            for link in self.links.iter().filter(|l| l.from == id) {
                if !seen.contains(&link.to) {
                    stack.push(link.to.clone());
                }
            }
        }
        seen
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct XttModel {
    pub name: String,
    pub attributes: Vec<AttributeDef>,
    pub tables: Vec<XttTable>,
    pub flow: FlowGraph,
}

impl XttModel {
    pub fn attribute(&self, name: &str) -> Option<&AttributeDef> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&XttTable> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// The table-ref node that refers to `table`, if any.
    pub fn node_for_table(&self, table: &str) -> Option<&FlowNode> {
        self.flow.nodes.iter().find(|n| n.table_name() == Some(table))
    }
}

/// Identifier rule for attribute, table and node names.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => chars.all(|c| c.is_ascii_alphanumeric() || c == '_'),
        _ => false,
    }
}
