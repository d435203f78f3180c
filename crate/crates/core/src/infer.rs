//! Table evaluation and token-driven execution of the flow graph.
//!
//! Tokens are simulated one at a time on a stack: a token advances until it
//! reaches an end node, waits at a join, or dies. Split branches are pushed so
//! that they run in link declaration order. The valuation is global and shared
//! by every token.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::diagnostic::{has_errors, Diagnostic};
use crate::model::{ConditionCell, JoinKind, NodeKind, Operand, Operator, SplitKind, Value, XttModel, XttTable};
use crate::validate::validate_model;

/// Upper bound on node activations in one run; cyclic flows that never exit
/// stop here with a `step-limit` diagnostic.
pub const DEFAULT_STEP_LIMIT: usize = 100_000;

/// Partial assignment of attribute values. Missing attributes are unknown.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Valuation(BTreeMap<String, Value>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, attribute: &str) -> Option<&Value> {
        self.0.get(attribute)
    }

    pub fn set(&mut self, attribute: impl Into<String>, value: impl Into<Value>) {
        self.0.insert(attribute.into(), value.into());
    }

    pub fn with(mut self, attribute: impl Into<String>, value: impl Into<Value>) -> Self {
        self.set(attribute, value);
        self
    }

    pub fn remove(&mut self, attribute: &str) -> Option<Value> {
        self.0.remove(attribute)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bindings sorted by attribute name.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    /// Keeps only the listed attributes.
    pub fn restricted_to<'a>(&self, attributes: impl IntoIterator<Item = &'a String>) -> Valuation {
        let keep: BTreeSet<&String> = attributes.into_iter().collect();
        Valuation(
            self.0
                .iter()
                .filter(|(k, _)| keep.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        )
    }

    /// Checks every binding against the model's attribute domains.
    pub fn check(&self, model: &XttModel) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        for (name, value) in &self.0 {
            let loc = format!("valuation[{name}]");
            match model.attribute(name) {
                None => out.push(Diagnostic::error(
                    "unknown-attribute",
                    loc,
                    format!("`{name}` is not a model attribute"),
                )),
                Some(attr) if !attr.domain.contains(value) => out.push(Diagnostic::error(
                    "value-out-of-domain",
                    loc,
                    format!("value `{value}` is outside the domain of `{name}`"),
                )),
                Some(_) => {}
            }
        }
        out
    }

    /// Builds a valuation from `attr=value` texts, typing each value by its
    /// attribute's domain.
    pub fn from_bindings<S: AsRef<str>>(model: &XttModel, bindings: &[S]) -> Result<Valuation, Vec<Diagnostic>> {
        let mut v = Valuation::new();
        let mut errors = Vec::new();
        for binding in bindings {
            let binding = binding.as_ref();
            let Some((name, text)) = binding.split_once('=') else {
                errors.push(Diagnostic::error(
                    "malformed-binding",
                    "valuation",
                    format!("`{binding}` is not of the form attr=value"),
                ));
                continue;
            };
            let (name, text) = (name.trim(), text.trim());
            let Some(attr) = model.attribute(name) else {
                errors.push(Diagnostic::error(
                    "unknown-attribute",
                    format!("valuation[{name}]"),
                    format!("`{name}` is not a model attribute"),
                ));
                continue;
            };
            match attr.domain.parse_value(text) {
                Some(value) if attr.domain.contains(&value) => v.set(name, value),
                _ => errors.push(Diagnostic::error(
                    "value-out-of-domain",
                    format!("valuation[{name}]"),
                    format!("`{text}` is not a value of `{name}`"),
                )),
            }
        }
        if errors.is_empty() {
            Ok(v)
        } else {
            Err(errors)
        }
    }

    /// One `attr=value` line per binding, sorted by attribute name.
    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

impl FromIterator<(String, Value)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

/// `any` holds always; every other operator fails on an unbound attribute.
pub fn eval_condition(cell: &ConditionCell, v: &Valuation) -> bool {
    if cell.op == Operator::Any {
        return true;
    }
    let Some(value) = v.get(&cell.attribute) else {
        return false;
    };
    let Some(operand) = &cell.operand else {
        return false;
    };
    let ordered = |f: fn(i64, i64) -> bool| match (value, operand) {
        (Value::Int(x), Operand::Value(Value::Int(y))) => f(*x, *y),
        _ => false,
    };
    match cell.op {
        Operator::Eq => matches!(operand, Operand::Value(o) if o == value),
        Operator::Neq => matches!(operand, Operand::Value(o) if o != value),
        Operator::Lt => ordered(|x, y| x < y),
        Operator::Gt => ordered(|x, y| x > y),
        Operator::Leq => ordered(|x, y| x <= y),
        Operator::Geq => ordered(|x, y| x >= y),
        Operator::In => member(value, operand),
        Operator::NotIn => !member(value, operand),
        Operator::Any => true,
    }
}

fn member(value: &Value, operand: &Operand) -> bool {
    match operand {
        Operand::Set(values) => values.contains(value),
        Operand::Interval { lo, hi } => value.as_int().is_some_and(|x| *lo <= x && x <= *hi),
        Operand::Value(o) => o == value,
    }
}

pub fn row_matches(conditions: &[ConditionCell], v: &Valuation) -> bool {
    conditions.iter().all(|c| eval_condition(c, v))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableResult {
    pub fired_rows: Vec<usize>,
    pub valuation_after: Valuation,
}

/// Evaluates one table. Rows are tested in document order against the
/// valuation the table was entered with; decisions of firing rows are applied
/// in order, so later writes win.
pub fn evaluate_table(table: &XttTable, v: &Valuation, restrict_to: Option<&BTreeSet<usize>>) -> TableResult {
    let mut after = v.clone();
    let mut fired_rows = Vec::new();
    for row in &table.rows {
        if restrict_to.is_some_and(|r| !r.contains(&row.row_id)) {
            continue;
        }
        if !row_matches(&row.conditions, v) {
            continue;
        }
        fired_rows.push(row.row_id);
        for d in &row.decisions {
            after.set(d.attribute.clone(), d.value.clone());
        }
        if table.match_policy == crate::model::MatchPolicy::FirstHit {
            break;
        }
    }
    TableResult {
        fired_rows,
        valuation_after: after,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Entered,
    FiredRows(Vec<usize>),
    SplitDispatch(Vec<String>),
    JoinSatisfied,
    Absorbed,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list<T: fmt::Display>(items: &[T]) -> String {
            items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
        }
        match self {
            TraceEvent::Entered => f.write_str("entered"),
            TraceEvent::FiredRows(rows) => write!(f, "fired-rows({})", list(rows)),
            TraceEvent::SplitDispatch(targets) => write!(f, "split-dispatch({})", list(targets)),
            TraceEvent::JoinSatisfied => f.write_str("join-satisfied"),
            TraceEvent::Absorbed => f.write_str("absorbed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub node_id: String,
    pub event: TraceEvent,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InferenceTrace {
    pub steps: Vec<TraceStep>,
}

impl InferenceTrace {
    fn push(&mut self, node_id: &str, event: TraceEvent) {
        self.steps.push(TraceStep {
            node_id: node_id.to_string(),
            event,
        });
    }

    /// `<stepNo> <nodeId> <event>` per line, steps numbered from 1.
    pub fn render(&self) -> String {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{} {} {}\n", i + 1, s.node_id, s.event))
            .collect()
    }

    pub fn count(&self, node_id: &str, pred: impl Fn(&TraceEvent) -> bool) -> usize {
        self.steps
            .iter()
            .filter(|s| s.node_id == node_id && pred(&s.event))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub valuation: Valuation,
    pub trace: InferenceTrace,
    /// Runtime findings: `deadlock`, `xor-stuck`, `step-limit` (errors) and
    /// `goal-undetermined` (warning).
    pub diagnostics: Vec<Diagnostic>,
    /// Tables evaluated by a goal-driven run; `None` for forward runs.
    pub slice: Option<Vec<String>>,
}

impl RunOutcome {
    pub fn is_ok(&self) -> bool {
        !has_errors(&self.diagnostics)
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("model is invalid: {}", codes(.0))]
    InvalidModel(Vec<Diagnostic>),
    #[error("initial valuation is invalid: {}", codes(.0))]
    InvalidValuation(Vec<Diagnostic>),
    #[error("unknown-goal: no table decides `{0}`")]
    UnknownGoal(String),
}

impl EngineError {
    pub fn code(&self) -> &str {
        match self {
            EngineError::InvalidModel(_) => "invalid-model",
            EngineError::InvalidValuation(d) => d.first().map_or("invalid-valuation", |d| d.code.as_str()),
            EngineError::UnknownGoal(_) => "unknown-goal",
        }
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            EngineError::InvalidModel(d) | EngineError::InvalidValuation(d) => d.clone(),
            EngineError::UnknownGoal(goal) => vec![Diagnostic::error(
                "unknown-goal",
                "goal",
                format!("no table decides `{goal}`"),
            )],
        }
    }
}

fn codes(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.code.as_str()).collect::<Vec<_>>().join(", ")
}

fn preflight(model: &XttModel, initial: &Valuation) -> Result<(), EngineError> {
    let errors: Vec<Diagnostic> = validate_model(model).into_iter().filter(Diagnostic::is_error).collect();
    if !errors.is_empty() {
        return Err(EngineError::InvalidModel(errors));
    }
    let errors = initial.check(model);
    if !errors.is_empty() {
        return Err(EngineError::InvalidValuation(errors));
    }
    Ok(())
}

/// Forward run from the start node.
pub fn run_forward(model: &XttModel, initial: &Valuation) -> Result<RunOutcome, EngineError> {
    preflight(model, initial)?;
    Ok(Simulator::new(model, None, DEFAULT_STEP_LIMIT).run(initial.clone()))
}

/// Tables that can contribute to binding `goal`: the tables deciding it, plus,
/// transitively, every table that decides a condition attribute of a sliced
/// table and can reach that table through the flow. Returned in model order.
pub fn goal_slice(model: &XttModel, goal: &str) -> Result<Vec<String>, EngineError> {
    let deciders = |attr: &str| -> Vec<&XttTable> {
        model
            .tables
            .iter()
            .filter(|t| t.decision_columns.iter().any(|c| c == attr))
            .collect()
    };
    let seeds = deciders(goal);
    if seeds.is_empty() {
        return Err(EngineError::UnknownGoal(goal.to_string()));
    }
    let mut slice: BTreeSet<&str> = seeds.iter().map(|t| t.name.as_str()).collect();
    let mut work: Vec<&XttTable> = seeds;
    while let Some(table) = work.pop() {
        let Some(target) = model.node_for_table(&table.name) else {
            continue;
        };
        for attr in &table.condition_columns {
            for upstream in deciders(attr) {
                if slice.contains(upstream.name.as_str()) {
                    continue;
                }
                let Some(node) = model.node_for_table(&upstream.name) else {
                    continue;
                };
                if model.flow.reachable_from(&node.id).contains(&target.id) {
                    slice.insert(upstream.name.as_str());
                    work.push(upstream);
                }
            }
        }
    }
    Ok(model
        .tables
        .iter()
        .filter(|t| slice.contains(t.name.as_str()))
        .map(|t| t.name.clone())
        .collect())
}

/// Goal-driven run: forward execution over the flow where only tables in the
/// goal's backward slice are evaluated; the others pass their token on.
pub fn run_goal_driven(model: &XttModel, goal: &str, initial: &Valuation) -> Result<RunOutcome, EngineError> {
    preflight(model, initial)?;
    let slice = goal_slice(model, goal)?;
    let active: BTreeSet<String> = slice.iter().cloned().collect();
    let mut outcome = Simulator::new(model, Some(&active), DEFAULT_STEP_LIMIT).run(initial.clone());
    if outcome.valuation.get(goal).is_none() {
        outcome.diagnostics.push(Diagnostic::warning(
            "goal-undetermined",
            "goal",
            format!("no fired rule bound `{goal}`"),
        ));
    }
    outcome.slice = Some(slice);
    Ok(outcome)
}

#[derive(Default)]
struct JoinState {
    arrived: BTreeSet<usize>,
    fired: bool,
}

struct Token {
    node: String,
    via: Option<usize>,
}

struct Simulator<'m> {
    model: &'m XttModel,
    active: Option<&'m BTreeSet<String>>,
    step_limit: usize,
    joins: HashMap<String, JoinState>,
    stack: Vec<Token>,
    trace: InferenceTrace,
    diagnostics: Vec<Diagnostic>,
}

impl<'m> Simulator<'m> {
    fn new(model: &'m XttModel, active: Option<&'m BTreeSet<String>>, step_limit: usize) -> Self {
        Simulator {
            model,
            active,
            step_limit,
            joins: HashMap::new(),
            stack: Vec::new(),
            trace: InferenceTrace::default(),
            diagnostics: Vec::new(),
        }
    }

    fn dispatch(&mut self, links: &[usize]) {
        for &i in links.iter().rev() {
            self.stack.push(Token {
                node: self.model.flow.links[i].to.clone(),
                via: Some(i),
            });
        }
    }

    /// Records an arrival; returns `Some(true)` when the join fires now,
    /// `Some(false)` when it keeps waiting and `None` when it already fired.
    fn arrive(&mut self, node: &str, via: Option<usize>, threshold: usize) -> Option<bool> {
        let state = self.joins.entry(node.to_string()).or_default();
        if state.fired {
            return None;
        }
        if let Some(link) = via {
            state.arrived.insert(link);
        }
        if state.arrived.len() >= threshold {
            state.fired = true;
            Some(true)
        } else {
            Some(false)
        }
    }

    fn run(mut self, initial: Valuation) -> RunOutcome {
        let flow = &self.model.flow;
        let mut valuation = initial;
        let start = flow.start().expect("validated model has a start node");
        self.stack.push(Token {
            node: start.id.clone(),
            via: None,
        });
        let mut activations = 0;

        while let Some(token) = self.stack.pop() {
            activations += 1;
            if activations > self.step_limit {
                self.diagnostics.push(Diagnostic::error(
                    "step-limit",
                    format!("flow.nodes[{}]", token.node),
                    format!("run exceeded {} node activations", self.step_limit),
                ));
                break;
            }
            let node = flow.node(&token.node).expect("validated link endpoint");
            let id = node.id.as_str();
            self.trace.push(id, TraceEvent::Entered);
            let outgoing = flow.outgoing(id);
            match &node.kind {
                NodeKind::Start => self.dispatch(&outgoing),
                NodeKind::End => {}
                NodeKind::TableRef(table_name) => {
                    let incoming = flow.incoming(id);
                    if incoming.len() > 1 {
                        // Several incoming links act as an implicit AND join.
                        match self.arrive(id, token.via, incoming.len()) {
                            None => {
                                self.trace.push(id, TraceEvent::Absorbed);
                                continue;
                            }
                            Some(false) => continue,
                            Some(true) => self.trace.push(id, TraceEvent::JoinSatisfied),
                        }
                    }
                    let evaluated = self.active.is_none_or(|a| a.contains(table_name));
                    if evaluated {
                        let table = self.model.table(table_name).expect("validated table ref");
                        let restrict = self.restriction(id, token.via, incoming.len() > 1);
                        let result = evaluate_table(table, &valuation, restrict.as_ref());
                        valuation = result.valuation_after;
                        self.trace.push(id, TraceEvent::FiredRows(result.fired_rows));
                    }
                    self.dispatch(&outgoing);
                }
                NodeKind::Split(SplitKind::And) => {
                    let targets = outgoing.iter().map(|&i| flow.links[i].to.clone()).collect();
                    self.trace.push(id, TraceEvent::SplitDispatch(targets));
                    self.dispatch(&outgoing);
                }
                NodeKind::Split(SplitKind::Xor) => {
                    let chosen = outgoing
                        .iter()
                        .copied()
                        .find(|&i| {
                            let link = &flow.links[i];
                            !link.is_default && link.guard.as_deref().is_none_or(|g| row_matches(g, &valuation))
                        })
                        .or_else(|| outgoing.iter().copied().find(|&i| flow.links[i].is_default));
                    match chosen {
                        Some(i) => {
                            self.trace
                                .push(id, TraceEvent::SplitDispatch(vec![flow.links[i].to.clone()]));
                            self.dispatch(&[i]);
                        }
                        None => self.diagnostics.push(Diagnostic::error(
                            "xor-stuck",
                            format!("flow.nodes[{id}]"),
                            "no guard holds and the split has no default branch",
                        )),
                    }
                }
                NodeKind::Join(kind) => {
                    let threshold = match kind {
                        JoinKind::And => flow.in_degree(id),
                        JoinKind::Or => 1,
                        JoinKind::NOfM(n) => *n as usize,
                    };
                    match self.arrive(id, token.via, threshold) {
                        None => self.trace.push(id, TraceEvent::Absorbed),
                        Some(false) => {}
                        Some(true) => {
                            self.trace.push(id, TraceEvent::JoinSatisfied);
                            self.dispatch(&outgoing);
                        }
                    }
                }
            }
        }

        let mut waiting: Vec<(&String, &JoinState)> = self
            .joins
            .iter()
            .filter(|(_, s)| !s.fired && !s.arrived.is_empty())
            .collect();
        waiting.sort_by_key(|(id, _)| flow.nodes.iter().position(|n| &n.id == *id));
        for (id, state) in waiting {
            self.diagnostics.push(Diagnostic::error(
                "deadlock",
                format!("flow.nodes[{id}]"),
                format!(
                    "join waits with {} of {} incoming links arrived and no token left to advance",
                    state.arrived.len(),
                    flow.in_degree(id)
                ),
            ));
        }

        RunOutcome {
            valuation,
            trace: self.trace,
            diagnostics: self.diagnostics,
            slice: None,
        }
    }

    /// Rows a token may evaluate. A link directed to a row restricts the
    /// table to it; at an implicit join the restriction is the union of the
    /// arrived links' rows, and vanishes if any of them targets the whole table.
    fn restriction(&self, node: &str, via: Option<usize>, joined: bool) -> Option<BTreeSet<usize>> {
        let links = &self.model.flow.links;
        if joined {
            let arrived = &self.joins.get(node)?.arrived;
            arrived
                .iter()
                .map(|&i| links[i].target_row)
                .collect::<Option<BTreeSet<usize>>>()
        } else {
            via.and_then(|i| links[i].target_row).map(|r| BTreeSet::from([r]))
        }
    }
}
