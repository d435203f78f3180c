//! BPMN process export.
//!
//! Two mappings are offered. The table map turns every flow node into one
//! BPMN flow object (tables become tasks, splits and joins become gateways)
//! and every link into a sequence flow. The rule-level map draws a single
//! table as an exclusive gateway with one guarded branch per rule.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::model::{ConditionCell, JoinKind, NodeKind, Operand, Operator, SplitKind, Value, XttModel};
use crate::xml::{escape, id_from};

const BPMN_NS: &str = "http://www.omg.org/spec/BPMN/20100524/MODEL";
const XTT_NS: &str = "urn:xtt2:bpmn-extensions";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BpmnKind {
    StartEvent,
    EndEvent,
    Task,
    ParallelGateway,
    ExclusiveGateway,
}

impl BpmnKind {
    pub fn tag(self) -> &'static str {
        match self {
            BpmnKind::StartEvent => "startEvent",
            BpmnKind::EndEvent => "endEvent",
            BpmnKind::Task => "task",
            BpmnKind::ParallelGateway => "parallelGateway",
            BpmnKind::ExclusiveGateway => "exclusiveGateway",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpmnElement {
    pub id: String,
    pub kind: BpmnKind,
    pub name: String,
    /// `Diverging` or `Converging` for gateways.
    pub direction: Option<&'static str>,
    /// Original join semantics for joins BPMN cannot express natively
    /// (`OR`, `N-OF-M(n)`), kept as an extension attribute.
    pub join_semantics: Option<String>,
    /// Sequence flow taken when no condition holds.
    pub default_flow: Option<String>,
}

impl BpmnElement {
    fn new(id: impl Into<String>, kind: BpmnKind, name: impl Into<String>) -> Self {
        BpmnElement {
            id: id.into(),
            kind,
            name: name.into(),
            direction: None,
            join_semantics: None,
            default_flow: None,
        }
    }

    fn gateway(id: impl Into<String>, kind: BpmnKind, name: impl Into<String>, direction: &'static str) -> Self {
        BpmnElement {
            direction: Some(direction),
            ..Self::new(id, kind, name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceFlow {
    pub id: String,
    pub from: String,
    pub to: String,
    pub condition_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpmnDocument {
    pub process_id: String,
    pub process_name: String,
    pub elements: Vec<BpmnElement>,
    pub sequence_flows: Vec<SequenceFlow>,
}

#[derive(Debug, Error)]
pub enum BpmnError {
    #[error("unknown-table: model has no table `{0}`")]
    UnknownTable(String),
}

impl BpmnError {
    pub fn diagnostic(&self) -> Diagnostic {
        match self {
            BpmnError::UnknownTable(t) => Diagnostic::error(
                "unknown-table",
                format!("tables[{t}]"),
                format!("model has no table `{t}`"),
            ),
        }
    }
}

impl BpmnDocument {
    pub fn count(&self, kind: BpmnKind) -> usize {
        self.elements.iter().filter(|e| e.kind == kind).count()
    }

    pub fn element(&self, id: &str) -> Option<&BpmnElement> {
        self.elements.iter().find(|e| e.id == id)
    }

    /// Referential and structural checks: unique ids, flows between existing
    /// elements, exactly one start event, at least one end event.
    pub fn check_integrity(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut ids = BTreeSet::new();
        for e in &self.elements {
            if !ids.insert(e.id.as_str()) {
                out.push(Diagnostic::error(
                    "duplicate-id",
                    format!("elements[{}]", e.id),
                    "element id is not unique",
                ));
            }
        }
        for f in &self.sequence_flows {
            if !ids.insert(f.id.as_str()) {
                out.push(Diagnostic::error(
                    "duplicate-id",
                    format!("sequenceFlows[{}]", f.id),
                    "flow id is not unique",
                ));
            }
            for end in [&f.from, &f.to] {
                if self.element(end).is_none() {
                    out.push(Diagnostic::error(
                        "dangling-flow",
                        format!("sequenceFlows[{}]", f.id),
                        format!("`{end}` is not an element"),
                    ));
                }
            }
        }
        if self.count(BpmnKind::StartEvent) != 1 {
            out.push(Diagnostic::error(
                "start-event-count",
                "process",
                "process needs exactly one start event",
            ));
        }
        if self.count(BpmnKind::EndEvent) == 0 {
            out.push(Diagnostic::error(
                "missing-end-event",
                "process",
                "process needs an end event",
            ));
        }
        out
    }

    pub fn to_xml(&self) -> String {
        let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        out.push_str(&format!(
            "<definitions xmlns=\"{BPMN_NS}\" xmlns:xtt=\"{XTT_NS}\" id=\"{}_definitions\" targetNamespace=\"{XTT_NS}\">\n",
            escape(&self.process_id)
        ));
        out.push_str(&format!(
            "  <process id=\"{}\" name=\"{}\" isExecutable=\"false\">\n",
            escape(&self.process_id),
            escape(&self.process_name)
        ));
        for e in &self.elements {
            let mut attrs = format!("id=\"{}\" name=\"{}\"", escape(&e.id), escape(&e.name));
            if let Some(d) = e.direction {
                attrs.push_str(&format!(" gatewayDirection=\"{d}\""));
            }
            if let Some(f) = &e.default_flow {
                attrs.push_str(&format!(" default=\"{}\"", escape(f)));
            }
            if let Some(s) = &e.join_semantics {
                attrs.push_str(&format!(" xtt:joinSemantics=\"{}\"", escape(s)));
            }
            out.push_str(&format!("    <{} {attrs}/>\n", e.kind.tag()));
        }
        for f in &self.sequence_flows {
            let attrs = format!(
                "id=\"{}\" sourceRef=\"{}\" targetRef=\"{}\"",
                escape(&f.id),
                escape(&f.from),
                escape(&f.to)
            );
            match &f.condition_text {
                None => out.push_str(&format!("    <sequenceFlow {attrs}/>\n")),
                Some(text) => out.push_str(&format!(
                    "    <sequenceFlow {attrs}>\n      <conditionExpression>{}</conditionExpression>\n    </sequenceFlow>\n",
                    escape(text)
                )),
            }
        }
        out.push_str("  </process>\n</definitions>\n");
        out
    }
}

fn render_value_list(values: &[Value]) -> String {
    values.iter().map(Value::to_string).collect::<Vec<_>>().join(",")
}

fn render_condition(cell: &ConditionCell) -> Option<String> {
    let a = &cell.attribute;
    let operand = match &cell.operand {
        None => return None,
        Some(Operand::Value(v)) => v.to_string(),
        Some(Operand::Set(values)) => format!("{{{}}}", render_value_list(values)),
        Some(Operand::Interval { lo, hi }) => format!("[{lo},{hi}]"),
    };
    let op = match cell.op {
        Operator::Any => return None,
        Operator::Eq => "==",
        Operator::Neq => "!=",
        Operator::Lt => "<",
        Operator::Gt => ">",
        Operator::Leq => "<=",
        Operator::Geq => ">=",
        Operator::In => "in",
        Operator::NotIn => "notin",
    };
    Some(format!("{a} {op} {operand}"))
}

/// Conjunction of the non-ANY conditions; `true` when none constrain.
pub fn condition_text(cells: &[ConditionCell]) -> String {
    let parts: Vec<String> = cells.iter().filter_map(render_condition).collect();
    if parts.is_empty() {
        "true".to_string()
    } else {
        parts.join(" && ")
    }
}

/// One BPMN flow object per flow node, one sequence flow per link. The raw
/// flow is exported; no ruleflow normalization is applied.
pub fn export_bpmn_tablemap(model: &XttModel) -> BpmnDocument {
    let flow_id = |i: usize| format!("flow_{}", i + 1);
    let elements: Vec<BpmnElement> = model
        .flow
        .nodes
        .iter()
        .map(|node| match &node.kind {
            NodeKind::Start => BpmnElement::new(&node.id, BpmnKind::StartEvent, &node.id),
            NodeKind::End => BpmnElement::new(&node.id, BpmnKind::EndEvent, &node.id),
            NodeKind::TableRef(t) => BpmnElement::new(&node.id, BpmnKind::Task, t),
            NodeKind::Split(SplitKind::And) => {
                BpmnElement::gateway(&node.id, BpmnKind::ParallelGateway, &node.id, "Diverging")
            }
            NodeKind::Split(SplitKind::Xor) => {
                let mut g = BpmnElement::gateway(&node.id, BpmnKind::ExclusiveGateway, &node.id, "Diverging");
                g.default_flow = model
                    .flow
                    .links
                    .iter()
                    .position(|l| l.from == node.id && l.is_default)
                    .map(flow_id);
                g
            }
            NodeKind::Join(JoinKind::And) => {
                BpmnElement::gateway(&node.id, BpmnKind::ParallelGateway, &node.id, "Converging")
            }
            NodeKind::Join(kind) => {
                let mut g = BpmnElement::gateway(&node.id, BpmnKind::ExclusiveGateway, &node.id, "Converging");
                g.join_semantics = Some(match kind {
                    JoinKind::NOfM(n) => format!("N-OF-M({n})"),
                    other => other.name().to_string(),
                });
                g
            }
        })
        .collect();

    let sequence_flows = model
        .flow
        .links
        .iter()
        .enumerate()
        .map(|(i, link)| SequenceFlow {
            id: flow_id(i),
            from: link.from.clone(),
            to: link.to.clone(),
            condition_text: link.guard.as_deref().map(condition_text),
        })
        .collect();

    BpmnDocument {
        process_id: id_from(&model.name),
        process_name: model.name.clone(),
        elements,
        sequence_flows,
    }
}

/// One table drawn rule by rule: start, a diverging exclusive gateway with a
/// branch per row (guarded by the row's conditions, leading to a task naming
/// its decisions), a converging gateway and an end event.
pub fn export_bpmn_rulelevel(model: &XttModel, table_name: &str) -> Result<BpmnDocument, BpmnError> {
    let table = model
        .table(table_name)
        .ok_or_else(|| BpmnError::UnknownTable(table_name.to_string()))?;
    let t = id_from(&table.name);
    let gateway = format!("{t}_gateway");
    let merge = format!("{t}_merge");

    let mut elements = vec![
        BpmnElement::new("start", BpmnKind::StartEvent, "start"),
        BpmnElement::gateway(&gateway, BpmnKind::ExclusiveGateway, &table.name, "Diverging"),
    ];
    let mut flows = Vec::new();
    let mut next_flow = |from: &str, to: &str, condition_text: Option<String>| {
        flows.push(SequenceFlow {
            id: format!("flow_{}", flows.len() + 1),
            from: from.into(),
            to: to.into(),
            condition_text,
        });
    };
    next_flow("start", &gateway, None);
    for row in &table.rows {
        let task = format!("{t}_row{}", row.row_id);
        let decisions: Vec<String> = row
            .decisions
            .iter()
            .map(|d| format!("{}={}", d.attribute, d.value))
            .collect();
        elements.push(BpmnElement::new(
            &task,
            BpmnKind::Task,
            format!("row{}: set {}", row.row_id, decisions.join(", ")),
        ));
        next_flow(&gateway, &task, Some(condition_text(&row.conditions)));
        next_flow(&task, &merge, None);
    }
    elements.push(BpmnElement::gateway(
        &merge,
        BpmnKind::ExclusiveGateway,
        "merge",
        "Converging",
    ));
    elements.push(BpmnElement::new("end", BpmnKind::EndEvent, "end"));
    next_flow(&merge, "end", None);

    Ok(BpmnDocument {
        process_id: id_from(&format!("{}_{}", model.name, table.name)),
        process_name: format!("{} / {}", model.name, table.name),
        elements,
        sequence_flows: flows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FlowNode, Link};
    use crate::samples::thermostat;

    #[test]
    fn thermostat_table_map() {
        let doc = export_bpmn_tablemap(&thermostat());
        assert_eq!(doc.count(BpmnKind::StartEvent), 1);
        assert_eq!(doc.count(BpmnKind::Task), 1);
        assert_eq!(doc.count(BpmnKind::EndEvent), 1);
        assert_eq!(doc.sequence_flows.len(), 2);
        assert_eq!(doc.element("thermostat").unwrap().name, "thermostat");
        assert!(doc.check_integrity().is_empty());
    }

    #[test]
    fn guard_renders_as_condition() {
        let mut model = thermostat();
        model
            .flow
            .nodes
            .insert(1, FlowNode::new("choose", NodeKind::Split(SplitKind::Xor)));
        model.flow.links = vec![
            Link::new("start", "choose"),
            Link::new("choose", "thermostat").guarded(vec![ConditionCell::eq("today", "workday")]),
            Link::new("choose", "end").default_branch(),
            Link::new("thermostat", "end"),
        ];
        let doc = export_bpmn_tablemap(&model);
        assert_eq!(
            doc.sequence_flows[1].condition_text.as_deref(),
            Some("today == workday")
        );
        assert_eq!(doc.element("choose").unwrap().default_flow.as_deref(), Some("flow_3"));
        let xml = doc.to_xml();
        assert!(xml.contains("<conditionExpression>today == workday</conditionExpression>"));
        assert!(xml.contains("default=\"flow_3\""));
    }

    #[test]
    fn thermostat_rule_level() {
        let doc = export_bpmn_rulelevel(&thermostat(), "thermostat").unwrap();
        let branches: Vec<&SequenceFlow> = doc
            .sequence_flows
            .iter()
            .filter(|f| f.from == "thermostat_gateway")
            .collect();
        assert_eq!(branches.len(), 4);
        assert_eq!(
            branches[0].condition_text.as_deref(),
            Some("today == workday && hour > 17")
        );
        assert_eq!(branches[1].condition_text.as_deref(), Some("today == weekend"));
        assert_eq!(
            branches[3].condition_text.as_deref(),
            Some("today == workday && hour in [9,17]")
        );
        assert_eq!(
            doc.element("thermostat_row1").unwrap().name,
            "row1: set operation=nbizhrs"
        );
        assert!(doc.check_integrity().is_empty());
        assert!(doc.to_xml().contains("today == workday &amp;&amp; hour &gt; 17"));
    }

    #[test]
    fn rule_level_unknown_table() {
        let err = export_bpmn_rulelevel(&thermostat(), "nope").unwrap_err();
        assert_eq!(err.diagnostic().code, "unknown-table");
    }

    #[test]
    fn all_any_row_is_unconditional() {
        assert_eq!(condition_text(&[ConditionCell::any("hour")]), "true");
    }

    #[test]
    fn integrity_catches_dangling_flows() {
        let mut doc = export_bpmn_tablemap(&thermostat());
        doc.sequence_flows[0].to = "ghost".into();
        let codes: Vec<String> = doc.check_integrity().into_iter().map(|d| d.code).collect();
        assert_eq!(codes, ["dangling-flow"]);
    }
}
