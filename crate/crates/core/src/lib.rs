//! Modular tabular rulebases: finite-domain attributes, decision tables linked
//! by a flow graph, token-driven inference, exhaustive table analysis, and
//! export to ruleflow XML, decision-table CSV, a `Workspace` source file and
//! BPMN process XML.

pub mod analysis;
pub mod bpmn;
pub mod cli;
pub mod diagnostic;
pub mod drools;
pub mod format;
pub mod infer;
pub mod model;
pub mod samples;
pub mod validate;
mod xml;

pub use analysis::{
    check_completeness, check_overlap, check_reachability, oracle_equivalence, AnalysisError, AnalysisReport, Analyzer,
};
pub use bpmn::{export_bpmn_rulelevel, export_bpmn_tablemap, BpmnDocument, BpmnError};
pub use diagnostic::{Diagnostic, Severity};
pub use drools::{
    emit_decision_table_csv, emit_ruleflow_xml, emit_workspace_source, export_drools, normalize_flow,
    plan_decomposition, ColumnPlan, DroolsBundle, NormalizedFlow,
};
pub use format::{parse_model, serialize_model, ParseError, SerializeError};
pub use infer::{
    eval_condition, evaluate_table, run_forward, run_goal_driven, EngineError, InferenceTrace, RunOutcome, TableResult,
    TraceEvent, Valuation,
};
pub use model::*;
pub use validate::validate_model;
