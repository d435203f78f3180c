//! Exhaustive analysis of tables over their condition state space.
//!
//! A table's state space is the cross product of the domains of its condition
//! attributes, enumerated lexicographically in attribute declaration order
//! (symbols in declared order, integers ascending). Every check visits every
//! state, so results are exact; spaces larger than the configured bound are
//! refused rather than sampled.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::drools::{ColumnPlan, OutputOperator};
use crate::infer::{row_matches, Valuation};
use crate::model::{AttributeDef, Value, XttModel, XttTable};

pub const DEFAULT_STATE_BOUND: u64 = 1_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("state-space-too-large: table `{table}` has {size} condition states, bound is {bound}")]
    StateSpaceTooLarge { table: String, size: String, bound: u64 },
    #[error("unknown-attribute: table `{table}` uses undeclared attribute `{attribute}`")]
    UnknownAttribute { table: String, attribute: String },
}

impl AnalysisError {
    pub fn code(&self) -> &'static str {
        match self {
            AnalysisError::StateSpaceTooLarge { .. } => "state-space-too-large",
            AnalysisError::UnknownAttribute { .. } => "unknown-attribute",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub row_a: usize,
    pub row_b: usize,
    pub witness: Valuation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equivalence {
    pub equivalent: bool,
    pub witness: Option<Valuation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisReport {
    pub table_name: String,
    pub completeness_witnesses: Vec<Valuation>,
    pub overlaps: Vec<Overlap>,
    pub state_space_size: u64,
}

impl AnalysisReport {
    pub fn is_clean(&self) -> bool {
        self.completeness_witnesses.is_empty() && self.overlaps.is_empty()
    }

    /// `<table> <kind> <attr=value,...>` per defect.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for w in &self.completeness_witnesses {
            out.push_str(&format!("{} incomplete {}\n", self.table_name, render_witness(w)));
        }
        for o in &self.overlaps {
            out.push_str(&format!(
                "{} overlap({},{}) {}\n",
                self.table_name,
                o.row_a,
                o.row_b,
                render_witness(&o.witness)
            ));
        }
        out
    }
}

pub fn render_witness(v: &Valuation) -> String {
    v.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

/// The enumerable condition space of one table.
pub struct StateSpace<'m> {
    attributes: Vec<&'m AttributeDef>,
    values: Vec<Vec<Value>>,
    size: u64,
}

impl<'m> StateSpace<'m> {
    pub fn of(table: &XttTable, model: &'m XttModel, bound: u64) -> Result<Self, AnalysisError> {
        for col in &table.condition_columns {
            if model.attribute(col).is_none() {
                return Err(AnalysisError::UnknownAttribute {
                    table: table.name.clone(),
                    attribute: col.clone(),
                });
            }
        }
        let attributes: Vec<&AttributeDef> = model
            .attributes
            .iter()
            .filter(|a| table.condition_columns.contains(&a.name))
            .collect();
        let size = attributes
            .iter()
            .try_fold(1u64, |acc, a| acc.checked_mul(a.domain.cardinality()));
        match size {
            Some(size) if size <= bound => Ok(StateSpace {
                values: attributes.iter().map(|a| a.domain.values()).collect(),
                attributes,
                size,
            }),
            other => Err(AnalysisError::StateSpaceTooLarge {
                table: table.name.clone(),
                size: other.map_or_else(|| "more than 2^64".to_string(), |s| s.to_string()),
                bound,
            }),
        }
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    /// Visits every state in lexicographic order.
    pub fn for_each(&self, mut visit: impl FnMut(&Valuation)) {
        if self.values.iter().any(Vec::is_empty) {
            return;
        }
        let mut digits = vec![0usize; self.values.len()];
        loop {
            let state: Valuation = self
                .attributes
                .iter()
                .zip(&digits)
                .zip(&self.values)
                .map(|((a, &d), vals)| (a.name.clone(), vals[d].clone()))
                .collect();
            visit(&state);
            // Odometer: the last attribute varies fastest.
            let mut pos = digits.len();
            loop {
                if pos == 0 {
                    return;
                }
                pos -= 1;
                digits[pos] += 1;
                if digits[pos] < self.values[pos].len() {
                    break;
                }
                digits[pos] = 0;
            }
        }
    }
}

/// Analysis entry points with a configurable state-space bound.
#[derive(Debug, Clone, Copy)]
pub struct Analyzer {
    pub state_bound: u64,
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer {
            state_bound: DEFAULT_STATE_BOUND,
        }
    }
}

impl Analyzer {
    pub fn with_bound(state_bound: u64) -> Self {
        Analyzer { state_bound }
    }

    /// States matched by no row.
    pub fn check_completeness(&self, table: &XttTable, model: &XttModel) -> Result<Vec<Valuation>, AnalysisError> {
        let space = StateSpace::of(table, model, self.state_bound)?;
        let mut uncovered = Vec::new();
        space.for_each(|state| {
            if !table.rows.iter().any(|r| row_matches(&r.conditions, state)) {
                uncovered.push(state.clone());
            }
        });
        Ok(uncovered)
    }

    /// Row pairs that can fire on the same state, each with the smallest such
    /// state. Ordered by (rowA, rowB).
    pub fn check_overlap(&self, table: &XttTable, model: &XttModel) -> Result<Vec<Overlap>, AnalysisError> {
        let space = StateSpace::of(table, model, self.state_bound)?;
        let mut found: BTreeMap<(usize, usize), Valuation> = BTreeMap::new();
        space.for_each(|state| {
            let matched: Vec<usize> = table
                .rows
                .iter()
                .filter(|r| row_matches(&r.conditions, state))
                .map(|r| r.row_id)
                .collect();
            for (i, &a) in matched.iter().enumerate() {
                for &b in &matched[i + 1..] {
                    found.entry((a, b)).or_insert_with(|| state.clone());
                }
            }
        });
        Ok(found
            .into_iter()
            .map(|((row_a, row_b), witness)| Overlap { row_a, row_b, witness })
            .collect())
    }

    /// Compares, state by state, which rows match under the original cells
    /// and under the predicates the plan's columns and cells describe.
    pub fn oracle_equivalence(
        &self,
        table: &XttTable,
        plan: &ColumnPlan,
        model: &XttModel,
    ) -> Result<Equivalence, AnalysisError> {
        let space = StateSpace::of(table, model, self.state_bound)?;
        let mut witness = None;
        space.for_each(|state| {
            if witness.is_some() {
                return;
            }
            let original: Vec<bool> = table.rows.iter().map(|r| row_matches(&r.conditions, state)).collect();
            let planned: Vec<bool> = (0..table.rows.len())
                .map(|i| plan_row_matches(plan, i, state))
                .collect();
            if original != planned {
                witness = Some(state.clone());
            }
        });
        Ok(Equivalence {
            equivalent: witness.is_none(),
            witness,
        })
    }

    pub fn analyze_table(&self, table: &XttTable, model: &XttModel) -> Result<AnalysisReport, AnalysisError> {
        Ok(AnalysisReport {
            table_name: table.name.clone(),
            completeness_witnesses: self.check_completeness(table, model)?,
            overlaps: self.check_overlap(table, model)?,
            state_space_size: StateSpace::of(table, model, self.state_bound)?.size(),
        })
    }

    pub fn analyze_model(&self, model: &XttModel) -> Result<Vec<AnalysisReport>, AnalysisError> {
        model.tables.iter().map(|t| self.analyze_table(t, model)).collect()
    }
}

/// Row `row` of the plan holds iff every non-empty cell's column predicate
/// `attribute <op> cell` holds on the state.
fn plan_row_matches(plan: &ColumnPlan, row: usize, state: &Valuation) -> bool {
    let Some(cells) = plan.cells.get(row) else { return false };
    plan.columns.iter().zip(cells).all(|(column, cell)| {
        let Some(param) = cell else { return true };
        let Some(value) = state.get(&column.attribute) else {
            return false;
        };
        match column.output_operator {
            OutputOperator::EqTemplate => value == param,
            op => match (value, param) {
                (Value::Int(x), Value::Int(p)) => match op {
                    OutputOperator::Gt => x > p,
                    OutputOperator::Lt => x < p,
                    OutputOperator::Geq => x >= p,
                    OutputOperator::Leq => x <= p,
                    OutputOperator::EqTemplate => unreachable!(),
                },
                _ => false,
            },
        }
    })
}

pub fn check_completeness(table: &XttTable, model: &XttModel) -> Result<Vec<Valuation>, AnalysisError> {
    Analyzer::default().check_completeness(table, model)
}

pub fn check_overlap(table: &XttTable, model: &XttModel) -> Result<Vec<Overlap>, AnalysisError> {
    Analyzer::default().check_overlap(table, model)
}

pub fn oracle_equivalence(table: &XttTable, plan: &ColumnPlan, model: &XttModel) -> Result<Equivalence, AnalysisError> {
    Analyzer::default().oracle_equivalence(table, plan, model)
}

/// Tables whose flow node cannot be reached from the start node.
pub fn check_reachability(model: &XttModel) -> Vec<String> {
    let reachable = match model.flow.start() {
        Some(start) => model.flow.reachable_from(&start.id),
        None => Default::default(),
    };
    model
        .tables
        .iter()
        .filter(|t| model.node_for_table(&t.name).is_none_or(|n| !reachable.contains(&n.id)))
        .map(|t| t.name.clone())
        .collect()
}
