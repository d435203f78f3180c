#![allow(dead_code)]

//! Seeded random models for property and acceptance tests.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use xtt_core::{
    validate_model, AttributeDef, ConditionCell, DecisionCell, Domain, FlowGraph, FlowNode, JoinKind, Link,
    MatchPolicy, NodeKind, Operand, Operator, RuleRow, SplitKind, Valuation, Value, XttModel, XttTable,
};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Symbolic with 1..=6 symbols or an integer range of 1..=12 values.
pub fn random_domain(rng: &mut StdRng, max_card: i64) -> Domain {
    if rng.gen_bool(0.4) {
        let n = rng.gen_range(1..=6.min(max_card) as usize);
        Domain::Symbolic((0..n).map(|i| format!("s{i}")).collect())
    } else {
        let lo = rng.gen_range(-3..=3);
        let size = rng.gen_range(1..=max_card);
        Domain::IntRange { lo, hi: lo + size - 1 }
    }
}

fn pick(rng: &mut StdRng, domain: &Domain) -> Value {
    let values = domain.values();
    values[rng.gen_range(0..values.len())].clone()
}

/// A condition valid for the attribute's domain, using only operators with a
/// decision-table column form (eq, gt, lt, geq, leq, closed interval, any).
pub fn random_exportable_condition(rng: &mut StdRng, attr: &AttributeDef) -> ConditionCell {
    match &attr.domain {
        Domain::Symbolic(_) => {
            if rng.gen_bool(0.25) {
                ConditionCell::any(&attr.name)
            } else {
                ConditionCell::eq(&attr.name, pick(rng, &attr.domain))
            }
        }
        Domain::IntRange { lo, hi } => {
            let v = rng.gen_range(*lo..=*hi);
            match rng.gen_range(0..7) {
                0 => ConditionCell::any(&attr.name),
                1 => ConditionCell::eq(&attr.name, v),
                2 => ConditionCell::cmp(&attr.name, Operator::Gt, v),
                3 => ConditionCell::cmp(&attr.name, Operator::Lt, v),
                4 => ConditionCell::cmp(&attr.name, Operator::Geq, v),
                5 => ConditionCell::cmp(&attr.name, Operator::Leq, v),
                _ => {
                    let w = rng.gen_range(*lo..=*hi);
                    ConditionCell::between(&attr.name, v.min(w), v.max(w))
                }
            }
        }
    }
}

/// Any valid condition, including neq, notin and value sets.
pub fn random_condition(rng: &mut StdRng, attr: &AttributeDef) -> ConditionCell {
    if rng.gen_bool(0.7) {
        return random_exportable_condition(rng, attr);
    }
    let value_set =
        |rng: &mut StdRng| Operand::Set((0..rng.gen_range(1..=2)).map(|_| pick(rng, &attr.domain)).collect());
    let (op, operand) = match rng.gen_range(0..3) {
        0 => (Operator::Neq, Operand::Value(pick(rng, &attr.domain))),
        1 => match &attr.domain {
            Domain::IntRange { lo, hi } if rng.gen_bool(0.5) => {
                let (a, b) = (rng.gen_range(*lo..=*hi), rng.gen_range(*lo..=*hi));
                (
                    Operator::NotIn,
                    Operand::Interval {
                        lo: a.min(b),
                        hi: a.max(b),
                    },
                )
            }
            _ => (Operator::NotIn, value_set(rng)),
        },
        _ => (Operator::In, value_set(rng)),
    };
    ConditionCell::new(&attr.name, op, Some(operand))
}

pub fn random_rows(
    rng: &mut StdRng,
    conditions: &[&AttributeDef],
    decision: &AttributeDef,
    rows: usize,
    exportable: bool,
) -> Vec<RuleRow> {
    (0..rows)
        .map(|i| RuleRow {
            row_id: i + 1,
            conditions: conditions
                .iter()
                .map(|a| {
                    if exportable {
                        random_exportable_condition(rng, a)
                    } else {
                        random_condition(rng, a)
                    }
                })
                .collect(),
            decisions: vec![DecisionCell::new(&decision.name, pick(rng, &decision.domain))],
        })
        .collect()
}

/// One-table model (start -> t -> end) with 1..=4 condition columns and one
/// decision column (so at most 5 columns), 1..=8 rows and condition domains
/// of at most 12 values.
pub fn random_table_model(rng: &mut StdRng, exportable: bool) -> XttModel {
    let ncond = rng.gen_range(1..=4);
    let mut attributes: Vec<AttributeDef> = (0..ncond)
        .map(|i| AttributeDef::new(format!("c{i}"), random_domain(rng, 12)))
        .collect();
    attributes.shuffle(rng);
    attributes.push(AttributeDef::new(
        "d",
        Domain::Symbolic(vec!["yes".into(), "no".into()]),
    ));
    let mut columns: Vec<&AttributeDef> = attributes[..ncond].iter().collect();
    columns.shuffle(rng);
    let nrows = rng.gen_range(1..=8);
    let rows = random_rows(rng, &columns, &attributes[ncond], nrows, exportable);
    let table = XttTable {
        name: "t".into(),
        condition_columns: columns.iter().map(|a| a.name.clone()).collect(),
        decision_columns: vec!["d".into()],
        rows,
        match_policy: if rng.gen_bool(0.5) {
            MatchPolicy::AllHit
        } else {
            MatchPolicy::FirstHit
        },
    };
    let model = XttModel {
        name: "random".into(),
        attributes,
        tables: vec![table],
        flow: FlowGraph {
            nodes: vec![
                FlowNode::new("start", NodeKind::Start),
                FlowNode::new("t", NodeKind::TableRef("t".into())),
                FlowNode::new("end", NodeKind::End),
            ],
            links: vec![Link::new("start", "t"), Link::new("t", "end")],
        },
    };
    assert_valid(&model);
    model
}

pub fn assert_valid(model: &XttModel) {
    let errors: Vec<_> = validate_model(model).into_iter().filter(|d| d.is_error()).collect();
    assert!(errors.is_empty(), "generator produced an invalid model: {errors:?}");
}

/// Attributes shared by the random flow models.
pub fn flow_attributes() -> Vec<AttributeDef> {
    vec![
        AttributeDef::new("a", Domain::Symbolic(vec!["x".into(), "y".into()])),
        AttributeDef::new("b", Domain::IntRange { lo: 0, hi: 3 }),
        AttributeDef::new("c", Domain::Symbolic(vec!["p".into(), "q".into(), "r".into()])),
    ]
}

/// Every valuation over `attributes` where each attribute is bound to one of
/// its values or left unknown.
pub fn all_partial_valuations(attributes: &[AttributeDef]) -> Vec<Valuation> {
    let mut out = vec![Valuation::new()];
    for attr in attributes {
        let mut next = Vec::new();
        for v in &out {
            next.push(v.clone());
            for value in attr.domain.values() {
                next.push(v.clone().with(attr.name.clone(), value));
            }
        }
        out = next;
    }
    out
}

fn random_flow_table(rng: &mut StdRng, name: &str, attributes: &[AttributeDef], exportable: bool) -> XttTable {
    let decision = &attributes[rng.gen_range(0..attributes.len())];
    let mut conditions: Vec<&AttributeDef> = attributes
        .iter()
        .filter(|a| a.name != decision.name && rng.gen_bool(0.6))
        .collect();
    conditions.shuffle(rng);
    let nrows = rng.gen_range(1..=3);
    XttTable {
        name: name.into(),
        condition_columns: conditions.iter().map(|a| a.name.clone()).collect(),
        decision_columns: vec![decision.name.clone()],
        rows: random_rows(rng, &conditions, decision, nrows, exportable),
        match_policy: MatchPolicy::AllHit,
    }
}

/// A random acyclic flow over 1..=4 tables plus up to two splits and two
/// joins. Tables may get several incoming and outgoing links.
pub fn random_flow_model(rng: &mut StdRng, exportable: bool) -> XttModel {
    let attributes = flow_attributes();
    let ntables = rng.gen_range(1..=4);
    let tables: Vec<XttTable> = (0..ntables)
        .map(|i| random_flow_table(rng, &format!("T{i}"), &attributes, exportable))
        .collect();

    let mut inner: Vec<FlowNode> = tables
        .iter()
        .map(|t| FlowNode::new(t.name.clone(), NodeKind::TableRef(t.name.clone())))
        .collect();
    for i in 0..rng.gen_range(0..=2) {
        let kind = if rng.gen_bool(0.5) {
            SplitKind::And
        } else {
            SplitKind::Xor
        };
        inner.push(FlowNode::new(format!("S{i}"), NodeKind::Split(kind)));
    }
    for i in 0..rng.gen_range(0..=2) {
        let kind = match rng.gen_range(0..3) {
            0 => JoinKind::And,
            1 => JoinKind::Or,
            _ => JoinKind::NOfM(1),
        };
        inner.push(FlowNode::new(format!("J{i}"), NodeKind::Join(kind)));
    }
    inner.shuffle(rng);
    let mut nodes = vec![FlowNode::new("start", NodeKind::Start)];
    nodes.extend(inner);
    nodes.push(FlowNode::new("end", NodeKind::End));

    let last = nodes.len() - 1;
    let mut links: Vec<Link> = Vec::new();
    for i in 0..last {
        let later: Vec<usize> = (i + 1..=last).collect();
        let wanted = match nodes[i].kind {
            NodeKind::Split(_) => rng.gen_range(2..=3),
            _ => rng.gen_range(1..=2),
        };
        let mut targets: Vec<usize> = later.choose_multiple(rng, wanted.min(later.len())).copied().collect();
        targets.sort_unstable();
        let xor = matches!(nodes[i].kind, NodeKind::Split(SplitKind::Xor));
        let with_default = rng.gen_bool(0.5);
        for (k, &j) in targets.iter().enumerate() {
            let mut link = Link::new(nodes[i].id.clone(), nodes[j].id.clone());
            if xor {
                if k + 1 == targets.len() && with_default {
                    link = link.default_branch();
                } else {
                    let attr = &attributes[rng.gen_range(0..attributes.len())];
                    link = link.guarded(vec![random_exportable_condition(rng, attr)]);
                }
            }
            links.push(link);
        }
    }
    for j in 1..=last {
        if !links.iter().any(|l| l.to == nodes[j].id) {
            let i = rng.gen_range(0..j);
            let xor = matches!(nodes[i].kind, NodeKind::Split(SplitKind::Xor));
            let mut link = Link::new(nodes[i].id.clone(), nodes[j].id.clone());
            if xor {
                let attr = &attributes[rng.gen_range(0..attributes.len())];
                link = link.guarded(vec![random_exportable_condition(rng, attr)]);
            }
            links.push(link);
        }
    }
    // n-of-m thresholds depend on the final in-degree.
    for node in nodes.iter_mut() {
        if let NodeKind::Join(JoinKind::NOfM(n)) = &mut node.kind {
            let indeg = links.iter().filter(|l| l.to == node.id).count() as u32;
            *n = rng.gen_range(1..=indeg.max(1));
        }
    }

    let model = XttModel {
        name: "flow".into(),
        attributes,
        tables,
        flow: FlowGraph { nodes, links },
    };
    assert_valid(&model);
    model
}

/// start -> split -> m branches of 1..=2 tables -> join(kind) -> end, with a
/// random split kind. `join` is applied to the join node.
pub fn random_diamond(rng: &mut StdRng) -> (XttModel, usize) {
    let attributes = flow_attributes();
    let m = rng.gen_range(2..=5);
    let split_kind = if rng.gen_bool(0.7) {
        SplitKind::And
    } else {
        SplitKind::Xor
    };
    let mut tables = Vec::new();
    let mut nodes = vec![
        FlowNode::new("start", NodeKind::Start),
        FlowNode::new("split", NodeKind::Split(split_kind)),
    ];
    let mut links = vec![Link::new("start", "split")];
    for b in 0..m {
        let depth = rng.gen_range(1..=2);
        let mut prev = "split".to_string();
        for d in 0..depth {
            let name = format!("B{b}_{d}");
            tables.push(random_flow_table(rng, &name, &attributes, false));
            nodes.push(FlowNode::new(name.clone(), NodeKind::TableRef(name.clone())));
            let mut link = Link::new(prev.clone(), name.clone());
            if prev == "split" && split_kind == SplitKind::Xor {
                if b + 1 == m {
                    link = link.default_branch();
                } else {
                    let attr = &attributes[rng.gen_range(0..attributes.len())];
                    link = link.guarded(vec![random_exportable_condition(rng, attr)]);
                }
            }
            links.push(link);
            prev = name;
        }
        links.push(Link::new(prev, "join"));
    }
    nodes.push(FlowNode::new("join", NodeKind::Join(JoinKind::And)));
    nodes.push(FlowNode::new("end", NodeKind::End));
    links.push(Link::new("join", "end"));
    let model = XttModel {
        name: "diamond".into(),
        attributes,
        tables,
        flow: FlowGraph { nodes, links },
    };
    assert_valid(&model);
    (model, m)
}

pub fn with_join(model: &XttModel, kind: JoinKind) -> XttModel {
    let mut m = model.clone();
    for node in m.flow.nodes.iter_mut().filter(|n| n.id == "join") {
        node.kind = NodeKind::Join(kind);
    }
    m
}

/// A random partial valuation over the model's attributes.
pub fn random_valuation(rng: &mut StdRng, model: &XttModel) -> Valuation {
    let mut v = Valuation::new();
    for attr in &model.attributes {
        if rng.gen_bool(0.8) {
            v.set(attr.name.clone(), pick(rng, &attr.domain));
        }
    }
    v
}
