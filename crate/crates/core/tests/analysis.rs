mod common;

use proptest::prelude::*;
use rand::Rng;
use xtt_core::analysis::{Analyzer, DEFAULT_STATE_BOUND};
use xtt_core::infer::row_matches;
use xtt_core::samples::thermostat;
use xtt_core::{
    check_completeness, check_overlap, check_reachability, oracle_equivalence, plan_decomposition, AttributeDef,
    ConditionCell, DecisionCell, Domain, FlowNode, Link, MatchPolicy, NodeKind, Operator, RuleRow, Valuation, Value,
    XttModel, XttTable,
};

#[test]
fn thermostat_is_complete_and_disjoint() {
    let m = thermostat();
    assert_eq!(check_completeness(&m.tables[0], &m).unwrap(), vec![]);
    assert_eq!(check_overlap(&m.tables[0], &m).unwrap(), vec![]);
    assert_eq!(check_reachability(&m), Vec::<String>::new());
    let report = Analyzer::default().analyze_table(&m.tables[0], &m).unwrap();
    assert_eq!(report.state_space_size, 48);
    assert!(report.is_clean());
    assert_eq!(report.render(), "");
}

#[test]
fn missing_weekend_row() {
    let mut m = thermostat();
    m.tables[0].rows.remove(1);
    m.tables[0].renumber();
    let witnesses = check_completeness(&m.tables[0], &m).unwrap();
    assert_eq!(witnesses.len(), 24);
    assert!(witnesses.iter().all(|w| w.get("today") == Some(&Value::sym("weekend"))));
    let hours: Vec<i64> = witnesses
        .iter()
        .map(|w| w.get("hour").unwrap().as_int().unwrap())
        .collect();
    assert_eq!(hours, (0..24).collect::<Vec<_>>());
}

#[test]
fn all_any_row_is_complete() {
    let mut m = thermostat();
    let t = &mut m.tables[0];
    t.rows = vec![RuleRow {
        row_id: 1,
        conditions: vec![ConditionCell::any("today"), ConditionCell::any("hour")],
        decisions: vec![DecisionCell::new("operation", "bizhrs")],
    }];
    assert!(check_completeness(&m.tables[0], &m).unwrap().is_empty());
}

#[test]
fn duplicate_rows_overlap_once_per_pair() {
    let mut m = thermostat();
    let dup = m.tables[0].rows[0].clone();
    m.tables[0].rows.push(dup.clone());
    m.tables[0].rows.push(dup);
    m.tables[0].renumber();
    let overlaps = check_overlap(&m.tables[0], &m).unwrap();
    let pairs: Vec<(usize, usize)> = overlaps.iter().map(|o| (o.row_a, o.row_b)).collect();
    assert_eq!(pairs, [(1, 5), (1, 6), (5, 6)]);
    // Smallest state for `today = workday, hour > 17` with today declared first.
    let expected = Valuation::new().with("today", "workday").with("hour", 18);
    assert!(overlaps.iter().all(|o| o.witness == expected));
}

#[test]
fn overlapping_ranges_report_smallest_witness() {
    let mut m = thermostat();
    m.tables[0].condition_columns = vec!["hour".into()];
    m.tables[0].rows = vec![
        RuleRow {
            row_id: 1,
            conditions: vec![ConditionCell::cmp("hour", Operator::Gt, 10)],
            decisions: vec![DecisionCell::new("operation", "bizhrs")],
        },
        RuleRow {
            row_id: 2,
            conditions: vec![ConditionCell::between("hour", 9, 17)],
            decisions: vec![DecisionCell::new("operation", "nbizhrs")],
        },
    ];
    let overlaps = check_overlap(&m.tables[0], &m).unwrap();
    assert_eq!(overlaps.len(), 1);
    assert_eq!(overlaps[0].witness, Valuation::new().with("hour", 11));
}

#[test]
fn mistyped_plan_bound_is_caught() {
    let m = thermostat();
    let mut plan = plan_decomposition(&m.tables[0]).unwrap();
    assert!(oracle_equivalence(&m.tables[0], &plan, &m).unwrap().equivalent);
    plan.cells[3][4] = Some(Value::Int(16));
    let eq = oracle_equivalence(&m.tables[0], &plan, &m).unwrap();
    assert!(!eq.equivalent);
    assert_eq!(
        eq.witness,
        Some(Valuation::new().with("today", "workday").with("hour", 17))
    );
}

#[test]
fn decision_only_table_is_trivially_equivalent() {
    let mut m = thermostat();
    let t = &mut m.tables[0];
    t.condition_columns.clear();
    t.rows.truncate(1);
    t.rows[0].conditions.clear();
    let plan = plan_decomposition(&m.tables[0]).unwrap();
    assert!(oracle_equivalence(&m.tables[0], &plan, &m).unwrap().equivalent);
    assert_eq!(check_completeness(&m.tables[0], &m).unwrap(), vec![]);
}

#[test]
fn orphan_tables_are_unreachable() {
    let mut m = thermostat();
    let mut orphan = m.tables[0].clone();
    orphan.name = "orphan".into();
    m.tables.push(orphan);
    m.flow
        .nodes
        .push(FlowNode::new("orphan", NodeKind::TableRef("orphan".into())));
    m.flow.links.push(Link::new("orphan", "end"));
    assert_eq!(check_reachability(&m), ["orphan"]);
}

#[test]
fn state_space_bound() {
    let mut m = thermostat();
    m.attributes[1].domain = Domain::IntRange { lo: 0, hi: 2_000_000 };
    for row in &mut m.tables[0].rows {
        row.conditions[1] = ConditionCell::any("hour");
    }
    let err = check_completeness(&m.tables[0], &m).unwrap_err();
    assert_eq!(err.code(), "state-space-too-large");
    assert!(Analyzer::with_bound(10)
        .check_overlap(&thermostat().tables[0], &thermostat())
        .is_err());
    assert!(Analyzer::with_bound(48)
        .check_overlap(&thermostat().tables[0], &thermostat())
        .is_ok());
    assert_eq!(Analyzer::default().state_bound, DEFAULT_STATE_BOUND);
    assert_eq!(DEFAULT_STATE_BOUND, 1_000_000);
}

/// Every state of the table's condition space in lexicographic order, with
/// attributes compared in declaration order.
fn states(m: &XttModel, t: &XttTable) -> Vec<Valuation> {
    let mut out = vec![Valuation::new()];
    for attr in m.attributes.iter().filter(|a| t.condition_columns.contains(&a.name)) {
        out = out
            .into_iter()
            .flat_map(|v| {
                attr.domain
                    .values()
                    .into_iter()
                    .map(move |x| v.clone().with(attr.name.clone(), x))
            })
            .collect();
    }
    out
}

fn split_table(rng: &mut rand::rngs::StdRng) -> XttModel {
    let lo = rng.gen_range(-5..=5);
    let hi = lo + rng.gen_range(1..=11);
    let k = rng.gen_range(lo..hi);
    let attrs = vec![
        AttributeDef::new("c", Domain::IntRange { lo, hi }),
        AttributeDef::new("s", Domain::Symbolic(vec!["u".into(), "w".into()])),
        AttributeDef::new("d", Domain::Symbolic(vec!["yes".into(), "no".into()])),
    ];
    let row = |id, cell| RuleRow {
        row_id: id,
        conditions: vec![ConditionCell::any("s"), cell],
        decisions: vec![DecisionCell::new("d", "yes")],
    };
    let mut m = thermostat();
    m.attributes = attrs;
    m.tables = vec![XttTable {
        name: "thermostat".into(),
        condition_columns: vec!["s".into(), "c".into()],
        decision_columns: vec!["d".into()],
        rows: vec![
            row(1, ConditionCell::between("c", lo, k)),
            row(2, ConditionCell::between("c", k + 1, hi)),
        ],
        match_policy: MatchPolicy::AllHit,
    }];
    common::assert_valid(&m);
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn witnesses_reproduce_their_defects(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = common::random_table_model(&mut rng, false);
        let t = &m.tables[0];
        let all = states(&m, t);
        let uncovered: Vec<Valuation> =
            all.iter().filter(|s| !t.rows.iter().any(|r| row_matches(&r.conditions, s))).cloned().collect();
        let witnesses = check_completeness(t, &m).unwrap();
        prop_assert_eq!(&witnesses, &uncovered);
        for o in check_overlap(t, &m).unwrap() {
            prop_assert!(row_matches(&t.row(o.row_a).unwrap().conditions, &o.witness));
            prop_assert!(row_matches(&t.row(o.row_b).unwrap().conditions, &o.witness));
            let first = all.iter().find(|s| {
                row_matches(&t.row(o.row_a).unwrap().conditions, s) && row_matches(&t.row(o.row_b).unwrap().conditions, s)
            });
            prop_assert_eq!(first, Some(&o.witness));
        }
        let report = Analyzer::default().analyze_table(t, &m).unwrap();
        let product: u64 = t.condition_columns.iter().map(|c| m.attribute(c).unwrap().domain.cardinality()).product();
        prop_assert_eq!(report.state_space_size, product);
        prop_assert_eq!(report.state_space_size as usize, all.len());
    }

    #[test]
    fn split_interval_stays_complete_and_disjoint(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = split_table(&mut rng);
        prop_assert!(check_completeness(&m.tables[0], &m).unwrap().is_empty());
        prop_assert!(check_overlap(&m.tables[0], &m).unwrap().is_empty());
    }

    #[test]
    fn random_plans_pass_the_oracle(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = common::random_table_model(&mut rng, true);
        let plan = plan_decomposition(&m.tables[0]).unwrap();
        let eq = oracle_equivalence(&m.tables[0], &plan, &m).unwrap();
        prop_assert!(eq.equivalent, "seed {} witness {:?}", seed, eq.witness);
    }
}
