//! Generators and property checks shared by the test suites.
//!
//! Enabled by the `testing` feature. Each `check_*` function asserts one
//! property for one generated input and is meant to be driven by proptest.

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use crate::dsl::*;
use crate::sanitise::{enforce_range, execute_export, impute, in_order_rows, sort_rows, OpError};
use crate::table::{to_csv_string, CellValue, ColumnSchema, Table};

// ---------------------------------------------------------------------------
// Scripts

fn span() -> Span {
    Span::default()
}

fn name() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[A-Za-z][A-Za-z0-9 _()]{0,12}",
        1 => "[ -~\n\t]{1,8}",
        1 => Just("Arc Main Voltage (V)".to_string()),
    ]
}

fn number() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-1000i32..1000).prop_map(f64::from),
        (-1e6f64..1e6),
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ]
}

fn regex_pattern() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["[#@$]", "^ERR.*$", "\\s+", "[a-z]+", "x{2,3}", "\"|'"])
        .prop_map(str::to_string)
}

fn data_type() -> impl Strategy<Value = DataType> {
    prop::sample::select(vec![
        DataType::Int,
        DataType::Bool,
        DataType::Real,
        DataType::Uart,
        DataType::Text,
    ])
}

fn range() -> impl Strategy<Value = Range> {
    (number(), number(), any::<bool>(), any::<bool>()).prop_map(|(low, high, li, hi)| Range {
        low,
        low_inclusive: li,
        high,
        high_inclusive: hi,
    })
}

fn strategy() -> impl Strategy<Value = ImputeStrategy> {
    prop::sample::select(vec![
        ImputeStrategy::Mean,
        ImputeStrategy::Last,
        ImputeStrategy::Next,
        ImputeStrategy::Interpolation(InterpolationKind::Linear),
        ImputeStrategy::Interpolation(InterpolationKind::Nearest),
    ])
}

fn condition() -> impl Strategy<Value = Condition> {
    let comparator = prop::sample::select(vec![
        Comparator::Eq,
        Comparator::Ne,
        Comparator::Lt,
        Comparator::Le,
        Comparator::Gt,
        Comparator::Ge,
        Comparator::Contains,
    ]);
    let literal = prop_oneof![name().prop_map(Literal::Text), number().prop_map(Literal::Number)];
    (name(), comparator, literal).prop_map(|(column, comparator, literal)| Condition {
        column,
        comparator,
        literal,
        span: span(),
    })
}

fn simple_rule() -> impl Strategy<Value = ColumnRuleKind> {
    prop_oneof![
        data_type().prop_map(ColumnRuleKind::EnforceType),
        range().prop_map(ColumnRuleKind::ValidRange),
        strategy().prop_map(ColumnRuleKind::Impute),
        name().prop_map(ColumnRuleKind::StripLiteral),
        regex_pattern().prop_map(ColumnRuleKind::StripRegex),
    ]
}

fn column_rule() -> impl Strategy<Value = ColumnRule> {
    let leaf = simple_rule().prop_map(|kind| ColumnRule { kind, span: span() });
    leaf.prop_recursive(3, 24, 4, |inner| {
        (condition(), prop::collection::vec(inner, 0..4)).prop_map(|(c, rules)| ColumnRule {
            kind: ColumnRuleKind::Conditional(c, rules),
            span: span(),
        })
    })
}

fn mapping() -> impl Strategy<Value = ColumnMapping> {
    (name(), prop::option::of(name()), prop::collection::vec(column_rule(), 0..4)).prop_map(
        |(source_name, target, rules)| ColumnMapping {
            target_name: target.unwrap_or_else(|| source_name.clone()),
            source_name,
            rules,
            span: span(),
        },
    )
}

fn row_rule() -> impl Strategy<Value = RowRule> {
    prop_oneof![
        (name(), any::<bool>()).prop_map(|(column, ascending)| RowRuleKind::SortBy { column, ascending }),
        name().prop_map(|column| RowRuleKind::SkipOutOfOrder { column }),
    ]
    .prop_map(|kind| RowRule { kind, span: span() })
}

fn cut() -> impl Strategy<Value = CutRule> {
    (name(), name(), prop_oneof![Just(String::new()), name()]).prop_map(|(column, marker, prefix)| CutRule {
        column,
        marker,
        prefix,
        span: span(),
    })
}

fn export() -> impl Strategy<Value = ExportAction> {
    (
        name(),
        prop::collection::vec(mapping(), 0..4),
        prop::collection::vec(row_rule(), 0..3),
        prop::option::of(cut()),
    )
        .prop_map(|(output_path, mappings, row_rules, cut)| ExportAction {
            output_path,
            mappings,
            row_rules,
            cut,
            span: span(),
        })
}

fn import() -> impl Strategy<Value = ImportAction> {
    let filter = prop_oneof![
        Just(GlobalFilterKind::SkipEmptyRows),
        Just(GlobalFilterKind::SkipMalformedRows),
        name().prop_map(GlobalFilterKind::SkipLiteral),
        regex_pattern().prop_map(GlobalFilterKind::SkipRegex),
    ]
    .prop_map(|kind| GlobalFilter { kind, span: span() });
    (name(), prop::collection::vec(filter, 0..4)).prop_map(|(input_path, global_filters)| ImportAction {
        input_path,
        global_filters,
        span: span(),
    })
}

/// Structurally well-formed scripts: at least one action, at most one
/// `inspect`, one `import` preceding every `export`, at most one `cut` per
/// export.
pub fn arb_script() -> impl Strategy<Value = Script> {
    (
        prop::option::of((name(), name())),
        any::<bool>(),
        prop::option::of(import()),
        prop::collection::vec(export(), 0..3),
    )
        .prop_map(|(inspect, inspect_first, import, exports)| {
            let mut actions = Vec::new();
            let inspect = inspect.map(|(input_path, output_path)| {
                Action::Inspect(InspectAction {
                    input_path,
                    output_path,
                    span: span(),
                })
            });
            if inspect_first {
                actions.extend(inspect.clone());
            }
            if let Some(i) = import {
                actions.push(Action::Import(i));
                actions.extend(exports.into_iter().map(Action::Export));
            }
            if !inspect_first || actions.is_empty() {
                actions.extend(inspect);
            }
            if actions.is_empty() {
                actions.push(Action::Inspect(InspectAction {
                    input_path: "in.csv".into(),
                    output_path: "out.cps".into(),
                    span: span(),
                }));
            }
            Script { actions }
        })
}

/// Mostly-plausible script text: keyword and punctuation soup, with the odd
/// stray byte.
pub fn arb_source() -> impl Strategy<Value = String> {
    let token = prop_oneof![
        8 => prop::sample::select(vec![
            "import", "export", "inspect", "into", "column", "as", "enforce", "type", "valid",
            "range", "impute", "mean", "last", "next", "interpolation", "linear", "nearest",
            "skip", "regex", "empty", "malformed", "rows", "when", "sort", "by", "ascending",
            "descending", "out", "of", "order", "cut", "on", "contains", "int", "bool", "real",
            "uart", "text", "{", "}", "[", "]", "(", ")", ",", "==", "!=", "<", "<=", ">", ">=",
            "\"a.csv\"", "'x'", "\"[#@$]\"", "\"(\"", "\"\\q\"", "\"", "1.5", "-2", "1e400", "#c\n",
            "\n",
        ]).prop_map(str::to_string),
        1 => "[ -~]{0,3}",
        1 => any::<char>().prop_map(String::from),
    ];
    prop::collection::vec(token, 0..40).prop_map(|t| t.join(" "))
}

/// Parsing never panics; anything that parses is accepted by the validator
/// without panicking and survives a print/parse cycle.
pub fn check_parse_total(src: &str) -> Result<(), TestCaseError> {
    if let Ok(script) = parse_script(src) {
        let _ = validate_script(&script);
        let printed = render_script(&script);
        let again = parse_script(&printed).map_err(|e| TestCaseError::fail(format!("{e}\n{printed}")))?;
        prop_assert_eq!(again, script);
    }
    Ok(())
}

/// `parse(render(ast)) == ast`, and rendering is a fixed point.
pub fn check_round_trip(script: &Script) -> Result<(), TestCaseError> {
    let text = render_script(script);
    let parsed = parse_script(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
    prop_assert_eq!(&parsed, script);
    prop_assert_eq!(render_script(&parsed), text);
    Ok(())
}

// ---------------------------------------------------------------------------
// Engine

/// A column of small numbers (so that ties are common) with some gaps.
pub fn arb_numeric_cells(max_len: usize) -> impl Strategy<Value = Vec<CellValue>> {
    prop::collection::vec(
        prop_oneof![1 => Just(None), 4 => (-5i32..5).prop_map(Some)],
        0..=max_len,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|x| x.map_or(CellValue::Missing, |n| CellValue::number(f64::from(n))))
            .collect()
    })
}

/// Two-column table: `key` holds the given cells, `id` the row number.
pub fn keyed_table(keys: Vec<CellValue>) -> Table {
    let ids = (0..keys.len()).map(|i| CellValue::number(i as f64)).collect();
    Table::new(
        vec![
            ColumnSchema::new("key", DataType::Real),
            ColumnSchema::new("id", DataType::Int),
        ],
        vec![keys, ids],
    )
    .expect("columns have equal length")
}

/// Sorting is stable, orders keys with missing ones last, and permutes rows.
pub fn check_sort_stable(keys: Vec<CellValue>, ascending: bool) -> Result<(), TestCaseError> {
    let t = keyed_table(keys);
    let sorted = sort_rows(&t, 0, ascending).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let k: Vec<Option<f64>> = sorted.column(0).iter().map(CellValue::as_f64).collect();
    let id: Vec<f64> = sorted.column(1).iter().map(|c| c.as_f64().unwrap()).collect();
    for i in 1..k.len() {
        match (k[i - 1], k[i]) {
            (Some(a), Some(b)) => {
                let ordered = if ascending { a <= b } else { a >= b };
                prop_assert!(ordered, "out of order at {}", i);
                if a == b {
                    prop_assert!(id[i - 1] < id[i], "unstable at {}", i);
                }
            }
            (None, Some(_)) => prop_assert!(false, "missing key before a present one"),
            (None, None) => prop_assert!(id[i - 1] < id[i]),
            (Some(_), None) => {}
        }
    }
    let mut ids = id.clone();
    ids.sort_by(f64::total_cmp);
    prop_assert_eq!(ids, (0..k.len()).map(|i| i as f64).collect::<Vec<_>>());
    Ok(())
}

/// `skip out of order` keeps exactly the rows whose key is at least every
/// earlier key, plus rows with a missing key, in their original order.
pub fn check_skip_out_of_order(keys: Vec<CellValue>) -> Result<(), TestCaseError> {
    let t = keyed_table(keys.clone());
    let kept = in_order_rows(&t, 0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let oracle: Vec<usize> = (0..keys.len())
        .filter(|&r| match keys[r].as_f64() {
            None => true,
            Some(k) => keys[..r].iter().filter_map(CellValue::as_f64).all(|e| e <= k),
        })
        .collect();
    prop_assert_eq!(&kept, &oracle);
    let vals: Vec<f64> = kept.iter().filter_map(|&r| keys[r].as_f64()).collect();
    prop_assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    Ok(())
}

/// Boundary behaviour of every imputation strategy: gaps at either end,
/// untouched known values, and the all-missing error.
#[allow(clippy::needless_range_loop)]
pub fn check_impute_boundaries(cells: Vec<CellValue>, strategy: ImputeStrategy) -> Result<(), TestCaseError> {
    let mut out = cells.clone();
    let result = impute(&mut out, strategy, None);
    let known: Vec<usize> = (0..cells.len()).filter(|&i| !cells[i].is_missing()).collect();
    if cells.is_empty() {
        prop_assert!(result.is_ok());
        return Ok(());
    }
    if known.is_empty() {
        prop_assert!(matches!(result, Err(OpError::AllMissing)));
        return Ok(());
    }
    let counts = result.map_err(|e| TestCaseError::fail(e.to_string()))?;
    for &i in &known {
        prop_assert_eq!(&out[i], &cells[i]);
    }
    let (first, last) = (known[0], *known.last().unwrap());
    let v = |i: usize| cells[i].as_f64().unwrap();
    match strategy {
        ImputeStrategy::Last => {
            prop_assert!(out[..first].iter().all(CellValue::is_missing));
            prop_assert_eq!(counts.unfilled, first);
            for i in first..out.len() {
                let src = known.iter().rev().find(|&&k| k <= i).unwrap();
                prop_assert_eq!(out[i].as_f64(), Some(v(*src)));
            }
        }
        ImputeStrategy::Next => {
            prop_assert!(out[last + 1..].iter().all(CellValue::is_missing));
            prop_assert_eq!(counts.unfilled, out.len() - 1 - last);
            for i in 0..=last {
                let src = known.iter().find(|&&k| k >= i).unwrap();
                prop_assert_eq!(out[i].as_f64(), Some(v(*src)));
            }
        }
        ImputeStrategy::Mean => {
            let mean = known.iter().map(|&i| v(i)).sum::<f64>() / known.len() as f64;
            for i in (0..out.len()).filter(|i| cells[*i].is_missing()) {
                let got = out[i].as_f64().unwrap();
                prop_assert!((got - mean).abs() <= 1e-9, "{} vs {}", got, mean);
            }
        }
        ImputeStrategy::Interpolation(kind) => {
            prop_assert!(out.iter().all(|c| !c.is_missing()));
            prop_assert_eq!(counts.extrapolated, first + (out.len() - 1 - last));
            for i in 0..first {
                prop_assert_eq!(out[i].as_f64(), Some(v(first)));
            }
            for i in last + 1..out.len() {
                prop_assert_eq!(out[i].as_f64(), Some(v(last)));
            }
            for w in known.windows(2) {
                let (a, b) = (w[0], w[1]);
                for i in a + 1..b {
                    let got = out[i].as_f64().unwrap();
                    match kind {
                        InterpolationKind::Linear => {
                            let want = v(a) + (v(b) - v(a)) * (i - a) as f64 / (b - a) as f64;
                            prop_assert!((got - want).abs() <= 1e-9, "{} vs {}", got, want);
                            prop_assert!(got >= v(a).min(v(b)) && got <= v(a).max(v(b)));
                        }
                        InterpolationKind::Nearest => {
                            let want = if i - a <= b - i { v(a) } else { v(b) };
                            prop_assert_eq!(got, want);
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Values exactly on a bound survive iff that bound is inclusive; values
/// strictly inside always survive and values outside never do.
pub fn check_range_inclusivity(low: f64, width: f64, low_inclusive: bool, high_inclusive: bool) -> Result<(), TestCaseError> {
    let high = low + width;
    let r = Range {
        low,
        low_inclusive,
        high,
        high_inclusive,
    };
    let probe = [low, high, low + width / 2.0, low - 1.0, high + 1.0];
    let mut cells: Vec<CellValue> = probe.iter().map(|&v| CellValue::number(v)).collect();
    enforce_range(&mut cells, &r).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(!cells[0].is_missing(), low_inclusive);
    prop_assert_eq!(!cells[1].is_missing(), high_inclusive);
    prop_assert!(!cells[2].is_missing());
    prop_assert!(cells[3].is_missing() && cells[4].is_missing());
    Ok(())
}

/// Rules applied to a column whose data is `cells`, with a `when` on the
/// always-present `gate` column wrapped around them if `cond` is given.
fn export_with(rules: Vec<ColumnRule>, cond: Option<Condition>) -> ExportAction {
    let rules = match cond {
        Some(c) => vec![ColumnRule {
            kind: ColumnRuleKind::Conditional(c, rules),
            span: span(),
        }],
        None => rules,
    };
    let column = |n: &str, rules| ColumnMapping {
        source_name: n.into(),
        target_name: n.into(),
        rules,
        span: span(),
    };
    ExportAction {
        output_path: "out.csv".into(),
        mappings: vec![column("gate", Vec::new()), column("x", rules)],
        row_rules: Vec::new(),
        cut: None,
        span: span(),
    }
}

pub fn arb_numeric_rules() -> impl Strategy<Value = Vec<ColumnRule>> {
    let rule = prop_oneof![
        (-5i32..5, 0i32..6, any::<bool>(), any::<bool>()).prop_map(|(lo, w, li, hi)| {
            ColumnRuleKind::ValidRange(Range {
                low: f64::from(lo),
                low_inclusive: li,
                high: f64::from(lo + w),
                high_inclusive: hi,
            })
        }),
        strategy().prop_map(ColumnRuleKind::Impute),
        Just(ColumnRuleKind::EnforceType(DataType::Real)),
    ]
    .prop_map(|kind| ColumnRule { kind, span: span() });
    prop::collection::vec(rule, 0..4).prop_map(|mut rules| {
        rules.insert(
            0,
            ColumnRule {
                kind: ColumnRuleKind::EnforceType(DataType::Real),
                span: span(),
            },
        );
        rules
    })
}

/// A condition matching every row behaves like no condition at all, and one
/// matching no row leaves the column untouched.
pub fn check_conditional_equivalence(cells: Vec<CellValue>, rules: Vec<ColumnRule>) -> Result<(), TestCaseError> {
    let gate = (0..cells.len()).map(|i| CellValue::number(i as f64)).collect();
    let t = Table::new(
        vec![ColumnSchema::from_header("gate"), ColumnSchema::from_header("x")],
        vec![gate, cells],
    )
    .unwrap();
    let cond = |comparator| Condition {
        column: "gate".into(),
        comparator,
        literal: Literal::Number(-1.0),
        span: span(),
    };
    let run = |e: ExportAction| execute_export(&t, &e).map(|o| to_csv_string(&o.table)).map_err(|e| e.to_string());

    let plain = run(export_with(rules.clone(), None));
    let all = run(export_with(rules.clone(), Some(cond(Comparator::Gt))));
    prop_assert_eq!(&all, &plain);

    let none = run(export_with(rules, Some(cond(Comparator::Lt))));
    let identity = run(export_with(Vec::new(), None));
    prop_assert_eq!(none, identity);
    Ok(())
}
