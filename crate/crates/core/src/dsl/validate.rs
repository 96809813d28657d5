//! Semantic checks that the grammar alone cannot express.

use std::collections::HashMap;
use std::fmt;

use super::ast::*;

/// Deepest allowed nesting of `when` blocks.
pub const MAX_CONDITIONAL_DEPTH: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    DuplicateTarget,
    UnknownColumn,
    NonNumericColumn,
    RangeOrder,
    ConditionalDepth,
    ConflictingRowRules,
    LiteralType,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemanticDiagnostic {
    pub kind: DiagnosticKind,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for SemanticDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.message)
    }
}

/// Returns every semantic problem found; an empty list means the script is
/// safe to execute.
pub fn validate_script(script: &Script) -> Vec<SemanticDiagnostic> {
    let mut diags = Vec::new();
    for export in script.exports() {
        check_export(export, &mut diags);
    }
    diags
}

fn diag(diags: &mut Vec<SemanticDiagnostic>, kind: DiagnosticKind, span: Span, message: String) {
    diags.push(SemanticDiagnostic {
        kind,
        span,
        message,
    });
}

fn check_export(export: &ExportAction, diags: &mut Vec<SemanticDiagnostic>) {
    let mut seen: HashMap<&str, Span> = HashMap::new();
    for m in &export.mappings {
        if let Some(first) = seen.get(m.target_name.as_str()) {
            diag(
                diags,
                DiagnosticKind::DuplicateTarget,
                m.span,
                format!(
                    "output column {:?} is already defined at {first}",
                    m.target_name
                ),
            );
        } else {
            seen.insert(&m.target_name, m.span);
        }
    }

    for m in &export.mappings {
        check_rules(export, &m.rules, &[&m.rules], 1, diags);
    }

    let mut sorted = Vec::new();
    let mut skipped = Vec::new();
    for r in &export.row_rules {
        let column = r.kind.column();
        match export.mapping(column) {
            None => diag(
                diags,
                DiagnosticKind::UnknownColumn,
                r.span,
                format!("row rule refers to unknown output column {column:?}"),
            ),
            Some(m) if !m.enforced_type().is_some_and(DataType::is_numeric) => diag(
                diags,
                DiagnosticKind::NonNumericColumn,
                r.span,
                format!("row rule on {column:?} requires `enforce type real` or `enforce type int`"),
            ),
            Some(_) => {}
        }
        match &r.kind {
            RowRuleKind::SortBy { column, .. } => sorted.push((column.as_str(), r.span)),
            RowRuleKind::SkipOutOfOrder { column } => skipped.push((column.as_str(), r.span)),
        }
    }
    for (column, span) in &skipped {
        if sorted.iter().any(|(c, _)| c == column) {
            diag(
                diags,
                DiagnosticKind::ConflictingRowRules,
                *span,
                format!("column {column:?} is both sorted and filtered for out-of-order rows"),
            );
        }
    }

    if let Some(cut) = &export.cut {
        if export.mapping(&cut.column).is_none() {
            diag(
                diags,
                DiagnosticKind::UnknownColumn,
                cut.span,
                format!("cut refers to unknown output column {:?}", cut.column),
            );
        }
    }
}

/// Effective enforced type for a rule nested inside `scopes` (outermost
/// first): the innermost scope with an `enforce type` decides.
fn scope_type(scopes: &[&[ColumnRule]]) -> Option<DataType> {
    scopes.iter().rev().find_map(|rules| {
        rules.iter().rev().find_map(|r| match r.kind {
            ColumnRuleKind::EnforceType(t) => Some(t),
            _ => None,
        })
    })
}

fn check_rules(
    export: &ExportAction,
    rules: &[ColumnRule],
    scopes: &[&[ColumnRule]],
    depth: usize,
    diags: &mut Vec<SemanticDiagnostic>,
) {
    let numeric = scope_type(scopes).is_some_and(DataType::is_numeric);
    for r in rules {
        match &r.kind {
            ColumnRuleKind::ValidRange(range) => {
                if !numeric {
                    diag(
                        diags,
                        DiagnosticKind::NonNumericColumn,
                        r.span,
                        "`valid range` requires a numeric `enforce type`".into(),
                    );
                }
                let degenerate_open = range.low == range.high
                    && !(range.low_inclusive && range.high_inclusive);
                if range.low > range.high || degenerate_open {
                    diag(
                        diags,
                        DiagnosticKind::RangeOrder,
                        r.span,
                        format!(
                            "range {} is empty: lower bound exceeds upper bound",
                            super::render::render_range(range)
                        ),
                    );
                }
            }
            ColumnRuleKind::Impute(_) if !numeric => diag(
                diags,
                DiagnosticKind::NonNumericColumn,
                r.span,
                "`impute` requires a numeric `enforce type`".into(),
            ),
            ColumnRuleKind::Conditional(cond, inner) => {
                if depth > MAX_CONDITIONAL_DEPTH {
                    diag(
                        diags,
                        DiagnosticKind::ConditionalDepth,
                        r.span,
                        format!("`when` blocks nest deeper than {MAX_CONDITIONAL_DEPTH} levels"),
                    );
                }
                check_condition(export, cond, diags);
                let mut nested = scopes.to_vec();
                nested.push(inner);
                check_rules(export, inner, &nested, depth + 1, diags);
            }
            _ => {}
        }
    }
}

fn check_condition(export: &ExportAction, cond: &Condition, diags: &mut Vec<SemanticDiagnostic>) {
    let Some(m) = export.mapping(&cond.column) else {
        diag(
            diags,
            DiagnosticKind::UnknownColumn,
            cond.span,
            format!("condition refers to unknown output column {:?}", cond.column),
        );
        return;
    };
    if cond.comparator.is_ordering() {
        if !m.enforced_type().is_some_and(DataType::is_numeric) {
            diag(
                diags,
                DiagnosticKind::NonNumericColumn,
                cond.span,
                format!(
                    "comparator `{}` requires column {:?} to be numeric",
                    cond.comparator.symbol(),
                    cond.column
                ),
            );
        }
        if matches!(cond.literal, Literal::Text(_)) {
            diag(
                diags,
                DiagnosticKind::LiteralType,
                cond.span,
                format!("comparator `{}` requires a numeric literal", cond.comparator.symbol()),
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_script;

    fn diags(src: &str) -> Vec<DiagnosticKind> {
        validate_script(&parse_script(src).unwrap())
            .into_iter()
            .map(|d| d.kind)
            .collect()
    }

    #[test]
    fn duplicate_target_names() {
        let d = diags(
            r##"import "a" { } export "b" { column "x" as "v" { } column "y" as "v" { } }"##,
        );
        assert_eq!(d, vec![DiagnosticKind::DuplicateTarget]);
    }

    #[test]
    fn reversed_range() {
        let d = diags(
            r##"import "a" { } export "b" { column "v" { enforce type real valid range [5.1, 4.9] } }"##,
        );
        assert_eq!(d, vec![DiagnosticKind::RangeOrder]);
    }

    #[test]
    fn single_point_range_needs_both_bounds_inclusive() {
        let ok = r##"import "a" { } export "b" { column "v" { enforce type real valid range [5, 5] } }"##;
        assert!(diags(ok).is_empty());
        let bad = r##"import "a" { } export "b" { column "v" { enforce type real valid range [5, 5) } }"##;
        assert_eq!(diags(bad), vec![DiagnosticKind::RangeOrder]);
    }

    #[test]
    fn row_rules_need_numeric_columns() {
        let d = diags(
            r##"import "a" { } export "b" { column "t" { enforce type text } sort by "t" skip out of order by "z" }"##,
        );
        assert_eq!(
            d,
            vec![DiagnosticKind::NonNumericColumn, DiagnosticKind::UnknownColumn]
        );
    }

    #[test]
    fn sort_and_skip_on_same_column_conflict() {
        let d = diags(
            r##"import "a" { } export "b" { column "t" { enforce type real } sort by "t" skip out of order by "t" }"##,
        );
        assert_eq!(d, vec![DiagnosticKind::ConflictingRowRules]);
    }

    #[test]
    fn conditional_depth_limit() {
        let nest = |n: usize| {
            let mut body = String::from("skip \"##\"");
            for _ in 0..n {
                body = format!("when \"c\" contains \"x\" {{ {body} }}");
            }
            format!(r##"import "a" {{ }} export "b" {{ column "c" {{ {body} }} }}"##)
        };
        assert!(diags(&nest(4)).is_empty());
        assert_eq!(diags(&nest(5)), vec![DiagnosticKind::ConditionalDepth]);
    }

    #[test]
    fn ordering_condition_on_text_column() {
        let d = diags(
            r##"import "a" { } export "b" { column "u" { enforce type uart } column "v" { when "u" < 3 { skip "#" } } }"##,
        );
        assert_eq!(d, vec![DiagnosticKind::NonNumericColumn]);
    }

    #[test]
    fn impute_inside_conditional_sees_outer_enforcement() {
        let src = r##"import "a" { } export "b" {
            column "u" { enforce type uart }
            column "v" { enforce type real when "u" contains "ID_7" { impute mean } }
        }"##;
        assert!(diags(src).is_empty());
        let src = r##"import "a" { } export "b" { column "v" { impute mean } }"##;
        assert_eq!(diags(src), vec![DiagnosticKind::NonNumericColumn]);
    }

    #[test]
    fn diagnostics_point_inside_offending_clause() {
        let src = "import \"a\" { }\nexport \"b\" {\n  column \"v\" {\n    enforce type real\n    valid range [2, 1]\n  }\n}\n";
        let d = validate_script(&parse_script(src).unwrap());
        assert_eq!((d[0].span.line, d[0].span.column), (5, 5));
    }
}
