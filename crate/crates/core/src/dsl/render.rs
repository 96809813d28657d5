//! Canonical pretty-printer.
//!
//! Output is one clause per line with two-space indentation per nesting
//! level. Strings are always double-quoted and numbers use the shortest
//! decimal form that parses back to the same value.

use std::collections::HashMap;
use std::fmt::Write;

use super::ast::*;

/// Comment lines to attach to individual column mappings, keyed by
/// (export index, mapping index). Emitted as `# ...` lines at the top of the
/// mapping's rule block.
#[derive(Clone, Debug, Default)]
pub struct Annotations {
    pub column_notes: HashMap<(usize, usize), Vec<String>>,
}

pub fn render_script(script: &Script) -> String {
    render_annotated(script, &Annotations::default())
}

pub fn render_annotated(script: &Script, notes: &Annotations) -> String {
    let mut out = String::new();
    let mut export_idx = 0;
    for (i, action) in script.actions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match action {
            Action::Inspect(a) => {
                let _ = writeln!(
                    out,
                    "inspect {} into {}",
                    quote(&a.input_path),
                    quote(&a.output_path)
                );
            }
            Action::Import(a) => render_import(&mut out, a),
            Action::Export(a) => {
                render_export(&mut out, a, export_idx, notes);
                export_idx += 1;
            }
        }
    }
    out
}

fn render_import(out: &mut String, a: &ImportAction) {
    if a.global_filters.is_empty() {
        let _ = writeln!(out, "import {} {{ }}", quote(&a.input_path));
        return;
    }
    let _ = writeln!(out, "import {} {{", quote(&a.input_path));
    for f in &a.global_filters {
        let clause = match &f.kind {
            GlobalFilterKind::SkipEmptyRows => "skip empty rows".to_string(),
            GlobalFilterKind::SkipMalformedRows => "skip malformed rows".to_string(),
            GlobalFilterKind::SkipLiteral(s) => format!("skip {}", quote(s)),
            GlobalFilterKind::SkipRegex(s) => format!("skip regex {}", quote(s)),
        };
        let _ = writeln!(out, "  {clause}");
    }
    out.push_str("}\n");
}

fn render_export(out: &mut String, a: &ExportAction, idx: usize, notes: &Annotations) {
    let _ = writeln!(out, "export {} {{", quote(&a.output_path));
    for (m_idx, m) in a.mappings.iter().enumerate() {
        let mut head = format!("  column {}", quote(&m.source_name));
        if m.target_name != m.source_name {
            let _ = write!(head, " as {}", quote(&m.target_name));
        }
        let comments = notes.column_notes.get(&(idx, m_idx));
        if m.rules.is_empty() && comments.is_none() {
            let _ = writeln!(out, "{head} {{ }}");
            continue;
        }
        let _ = writeln!(out, "{head} {{");
        for line in comments.into_iter().flatten() {
            let _ = writeln!(out, "    # {line}");
        }
        render_rules(out, &m.rules, 2);
        out.push_str("  }\n");
    }
    for r in &a.row_rules {
        match &r.kind {
            RowRuleKind::SortBy { column, ascending } => {
                let dir = if *ascending { "ascending" } else { "descending" };
                let _ = writeln!(out, "  sort by {} {dir}", quote(column));
            }
            RowRuleKind::SkipOutOfOrder { column } => {
                let _ = writeln!(out, "  skip out of order by {}", quote(column));
            }
        }
    }
    if let Some(c) = &a.cut {
        let _ = writeln!(
            out,
            "  cut on column {} contains {} into {}",
            quote(&c.column),
            quote(&c.marker),
            quote(&c.prefix)
        );
    }
    out.push_str("}\n");
}

fn render_rules(out: &mut String, rules: &[ColumnRule], depth: usize) {
    let pad = "  ".repeat(depth);
    for r in rules {
        match &r.kind {
            ColumnRuleKind::Conditional(cond, inner) => {
                let head = format!(
                    "{pad}when {} {} {}",
                    quote(&cond.column),
                    cond.comparator.symbol(),
                    render_literal(&cond.literal)
                );
                if inner.is_empty() {
                    let _ = writeln!(out, "{head} {{ }}");
                } else {
                    let _ = writeln!(out, "{head} {{");
                    render_rules(out, inner, depth + 1);
                    let _ = writeln!(out, "{pad}}}");
                }
            }
            kind => {
                let _ = writeln!(out, "{pad}{}", render_simple_rule(kind));
            }
        }
    }
}

pub(crate) fn render_simple_rule(kind: &ColumnRuleKind) -> String {
    match kind {
        ColumnRuleKind::EnforceType(t) => format!("enforce type {t}"),
        ColumnRuleKind::ValidRange(r) => format!("valid range {}", render_range(r)),
        ColumnRuleKind::Impute(s) => format!("impute {}", render_strategy(*s)),
        ColumnRuleKind::StripLiteral(s) => format!("skip {}", quote(s)),
        ColumnRuleKind::StripRegex(s) => format!("skip regex {}", quote(s)),
        ColumnRuleKind::Conditional(c, _) => format!(
            "when {} {} {}",
            quote(&c.column),
            c.comparator.symbol(),
            render_literal(&c.literal)
        ),
    }
}

pub fn render_range(r: &Range) -> String {
    format!(
        "{}{}, {}{}",
        if r.low_inclusive { '[' } else { '(' },
        render_number(r.low),
        render_number(r.high),
        if r.high_inclusive { ']' } else { ')' }
    )
}

fn render_strategy(s: ImputeStrategy) -> &'static str {
    match s {
        ImputeStrategy::Mean => "mean",
        ImputeStrategy::Last => "last",
        ImputeStrategy::Next => "next",
        ImputeStrategy::Interpolation(InterpolationKind::Linear) => "interpolation linear",
        ImputeStrategy::Interpolation(InterpolationKind::Nearest) => "interpolation nearest",
    }
}

fn render_literal(l: &Literal) -> String {
    match l {
        Literal::Text(s) => quote(s),
        Literal::Number(v) => render_number(*v),
    }
}

/// Shortest decimal that round-trips; `Display` for `f64` never uses an
/// exponent, so the result is always valid literal syntax.
pub fn render_number(v: f64) -> String {
    format!("{v}")
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_script;

    #[test]
    fn canonical_import() {
        let s = Script {
            actions: vec![Action::Import(ImportAction {
                input_path: "in.csv".into(),
                global_filters: vec![GlobalFilter {
                    kind: GlobalFilterKind::SkipEmptyRows,
                    span: Span::default(),
                }],
                span: Span::default(),
            })],
        };
        assert_eq!(render_script(&s), "import \"in.csv\" {\n  skip empty rows\n}\n");
    }

    #[test]
    fn closed_range_uses_square_brackets() {
        assert_eq!(render_range(&Range::closed(4.9, 5.1)), "[4.9, 5.1]");
        let half_open = Range {
            low_inclusive: false,
            ..Range::closed(4.9, 5.1)
        };
        assert_eq!(render_range(&half_open), "(4.9, 5.1]");
    }

    #[test]
    fn quoting_escapes_quote_and_backslash() {
        assert_eq!(quote(r#"a"b\c"#), r#""a\"b\\c""#);
    }

    #[test]
    fn awkward_numbers_reparse_exactly() {
        for v in [1e300, -0.0, 5e-324, 0.1 + 0.2, -123456.789] {
            let src = format!(
                "import \"a\" {{ }} export \"b\" {{ column \"x\" {{ valid range [{}, 1] }} }}",
                render_number(v)
            );
            let s = parse_script(&src).unwrap();
            let export = s.exports().next().unwrap();
            match &export.mappings[0].rules[0].kind {
                ColumnRuleKind::ValidRange(r) => assert_eq!(r.low.to_bits(), v.to_bits()),
                other => panic!("{other:?}"),
            };
        }
    }
}
