//! The execution engine: runs a script's actions against CSV files.
//!
//! Each export is executed as a fixed sequence of phases:
//!
//! 1. column `skip` filters
//! 2. `enforce type`
//! 3. `valid range`
//! 4. `when` blocks (the condition is evaluated once on entry)
//! 5. `impute`
//! 6. row rules (`sort by`, `skip out of order by`)
//! 7. `cut`
//!
//! Within a phase, rules run in declaration order. Global filters run once
//! for the import, before any export.

mod ops;
mod report;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use ops::{
    apply_global_filters, condition_holds, enforce_range, enforce_type, impute, in_order_rows,
    matching_rows, skip_out_of_order, sort_order, sort_rows, strip_cells, OpError, Stripper,
};
pub use report::{ExportReport, Phase, RuleCounts, RuleTrace, RunReport, SanitiseReport};

use crate::dsl::{
    render_simple_rule, validate_script, Action, ColumnRule, ColumnRuleKind, ExportAction,
    GlobalFilterKind, ImportAction, RowRuleKind, Script, SemanticDiagnostic, Span,
};
use crate::inspect::{self, InspectError};
use crate::segment::{self, SegmentError, SegmentSet};
use crate::table::{read_csv, write_csv, ColumnSchema, MalformedPolicy, ReadOptions, Table, TableError};

#[derive(Debug, Error)]
pub enum EngineErrorKind {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Inspect(#[from] InspectError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error("column {0:?} not found in the imported table")]
    ColumnNotFound(String),
    #[error("column {column:?}: {source}")]
    Op {
        column: String,
        #[source]
        source: OpError,
    },
    #[error("{}", render_diagnostics(.0))]
    Invalid(Vec<SemanticDiagnostic>),
    #[error("script has no import action")]
    NoImport,
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn render_diagnostics(diags: &[SemanticDiagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("\n")
}

/// An engine failure, tagged with the position of the responsible clause.
#[derive(Debug, Error)]
pub struct EngineError {
    pub span: Option<Span>,
    pub kind: EngineErrorKind,
}

impl std::fmt::Display for EngineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.span, &self.kind) {
            (_, EngineErrorKind::Invalid(_)) | (None, _) => write!(f, "{}", self.kind),
            (Some(span), kind) => write!(f, "{span}: {kind}"),
        }
    }
}

impl EngineError {
    fn at(span: Span, kind: impl Into<EngineErrorKind>) -> Self {
        EngineError {
            span: Some(span),
            kind: kind.into(),
        }
    }

    /// True when the failure came from reading or writing files rather than
    /// from the script itself.
    pub fn is_io(&self) -> bool {
        matches!(
            &self.kind,
            EngineErrorKind::Table(_)
                | EngineErrorKind::Write { .. }
                | EngineErrorKind::Inspect(_)
                | EngineErrorKind::Segment(SegmentError::Table(_))
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Relative paths in the script resolve against this directory.
    pub workdir: PathBuf,
    /// Replaces the import's input path.
    pub input_override: Option<PathBuf>,
}

fn resolve(workdir: &Path, p: impl AsRef<Path>) -> PathBuf {
    let p = p.as_ref();
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        workdir.join(p)
    }
}

/// `out/clean.csv` reports to `out/clean.report.txt`.
pub fn report_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    output.with_file_name(format!("{stem}.report.txt"))
}

/// Run every action of a validated script, writing outputs and reports.
pub fn run(script: &Script, opts: &RunOptions) -> Result<RunReport, EngineError> {
    let diags = validate_script(script);
    if !diags.is_empty() {
        return Err(EngineError {
            span: Some(diags[0].span),
            kind: EngineErrorKind::Invalid(diags),
        });
    }

    let mut report = RunReport::default();
    let mut imported: Option<Table> = None;
    for action in &script.actions {
        match action {
            Action::Inspect(a) => {
                let out = resolve(&opts.workdir, &a.output_path);
                inspect::inspect(&resolve(&opts.workdir, &a.input_path), &a.input_path, &out)
                    .map_err(|e| EngineError::at(a.span, e))?;
                report.inspected.push(out);
            }
            Action::Import(a) => {
                let input = match &opts.input_override {
                    Some(p) => resolve(&opts.workdir, p),
                    None => resolve(&opts.workdir, &a.input_path),
                };
                let (table, file_rows, rep) = run_import(a, &input)?;
                report.file_rows = file_rows;
                report.import = rep;
                imported = Some(table);
            }
            Action::Export(a) => {
                let table = imported.as_ref().ok_or(EngineError {
                    span: Some(a.span),
                    kind: EngineErrorKind::NoImport,
                })?;
                report.exports.push(run_export(table, a, &opts.workdir)?);
            }
        }
    }
    Ok(report)
}

/// Read the input and apply the import's global filters. Returns the table,
/// the number of data rows in the file (including skipped malformed rows)
/// and the stage report.
pub fn run_import(
    import: &ImportAction,
    input: &Path,
) -> Result<(Table, usize, SanitiseReport), EngineError> {
    let skip_malformed = import
        .global_filters
        .iter()
        .any(|f| f.kind == GlobalFilterKind::SkipMalformedRows);
    let opts = ReadOptions {
        on_malformed: if skip_malformed {
            MalformedPolicy::Skip
        } else {
            MalformedPolicy::Error
        },
        ..Default::default()
    };
    let (table, read_report) = read_csv(input, &opts).map_err(|e| EngineError::at(import.span, e))?;
    let (filtered, mut report) = filter_import(&table, import);
    let malformed = read_report.malformed();
    if let Some(t) = report
        .trace
        .iter_mut()
        .find(|t| t.rule == "skip malformed rows")
    {
        t.counts.rows_dropped = malformed;
    }
    report.rows_in += malformed;
    Ok((filtered, read_report.rows_read + malformed, report))
}

/// Global filters over an in-memory table.
pub fn filter_import(table: &Table, import: &ImportAction) -> (Table, SanitiseReport) {
    let kinds: Vec<GlobalFilterKind> = import.global_filters.iter().map(|f| f.kind.clone()).collect();
    let (out, counts) = apply_global_filters(table, &kinds);
    let trace = import
        .global_filters
        .iter()
        .zip(counts)
        .map(|(f, counts)| RuleTrace {
            phase: Phase::Global,
            rule: match &f.kind {
                GlobalFilterKind::SkipEmptyRows => "skip empty rows".into(),
                GlobalFilterKind::SkipMalformedRows => "skip malformed rows".into(),
                GlobalFilterKind::SkipLiteral(s) => format!("skip {}", crate::dsl::quote(s)),
                GlobalFilterKind::SkipRegex(s) => format!("skip regex {}", crate::dsl::quote(s)),
            },
            column: None,
            span: f.span,
            counts,
            dropped_rows: Vec::new(),
        })
        .collect();
    let report = SanitiseReport {
        rows_in: table.row_count(),
        rows_out: out.row_count(),
        trace,
    };
    (out, report)
}

/// The result of executing an export in memory.
#[derive(Clone, Debug)]
pub struct ExportOutcome {
    pub table: Table,
    pub report: SanitiseReport,
    pub segments: Option<SegmentSet>,
}

struct ExportRun<'a> {
    export: &'a ExportAction,
    table: Table,
    trace: Vec<RuleTrace>,
}

impl ExportRun<'_> {
    fn record(&mut self, phase: Phase, rule: &ColumnRule, column: usize, counts: RuleCounts) {
        self.trace.push(RuleTrace {
            phase,
            rule: render_simple_rule(&rule.kind),
            column: Some(self.table.schema()[column].name.clone()),
            span: rule.span,
            counts,
            dropped_rows: Vec::new(),
        });
    }

    fn op_error(&self, span: Span, column: usize, source: OpError) -> EngineError {
        EngineError::at(
            span,
            EngineErrorKind::Op {
                column: self.table.schema()[column].name.clone(),
                source,
            },
        )
    }

    /// Run the rules of one phase on the cells of `column` at `rows`.
    fn phase(
        &mut self,
        phase: Phase,
        column: usize,
        rows: &[usize],
        rules: &[ColumnRule],
    ) -> Result<(), EngineError> {
        for rule in rules {
            let wanted = match &rule.kind {
                ColumnRuleKind::StripLiteral(_) | ColumnRuleKind::StripRegex(_) => Phase::Strip,
                ColumnRuleKind::EnforceType(_) => Phase::Type,
                ColumnRuleKind::ValidRange(_) => Phase::Range,
                ColumnRuleKind::Conditional(..) => Phase::Conditional,
                ColumnRuleKind::Impute(_) => Phase::Impute,
            };
            if wanted != phase {
                continue;
            }
            if let ColumnRuleKind::Conditional(cond, inner) = &rule.kind {
                let cond_col = self
                    .table
                    .column_index(&cond.column)
                    .expect("validated condition column");
                let matched = matching_rows(&self.table, cond_col, cond, rows)
                    .map_err(|e| self.op_error(cond.span, cond_col, e))?;
                self.trace.push(RuleTrace {
                    phase,
                    rule: render_simple_rule(&rule.kind),
                    column: Some(self.table.schema()[column].name.clone()),
                    span: rule.span,
                    counts: RuleCounts::default(),
                    dropped_rows: Vec::new(),
                });
                for p in [
                    Phase::Strip,
                    Phase::Type,
                    Phase::Range,
                    Phase::Conditional,
                    Phase::Impute,
                ] {
                    self.phase(p, column, &matched, inner)?;
                }
                continue;
            }

            let all = self.table.column(column);
            let mut cells: Vec<_> = rows.iter().map(|&r| all[r].clone()).collect();
            let counts = match &rule.kind {
                ColumnRuleKind::StripLiteral(s) => strip_cells(&mut cells, &Stripper::literal(s.clone())),
                ColumnRuleKind::StripRegex(p) => strip_cells(&mut cells, &Stripper::regex(p)),
                ColumnRuleKind::EnforceType(t) => enforce_type(&mut cells, *t),
                ColumnRuleKind::ValidRange(r) => enforce_range(&mut cells, r)
                    .map_err(|e| self.op_error(rule.span, column, remap(e, rows)))?,
                ColumnRuleKind::Impute(s) => {
                    let positions: Vec<f64> = rows.iter().map(|&r| r as f64).collect();
                    impute(&mut cells, *s, Some(&positions))
                        .map_err(|e| self.op_error(rule.span, column, remap(e, rows)))?
                }
                ColumnRuleKind::Conditional(..) => unreachable!(),
            };
            let mut full = self.table.column(column).to_vec();
            for (&r, cell) in rows.iter().zip(cells) {
                full[r] = cell;
            }
            self.table.set_column(column, full);
            self.record(phase, rule, column, counts);
        }
        Ok(())
    }
}

/// Translate a row index within a subset back to the table row.
fn remap(e: OpError, rows: &[usize]) -> OpError {
    match e {
        OpError::Contract { row, found } => OpError::Contract {
            row: rows[row],
            found,
        },
        other => other,
    }
}

/// Execute an export's column mappings, row rules and cut against an
/// imported table, without touching the filesystem.
pub fn execute_export(imported: &Table, export: &ExportAction) -> Result<ExportOutcome, EngineError> {
    let mut schema = Vec::with_capacity(export.mappings.len());
    let mut columns = Vec::with_capacity(export.mappings.len());
    for m in &export.mappings {
        let src = imported.column_index(&m.source_name).ok_or_else(|| {
            EngineError::at(m.span, EngineErrorKind::ColumnNotFound(m.source_name.clone()))
        })?;
        let declared = m.enforced_type().unwrap_or(crate::dsl::DataType::Text);
        schema.push(ColumnSchema::new(m.target_name.clone(), declared));
        columns.push(imported.column(src).to_vec());
    }
    let mut table = Table::new(schema, columns).map_err(|e| EngineError::at(export.span, e))?;
    if export.mappings.is_empty() {
        table = Table::default();
    }

    let rows_in = imported.row_count();
    let mut run = ExportRun {
        export,
        table,
        trace: Vec::new(),
    };
    let all_rows: Vec<usize> = (0..rows_in).collect();
    for phase in [
        Phase::Strip,
        Phase::Type,
        Phase::Range,
        Phase::Conditional,
        Phase::Impute,
    ] {
        for (i, m) in run.export.mappings.iter().enumerate() {
            run.phase(phase, i, &all_rows, &m.rules)?;
        }
    }

    // Position of each current row in the export's input table.
    let mut origin: Vec<usize> = all_rows;
    for rule in &export.row_rules {
        let col = run
            .table
            .column_index(rule.kind.column())
            .expect("validated row-rule column");
        let (order, dropped) = match &rule.kind {
            RowRuleKind::SortBy { ascending, .. } => (
                sort_order(&run.table, col, *ascending).map_err(|e| run.op_error(rule.span, col, e))?,
                Vec::new(),
            ),
            RowRuleKind::SkipOutOfOrder { .. } => {
                let kept = in_order_rows(&run.table, col).map_err(|e| run.op_error(rule.span, col, e))?;
                let mut is_kept = vec![false; run.table.row_count()];
                for &k in &kept {
                    is_kept[k] = true;
                }
                let dropped: Vec<usize> = (0..is_kept.len()).filter(|&r| !is_kept[r]).map(|r| origin[r]).collect();
                (kept, dropped)
            }
        };
        run.table = run.table.select_rows(&order);
        origin = order.iter().map(|&r| origin[r]).collect();
        let rule_text = match &rule.kind {
            RowRuleKind::SortBy { column, ascending } => format!(
                "sort by {} {}",
                crate::dsl::quote(column),
                if *ascending { "ascending" } else { "descending" }
            ),
            RowRuleKind::SkipOutOfOrder { column } => {
                format!("skip out of order by {}", crate::dsl::quote(column))
            }
        };
        run.trace.push(RuleTrace {
            phase: Phase::Rows,
            rule: rule_text,
            column: Some(rule.kind.column().to_string()),
            span: rule.span,
            counts: RuleCounts {
                rows_dropped: dropped.len(),
                ..Default::default()
            },
            dropped_rows: dropped,
        });
    }

    let segments = match &export.cut {
        Some(cut) => {
            let set = segment::cut_on_marker(&run.table, &cut.column, &cut.marker)
                .map_err(|e| EngineError::at(cut.span, e))?;
            run.trace.push(RuleTrace {
                phase: Phase::Cut,
                rule: format!(
                    "cut on column {} contains {} into {}",
                    crate::dsl::quote(&cut.column),
                    crate::dsl::quote(&cut.marker),
                    crate::dsl::quote(&cut.prefix)
                ),
                column: Some(cut.column.clone()),
                span: cut.span,
                counts: RuleCounts::default(),
                dropped_rows: Vec::new(),
            });
            Some(set)
        }
        None => None,
    };

    let report = SanitiseReport {
        rows_in,
        rows_out: run.table.row_count(),
        trace: run.trace,
    };
    Ok(ExportOutcome {
        table: run.table,
        report,
        segments,
    })
}

/// Execute an export and write its output, segment files and report.
pub fn run_export(imported: &Table, export: &ExportAction, workdir: &Path) -> Result<ExportReport, EngineError> {
    let outcome = execute_export(imported, export)?;
    let output = resolve(workdir, &export.output_path);
    write_csv(&outcome.table, &output).map_err(|e| EngineError::at(export.span, e))?;

    let mut segments = Vec::new();
    if let (Some(cut), Some(set)) = (&export.cut, &outcome.segments) {
        let prefix = resolve(workdir, &cut.prefix);
        segments = segment::write_segments(&outcome.table, set, &prefix)
            .map_err(|e| EngineError::at(cut.span, e))?;
    }

    let report_path = report_path(&output);
    let mut text = outcome.report.to_string();
    for s in &segments {
        text.push_str(&format!("segment {}\n", s.display()));
    }
    fs::write(&report_path, text).map_err(|source| {
        EngineError::at(
            export.span,
            EngineErrorKind::Write {
                path: report_path.clone(),
                source,
            },
        )
    })?;

    Ok(ExportReport {
        output,
        report: outcome.report,
        segments,
        report_path,
    })
}
