use std::fmt;
use std::ops::AddAssign;
use std::path::PathBuf;

use crate::dsl::Span;

/// What one rule did.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RuleCounts {
    /// Cells changed but still holding a value.
    pub modified: usize,
    /// Cells turned into `Missing`.
    pub emptied: usize,
    /// Missing cells given a value.
    pub imputed: usize,
    /// Imputed cells that lay outside the span of known values.
    pub extrapolated: usize,
    /// Missing cells a directional strategy could not reach.
    pub unfilled: usize,
    pub rows_dropped: usize,
}

impl AddAssign for RuleCounts {
    fn add_assign(&mut self, o: Self) {
        self.modified += o.modified;
        self.emptied += o.emptied;
        self.imputed += o.imputed;
        self.extrapolated += o.extrapolated;
        self.unfilled += o.unfilled;
        self.rows_dropped += o.rows_dropped;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Global,
    Strip,
    Type,
    Range,
    Conditional,
    Impute,
    Rows,
    Cut,
}

impl Phase {
    fn label(self) -> &'static str {
        match self {
            Phase::Global => "global",
            Phase::Strip => "strip",
            Phase::Type => "type",
            Phase::Range => "range",
            Phase::Conditional => "conditional",
            Phase::Impute => "impute",
            Phase::Rows => "rows",
            Phase::Cut => "cut",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleTrace {
    pub phase: Phase,
    /// The rule as written in canonical syntax.
    pub rule: String,
    pub column: Option<String>,
    pub span: Span,
    pub counts: RuleCounts,
    /// Row positions (in the stage's input table) removed by this rule.
    pub dropped_rows: Vec<usize>,
}

/// Audit trail for one pipeline stage (the import, or one export).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SanitiseReport {
    pub rows_in: usize,
    pub rows_out: usize,
    /// In execution order.
    pub trace: Vec<RuleTrace>,
}

impl SanitiseReport {
    pub fn rows_dropped(&self) -> usize {
        self.trace.iter().map(|t| t.counts.rows_dropped).sum()
    }

    pub fn totals(&self) -> RuleCounts {
        let mut total = RuleCounts::default();
        for t in &self.trace {
            total += t.counts;
        }
        total
    }

    /// Summed counts for every rule touching `column`.
    pub fn column_totals(&self, column: &str) -> RuleCounts {
        let mut total = RuleCounts::default();
        for t in self.trace.iter().filter(|t| t.column.as_deref() == Some(column)) {
            total += t.counts;
        }
        total
    }
}

impl fmt::Display for SanitiseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows in: {}", self.rows_in)?;
        writeln!(f, "rows out: {}", self.rows_out)?;
        for t in &self.trace {
            write!(f, "[{}] {}: ", t.span, t.phase.label())?;
            if let Some(c) = &t.column {
                write!(f, "column {c:?} ")?;
            }
            let c = &t.counts;
            writeln!(
                f,
                "{} | modified {} emptied {} imputed {} extrapolated {} unfilled {} rows dropped {}",
                t.rule, c.modified, c.emptied, c.imputed, c.extrapolated, c.unfilled, c.rows_dropped
            )?;
            if !t.dropped_rows.is_empty() {
                let rows: Vec<String> = t.dropped_rows.iter().map(usize::to_string).collect();
                writeln!(f, "  dropped rows: {}", rows.join(" "))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExportReport {
    pub output: PathBuf,
    pub report: SanitiseReport,
    pub segments: Vec<PathBuf>,
    pub report_path: PathBuf,
}

/// Everything a script run produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    /// Rows in the input file, counting malformed rows that were skipped.
    pub file_rows: usize,
    pub import: SanitiseReport,
    pub exports: Vec<ExportReport>,
    pub inspected: Vec<PathBuf>,
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "== import ==")?;
        write!(f, "{}", self.import)?;
        for e in &self.exports {
            writeln!(f, "== export {} ==", e.output.display())?;
            write!(f, "{}", e.report)?;
            for s in &e.segments {
                writeln!(f, "segment {}", s.display())?;
            }
        }
        for p in &self.inspected {
            writeln!(f, "== inspect wrote {} ==", p.display())?;
        }
        Ok(())
    }
}
