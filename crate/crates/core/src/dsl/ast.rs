//! Abstract syntax for CPSLint scripts.
//!
//! Every node that can be the subject of a diagnostic carries a [`Span`].
//! Spans never take part in equality, so two scripts compare equal when they
//! have the same structure regardless of where their clauses were written.

use std::fmt;

/// A 1-based line/column position in script source.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub line: usize,
    pub column: usize,
}

impl Span {
    pub fn new(line: usize, column: usize) -> Self {
        Span { line, column }
    }
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Script {
    pub actions: Vec<Action>,
}

impl Script {
    pub fn import(&self) -> Option<&ImportAction> {
        self.actions.iter().find_map(|a| match a {
            Action::Import(i) => Some(i),
            _ => None,
        })
    }

    pub fn import_mut(&mut self) -> Option<&mut ImportAction> {
        self.actions.iter_mut().find_map(|a| match a {
            Action::Import(i) => Some(i),
            _ => None,
        })
    }

    pub fn exports(&self) -> impl Iterator<Item = &ExportAction> {
        self.actions.iter().filter_map(|a| match a {
            Action::Export(e) => Some(e),
            _ => None,
        })
    }

    pub fn inspect(&self) -> Option<&InspectAction> {
        self.actions.iter().find_map(|a| match a {
            Action::Inspect(i) => Some(i),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Inspect(InspectAction),
    Import(ImportAction),
    Export(ExportAction),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InspectAction {
    pub input_path: String,
    /// Where the generated baseline script goes.
    pub output_path: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ImportAction {
    pub input_path: String,
    pub global_filters: Vec<GlobalFilter>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlobalFilter {
    pub kind: GlobalFilterKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GlobalFilterKind {
    SkipEmptyRows,
    SkipMalformedRows,
    SkipLiteral(String),
    SkipRegex(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExportAction {
    pub output_path: String,
    pub mappings: Vec<ColumnMapping>,
    pub row_rules: Vec<RowRule>,
    pub cut: Option<CutRule>,
    pub span: Span,
}

impl ExportAction {
    pub fn mapping(&self, target: &str) -> Option<&ColumnMapping> {
        self.mappings.iter().find(|m| m.target_name == target)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnMapping {
    pub source_name: String,
    pub target_name: String,
    pub rules: Vec<ColumnRule>,
    pub span: Span,
}

impl ColumnMapping {
    /// The type enforced by a top-level `enforce type` clause, last one wins.
    pub fn enforced_type(&self) -> Option<DataType> {
        self.rules.iter().rev().find_map(|r| match r.kind {
            ColumnRuleKind::EnforceType(t) => Some(t),
            _ => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnRule {
    pub kind: ColumnRuleKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnRuleKind {
    EnforceType(DataType),
    ValidRange(Range),
    Impute(ImputeStrategy),
    StripLiteral(String),
    StripRegex(String),
    Conditional(Condition, Vec<ColumnRule>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DataType {
    Int,
    Bool,
    Real,
    Uart,
    Text,
}

impl DataType {
    pub fn is_numeric(self) -> bool {
        matches!(self, DataType::Int | DataType::Real)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            DataType::Int => "int",
            DataType::Bool => "bool",
            DataType::Real => "real",
            DataType::Uart => "uart",
            DataType::Text => "text",
        }
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// An interval with independently open or closed ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub low: f64,
    pub low_inclusive: bool,
    pub high: f64,
    pub high_inclusive: bool,
}

impl Range {
    pub fn closed(low: f64, high: f64) -> Self {
        Range {
            low,
            low_inclusive: true,
            high,
            high_inclusive: true,
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        let above = if self.low_inclusive {
            v >= self.low
        } else {
            v > self.low
        };
        let below = if self.high_inclusive {
            v <= self.high
        } else {
            v < self.high
        };
        above && below
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImputeStrategy {
    Mean,
    Last,
    Next,
    Interpolation(InterpolationKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InterpolationKind {
    #[default]
    Linear,
    Nearest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowRule {
    pub kind: RowRuleKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RowRuleKind {
    SortBy { column: String, ascending: bool },
    SkipOutOfOrder { column: String },
}

impl RowRuleKind {
    pub fn column(&self) -> &str {
        match self {
            RowRuleKind::SortBy { column, .. } | RowRuleKind::SkipOutOfOrder { column } => column,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutRule {
    pub column: String,
    pub marker: String,
    pub prefix: String,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition {
    pub column: String,
    pub comparator: Comparator,
    pub literal: Literal,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comparator {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Contains,
}

impl Comparator {
    pub fn is_ordering(self) -> bool {
        matches!(
            self,
            Comparator::Lt | Comparator::Le | Comparator::Gt | Comparator::Ge
        )
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Contains => "contains",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Text(String),
    Number(f64),
}
