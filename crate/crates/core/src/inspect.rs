//! The `inspect` action: infer a type for every column of a raw trace and
//! draft a baseline script a domain expert can refine.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsl::{
    self, render_annotated, render_number, Action, Annotations, ColumnMapping, ColumnRule,
    ColumnRuleKind, DataType, ExportAction, GlobalFilter, GlobalFilterKind, ImportAction, Script,
    Span,
};
use crate::table::{parse_cell, read_csv, CellValue, ReadOptions, ReadReport, TableError};

/// Minimum share of non-missing cells that must parse for a candidate type
/// to be accepted.
pub const INFERENCE_THRESHOLD: f64 = 0.99;

/// Share of missing cells at or above which a textual column counts as
/// sparse (and is typed `uart`).
pub const SPARSE_MISSING_RATIO: f64 = 0.5;

const MAX_OFFENDERS: usize = 5;

#[derive(Debug, Error)]
pub enum InspectError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Parse success ratios over non-missing cells, per numeric/boolean
/// candidate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CandidateRatios {
    pub int: f64,
    pub real: f64,
    pub bool: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnInference {
    pub name: String,
    pub inferred: DataType,
    pub non_missing: usize,
    pub missing: usize,
    pub ratios: CandidateRatios,
    /// Up to five values that failed to parse as the inferred type.
    pub offending: Vec<String>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InferenceReport {
    pub columns: Vec<ColumnInference>,
}

impl InferenceReport {
    pub fn types(&self) -> Vec<DataType> {
        self.columns.iter().map(|c| c.inferred).collect()
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = String> + '_ {
        self.columns
            .iter()
            .filter_map(|c| c.diagnostic.as_ref().map(|d| format!("column {:?}: {d}", c.name)))
    }
}

impl fmt::Display for InferenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.columns {
            writeln!(
                f,
                "{:?}: {} (int {:.3}, real {:.3}, bool {:.3}; {} present, {} missing)",
                c.name, c.inferred, c.ratios.int, c.ratios.real, c.ratios.bool, c.non_missing, c.missing
            )?;
            if !c.offending.is_empty() {
                writeln!(f, "  offending: {:?}", c.offending)?;
            }
        }
        Ok(())
    }
}

fn ratio(values: &[&CellValue], ty: DataType) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let ok = values.iter().filter(|v| parse_cell(v, ty).is_ok()).count();
    ok as f64 / values.len() as f64
}

/// Infer a column's type from its cells.
///
/// Candidates are tried in the order int, real, bool; the first whose parse
/// ratio reaches [`INFERENCE_THRESHOLD`] wins. Otherwise the column is
/// textual: `uart` when its name mentions UART or it is sparse, `text` when
/// densely populated.
pub fn infer_column_type(name: &str, values: &[CellValue]) -> (DataType, ColumnInference) {
    let present: Vec<&CellValue> = values.iter().filter(|v| !v.is_missing()).collect();
    let missing = values.len() - present.len();
    let ratios = CandidateRatios {
        int: ratio(&present, DataType::Int),
        real: ratio(&present, DataType::Real),
        bool: ratio(&present, DataType::Bool),
    };

    let mut diagnostic = None;
    let inferred = if present.is_empty() {
        diagnostic = Some("no values present; defaulting to text".to_string());
        DataType::Text
    } else if ratios.int >= INFERENCE_THRESHOLD {
        DataType::Int
    } else if ratios.real >= INFERENCE_THRESHOLD {
        DataType::Real
    } else if ratios.bool >= INFERENCE_THRESHOLD {
        DataType::Bool
    } else {
        let sparse = missing as f64 / values.len() as f64 >= SPARSE_MISSING_RATIO;
        if name.to_ascii_lowercase().contains("uart") || sparse {
            DataType::Uart
        } else {
            DataType::Text
        }
    };

    let offending: Vec<String> = present
        .iter()
        .filter(|v| parse_cell(v, inferred).is_err())
        .take(MAX_OFFENDERS)
        .map(|v| v.render())
        .collect();

    let (mut min, mut max) = (None::<f64>, None::<f64>);
    if inferred.is_numeric() {
        for v in present.iter().filter_map(|v| parse_cell(v, inferred).ok()?.as_f64()) {
            min = Some(min.map_or(v, |m| m.min(v)));
            max = Some(max.map_or(v, |m| m.max(v)));
        }
    }

    let entry = ColumnInference {
        name: name.to_string(),
        inferred,
        non_missing: present.len(),
        missing,
        ratios,
        offending,
        min,
        max,
        diagnostic,
    };
    (inferred, entry)
}

#[derive(Clone, Debug)]
pub struct Inspection {
    pub script: Script,
    /// The script exactly as written to disk, including range suggestions.
    pub text: String,
    pub report: InferenceReport,
    pub read_report: ReadReport,
}

impl Inspection {
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out: Vec<String> = self.report.diagnostics().collect();
        if self.report.columns.is_empty() {
            out.push("input has no columns".into());
        } else if self.read_report.rows_read == 0 {
            out.push("input has a header but no data rows".into());
        }
        if self.read_report.malformed() > 0 {
            out.push(format!(
                "{} malformed rows were ignored during inference",
                self.read_report.malformed()
            ));
        }
        out
    }
}

/// Default output path for the export in a generated script:
/// `dir/name.csv` becomes `dir/name.sanitised.csv`.
pub fn default_export_path(input_path: &str) -> String {
    let p = Path::new(input_path);
    let stem = p
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    p.with_file_name(format!("{stem}.sanitised.csv"))
        .to_string_lossy()
        .into_owned()
}

/// Build the baseline script for an already-read table.
pub fn baseline_script(
    input_path: &str,
    report: &InferenceReport,
    read_report: &ReadReport,
) -> (Script, Annotations) {
    let span = Span::default();
    let mut global_filters = vec![GlobalFilter {
        kind: GlobalFilterKind::SkipEmptyRows,
        span,
    }];
    if read_report.malformed() > 0 {
        global_filters.push(GlobalFilter {
            kind: GlobalFilterKind::SkipMalformedRows,
            span,
        });
    }

    let mut notes = Annotations::default();
    let mappings = report
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if let (Some(lo), Some(hi)) = (c.min, c.max) {
                notes.column_notes.insert(
                    (0, i),
                    vec![format!(
                        "valid range [{}, {}]",
                        render_number(lo),
                        render_number(hi)
                    )],
                );
            }
            ColumnMapping {
                source_name: c.name.clone(),
                target_name: c.name.clone(),
                rules: vec![ColumnRule {
                    kind: ColumnRuleKind::EnforceType(c.inferred),
                    span,
                }],
                span,
            }
        })
        .collect();

    let script = Script {
        actions: vec![
            Action::Import(ImportAction {
                input_path: input_path.to_string(),
                global_filters,
                span,
            }),
            Action::Export(ExportAction {
                output_path: default_export_path(input_path),
                mappings,
                row_rules: Vec::new(),
                cut: None,
                span,
            }),
        ],
    };
    (script, notes)
}

/// Read `input`, infer column types, and write a baseline script to
/// `output`. `input_path` is the path as it should appear in the script.
pub fn inspect(input: &Path, input_path: &str, output: &Path) -> Result<Inspection, InspectError> {
    let inspection = inspect_to_string(input, input_path)?;
    fs::write(output, &inspection.text).map_err(|source| InspectError::Write {
        path: output.to_path_buf(),
        source,
    })?;
    Ok(inspection)
}

/// Same as [`inspect`] but leaves writing the script to the caller.
pub fn inspect_to_string(input: &Path, input_path: &str) -> Result<Inspection, InspectError> {
    let (table, read_report) = read_csv(input, &ReadOptions::skipping_malformed())?;
    let report = InferenceReport {
        columns: table
            .schema()
            .iter()
            .zip(table.columns())
            .map(|(s, col)| infer_column_type(&s.name, col).1)
            .collect(),
    };
    let (script, notes) = baseline_script(input_path, &report, &read_report);
    let text = render_annotated(&script, &notes);
    debug_assert_eq!(dsl::parse_script(&text).as_ref(), Ok(&script));
    Ok(Inspection {
        script,
        text,
        report,
        read_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cells(vals: &[&str]) -> Vec<CellValue> {
        vals.iter().map(|v| CellValue::text(*v)).collect()
    }

    #[test]
    fn integers() {
        assert_eq!(infer_column_type("n", &cells(&["1", "2", "3"])).0, DataType::Int);
    }

    #[test]
    fn threshold_demotes_to_text() {
        let (t, info) = infer_column_type("x", &cells(&["0.001", "0.002", "abc"]));
        assert_eq!(t, DataType::Text);
        assert!((info.ratios.real - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn one_bad_cell_in_a_hundred_is_tolerated() {
        let mut vals: Vec<String> = (0..99).map(|i| format!("{}.5", i)).collect();
        vals.push("5.0a1".into());
        let col: Vec<CellValue> = vals.into_iter().map(CellValue::text).collect();
        let (t, info) = infer_column_type("v", &col);
        assert_eq!(t, DataType::Real);
        assert_eq!(info.offending, vec!["5.0a1".to_string()]);
        assert_eq!(info.min, Some(0.5));
        assert_eq!(info.max, Some(98.5));
    }

    #[test]
    fn uart_by_name_or_sparsity() {
        let dense = cells(&["a", "b", "c", "d"]);
        assert_eq!(infer_column_type("Arc UART (TXT)", &dense).0, DataType::Uart);
        assert_eq!(infer_column_type("notes", &dense).0, DataType::Text);
        let sparse = cells(&["PROC_START", "", "", ""]);
        assert_eq!(infer_column_type("flags", &sparse).0, DataType::Uart);
    }

    #[test]
    fn booleans_and_all_missing() {
        assert_eq!(infer_column_type("b", &cells(&["true", "False"])).0, DataType::Bool);
        let (t, info) = infer_column_type("e", &cells(&["", ""]));
        assert_eq!(t, DataType::Text);
        assert!(info.diagnostic.is_some());
    }

    #[test]
    fn export_path_sits_beside_input() {
        assert_eq!(default_export_path("data/trace.csv"), "data/trace.sanitised.csv");
        assert_eq!(default_export_path("trace"), "trace.sanitised.csv");
    }
}
