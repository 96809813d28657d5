//! Compartmentalisation: cutting a trace into execution-phase segments at
//! rows carrying a textual marker, and writing one numbered file per segment.

use std::ffi::OsString;
use std::ops::Range;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::table::{write_csv, CellValue, Table, TableError};

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("column {0:?} not found")]
    ColumnNotFound(String),
    #[error("marker must not be empty")]
    EmptyMarker,
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Contiguous, ordered, non-overlapping row ranges covering a whole table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentSet {
    pub segments: Vec<Range<usize>>,
    pub marker_rows: Vec<usize>,
}

impl SegmentSet {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// Start a new segment at every row whose `column` cell is text containing
/// `marker`. Rows before the first marker form segment 0. An empty table
/// yields a single empty segment.
pub fn cut_on_marker(table: &Table, column: &str, marker: &str) -> Result<SegmentSet, SegmentError> {
    if marker.is_empty() {
        return Err(SegmentError::EmptyMarker);
    }
    let cells = table
        .column_by_name(column)
        .ok_or_else(|| SegmentError::ColumnNotFound(column.to_string()))?;
    let marker_rows: Vec<usize> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c, CellValue::Text(s) if s.contains(marker)))
        .map(|(i, _)| i)
        .collect();

    let mut starts = vec![0];
    starts.extend(marker_rows.iter().copied().filter(|&r| r > 0));
    let n = table.row_count();
    let segments = starts
        .iter()
        .enumerate()
        .map(|(i, &s)| s..starts.get(i + 1).copied().unwrap_or(n))
        .collect();
    Ok(SegmentSet {
        segments,
        marker_rows,
    })
}

/// `<prefix>0000.csv`, `<prefix>0001.csv`, ...
pub fn segment_path(prefix: &Path, index: usize) -> PathBuf {
    let mut name = OsString::from(prefix.as_os_str());
    name.push(format!("{index:04}.csv"));
    PathBuf::from(name)
}

/// Write each segment, with the full header, to its numbered file. Returns
/// the paths in segment order.
pub fn write_segments(table: &Table, set: &SegmentSet, prefix: &Path) -> Result<Vec<PathBuf>, SegmentError> {
    let mut paths = Vec::with_capacity(set.len());
    for (i, seg) in set.segments.iter().enumerate() {
        let rows: Vec<usize> = seg.clone().collect();
        let path = segment_path(prefix, i);
        write_csv(&table.select_rows(&rows), &path)?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::ColumnSchema;

    fn flags(n: usize, marked: &[usize]) -> Table {
        let cells = (0..n)
            .map(|i| {
                if marked.contains(&i) {
                    CellValue::text("IMG_LOAD_START")
                } else if i % 7 == 0 {
                    CellValue::text("TEMP 45")
                } else {
                    CellValue::Missing
                }
            })
            .collect();
        let ids = (0..n).map(|i| CellValue::text(i.to_string())).collect();
        Table::new(
            vec![ColumnSchema::from_header("id"), ColumnSchema::from_header("uart")],
            vec![ids, cells],
        )
        .unwrap()
    }

    #[test]
    fn markers_at_zero_and_fifty() {
        let s = cut_on_marker(&flags(100, &[0, 50]), "uart", "IMG_LOAD").unwrap();
        assert_eq!(s.segments, vec![0..50, 50..100]);
        assert_eq!(s.marker_rows, vec![0, 50]);
    }

    #[test]
    fn no_marker_single_segment() {
        let s = cut_on_marker(&flags(10, &[]), "uart", "IMG_LOAD_START").unwrap();
        assert_eq!(s.segments, vec![0..10]);
    }

    #[test]
    fn prefix_kept_as_segment_zero() {
        let s = cut_on_marker(&flags(30, &[5, 12, 20]), "uart", "IMG_LOAD_START").unwrap();
        assert_eq!(s.segments, vec![0..5, 5..12, 12..20, 20..30]);
    }

    #[test]
    fn unknown_column_and_empty_marker() {
        assert!(matches!(
            cut_on_marker(&flags(3, &[]), "nope", "x"),
            Err(SegmentError::ColumnNotFound(_))
        ));
        assert!(matches!(
            cut_on_marker(&flags(3, &[]), "uart", ""),
            Err(SegmentError::EmptyMarker)
        ));
    }

    #[test]
    fn numbered_files() {
        let dir = tempfile::tempdir().unwrap();
        let t = flags(30, &[10, 20]);
        let s = cut_on_marker(&t, "uart", "IMG_LOAD_START").unwrap();
        let paths = write_segments(&t, &s, &dir.path().join("phase_")).unwrap();
        let names: Vec<String> = paths
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["phase_0000.csv", "phase_0001.csv", "phase_0002.csv"]);
        let first = std::fs::read_to_string(&paths[1]).unwrap();
        assert!(first.starts_with("id,uart\n10,IMG_LOAD_START\n"));
    }
}
