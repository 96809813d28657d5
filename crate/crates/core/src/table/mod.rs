//! In-memory columnar tables and the canonical CSV dialect.

mod cell;
mod csv_io;

use std::collections::HashSet;
use std::path::PathBuf;

use thiserror::Error;

use crate::dsl::DataType;

pub use cell::{parse_bool, parse_cell, parse_int, parse_real, CellValue, NotParsable, Number};
pub use csv_io::{
    parse_csv_str, read_csv, to_csv_string, write_csv, MalformedPolicy, ReadOptions, ReadReport,
};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV format error at line {line}: {message}")]
    CsvFormat { line: u64, message: String },
    #[error("invalid read options: {0}")]
    InvalidOptions(String),
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("column {column:?} has {found} cells, expected {expected}")]
    RaggedColumn {
        column: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub declared_type: DataType,
    /// Unit from a trailing parenthetical, e.g. `V` in `Arc Main Voltage (V)`.
    pub unit_hint: Option<String>,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, declared_type: DataType) -> Self {
        let name = name.into();
        let unit_hint = unit_hint(&name);
        ColumnSchema {
            name,
            declared_type,
            unit_hint,
        }
    }

    /// Schema for a freshly read header cell: untyped text.
    pub fn from_header(name: &str) -> Self {
        ColumnSchema::new(name, DataType::Text)
    }
}

fn unit_hint(name: &str) -> Option<String> {
    let body = name.trim_end().strip_suffix(')')?;
    let open = body.rfind('(')?;
    let unit = body[open + 1..].trim();
    (!unit.is_empty()).then(|| unit.to_string())
}

/// A table stored column by column. Row order is significant.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    schema: Vec<ColumnSchema>,
    columns: Vec<Vec<CellValue>>,
    rows: usize,
}

impl Table {
    pub fn new(schema: Vec<ColumnSchema>, columns: Vec<Vec<CellValue>>) -> Result<Self, TableError> {
        assert_eq!(schema.len(), columns.len(), "one cell vector per schema column");
        let mut names = HashSet::new();
        for s in &schema {
            if !names.insert(s.name.as_str()) {
                return Err(TableError::DuplicateColumn(s.name.clone()));
            }
        }
        let rows = columns.first().map_or(0, Vec::len);
        for (s, c) in schema.iter().zip(&columns) {
            if c.len() != rows {
                return Err(TableError::RaggedColumn {
                    column: s.name.clone(),
                    expected: rows,
                    found: c.len(),
                });
            }
        }
        Ok(Table {
            schema,
            columns,
            rows,
        })
    }

    pub fn from_rows(schema: Vec<ColumnSchema>, rows: Vec<Vec<CellValue>>) -> Result<Self, TableError> {
        let width = schema.len();
        let mut columns: Vec<Vec<CellValue>> = (0..width).map(|_| Vec::with_capacity(rows.len())).collect();
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(TableError::CsvFormat {
                    line: i as u64 + 1,
                    message: format!("row has {} cells, expected {width}", row.len()),
                });
            }
            for (col, cell) in columns.iter_mut().zip(row) {
                col.push(cell);
            }
        }
        let mut t = Table::new(schema, columns)?;
        if width == 0 {
            t.rows = 0;
        }
        Ok(t)
    }

    pub fn schema(&self) -> &[ColumnSchema] {
        &self.schema
    }

    pub fn schema_mut(&mut self) -> &mut [ColumnSchema] {
        &mut self.schema
    }

    pub fn width(&self) -> usize {
        self.schema.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|s| s.name == name)
    }

    pub fn column(&self, idx: usize) -> &[CellValue] {
        &self.columns[idx]
    }

    pub fn column_by_name(&self, name: &str) -> Option<&[CellValue]> {
        self.column_index(name).map(|i| self.column(i))
    }

    pub fn columns(&self) -> &[Vec<CellValue>] {
        &self.columns
    }

    /// Replace one column's cells; the length must not change.
    pub fn set_column(&mut self, idx: usize, cells: Vec<CellValue>) {
        assert_eq!(cells.len(), self.rows, "column length must match row count");
        self.columns[idx] = cells;
    }

    pub fn columns_mut(&mut self) -> impl Iterator<Item = &mut Vec<CellValue>> {
        self.columns.iter_mut()
    }

    pub fn cell(&self, row: usize, col: usize) -> &CellValue {
        &self.columns[col][row]
    }

    pub fn set_cell(&mut self, row: usize, col: usize, value: CellValue) {
        self.columns[col][row] = value;
    }

    pub fn row(&self, row: usize) -> Vec<&CellValue> {
        self.columns.iter().map(|c| &c[row]).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = Vec<&CellValue>> + '_ {
        (0..self.rows).map(|r| self.row(r))
    }

    /// New table holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Table {
        Table {
            schema: self.schema.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r].clone()).collect())
                .collect(),
            rows: rows.len(),
        }
    }

    /// Keep rows for which `keep(row_index)` is true.
    pub fn retain_rows(&self, mut keep: impl FnMut(usize) -> bool) -> Table {
        let rows: Vec<usize> = (0..self.rows).filter(|&r| keep(r)).collect();
        self.select_rows(&rows)
    }
}
