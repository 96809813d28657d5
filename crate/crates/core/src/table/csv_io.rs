use std::fmt;
use std::fs;
use std::path::Path;

use super::{CellValue, ColumnSchema, Table, TableError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MalformedPolicy {
    /// Drop rows whose field count differs from the header and count them.
    Skip,
    #[default]
    Error,
}

#[derive(Clone, Debug)]
pub struct ReadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub on_malformed: MalformedPolicy,
}

impl Default for ReadOptions {
    fn default() -> Self {
        ReadOptions {
            delimiter: b',',
            has_header: true,
            on_malformed: MalformedPolicy::Error,
        }
    }
}

impl ReadOptions {
    pub fn skipping_malformed() -> Self {
        ReadOptions {
            on_malformed: MalformedPolicy::Skip,
            ..Default::default()
        }
    }
}

/// What happened while reading a file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReadReport {
    pub rows_read: usize,
    /// Input line numbers (1-based) of rows dropped for a wrong field count.
    pub malformed_lines: Vec<u64>,
}

impl ReadReport {
    pub fn malformed(&self) -> usize {
        self.malformed_lines.len()
    }
}

impl fmt::Display for ReadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows read: {}", self.rows_read)?;
        writeln!(f, "malformed rows skipped: {}", self.malformed())?;
        for line in &self.malformed_lines {
            writeln!(f, "  line {line}")?;
        }
        Ok(())
    }
}

pub fn read_csv(path: &Path, opts: &ReadOptions) -> Result<(Table, ReadReport), TableError> {
    let text = fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv_str(&text, opts)
}

/// Parse CSV text. Every cell comes back as `Text` or `Missing`; no type
/// coercion happens at read time.
pub fn parse_csv_str(text: &str, opts: &ReadOptions) -> Result<(Table, ReadReport), TableError> {
    if matches!(opts.delimiter, b'"' | b'\n' | b'\r') {
        return Err(TableError::InvalidOptions(format!(
            "delimiter {:?} is not allowed",
            opts.delimiter as char
        )));
    }
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(opts.delimiter)
        .from_reader(text.as_bytes());

    let mut records = reader.records();
    let mut report = ReadReport::default();
    let mut first_data: Option<csv::StringRecord> = None;

    let schema: Vec<ColumnSchema> = match records.next() {
        None => {
            return Err(TableError::CsvFormat {
                line: 1,
                message: "file has no header row".into(),
            })
        }
        Some(rec) => {
            let rec = rec.map_err(csv_error)?;
            if opts.has_header {
                rec.iter().map(ColumnSchema::from_header).collect()
            } else {
                let schema = (1..=rec.len())
                    .map(|i| ColumnSchema::from_header(&format!("column_{i}")))
                    .collect();
                first_data = Some(rec);
                schema
            }
        }
    };

    let width = schema.len();
    let mut columns: Vec<Vec<CellValue>> = vec![Vec::new(); width];
    for rec in first_data.into_iter().map(Ok).chain(records) {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            match opts.on_malformed {
                MalformedPolicy::Skip => {
                    report.malformed_lines.push(line);
                    continue;
                }
                MalformedPolicy::Error => {
                    return Err(TableError::CsvFormat {
                        line,
                        message: format!("row has {} fields, header has {width}", rec.len()),
                    })
                }
            }
        }
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            col.push(CellValue::text(field));
        }
        report.rows_read += 1;
    }
    Ok((Table::new(schema, columns)?, report))
}

fn csv_error(e: csv::Error) -> TableError {
    let line = e.position().map_or(0, |p| p.line());
    TableError::CsvFormat {
        line,
        message: e.to_string(),
    }
}

/// Render a table in the canonical dialect: comma separated, `\n` line
/// endings, a header line, fields quoted only when they contain a comma,
/// quote or line break, and `Missing` as an empty field.
pub fn to_csv_string(table: &Table) -> String {
    let mut out = String::new();
    let names: Vec<&str> = table.schema().iter().map(|s| s.name.as_str()).collect();
    push_record(&mut out, names.iter().copied());
    for r in 0..table.row_count() {
        let fields: Vec<String> = table.columns().iter().map(|c| c[r].render()).collect();
        push_record(&mut out, fields.iter().map(String::as_str));
    }
    out
}

fn push_record<'a>(out: &mut String, fields: impl Iterator<Item = &'a str>) {
    let start = out.len();
    let mut count = 0;
    for (i, f) in fields.enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_field(out, f);
        count += 1;
    }
    // A lone empty field would otherwise be a blank line, which readers skip.
    if count == 1 && out.len() == start {
        out.push_str("\"\"");
    }
    out.push('\n');
}

fn push_field(out: &mut String, field: &str) {
    if field.contains([',', '"', '\n', '\r']) {
        out.push('"');
        for c in field.chars() {
            if c == '"' {
                out.push('"');
            }
            out.push(c);
        }
        out.push('"');
    } else {
        out.push_str(field);
    }
}

pub fn write_csv(table: &Table, path: &Path) -> Result<(), TableError> {
    fs::write(path, to_csv_string(table)).map_err(|source| TableError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::DataType;
    use crate::table::parse_cell;
    use proptest::prelude::*;

    const HEADER: &str =
        "Timestamp (S),Arc Main Current (A),Arc Main Voltage (V),Arc Main Energy (J),Arc UART (TXT)";

    fn read(text: &str) -> (Table, ReadReport) {
        parse_csv_str(text, &ReadOptions::default()).unwrap()
    }

    #[test]
    fn reference_header_gives_five_columns() {
        let (t, _) = read(&format!("{HEADER}\n0.001,0.42,5.01,0.002,\n"));
        assert_eq!(t.width(), 5);
        assert_eq!(t.schema()[2].name, "Arc Main Voltage (V)");
        assert_eq!(t.schema()[4].unit_hint.as_deref(), Some("TXT"));
        assert_eq!(t.cell(0, 4), &CellValue::Missing);
        assert_eq!(t.cell(0, 2), &CellValue::text("5.01"));
    }

    #[test]
    fn malformed_rows_skipped_and_counted() {
        let text = format!("{HEADER}\n1,2,3,4,5\n1,2,3,4,51,2,3,4,5\n6,7,8,9,10\n");
        let (t, rep) = parse_csv_str(&text, &ReadOptions::skipping_malformed()).unwrap();
        assert_eq!(t.row_count(), 2);
        assert_eq!(rep.malformed(), 1);
        assert_eq!(rep.malformed_lines, vec![3]);

        let err = parse_csv_str(&text, &ReadOptions::default()).unwrap_err();
        assert!(matches!(err, TableError::CsvFormat { line: 3, .. }), "{err}");
    }

    #[test]
    fn bom_is_stripped() {
        let (t, _) = read("\u{feff}a,b\n1,2\n");
        assert_eq!(t.schema()[0].name, "a");
    }

    #[test]
    fn headerless_and_custom_delimiter() {
        let opts = ReadOptions {
            delimiter: b';',
            has_header: false,
            ..Default::default()
        };
        let (t, _) = parse_csv_str("1;2\n3;4\n", &opts).unwrap();
        assert_eq!(t.row_count(), 2);
        assert_eq!(t.schema()[1].name, "column_2");
        let bad = ReadOptions {
            delimiter: b'"',
            ..Default::default()
        };
        assert!(matches!(
            parse_csv_str("a", &bad),
            Err(TableError::InvalidOptions(_))
        ));
    }

    #[test]
    fn canonical_writing() {
        let schema = vec![
            ColumnSchema::from_header("a"),
            ColumnSchema::from_header("b"),
            ColumnSchema::from_header("c"),
        ];
        let t = Table::from_rows(
            schema,
            vec![vec![
                CellValue::number(5.0),
                CellValue::Missing,
                CellValue::text("x,\"y\""),
            ]],
        )
        .unwrap();
        assert_eq!(to_csv_string(&t), "a,b,c\n5.0,,\"x,\"\"y\"\"\"\n");
        let (back, _) = read(&to_csv_string(&t));
        assert_eq!(
            parse_cell(back.cell(0, 0), DataType::Real).unwrap().as_f64(),
            Some(5.0)
        );
        assert_eq!(back.cell(0, 2), &CellValue::text("x,\"y\""));
    }

    #[test]
    fn single_column_missing_survives() {
        let t = Table::from_rows(
            vec![ColumnSchema::from_header("only")],
            vec![vec![CellValue::Missing], vec![CellValue::text("1")]],
        )
        .unwrap();
        let (back, _) = read(&to_csv_string(&t));
        assert_eq!(back, t);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_csv(Path::new("/definitely/not/here.csv"), &ReadOptions::default()).unwrap_err();
        assert!(matches!(err, TableError::Io { .. }));
    }

    fn cell_strategy() -> impl Strategy<Value = CellValue> {
        prop_oneof![
            Just(CellValue::Missing),
            "[a-zA-Z0-9 ,\"#@$*.\n_-]{1,12}".prop_map(CellValue::text),
            (-1e6f64..1e6).prop_map(CellValue::number),
        ]
    }

    proptest! {
        #[test]
        fn write_then_read_is_a_fixed_point(
            width in 1usize..5,
            cells in proptest::collection::vec(cell_strategy(), 0..60),
        ) {
            let rows: Vec<Vec<CellValue>> = cells.chunks_exact(width).map(<[_]>::to_vec).collect();
            let schema = (0..width).map(|i| ColumnSchema::from_header(&format!("c{i}"))).collect();
            let t = Table::from_rows(schema, rows).unwrap();
            let (back, rep) = read(&to_csv_string(&t));
            prop_assert_eq!(rep.rows_read, t.row_count());
            // Numbers come back as their rendered text.
            for c in 0..width {
                for r in 0..t.row_count() {
                    prop_assert_eq!(back.cell(r, c), &CellValue::text(t.cell(r, c).render()));
                }
            }
            prop_assert_eq!(to_csv_string(&back), to_csv_string(&t));
        }
    }
}
