//! Seeded, block-localised fault injection over clean traces.
//!
//! Every kind first draws `k = max(1, round(fraction * rows / block_size))`
//! disjoint, aligned blocks from a ChaCha8 stream seeded with `seed`, then
//! corrupts only rows inside those blocks. All later draws come from the
//! same stream, so a given input and spec always yield the same bytes.
//!
//! The result is written in the canonical CSV dialect (except for
//! [`CorruptionKind::MisplacedEol`], which edits the raw text) next to a
//! JSON Lines manifest describing each block.

mod blocks;
mod manifest;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SeededRng;
use crate::table::{parse_csv_str, parse_real, to_csv_string, CellValue, ReadOptions, Table, TableError};

pub use blocks::{block_count, select_blocks, select_blocks_with};
pub use manifest::{BlockRecord, CellChange, CorruptionManifest, ManifestRecord, SpecEcho};

pub const OUT_OF_BOUNDS_VALUE: &str = "99999.999";
pub const DEFAULT_FRACTION: f64 = 0.005;
pub const DEFAULT_BLOCK_SIZE: usize = 10;

const INVALID_CHARS: &[u8] = b"#@$*abcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Error)]
pub enum CorruptError {
    #[error("not enough rows: need {needed}, have {available}")]
    InsufficientRows { needed: usize, available: usize },
    #[error("column {0:?} not found")]
    ColumnNotFound(String),
    #[error("{0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorruptionKind {
    TypeMismatch,
    TypeMismatchTargetedUart,
    OutOfBounds,
    OutOfOrderReliableTs,
    OutOfOrderUnreliableTs,
    MissingFields,
    MissingRows,
    MisplacedEol,
}

impl CorruptionKind {
    pub const ALL: [CorruptionKind; 8] = [
        CorruptionKind::TypeMismatch,
        CorruptionKind::TypeMismatchTargetedUart,
        CorruptionKind::OutOfBounds,
        CorruptionKind::OutOfOrderReliableTs,
        CorruptionKind::OutOfOrderUnreliableTs,
        CorruptionKind::MissingFields,
        CorruptionKind::MissingRows,
        CorruptionKind::MisplacedEol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::TypeMismatch => "type-mismatch",
            CorruptionKind::TypeMismatchTargetedUart => "type-mismatch-targeted-uart",
            CorruptionKind::OutOfBounds => "out-of-bounds",
            CorruptionKind::OutOfOrderReliableTs => "out-of-order-reliable-ts",
            CorruptionKind::OutOfOrderUnreliableTs => "out-of-order-unreliable-ts",
            CorruptionKind::MissingFields => "missing-fields",
            CorruptionKind::MissingRows => "missing-rows",
            CorruptionKind::MisplacedEol => "misplaced-eol",
        }
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorruptionKind {
    type Err = CorruptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CorruptionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CorruptError::InvalidSpec(format!("unknown corruption kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorruptionSpec {
    pub kind: CorruptionKind,
    pub fraction: f64,
    pub block_size: usize,
    pub seed: u64,
    /// UART substring that block selection is biased toward. Required for
    /// the targeted type mismatch, optional for missing rows.
    pub target_uart: Option<String>,
    /// Columns to corrupt instead of every numeric column.
    pub columns: Option<Vec<String>>,
    /// Column rewritten by unreliable-timestamp shuffles. Defaults to the
    /// first column named `timestamp...`, else the first numeric column.
    pub timestamp_column: Option<String>,
}

impl CorruptionSpec {
    pub fn new(kind: CorruptionKind, seed: u64) -> Self {
        CorruptionSpec {
            kind,
            fraction: DEFAULT_FRACTION,
            block_size: DEFAULT_BLOCK_SIZE,
            seed,
            target_uart: None,
            columns: None,
            timestamp_column: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Corrupted {
    pub text: String,
    pub manifest: CorruptionManifest,
}

/// `<output>.manifest`
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

/// Corrupt the CSV file at `input`, writing the result to `output` and the
/// manifest beside it.
pub fn corrupt_file(input: &Path, output: &Path, spec: &CorruptionSpec) -> Result<CorruptionManifest, CorruptError> {
    let text = std::fs::read_to_string(input).map_err(|source| {
        CorruptError::Table(TableError::Io {
            path: input.to_path_buf(),
            source,
        })
    })?;
    let out = corrupt_text(&text, spec)?;
    let write = |path: &Path, body: &str| {
        std::fs::write(path, body).map_err(|source| CorruptError::Io {
            path: path.to_path_buf(),
            source,
        })
    };
    write(output, &out.text)?;
    write(&manifest_path(output), &out.manifest.to_jsonl())?;
    Ok(out.manifest)
}

pub fn corrupt_text(text: &str, spec: &CorruptionSpec) -> Result<Corrupted, CorruptError> {
    if spec.kind == CorruptionKind::MisplacedEol {
        let (text, manifest) = corrupt_misplaced_eol(text, spec)?;
        return Ok(Corrupted { text, manifest });
    }
    let (table, _) = parse_csv_str(text, &ReadOptions::default())?;
    let (table, manifest) = corrupt_table(&table, spec)?;
    Ok(Corrupted {
        text: to_csv_string(&table),
        manifest,
    })
}

/// Apply any table-level kind. `MisplacedEol` works on raw text and is
/// rejected here.
pub fn corrupt_table(t: &Table, spec: &CorruptionSpec) -> Result<(Table, CorruptionManifest), CorruptError> {
    let mut rng = SeededRng::new(spec.seed);
    let numeric = numeric_columns(t, spec)?;
    let bias = bias_flags(t, spec)?;
    let starts = select_blocks_with(&mut rng, t.row_count(), spec.fraction, spec.block_size, bias.as_deref())?;
    let b = spec.block_size;
    let mut out = t.clone();

    let records = match spec.kind {
        CorruptionKind::TypeMismatch | CorruptionKind::TypeMismatchTargetedUart => {
            let uart = uart_column(t);
            starts
                .iter()
                .map(|&s| {
                    let mut cols = numeric.clone();
                    if let Some(u) = uart.filter(|u| !cols.contains(u)) {
                        if rng.coin() {
                            cols.push(u);
                        }
                    }
                    let mut rec = BlockRecord::new(s, b);
                    for r in s..s + b {
                        for &c in &cols {
                            let golden = t.cell(r, c).render();
                            if golden.is_empty() {
                                continue;
                            }
                            let bad = inject_invalid(&mut rng, &golden, Some(c) != uart);
                            set(&mut out, r, c, &bad);
                            rec.cells.push(change(t, r, c, bad));
                        }
                    }
                    rec.columns = names(t, &cols);
                    rec
                })
                .collect()
        }
        CorruptionKind::OutOfBounds => starts
            .iter()
            .map(|&s| {
                let cols = if rng.coin() { numeric.clone() } else { random_subset(&mut rng, &numeric) };
                let mut rec = BlockRecord::new(s, b);
                for r in s..s + b {
                    for &c in &cols {
                        set(&mut out, r, c, OUT_OF_BOUNDS_VALUE);
                        rec.cells.push(change(t, r, c, OUT_OF_BOUNDS_VALUE.into()));
                    }
                }
                rec.columns = names(t, &cols);
                rec
            })
            .collect(),
        CorruptionKind::OutOfOrderReliableTs | CorruptionKind::OutOfOrderUnreliableTs => {
            let ts = if spec.kind == CorruptionKind::OutOfOrderUnreliableTs {
                Some(timestamp_column(t, spec, &numeric)?)
            } else {
                None
            };
            starts
                .iter()
                .map(|&s| {
                    let perm = non_identity_permutation(&mut rng, b);
                    for c in 0..t.width() {
                        for (i, &j) in perm.iter().enumerate() {
                            let cell = t.cell(s + j, c).clone();
                            out.set_cell(s + i, c, cell);
                        }
                    }
                    let mut rec = BlockRecord::new(s, b);
                    rec.columns = names(t, &(0..t.width()).collect::<Vec<_>>());
                    if let Some(ts) = ts {
                        for (i, fresh) in fresh_timestamps(t, ts, s, b).into_iter().enumerate() {
                            let golden = t.cell(s + perm[i], ts).render();
                            set(&mut out, s + i, ts, &fresh);
                            rec.cells.push(CellChange {
                                row: s + i,
                                column: t.schema()[ts].name.clone(),
                                golden,
                                corrupted: fresh,
                            });
                        }
                    }
                    rec.permutation = Some(perm);
                    rec
                })
                .collect()
        }
        CorruptionKind::MissingFields => starts
            .iter()
            .map(|&s| {
                let c = numeric[rng.below(numeric.len())];
                let mut rec = BlockRecord::new(s, b);
                for r in s..s + b {
                    out.set_cell(r, c, CellValue::Missing);
                    rec.cells.push(change(t, r, c, String::new()));
                }
                rec.columns = names(t, &[c]);
                rec
            })
            .collect(),
        CorruptionKind::MissingRows => {
            let recs: Vec<BlockRecord> = starts
                .iter()
                .map(|&s| {
                    let mut rec = BlockRecord::new(s, b);
                    rec.deleted_rows = Some((s..s + b).map(|r| row_line(t, r)).collect());
                    rec
                })
                .collect();
            out = t.retain_rows(|r| !starts.iter().any(|&s| (s..s + b).contains(&r)));
            recs
        }
        CorruptionKind::MisplacedEol => {
            return Err(CorruptError::InvalidSpec(
                "misplaced-eol works on raw text, not on a parsed table".into(),
            ))
        }
    };
    Ok((out, CorruptionManifest::new(spec, t.row_count(), records)))
}

/// Join rows pairwise inside each block by deleting the line terminator of
/// rows `s, s+2, s+4, ...`. With an odd block size the last row of each
/// block stays intact. The header line is never touched.
pub fn corrupt_misplaced_eol(text: &str, spec: &CorruptionSpec) -> Result<(String, CorruptionManifest), CorruptError> {
    let mut lines: Vec<&str> = text.split_inclusive('\n').collect();
    if lines.is_empty() {
        return Err(CorruptError::InsufficientRows {
            needed: spec.block_size,
            available: 0,
        });
    }
    let data = &mut lines[1..];
    let n = data.len();
    let mut rng = SeededRng::new(spec.seed);
    let starts = select_blocks_with(&mut rng, n, spec.fraction, spec.block_size, None)?;
    let b = spec.block_size;
    let mut records = Vec::new();
    for &s in &starts {
        let joins: Vec<usize> = (s..s + b).step_by(2).filter(|&r| r + 1 < s + b).collect();
        for &r in &joins {
            data[r] = data[r].trim_end_matches('\n').trim_end_matches('\r');
        }
        let mut rec = BlockRecord::new(s, b);
        rec.join_points = Some(joins);
        records.push(rec);
    }
    Ok((lines.concat(), CorruptionManifest::new(spec, n, records)))
}

fn set(t: &mut Table, row: usize, col: usize, text: &str) {
    t.set_cell(row, col, CellValue::text(text));
}

fn change(t: &Table, row: usize, col: usize, corrupted: String) -> CellChange {
    CellChange {
        row,
        column: t.schema()[col].name.clone(),
        golden: t.cell(row, col).render(),
        corrupted,
    }
}

fn names(t: &Table, cols: &[usize]) -> Vec<String> {
    cols.iter().map(|&c| t.schema()[c].name.clone()).collect()
}

fn row_line(t: &Table, row: usize) -> String {
    let one = to_csv_string(&t.select_rows(&[row]));
    one.split_once('\n').map_or("", |(_, rest)| rest).trim_end_matches('\n').to_string()
}

/// Explicit `columns`, or every column whose non-missing cells all parse as
/// reals (and that has at least one).
fn numeric_columns(t: &Table, spec: &CorruptionSpec) -> Result<Vec<usize>, CorruptError> {
    let cols: Vec<usize> = match &spec.columns {
        Some(wanted) => wanted
            .iter()
            .map(|n| t.column_index(n).ok_or_else(|| CorruptError::ColumnNotFound(n.clone())))
            .collect::<Result<_, _>>()?,
        None => (0..t.width())
            .filter(|&c| {
                let mut present = t.column(c).iter().filter(|v| !v.is_missing()).peekable();
                present.peek().is_some() && present.all(|v| parse_real(&v.render()).is_some())
            })
            .collect(),
    };
    if cols.is_empty() {
        return Err(CorruptError::InvalidSpec("no numeric columns to corrupt".into()));
    }
    Ok(cols)
}

fn uart_column(t: &Table) -> Option<usize> {
    t.schema().iter().position(|s| s.name.to_lowercase().contains("uart"))
}

fn timestamp_column(t: &Table, spec: &CorruptionSpec, numeric: &[usize]) -> Result<usize, CorruptError> {
    if let Some(name) = &spec.timestamp_column {
        return t
            .column_index(name)
            .ok_or_else(|| CorruptError::ColumnNotFound(name.clone()));
    }
    Ok(t
        .schema()
        .iter()
        .position(|s| s.name.to_lowercase().starts_with("timestamp"))
        .unwrap_or(numeric[0]))
}

fn bias_flags(t: &Table, spec: &CorruptionSpec) -> Result<Option<Vec<bool>>, CorruptError> {
    let target = match (spec.kind, &spec.target_uart) {
        (CorruptionKind::TypeMismatchTargetedUart, None) => {
            return Err(CorruptError::InvalidSpec(
                "type-mismatch-targeted-uart needs a target UART identifier".into(),
            ))
        }
        (CorruptionKind::TypeMismatchTargetedUart | CorruptionKind::MissingRows, Some(t)) => t,
        _ => return Ok(None),
    };
    let u = uart_column(t).ok_or_else(|| CorruptError::ColumnNotFound("uart".into()))?;
    Ok(Some(
        t.column(u)
            .iter()
            .map(|c| c.render().contains(target.as_str()))
            .collect(),
    ))
}

/// Insert 1-3 characters from `#@$*a-z` at random positions. When `numeric`
/// is set, redraw until neither the result nor the result with its symbols
/// removed reads as a real (a stray `e` could otherwise form an exponent).
fn inject_invalid(rng: &mut SeededRng, golden: &str, numeric: bool) -> String {
    for _ in 0..64 {
        let mut chars: Vec<char> = golden.chars().collect();
        for _ in 0..1 + rng.below(3) {
            let pos = rng.below(chars.len() + 1);
            let ch = INVALID_CHARS[rng.below(INVALID_CHARS.len())] as char;
            chars.insert(pos, ch);
        }
        let out: String = chars.iter().collect();
        if !numeric {
            return out;
        }
        let letters: String = chars.iter().filter(|c| !"#@$*".contains(**c)).collect();
        if parse_real(&out).is_none() && (letters == golden || parse_real(&letters).is_none()) {
            return out;
        }
    }
    format!("#{golden}")
}

fn random_subset(rng: &mut SeededRng, cols: &[usize]) -> Vec<usize> {
    loop {
        let pick: Vec<usize> = cols.iter().copied().filter(|_| rng.coin()).collect();
        if !pick.is_empty() {
            return pick;
        }
    }
}

fn non_identity_permutation(rng: &mut SeededRng, n: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    if n < 2 {
        return perm;
    }
    loop {
        rng.shuffle(&mut perm);
        if perm.iter().enumerate().any(|(i, &p)| i != p) {
            return perm;
        }
    }
}

/// Evenly spaced values from the block's first to last clean timestamp,
/// printed with as many decimals as the widest clean value. Empty when
/// either end is not a real.
fn fresh_timestamps(t: &Table, col: usize, start: usize, len: usize) -> Vec<String> {
    let cells: Vec<String> = (start..start + len).map(|r| t.cell(r, col).render()).collect();
    let (Some(first), Some(last)) = (
        parse_real(&cells[0]),
        parse_real(&cells[len - 1]),
    ) else {
        return Vec::new();
    };
    let decimals = cells
        .iter()
        .map(|c| c.split_once('.').map_or(0, |(_, f)| f.len()))
        .max()
        .unwrap_or(0);
    let step = if len > 1 { (last - first) / (len - 1) as f64 } else { 0.0 };
    (0..len)
        .map(|i| format!("{:.*}", decimals, first + step * i as f64))
        .collect()
}
