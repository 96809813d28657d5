//! The individual sanitisation operations. Each one is a pure function from
//! cells (or a table) to new cells plus counts; the engine sequences them.

use regex::Regex;

use super::report::RuleCounts;
use crate::dsl::{
    Comparator, Condition, DataType, GlobalFilterKind, ImputeStrategy, InterpolationKind, Literal,
    Range,
};
use crate::table::{parse_cell, CellValue, Table};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum OpError {
    #[error("expected numeric cells but found {found:?} at row {row}")]
    Contract { row: usize, found: String },
    #[error("cannot impute: no values present")]
    AllMissing,
    #[error("comparator `{comparator}` needs numeric cells but found {found:?} at row {row}")]
    Type {
        comparator: &'static str,
        row: usize,
        found: String,
    },
}

/// Removes a literal substring or every match of a pattern.
#[derive(Clone, Debug)]
pub enum Stripper {
    Literal(String),
    Regex(Regex),
}

impl Stripper {
    pub fn literal(s: impl Into<String>) -> Self {
        Stripper::Literal(s.into())
    }

    /// The pattern must already be known to compile (the parser checks).
    pub fn regex(pattern: &str) -> Self {
        Stripper::Regex(Regex::new(pattern).expect("pattern validated at parse time"))
    }

    fn strip<'a>(&self, s: &'a str) -> std::borrow::Cow<'a, str> {
        match self {
            Stripper::Literal(l) => {
                if s.contains(l.as_str()) {
                    s.replace(l.as_str(), "").into()
                } else {
                    s.into()
                }
            }
            Stripper::Regex(re) => re.replace_all(s, ""),
        }
    }
}

/// Strip from every text cell; a cell stripped down to nothing becomes
/// missing. Numbers and booleans are left alone.
pub fn strip_cells(cells: &mut [CellValue], stripper: &Stripper) -> RuleCounts {
    let mut counts = RuleCounts::default();
    for cell in cells.iter_mut() {
        if let CellValue::Text(s) = cell {
            let stripped = stripper.strip(s);
            if stripped.len() != s.len() {
                if stripped.is_empty() {
                    counts.emptied += 1;
                    *cell = CellValue::Missing;
                } else {
                    counts.modified += 1;
                    *cell = CellValue::Text(stripped.into_owned());
                }
            }
        }
    }
    counts
}

/// Apply file-wide filters in order. Returns the filtered table and the
/// counts for each filter. `SkipMalformedRows` acts while reading, so it
/// changes nothing here.
pub fn apply_global_filters(
    table: &Table,
    filters: &[GlobalFilterKind],
) -> (Table, Vec<RuleCounts>) {
    let mut table = table.clone();
    let mut all = Vec::with_capacity(filters.len());
    for f in filters {
        let mut counts = RuleCounts::default();
        match f {
            GlobalFilterKind::SkipEmptyRows => {
                let before = table.row_count();
                table = table.retain_rows(|r| !table.columns().iter().all(|c| c[r].is_missing()));
                counts.rows_dropped = before - table.row_count();
            }
            GlobalFilterKind::SkipMalformedRows => {}
            GlobalFilterKind::SkipLiteral(s) => {
                let stripper = Stripper::literal(s.clone());
                for col in table.columns_mut() {
                    counts += strip_cells(col, &stripper);
                }
            }
            GlobalFilterKind::SkipRegex(p) => {
                let stripper = Stripper::regex(p);
                for col in table.columns_mut() {
                    counts += strip_cells(col, &stripper);
                }
            }
        }
        all.push(counts);
    }
    (table, all)
}

/// Replace each cell by its parsed form; unparsable cells become missing and
/// are counted as emptied.
pub fn enforce_type(cells: &mut [CellValue], ty: DataType) -> RuleCounts {
    let mut counts = RuleCounts::default();
    for cell in cells.iter_mut() {
        match parse_cell(cell, ty) {
            Ok(v) => *cell = v,
            Err(_) => {
                *cell = CellValue::Missing;
                counts.emptied += 1;
            }
        }
    }
    counts
}

fn numeric_at(cells: &[CellValue], rows: impl Iterator<Item = usize>) -> Result<(), OpError> {
    for (i, cell) in rows.map(|r| (r, &cells[r])) {
        if !matches!(cell, CellValue::Missing | CellValue::Number(_)) {
            return Err(OpError::Contract {
                row: i,
                found: cell.render(),
            });
        }
    }
    Ok(())
}

/// Empty every number outside `range`. Cells must already be numeric.
pub fn enforce_range(cells: &mut [CellValue], range: &Range) -> Result<RuleCounts, OpError> {
    numeric_at(cells, 0..cells.len())?;
    let mut counts = RuleCounts::default();
    for cell in cells.iter_mut() {
        if let Some(v) = cell.as_f64() {
            if !range.contains(v) {
                *cell = CellValue::Missing;
                counts.emptied += 1;
            }
        }
    }
    Ok(counts)
}

/// Fill missing cells of a numeric column.
///
/// `positions` gives the abscissa for interpolation (row index when
/// `None`). Cells that a directional strategy cannot reach stay missing and
/// are counted as `unfilled`; boundary cells filled by flat extrapolation
/// during interpolation are counted as both `imputed` and `extrapolated`.
#[allow(clippy::needless_range_loop)]
pub fn impute(
    cells: &mut [CellValue],
    strategy: ImputeStrategy,
    positions: Option<&[f64]>,
) -> Result<RuleCounts, OpError> {
    numeric_at(cells, 0..cells.len())?;
    let mut counts = RuleCounts::default();
    let valid: Vec<(usize, f64)> = cells
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.as_f64().map(|v| (i, v)))
        .collect();
    if valid.len() == cells.len() {
        return Ok(counts);
    }
    if valid.is_empty() {
        return Err(OpError::AllMissing);
    }
    let pos = |i: usize| positions.map_or(i as f64, |p| p[i]);

    match strategy {
        ImputeStrategy::Mean => {
            let mean = valid.iter().map(|(_, v)| v).sum::<f64>() / valid.len() as f64;
            let lo = valid.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
            let hi = valid.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
            // Summation rounding must not push the mean outside the data.
            let mean = mean.clamp(lo, hi);
            for cell in cells.iter_mut().filter(|c| c.is_missing()) {
                *cell = CellValue::number(mean);
                counts.imputed += 1;
            }
        }
        ImputeStrategy::Last => {
            let mut last = None;
            for cell in cells.iter_mut() {
                match (cell.is_missing(), &last) {
                    (false, _) => last = Some(cell.clone()),
                    (true, Some(v)) => {
                        *cell = v.clone();
                        counts.imputed += 1;
                    }
                    (true, None) => counts.unfilled += 1,
                }
            }
        }
        ImputeStrategy::Next => {
            let mut next = None;
            for cell in cells.iter_mut().rev() {
                match (cell.is_missing(), &next) {
                    (false, _) => next = Some(cell.clone()),
                    (true, Some(v)) => {
                        *cell = v.clone();
                        counts.imputed += 1;
                    }
                    (true, None) => counts.unfilled += 1,
                }
            }
        }
        ImputeStrategy::Interpolation(kind) => {
            // `k` indexes the first valid cell at or after `i`.
            let mut k = 0;
            for i in 0..cells.len() {
                if k < valid.len() && valid[k].0 == i {
                    k += 1;
                    continue;
                }
                let before = k.checked_sub(1).map(|j| valid[j]);
                let after = valid.get(k).copied();
                let v = match (before, after) {
                    (Some((a, va)), Some((b, vb))) => match kind {
                        InterpolationKind::Linear => {
                            let (xa, xb, x) = (pos(a), pos(b), pos(i));
                            let v = va + (vb - va) * ((x - xa) / (xb - xa));
                            // Rounding must not leave the bracketing values.
                            v.clamp(va.min(vb), va.max(vb))
                        }
                        InterpolationKind::Nearest => {
                            if pos(i) - pos(a) <= pos(b) - pos(i) {
                                va
                            } else {
                                vb
                            }
                        }
                    },
                    (Some((_, v)), None) | (None, Some((_, v))) => {
                        counts.extrapolated += 1;
                        v
                    }
                    (None, None) => unreachable!("at least one valid value"),
                };
                cells[i] = CellValue::number(v);
                counts.imputed += 1;
            }
        }
    }
    Ok(counts)
}

fn sort_keys(table: &Table, col: usize) -> Result<Vec<Option<f64>>, OpError> {
    let cells = table.column(col);
    numeric_at(cells, 0..cells.len())?;
    Ok(cells.iter().map(CellValue::as_f64).collect())
}

/// Row permutation that stably sorts by a numeric column. Rows with a
/// missing key keep their relative order and go last.
pub fn sort_order(table: &Table, col: usize, ascending: bool) -> Result<Vec<usize>, OpError> {
    let keys = sort_keys(table, col)?;
    let mut order: Vec<usize> = (0..table.row_count()).collect();
    order.sort_by(|&a, &b| match (keys[a], keys[b]) {
        (Some(x), Some(y)) => {
            let o = x.total_cmp(&y);
            if ascending {
                o
            } else {
                o.reverse()
            }
        }
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(order)
}

pub fn sort_rows(table: &Table, col: usize, ascending: bool) -> Result<Table, OpError> {
    Ok(table.select_rows(&sort_order(table, col, ascending)?))
}

/// Indices of the rows kept by a single forward pass that drops any row whose
/// key is below the running maximum. Missing keys are kept and leave the
/// maximum alone.
pub fn in_order_rows(table: &Table, col: usize) -> Result<Vec<usize>, OpError> {
    let keys = sort_keys(table, col)?;
    let mut max = f64::NEG_INFINITY;
    Ok((0..keys.len())
        .filter(|&r| match keys[r] {
            None => true,
            Some(k) if k < max => false,
            Some(k) => {
                max = k;
                true
            }
        })
        .collect())
}

/// Returns the filtered table and the indices of the dropped rows.
pub fn skip_out_of_order(table: &Table, col: usize) -> Result<(Table, Vec<usize>), OpError> {
    let kept = in_order_rows(table, col)?;
    let mut dropped = Vec::new();
    let mut it = kept.iter().peekable();
    for r in 0..table.row_count() {
        if it.peek() == Some(&&r) {
            it.next();
        } else {
            dropped.push(r);
        }
    }
    Ok((table.select_rows(&kept), dropped))
}

/// Whether `cell` satisfies the condition. Missing cells satisfy nothing.
pub fn condition_holds(cell: &CellValue, cond: &Condition, row: usize) -> Result<bool, OpError> {
    if cell.is_missing() {
        return Ok(false);
    }
    if cond.comparator.is_ordering() {
        let (Some(x), Literal::Number(lit)) = (cell.as_f64(), &cond.literal) else {
            return Err(OpError::Type {
                comparator: cond.comparator.symbol(),
                row,
                found: cell.render(),
            });
        };
        return Ok(match cond.comparator {
            Comparator::Lt => x < *lit,
            Comparator::Le => x <= *lit,
            Comparator::Gt => x > *lit,
            _ => x >= *lit,
        });
    }
    let equal = match (cell.as_f64(), &cond.literal) {
        (Some(x), Literal::Number(lit)) => x == *lit,
        (_, Literal::Number(lit)) => cell.render() == crate::dsl::render_number(*lit),
        (_, Literal::Text(t)) => cell.render() == *t,
    };
    Ok(match cond.comparator {
        Comparator::Eq => equal,
        Comparator::Ne => !equal,
        _ => {
            let needle = match &cond.literal {
                Literal::Text(t) => t.clone(),
                Literal::Number(v) => crate::dsl::render_number(*v),
            };
            cell.render().contains(&needle)
        }
    })
}

/// Rows among `rows` whose cell in `cond_col` satisfies the condition.
pub fn matching_rows(
    table: &Table,
    cond_col: usize,
    cond: &Condition,
    rows: &[usize],
) -> Result<Vec<usize>, OpError> {
    let cells = table.column(cond_col);
    let mut out = Vec::new();
    for &r in rows {
        if condition_holds(&cells[r], cond, r)? {
            out.push(r);
        }
    }
    Ok(out)
}
