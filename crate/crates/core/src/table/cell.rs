use std::fmt;

use crate::dsl::DataType;

/// A finite number, remembering the text it was parsed from.
///
/// Numbers that come straight from a file keep their lexeme so that writing
/// them back out reproduces the input bytes. Computed numbers have no lexeme
/// and are written in shortest round-trip form.
#[derive(Clone, Debug, PartialEq)]
pub struct Number {
    value: f64,
    lexeme: Option<Box<str>>,
}

impl Number {
    /// Panics if `value` is NaN or infinite.
    pub fn new(value: f64) -> Self {
        assert!(value.is_finite(), "cell numbers must be finite, got {value}");
        Number {
            value,
            lexeme: None,
        }
    }

    fn parsed(value: f64, lexeme: &str) -> Self {
        Number {
            value,
            lexeme: Some(lexeme.into()),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn lexeme(&self) -> Option<&str> {
        self.lexeme.as_deref()
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lexeme {
            Some(l) => f.write_str(l),
            // Debug is the shortest round-trip form and keeps a `.0` on
            // integral values.
            None => write!(f, "{:?}", self.value),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CellValue {
    Missing,
    Text(String),
    Number(Number),
    Boolean(bool),
}

impl CellValue {
    /// Text cell, or `Missing` for the empty string.
    pub fn text(s: impl Into<String>) -> Self {
        let s = s.into();
        if s.is_empty() {
            CellValue::Missing
        } else {
            CellValue::Text(s)
        }
    }

    pub fn number(v: f64) -> Self {
        CellValue::Number(Number::new(v))
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, CellValue::Missing)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            CellValue::Number(n) => Some(n.value),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            CellValue::Text(s) => Some(s),
            _ => None,
        }
    }

    /// The field text this cell is written as; empty for `Missing`.
    pub fn render(&self) -> String {
        match self {
            CellValue::Missing => String::new(),
            CellValue::Text(s) => s.clone(),
            CellValue::Number(n) => n.to_string(),
            CellValue::Boolean(b) => b.to_string(),
        }
    }
}

/// Marker returned by [`parse_cell`] when a cell does not fit a type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NotParsable;

/// Interpret a cell as `ty`. Total and deterministic: `Missing` stays
/// `Missing`, text and uart accept anything, and every other mismatch is
/// reported as [`NotParsable`] for the caller to act on.
pub fn parse_cell(cell: &CellValue, ty: DataType) -> Result<CellValue, NotParsable> {
    match (cell, ty) {
        (CellValue::Missing, _) => Ok(CellValue::Missing),
        (CellValue::Text(_), DataType::Text | DataType::Uart) => Ok(cell.clone()),
        (other, DataType::Text | DataType::Uart) => Ok(CellValue::text(other.render())),
        (CellValue::Text(s), DataType::Int) => parse_int(s)
            .map(|v| CellValue::Number(Number::parsed(v, s)))
            .ok_or(NotParsable),
        (CellValue::Text(s), DataType::Real) => parse_real(s)
            .map(|v| CellValue::Number(Number::parsed(v, s)))
            .ok_or(NotParsable),
        (CellValue::Text(s), DataType::Bool) => parse_bool(s).map(CellValue::Boolean).ok_or(NotParsable),
        (CellValue::Number(_), DataType::Real) => Ok(cell.clone()),
        (CellValue::Number(n), DataType::Int) if n.value.fract() == 0.0 => Ok(cell.clone()),
        (CellValue::Boolean(_), DataType::Bool) => Ok(cell.clone()),
        _ => Err(NotParsable),
    }
}

/// Optional sign followed by ASCII digits, fitting in an `i64`.
pub fn parse_int(s: &str) -> Option<f64> {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<i64>().ok().map(|v| v as f64)
}

/// Decimal notation: optional sign, digits with an optional fraction (at
/// least one digit overall), optional exponent. Rejects `inf`, `NaN`, hex and
/// anything that overflows to infinity.
pub fn parse_real(s: &str) -> Option<f64> {
    let b = s.as_bytes();
    let mut i = 0;
    if matches!(b.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut mantissa_digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        mantissa_digits += i - frac_start;
    }
    if mantissa_digits == 0 {
        return None;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return None;
        }
    }
    if i != b.len() {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// `true` / `false`, case-insensitive. Nothing else.
pub fn parse_bool(s: &str) -> Option<bool> {
    if s.eq_ignore_ascii_case("true") {
        Some(true)
    } else if s.eq_ignore_ascii_case("false") {
        Some(false)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text(s: &str) -> CellValue {
        CellValue::text(s)
    }

    #[test]
    fn real_parsing() {
        assert_eq!(parse_cell(&text("5.01"), DataType::Real).unwrap().as_f64(), Some(5.01));
        assert_eq!(parse_cell(&text("5.0a1"), DataType::Real), Err(NotParsable));
        for ok in ["1", "-1.5", "+.5", "2.", "1e3", "1E-3", "0.001"] {
            assert!(parse_real(ok).is_some(), "{ok}");
        }
        for bad in ["", ".", "-", "e3", "1e", "inf", "NaN", "0x10", "1,5", " 1", "1e999", "5.0#1"] {
            assert!(parse_real(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn int_parsing_is_strict() {
        assert_eq!(parse_cell(&text("42"), DataType::Int).unwrap().as_f64(), Some(42.0));
        assert_eq!(parse_cell(&text("2.5"), DataType::Int), Err(NotParsable));
        assert_eq!(parse_cell(&text("1e3"), DataType::Int), Err(NotParsable));
        assert_eq!(
            parse_cell(&CellValue::number(2.5), DataType::Int),
            Err(NotParsable)
        );
    }

    #[test]
    fn bool_lexicon() {
        assert_eq!(parse_cell(&text("true"), DataType::Bool), Ok(CellValue::Boolean(true)));
        assert_eq!(parse_cell(&text("FALSE"), DataType::Bool), Ok(CellValue::Boolean(false)));
        assert_eq!(parse_cell(&text("2"), DataType::Bool), Err(NotParsable));
        assert_eq!(parse_cell(&text("1"), DataType::Bool), Err(NotParsable));
    }

    #[test]
    fn missing_and_textual_types() {
        for ty in [DataType::Int, DataType::Real, DataType::Bool, DataType::Uart, DataType::Text] {
            assert_eq!(parse_cell(&CellValue::Missing, ty), Ok(CellValue::Missing));
        }
        assert_eq!(parse_cell(&text("@@ junk"), DataType::Uart), Ok(text("@@ junk")));
        assert_eq!(
            parse_cell(&CellValue::number(5.0), DataType::Text),
            Ok(text("5.0"))
        );
    }

    #[test]
    fn lexeme_is_preserved() {
        let c = parse_cell(&text("5.000"), DataType::Real).unwrap();
        assert_eq!(c.render(), "5.000");
        assert_eq!(CellValue::number(5.0).render(), "5.0");
        assert_eq!(CellValue::number(0.1 + 0.2).render(), "0.30000000000000004");
    }

    #[test]
    fn empty_text_is_missing() {
        assert_eq!(CellValue::text(""), CellValue::Missing);
    }
}
