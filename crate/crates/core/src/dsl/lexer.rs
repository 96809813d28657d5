use super::ast::Span;
use super::error::SyntaxError;

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Word(String),
    Str(String),
    Number(f64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => format!("`{w}`"),
            TokenKind::Str(_) => "string".into(),
            TokenKind::Number(_) => "number".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::EqEq => "`==`".into(),
            TokenKind::NotEq => "`!=`".into(),
            TokenKind::Lt => "`<`".into(),
            TokenKind::Le => "`<=`".into(),
            TokenKind::Gt => "`>`".into(),
            TokenKind::Ge => "`>=`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.column)
    }
}

fn unexpected(span: Span, found: &str, expected: &[&str]) -> SyntaxError {
    SyntaxError {
        span,
        found: found.to_string(),
        expected: expected.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        chars: src.chars().peekable(),
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();

    while let Some(c) = cur.peek() {
        let span = cur.span();
        match c {
            c if c.is_whitespace() => {
                cur.bump();
            }
            '#' => {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            }
            '{' | '}' | '[' | ']' | '(' | ')' | ',' => {
                cur.bump();
                let kind = match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    _ => TokenKind::Comma,
                };
                out.push(Token { kind, span });
            }
            '=' | '!' => {
                cur.bump();
                if cur.peek() == Some('=') {
                    cur.bump();
                    let kind = if c == '=' {
                        TokenKind::EqEq
                    } else {
                        TokenKind::NotEq
                    };
                    out.push(Token { kind, span });
                } else {
                    let expected = if c == '=' { "`==`" } else { "`!=`" };
                    return Err(unexpected(span, &format!("`{c}`"), &[expected]));
                }
            }
            '<' | '>' => {
                cur.bump();
                let eq = cur.peek() == Some('=');
                if eq {
                    cur.bump();
                }
                let kind = match (c, eq) {
                    ('<', false) => TokenKind::Lt,
                    ('<', true) => TokenKind::Le,
                    ('>', false) => TokenKind::Gt,
                    _ => TokenKind::Ge,
                };
                out.push(Token { kind, span });
            }
            '"' | '\'' => {
                let text = lex_string(&mut cur, span)?;
                out.push(Token {
                    kind: TokenKind::Str(text),
                    span,
                });
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let value = lex_number(&mut cur, span)?;
                out.push(Token {
                    kind: TokenKind::Number(value),
                    span,
                });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut word = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        word.push(c);
                        cur.bump();
                    } else {
                        break;
                    }
                }
                out.push(Token {
                    kind: TokenKind::Word(word),
                    span,
                });
            }
            other => {
                return Err(unexpected(
                    span,
                    &format!("{other:?}"),
                    &["keyword", "string", "number", "punctuation"],
                ));
            }
        }
    }

    out.push(Token {
        kind: TokenKind::Eof,
        span: cur.span(),
    });
    Ok(out)
}

fn lex_string(cur: &mut Cursor<'_>, start: Span) -> Result<String, SyntaxError> {
    let quote = cur.bump().expect("caller peeked a quote");
    let mut text = String::new();
    loop {
        match cur.bump() {
            None => {
                return Err(unexpected(
                    start,
                    "unterminated string",
                    &[if quote == '"' { "`\"`" } else { "`'`" }],
                ))
            }
            Some('\\') => {
                let at = cur.span();
                match cur.bump() {
                    Some(c @ ('\\' | '"' | '\'')) => text.push(c),
                    Some(c) => {
                        return Err(unexpected(
                            at,
                            &format!("escape `\\{c}`"),
                            &["`\\\\`", "`\\\"`", "`\\'`"],
                        ))
                    }
                    None => return Err(unexpected(at, "end of input", &["escape character"])),
                }
            }
            Some(c) if c == quote => return Ok(text),
            Some(c) => text.push(c),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, start: Span) -> Result<f64, SyntaxError> {
    let mut raw = String::new();
    if let Some(c @ ('-' | '+')) = cur.peek() {
        raw.push(c);
        cur.bump();
    }
    let mut int_digits = 0;
    while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
        raw.push(c);
        cur.bump();
        int_digits += 1;
    }
    let mut frac_digits = 0;
    if cur.peek() == Some('.') {
        raw.push('.');
        cur.bump();
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            raw.push(c);
            cur.bump();
            frac_digits += 1;
        }
    }
    if int_digits + frac_digits == 0 {
        return Err(unexpected(start, &format!("`{raw}`"), &["number"]));
    }
    if let Some(e @ ('e' | 'E')) = cur.peek() {
        raw.push(e);
        cur.bump();
        if let Some(c @ ('-' | '+')) = cur.peek() {
            raw.push(c);
            cur.bump();
        }
        let mut exp_digits = 0;
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            raw.push(c);
            cur.bump();
            exp_digits += 1;
        }
        if exp_digits == 0 {
            return Err(unexpected(start, &format!("`{raw}`"), &["exponent digits"]));
        }
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(unexpected(start, &format!("`{raw}`"), &["finite number"])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn strings_accept_both_quotes_and_escapes() {
        assert_eq!(
            kinds(r#"'a\'b' "c\"d\\""#),
            vec![
                TokenKind::Str("a'b".into()),
                TokenKind::Str("c\"d\\".into()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn numbers_with_sign_fraction_exponent() {
        assert_eq!(
            kinds("-4.9 +1e3 .5 2."),
            vec![
                TokenKind::Number(-4.9),
                TokenKind::Number(1000.0),
                TokenKind::Number(0.5),
                TokenKind::Number(2.0),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn comments_run_to_end_of_line() {
        assert_eq!(
            kinds("skip # ignored {\n rows"),
            vec![
                TokenKind::Word("skip".into()),
                TokenKind::Word("rows".into()),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let toks = tokenize("import\n  \"x\"").unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.column), (2, 3));
    }

    #[test]
    fn rejects_overflowing_numbers_and_bad_escapes() {
        assert!(tokenize("1e999").is_err());
        assert!(tokenize(r#""\n""#).is_err());
        assert!(tokenize("'open").is_err());
        assert!(tokenize("=").is_err());
    }
}
