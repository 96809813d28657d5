//! Recursive-descent parser for the CPSLint grammar.

use regex::Regex;

use super::ast::*;
use super::error::{ParseError, SyntaxError};
use super::lexer::{tokenize, Token, TokenKind};

/// Parse a complete script.
///
/// Besides syntax, this checks the two structural rules every script must
/// obey (at most one `import`/`inspect`, `export` only after `import`) and
/// that every regular expression compiles.
pub fn parse_script(src: &str) -> Result<Script, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    parser.script()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        let tok = self.peek();
        ParseError::Syntax(SyntaxError {
            span: tok.span,
            found: tok.kind.describe(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn at_word(&self, word: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Word(w) if w == word)
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if self.at_word(word) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<Span, ParseError> {
        if self.at_word(word) {
            Ok(self.advance().span)
        } else {
            Err(self.error(&[&format!("`{word}`")]))
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Span, ParseError> {
        if self.peek().kind == kind {
            Ok(self.advance().span)
        } else {
            Err(self.error(&[&kind.describe()]))
        }
    }

    fn string(&mut self) -> Result<(String, Span), ParseError> {
        match &self.peek().kind {
            TokenKind::Str(s) => {
                let s = s.clone();
                Ok((s, self.advance().span))
            }
            _ => Err(self.error(&["string"])),
        }
    }

    fn nonempty_string(&mut self, what: &str) -> Result<(String, Span), ParseError> {
        let (s, span) = self.string()?;
        if s.is_empty() {
            return Err(ParseError::Syntax(SyntaxError {
                span,
                found: "empty string".into(),
                expected: vec![format!("non-empty {what}")],
            }));
        }
        Ok((s, span))
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        match self.peek().kind {
            TokenKind::Number(v) => {
                self.advance();
                Ok(v)
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn regex(&mut self) -> Result<String, ParseError> {
        let (pattern, span) = self.nonempty_string("regular expression")?;
        Regex::new(&pattern).map_err(|e| ParseError::Regex {
            span,
            message: e.to_string(),
        })?;
        Ok(pattern)
    }

    fn script(&mut self) -> Result<Script, ParseError> {
        let mut actions = Vec::new();
        let mut seen_import = false;
        let mut seen_inspect = false;
        loop {
            let span = self.peek().span;
            if self.at_word("inspect") {
                if seen_inspect {
                    return Err(ParseError::Structure {
                        span,
                        message: "a script may contain at most one `inspect` action".into(),
                    });
                }
                seen_inspect = true;
                actions.push(Action::Inspect(self.inspect()?));
            } else if self.at_word("import") {
                if seen_import {
                    return Err(ParseError::Structure {
                        span,
                        message: "a script may contain at most one `import` action".into(),
                    });
                }
                seen_import = true;
                actions.push(Action::Import(self.import()?));
            } else if self.at_word("export") {
                if !seen_import {
                    return Err(ParseError::Structure {
                        span,
                        message: "`export` requires an earlier `import` action".into(),
                    });
                }
                actions.push(Action::Export(self.export()?));
            } else if self.peek().kind == TokenKind::Eof && !actions.is_empty() {
                return Ok(Script { actions });
            } else {
                return Err(self.error(&["`inspect`", "`import`", "`export`"]));
            }
        }
    }

    fn inspect(&mut self) -> Result<InspectAction, ParseError> {
        let span = self.expect_word("inspect")?;
        let (input_path, _) = self.nonempty_string("input path")?;
        self.expect_word("into")?;
        let (output_path, _) = self.nonempty_string("output path")?;
        Ok(InspectAction {
            input_path,
            output_path,
            span,
        })
    }

    fn import(&mut self) -> Result<ImportAction, ParseError> {
        let span = self.expect_word("import")?;
        let (input_path, _) = self.nonempty_string("input path")?;
        self.expect(TokenKind::LBrace)?;
        let mut global_filters = Vec::new();
        while self.peek().kind != TokenKind::RBrace {
            let span = self.peek().span;
            if !self.eat_word("skip") {
                return Err(self.error(&["`skip`", "`}`"]));
            }
            let kind = if self.eat_word("empty") {
                self.expect_word("rows")?;
                GlobalFilterKind::SkipEmptyRows
            } else if self.eat_word("malformed") {
                self.expect_word("rows")?;
                GlobalFilterKind::SkipMalformedRows
            } else if self.eat_word("regex") {
                GlobalFilterKind::SkipRegex(self.regex()?)
            } else if matches!(self.peek().kind, TokenKind::Str(_)) {
                GlobalFilterKind::SkipLiteral(self.nonempty_string("substring")?.0)
            } else {
                return Err(self.error(&["`empty`", "`malformed`", "`regex`", "string"]));
            };
            global_filters.push(GlobalFilter { kind, span });
        }
        self.expect(TokenKind::RBrace)?;
        Ok(ImportAction {
            input_path,
            global_filters,
            span,
        })
    }

    fn export(&mut self) -> Result<ExportAction, ParseError> {
        let span = self.expect_word("export")?;
        let (output_path, _) = self.nonempty_string("output path")?;
        self.expect(TokenKind::LBrace)?;
        let mut export = ExportAction {
            output_path,
            mappings: Vec::new(),
            row_rules: Vec::new(),
            cut: None,
            span,
        };
        while self.peek().kind != TokenKind::RBrace {
            let span = self.peek().span;
            if self.eat_word("column") {
                let (source_name, _) = self.nonempty_string("column name")?;
                let target_name = if self.eat_word("as") {
                    self.nonempty_string("column name")?.0
                } else {
                    source_name.clone()
                };
                let rules = self.rule_block()?;
                export.mappings.push(ColumnMapping {
                    source_name,
                    target_name,
                    rules,
                    span,
                });
            } else if self.eat_word("sort") {
                self.expect_word("by")?;
                let (column, _) = self.nonempty_string("column name")?;
                let ascending = if self.eat_word("descending") {
                    false
                } else {
                    self.eat_word("ascending");
                    true
                };
                export.row_rules.push(RowRule {
                    kind: RowRuleKind::SortBy { column, ascending },
                    span,
                });
            } else if self.eat_word("skip") {
                self.expect_word("out")?;
                self.expect_word("of")?;
                self.expect_word("order")?;
                self.expect_word("by")?;
                let (column, _) = self.nonempty_string("column name")?;
                export.row_rules.push(RowRule {
                    kind: RowRuleKind::SkipOutOfOrder { column },
                    span,
                });
            } else if self.eat_word("cut") {
                if export.cut.is_some() {
                    return Err(ParseError::Structure {
                        span,
                        message: "an export may contain at most one `cut` rule".into(),
                    });
                }
                self.expect_word("on")?;
                self.expect_word("column")?;
                let (column, _) = self.nonempty_string("column name")?;
                self.expect_word("contains")?;
                let (marker, _) = self.nonempty_string("marker")?;
                self.expect_word("into")?;
                let (prefix, _) = self.string()?;
                export.cut = Some(CutRule {
                    column,
                    marker,
                    prefix,
                    span,
                });
            } else {
                return Err(self.error(&["`column`", "`sort`", "`skip`", "`cut`", "`}`"]));
            }
        }
        self.expect(TokenKind::RBrace)?;
        Ok(export)
    }

    fn rule_block(&mut self) -> Result<Vec<ColumnRule>, ParseError> {
        self.expect(TokenKind::LBrace)?;
        let mut rules = Vec::new();
        while self.peek().kind != TokenKind::RBrace {
            rules.push(self.column_rule()?);
        }
        self.expect(TokenKind::RBrace)?;
        Ok(rules)
    }

    fn column_rule(&mut self) -> Result<ColumnRule, ParseError> {
        let span = self.peek().span;
        let kind = if self.eat_word("enforce") {
            self.expect_word("type")?;
            ColumnRuleKind::EnforceType(self.data_type()?)
        } else if self.eat_word("valid") {
            self.expect_word("range")?;
            ColumnRuleKind::ValidRange(self.range()?)
        } else if self.eat_word("impute") {
            ColumnRuleKind::Impute(self.strategy()?)
        } else if self.eat_word("skip") {
            if self.eat_word("regex") {
                ColumnRuleKind::StripRegex(self.regex()?)
            } else if matches!(self.peek().kind, TokenKind::Str(_)) {
                ColumnRuleKind::StripLiteral(self.nonempty_string("substring")?.0)
            } else {
                return Err(self.error(&["`regex`", "string"]));
            }
        } else if self.eat_word("when") {
            let (column, _) = self.nonempty_string("column name")?;
            let comparator = self.comparator()?;
            let literal = match &self.peek().kind {
                TokenKind::Str(s) => {
                    let s = s.clone();
                    self.advance();
                    Literal::Text(s)
                }
                TokenKind::Number(v) => {
                    let v = *v;
                    self.advance();
                    Literal::Number(v)
                }
                _ => return Err(self.error(&["string", "number"])),
            };
            let rules = self.rule_block()?;
            ColumnRuleKind::Conditional(
                Condition {
                    column,
                    comparator,
                    literal,
                    span,
                },
                rules,
            )
        } else {
            return Err(self.error(&[
                "`enforce`",
                "`valid`",
                "`impute`",
                "`skip`",
                "`when`",
                "`}`",
            ]));
        };
        Ok(ColumnRule { kind, span })
    }

    fn data_type(&mut self) -> Result<DataType, ParseError> {
        let t = match &self.peek().kind {
            TokenKind::Word(w) => match w.as_str() {
                "int" => DataType::Int,
                "bool" => DataType::Bool,
                "real" => DataType::Real,
                "uart" => DataType::Uart,
                "text" => DataType::Text,
                _ => return Err(self.type_error()),
            },
            _ => return Err(self.type_error()),
        };
        self.advance();
        Ok(t)
    }

    fn type_error(&self) -> ParseError {
        self.error(&["`int`", "`bool`", "`real`", "`uart`", "`text`"])
    }

    fn range(&mut self) -> Result<Range, ParseError> {
        let low_inclusive = match self.peek().kind {
            TokenKind::LBracket => true,
            TokenKind::LParen => false,
            _ => return Err(self.error(&["`[`", "`(`"])),
        };
        self.advance();
        let low = self.number()?;
        self.expect(TokenKind::Comma)?;
        let high = self.number()?;
        let high_inclusive = match self.peek().kind {
            TokenKind::RBracket => true,
            TokenKind::RParen => false,
            _ => return Err(self.error(&["`]`", "`)`"])),
        };
        self.advance();
        Ok(Range {
            low,
            low_inclusive,
            high,
            high_inclusive,
        })
    }

    fn strategy(&mut self) -> Result<ImputeStrategy, ParseError> {
        if self.eat_word("mean") {
            Ok(ImputeStrategy::Mean)
        } else if self.eat_word("last") {
            Ok(ImputeStrategy::Last)
        } else if self.eat_word("next") {
            Ok(ImputeStrategy::Next)
        } else if self.eat_word("interpolation") {
            let kind = if self.eat_word("nearest") {
                InterpolationKind::Nearest
            } else {
                self.eat_word("linear");
                InterpolationKind::Linear
            };
            Ok(ImputeStrategy::Interpolation(kind))
        } else {
            Err(self.error(&["`mean`", "`last`", "`next`", "`interpolation`"]))
        }
    }

    fn comparator(&mut self) -> Result<Comparator, ParseError> {
        let cmp = match &self.peek().kind {
            TokenKind::EqEq => Comparator::Eq,
            TokenKind::NotEq => Comparator::Ne,
            TokenKind::Lt => Comparator::Lt,
            TokenKind::Le => Comparator::Le,
            TokenKind::Gt => Comparator::Gt,
            TokenKind::Ge => Comparator::Ge,
            TokenKind::Word(w) if w == "contains" => Comparator::Contains,
            _ => {
                return Err(self.error(&["`==`", "`!=`", "`<`", "`<=`", "`>`", "`>=`", "`contains`"]))
            }
        };
        self.advance();
        Ok(cmp)
    }
}
