//! Tokenizer for the SLEEC DSL.

use std::fmt;

use super::ast::{CompareOp, TimeUnit};
use super::diagnostic::{Category, Diagnostic, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    DefStart,
    DefEnd,
    RuleStart,
    RuleEnd,
    Event,
    Measure,
    Constant,
    When,
    Then,
    Not,
    Unless,
    Within,
    And,
    Or,
    Boolean,
    Numeric,
    Scale,
    // Reserved but unsupported constructs from the wider SLEEC family.
    Otherwise,
    Exists,
    Meanwhile,
}

impl Keyword {
    fn from_word(word: &str) -> Option<Keyword> {
        Some(match word {
            "def_start" => Keyword::DefStart,
            "def_end" => Keyword::DefEnd,
            "rule_start" => Keyword::RuleStart,
            "rule_end" => Keyword::RuleEnd,
            "event" => Keyword::Event,
            "measure" => Keyword::Measure,
            "constant" => Keyword::Constant,
            "when" => Keyword::When,
            "then" => Keyword::Then,
            "not" => Keyword::Not,
            "unless" => Keyword::Unless,
            "within" => Keyword::Within,
            "and" => Keyword::And,
            "or" => Keyword::Or,
            "boolean" => Keyword::Boolean,
            "numeric" => Keyword::Numeric,
            "scale" => Keyword::Scale,
            "otherwise" => Keyword::Otherwise,
            "exists" => Keyword::Exists,
            "meanwhile" => Keyword::Meanwhile,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::DefStart => "def_start",
            Keyword::DefEnd => "def_end",
            Keyword::RuleStart => "rule_start",
            Keyword::RuleEnd => "rule_end",
            Keyword::Event => "event",
            Keyword::Measure => "measure",
            Keyword::Constant => "constant",
            Keyword::When => "when",
            Keyword::Then => "then",
            Keyword::Not => "not",
            Keyword::Unless => "unless",
            Keyword::Within => "within",
            Keyword::And => "and",
            Keyword::Or => "or",
            Keyword::Boolean => "boolean",
            Keyword::Numeric => "numeric",
            Keyword::Scale => "scale",
            Keyword::Otherwise => "otherwise",
            Keyword::Exists => "exists",
            Keyword::Meanwhile => "meanwhile",
        }
    }

    pub fn is_unsupported(self) -> bool {
        matches!(self, Keyword::Otherwise | Keyword::Exists | Keyword::Meanwhile)
    }
}

fn unit_from_word(word: &str) -> Option<TimeUnit> {
    Some(match word {
        "second" | "seconds" => TimeUnit::Seconds,
        "minute" | "minutes" => TimeUnit::Minutes,
        "hour" | "hours" => TimeUnit::Hours,
        "day" | "days" => TimeUnit::Days,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Int(i64),
    Unit(TimeUnit),
    Op(CompareOp),
    Colon,
    Comma,
    LParen,
    RParen,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => write!(f, "`{}`", k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Int(v) => write!(f, "integer `{v}`"),
            TokenKind::Unit(u) => write!(f, "time unit `{}`", u.keyword(2)),
            TokenKind::Op(op) => write!(f, "`{}`", op.symbol()),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&pred) {
            self.bump();
        }
    }
}

/// Splits `text` into tokens. The returned list always ends with
/// [`TokenKind::Eof`]; unknown characters are skipped and reported.
pub fn tokenize_lossy(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        src: text,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    loop {
        cur.eat_while(char::is_whitespace);
        if cur.peek() == Some('/') && cur.peek2() == Some('/') {
            cur.eat_while(|c| c != '\n');
            continue;
        }
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let Some(c) = cur.bump() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                span: Span::new(start, start, line, col),
            });
            break;
        };
        let kind = match c {
            ':' => TokenKind::Colon,
            ',' => TokenKind::Comma,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            '=' => TokenKind::Op(CompareOp::Eq),
            '<' => match cur.peek() {
                Some('=') => {
                    cur.bump();
                    TokenKind::Op(CompareOp::Le)
                }
                Some('>') => {
                    cur.bump();
                    TokenKind::Op(CompareOp::Ne)
                }
                _ => TokenKind::Op(CompareOp::Lt),
            },
            '>' => {
                if cur.peek() == Some('=') {
                    cur.bump();
                    TokenKind::Op(CompareOp::Ge)
                } else {
                    TokenKind::Op(CompareOp::Gt)
                }
            }
            c if c.is_ascii_digit() || (c == '-' && cur.peek().is_some_and(|d| d.is_ascii_digit())) => {
                cur.eat_while(|d| d.is_ascii_digit());
                let lexeme = &text[start..cur.pos];
                match lexeme.parse::<i64>() {
                    Ok(v) => TokenKind::Int(v),
                    Err(_) => {
                        diags.push(Diagnostic::error(
                            Category::Syntax,
                            Span::new(start, cur.pos, line, col),
                            format!("integer literal `{lexeme}` does not fit in 64 bits"),
                        ));
                        continue;
                    }
                }
            }
            c if c.is_ascii_alphabetic() => {
                cur.eat_while(|d| d.is_ascii_alphanumeric() || d == '_');
                let word = &text[start..cur.pos];
                if let Some(kw) = Keyword::from_word(word) {
                    TokenKind::Keyword(kw)
                } else if let Some(unit) = unit_from_word(word) {
                    TokenKind::Unit(unit)
                } else {
                    TokenKind::Ident(word.to_string())
                }
            }
            other => {
                diags.push(Diagnostic::error(
                    Category::Syntax,
                    Span::new(start, cur.pos, line, col),
                    format!("unexpected character `{}`", other.escape_debug()),
                ));
                continue;
            }
        };
        tokens.push(Token {
            kind,
            span: Span::new(start, cur.pos, line, col),
        });
    }
    (tokens, diags)
}

/// Tokenizes `text`, failing if any character is not part of the language.
pub fn tokenize(text: &str) -> Result<Vec<Token>, Vec<Diagnostic>> {
    let (tokens, diags) = tokenize_lossy(text);
    if diags.is_empty() {
        Ok(tokens)
    } else {
        Err(diags)
    }
}
