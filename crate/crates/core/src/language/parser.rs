//! Recursive-descent parser for SLEEC documents.
//!
//! ```text
//! document  := 'def_start' def* 'def_end' 'rule_start' rule* 'rule_end'
//! def       := 'event' NAME
//!            | 'measure' NAME ':' ('boolean' | 'numeric' | 'scale' '(' NAME (',' NAME)* ')')
//!            | 'constant' NAME '=' INT
//! rule      := ID 'when' EVENT ['and' cond] 'then' response
//!              ('unless' cond ['then' response])*
//! response  := ['not'] EVENT ['within' INT UNIT]
//! cond      := and ('or' and)*
//! and       := unary ('and' unary)*
//! unary     := 'not' unary | '(' cond ')' | MEASURE [OP (INT | NAME)]
//! ```
//!
//! On a syntax error inside the rule block the parser skips to the next rule
//! header (`ID when`) so several errors can be reported in one pass.

use super::ast::*;
use super::diagnostic::{Category, Diagnostic, Span};
use super::lexer::{tokenize_lossy, Keyword, Token, TokenKind};

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Self {
        Self {
            tokens,
            pos: 0,
            diags: Vec::new(),
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, offset: usize) -> &Token {
        &self.tokens[(self.pos + offset).min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let tok = self.peek().clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].span.end
        }
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        self.peek().kind == TokenKind::Keyword(kw)
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, expected: &str) -> Diagnostic {
        let tok = self.peek();
        if let TokenKind::Keyword(kw) = tok.kind {
            if kw.is_unsupported() {
                return Diagnostic::error(
                    Category::Syntax,
                    tok.span,
                    format!("unsupported construct `{}`", kw.as_str()),
                );
            }
        }
        Diagnostic::error(
            Category::Syntax,
            tok.span,
            format!("expected {expected}, found {}", tok.kind),
        )
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Span> {
        if self.at_kw(kw) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{}`", kw.as_str())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<Ident> {
        match &self.peek().kind {
            TokenKind::Ident(name) => {
                let name = name.clone();
                let span = self.bump().span;
                Ok(Ident::spanned(name, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect_int(&mut self, what: &str) -> PResult<(i64, Span)> {
        match self.peek().kind {
            TokenKind::Int(v) => {
                let span = self.bump().span;
                Ok((v, span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn document(&mut self) -> Spec {
        let mut spec = Spec::default();
        if let Err(d) = self.expect_kw(Keyword::DefStart) {
            self.diags.push(d);
            // Without a definition block there is nothing sensible to recover.
            return spec;
        }
        self.definitions(&mut spec);
        match self.expect_kw(Keyword::RuleStart) {
            Ok(_) => self.rules(&mut spec, true),
            Err(d) => {
                self.diags.push(d);
                return spec;
            }
        }
        if self.peek().kind != TokenKind::Eof {
            let d = self.unexpected("end of input");
            self.diags.push(d);
        }
        spec
    }

    fn definitions(&mut self, spec: &mut Spec) {
        loop {
            let tok = self.peek().clone();
            let res = match tok.kind {
                TokenKind::Keyword(Keyword::DefEnd) => {
                    self.bump();
                    return;
                }
                TokenKind::Keyword(Keyword::Event) => {
                    self.bump();
                    self.expect_ident("an event name").map(|name| {
                        spec.source_spans.insert(NodeId::Event(spec.events.len()), name.span);
                        spec.events.push(EventDef { name });
                    })
                }
                TokenKind::Keyword(Keyword::Measure) => {
                    self.bump();
                    self.measure_def().map(|m| {
                        spec.source_spans.insert(NodeId::Measure(spec.measures.len()), m.name.span);
                        spec.measures.push(m);
                    })
                }
                TokenKind::Keyword(Keyword::Constant) => {
                    self.bump();
                    self.constant_def().map(|c| {
                        spec.source_spans
                            .insert(NodeId::Constant(spec.constants.len()), c.name.span);
                        spec.constants.push(c);
                    })
                }
                TokenKind::Keyword(Keyword::RuleStart) | TokenKind::Eof => {
                    let d = self.unexpected("`def_end`");
                    self.diags.push(d);
                    return;
                }
                _ => Err(self.unexpected("a definition (`event`, `measure` or `constant`) or `def_end`")),
            };
            if let Err(d) = res {
                self.diags.push(d);
                self.skip_to_definition();
            }
        }
    }

    fn skip_to_definition(&mut self) {
        loop {
            match self.peek().kind {
                TokenKind::Keyword(
                    Keyword::Event
                    | Keyword::Measure
                    | Keyword::Constant
                    | Keyword::DefEnd
                    | Keyword::RuleStart,
                )
                | TokenKind::Eof => return,
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn measure_def(&mut self) -> PResult<MeasureDef> {
        let name = self.expect_ident("a measure name")?;
        if self.peek().kind != TokenKind::Colon {
            return Err(self.unexpected("`:`"));
        }
        self.bump();
        let mtype = match self.peek().kind {
            TokenKind::Keyword(Keyword::Boolean) => {
                self.bump();
                MeasureType::Boolean
            }
            TokenKind::Keyword(Keyword::Numeric) => {
                self.bump();
                MeasureType::Numeric
            }
            TokenKind::Keyword(Keyword::Scale) => {
                self.bump();
                if self.peek().kind != TokenKind::LParen {
                    return Err(self.unexpected("`(`"));
                }
                self.bump();
                let mut lits = vec![self.expect_ident("a scale literal")?];
                while self.peek().kind == TokenKind::Comma {
                    self.bump();
                    lits.push(self.expect_ident("a scale literal")?);
                }
                if self.peek().kind != TokenKind::RParen {
                    return Err(self.unexpected("`,` or `)`"));
                }
                self.bump();
                MeasureType::Scale(lits)
            }
            _ => return Err(self.unexpected("`boolean`, `numeric` or `scale`")),
        };
        Ok(MeasureDef { name, mtype })
    }

    fn constant_def(&mut self) -> PResult<ConstantDef> {
        let name = self.expect_ident("a constant name")?;
        if self.peek().kind != TokenKind::Op(CompareOp::Eq) {
            return Err(self.unexpected("`=`"));
        }
        self.bump();
        let (value, _) = self.expect_int("an integer value")?;
        Ok(ConstantDef { name, value })
    }

    fn at_rule_header(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Ident(_))
            && self.peek_at(1).kind == TokenKind::Keyword(Keyword::When)
    }

    /// Parses rules until `rule_end` (when `block` is set) or end of input.
    fn rules(&mut self, spec: &mut Spec, block: bool) {
        loop {
            match self.peek().kind {
                TokenKind::Keyword(Keyword::RuleEnd) if block => {
                    self.bump();
                    return;
                }
                TokenKind::Eof => {
                    if block {
                        let d = self.unexpected("`rule_end`");
                        self.diags.push(d);
                    }
                    return;
                }
                _ => {}
            }
            let start = self.peek().span;
            let start_pos = self.pos;
            match self.rule() {
                Ok(rule) => {
                    let span = Span::new(start.start, self.prev_end(), start.line, start.col);
                    spec.source_spans.insert(NodeId::Rule(spec.rules.len()), span);
                    spec.rules.push(rule);
                }
                Err(d) => {
                    self.diags.push(d);
                    self.skip_to_rule(block, start_pos);
                }
            }
        }
    }

    fn skip_to_rule(&mut self, block: bool, start_pos: usize) {
        if self.pos == start_pos {
            self.bump();
        }
        loop {
            if self.at_rule_header() || self.peek().kind == TokenKind::Eof {
                return;
            }
            if block && self.at_kw(Keyword::RuleEnd) {
                return;
            }
            self.bump();
        }
    }

    fn rule(&mut self) -> PResult<Rule> {
        let id = self.expect_ident("a rule identifier")?;
        self.expect_kw(Keyword::When)?;
        let trigger_event = self.expect_ident("a trigger event")?;
        let trigger_condition = if self.eat_kw(Keyword::And) {
            Some(self.condition()?)
        } else {
            None
        };
        self.expect_kw(Keyword::Then)?;
        let response = self.response()?;
        let mut defeaters = Vec::new();
        while self.eat_kw(Keyword::Unless) {
            let condition = self.condition()?;
            let response = if self.eat_kw(Keyword::Then) {
                Some(self.response()?)
            } else {
                None
            };
            defeaters.push(Defeater { condition, response });
        }
        if let TokenKind::Keyword(kw) = self.peek().kind {
            if kw.is_unsupported() {
                return Err(self.unexpected(""));
            }
        }
        Ok(Rule {
            id,
            trigger_event,
            trigger_condition,
            response,
            defeaters,
        })
    }

    fn response(&mut self) -> PResult<Response> {
        let not_span = self.peek().span;
        let polarity = if self.eat_kw(Keyword::Not) {
            Polarity::MustNot
        } else {
            Polarity::Must
        };
        if self.at_rule_header() {
            return Err(self.unexpected("a response event"));
        }
        let event = self.expect_ident("a response event")?;
        let deadline = if self.eat_kw(Keyword::Within) {
            let (amount, span) = self.expect_int("a deadline amount")?;
            if amount < 1 {
                return Err(Diagnostic::error(
                    Category::Syntax,
                    span,
                    "deadline amount must be at least 1",
                ));
            }
            let unit = match self.peek().kind {
                TokenKind::Unit(u) => {
                    self.bump();
                    u
                }
                _ => return Err(self.unexpected("a time unit")),
            };
            Some(TimeValue {
                amount: amount as u64,
                unit,
            })
        } else {
            None
        };
        if polarity == Polarity::MustNot && deadline.is_none() {
            return Err(Diagnostic::error(
                Category::Syntax,
                not_span,
                format!("prohibition `not {}` needs a `within` deadline", event.name),
            ));
        }
        Ok(Response {
            polarity,
            event,
            deadline,
        })
    }

    fn condition(&mut self) -> PResult<Condition> {
        let mut lhs = self.conjunction()?;
        while self.eat_kw(Keyword::Or) {
            let rhs = self.conjunction()?;
            lhs = Condition::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Condition> {
        let mut lhs = self.unary()?;
        while self.eat_kw(Keyword::And) {
            let rhs = self.unary()?;
            lhs = Condition::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Condition> {
        if self.eat_kw(Keyword::Not) {
            return Ok(Condition::Not(Box::new(self.unary()?)));
        }
        if self.peek().kind == TokenKind::LParen {
            self.bump();
            let inner = self.condition()?;
            if self.peek().kind != TokenKind::RParen {
                return Err(self.unexpected("`)`"));
            }
            self.bump();
            return Ok(inner);
        }
        let measure = self.expect_ident("a measure or `(`")?;
        if let TokenKind::Op(op) = self.peek().kind {
            self.bump();
            let value = match &self.peek().kind {
                TokenKind::Int(v) => {
                    let v = *v;
                    self.bump();
                    Operand::Int(v)
                }
                TokenKind::Ident(_) => Operand::Name(self.expect_ident("a value")?),
                _ => return Err(self.unexpected("an integer, constant or scale literal")),
            };
            Ok(Condition::Compare { measure, op, value })
        } else {
            Ok(Condition::Atom(measure))
        }
    }
}

/// Parses as much of `text` as possible, returning the recovered document
/// together with every syntax diagnostic.
pub fn parse_partial(text: &str) -> (Spec, Vec<Diagnostic>) {
    let (tokens, mut diags) = tokenize_lossy(text);
    let mut parser = Parser::new(tokens);
    let spec = parser.document();
    diags.extend(parser.diags);
    diags.sort_by_key(|d| d.span.start);
    (spec, diags)
}

/// Parses a complete SLEEC document.
pub fn parse(text: &str) -> Result<Spec, Vec<Diagnostic>> {
    let (spec, diags) = parse_partial(text);
    if diags.is_empty() {
        Ok(spec)
    } else {
        Err(diags)
    }
}

/// Parses a bare sequence of rules, as produced by resolution suggestions.
pub fn parse_rules(text: &str) -> Result<Vec<Rule>, Vec<Diagnostic>> {
    let (tokens, mut diags) = tokenize_lossy(text);
    let mut parser = Parser::new(tokens);
    let mut spec = Spec::default();
    parser.rules(&mut spec, false);
    diags.extend(parser.diags);
    if diags.is_empty() {
        Ok(spec.rules)
    } else {
        diags.sort_by_key(|d| d.span.start);
        Err(diags)
    }
}
