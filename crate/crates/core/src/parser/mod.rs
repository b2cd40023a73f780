//! Text syntax for expressions.
//!
//! ```text
//! expr    := term (('+'|'-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | factor
//! factor  := NUMBER | IDENT | 'n' '(' prop ')' | 'delta' '(' expr ',' expr ')'
//!          | 'est' '(' expr '|' ctx ')' | '(' expr ')'
//! prop    := conj ('or' conj)*
//! conj    := neg ('and' neg)*
//! neg     := 'not' neg | IDENT '=' ['-'] NUMBER | IDENT | '(' prop ')'
//! ctx     := ctxitem (',' ctxitem)*
//! ctxitem := IDENT '=' ['-'] NUMBER | 'n' '(' IDENT ')' | 'not' neg | '(' prop ')' | IDENT
//! NUMBER  := digits | digits '.' digits | digits '/' digits
//! ```
//!
//! The last context item is the background token. A bare context item
//! starting with an uppercase letter asserts that atom; any other bare item
//! names an unknown whose value is a parameter of the estimation.
//! `n(A)` as a context item makes the truth value of `A` a parameter.
//! `#` starts a line comment.

mod lexer;
mod print;

use std::fmt;

use num_traits::Signed;

use crate::ast::{canonicalize, Context, Expr, Param, Prop, Rational, Symbol};
use lexer::{tokenize, Tok, Token};

pub use print::{print_braces, print_context, print_expr, print_prop};

const RESERVED: &[&str] = &["est", "delta", "not", "and", "or"];

/// Byte range of a syntax node plus the line/column of its start (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    fn join(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            start: self.start,
            end: other.end.max(self.end),
            line: self.line,
            column: self.column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SyntaxError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

impl SyntaxError {
    fn new(span: SourceSpan, expected: Vec<String>, found: String) -> Self {
        SyntaxError {
            span,
            expected,
            found,
        }
    }

    /// Multi-line diagnostic with the offending line and a caret run under
    /// the span.
    pub fn render(&self, source: &str) -> String {
        let line_text = source.lines().nth(self.span.line - 1).unwrap_or("");
        let line_start = source[..self.span.start.min(source.len())]
            .rfind('\n')
            .map_or(0, |i| i + 1);
        let pad = source[line_start..self.span.start.min(source.len())]
            .chars()
            .count();
        let width = source[self.span.start.min(source.len())..self.span.end.min(source.len())]
            .chars()
            .take_while(|&c| c != '\n')
            .count()
            .max(1);
        format!(
            "error: {self}\n{:>4} | {line_text}\n     | {}{}",
            self.span.line,
            " ".repeat(pad),
            "^".repeat(width)
        )
    }
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "syntax error at line {}, column {}: ",
            self.span.line, self.span.column
        )?;
        match self.expected.as_slice() {
            [] => write!(f, "{}", self.found),
            [one] => write!(f, "expected {one}, found {}", self.found),
            many => write!(f, "expected one of {}, found {}", many.join(", "), self.found),
        }
    }
}

/// Source spans mirroring the shape of a parsed [`Expr`]: one node per
/// expression node, with children in [`Expr::children`] order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanTree {
    pub span: SourceSpan,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    fn leaf(span: SourceSpan) -> Self {
        SpanTree {
            span,
            children: Vec::new(),
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&SpanTree> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children.get(i)?.at(rest),
        }
    }
}

/// Parser output before canonicalization: the tree as written plus spans.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub expr: Expr,
    pub spans: SpanTree,
}

/// Parses `text` and returns its canonical form.
pub fn parse_expr(text: &str) -> Result<Expr, SyntaxError> {
    parse(text).map(|p| canonicalize(&p.expr))
}

/// Parses `text` keeping the written structure and per-node spans.
pub fn parse(text: &str) -> Result<Parsed, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let (expr, spans) = p.expr()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(Parsed { expr, spans })
}

/// Parses a standalone proposition such as `A and not B`.
pub fn parse_prop(text: &str) -> Result<Prop, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut p = Parser { tokens, pos: 0 };
    let prop = p.prop()?;
    p.expect(Tok::Eof, "end of input")?;
    Ok(prop)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

enum CtxItem {
    Assign(Symbol, Rational),
    Bare(Symbol),
    ParamProp(Prop),
    Assert(Prop),
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        let t = self.peek();
        SyntaxError::new(
            t.span,
            expected.iter().map(|s| s.to_string()).collect(),
            t.tok.describe(),
        )
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<SourceSpan, SyntaxError> {
        if self.peek().tok == tok {
            Ok(self.advance().span)
        } else {
            Err(self.error(&[what]))
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == word)
    }

    fn expr(&mut self) -> Result<(Expr, SpanTree), SyntaxError> {
        let first = self.term()?;
        let mut terms = vec![first];
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.advance();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    let minus = self.advance().span;
                    let (e, s) = self.term()?;
                    let span = minus.join(s.span);
                    terms.push((
                        Expr::Mul(vec![Expr::int(-1), e]),
                        SpanTree {
                            span,
                            children: vec![SpanTree::leaf(minus), s],
                        },
                    ));
                }
                _ => break,
            }
        }
        Ok(collect_nary(terms, Expr::Add))
    }

    fn term(&mut self) -> Result<(Expr, SpanTree), SyntaxError> {
        let mut factors = vec![self.unary()?];
        while self.peek().tok == Tok::Star {
            self.advance();
            factors.push(self.unary()?);
        }
        Ok(collect_nary(factors, Expr::Mul))
    }

    fn unary(&mut self) -> Result<(Expr, SpanTree), SyntaxError> {
        if self.peek().tok != Tok::Minus {
            return self.factor();
        }
        let minus = self.advance().span;
        let (e, s) = self.unary()?;
        let span = minus.join(s.span);
        Ok(match e {
            Expr::Const(c) => (Expr::Const(-c), SpanTree::leaf(span)),
            other => (
                Expr::Mul(vec![Expr::int(-1), other]),
                SpanTree {
                    span,
                    children: vec![SpanTree::leaf(minus), s],
                },
            ),
        })
    }

    fn factor(&mut self) -> Result<(Expr, SpanTree), SyntaxError> {
        const FACTOR: &[&str] = &["number", "identifier", "`n(`", "`delta(`", "`est(`", "`(`"];
        let start = self.peek().span;
        match self.peek().tok.clone() {
            Tok::Number(v) => {
                self.advance();
                Ok((Expr::Const(v), SpanTree::leaf(start)))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(word) if *self.peek_at(1) == Tok::LParen && word == "n" => {
                self.advance();
                self.advance();
                let prop = self.prop()?;
                let end = self.expect(Tok::RParen, "`)`")?;
                Ok((Expr::PropEnc(prop), SpanTree::leaf(start.join(end))))
            }
            Tok::Ident(word) if word == "delta" => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let (a, sa) = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let (b, sb) = self.expr()?;
                let end = self.expect(Tok::RParen, "`)`")?;
                Ok((
                    Expr::delta(a, b),
                    SpanTree {
                        span: start.join(end),
                        children: vec![sa, sb],
                    },
                ))
            }
            Tok::Ident(word) if word == "est" => {
                self.advance();
                self.expect(Tok::LParen, "`(`")?;
                let (body, sb) = self.expr()?;
                self.expect(Tok::Pipe, "`|`")?;
                let ctx = self.ctx()?;
                let end = self.expect(Tok::RParen, "`)`")?;
                Ok((
                    Expr::est(body, ctx),
                    SpanTree {
                        span: start.join(end),
                        children: vec![sb],
                    },
                ))
            }
            Tok::Ident(word) if RESERVED.contains(&word.as_str()) => Err(self.error(FACTOR)),
            Tok::Ident(word) => {
                self.advance();
                Ok((Expr::unknown(&word), SpanTree::leaf(start)))
            }
            _ => Err(self.error(FACTOR)),
        }
    }

    fn ident(&mut self, what: &str) -> Result<Symbol, SyntaxError> {
        match &self.peek().tok {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let sym = Symbol::new(s);
                self.advance();
                Ok(sym)
            }
            _ => Err(self.error(&[what])),
        }
    }

    fn signed_number(&mut self) -> Result<Rational, SyntaxError> {
        let negative = if self.peek().tok == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        match self.peek().tok.clone() {
            Tok::Number(v) => {
                self.advance();
                Ok(if negative { -v } else { v })
            }
            _ => Err(self.error(&["number"])),
        }
    }

    fn prop(&mut self) -> Result<Prop, SyntaxError> {
        let mut acc = self.conj()?;
        while self.is_ident("or") {
            self.advance();
            acc = Prop::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Prop, SyntaxError> {
        let mut acc = self.neg()?;
        while self.is_ident("and") {
            self.advance();
            acc = Prop::and(acc, self.neg()?);
        }
        Ok(acc)
    }

    fn neg(&mut self) -> Result<Prop, SyntaxError> {
        if self.is_ident("not") {
            self.advance();
            return Ok(Prop::not(self.neg()?));
        }
        if self.peek().tok == Tok::LParen {
            self.advance();
            let p = self.prop()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(p);
        }
        let name = self.ident("proposition")?;
        if self.peek().tok == Tok::Eq {
            self.advance();
            let v = self.signed_number()?;
            return Ok(Prop::Equals(name, v));
        }
        Ok(Prop::Atom(name))
    }

    fn ctx_item(&mut self) -> Result<(CtxItem, SourceSpan), SyntaxError> {
        let start = self.peek().span;
        let item = if self.is_ident("not") {
            CtxItem::Assert(self.neg()?)
        } else if self.peek().tok == Tok::LParen {
            self.advance();
            let p = self.prop()?;
            self.expect(Tok::RParen, "`)`")?;
            CtxItem::Assert(p)
        } else if self.is_ident("n") && *self.peek_at(1) == Tok::LParen {
            self.advance();
            self.advance();
            let p = self.prop()?;
            self.expect(Tok::RParen, "`)`")?;
            CtxItem::ParamProp(p)
        } else {
            let name = self.ident("context item")?;
            if self.peek().tok == Tok::Eq {
                self.advance();
                CtxItem::Assign(name, self.signed_number()?)
            } else {
                CtxItem::Bare(name)
            }
        };
        let end = self.tokens[self.pos.saturating_sub(1)].span;
        Ok((item, start.join(end)))
    }

    fn ctx(&mut self) -> Result<Context, SyntaxError> {
        let mut items = vec![self.ctx_item()?];
        while self.peek().tok == Tok::Comma {
            self.advance();
            items.push(self.ctx_item()?);
        }
        let (last, last_span) = items.pop().expect("at least one item");
        let CtxItem::Bare(background) = last else {
            return Err(SyntaxError::new(
                last_span,
                vec!["background token as the last context item".into()],
                "a non-background item".into(),
            ));
        };
        let mut ctx = Context::with_background(background);
        for (item, span) in items {
            let res = match item {
                CtxItem::Assign(name, v) => ctx.insert_assignment(name, v),
                CtxItem::Bare(name) if name.is_proposition_style() => {
                    ctx = ctx.assert(Prop::Atom(name));
                    Ok(())
                }
                CtxItem::Bare(name) => ctx.insert_param(Param::Unknown(name)),
                CtxItem::ParamProp(p) => ctx.insert_param(Param::Prop(p)),
                CtxItem::Assert(p) => {
                    ctx = ctx.assert(p);
                    Ok(())
                }
            };
            res.map_err(|e| SyntaxError::new(span, Vec::new(), e.to_string()))?;
        }
        Ok(ctx)
    }
}

fn collect_nary(
    mut parts: Vec<(Expr, SpanTree)>,
    build: fn(Vec<Expr>) -> Expr,
) -> (Expr, SpanTree) {
    if parts.len() == 1 {
        return parts.pop().unwrap();
    }
    let span = parts[0].1.span.join(parts[parts.len() - 1].1.span);
    let (exprs, spans): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    (
        build(exprs),
        SpanTree {
            span,
            children: spans,
        },
    )
}

pub(crate) fn is_negative(v: &Rational) -> bool {
    v.is_negative()
}
