use num_bigint::BigInt;
use num_traits::{Pow, Zero};

use super::{SourceSpan, SyntaxError};
use crate::ast::Rational;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(Rational),
    LParen,
    RParen,
    Comma,
    Pipe,
    Plus,
    Minus,
    Star,
    Eq,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Pipe => "`|`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
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
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn mark(&self) -> (usize, usize, usize) {
        (self.pos, self.line, self.column)
    }

    fn span_from(&self, mark: (usize, usize, usize)) -> SourceSpan {
        SourceSpan {
            start: mark.0,
            end: self.pos,
            line: mark.1,
            column: mark.2,
        }
    }

    fn digits(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek().filter(char::is_ascii_digit) {
            s.push(c);
            self.bump();
        }
        s
    }
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let mark = cur.mark();
        let Some(c) = cur.peek() else {
            out.push(Token {
                tok: Tok::Eof,
                span: cur.span_from(mark),
            });
            return Ok(out);
        };
        let tok = if c.is_ascii_digit() {
            lex_number(&mut cur, mark)?
        } else if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_alphanumeric() || *c == '_') {
                s.push(c);
                cur.bump();
            }
            Tok::Ident(s)
        } else {
            cur.bump();
            match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '|' => Tok::Pipe,
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '=' => Tok::Eq,
                other => {
                    return Err(SyntaxError::new(
                        cur.span_from(mark),
                        vec!["expression".into()],
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        out.push(Token {
            tok,
            span: cur.span_from(mark),
        });
    }
}

fn lex_number(cur: &mut Cursor<'_>, mark: (usize, usize, usize)) -> Result<Tok, SyntaxError> {
    let whole = cur.digits();
    let mut value = Rational::from_integer(whole.parse::<BigInt>().expect("digits"));
    if cur.peek() == Some('.') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        let frac = cur.digits();
        let scale = BigInt::from(10).pow(frac.len() as u32);
        let numer = format!("{whole}{frac}").parse::<BigInt>().expect("digits");
        value = Rational::new(numer, scale);
    } else if cur.peek() == Some('/') && cur.peek2().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
        let denom = cur.digits().parse::<BigInt>().expect("digits");
        if denom.is_zero() {
            return Err(SyntaxError::new(
                cur.span_from(mark),
                vec!["non-zero denominator".into()],
                "zero denominator".into(),
            ));
        }
        value /= Rational::from_integer(denom);
    }
    Ok(Tok::Number(value))
}
