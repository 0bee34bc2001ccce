//! Recursive-descent parser for the characteristic-function DSL.
//!
//! ```text
//! expr     := ['-'] term (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := number | 'pi' | ident | 's' ('^' exponent)? | '(' expr ')' | 'exp' '(' expr ')'
//! exponent := number | 'pi' | ident | '(' expr ')'
//! ```

use std::collections::BTreeSet;

use super::ExprError;

/// Symbolic tree produced by [`parse`]. No numeric folding happens here.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    Pi,
    Param(String),
    /// `s^exponent`; a bare `s` has exponent `Number(1.0)`.
    Power(Box<Node>),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Exp(Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedExpr {
    pub source: String,
    pub root: Node,
    /// Free parameter names, sorted.
    pub params: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(x) => format!("number {x}"),
            Tok::Ident(name) => format!("`{name}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let value: f64 = lit
                    .parse()
                    .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
                out.push((Tok::Number(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    params: BTreeSet<String>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(syntax(
                self.offset(),
                format!(
                    "expected {}, found {}",
                    want.describe(),
                    self.peek().describe()
                ),
            ))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = if *self.peek() == Tok::Minus {
            self.bump();
            Node::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Number(x) => Ok(Node::Number(x)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "pi" => Ok(Node::Pi),
                "s" => {
                    if *self.peek() == Tok::Caret {
                        self.bump();
                        Ok(Node::Power(Box::new(self.exponent()?)))
                    } else {
                        Ok(Node::Power(Box::new(Node::Number(1.0))))
                    }
                }
                "exp" => {
                    self.expect(Tok::LParen)?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    Ok(Node::Exp(Box::new(arg)))
                }
                _ if *self.peek() == Tok::LParen => {
                    Err(ExprError::UnknownFunction { name, offset })
                }
                _ => {
                    self.params.insert(name.clone());
                    Ok(Node::Param(name))
                }
            },
            other => Err(syntax(
                offset,
                format!("expected a factor, found {}", other.describe()),
            )),
        }
    }

    fn exponent(&mut self) -> Result<Node, ExprError> {
        let (tok, offset) = self.bump();
        match tok {
            Tok::Number(x) => Ok(Node::Number(x)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Ident(name) if name == "pi" => Ok(Node::Pi),
            Tok::Ident(name) if name != "s" && name != "exp" => {
                self.params.insert(name.clone());
                Ok(Node::Param(name))
            }
            other => Err(syntax(
                offset,
                format!("expected an exponent, found {}", other.describe()),
            )),
        }
    }
}

/// Parses DSL text into a symbolic tree.
pub fn parse(text: &str) -> Result<ParsedExpr, ExprError> {
    let mut parser = Parser {
        toks: tokenize(text)?,
        pos: 0,
        params: BTreeSet::new(),
    };
    let root = parser.expr()?;
    if *parser.peek() != Tok::End {
        return Err(syntax(
            parser.offset(),
            format!("unexpected {}", parser.peek().describe()),
        ));
    }
    Ok(ParsedExpr {
        source: text.to_string(),
        root,
        params: parser.params,
    })
}
