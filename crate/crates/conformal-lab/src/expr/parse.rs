//! Lexer and recursive-descent parser for the expression grammar.

use super::{FuncKind, Node, ScalarExpression};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { offset: usize, name: String },
    #[error("variable x{index} exceeds arity {arity} at offset {offset}")]
    VariableOutOfRange {
        offset: usize,
        index: usize,
        arity: usize,
    },
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        offset,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokenize(src: &'a str) -> Result<Vec<(Token, usize)>, ParseError> {
        let mut lx = Lexer {
            src: src.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            if lx.pos >= lx.src.len() {
                break;
            }
            let start = lx.pos;
            let c = lx.src[lx.pos];
            let tok = match c {
                b'+' => {
                    lx.pos += 1;
                    Token::Plus
                }
                b'-' => {
                    lx.pos += 1;
                    Token::Minus
                }
                b'*' => {
                    lx.pos += 1;
                    Token::Star
                }
                b'/' => {
                    lx.pos += 1;
                    Token::Slash
                }
                b'^' => {
                    lx.pos += 1;
                    Token::Caret
                }
                b'(' => {
                    lx.pos += 1;
                    Token::LParen
                }
                b')' => {
                    lx.pos += 1;
                    Token::RParen
                }
                b'0'..=b'9' => lx.number(start)?,
                c if c.is_ascii_alphabetic() => lx.ident(),
                c => {
                    return Err(syntax(
                        start,
                        format!("unexpected character `{}`", c as char),
                    ));
                }
            };
            out.push((tok, start));
        }
        Ok(out)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn number(&mut self, start: usize) -> Result<Token, ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            if self.pos >= self.src.len() || !self.src[self.pos].is_ascii_digit() {
                return Err(syntax(self.pos, "expected digits after decimal point"));
            }
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Exponent only when digits follow; otherwise the `e`/`E` is left to
        // lex as an identifier.
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            let mut probe = self.pos + 1;
            if probe < self.src.len() && matches!(self.src[probe], b'+' | b'-') {
                probe += 1;
            }
            if probe < self.src.len() && self.src[probe].is_ascii_digit() {
                self.pos = probe;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Token::Number)
            .map_err(|_| syntax(start, format!("invalid number `{text}`")))
    }

    fn ident(&mut self) -> Token {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Token::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }
}

struct Parser {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end_offset: usize,
    arity: usize,
    nodes: Vec<Node>,
}

pub fn parse(text: &str, arity: usize) -> Result<ScalarExpression, ParseError> {
    let tokens = Lexer::tokenize(text)?;
    if tokens.is_empty() {
        return Err(syntax(text.len(), "empty expression"));
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        end_offset: text.len(),
        arity,
        nodes: Vec::new(),
    };
    let root = p.expr()?;
    if let Some((tok, off)) = p.peek() {
        return Err(syntax(off, format!("unexpected trailing input `{tok:?}`")));
    }
    Ok(ScalarExpression::from_parts(
        text.to_owned(),
        arity,
        p.nodes,
        root,
    ))
}

impl Parser {
    fn peek(&self) -> Option<(&Token, usize)> {
        self.tokens.get(self.pos).map(|(t, o)| (t, *o))
    }

    fn next_offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, o)| *o)
            .unwrap_or(self.end_offset)
    }

    fn advance(&mut self) -> Option<(Token, usize)> {
        let item = self.tokens.get(self.pos).cloned();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn expr(&mut self) -> Result<usize, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some((Token::Plus, _)) => {
                    self.advance();
                    let rhs = self.term()?;
                    lhs = self.push(Node::Add(lhs, rhs));
                }
                Some((Token::Minus, _)) => {
                    self.advance();
                    let rhs = self.term()?;
                    lhs = self.push(Node::Sub(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<usize, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some((Token::Star, _)) => {
                    self.advance();
                    let rhs = self.factor()?;
                    lhs = self.push(Node::Mul(lhs, rhs));
                }
                Some((Token::Slash, _)) => {
                    self.advance();
                    let rhs = self.factor()?;
                    lhs = self.push(Node::Div(lhs, rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<usize, ParseError> {
        let base = self.base()?;
        if let Some((Token::Caret, _)) = self.peek() {
            self.advance();
            let exponent = self.factor()?;
            return Ok(self.make_pow(base, exponent));
        }
        Ok(base)
    }

    /// Constant integer exponents take the `powi` path; everything else stays
    /// a general power evaluated as `exp(g*log f)`.
    fn make_pow(&mut self, base: usize, exponent: usize) -> usize {
        if let Some(c) = self.const_eval(exponent) {
            if c.fract() == 0.0 && c.abs() <= 1e6 {
                return self.push(Node::PowInt(base, c as i32));
            }
        }
        self.push(Node::Pow(base, exponent))
    }

    fn base(&mut self) -> Result<usize, ParseError> {
        let offset = self.next_offset();
        match self.advance() {
            Some((Token::Number(c), _)) => Ok(self.push(Node::Number(c))),
            Some((Token::Minus, _)) => {
                let inner = self.base()?;
                Ok(self.push(Node::Neg(inner)))
            }
            Some((Token::LParen, _)) => {
                let inner = self.expr()?;
                match self.advance() {
                    Some((Token::RParen, _)) => Ok(inner),
                    other => Err(syntax(
                        other.map(|(_, o)| o).unwrap_or(self.end_offset),
                        "expected `)`",
                    )),
                }
            }
            Some((Token::Ident(name), _)) => {
                if let Some((Token::LParen, _)) = self.peek() {
                    let Some(kind) = FuncKind::from_name(&name) else {
                        return Err(ParseError::UnknownFunction { offset, name });
                    };
                    self.advance(); // (
                    let arg = self.expr()?;
                    match self.advance() {
                        Some((Token::RParen, _)) => Ok(self.push(Node::Func(kind, arg))),
                        other => Err(syntax(
                            other.map(|(_, o)| o).unwrap_or(self.end_offset),
                            "expected `)`",
                        )),
                    }
                } else {
                    self.named_value(&name, offset)
                }
            }
            Some((tok, o)) => Err(syntax(o, format!("expected expression, found `{tok:?}`"))),
            None => Err(syntax(self.end_offset, "expected expression")),
        }
    }

    fn named_value(&mut self, name: &str, offset: usize) -> Result<usize, ParseError> {
        match name {
            "pi" => return Ok(self.push(Node::Pi)),
            "e" => return Ok(self.push(Node::E)),
            _ => {}
        }
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = rest
                    .parse()
                    .map_err(|_| syntax(offset, format!("invalid variable index `{name}`")))?;
                if index == 0 || index > self.arity {
                    return Err(ParseError::VariableOutOfRange {
                        offset,
                        index,
                        arity: self.arity,
                    });
                }
                return Ok(self.push(Node::Var(index - 1)));
            }
        }
        Err(ParseError::UnknownIdentifier {
            offset,
            name: name.to_owned(),
        })
    }

    /// Evaluate a variable-free subtree; `None` if it contains variables or
    /// is undefined (then the domain error surfaces at evaluation instead).
    fn const_eval(&self, idx: usize) -> Option<f64> {
        Some(match self.nodes[idx] {
            Node::Number(c) => c,
            Node::Pi => std::f64::consts::PI,
            Node::E => std::f64::consts::E,
            Node::Var(_) => return None,
            Node::Neg(a) => -self.const_eval(a)?,
            Node::Add(a, b) => self.const_eval(a)? + self.const_eval(b)?,
            Node::Sub(a, b) => self.const_eval(a)? - self.const_eval(b)?,
            Node::Mul(a, b) => self.const_eval(a)? * self.const_eval(b)?,
            Node::Div(a, b) => {
                let d = self.const_eval(b)?;
                if d == 0.0 {
                    return None;
                }
                self.const_eval(a)? / d
            }
            Node::PowInt(a, k) => self.const_eval(a)?.powi(k),
            Node::Pow(a, b) => {
                let base = self.const_eval(a)?;
                if base <= 0.0 {
                    return None;
                }
                base.powf(self.const_eval(b)?)
            }
            Node::Func(kind, a) => {
                let v = self.const_eval(a)?;
                match kind {
                    FuncKind::Exp => v.exp(),
                    FuncKind::Log if v > 0.0 => v.ln(),
                    FuncKind::Sqrt if v >= 0.0 => v.sqrt(),
                    FuncKind::Sin => v.sin(),
                    FuncKind::Cos => v.cos(),
                    FuncKind::Tanh => v.tanh(),
                    _ => return None,
                }
            }
        })
        .filter(|v| v.is_finite())
    }
}
