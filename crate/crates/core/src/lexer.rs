//! Tokenizer shared by the program, query and annotation parsers.

use crate::error::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    /// Lowercase identifier or quoted atom.
    Name(String),
    Var(String),
    Num(u64),
    Punct(&'static str),
    /// Clause terminator: a `.` followed by whitespace, `%` or end of input.
    End,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

// Longest first.
const PUNCTS: &[&str] = &[
    "\\+", "\\=", ":-", "?-", "->", ">=", "<=", "!=", "(", ")", "[", "]", "{", "}", "|", ",", "=", ";", ":", "+", "-",
    "*", "/", ">", "<",
];

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '%' {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let (tl, tc) = (line, col);
        let push = |out: &mut Vec<Token>, tok| out.push(Token { tok, line: tl, col: tc });
        if c == '.' {
            let next = chars.get(i + 1).copied();
            bump!();
            if next.is_none_or(|n| n.is_whitespace() || n == '%') {
                push(&mut out, Tok::End);
                continue;
            }
            return Err(ParseError::new(tl, tc, "unexpected '.'"));
        }
        if c.is_ascii_lowercase() {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            push(&mut out, Tok::Name(s));
            continue;
        }
        if c.is_ascii_uppercase() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            push(&mut out, Tok::Var(s));
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                bump!();
            }
            let n = s.parse().map_err(|_| ParseError::new(tl, tc, "number too large"))?;
            push(&mut out, Tok::Num(n));
            continue;
        }
        if c == '\'' {
            bump!();
            let mut s = String::new();
            loop {
                match chars.get(i) {
                    None => return Err(ParseError::new(tl, tc, "unterminated quoted atom")),
                    Some('\'') => {
                        bump!();
                        break;
                    }
                    Some('\\') => {
                        bump!();
                        match chars.get(i) {
                            Some(&e) => {
                                s.push(e);
                                bump!();
                            }
                            None => return Err(ParseError::new(tl, tc, "unterminated quoted atom")),
                        }
                    }
                    Some(&e) => {
                        s.push(e);
                        bump!();
                    }
                }
            }
            if s.is_empty() {
                return Err(ParseError::new(tl, tc, "empty quoted atom"));
            }
            push(&mut out, Tok::Name(s));
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match PUNCTS.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                for _ in 0..p.len() {
                    bump!();
                }
                push(&mut out, Tok::Punct(p));
            }
            None => return Err(ParseError::new(tl, tc, format!("unexpected character {c:?}"))),
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Cursor over a token vector.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>) -> Self {
        Cursor { toks, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn reset(&mut self, pos: usize) {
        self.pos = pos;
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    pub fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn err(&self, msg: impl Into<String>) -> ParseError {
        let (l, c) = self.here();
        ParseError::new(l, c, msg)
    }

    pub fn is(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    pub fn eat(&mut self, p: &str) -> bool {
        if self.is(p) {
            self.next();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat(p) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{p}', found {}", describe(self.peek()))))
        }
    }

    pub fn is_name(&self, n: &str) -> bool {
        matches!(self.peek(), Tok::Name(m) if m == n)
    }

    pub fn expect_name(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Name(n) => {
                self.next();
                Ok(n)
            }
            other => Err(self.err(format!("expected a name, found {}", describe(&other)))),
        }
    }

    pub fn expect_num(&mut self) -> Result<u64, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.next();
                Ok(n)
            }
            other => Err(self.err(format!("expected a number, found {}", describe(&other)))),
        }
    }
}

pub fn describe(t: &Tok) -> String {
    match t {
        Tok::Name(n) => format!("'{n}'"),
        Tok::Var(v) => format!("variable {v}"),
        Tok::Num(n) => format!("number {n}"),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::End => "end of clause".into(),
        Tok::Eof => "end of input".into(),
    }
}
