//! Tiny term language shared by every text syntax in the crate:
//! `name`, `name(arg, ...)`, `key=term` arguments, and numeric literals
//! (including `a/b` fractions).
//!
//! ```text
//! compose(qlog(1/2), exp)
//! framework(eta=affine(1,0), core=shannon, agg=epknavg(exp))
//! ```

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Num(f64),
    Call { name: String, args: Vec<Arg> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub key: Option<String>,
    pub value: Term,
}

impl Term {
    pub fn parse(text: &str) -> Result<Term> {
        let mut p = Parser { src: text.as_bytes(), pos: 0 };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(t)
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Term::Call { name, .. } => Some(name),
            Term::Num(_) => None,
        }
    }

    pub fn args(&self) -> &[Arg] {
        match self {
            Term::Call { args, .. } => args,
            Term::Num(_) => &[],
        }
    }

    pub fn as_num(&self) -> Result<f64> {
        match self {
            Term::Num(v) => Ok(*v),
            Term::Call { name, .. } => Err(Error::Parse(format!("expected a number, found '{name}'"))),
        }
    }

    /// Positional arguments in order; errors on keyed ones.
    pub fn positional(&self) -> Result<Vec<&Term>> {
        self.args()
            .iter()
            .map(|a| match &a.key {
                None => Ok(&a.value),
                Some(k) => Err(Error::Parse(format!("unexpected keyword argument '{k}'"))),
            })
            .collect()
    }

    pub fn keyed(&self, key: &str) -> Option<&Term> {
        self.args()
            .iter()
            .find(|a| a.key.as_deref() == Some(key))
            .map(|a| &a.value)
    }

    /// Checks that a call has exactly `n` positional arguments.
    pub fn expect_arity(&self, n: usize) -> Result<Vec<&Term>> {
        let args = self.positional()?;
        if args.len() != n {
            return Err(Error::Parse(format!(
                "'{}' takes {} argument(s), got {}",
                self.name().unwrap_or("?"),
                n,
                args.len()
            )));
        }
        Ok(args)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse(format!(
            "{msg} at offset {} in '{}'",
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn term(&mut self) -> Result<Term> {
        match self.peek() {
            Some(c) if c.is_ascii_digit() || matches!(c, b'-' | b'+' | b'.') => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.call(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn literal(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = matches!(c, b'-' | b'+')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            let sign = matches!(c, b'-' | b'+') && self.pos == start;
            if c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E') || sign || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map_err(|_| self.error(&format!("bad number '{text}'")))
    }

    fn number(&mut self) -> Result<Term> {
        let mut v = self.literal()?;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            let d = self.literal()?;
            if d == 0.0 {
                return Err(self.error("division by zero"));
            }
            v /= d;
        }
        Ok(Term::Num(v))
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_alphanumeric() || matches!(c, b'_' | b'-') {
                self.pos += 1;
            } else {
                break;
            }
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_lowercase()
    }

    fn call(&mut self) -> Result<Term> {
        let name = self.ident();
        let mut args = Vec::new();
        if self.peek() == Some(b'(') {
            self.pos += 1;
            if self.peek() == Some(b')') {
                self.pos += 1;
                return Ok(Term::Call { name, args });
            }
            loop {
                args.push(self.arg()?);
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.error("expected ',' or ')'")),
                }
            }
        }
        Ok(Term::Call { name, args })
    }

    fn arg(&mut self) -> Result<Arg> {
        let save = self.pos;
        if matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            let key = self.ident();
            if self.peek() == Some(b'=') {
                self.pos += 1;
                let value = self.term()?;
                return Ok(Arg { key: Some(key), value });
            }
            self.pos = save;
        }
        Ok(Arg {
            key: None,
            value: self.term()?,
        })
    }
}
