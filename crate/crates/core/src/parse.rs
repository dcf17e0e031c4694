//! Compact polynomial grammar used in config files, e.g. `"1 - 1.4*x1^2 + x2"`.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary ('*' unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := primary ('^' integer)?
//! primary := number | variable | '(' expr ')'
//! ```
//!
//! Variables are `x1..xn` for the state and `w1..wk` for noise; `x` alone
//! means `x1`. The result is always in the monomial basis over `n + k`
//! variables, with the noise variables placed after the state.

use crate::error::{Error, Result};
use crate::polynomial::{Basis, Polynomial};

/// Parses `src` into a monomial-basis polynomial in `n_state + n_noise` variables.
pub fn parse_polynomial(src: &str, n_state: usize, n_noise: usize) -> Result<Polynomial> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        n_state,
        n_noise,
    };
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    n_state: usize,
    n_noise: usize,
}

impl Parser<'_> {
    fn dim(&self) -> usize {
        self.n_state + self.n_noise
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            offset: self.pos,
            message: message.into(),
        }
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

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.scale(-1.0))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected a nonnegative integer exponent"));
            }
            let e: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.error("exponent out of range"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(b'x') | Some(b'w') => self.variable(),
            Some(c) => Err(self.error(format!("unexpected character `{}`", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Polynomial> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let exp_sign = (c == b'+' || c == b'-')
                && self.pos > start
                && matches!(self.src[self.pos - 1], b'e' | b'E');
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let v: f64 = text.parse().map_err(|_| Error::Parse {
            offset: start,
            message: format!("invalid number `{text}`"),
        })?;
        Ok(Polynomial::constant(self.dim(), Basis::Monomial, v))
    }

    fn variable(&mut self) -> Result<Polynomial> {
        let start = self.pos;
        let kind = self.src[self.pos];
        self.pos += 1;
        if self.src.get(self.pos) == Some(&b'_') {
            self.pos += 1;
        }
        let digits = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let index: usize = if digits == self.pos {
            1
        } else {
            std::str::from_utf8(&self.src[digits..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.error("variable index out of range"))?
        };
        let (limit, offset) = if kind == b'x' {
            (self.n_state, 0)
        } else {
            (self.n_noise, self.n_state)
        };
        if index == 0 || index > limit {
            return Err(Error::Parse {
                offset: start,
                message: format!(
                    "variable `{}{}` out of range (have {} {} variables)",
                    kind as char,
                    index,
                    limit,
                    if kind == b'x' { "state" } else { "noise" }
                ),
            });
        }
        Ok(Polynomial::variable(
            self.dim(),
            Basis::Monomial,
            offset + index - 1,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::MultiIndex;

    #[test]
    fn henon_component() {
        let p = parse_polynomial("1 - 1.4*x1^2 + x2", 2, 0).unwrap();
        assert_eq!(p.coefficient(&MultiIndex::new(vec![0, 0])), 1.0);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![2, 0])), -1.4);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![0, 1])), 1.0);
        assert_eq!(p.num_terms(), 3);
    }

    #[test]
    fn precedence_and_noise_variables() {
        let p = parse_polynomial("-x^2 + 0.5*x1 + w1", 1, 1).unwrap();
        assert_eq!(p.dim(), 2);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![2, 0])), -1.0);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![1, 0])), 0.5);
        assert_eq!(p.coefficient(&MultiIndex::new(vec![0, 1])), 1.0);
        let q = parse_polynomial("(x1 + 1)^2 * 2e-1", 1, 0).unwrap();
        assert!((q.evaluate(&[2.0]) - 1.8).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_polynomial("x3", 2, 0).is_err());
        assert!(parse_polynomial("2 * ", 1, 0).is_err());
        assert!(parse_polynomial("x1 ^ y", 1, 0).is_err());
        assert!(parse_polynomial("w1", 1, 0).is_err());
        assert!(parse_polynomial("(x1", 1, 0).is_err());
    }
}
