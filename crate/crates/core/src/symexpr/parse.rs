//! Recursive-descent parser for the model-file expression grammar
//! (`docs/grammar.ebnf`).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown function `{name}` at offset {offset}")]
    UnknownFunction { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownFunction { offset, .. } => {
                *offset
            }
        }
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected `{}`", p.src[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.term()?);
            } else if self.eat(b'-') {
                let t = self.term()?;
                terms.push(Expr::Mul(vec![Expr::int(-1), t]));
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            Expr::Add(terms)
        })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                acc = Expr::Mul(vec![acc, rhs]);
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                acc = Expr::Div(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Num(c) => Expr::Num(-c),
                other => Expr::Mul(vec![Expr::int(-1), other]),
            });
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let e = self.exponent()?;
            return Ok(Expr::Pow(Box::new(base), e));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i32, ParseError> {
        let paren = self.eat(b'(');
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let mut e: i32 = digits.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: "exponent out of range".into(),
        })?;
        if neg {
            e = -e;
        }
        if paren {
            self.expect(b')')?;
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if self.peek() == Some(b'(') {
                    let f = Func::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
                        offset: start,
                        name: name.to_string(),
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(b')')?;
                    Ok(Expr::Func(f, Box::new(arg)))
                } else {
                    Ok(Expr::Var(name.to_string()))
                }
            }
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut int_part = BigInt::zero();
        let mut frac = BigRational::zero();
        let mut scale = BigRational::one();
        let ten = BigInt::from(10);
        let mut seen_digit = false;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            int_part = int_part * &ten + BigInt::from(self.src[self.pos] - b'0');
            self.pos += 1;
            seen_digit = true;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                scale /= BigRational::from_integer(ten.clone());
                frac += &scale * BigRational::from_integer(BigInt::from(self.src[self.pos] - b'0'));
                self.pos += 1;
                seen_digit = true;
            }
        }
        if !seen_digit {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        Ok(Expr::Num(BigRational::from_integer(int_part) + frac))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trailing_operator_reports_end_offset() {
        let err = parse("q1 +").unwrap_err();
        assert_eq!(err.offset(), 4);
    }

    #[test]
    fn unknown_function_is_rejected() {
        let err = parse("tan(q1)").unwrap_err();
        assert!(matches!(err, ParseError::UnknownFunction { offset: 0, .. }));
    }

    #[test]
    fn precedence_and_negative_exponents() {
        let e = parse("-q1^2").unwrap().normalize();
        assert_eq!(e, parse("0 - q1*q1").unwrap().normalize());
        let e = parse("q1^(-2) * q1^2").unwrap().normalize();
        assert!(e.is_one());
        let e = parse("2^-1").unwrap().normalize();
        assert_eq!(e, Expr::rational(1, 2));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse("0.25").unwrap(), Expr::rational(1, 4));
    }

    #[test]
    fn unbalanced_parenthesis() {
        assert!(parse("(q1 + 1").is_err());
        assert!(parse("q1)").is_err());
        assert!(parse("").is_err());
    }
}
