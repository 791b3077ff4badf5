//! Tiny real-number expression reader for CLI and config values:
//! `0.25`, `pi/5`, `3pi/2`, `sqrt(1/2)`, `2*pi`, `-1e-3`.

use crate::error::{invalid, Result};
use std::f64::consts::PI;

struct Reader<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, ch: u8) -> bool {
        if self.peek() == Some(ch) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Option<f64> {
        let mut v = self.term()?;
        loop {
            if self.eat(b'+') {
                v += self.term()?;
            } else if self.eat(b'-') {
                v -= self.term()?;
            } else {
                return Some(v);
            }
        }
    }

    fn term(&mut self) -> Option<f64> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v *= self.unary()?;
            } else if self.eat(b'/') {
                v /= self.unary()?;
            } else if matches!(self.peek(), Some(b'a'..=b'z') | Some(b'(')) {
                // implicit product: `3pi`, `2sqrt(2)`
                v *= self.unary()?;
            } else {
                return Some(v);
            }
        }
    }

    fn unary(&mut self) -> Option<f64> {
        if self.eat(b'-') {
            return Some(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Option<f64> {
        match self.peek()? {
            b'(' => {
                self.pos += 1;
                let v = self.expr()?;
                self.eat(b')').then_some(v)
            }
            b'0'..=b'9' | b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let ch = self.src[self.pos];
                    let exp_sign = (ch == b'-' || ch == b'+')
                        && self.pos > start
                        && matches!(self.src[self.pos - 1], b'e' | b'E');
                    if ch.is_ascii_digit() || ch == b'.' || ch == b'e' || ch == b'E' || exp_sign {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
            }
            b'a'..=b'z' => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_lowercase() {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    b"pi" => Some(PI),
                    b"sqrt" => {
                        if !self.eat(b'(') {
                            return None;
                        }
                        let v = self.expr()?;
                        self.eat(b')').then_some(v.sqrt())
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }
}

/// Evaluate a real expression; rejects trailing input and non-finite results.
pub fn parse_real(s: &str) -> Result<f64> {
    let lower = s.trim().to_ascii_lowercase();
    let mut r = Reader { src: lower.as_bytes(), pos: 0 };
    match r.expr() {
        Some(v) if r.peek().is_none() && v.is_finite() => Ok(v),
        _ => invalid(format!("cannot read `{s}` as a real number")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_real("0.25").unwrap(), 0.25);
        assert_eq!(parse_real("-1e-3").unwrap(), -1e-3);
        assert_eq!(parse_real("pi/5").unwrap(), PI / 5.0);
        assert_eq!(parse_real("3pi/2").unwrap(), 3.0 * PI / 2.0);
        assert_eq!(parse_real("12.5*pi").unwrap(), 12.5 * PI);
        assert_eq!(parse_real("sqrt(1/2)").unwrap(), 0.5f64.sqrt());
        assert_eq!(parse_real("2 + 3 * 4").unwrap(), 14.0);
        assert!(parse_real("pi)").is_err());
        assert!(parse_real("tau").is_err());
        assert!(parse_real("1/0").is_err());
    }
}
