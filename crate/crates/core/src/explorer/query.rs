//! Marking predicates: `P3>=1`, `(On1>=1|On2>=1)&Closed=0`.
//!
//! `&` binds tighter than `|`; comparison operators are `=`, `>=`, `<=`, `>`, `<`.

use std::fmt;

use thiserror::Error;

use crate::net::{Marking, TimePetriNet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("query error at offset {offset}: {message}")]
pub struct QueryError {
    pub offset: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ge,
    Le,
    Gt,
    Lt,
}

impl CmpOp {
    fn holds(self, lhs: u32, rhs: u32) -> bool {
        match self {
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Lt => lhs < rhs,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
        }
    }
}

/// A boolean combination of token-count comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkingPredicate {
    Compare {
        place: usize,
        name: String,
        op: CmpOp,
        value: u32,
    },
    And(Vec<MarkingPredicate>),
    Or(Vec<MarkingPredicate>),
}

impl MarkingPredicate {
    /// Parses `text`, resolving place names against `net`.
    pub fn parse(text: &str, net: &TimePetriNet) -> Result<Self, QueryError> {
        let mut p = Parser {
            src: text,
            pos: 0,
            net,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < text.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval(&self, m: &Marking) -> bool {
        match self {
            MarkingPredicate::Compare {
                place, op, value, ..
            } => op.holds(m.tokens()[*place], *value),
            MarkingPredicate::And(v) => v.iter().all(|p| p.eval(m)),
            MarkingPredicate::Or(v) => v.iter().any(|p| p.eval(m)),
        }
    }
}

impl fmt::Display for MarkingPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |f: &mut fmt::Formatter<'_>, v: &[MarkingPredicate], sep: &str| {
            for (i, p) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, "{sep}")?;
                }
                match p {
                    MarkingPredicate::Compare { .. } => write!(f, "{p}")?,
                    _ => write!(f, "({p})")?,
                }
            }
            Ok(())
        };
        match self {
            MarkingPredicate::Compare {
                name, op, value, ..
            } => write!(f, "{name}{}{value}", op.symbol()),
            MarkingPredicate::And(v) => join(f, v, "&"),
            MarkingPredicate::Or(v) => join(f, v, "|"),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    net: &'a TimePetriNet,
}

impl Parser<'_> {
    fn err(&self, message: impl Into<String>) -> QueryError {
        QueryError {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(s) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<MarkingPredicate, QueryError> {
        let mut alts = vec![self.conj()?];
        while self.eat("|") {
            alts.push(self.conj()?);
        }
        Ok(if alts.len() == 1 {
            alts.pop().unwrap()
        } else {
            MarkingPredicate::Or(alts)
        })
    }

    fn conj(&mut self) -> Result<MarkingPredicate, QueryError> {
        let mut parts = vec![self.term()?];
        while self.eat("&") {
            parts.push(self.term()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            MarkingPredicate::And(parts)
        })
    }

    fn term(&mut self) -> Result<MarkingPredicate, QueryError> {
        if self.eat("(") {
            let e = self.expr()?;
            if !self.eat(")") {
                return Err(self.err("expected `)`"));
            }
            return Ok(e);
        }
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return Err(self.err("expected a place name or `(`")),
        }
        let start = self.pos;
        let len = self.src[start..]
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(self.src.len() - start);
        let name = &self.src[start..start + len];
        let place = self.net.place_index(name).ok_or_else(|| QueryError {
            offset: start,
            message: format!("unknown place {name}"),
        })?;
        self.pos += len;
        let op = if self.eat(">=") {
            CmpOp::Ge
        } else if self.eat("<=") {
            CmpOp::Le
        } else if self.eat("=") {
            CmpOp::Eq
        } else if self.eat(">") {
            CmpOp::Gt
        } else if self.eat("<") {
            CmpOp::Lt
        } else {
            return Err(self.err("expected a comparison operator"));
        };
        self.skip_ws();
        let digits = self.src[self.pos..]
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(self.src.len() - self.pos);
        if digits == 0 {
            return Err(self.err("expected a token count"));
        }
        let value = self.src[self.pos..self.pos + digits]
            .parse()
            .map_err(|_| self.err("token count out of range"))?;
        self.pos += digits;
        Ok(MarkingPredicate::Compare {
            place,
            name: name.to_string(),
            op,
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::parse_net;

    fn net() -> TimePetriNet {
        parse_net("net q\nplace A init 1\nplace B\nplace C init 2\n").unwrap()
    }

    #[test]
    fn precedence_and_eval() {
        let net = net();
        let p = MarkingPredicate::parse("A>=1 | B=1 & C<2", &net).unwrap();
        assert!(matches!(p, MarkingPredicate::Or(ref v) if v.len() == 2));
        assert_eq!(p.to_string(), "A>=1|(B=1&C<2)");
        assert!(p.eval(&Marking(vec![1, 0, 2])));
        assert!(!p.eval(&Marking(vec![0, 0, 1])));
        assert!(p.eval(&Marking(vec![0, 1, 1])));
        let q = MarkingPredicate::parse("(A>0|B>0)&C=2", &net).unwrap();
        assert!(q.eval(&Marking(vec![0, 1, 2])));
        assert!(!q.eval(&Marking(vec![0, 0, 2])));
    }

    #[test]
    fn errors() {
        let net = net();
        let e = MarkingPredicate::parse("P9>=1", &net).unwrap_err();
        assert_eq!(e.message, "unknown place P9");
        assert!(MarkingPredicate::parse("A>=", &net).is_err());
        assert!(MarkingPredicate::parse("(A>=1", &net).is_err());
        assert!(MarkingPredicate::parse("A>=1 B", &net).is_err());
        assert!(MarkingPredicate::parse("A!1", &net).is_err());
        assert!(MarkingPredicate::parse("", &net).is_err());
    }
}
