//! Line-oriented net file format.
//!
//! ```text
//! net <ident>
//! place <ident> [init <nat>]
//! transition <ident> eft <rat> lft (<rat>|inf)
//! arc pre <place> <transition> [<nat>]
//! arc post <transition> <place> [<nat>]
//! ```
//!
//! `#` starts a comment running to the end of the line. Declarations after the
//! header may come in any order; arcs may reference nodes declared later.

use std::collections::HashMap;

use thiserror::Error;

use super::{is_ident, Latest, NetError, Place, Rational, TimePetriNet, Transition};

/// Largest integer accepted anywhere in a net file.
const MAX_LITERAL: u64 = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

struct Line<'a> {
    number: usize,
    tokens: Vec<Token<'a>>,
    end_column: usize,
}

impl<'a> Line<'a> {
    fn err(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            line: self.number,
            column,
            message: message.into(),
        }
    }

    fn at(&self, idx: usize, what: &str) -> Result<&Token<'a>, ParseError> {
        self.tokens
            .get(idx)
            .ok_or_else(|| self.err(self.end_column, format!("expected {what}")))
    }

    fn ident(&self, idx: usize, what: &str) -> Result<&'a str, ParseError> {
        let tok = self.at(idx, what)?;
        if is_ident(tok.text) {
            Ok(tok.text)
        } else {
            Err(self.err(tok.column, format!("invalid {what} {:?}", tok.text)))
        }
    }

    fn keyword(&self, idx: usize, kw: &str) -> Result<(), ParseError> {
        let tok = self.at(idx, &format!("`{kw}`"))?;
        if tok.text == kw {
            Ok(())
        } else {
            Err(self.err(tok.column, format!("expected `{kw}`, found {:?}", tok.text)))
        }
    }

    fn nat(&self, idx: usize, what: &str) -> Result<u64, ParseError> {
        let tok = self.at(idx, what)?;
        parse_nat(tok.text)
            .ok_or_else(|| self.err(tok.column, format!("invalid {what} {:?}", tok.text)))
    }

    fn rational(&self, idx: usize, what: &str) -> Result<Rational, ParseError> {
        let tok = self.at(idx, what)?;
        let bad = || self.err(tok.column, format!("invalid {what} {:?}", tok.text));
        match tok.text.split_once('/') {
            None => parse_nat(tok.text)
                .map(|n| Rational::from_integer(n as i64))
                .ok_or_else(bad),
            Some((num, den)) => {
                let num = parse_nat(num).ok_or_else(bad)?;
                let den = parse_nat(den).ok_or_else(bad)?;
                if den == 0 {
                    return Err(self.err(tok.column, "zero denominator"));
                }
                Ok(Rational::new(num as i64, den as i64))
            }
        }
    }

    fn finish(&self, idx: usize) -> Result<(), ParseError> {
        match self.tokens.get(idx) {
            None => Ok(()),
            Some(tok) => Err(self.err(tok.column, format!("unexpected {:?}", tok.text))),
        }
    }
}

fn parse_nat(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse::<u64>().ok().filter(|&n| n <= MAX_LITERAL)
}

fn tokenize(text: &str) -> Vec<Line<'_>> {
    let mut lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut tokens = Vec::new();
        let mut start = None;
        for (pos, ch) in content.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    tokens.push(Token {
                        text: &content[s..pos],
                        column: s + 1,
                    });
                }
            } else if start.is_none() {
                start = Some(pos);
            }
        }
        if let Some(s) = start {
            tokens.push(Token {
                text: &content[s..],
                column: s + 1,
            });
        }
        if !tokens.is_empty() {
            lines.push(Line {
                number: i + 1,
                tokens,
                end_column: content.trim_end().len() + 1,
            });
        }
    }
    lines
}

struct PendingArc<'a> {
    line: usize,
    column: usize,
    place: &'a str,
    transition: &'a str,
    weight: u32,
    pre: bool,
}

/// Parses a net file.
pub fn parse_net(text: &str) -> Result<TimePetriNet, NetError> {
    let lines = tokenize(text);
    let Some(header) = lines.first() else {
        return Err(ParseError {
            line: 1,
            column: 1,
            message: "missing `net` header".into(),
        }
        .into());
    };
    header.keyword(0, "net").map_err(|e| ParseError {
        message: "missing `net` header".into(),
        ..e
    })?;
    let name = header.ident(1, "net name")?;
    header.finish(2)?;

    let mut places: Vec<Place> = Vec::new();
    let mut place_ix: HashMap<&str, usize> = HashMap::new();
    let mut transitions: Vec<(&str, Rational, Latest)> = Vec::new();
    let mut trans_ix: HashMap<&str, usize> = HashMap::new();
    let mut arcs: Vec<PendingArc<'_>> = Vec::new();

    let dup = |line: &Line<'_>, kind: &str, id: &str| {
        NetError::Validation(format!("line {}: duplicate {kind} {id}", line.number))
    };

    for line in &lines[1..] {
        let kw = &line.tokens[0];
        match kw.text {
            "place" => {
                let id = line.ident(1, "place name")?;
                let initial = if line.tokens.len() > 2 {
                    line.keyword(2, "init")?;
                    let n = line.nat(3, "initial token count")?;
                    line.finish(4)?;
                    u32::try_from(n)
                        .map_err(|_| line.err(line.tokens[3].column, "token count too large"))?
                } else {
                    0
                };
                if place_ix.insert(id, places.len()).is_some() {
                    return Err(dup(line, "place", id));
                }
                places.push(Place {
                    name: id.to_string(),
                    initial,
                });
            }
            "transition" => {
                let id = line.ident(1, "transition name")?;
                line.keyword(2, "eft")?;
                let eft = line.rational(3, "earliest firing time")?;
                line.keyword(4, "lft")?;
                let lft = match line.at(5, "latest firing time")?.text {
                    "inf" => Latest::Infinite,
                    _ => Latest::Finite(line.rational(5, "latest firing time")?),
                };
                line.finish(6)?;
                if let Latest::Finite(l) = lft {
                    if l < eft {
                        return Err(NetError::Validation(format!(
                            "line {}: transition {id} has eft {eft} greater than lft {l}",
                            line.number
                        )));
                    }
                }
                if trans_ix.insert(id, transitions.len()).is_some() {
                    return Err(dup(line, "transition", id));
                }
                transitions.push((id, eft, lft));
            }
            "arc" => {
                let dir = line.at(1, "`pre` or `post`")?;
                let pre = match dir.text {
                    "pre" => true,
                    "post" => false,
                    other => {
                        return Err(line
                            .err(
                                dir.column,
                                format!("expected `pre` or `post`, found {other:?}"),
                            )
                            .into())
                    }
                };
                let (place, transition) = if pre {
                    (
                        line.ident(2, "place name")?,
                        line.ident(3, "transition name")?,
                    )
                } else {
                    (
                        line.ident(3, "place name")?,
                        line.ident(2, "transition name")?,
                    )
                };
                let weight = if line.tokens.len() > 4 {
                    let w = line.nat(4, "arc weight")?;
                    line.finish(5)?;
                    u32::try_from(w)
                        .map_err(|_| line.err(line.tokens[4].column, "arc weight too large"))?
                } else {
                    1
                };
                arcs.push(PendingArc {
                    line: line.number,
                    column: line.tokens[2].column,
                    place,
                    transition,
                    weight,
                    pre,
                });
            }
            "net" => {
                return Err(line.err(kw.column, "duplicate `net` header").into());
            }
            other => {
                return Err(line
                    .err(kw.column, format!("unknown declaration {other:?}"))
                    .into());
            }
        }
    }

    let n = places.len();
    let mut pre = vec![vec![0u32; n]; transitions.len()];
    let mut post = vec![vec![0u32; n]; transitions.len()];
    let mut seen = std::collections::HashSet::new();
    for arc in &arcs {
        let unknown = |kind: &str, id: &str| ParseError {
            line: arc.line,
            column: arc.column,
            message: format!("unknown {kind} {id}"),
        };
        let p = *place_ix
            .get(arc.place)
            .ok_or_else(|| unknown("place", arc.place))?;
        let t = *trans_ix
            .get(arc.transition)
            .ok_or_else(|| unknown("transition", arc.transition))?;
        if !seen.insert((arc.pre, p, t)) {
            return Err(NetError::Validation(format!(
                "line {}: duplicate arc between {} and {}",
                arc.line, arc.place, arc.transition
            )));
        }
        if arc.pre {
            pre[t][p] = arc.weight;
        } else {
            post[t][p] = arc.weight;
        }
    }

    let transitions = transitions
        .into_iter()
        .zip(pre.into_iter().zip(post))
        .map(|((id, eft, lft), (pre, post))| Transition {
            name: id.to_string(),
            pre,
            post,
            eft,
            lft,
        })
        .collect();
    TimePetriNet::new(name, places, transitions)
}
