//! Time Petri nets: structure, markings and the untimed firing rule.

mod format;
mod scaled;

use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

pub use format::{parse_net, ParseError};
pub use scaled::ScaledNet;

/// Exact non-negative time value as written in a net file.
pub type Rational = Ratio<i64>;

/// Default per-place token cap used by the boundedness stopping criterion.
pub const DEFAULT_TOKEN_CAP: u32 = 255;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("invalid net: {0}")]
    Validation(String),
    #[error("transition {0} is not enabled")]
    FiredNotEnabled(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Place {
    pub name: String,
    pub initial: u32,
}

/// Latest firing time: a finite rational or unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Latest {
    Finite(Rational),
    Infinite,
}

impl Latest {
    pub fn finite(self) -> Option<Rational> {
        match self {
            Latest::Finite(v) => Some(v),
            Latest::Infinite => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub name: String,
    /// Backward incidence, one weight per place.
    pub pre: Vec<u32>,
    /// Forward incidence, one weight per place.
    pub post: Vec<u32>,
    pub eft: Rational,
    pub lft: Latest,
}

/// Token counts indexed by place declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(pub Vec<u32>);

impl Marking {
    pub fn tokens(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `self >= weights`.
    pub fn covers(&self, weights: &[u32]) -> bool {
        self.0.iter().zip(weights).all(|(m, w)| m >= w)
    }

    pub fn max_tokens(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for Marking {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A time Petri net with single-server semantics: one clock per transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimePetriNet {
    pub name: String,
    places: Vec<Place>,
    transitions: Vec<Transition>,
}

impl TimePetriNet {
    /// Builds a net after checking identifier uniqueness, incidence sizes and `eft <= lft`.
    pub fn new(
        name: impl Into<String>,
        places: Vec<Place>,
        transitions: Vec<Transition>,
    ) -> Result<Self, NetError> {
        let name = name.into();
        check_ident(&name)?;
        let mut seen = std::collections::HashSet::new();
        for p in &places {
            check_ident(&p.name)?;
            if !seen.insert(p.name.as_str()) {
                return Err(NetError::Validation(format!("duplicate place {}", p.name)));
            }
        }
        seen.clear();
        for t in &transitions {
            check_ident(&t.name)?;
            if !seen.insert(t.name.as_str()) {
                return Err(NetError::Validation(format!(
                    "duplicate transition {}",
                    t.name
                )));
            }
            if t.pre.len() != places.len() || t.post.len() != places.len() {
                return Err(NetError::Validation(format!(
                    "transition {} has incidence vectors of the wrong length",
                    t.name
                )));
            }
            if t.eft < Rational::from_integer(0) {
                return Err(NetError::Validation(format!(
                    "transition {} has a negative earliest firing time",
                    t.name
                )));
            }
            if let Latest::Finite(lft) = t.lft {
                if lft < t.eft {
                    return Err(NetError::Validation(format!(
                        "transition {}: eft {} exceeds lft {}",
                        t.name, t.eft, lft
                    )));
                }
            }
        }
        Ok(Self {
            name,
            places,
            transitions,
        })
    }

    pub fn places(&self) -> &[Place] {
        &self.places
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition(&self, t: usize) -> &Transition {
        &self.transitions[t]
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p.name == name)
    }

    pub fn transition_index(&self, name: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.name == name)
    }

    pub fn initial_marking(&self) -> Marking {
        Marking(self.places.iter().map(|p| p.initial).collect())
    }

    pub fn is_enabled(&self, m: &Marking, t: usize) -> bool {
        m.covers(&self.transitions[t].pre)
    }

    /// Transitions enabled by `m`, in declaration order.
    pub fn enabled(&self, m: &Marking) -> Vec<usize> {
        (0..self.transitions.len())
            .filter(|&t| self.is_enabled(m, t))
            .collect()
    }

    /// Transitions newly enabled by firing `fired` from `m`, in declaration order.
    ///
    /// A transition is newly enabled when the marking after firing enables it but
    /// the intermediate marking `m - pre(fired)` does not. The fired transition
    /// itself counts as newly enabled whenever it is enabled after firing.
    pub fn newly_enabled(&self, m: &Marking, fired: usize) -> Result<Vec<usize>, NetError> {
        let tr = &self.transitions[fired];
        if !m.covers(&tr.pre) {
            return Err(NetError::FiredNotEnabled(tr.name.clone()));
        }
        let intermediate: Vec<u32> = m.0.iter().zip(&tr.pre).map(|(a, b)| a - b).collect();
        let after: Vec<u32> = intermediate
            .iter()
            .zip(&tr.post)
            .map(|(a, b)| a + b)
            .collect();
        let after = Marking(after);
        let intermediate = Marking(intermediate);
        Ok((0..self.transitions.len())
            .filter(|&t| {
                let pre = &self.transitions[t].pre;
                after.covers(pre) && (t == fired || !intermediate.covers(pre))
            })
            .collect())
    }

    /// `m - pre(t) + post(t)`.
    pub fn fire(&self, m: &Marking, t: usize) -> Result<Marking, NetError> {
        let tr = &self.transitions[t];
        if !m.covers(&tr.pre) {
            return Err(NetError::FiredNotEnabled(tr.name.clone()));
        }
        Ok(Marking(
            m.0.iter()
                .zip(&tr.pre)
                .zip(&tr.post)
                .map(|((c, pre), post)| c - pre + post)
                .collect(),
        ))
    }

    /// Renders the net in the textual input format.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for TimePetriNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "net {}", self.name)?;
        for p in &self.places {
            if p.initial > 0 {
                writeln!(f, "place {} init {}", p.name, p.initial)?;
            } else {
                writeln!(f, "place {}", p.name)?;
            }
        }
        for t in &self.transitions {
            write!(f, "transition {} eft {} lft ", t.name, t.eft)?;
            match t.lft {
                Latest::Finite(v) => writeln!(f, "{v}")?,
                Latest::Infinite => writeln!(f, "inf")?,
            }
        }
        for t in &self.transitions {
            for (p, &w) in t.pre.iter().enumerate() {
                match w {
                    0 => {}
                    1 => writeln!(f, "arc pre {} {}", self.places[p].name, t.name)?,
                    _ => writeln!(f, "arc pre {} {} {w}", self.places[p].name, t.name)?,
                }
            }
            for (p, &w) in t.post.iter().enumerate() {
                match w {
                    0 => {}
                    1 => writeln!(f, "arc post {} {}", t.name, self.places[p].name)?,
                    _ => writeln!(f, "arc post {} {} {w}", t.name, self.places[p].name)?,
                }
            }
        }
        Ok(())
    }
}

/// ASCII letter followed by letters, digits or underscores.
pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_ident(s: &str) -> Result<(), NetError> {
    if is_ident(s) {
        Ok(())
    } else {
        Err(NetError::Validation(format!("invalid identifier {s:?}")))
    }
}
