//! The marking timed automaton: one location per reachable marking, one clock
//! per transition, invariants from latest firing times, guards from earliest
//! firing times and resets of newly enabled clocks.

mod export;
mod reduce;
mod simulate;

use std::fmt;

use thiserror::Error;

use crate::explorer::{Exploration, Status};
use crate::net::{Marking, Rational, ScaledNet};

pub use export::{export, ExportFormat};
pub use reduce::{activity, reduce_clocks, ReductionReport};
pub use simulate::{cross_simulate, Divergence, Driver, SimulationReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("marking graph is incomplete (status {0})")]
    IncompleteGraph(Status),
    #[error("unsupported feature: {0}")]
    UnsupportedFeature(String),
    #[error("valuation has {found} clocks but the automaton has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("no location {0}")]
    UnknownLocation(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Ge,
    Le,
}

/// `clock >= value` or `clock <= value`, in scaled time units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub clock: usize,
    pub rel: Rel,
    pub value: i64,
}

impl Atom {
    pub fn holds(&self, v: &[Rational]) -> bool {
        let c = Rational::from_integer(self.value);
        match self.rel {
            Rel::Ge => v[self.clock] >= c,
            Rel::Le => v[self.clock] <= c,
        }
    }

    /// `x >= 0` holds for every valuation.
    pub fn is_vacuous(&self) -> bool {
        self.rel == Rel::Ge && self.value <= 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Assignment {
    Reset(usize),
    Copy { dst: usize, src: usize },
}

impl Assignment {
    pub fn dst(&self) -> usize {
        match *self {
            Assignment::Reset(c) | Assignment::Copy { dst: c, .. } => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub marking: Marking,
    /// Non-strict upper bounds only.
    pub invariant: Vec<Atom>,
    /// For each net transition, the automaton clock holding its enabling time
    /// at this location, if that time is still observable.
    pub clock_map: Vec<Option<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub guard: Vec<Atom>,
    /// Index into `actions`.
    pub label: usize,
    /// Applied in order.
    pub assignments: Vec<Assignment>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimedAutomaton {
    pub name: String,
    pub locations: Vec<Location>,
    pub initial: usize,
    pub clocks: Vec<String>,
    pub actions: Vec<String>,
    pub edges: Vec<Edge>,
}

impl TimedAutomaton {
    pub fn location_by_marking(&self, m: &Marking) -> Option<usize> {
        self.locations.iter().position(|l| &l.marking == m)
    }

    pub fn has_copies(&self) -> bool {
        self.edges.iter().any(|e| {
            e.assignments
                .iter()
                .any(|a| matches!(a, Assignment::Copy { .. }))
        })
    }

    pub fn edge_display<'a>(&'a self, e: &'a Edge) -> impl fmt::Display + 'a {
        EdgeDisplay { ta: self, e }
    }

    fn atoms(&self, atoms: &[Atom], sep: &str) -> String {
        atoms
            .iter()
            .map(|a| {
                let op = if a.rel == Rel::Ge { ">=" } else { "<=" };
                format!("{} {op} {}", self.clocks[a.clock], a.value)
            })
            .collect::<Vec<_>>()
            .join(sep)
    }

    fn assignments(&self, assignments: &[Assignment], op: &str) -> String {
        assignments
            .iter()
            .map(|a| match *a {
                Assignment::Reset(c) => format!("{} {op} 0", self.clocks[c]),
                Assignment::Copy { dst, src } => {
                    format!("{} {op} {}", self.clocks[dst], self.clocks[src])
                }
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

struct EdgeDisplay<'a> {
    ta: &'a TimedAutomaton,
    e: &'a Edge,
}

impl fmt::Display for EdgeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (ta, e) = (self.ta, self.e);
        write!(
            f,
            "{} -> {} {}",
            ta.locations[e.source].name, ta.locations[e.target].name, ta.actions[e.label]
        )?;
        if !e.guard.is_empty() {
            write!(f, ", {}", ta.atoms(&e.guard, " & "))?;
        }
        if !e.assignments.is_empty() {
            write!(f, ", {}", ta.assignments(&e.assignments, ":="))?;
        }
        Ok(())
    }
}

/// Builds the automaton from a complete exploration of `net`.
pub fn build_marking_ta(
    net: &ScaledNet,
    exploration: &Exploration,
) -> Result<TimedAutomaton, AutomatonError> {
    if !exploration.status.is_complete() {
        return Err(AutomatonError::IncompleteGraph(exploration.status));
    }
    let base = net.net();
    let n = base.transitions().len();
    let g = &exploration.graph;
    let locations = g
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let enabled = net.enabled(m);
            let invariant = enabled
                .iter()
                .filter_map(|&t| {
                    net.lft(t).map(|value| Atom {
                        clock: t,
                        rel: Rel::Le,
                        value,
                    })
                })
                .collect();
            let mut clock_map = vec![None; n];
            for t in enabled {
                clock_map[t] = Some(t);
            }
            Location {
                name: format!("M{i}"),
                marking: m.clone(),
                invariant,
                clock_map,
            }
        })
        .collect();
    let edges = g
        .edges()
        .iter()
        .map(|e| {
            let newly = base
                .newly_enabled(g.marking(e.source), e.transition)
                .expect("graph edge fires an enabled transition");
            Edge {
                source: e.source,
                target: e.target,
                guard: vec![Atom {
                    clock: e.transition,
                    rel: Rel::Ge,
                    value: net.eft(e.transition),
                }],
                label: e.transition,
                assignments: newly.into_iter().map(Assignment::Reset).collect(),
            }
        })
        .collect();
    Ok(TimedAutomaton {
        name: base.name.clone(),
        locations,
        initial: 0,
        clocks: (1..=n).map(|i| format!("x{i}")).collect(),
        actions: base.transitions().iter().map(|t| t.name.clone()).collect(),
        edges,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TaState {
    pub location: usize,
    pub valuation: Vec<Rational>,
}

impl TaState {
    pub fn initial(ta: &TimedAutomaton) -> Self {
        Self {
            location: ta.initial,
            valuation: vec![Rational::from_integer(0); ta.clocks.len()],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Move {
    Delay(Rational),
    /// Fire the action with this label index.
    Action(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Moved(Vec<TaState>),
    Blocked,
}

/// One move of the automaton's timed transition system. An action yields
/// every successor through an edge carrying that label.
pub fn ta_step(ta: &TimedAutomaton, state: &TaState, mv: Move) -> Result<Step, AutomatonError> {
    if state.valuation.len() != ta.clocks.len() {
        return Err(AutomatonError::Dimension {
            expected: ta.clocks.len(),
            found: state.valuation.len(),
        });
    }
    let loc = ta
        .locations
        .get(state.location)
        .ok_or(AutomatonError::UnknownLocation(state.location))?;
    match mv {
        Move::Delay(d) => {
            if d < Rational::from_integer(0) {
                return Ok(Step::Blocked);
            }
            let v: Vec<Rational> = state.valuation.iter().map(|x| x + d).collect();
            // Upper bounds only: holding at both ends means holding throughout.
            let ok = loc
                .invariant
                .iter()
                .all(|a| a.holds(&state.valuation) && a.holds(&v));
            Ok(if ok {
                Step::Moved(vec![TaState {
                    location: state.location,
                    valuation: v,
                }])
            } else {
                Step::Blocked
            })
        }
        Move::Action(a) => {
            let mut out = Vec::new();
            for e in &ta.edges {
                if e.source != state.location
                    || e.label != a
                    || !e.guard.iter().all(|g| g.holds(&state.valuation))
                {
                    continue;
                }
                let mut v = state.valuation.clone();
                for asg in &e.assignments {
                    match *asg {
                        Assignment::Reset(c) => v[c] = Rational::from_integer(0),
                        Assignment::Copy { dst, src } => v[dst] = v[src],
                    }
                }
                if ta.locations[e.target].invariant.iter().all(|i| i.holds(&v)) {
                    out.push(TaState {
                        location: e.target,
                        valuation: v,
                    });
                }
            }
            Ok(if out.is_empty() {
                Step::Blocked
            } else {
                Step::Moved(out)
            })
        }
    }
}
