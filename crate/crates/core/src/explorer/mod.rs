//! Forward exploration of the symbolic state space.
//!
//! A symbolic state pairs a marking with a zone over the clocks of the
//! transitions it enables. Each reachable marking keeps a list of the zones it
//! has been entered with (after letting time elapse up to the invariant); a new
//! zone contained in one of them is not explored again. Zones are extrapolated
//! with the net's largest constant so that the lists stay finite.

mod query;

use std::collections::VecDeque;
use std::fmt;
use std::time::{Duration, Instant};

use indexmap::IndexSet;
use thiserror::Error;

use crate::dbm::{ClockId, Constraint, DbmError, Zone};
use crate::net::{Marking, Rational, ScaledNet, DEFAULT_TOKEN_CAP};

pub use query::{CmpOp, MarkingPredicate, QueryError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExploreError {
    #[error("transition {0} is not firable from this state")]
    NotFirable(String),
    #[error("the marking admits no clock valuation")]
    DeadState,
    #[error("disabling extrapolation requires a step cap")]
    UncappedDiagnostic,
    #[error(transparent)]
    Dbm(#[from] DbmError),
}

/// A marking with a zone over exactly the clocks of its enabled transitions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicState {
    pub marking: Marking,
    pub zone: Zone,
}

fn clocks_of(ts: &[usize]) -> Vec<ClockId> {
    ts.iter().map(|&t| ClockId(t)).collect()
}

/// `(M0, {x = 0 for every enabled x})`.
pub fn initial_state(net: &ScaledNet) -> SymbolicState {
    let marking = net.net().initial_marking();
    let zone = Zone::zero(&clocks_of(&net.enabled(&marking))).expect("distinct clocks");
    SymbolicState { marking, zone }
}

/// Lets time elapse from `s.zone` as long as no enabled transition passes its
/// latest firing time.
pub fn time_closure(net: &ScaledNet, s: &SymbolicState) -> Result<Zone, ExploreError> {
    let mut z = s
        .zone
        .clone()
        .future()
        .map_err(|_| ExploreError::DeadState)?;
    for &x in s.zone.clocks() {
        if let Some(lft) = net.lft(x.0) {
            z = z.constrain(Constraint::le(x, lft))?;
        }
    }
    if z.is_empty() {
        return Err(ExploreError::DeadState);
    }
    Ok(z)
}

fn guard(net: &ScaledNet, t: usize) -> Constraint {
    Constraint::ge(ClockId(t), net.eft(t))
}

/// Enabled transitions that can fire from some valuation of the time closure.
pub fn firable(net: &ScaledNet, s: &SymbolicState) -> Result<Vec<usize>, ExploreError> {
    let closed = time_closure(net, s)?;
    Ok(firable_from_closed(net, &s.marking, &closed))
}

fn firable_from_closed(net: &ScaledNet, m: &Marking, closed: &Zone) -> Vec<usize> {
    net.enabled(m)
        .into_iter()
        .filter(|&t| {
            !closed
                .clone()
                .constrain(guard(net, t))
                .expect("enabled clock in zone")
                .is_empty()
        })
        .collect()
}

/// Result of firing one transition from a time-closed zone.
struct Firing {
    /// Valuations at the firing instant, before resets.
    at_firing: Zone,
    next: SymbolicState,
}

fn fire_from_closed(
    net: &ScaledNet,
    m: &Marking,
    closed: &Zone,
    t: usize,
    extrapolate: bool,
) -> Result<Option<Firing>, ExploreError> {
    let at_firing = closed.clone().constrain(guard(net, t))?;
    if at_firing.is_empty() {
        return Ok(None);
    }
    let base = net.net();
    let marking = base.fire(m, t).expect("enabled transition");
    let newly = base.newly_enabled(m, t).expect("enabled transition");
    let mut zone = at_firing.clone();
    for &x in at_firing.clocks() {
        if !base.is_enabled(&marking, x.0) || newly.contains(&x.0) {
            zone = zone.remove_clock(x)?;
        }
    }
    let fresh = clocks_of(&newly);
    for &x in &fresh {
        zone = zone.add_clock(x)?;
    }
    zone = zone.reset(&fresh)?;
    if extrapolate {
        zone = zone.k_approx(net.k())?;
    }
    Ok(Some(Firing {
        at_firing,
        next: SymbolicState { marking, zone },
    }))
}

/// Fires `t` from `s`: time closure, guard, clock removal and reset of newly
/// enabled clocks, then extrapolation.
pub fn successor(
    net: &ScaledNet,
    s: &SymbolicState,
    t: usize,
) -> Result<SymbolicState, ExploreError> {
    let not_firable = || ExploreError::NotFirable(net.net().transition(t).name.clone());
    if !net.net().is_enabled(&s.marking, t) {
        return Err(not_firable());
    }
    let closed = time_closure(net, s)?;
    fire_from_closed(net, &s.marking, &closed, t, true)?
        .map(|f| f.next)
        .ok_or_else(not_firable)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SearchOrder {
    #[default]
    Bfs,
    Dfs,
}

/// How a new zone is compared with the zones already stored for its marking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Convergence {
    /// Skip zones included in a stored zone.
    #[default]
    Inclusion,
    /// Skip only zones equal to a stored zone.
    Equality,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopCriteria {
    pub max_markings: Option<usize>,
    pub max_tokens_per_place: u32,
    pub timeout: Option<Duration>,
    /// Cap on expanded symbolic states.
    pub max_steps: Option<usize>,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            max_markings: None,
            max_tokens_per_place: DEFAULT_TOKEN_CAP,
            timeout: None,
            max_steps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExploreOptions {
    pub criteria: StopCriteria,
    pub order: SearchOrder,
    /// Apply k-approximation to every successor zone. Disabling it is a
    /// diagnostic mode and requires `criteria.max_steps`.
    pub extrapolate: bool,
    pub convergence: Convergence,
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self {
            criteria: StopCriteria::default(),
            order: SearchOrder::Bfs,
            extrapolate: true,
            convergence: Convergence::Inclusion,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Complete,
    MarkingCapHit,
    TokenCapHit,
    StepCapHit,
    Timeout,
}

impl Status {
    pub fn is_complete(self) -> bool {
        self == Status::Complete
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Complete => "Complete",
            Status::MarkingCapHit => "MarkingCapHit",
            Status::TokenCapHit => "TokenCapHit",
            Status::StepCapHit => "StepCapHit",
            Status::Timeout => "Timeout",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphEdge {
    pub source: usize,
    pub transition: usize,
    pub target: usize,
}

/// Reachable markings, numbered in discovery order, with the marking-level
/// transition relation and the zones stored per marking.
#[derive(Clone, Debug)]
pub struct MarkingGraph {
    nodes: IndexSet<Marking>,
    edges: IndexSet<GraphEdge>,
    zone_lists: Vec<Vec<Zone>>,
}

impl MarkingGraph {
    /// Index 0 is the initial marking.
    pub fn nodes(&self) -> &IndexSet<Marking> {
        &self.nodes
    }

    pub fn marking(&self, i: usize) -> &Marking {
        &self.nodes[i]
    }

    pub fn index_of(&self, m: &Marking) -> Option<usize> {
        self.nodes.get_index_of(m)
    }

    pub fn edges(&self) -> &IndexSet<GraphEdge> {
        &self.edges
    }

    /// Time-closed zones stored for node `i`.
    pub fn zones(&self, i: usize) -> &[Zone] {
        &self.zone_lists[i]
    }

    pub fn zone_count(&self) -> usize {
        self.zone_lists.iter().map(Vec::len).sum()
    }

    /// Edges as `(source marking, transition, target marking)` triples.
    pub fn marking_edges(&self) -> impl Iterator<Item = (&Marking, usize, &Marking)> + '_ {
        self.edges
            .iter()
            .map(|e| (&self.nodes[e.source], e.transition, &self.nodes[e.target]))
    }

    /// Graphviz rendering: nodes `M<i>: (c1,c2,...)`, edges labelled by transition.
    pub fn to_dot(&self, net: &ScaledNet) -> String {
        let mut out = String::from("digraph markings {\n  node [shape=box];\n");
        for (i, m) in self.nodes.iter().enumerate() {
            out.push_str(&format!("  M{i} [label=\"M{i}: {m}\"];\n"));
        }
        for e in &self.edges {
            out.push_str(&format!(
                "  M{} -> M{} [label=\"{}\"];\n",
                e.source,
                e.target,
                net.net().transition(e.transition).name
            ));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Debug)]
pub struct Exploration {
    pub graph: MarkingGraph,
    pub status: Status,
    /// Symbolic states expanded.
    pub steps: usize,
}

/// One fired transition and the interval its clock lay in when it fired.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub transition: usize,
    pub name: String,
    /// Lower bound on the fired clock, in net time units.
    pub lower: Rational,
    pub lower_strict: bool,
    /// Upper bound, `None` when unbounded.
    pub upper: Option<Rational>,
    pub upper_strict: bool,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_strict { '(' } else { '[' };
        write!(f, "fire {} in {open}{},", self.name, self.lower)?;
        match self.upper {
            Some(u) => write!(f, "{u}{}", if self.upper_strict { ')' } else { ']' }),
            None => write!(f, "inf)"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimedTrace {
    pub steps: Vec<TraceStep>,
}

impl TimedTrace {
    pub fn transitions(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.transition).collect()
    }
}

impl fmt::Display for TimedTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.steps {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Reachable(TimedTrace),
    Unreachable,
    Unknown(Status),
}

struct Record {
    node: usize,
    zone: Zone,
    parent: Option<(usize, TraceStep)>,
}

struct Search<'a> {
    net: &'a ScaledNet,
    opts: &'a ExploreOptions,
    graph: MarkingGraph,
    records: Vec<Record>,
    waiting: VecDeque<usize>,
    steps: usize,
}

enum Outcome {
    Finished(Status),
    Found(usize, Option<TraceStep>),
}

impl<'a> Search<'a> {
    fn new(net: &'a ScaledNet, opts: &'a ExploreOptions) -> Result<Self, ExploreError> {
        if !opts.extrapolate && opts.criteria.max_steps.is_none() {
            return Err(ExploreError::UncappedDiagnostic);
        }
        let init = initial_state(net);
        let closed = time_closure(net, &init)?;
        let mut nodes = IndexSet::new();
        nodes.insert(init.marking);
        Ok(Self {
            net,
            opts,
            graph: MarkingGraph {
                nodes,
                edges: IndexSet::new(),
                zone_lists: vec![vec![closed.clone()]],
            },
            records: vec![Record {
                node: 0,
                zone: closed,
                parent: None,
            }],
            waiting: VecDeque::from([0]),
            steps: 0,
        })
    }

    fn trace_step(&self, t: usize, at_firing: &Zone) -> TraceStep {
        let (lo, up) = at_firing
            .project_interval(ClockId(t))
            .expect("fired clock present");
        TraceStep {
            transition: t,
            name: self.net.net().transition(t).name.clone(),
            lower: self.net.unscale(lo.value().unwrap_or(0)),
            lower_strict: lo.is_strict(),
            upper: up.value().map(|v| self.net.unscale(v)),
            upper_strict: up.is_strict(),
        }
    }

    fn run(&mut self, target: Option<&MarkingPredicate>) -> Result<Outcome, ExploreError> {
        let criteria = &self.opts.criteria;
        if target.is_some_and(|p| p.eval(&self.graph.nodes[0])) {
            return Ok(Outcome::Found(0, None));
        }
        let start = Instant::now();
        let mut token_cap_hit = false;
        loop {
            let next = match self.opts.order {
                SearchOrder::Bfs => self.waiting.pop_front(),
                SearchOrder::Dfs => self.waiting.pop_back(),
            };
            let Some(r) = next else { break };
            if criteria.timeout.is_some_and(|t| start.elapsed() >= t) {
                return Ok(Outcome::Finished(Status::Timeout));
            }
            if criteria.max_steps.is_some_and(|cap| self.steps >= cap) {
                return Ok(Outcome::Finished(Status::StepCapHit));
            }
            self.steps += 1;
            let node = self.records[r].node;
            let marking = self.graph.nodes[node].clone();
            let closed = self.records[r].zone.clone();
            for t in self.net.enabled(&marking) {
                let Some(firing) =
                    fire_from_closed(self.net, &marking, &closed, t, self.opts.extrapolate)?
                else {
                    continue;
                };
                let next = firing.next;
                if next.marking.max_tokens() > criteria.max_tokens_per_place {
                    token_cap_hit = true;
                    continue;
                }
                let next_closed = time_closure(self.net, &next)?;
                let target_node = match self.graph.nodes.get_index_of(&next.marking) {
                    Some(i) => i,
                    None => {
                        if criteria
                            .max_markings
                            .is_some_and(|cap| self.graph.nodes.len() >= cap)
                        {
                            return Ok(Outcome::Finished(Status::MarkingCapHit));
                        }
                        self.graph.zone_lists.push(Vec::new());
                        self.graph.nodes.insert_full(next.marking.clone()).0
                    }
                };
                self.graph.edges.insert(GraphEdge {
                    source: node,
                    transition: t,
                    target: target_node,
                });
                if target.is_some_and(|p| p.eval(&next.marking)) {
                    let step = self.trace_step(t, &firing.at_firing);
                    return Ok(Outcome::Found(r, Some(step)));
                }
                let stored = &self.graph.zone_lists[target_node];
                let covered = match self.opts.convergence {
                    Convergence::Inclusion => stored
                        .iter()
                        .any(|z| z.includes(&next_closed).expect("same clock set")),
                    Convergence::Equality => stored.contains(&next_closed),
                };
                if covered {
                    continue;
                }
                self.graph.zone_lists[target_node].push(next_closed.clone());
                let step = self.trace_step(t, &firing.at_firing);
                self.records.push(Record {
                    node: target_node,
                    zone: next_closed,
                    parent: Some((r, step)),
                });
                self.waiting.push_back(self.records.len() - 1);
            }
        }
        Ok(Outcome::Finished(if token_cap_hit {
            Status::TokenCapHit
        } else {
            Status::Complete
        }))
    }

    fn trace(&self, mut r: usize, last: Option<TraceStep>) -> TimedTrace {
        let mut steps: Vec<TraceStep> = last.into_iter().collect();
        while let Some((parent, step)) = &self.records[r].parent {
            steps.push(step.clone());
            r = *parent;
        }
        steps.reverse();
        TimedTrace { steps }
    }
}

/// Computes the marking graph of `net`.
pub fn explore(net: &ScaledNet, opts: &ExploreOptions) -> Result<Exploration, ExploreError> {
    let mut search = Search::new(net, opts)?;
    let status = match search.run(None)? {
        Outcome::Finished(s) => s,
        Outcome::Found(..) => unreachable!("no target"),
    };
    Ok(Exploration {
        graph: search.graph,
        status,
        steps: search.steps,
    })
}

/// Explores until a marking satisfying `pred` is generated.
pub fn check_reachability(
    net: &ScaledNet,
    pred: &MarkingPredicate,
    opts: &ExploreOptions,
) -> Result<Verdict, ExploreError> {
    let mut search = Search::new(net, opts)?;
    Ok(match search.run(Some(pred))? {
        Outcome::Found(r, last) => Verdict::Reachable(search.trace(r, last)),
        Outcome::Finished(Status::Complete) => Verdict::Unreachable,
        Outcome::Finished(status) => Verdict::Unknown(status),
    })
}
