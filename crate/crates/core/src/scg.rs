//! State class graph: the classical abstraction where a class is a marking and
//! a firing domain over the relative firing times of its enabled transitions.
//! Used as an independent oracle for the explorer's marking set and edges.

use std::collections::VecDeque;
use std::time::Instant;

use indexmap::IndexSet;

use crate::dbm::{Bound, ClockId, Constraint, Zone};
use crate::explorer::{ExploreError, Status, StopCriteria};
use crate::net::{Marking, ScaledNet};

/// Expansion cap applied when the criteria leave `max_steps` unset.
pub const DEFAULT_CLASS_CAP: usize = 1_000_000;

/// `x_t` ranges over the firing time of enabled transition `t`, measured
/// from the moment the class was entered.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateClass {
    pub marking: Marking,
    pub domain: Zone,
}

fn static_interval(net: &ScaledNet, t: usize) -> [Option<Constraint>; 2] {
    let x = ClockId(t);
    [
        Some(Constraint::ge(x, net.eft(t))),
        net.lft(t).map(|l| Constraint::le(x, l)),
    ]
}

pub fn initial_class(net: &ScaledNet) -> StateClass {
    let marking = net.net().initial_marking();
    let enabled = net.enabled(&marking);
    let clocks: Vec<ClockId> = enabled.iter().map(|&t| ClockId(t)).collect();
    let constraints: Vec<Constraint> = enabled
        .iter()
        .flat_map(|&t| static_interval(net, t))
        .flatten()
        .collect();
    let domain = Zone::from_constraints(&clocks, &constraints).expect("distinct clocks");
    StateClass { marking, domain }
}

/// The domain restricted to runs where `t` fires no later than any other
/// enabled transition.
fn fires_first(c: &StateClass, t: usize) -> Zone {
    let xj = ClockId(t);
    let mut d = c.domain.clone();
    for &xi in c.domain.clocks() {
        if xi != xj {
            d = d
                .constrain(Constraint::diff(xj, xi, Bound::le(0)))
                .expect("clock in domain");
        }
    }
    d
}

/// Enabled transitions that can fire first.
pub fn class_firable(c: &StateClass) -> Vec<usize> {
    c.domain
        .clocks()
        .iter()
        .map(|x| x.0)
        .filter(|&t| !fires_first(c, t).is_empty())
        .collect()
}

pub fn class_successor(
    net: &ScaledNet,
    c: &StateClass,
    t: usize,
) -> Result<StateClass, ExploreError> {
    let not_firable = || ExploreError::NotFirable(net.net().transition(t).name.clone());
    let xj = ClockId(t);
    let Some(j) = c.domain.index_of(xj) else {
        return Err(not_firable());
    };
    let d = fires_first(c, t);
    if d.is_empty() {
        return Err(not_firable());
    }

    // Substitute x_i = x_i' + x_j and eliminate x_j: on the canonical matrix
    // this makes x_j the reference clock and drops the old reference.
    let dim = d.dim();
    let kept: Vec<usize> = (1..dim).filter(|&i| i != j).collect();
    let clocks: Vec<ClockId> = kept.iter().map(|&i| d.clocks()[i - 1]).collect();
    let remap = |i: usize| if i == 0 { j } else { kept[i - 1] };
    let n = kept.len() + 1;
    let mut mat = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            mat.push(if a == b {
                Bound::ZERO
            } else {
                d.get(remap(a), remap(b))
            });
        }
    }
    let mut domain = Zone::from_matrix(&clocks, mat)?.canonicalize();

    let base = net.net();
    let marking = base.fire(&c.marking, t).expect("enabled transition");
    let newly = base
        .newly_enabled(&c.marking, t)
        .expect("enabled transition");
    for x in clocks {
        if !base.is_enabled(&marking, x.0) || newly.contains(&x.0) {
            domain = domain.remove_clock(x)?;
        }
    }
    for &u in &newly {
        domain = domain.add_clock(ClockId(u))?;
        for cst in static_interval(net, u).into_iter().flatten() {
            domain = domain.constrain(cst)?;
        }
    }
    Ok(StateClass {
        marking,
        domain: domain.canonicalize(),
    })
}

#[derive(Clone, Debug)]
pub struct StateClassGraph {
    pub classes: IndexSet<StateClass>,
    /// `(source class, transition, target class)`.
    pub edges: IndexSet<(usize, usize, usize)>,
    pub status: Status,
}

impl StateClassGraph {
    pub fn markings(&self) -> IndexSet<Marking> {
        self.classes.iter().map(|c| c.marking.clone()).collect()
    }

    /// Edges projected onto markings.
    pub fn marking_edges(&self) -> IndexSet<(Marking, usize, Marking)> {
        self.edges
            .iter()
            .map(|&(a, t, b)| {
                (
                    self.classes[a].marking.clone(),
                    t,
                    self.classes[b].marking.clone(),
                )
            })
            .collect()
    }

    pub fn to_dot(&self, net: &ScaledNet) -> String {
        let mut out = String::from("digraph classes {\n  node [shape=box];\n");
        for (i, c) in self.classes.iter().enumerate() {
            out.push_str(&format!("  C{i} [label=\"C{i}: {}\"];\n", c.marking));
        }
        for &(a, t, b) in &self.edges {
            out.push_str(&format!(
                "  C{a} -> C{b} [label=\"{}\"];\n",
                net.net().transition(t).name
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// Breadth-first construction; classes are merged only when equal.
pub fn build_scg(
    net: &ScaledNet,
    criteria: &StopCriteria,
) -> Result<StateClassGraph, ExploreError> {
    let start = Instant::now();
    let cap = criteria.max_steps.unwrap_or(DEFAULT_CLASS_CAP);
    let mut classes = IndexSet::new();
    let mut markings: IndexSet<Marking> = IndexSet::new();
    let mut edges = IndexSet::new();
    let init = initial_class(net);
    markings.insert(init.marking.clone());
    classes.insert(init);
    let mut waiting = VecDeque::from([0usize]);
    let mut steps = 0;
    let mut token_cap_hit = false;
    let finish = |classes, edges, status| StateClassGraph {
        classes,
        edges,
        status,
    };
    while let Some(ci) = waiting.pop_front() {
        if criteria.timeout.is_some_and(|t| start.elapsed() >= t) {
            return Ok(finish(classes, edges, Status::Timeout));
        }
        if steps >= cap {
            return Ok(finish(classes, edges, Status::StepCapHit));
        }
        steps += 1;
        let class = classes[ci].clone();
        for t in class_firable(&class) {
            let next = class_successor(net, &class, t)?;
            if next.marking.max_tokens() > criteria.max_tokens_per_place {
                token_cap_hit = true;
                continue;
            }
            if !markings.contains(&next.marking) {
                if criteria.max_markings.is_some_and(|m| markings.len() >= m) {
                    return Ok(finish(classes, edges, Status::MarkingCapHit));
                }
                markings.insert(next.marking.clone());
            }
            let (idx, fresh) = classes.insert_full(next);
            edges.insert((ci, t, idx));
            if fresh {
                waiting.push_back(idx);
            }
        }
    }
    let status = if token_cap_hit {
        Status::TokenCapHit
    } else {
        Status::Complete
    };
    Ok(finish(classes, edges, status))
}
