//! Activity-based clock reduction.
//!
//! A clock is active at a location if some path from there reads it (in an
//! invariant or a non-vacuous guard) before overwriting it. Each location maps
//! its active clocks injectively into a shared pool; edges copy values between
//! pool slots where the two renamings disagree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use super::{Assignment, Atom, Edge, Location, TimedAutomaton};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReductionReport {
    pub original: usize,
    pub reduced: usize,
}

impl fmt::Display for ReductionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "clocks: {} -> {}", self.original, self.reduced)
    }
}

/// Clocks whose value after `assignments` is in `live`, before them.
fn live_before(assignments: &[Assignment], live: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut set = live.clone();
    for a in assignments.iter().rev() {
        match *a {
            Assignment::Reset(c) => {
                set.remove(&c);
            }
            Assignment::Copy { dst, src } => {
                if set.remove(&dst) {
                    set.insert(src);
                }
            }
        }
    }
    set
}

/// Active clocks per location: the least fixpoint of
/// `act(l) ⊇ clocks(Inv(l)) ∪ clocks(g) ∪ live_before(r, act(l'))` over
/// edges `l --g, r--> l'`. Vacuous guards `x >= 0` read nothing.
pub fn activity(ta: &TimedAutomaton) -> Vec<BTreeSet<usize>> {
    let mut act: Vec<BTreeSet<usize>> = ta
        .locations
        .iter()
        .map(|l| l.invariant.iter().map(|a| a.clock).collect())
        .collect();
    for e in &ta.edges {
        act[e.source].extend(e.guard.iter().filter(|g| !g.is_vacuous()).map(|g| g.clock));
    }
    let mut changed = true;
    while changed {
        changed = false;
        for e in &ta.edges {
            let before = live_before(&e.assignments, &act[e.target]);
            let src = &mut act[e.source];
            let n = src.len();
            src.extend(before);
            changed |= src.len() != n;
        }
    }
    act
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Origin {
    Zero,
    Clock(usize),
}

/// Where each clock's value comes from after `assignments`.
fn origins(assignments: &[Assignment], clocks: usize) -> Vec<Origin> {
    let mut o: Vec<Origin> = (0..clocks).map(Origin::Clock).collect();
    for a in assignments {
        match *a {
            Assignment::Reset(c) => o[c] = Origin::Zero,
            Assignment::Copy { dst, src } => o[dst] = o[src],
        }
    }
    o
}

/// Sequential assignments realising the parallel update `dst := src` for
/// every pair in `moves`, followed by resets. May claim one extra slot per
/// cyclic group, growing `pool`.
fn sequentialize(
    mut moves: Vec<(usize, usize)>,
    keep: &BTreeSet<usize>,
    resets: &BTreeSet<usize>,
    pool: &mut usize,
) -> Vec<Assignment> {
    let mut out = Vec::new();
    while !moves.is_empty() {
        if let Some(i) = moves
            .iter()
            .position(|&(d, _)| !moves.iter().any(|&(_, s)| s == d))
        {
            let (dst, src) = moves.remove(i);
            out.push(Assignment::Copy { dst, src });
            continue;
        }
        // Only cycles remain: park one destination's current value.
        let busy: BTreeSet<usize> = moves
            .iter()
            .flat_map(|&(d, s)| [d, s])
            .chain(keep.iter().copied())
            .collect();
        let tmp = (0..*pool).find(|c| !busy.contains(c)).unwrap_or_else(|| {
            *pool += 1;
            *pool - 1
        });
        let saved = moves[0].0;
        out.push(Assignment::Copy {
            dst: tmp,
            src: saved,
        });
        for m in &mut moves {
            if m.1 == saved {
                m.1 = tmp;
            }
        }
    }
    out.extend(resets.iter().map(|&c| Assignment::Reset(c)));
    out
}

/// Breadth-first order from the initial location, then any unreachable ones,
/// each with the edge it was first reached by.
fn bfs_order(ta: &TimedAutomaton) -> Vec<(usize, Option<usize>)> {
    let mut seen = vec![false; ta.locations.len()];
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    let mut starts = vec![ta.initial];
    starts.extend(0..ta.locations.len());
    for s in starts {
        if seen.get(s).copied().unwrap_or(true) {
            continue;
        }
        seen[s] = true;
        queue.push_back((s, None));
        while let Some((l, via)) = queue.pop_front() {
            order.push((l, via));
            for (i, e) in ta.edges.iter().enumerate() {
                if e.source == l && !seen[e.target] {
                    seen[e.target] = true;
                    queue.push_back((e.target, Some(i)));
                }
            }
        }
    }
    order
}

/// Renames clocks into a pool of size `max |act(l)|` (plus any temporaries
/// needed to break cyclic copies).
pub fn reduce_clocks(ta: &TimedAutomaton) -> (TimedAutomaton, ReductionReport) {
    let n = ta.clocks.len();
    let act = activity(ta);
    let mut pool = act.iter().map(BTreeSet::len).max().unwrap_or(0);

    let mut rho: Vec<BTreeMap<usize, usize>> = vec![BTreeMap::new(); ta.locations.len()];
    for (l, via) in bfs_order(ta) {
        let mut used = BTreeSet::new();
        let mut map = BTreeMap::new();
        if let Some(e) = via.map(|i| &ta.edges[i]) {
            let o = origins(&e.assignments, n);
            for &c in &act[l] {
                if let Origin::Clock(src) = o[c] {
                    if let Some(&slot) = rho[e.source].get(&src) {
                        if used.insert(slot) {
                            map.insert(c, slot);
                        }
                    }
                }
            }
        }
        for &c in &act[l] {
            map.entry(c).or_insert_with(|| {
                let slot = (0..pool)
                    .find(|s| !used.contains(s))
                    .expect("pool fits act(l)");
                used.insert(slot);
                slot
            });
        }
        rho[l] = map;
    }

    let rename = |l: usize, atoms: &[Atom]| -> Vec<Atom> {
        atoms
            .iter()
            .filter_map(|a| rho[l].get(&a.clock).map(|&slot| Atom { clock: slot, ..*a }))
            .collect()
    };
    let mut edges = Vec::with_capacity(ta.edges.len());
    for e in &ta.edges {
        let o = origins(&e.assignments, n);
        let mut moves = Vec::new();
        let mut keep = BTreeSet::new();
        let mut resets = BTreeSet::new();
        for (&c, &dst) in &rho[e.target] {
            match o[c] {
                Origin::Zero => {
                    resets.insert(dst);
                }
                Origin::Clock(src) => {
                    let from = rho[e.source][&src];
                    if from == dst {
                        keep.insert(dst);
                    } else {
                        moves.push((dst, from));
                    }
                }
            }
        }
        edges.push(Edge {
            source: e.source,
            target: e.target,
            guard: rename(e.source, &e.guard),
            label: e.label,
            assignments: sequentialize(moves, &keep, &resets, &mut pool),
        });
    }
    let locations = ta
        .locations
        .iter()
        .enumerate()
        .map(|(i, l)| Location {
            name: l.name.clone(),
            marking: l.marking.clone(),
            invariant: rename(i, &l.invariant),
            clock_map: l
                .clock_map
                .iter()
                .map(|c| c.and_then(|c| rho[i].get(&c).copied()))
                .collect(),
        })
        .collect();
    let reduced = TimedAutomaton {
        name: ta.name.clone(),
        locations,
        initial: ta.initial,
        clocks: (1..=pool).map(|i| format!("z{i}")).collect(),
        actions: ta.actions.clone(),
        edges,
    };
    let report = ReductionReport {
        original: n,
        reduced: pool,
    };
    (reduced, report)
}
