//! Independent oracles shared by the integration tests: grid membership for
//! zones and a concrete-semantics brute force for nets.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};

use proptest::prelude::*;
use tpn_core::{Bound, ClockId, Constraint, Latest, ScaledNet, Zone};

// ---------------------------------------------------------------- zones

/// Valuations are integers in quarter units.
pub const Q: i64 = 4;

/// Grid of tested valuations per clock: 0, 1/2, ..., 5 and 7.
pub fn grid() -> Vec<i64> {
    (0..=10).map(|h| h * 2).chain([28]).collect()
}

/// Candidate witness values for existential checks.
pub fn witnesses() -> Vec<i64> {
    (0..=48).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct RawConstraint {
    pub left: Option<usize>,
    pub right: Option<usize>,
    pub value: i64,
    pub strict: bool,
}

impl RawConstraint {
    fn holds(&self, v: &[i64]) -> bool {
        let at = |i: Option<usize>| i.map_or(0, |i| v[i]);
        let d = at(self.left) - at(self.right);
        if self.strict {
            d < self.value * Q
        } else {
            d <= self.value * Q
        }
    }

    fn to_constraint(self, ids: &[ClockId]) -> Constraint {
        Constraint {
            left: self.left.map(|i| ids[i]),
            right: self.right.map(|i| ids[i]),
            bound: if self.strict {
                Bound::lt(self.value)
            } else {
                Bound::le(self.value)
            },
        }
    }
}

#[derive(Clone, Debug)]
pub enum Op {
    Canonical,
    Future,
    Constrain(RawConstraint),
    Reset(Vec<bool>),
    Remove(usize),
    /// Insert a fresh clock before position `i` of the clock order.
    Add(usize),
    KApprox(i64),
    Inclusion,
}

#[derive(Clone, Debug)]
pub struct DbmCase {
    pub n: usize,
    pub constraints: Vec<RawConstraint>,
    pub op: Op,
}

/// Clock identifiers leave gaps so that added clocks land between them.
pub fn ids(n: usize) -> Vec<ClockId> {
    (0..n).map(|i| ClockId(2 * i + 1)).collect()
}

fn raw_constraint(n: usize) -> impl Strategy<Value = RawConstraint> {
    (
        proptest::option::of(0..n),
        proptest::option::of(0..n),
        -4i64..=4,
        any::<bool>(),
    )
        .prop_filter("two distinct sides", |(l, r, _, _)| l != r)
        .prop_map(|(left, right, value, strict)| RawConstraint {
            left,
            right,
            value,
            strict,
        })
}

pub fn dbm_case() -> impl Strategy<Value = DbmCase> {
    (1usize..=3).prop_flat_map(|n| {
        let op = prop_oneof![
            Just(Op::Canonical),
            Just(Op::Future),
            raw_constraint(n).prop_map(Op::Constrain),
            proptest::collection::vec(any::<bool>(), n).prop_map(Op::Reset),
            (0..n).prop_map(Op::Remove),
            (0..=n).prop_map(Op::Add),
            (0i64..=4).prop_map(Op::KApprox),
            Just(Op::Inclusion),
        ];
        (proptest::collection::vec(raw_constraint(n), 0..=4), op)
            .prop_map(move |(constraints, op)| DbmCase { n, constraints, op })
    })
}

fn raw_member(cs: &[RawConstraint], v: &[i64]) -> bool {
    v.iter().all(|&x| x >= 0) && cs.iter().all(|c| c.holds(v))
}

/// Membership read straight off the matrix entries.
pub fn member(z: &Zone, v: &[i64]) -> bool {
    assert_eq!(z.clocks().len(), v.len());
    let at = |i: usize| if i == 0 { 0 } else { v[i - 1] };
    (0..z.dim()).all(|i| {
        (0..z.dim()).all(|j| match z.get(i, j) {
            Bound::Infinity => true,
            Bound::Finite { value, strict } => {
                let d = at(i) - at(j);
                if strict {
                    d < value * Q
                } else {
                    d <= value * Q
                }
            }
        })
    })
}

fn points(n: usize, values: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

fn compare(what: &str, z: &Zone, n: usize, oracle: impl Fn(&[i64]) -> bool) -> Result<(), String> {
    for v in points(n, &grid()) {
        let (got, want) = (member(z, &v), oracle(&v));
        if got != want {
            return Err(format!(
                "{what}: {v:?} member={got}, oracle={want}, zone {z}"
            ));
        }
    }
    Ok(())
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs one randomized case; `Err` describes the first disagreement.
pub fn check_dbm_case(case: &DbmCase) -> Result<(), String> {
    let n = case.n;
    let ids = ids(n);
    let cs: Vec<Constraint> = case
        .constraints
        .iter()
        .map(|c| c.to_constraint(&ids))
        .collect();
    let raw = case.constraints.clone();
    let z = Zone::from_constraints(&ids, &cs).map_err(|e| e.to_string())?;
    if z.is_empty() {
        let hit = points(n, &grid()).into_iter().find(|v| raw_member(&raw, v));
        check(hit.is_none(), || {
            format!("empty zone but {hit:?} satisfies the constraints")
        })?;
        // Operations on an empty zone either refuse or stay empty.
        let r = match &case.op {
            Op::Future => z.clone().future(),
            Op::Constrain(c) => z.clone().constrain(c.to_constraint(&ids)),
            Op::Reset(_) => z.clone().reset(&ids),
            Op::Remove(i) => z.clone().remove_clock(ids[*i]),
            Op::Add(pos) => z.clone().add_clock(ClockId(2 * pos)),
            Op::KApprox(k) => z.clone().k_approx(*k),
            Op::Canonical | Op::Inclusion => Ok(z.clone()),
        };
        return check(r.map_or(true, |r| r.is_empty()), || {
            "empty zone became nonempty".into()
        });
    }
    match &case.op {
        Op::Canonical => {
            compare("canonical", &z, n, |v| raw_member(&raw, v))?;
            let mat: Vec<Bound> = (0..z.dim())
                .flat_map(|i| (0..z.dim()).map(move |j| (i, j)))
                .map(|(i, j)| z.get(i, j))
                .collect();
            let again = Zone::from_matrix(&ids, mat).unwrap().canonicalize();
            check(again == z, || format!("canonicalize not idempotent on {z}"))?;
        }
        Op::Future => {
            let f = z.clone().future().map_err(|e| e.to_string())?;
            compare("future", &f, n, |v| {
                let top = v.iter().copied().min().unwrap_or(0);
                (0..=top).any(|d| raw_member(&raw, &v.iter().map(|x| x - d).collect::<Vec<_>>()))
            })?;
        }
        Op::Constrain(c) => {
            let r = z
                .clone()
                .constrain(c.to_constraint(&ids))
                .map_err(|e| e.to_string())?;
            compare("constrain", &r, n, |v| raw_member(&raw, v) && c.holds(v))?;
        }
        Op::Reset(mask) => {
            let reset: Vec<ClockId> = (0..n).filter(|&i| mask[i]).map(|i| ids[i]).collect();
            let r = z.clone().reset(&reset).map_err(|e| e.to_string())?;
            let free: Vec<usize> = (0..n).filter(|&i| mask[i]).collect();
            let ws = points(free.len(), &witnesses());
            compare("reset", &r, n, |v| {
                free.iter().all(|&i| v[i] == 0)
                    && ws.iter().any(|w| {
                        let mut u = v.to_vec();
                        for (k, &i) in free.iter().enumerate() {
                            u[i] = w[k];
                        }
                        raw_member(&raw, &u)
                    })
            })?;
        }
        Op::Remove(i) => {
            let r = z.clone().remove_clock(ids[*i]).map_err(|e| e.to_string())?;
            compare("remove", &r, n - 1, |v| {
                witnesses().iter().any(|&w| {
                    let mut u = v.to_vec();
                    u.insert(*i, w);
                    raw_member(&raw, &u)
                })
            })?;
        }
        Op::Add(pos) => {
            let r = z
                .clone()
                .add_clock(ClockId(2 * pos))
                .map_err(|e| e.to_string())?;
            compare("add", &r, n + 1, |v| {
                let mut u = v.to_vec();
                u.remove(*pos);
                raw_member(&raw, &u)
            })?;
        }
        Op::KApprox(k) => {
            let k = *k;
            if z.is_empty() {
                return check(z.clone().k_approx(k).is_err(), || {
                    "k_approx of empty".into()
                });
            }
            let a = z.clone().k_approx(k).map_err(|e| e.to_string())?;
            // Entrywise relaxation of the canonical matrix, applied to the valuation.
            compare("k_approx", &a, n, |v| {
                let at = |i: usize| if i == 0 { 0 } else { v[i - 1] };
                (0..z.dim()).all(|i| {
                    (0..z.dim()).all(|j| {
                        let d = at(i) - at(j);
                        match z.get(i, j) {
                            _ if i == j => true,
                            Bound::Infinity => true,
                            Bound::Finite { value, .. } if value > k => true,
                            Bound::Finite { value, .. } if value < -k => d < -k * Q,
                            Bound::Finite { value, strict } => {
                                if strict {
                                    d < value * Q
                                } else {
                                    d <= value * Q
                                }
                            }
                        }
                    })
                })
            })?;
            check(a.includes(&z).unwrap(), || {
                format!("{z} not within its approximation")
            })?;
            let twice = a.clone().k_approx(k).unwrap();
            check(twice == a, || format!("k_approx not idempotent on {z}"))?;
            let looser = Zone::from_constraints(&ids, &cs[cs.len().min(1)..]).unwrap();
            let la = looser.k_approx(k).unwrap();
            check(la.includes(&a).unwrap(), || {
                format!("k_approx not monotone on {z}")
            })?;
        }
        Op::Inclusion => {
            let mid = Zone::from_constraints(&ids, &cs[cs.len().min(1)..]).unwrap();
            let outer = Zone::from_constraints(&ids, &cs[cs.len().min(2)..]).unwrap();
            check(z.includes(&z).unwrap(), || "inclusion not reflexive".into())?;
            check(
                mid.includes(&z).unwrap() && outer.includes(&mid).unwrap(),
                || "dropping constraints shrank the zone".into(),
            )?;
            check(outer.includes(&z).unwrap(), || {
                "inclusion not transitive".into()
            })?;
            let grid_says = points(n, &grid())
                .iter()
                .all(|v| !member(&mid, v) || member(&z, v));
            if z.includes(&mid).unwrap() {
                check(grid_says, || format!("{z} claims to include {mid}"))?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- nets

#[derive(Debug, Default, PartialEq, Eq)]
pub struct Concrete {
    pub markings: BTreeSet<Vec<u32>>,
    pub edges: BTreeSet<(Vec<u32>, usize, Vec<u32>)>,
}

/// Every marking and firing reachable with delays that are multiples of 1/2,
/// explored to a fixpoint. Markings with a place above `cap` are dropped.
/// Works on integer nets; clocks are kept in half units and saturate above
/// the largest constant.
pub fn brute_force(net: &ScaledNet, cap: u32) -> Concrete {
    let base = net.net();
    let ts = base.transitions();
    let two = |r: tpn_core::Rational| {
        assert_eq!(*r.denom(), 1, "brute force expects integer bounds");
        2 * r.numer()
    };
    let eft: Vec<i64> = ts.iter().map(|t| two(t.eft)).collect();
    let lft: Vec<Option<i64>> = ts
        .iter()
        .map(|t| match t.lft {
            Latest::Finite(l) => Some(two(l)),
            Latest::Infinite => None,
        })
        .collect();
    let ceiling = eft
        .iter()
        .chain(lft.iter().flatten())
        .max()
        .copied()
        .unwrap_or(0)
        + 1;
    let enabled = |m: &[u32], t: usize| m.iter().zip(&ts[t].pre).all(|(a, b)| a >= b);

    let m0: Vec<u32> = base.places().iter().map(|p| p.initial).collect();
    let c0: Vec<i64> = (0..ts.len())
        .map(|t| if enabled(&m0, t) { 0 } else { -1 })
        .collect();
    let mut out = Concrete::default();
    out.markings.insert(m0.clone());
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert((m0.clone(), c0.clone()));
    queue.push_back((m0, c0));
    while let Some((m, c)) = queue.pop_front() {
        let mut next = Vec::new();
        let can_wait = (0..ts.len()).all(|t| c[t] < 0 || lft[t].map_or(true, |l| c[t] < l));
        if can_wait {
            let c2: Vec<i64> = c
                .iter()
                .map(|&x| if x < 0 { x } else { (x + 1).min(ceiling) })
                .collect();
            next.push((m.clone(), c2));
        }
        for t in 0..ts.len() {
            if c[t] < 0 || c[t] < eft[t] {
                continue;
            }
            let mid: Vec<u32> = m.iter().zip(&ts[t].pre).map(|(a, b)| a - b).collect();
            let m2: Vec<u32> = mid.iter().zip(&ts[t].post).map(|(a, b)| a + b).collect();
            if m2.iter().any(|&x| x > cap) {
                continue;
            }
            out.markings.insert(m2.clone());
            out.edges.insert((m.clone(), t, m2.clone()));
            let c2: Vec<i64> = (0..ts.len())
                .map(|u| {
                    if !enabled(&m2, u) {
                        -1
                    } else if u == t || !enabled(&mid, u) {
                        0
                    } else {
                        c[u]
                    }
                })
                .collect();
            next.push((m2, c2));
        }
        for s in next {
            if seen.insert(s.clone()) {
                queue.push_back(s);
            }
        }
    }
    out
}
