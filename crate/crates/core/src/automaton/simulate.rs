//! Randomized differential testing of an automaton against its net.
//!
//! Each run drives one side with random legal moves (plus the occasional
//! illegal probe) and replays every move on the other side. The two states
//! must stay related: same marking, and each observable transition clock equal
//! to the automaton clock that holds it.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ta_step, Move, Rel, Step, TaState, TimedAutomaton};
use crate::net::{Marking, Rational, ScaledNet};

/// Which side generated the moves of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    Net,
    Automaton,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub run: usize,
    pub driver: Driver,
    /// Index of the offending move within the run.
    pub step: usize,
    pub message: String,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "run {} ({:?}-driven), move {}: {}",
            self.run, self.driver, self.step, self.message
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimulationReport {
    pub runs: usize,
    pub moves: usize,
    pub divergences: Vec<Divergence>,
}

impl SimulationReport {
    pub fn passed(&self) -> bool {
        self.divergences.is_empty()
    }
}

/// Concrete net state; clocks are in scaled units and `None` when disabled.
#[derive(Clone, Debug)]
struct NetState {
    marking: Marking,
    clocks: Vec<Option<Rational>>,
}

fn zero() -> Rational {
    Rational::from_integer(0)
}

impl NetState {
    fn initial(net: &ScaledNet) -> Self {
        let marking = net.net().initial_marking();
        let clocks = (0..net.transition_count())
            .map(|t| net.net().is_enabled(&marking, t).then(zero))
            .collect();
        Self { marking, clocks }
    }

    /// Longest legal delay, `None` when unbounded.
    fn max_delay(&self, net: &ScaledNet) -> Option<Rational> {
        self.clocks
            .iter()
            .enumerate()
            .filter_map(|(t, c)| Some(Rational::from_integer(net.lft(t)?) - (*c)?))
            .min()
    }

    fn firable(&self, net: &ScaledNet) -> Vec<usize> {
        (0..self.clocks.len())
            .filter(|&t| self.clocks[t].is_some_and(|c| c >= Rational::from_integer(net.eft(t))))
            .collect()
    }

    fn step(&self, net: &ScaledNet, mv: Move) -> Option<NetState> {
        match mv {
            Move::Delay(d) => {
                if d < zero() || self.max_delay(net).is_some_and(|m| d > m) {
                    return None;
                }
                Some(NetState {
                    marking: self.marking.clone(),
                    clocks: self.clocks.iter().map(|c| c.map(|c| c + d)).collect(),
                })
            }
            Move::Action(t) => {
                if !self.firable(net).contains(&t) {
                    return None;
                }
                let base = net.net();
                let marking = base.fire(&self.marking, t).ok()?;
                let newly = base.newly_enabled(&self.marking, t).ok()?;
                let clocks = (0..self.clocks.len())
                    .map(|u| {
                        if newly.contains(&u) {
                            Some(zero())
                        } else if base.is_enabled(&marking, u) {
                            self.clocks[u]
                        } else {
                            None
                        }
                    })
                    .collect();
                Some(NetState { marking, clocks })
            }
        }
    }
}

fn related(ta: &TimedAutomaton, n: &NetState, s: &TaState) -> Result<(), String> {
    let loc = &ta.locations[s.location];
    if loc.marking != n.marking {
        return Err(format!(
            "net marking {} but location {} has {}",
            n.marking, loc.name, loc.marking
        ));
    }
    for (t, c) in n.clocks.iter().enumerate() {
        if let (Some(c), Some(x)) = (c, loc.clock_map[t]) {
            if s.valuation[x] != *c {
                return Err(format!(
                    "clock of {} is {} on the net but {} = {} at {}",
                    ta.actions[t], c, ta.clocks[x], s.valuation[x], loc.name
                ));
            }
        }
    }
    Ok(())
}

fn ta_max_delay(ta: &TimedAutomaton, s: &TaState) -> Option<Rational> {
    ta.locations[s.location]
        .invariant
        .iter()
        .filter(|a| a.rel == Rel::Le)
        .map(|a| Rational::from_integer(a.value) - s.valuation[a.clock])
        .min()
}

fn ta_firable(ta: &TimedAutomaton, s: &TaState) -> Vec<usize> {
    let mut labels: Vec<usize> = ta
        .edges
        .iter()
        .filter(|e| e.source == s.location && e.guard.iter().all(|g| g.holds(&s.valuation)))
        .map(|e| e.label)
        .collect();
    labels.sort_unstable();
    labels.dedup();
    labels
}

/// Delays worth trying: zero, the maximum, distances to each lower bound, and
/// a few random quarter-unit points in between.
fn pick_delay(
    rng: &mut ChaCha8Rng,
    max: Option<Rational>,
    thresholds: impl Iterator<Item = Rational>,
) -> Rational {
    let cap = max.unwrap_or(Rational::from_integer(4));
    let mut cands = vec![zero()];
    if max.is_some() {
        cands.push(cap);
    }
    cands.extend(thresholds.filter(|d| *d >= zero() && *d <= cap));
    let quarters = (cap * 4).floor().to_integer();
    for _ in 0..2 {
        cands.push(Rational::new(rng.gen_range(0..=quarters), 4));
    }
    *cands.choose(rng).expect("nonempty")
}

struct Sides<'a> {
    net: &'a ScaledNet,
    ta: &'a TimedAutomaton,
}

impl Sides<'_> {
    fn choose(
        &self,
        rng: &mut ChaCha8Rng,
        driver: Driver,
        n: &NetState,
        s: &TaState,
    ) -> Option<Move> {
        let (max, firable, thresholds): (Option<Rational>, Vec<usize>, Vec<Rational>) = match driver
        {
            Driver::Net => (
                n.max_delay(self.net),
                n.firable(self.net),
                n.clocks
                    .iter()
                    .enumerate()
                    .filter_map(|(t, c)| Some(Rational::from_integer(self.net.eft(t)) - (*c)?))
                    .collect(),
            ),
            Driver::Automaton => (
                ta_max_delay(self.ta, s),
                ta_firable(self.ta, s),
                self.ta
                    .edges
                    .iter()
                    .filter(|e| e.source == s.location)
                    .flat_map(|e| e.guard.iter())
                    .map(|g| Rational::from_integer(g.value) - s.valuation[g.clock])
                    .collect(),
            ),
        };
        if rng.gen_bool(0.1) {
            // Probe a move chosen without regard to legality.
            return Some(match max {
                Some(m) if rng.gen_bool(0.5) => Move::Delay(m + Rational::new(1, 4)),
                _ => Move::Action(rng.gen_range(0..self.ta.actions.len().max(1))),
            });
        }
        let can_wait = max.map_or(true, |m| m > zero());
        if !firable.is_empty() && (!can_wait || rng.gen_bool(0.5)) {
            return Some(Move::Action(*firable.choose(rng).expect("nonempty")));
        }
        if can_wait {
            return Some(Move::Delay(pick_delay(rng, max, thresholds.into_iter())));
        }
        None
    }

    fn run(&self, seed: u64, depth: usize, driver: Driver) -> (usize, Result<(), (usize, String)>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut n = NetState::initial(self.net);
        let mut s = TaState::initial(self.ta);
        if let Err(e) = related(self.ta, &n, &s) {
            return (0, Err((0, e)));
        }
        for step in 0..depth {
            let Some(mv) = self.choose(&mut rng, driver, &n, &s) else {
                return (step, Ok(()));
            };
            let on_net = n.step(self.net, mv);
            let on_ta = match ta_step(self.ta, &s, mv) {
                Ok(Step::Moved(v)) => v,
                Ok(Step::Blocked) => Vec::new(),
                Err(e) => return (step, Err((step, e.to_string()))),
            };
            let describe = |mv: Move| match mv {
                Move::Delay(d) => format!("delay {d}"),
                Move::Action(a) => format!("fire {}", self.ta.actions[a]),
            };
            match (on_net, on_ta.is_empty()) {
                (None, true) => {}
                (Some(_), true) => {
                    return (
                        step,
                        Err((
                            step,
                            format!(
                                "{} legal on the net, blocked on the automaton",
                                describe(mv)
                            ),
                        )),
                    );
                }
                (None, false) => {
                    return (
                        step,
                        Err((
                            step,
                            format!(
                                "{} legal on the automaton, blocked on the net",
                                describe(mv)
                            ),
                        )),
                    );
                }
                (Some(next), false) => {
                    let mut last_err = String::new();
                    let matched = on_ta
                        .into_iter()
                        .find(|t| match related(self.ta, &next, t) {
                            Ok(()) => true,
                            Err(e) => {
                                last_err = e;
                                false
                            }
                        });
                    match matched {
                        Some(t) => {
                            n = next;
                            s = t;
                        }
                        None => {
                            return (
                                step,
                                Err((step, format!("after {}: {last_err}", describe(mv)))),
                            )
                        }
                    }
                }
            }
        }
        (depth, Ok(()))
    }
}

/// Runs `runs` net-driven and `runs` automaton-driven random walks of `depth`
/// moves. Every run gets its own generator seeded from `seed`.
pub fn cross_simulate(
    net: &ScaledNet,
    ta: &TimedAutomaton,
    runs: usize,
    depth: usize,
    seed: u64,
) -> SimulationReport {
    let sides = Sides { net, ta };
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SimulationReport {
        runs,
        ..Default::default()
    };
    for run in 0..runs {
        for driver in [Driver::Net, Driver::Automaton] {
            let (moves, outcome) = sides.run(master.gen(), depth, driver);
            report.moves += moves;
            if let Err((step, message)) = outcome {
                report.divergences.push(Divergence {
                    run,
                    driver,
                    step,
                    message,
                });
            }
        }
    }
    report
}
