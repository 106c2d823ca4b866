//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::panic;
use std::time::{Duration, Instant};

use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tpn_core::automaton::Rel;
use tpn_core::explorer::{initial_state, successor, time_closure};
use tpn_core::models::{producer_consumer, random_net, RandomNetParams};
use tpn_core::{
    build_marking_ta, build_scg, check_reachability, cross_simulate, explore, parse_net,
    reduce_clocks, Bound, ClockId, Constraint, ExploreOptions, Marking, MarkingPredicate,
    ScaledNet, Status, StopCriteria, TimedAutomaton, Verdict, Zone,
};

const SEED: u64 = 20_240_601;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn load(text: &str) -> ScaledNet {
    ScaledNet::new(parse_net(text).expect("bundled net parses")).expect("bundled net scales")
}

fn fig1() -> ScaledNet {
    load(include_str!("../examples/fig1.tpn"))
}

fn gate3() -> ScaledNet {
    load(include_str!("../examples/gate3.tpn"))
}

fn m(tokens: &[u32]) -> Marking {
    Marking(tokens.to_vec())
}

fn fig1_graph() -> Result<String, String> {
    let net = fig1();
    let start = Instant::now();
    let ex = explore(&net, &ExploreOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let edges: BTreeSet<(Vec<u32>, usize, Vec<u32>)> = ex
        .graph
        .marking_edges()
        .map(|(a, t, b)| (a.0.clone(), t, b.0.clone()))
        .collect();
    let expected: BTreeSet<(Vec<u32>, usize, Vec<u32>)> = [
        ([1, 1, 0], 0, [0, 1, 0]),
        ([1, 0, 1], 0, [0, 0, 1]),
        ([0, 1, 0], 1, [0, 0, 1]),
        ([0, 0, 1], 2, [0, 1, 0]),
        ([1, 1, 0], 1, [1, 0, 1]),
        ([1, 0, 1], 2, [1, 1, 0]),
    ]
    .into_iter()
    .map(|(a, t, b)| (a.to_vec(), t, b.to_vec()))
    .collect();
    ensure(ex.status == Status::Complete, || {
        format!("status {}", ex.status)
    })?;
    ensure(ex.graph.nodes().len() == 4, || {
        format!("{} markings", ex.graph.nodes().len())
    })?;
    ensure(edges == expected, || format!("edges {edges:?}"))?;
    ensure(elapsed < Duration::from_secs(1), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("4 markings, 6 edges, Complete in {elapsed:?}"))
}

fn worked_example_zones() -> Result<String, String> {
    let net = fig1();
    let s0 = initial_state(&net);
    let closed = time_closure(&net, &s0).map_err(|e| e.to_string())?;
    let z1 = successor(&net, &s0, 0).map_err(|e| e.to_string())?;
    let z3 = successor(&net, &s0, 1).map_err(|e| e.to_string())?;
    let z3_closed = time_closure(&net, &z3).map_err(|e| e.to_string())?;
    let got = [
        closed.to_string(),
        z1.zone.to_string(),
        z3.zone.to_string(),
        z3_closed.to_string(),
    ];
    let want = [
        "x1 - x2 = 0 & x1 <= 1 & x2 <= 1",
        "x2 <= 1",
        "x1 = 1 & x3 = 0",
        "x1 - x3 = 1 & 1 <= x1 <= 2 & x3 <= 1",
    ];
    ensure(got == want, || format!("rendered {got:?}"))?;
    Ok(got.join(" | "))
}

fn nontermination_witness() -> Result<String, String> {
    let net = fig1();
    let opts = ExploreOptions {
        extrapolate: false,
        criteria: StopCriteria {
            max_steps: Some(50),
            ..Default::default()
        },
        ..Default::default()
    };
    let ex = explore(&net, &opts).map_err(|e| e.to_string())?;
    ensure(ex.status == Status::StepCapHit, || {
        format!("status {}", ex.status)
    })?;
    let m0 = ex.graph.index_of(&m(&[1, 1, 0])).ok_or("M0 missing")?;
    let stored = ex.graph.zones(m0);
    let (x1, x2) = (ClockId(0), ClockId(1));
    let mut found = Vec::new();
    for j in 0..=10i64 {
        let shape = Zone::from_constraints(
            &[x1, x2],
            &[
                Constraint::ge(x1, 2 * j),
                Constraint::le(x1, 2 * j + 1),
                Constraint::diff(x1, x2, Bound::le(2 * j)),
                Constraint::diff(x2, x1, Bound::le(-2 * j)),
            ],
        )
        .map_err(|e| e.to_string())?;
        if stored.contains(&shape) {
            found.push(j);
        }
    }
    ensure(found.len() >= 10, || {
        format!("shapes found for j in {found:?}")
    })?;
    let bounded = explore(&net, &ExploreOptions::default()).map_err(|e| e.to_string())?;
    ensure(bounded.status == Status::Complete, || {
        "k-approx run did not finish".into()
    })?;
    Ok(format!(
        "{} zones at M0 without extrapolation, shapes for j = {:?}; Complete with it",
        stored.len(),
        found
    ))
}

fn exactness() -> Result<String, String> {
    const CAP: u32 = 3;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut opts = ExploreOptions::default();
    opts.criteria.max_tokens_per_place = CAP;
    let criteria = StopCriteria {
        max_tokens_per_place: CAP,
        ..Default::default()
    };
    let mut nets = 0;
    let mut markings = 0;
    for i in 0..30 {
        let net = ScaledNet::new(random_net(
            &mut rng,
            &RandomNetParams::default(),
            &format!("n{i}"),
        ))
        .map_err(|e| e.to_string())?;
        let ex = explore(&net, &opts).map_err(|e| e.to_string())?;
        let ours: BTreeSet<Vec<u32>> = ex.graph.nodes().iter().map(|m| m.0.clone()).collect();
        let scg: BTreeSet<Vec<u32>> = build_scg(&net, &criteria)
            .map_err(|e| e.to_string())?
            .markings()
            .into_iter()
            .map(|m| m.0)
            .collect();
        let brute = common::brute_force(&net, CAP).markings;
        ensure(ours == scg, || {
            format!("state classes differ on\n{}", net.net())
        })?;
        ensure(ours == brute, || {
            format!("concrete runs differ on\n{}", net.net())
        })?;
        nets += 1;
        markings += ours.len();
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{nets} nets, {markings} markings in total, {elapsed:?}"
    ))
}

fn marking_ta() -> Result<String, String> {
    let net = fig1();
    let ex = explore(&net, &ExploreOptions::default()).map_err(|e| e.to_string())?;
    let ta = build_marking_ta(&net, &ex).map_err(|e| e.to_string())?;
    ensure(ta.locations.len() == 4 && ta.edges.len() == 6, || {
        format!("{} locations, {} edges", ta.locations.len(), ta.edges.len())
    })?;
    // Names used by the expected automaton: M0 = (1,1,0), M1 = (0,1,0), M2 = (0,0,1), M3 = (1,0,1).
    let named = [
        ("M0", m(&[1, 1, 0])),
        ("M1", m(&[0, 1, 0])),
        ("M2", m(&[0, 0, 1])),
        ("M3", m(&[1, 0, 1])),
    ];
    let name_of = |l: usize| {
        named
            .iter()
            .find(|(_, mk)| *mk == ta.locations[l].marking)
            .map(|(n, _)| *n)
            .unwrap()
    };
    let clock = |c: usize| ta.clocks[c].clone();
    let mut invariants = BTreeSet::new();
    for (l, loc) in ta.locations.iter().enumerate() {
        let inv: Vec<String> = loc
            .invariant
            .iter()
            .map(|a| format!("{} <= {}", clock(a.clock), a.value))
            .collect();
        invariants.insert(format!("{}: {}", name_of(l), inv.join(" & ")));
    }
    let want_inv: BTreeSet<String> = ["M0: x2 <= 1", "M1: x2 <= 1", "M2: x3 <= 1", "M3: x3 <= 1"]
        .into_iter()
        .map(String::from)
        .collect();
    ensure(invariants == want_inv, || {
        format!("invariants {invariants:?}")
    })?;
    let edges: BTreeSet<String> = ta
        .edges
        .iter()
        .map(|e| {
            let g = &e.guard[0];
            assert_eq!(g.rel, Rel::Ge);
            let resets: Vec<String> = e
                .assignments
                .iter()
                .map(|a| format!("{} := 0", clock(a.dst())))
                .collect();
            format!(
                "{} -> {}: {}, {} >= {}{}",
                name_of(e.source),
                name_of(e.target),
                ta.actions[e.label],
                clock(g.clock),
                g.value,
                resets.iter().map(|r| format!(", {r}")).collect::<String>()
            )
        })
        .collect();
    let want_edges: BTreeSet<String> = [
        "M0 -> M1: T1, x1 >= 0",
        "M3 -> M2: T1, x1 >= 0",
        "M1 -> M2: T2, x2 >= 1, x3 := 0",
        "M2 -> M1: T3, x3 >= 1, x2 := 0",
        "M0 -> M3: T2, x2 >= 1, x3 := 0",
        "M3 -> M0: T3, x3 >= 1, x2 := 0",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    ensure(edges == want_edges, || format!("edges {edges:?}"))?;
    Ok("4 locations, 6 edges, invariants, guards and resets as drawn".into())
}

fn ta_of(net: &ScaledNet) -> Result<TimedAutomaton, String> {
    let ex = explore(net, &ExploreOptions::default()).map_err(|e| e.to_string())?;
    build_marking_ta(net, &ex).map_err(|e| e.to_string())
}

fn corpus() -> Vec<ScaledNet> {
    let mut nets: Vec<ScaledNet> = [(1, 1, 1), (2, 1, 2), (1, 2, 2), (2, 2, 3)]
        .into_iter()
        .map(|(p, c, k)| ScaledNet::new(producer_consumer(p, c, k)).unwrap())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let params = RandomNetParams {
        infinite_lft: 0.2,
        ..Default::default()
    };
    let mut i = 0;
    while nets.len() < 14 {
        let net = ScaledNet::new(random_net(&mut rng, &params, &format!("c{i}"))).unwrap();
        i += 1;
        if explore(&net, &ExploreOptions::default())
            .is_ok_and(|e| e.status.is_complete() && e.graph.nodes().len() > 2)
        {
            nets.push(net);
        }
    }
    nets
}

fn bisimulation() -> Result<String, String> {
    let mut nets = vec![fig1(), gate3()];
    nets.extend(corpus());
    let mut moves = 0;
    for net in &nets {
        let ta = ta_of(net)?;
        let report = cross_simulate(net, &ta, 1000, 20, SEED);
        ensure(report.passed(), || {
            format!("{}: {}", net.net().name, report.divergences[0])
        })?;
        moves += report.moves;
    }
    let mut mutant = ta_of(&fig1())?;
    let l = mutant
        .locations
        .iter()
        .position(|l| !l.invariant.is_empty())
        .ok_or("no invariant to tighten")?;
    mutant.locations[l].invariant[0].value -= 1;
    let report = cross_simulate(&fig1(), &mutant, 1000, 20, SEED);
    ensure(!report.passed(), || {
        "tightened invariant went unnoticed".into()
    })?;
    Ok(format!(
        "{} nets, {moves} moves, no divergence; mutant: {} divergences",
        nets.len(),
        report.divergences.len()
    ))
}

fn level_crossing() -> Result<String, String> {
    let net = gate3();
    let start = Instant::now();
    let ex = explore(&net, &ExploreOptions::default()).map_err(|e| e.to_string())?;
    let (n, t) = (ex.graph.nodes().len(), ex.graph.edges().len());
    ensure(ex.status == Status::Complete && (n, t) == (94, 271), || {
        format!("{n} markings, {t} edges, {}", ex.status)
    })?;
    let query = MarkingPredicate::parse("(On1>=1|On2>=1|On3>=1)&Closed=0", net.net())
        .map_err(|e| e.to_string())?;
    let verdict =
        check_reachability(&net, &query, &ExploreOptions::default()).map_err(|e| e.to_string())?;
    ensure(verdict == Verdict::Unreachable, || {
        format!("safety query gave {verdict:?}")
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{n} markings, {t} edges, safety query Unreachable, {elapsed:?}"
    ))
}

fn clock_reduction() -> Result<String, String> {
    let net = gate3();
    let ta = ta_of(&net)?;
    let (reduced, report) = reduce_clocks(&ta);
    ensure(report.original == 23 && report.reduced < 23, || {
        report.to_string()
    })?;
    let sim = cross_simulate(&net, &reduced, 1000, 20, SEED);
    ensure(sim.passed(), || sim.divergences[0].to_string())?;
    Ok(format!("{report}, reduced automaton passes 1000 runs"))
}

fn dbm_suite() -> Result<String, String> {
    let start = Instant::now();
    let config = Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner
        .run(&common::dbm_case(), |case| {
            common::check_dbm_case(&case).map_err(proptest::test_runner::TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!("10000 cases in {elapsed:?}"))
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("marking graph of the introductory net", fig1_graph),
        ("worked-example zones", worked_example_zones),
        (
            "unbounded zones without extrapolation",
            nontermination_witness,
        ),
        (
            "exactness against state classes and concrete runs",
            exactness,
        ),
        ("marking timed automaton", marking_ta),
        ("bisimulation sampling", bisimulation),
        ("level crossing", level_crossing),
        ("clock reduction", clock_reduction),
        ("zone property suite", dbm_suite),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(check).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
