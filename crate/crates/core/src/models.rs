//! Parametric nets: the level-crossing controller, a producer/consumer
//! pipeline, and seeded random nets for differential testing.

use rand::Rng;

use crate::net::{Latest, Place, Rational, TimePetriNet, Transition};

struct Builder {
    places: Vec<Place>,
    transitions: Vec<Transition>,
}

type Arcs<'a> = &'a [(&'a str, u32)];

impl Builder {
    fn new() -> Self {
        Self {
            places: Vec::new(),
            transitions: Vec::new(),
        }
    }

    fn place(&mut self, name: &str, initial: u32) {
        self.places.push(Place {
            name: name.to_string(),
            initial,
        });
    }

    fn weights(&self, arcs: Arcs<'_>) -> Vec<u32> {
        let mut w = vec![0; self.places.len()];
        for (p, n) in arcs {
            let i = self
                .places
                .iter()
                .position(|pl| pl.name == *p)
                .unwrap_or_else(|| panic!("unknown place {p}"));
            w[i] += n;
        }
        w
    }

    fn transition(
        &mut self,
        name: &str,
        eft: i64,
        lft: Option<i64>,
        pre: Arcs<'_>,
        post: Arcs<'_>,
    ) {
        let t = Transition {
            name: name.to_string(),
            pre: self.weights(pre),
            post: self.weights(post),
            eft: Rational::from_integer(eft),
            lft: lft.map_or(Latest::Infinite, |v| {
                Latest::Finite(Rational::from_integer(v))
            }),
        };
        self.transitions.push(t);
    }

    fn build(self, name: &str) -> TimePetriNet {
        TimePetriNet::new(name, self.places, self.transitions).expect("well-formed model")
    }
}

/// Level crossing with `n >= 2` trains: a controller, a barrier and `n` trains,
/// composed by fusing the shared `App`, `Exit`, `Down` and `Up` actions.
///
/// The controller counts trains in `far` (initially `n`) and `in`. Its first
/// `App` (all trains far) takes `n` from `far`, returns `n-1` and requests the
/// barrier down through `Coming`; later `App`s move a token from `far` to `in`.
/// Symmetrically, `Exit` with at least two trains in moves one back, and the
/// last `Exit` restores `far` to `n` and raises the barrier through `Leaving`.
/// Each controller action fuses with the matching action of every train, and
/// `Down` fuses with both barrier `Down` arcs (from `Open` and from `Raising`).
/// Unlabelled intervals are `[0, inf)`.
pub fn level_crossing(n: u32) -> TimePetriNet {
    assert!(n >= 2, "level crossing needs at least two trains");
    let mut b = Builder::new();
    b.place("far", n);
    b.place("in", 0);
    b.place("Coming", 0);
    b.place("Leaving", 0);
    b.place("Open", 1);
    b.place("Lowering", 0);
    b.place("Closed", 0);
    b.place("Raising", 0);
    for i in 1..=n {
        b.place(&format!("Far{i}"), 1);
        b.place(&format!("Close{i}"), 0);
        b.place(&format!("On{i}"), 0);
        b.place(&format!("Left{i}"), 0);
    }
    for i in 1..=n {
        let (far_i, close_i, on_i, left_i) = (
            format!("Far{i}"),
            format!("Close{i}"),
            format!("On{i}"),
            format!("Left{i}"),
        );
        b.transition(
            &format!("AppFirst{i}"),
            0,
            None,
            &[("far", n), (&far_i, 1)],
            &[("far", n - 1), ("Coming", 1), ("in", 1), (&close_i, 1)],
        );
        b.transition(
            &format!("AppNext{i}"),
            0,
            None,
            &[("far", 1), ("in", 1), (&far_i, 1)],
            &[("in", 2), (&close_i, 1)],
        );
        b.transition(
            &format!("In{i}"),
            3,
            Some(5),
            &[(&close_i, 1)],
            &[(&on_i, 1)],
        );
        b.transition(
            &format!("Ex{i}"),
            2,
            Some(4),
            &[(&on_i, 1)],
            &[(&left_i, 1)],
        );
        b.transition(
            &format!("ExitOther{i}"),
            0,
            Some(0),
            &[("in", 2), (&left_i, 1)],
            &[("in", 1), ("far", 1), (&far_i, 1)],
        );
        b.transition(
            &format!("ExitLast{i}"),
            0,
            Some(0),
            &[("in", 1), ("far", n - 1), (&left_i, 1)],
            &[("far", n), ("Leaving", 1), (&far_i, 1)],
        );
    }
    b.transition(
        "DownOpen",
        0,
        Some(0),
        &[("Coming", 1), ("Open", 1)],
        &[("Lowering", 1)],
    );
    b.transition(
        "DownRaising",
        0,
        Some(0),
        &[("Coming", 1), ("Raising", 1)],
        &[("Lowering", 1)],
    );
    b.transition("L", 1, Some(2), &[("Lowering", 1)], &[("Closed", 1)]);
    b.transition(
        "Up",
        0,
        Some(0),
        &[("Leaving", 1), ("Closed", 1)],
        &[("Raising", 1)],
    );
    b.transition("R", 1, Some(2), &[("Raising", 1)], &[("Open", 1)]);
    b.build(&format!("gate{n}"))
}

/// `producers` producers and `consumers` consumers around a buffer of capacity
/// `capacity`. Producer `i` works for `[2, 3+i]` before delivering; consumer `j`
/// takes an item after `[1, 2+j]` and rests for `[1, 4]`.
pub fn producer_consumer(producers: u32, consumers: u32, capacity: u32) -> TimePetriNet {
    let mut b = Builder::new();
    b.place("Slots", capacity);
    b.place("Items", 0);
    for i in 1..=producers {
        b.place(&format!("Work{i}"), 1);
        b.place(&format!("Ready{i}"), 0);
    }
    for j in 1..=consumers {
        b.place(&format!("Idle{j}"), 1);
        b.place(&format!("Busy{j}"), 0);
    }
    for i in 1..=producers {
        let (work, ready) = (format!("Work{i}"), format!("Ready{i}"));
        b.transition(
            &format!("Produce{i}"),
            2,
            Some(3 + i as i64),
            &[(&work, 1)],
            &[(&ready, 1)],
        );
        b.transition(
            &format!("Put{i}"),
            0,
            None,
            &[(&ready, 1), ("Slots", 1)],
            &[(&work, 1), ("Items", 1)],
        );
    }
    for j in 1..=consumers {
        let (idle, busy) = (format!("Idle{j}"), format!("Busy{j}"));
        b.transition(
            &format!("Take{j}"),
            1,
            Some(2 + j as i64),
            &[(&idle, 1), ("Items", 1)],
            &[(&busy, 1), ("Slots", 1)],
        );
        b.transition(
            &format!("Rest{j}"),
            1,
            Some(4),
            &[(&busy, 1)],
            &[(&idle, 1)],
        );
    }
    b.build(&format!("pc_{producers}_{consumers}_{capacity}"))
}

/// Shape parameters for [`random_net`].
#[derive(Clone, Debug)]
pub struct RandomNetParams {
    pub max_places: usize,
    pub max_transitions: usize,
    /// Largest integer firing bound.
    pub max_bound: i64,
    /// Probability that a latest firing time is unbounded.
    pub infinite_lft: f64,
    pub max_weight: u32,
    pub max_initial: u32,
}

impl Default for RandomNetParams {
    fn default() -> Self {
        Self {
            max_places: 5,
            max_transitions: 5,
            max_bound: 3,
            infinite_lft: 0.0,
            max_weight: 2,
            max_initial: 2,
        }
    }
}

/// A random net. Most transitions move as many tokens as they consume, which
/// keeps the majority of samples bounded.
pub fn random_net<R: Rng>(rng: &mut R, params: &RandomNetParams, name: &str) -> TimePetriNet {
    let np = rng.gen_range(params.max_places.div_ceil(2)..=params.max_places);
    let nt = rng.gen_range(params.max_transitions.div_ceil(2)..=params.max_transitions);
    let mut b = Builder::new();
    for p in 0..np {
        let init = if rng.gen_bool(0.7) {
            rng.gen_range(1..=params.max_initial.max(1))
        } else {
            0
        };
        b.place(&format!("P{p}"), init.min(params.max_initial));
    }
    let weight = |rng: &mut R| {
        if rng.gen_bool(0.75) {
            1
        } else {
            rng.gen_range(1..=params.max_weight)
        }
    };
    let pname = |p: usize| format!("P{p}");
    for t in 0..nt {
        let n_in = rng.gen_range(1..=np.min(2));
        let mut pre: Vec<(String, u32)> = Vec::new();
        for _ in 0..n_in {
            let w = weight(rng);
            pre.push((pname(rng.gen_range(0..np)), w));
        }
        let consumed: u32 = pre.iter().map(|(_, w)| w).sum();
        let produced = if rng.gen_bool(0.8) {
            consumed
        } else {
            rng.gen_range(0..=consumed + 1)
        };
        let mut post: Vec<(String, u32)> = Vec::new();
        let mut left = produced;
        while left > 0 {
            let w = rng.gen_range(1..=left);
            post.push((pname(rng.gen_range(0..np)), w));
            left -= w;
        }
        let eft = rng.gen_range(0..=params.max_bound);
        let lft = if rng.gen_bool(params.infinite_lft) {
            None
        } else {
            Some(rng.gen_range(eft..=params.max_bound))
        };
        let pre: Vec<(&str, u32)> = pre.iter().map(|(p, w)| (p.as_str(), *w)).collect();
        let post: Vec<(&str, u32)> = post.iter().map(|(p, w)| (p.as_str(), *w)).collect();
        b.transition(&format!("T{t}"), eft, lft, &pre, &post);
    }
    b.build(name)
}
