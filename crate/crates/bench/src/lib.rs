//! Fixtures shared by the benchmarks.

use tpn_core::{parse_net, Bound, ClockId, Constraint, ScaledNet, Zone};

pub const FIG1: &str = include_str!("../../core/examples/fig1.tpn");
pub const GATE3: &str = include_str!("../../core/examples/gate3.tpn");
pub const GATE4: &str = include_str!("../../core/examples/gate4.tpn");

pub fn load(text: &str) -> ScaledNet {
    ScaledNet::new(parse_net(text).expect("bundled net parses")).expect("bundled net scales")
}

/// A zone over `n` clocks with a chain of difference constraints, so that
/// canonicalization has real work to do.
pub fn chain_zone(n: usize) -> Zone {
    let clocks: Vec<ClockId> = (0..n).map(ClockId).collect();
    let mut cs = Vec::new();
    for (i, w) in clocks.windows(2).enumerate() {
        cs.push(Constraint::diff(w[0], w[1], Bound::le(1 + i as i64 % 3)));
    }
    cs.push(Constraint::le(clocks[n - 1], 10));
    Zone::from_constraints(&clocks, &cs).expect("chain zone is nonempty")
}
