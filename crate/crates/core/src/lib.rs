//! Forward zone-based state-space exploration for bounded time Petri nets,
//! with translation of the marking graph into a bisimilar timed automaton.

pub mod automaton;
pub mod dbm;
pub mod explorer;
pub mod models;
pub mod net;
pub mod scg;

pub use automaton::{
    build_marking_ta, cross_simulate, export, reduce_clocks, AutomatonError, ExportFormat,
    ReductionReport, SimulationReport, TimedAutomaton,
};
pub use dbm::{Bound, ClockId, Constraint, DbmError, Zone};
pub use explorer::{
    check_reachability, explore, ExploreError, ExploreOptions, MarkingGraph, MarkingPredicate,
    Status, StopCriteria, TimedTrace, Verdict,
};
pub use net::{parse_net, Latest, Marking, NetError, Rational, ScaledNet, TimePetriNet};
pub use scg::{build_scg, StateClassGraph};
