//! Textual exports: UPPAAL `.xta`, KRONOS `.tg` and Graphviz.
//!
//! Constants are in the net's scaled time units. Vacuous guards are left out.

use std::fmt::Write;
use std::str::FromStr;

use super::{Atom, AutomatonError, TimedAutomaton};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    Xta,
    Kronos,
    Dot,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xta" => Ok(ExportFormat::Xta),
            "kronos" => Ok(ExportFormat::Kronos),
            "dot" => Ok(ExportFormat::Dot),
            _ => Err(format!("unknown export format `{s}`")),
        }
    }
}

pub fn export(ta: &TimedAutomaton, format: ExportFormat) -> Result<String, AutomatonError> {
    match format {
        ExportFormat::Xta => Ok(xta(ta)),
        ExportFormat::Kronos => kronos(ta),
        ExportFormat::Dot => Ok(dot(ta)),
    }
}

fn atoms(ta: &TimedAutomaton, atoms: &[Atom], sep: &str) -> String {
    let kept: Vec<Atom> = atoms.iter().filter(|a| !a.is_vacuous()).copied().collect();
    ta.atoms(&kept, sep)
}

fn xta(ta: &TimedAutomaton) -> String {
    let mut out = String::from("// generated by tpn-reach\n");
    if !ta.clocks.is_empty() {
        writeln!(out, "clock {};", ta.clocks.join(", ")).unwrap();
    }
    out.push_str("process P() {\n");
    let states: Vec<String> = ta
        .locations
        .iter()
        .map(|l| {
            let inv = atoms(ta, &l.invariant, " && ");
            if inv.is_empty() {
                l.name.clone()
            } else {
                format!("{} {{ {inv} }}", l.name)
            }
        })
        .collect();
    writeln!(out, "  state {};", states.join(", ")).unwrap();
    writeln!(out, "  init {};", ta.locations[ta.initial].name).unwrap();
    if !ta.edges.is_empty() {
        out.push_str("  trans\n");
        let trans: Vec<String> = ta
            .edges
            .iter()
            .map(|e| {
                let mut body = String::new();
                let guard = atoms(ta, &e.guard, " && ");
                if !guard.is_empty() {
                    write!(body, "guard {guard}; ").unwrap();
                }
                if !e.assignments.is_empty() {
                    write!(body, "assign {}; ", ta.assignments(&e.assignments, "=")).unwrap();
                }
                format!(
                    "    {} -> {} {{ {body}}}",
                    ta.locations[e.source].name, ta.locations[e.target].name
                )
            })
            .collect();
        writeln!(out, "{};", trans.join(",\n")).unwrap();
    }
    out.push_str("}\nsystem P;\n");
    out
}

fn kronos(ta: &TimedAutomaton) -> Result<String, AutomatonError> {
    if ta.has_copies() {
        return Err(AutomatonError::UnsupportedFeature(
            "KRONOS resets cannot copy one clock into another".into(),
        ));
    }
    let mut out = String::new();
    writeln!(out, "#states {}", ta.locations.len()).unwrap();
    writeln!(out, "#trans {}", ta.edges.len()).unwrap();
    writeln!(out, "#clocks {}", ta.clocks.len()).unwrap();
    writeln!(out, "{}", ta.clocks.join(" ")).unwrap();
    let or_true = |s: String| if s.is_empty() { "true".to_string() } else { s };
    for (i, l) in ta.locations.iter().enumerate() {
        writeln!(out, "\nstate: {i}").unwrap();
        writeln!(out, "prop: {}", l.name).unwrap();
        writeln!(out, "invar: {}", or_true(atoms(ta, &l.invariant, " and "))).unwrap();
        out.push_str("trans:\n");
        for e in ta.edges.iter().filter(|e| e.source == i) {
            let resets: Vec<&str> = e
                .assignments
                .iter()
                .map(|a| ta.clocks[a.dst()].as_str())
                .collect();
            writeln!(
                out,
                "{} => {}; reset{{{}}}; goto {}",
                or_true(atoms(ta, &e.guard, " and ")),
                ta.actions[e.label],
                resets.join(" "),
                e.target
            )
            .unwrap();
        }
    }
    Ok(out)
}

fn dot(ta: &TimedAutomaton) -> String {
    let mut out = String::from("digraph ta {\n  node [shape=box];\n  init [shape=point];\n");
    writeln!(out, "  init -> {};", ta.locations[ta.initial].name).unwrap();
    for l in &ta.locations {
        let mut label = format!("{} {}", l.name, l.marking);
        let inv = atoms(ta, &l.invariant, " & ");
        if !inv.is_empty() {
            write!(label, "\\n{inv}").unwrap();
        }
        writeln!(out, "  {} [label=\"{label}\"];", l.name).unwrap();
    }
    for e in &ta.edges {
        let mut label = ta.actions[e.label].clone();
        let guard = atoms(ta, &e.guard, " & ");
        if !guard.is_empty() {
            write!(label, "\\n{guard}").unwrap();
        }
        if !e.assignments.is_empty() {
            write!(label, "\\n{}", ta.assignments(&e.assignments, ":=")).unwrap();
        }
        writeln!(
            out,
            "  {} -> {} [label=\"{label}\"];",
            ta.locations[e.source].name, ta.locations[e.target].name
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
