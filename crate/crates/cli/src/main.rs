//! `tpn-reach`: explore bounded time Petri nets, answer reachability queries
//! and export the marking graph as a timed automaton.
//!
//! Exit codes: 0 success, 1 property does not hold, 2 usage or input error,
//! 3 inconclusive (a cap or the timeout stopped the search).

use std::collections::BTreeSet;
use std::fmt::{Display, Write as _};
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use tpn_core::explorer::SearchOrder;
use tpn_core::net::DEFAULT_TOKEN_CAP;
use tpn_core::{
    build_marking_ta, build_scg, check_reachability, cross_simulate, explore, export, parse_net,
    reduce_clocks, AutomatonError, ExploreError, ExploreOptions, ExportFormat, MarkingPredicate,
    NetError, ScaledNet, Status, StopCriteria, Verdict,
};

const OK: u8 = 0;
const NEGATIVE: u8 = 1;
const INPUT_ERROR: u8 = 2;
const INCONCLUSIVE: u8 = 3;

/// Moves per cross-simulation run.
const CHECK_DEPTH: usize = 40;

#[derive(Parser, Debug)]
#[command(
    name = "tpn-reach",
    version,
    about = "Time Petri net reachability and timed automaton export"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Stop after this many distinct markings.
    #[arg(long, global = true, value_name = "N")]
    max_markings: Option<usize>,
    /// Treat markings with more tokens in a place as unbounded.
    #[arg(long, global = true, value_name = "N", default_value_t = DEFAULT_TOKEN_CAP)]
    max_tokens: u32,
    #[arg(long, global = true, value_name = "SECS", value_parser = parse_secs)]
    timeout: Option<Duration>,
    #[arg(long, global = true, value_enum, default_value_t = Order::Bfs)]
    order: Order,
    /// Seed for randomized checks.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Print `key=value` lines instead of prose.
    #[arg(long, global = true)]
    porcelain: bool,
    /// Diagnostic: keep zones exact. May not terminate, hence --max-steps.
    #[arg(long, global = true, requires = "max_steps")]
    no_kapprox: bool,
    /// Cap on expanded symbolic states (only with --no-kapprox).
    #[arg(long, global = true, value_name = "N", requires = "no_kapprox")]
    max_steps: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Order {
    Bfs,
    Dfs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the reachable markings and the firing relation.
    Explore {
        net: PathBuf,
        /// Write the marking graph as DOT.
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
        /// List the stored zones of every marking.
        #[arg(long)]
        zones: bool,
    },
    /// Check whether a marking satisfying the query is reachable.
    Reach {
        net: PathBuf,
        /// Marking predicate, e.g. "P3>=1" or "(On1>=1|On2>=1)&Closed=0".
        #[arg(short, long)]
        query: String,
    },
    /// Export the marking graph as a timed automaton.
    Export {
        net: PathBuf,
        #[arg(long, value_parser = ExportFormat::from_str)]
        format: ExportFormat,
        /// Share clocks between transitions that are never active together.
        #[arg(long)]
        reduce_clocks: bool,
        #[arg(short, long, value_name = "PATH")]
        output: Option<PathBuf>,
        /// Cross-simulate the automaton against the net before writing it.
        #[arg(long, value_name = "RUNS", default_value_t = 0)]
        check: usize,
    },
    /// Build the state class graph.
    Scg {
        net: PathBuf,
        #[arg(long, value_name = "PATH")]
        dot: Option<PathBuf>,
    },
    /// Compare the zone explorer with the state class graph.
    Compare { net: PathBuf },
}

fn parse_secs(s: &str) -> Result<Duration, String> {
    let secs: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    Duration::try_from_secs_f64(secs).map_err(|_| format!("`{s}` is not a valid duration"))
}

#[derive(Debug, Error)]
enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Net { path: PathBuf, source: NetError },
    #[error("{0}")]
    Query(#[from] tpn_core::explorer::QueryError),
    #[error(transparent)]
    Explore(#[from] ExploreError),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// Collects either prose or `key=value` lines, depending on the mode.
struct Report {
    porcelain: bool,
    text: String,
}

impl Report {
    fn new(porcelain: bool) -> Self {
        Self {
            porcelain,
            text: String::new(),
        }
    }

    fn kv(&mut self, key: &str, value: impl Display) {
        if self.porcelain {
            writeln!(self.text, "{key}={value}").unwrap();
        }
    }

    fn line(&mut self, line: impl Display) {
        if !self.porcelain {
            writeln!(self.text, "{line}").unwrap();
        }
    }
}

impl Global {
    fn criteria(&self) -> StopCriteria {
        StopCriteria {
            max_markings: self.max_markings,
            max_tokens_per_place: self.max_tokens,
            timeout: self.timeout,
            max_steps: self.max_steps,
        }
    }

    fn options(&self) -> ExploreOptions {
        ExploreOptions {
            criteria: self.criteria(),
            order: match self.order {
                Order::Bfs => SearchOrder::Bfs,
                Order::Dfs => SearchOrder::Dfs,
            },
            extrapolate: !self.no_kapprox,
            ..Default::default()
        }
    }
}

fn load(path: &Path) -> Result<ScaledNet, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.into(),
        source,
    })?;
    let net_error = |source| CliError::Net {
        path: path.into(),
        source,
    };
    ScaledNet::new(parse_net(&text).map_err(net_error)?).map_err(net_error)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.into(),
        source,
    })
}

fn status_code(status: Status) -> u8 {
    if status.is_complete() {
        OK
    } else {
        INCONCLUSIVE
    }
}

fn cmd_explore(
    g: &Global,
    out: &mut Report,
    path: &Path,
    dot: Option<&Path>,
    zones: bool,
) -> Result<u8, CliError> {
    let net = load(path)?;
    let ex = explore(&net, &g.options())?;
    let graph = &ex.graph;
    out.line(format_args!(
        "markings: {}, edges: {}, status: {}",
        graph.nodes().len(),
        graph.edges().len(),
        ex.status
    ));
    out.line(format_args!(
        "stored zones: {}, expanded: {}",
        graph.zone_count(),
        ex.steps
    ));
    out.kv("markings", graph.nodes().len());
    out.kv("edges", graph.edges().len());
    out.kv("zones", graph.zone_count());
    out.kv("steps", ex.steps);
    out.kv("status", ex.status);
    if g.no_kapprox {
        if let Some((i, m)) = graph
            .nodes()
            .iter()
            .enumerate()
            .max_by_key(|(i, _)| (graph.zones(*i).len(), usize::MAX - i))
        {
            let n = graph.zones(i).len();
            out.line(format_args!(
                "note: without k-approximation {m} already holds {n} zones after {} steps; \
                 zone lists need not converge",
                ex.steps
            ));
            out.kv("max_zones_marking", m);
            out.kv("max_zones", n);
        }
    }
    if zones {
        for (i, m) in graph.nodes().iter().enumerate() {
            for z in graph.zones(i) {
                out.line(format_args!("{m}: {z}"));
                out.kv(&format!("zone.{i}"), z);
            }
        }
    }
    if let Some(p) = dot {
        write_file(p, &graph.to_dot(&net))?;
    }
    Ok(status_code(ex.status))
}

fn cmd_reach(g: &Global, out: &mut Report, path: &Path, query: &str) -> Result<u8, CliError> {
    let net = load(path)?;
    let pred = MarkingPredicate::parse(query, net.net())?;
    Ok(match check_reachability(&net, &pred, &g.options())? {
        Verdict::Reachable(trace) => {
            out.line("reachable");
            if trace.steps.is_empty() {
                out.line("  (initial marking)");
            }
            for s in &trace.steps {
                out.line(format_args!("  {s}"));
            }
            out.kv("verdict", "reachable");
            out.kv("trace_length", trace.steps.len());
            for (i, s) in trace.steps.iter().enumerate() {
                out.kv(&format!("step.{}", i + 1), s);
            }
            OK
        }
        Verdict::Unreachable => {
            out.line("unreachable");
            out.kv("verdict", "unreachable");
            NEGATIVE
        }
        Verdict::Unknown(status) => {
            out.line(format_args!("unknown: search stopped with {status}"));
            out.kv("verdict", "unknown");
            out.kv("status", status);
            INCONCLUSIVE
        }
    })
}

struct ExportArgs<'a> {
    format: ExportFormat,
    reduce: bool,
    output: Option<&'a Path>,
    check: usize,
}

fn cmd_export(g: &Global, out: &mut Report, path: &Path, args: ExportArgs) -> Result<u8, CliError> {
    let net = load(path)?;
    let ex = explore(&net, &g.options())?;
    if !ex.status.is_complete() {
        out.line(format_args!("exploration incomplete: {}", ex.status));
        out.kv("status", ex.status);
        return Ok(INCONCLUSIVE);
    }
    let mut ta = build_marking_ta(&net, &ex)?;
    out.kv("locations", ta.locations.len());
    out.kv("edges", ta.edges.len());
    if args.reduce {
        let (reduced, report) = reduce_clocks(&ta);
        out.line(report);
        out.kv("clocks_original", report.original);
        out.kv("clocks_reduced", report.reduced);
        ta = reduced;
    } else {
        out.kv("clocks", ta.clocks.len());
    }
    if args.check > 0 {
        let sim = cross_simulate(&net, &ta, args.check, CHECK_DEPTH, g.seed);
        out.line(format_args!(
            "cross-simulation: {} runs, {} moves, {} divergences",
            sim.runs,
            sim.moves,
            sim.divergences.len()
        ));
        out.kv("check_runs", sim.runs);
        out.kv("check_moves", sim.moves);
        out.kv("check_divergences", sim.divergences.len());
        if let Some(d) = sim.divergences.first() {
            out.line(d);
            return Ok(NEGATIVE);
        }
    }
    let text = export(&ta, args.format)?;
    match args.output {
        Some(p) => write_file(p, &text)?,
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: "<stdout>".into(),
                source,
            })?,
    }
    Ok(OK)
}

fn cmd_scg(g: &Global, out: &mut Report, path: &Path, dot: Option<&Path>) -> Result<u8, CliError> {
    let net = load(path)?;
    let scg = build_scg(&net, &g.criteria())?;
    let markings = scg.markings().len();
    out.line(format_args!(
        "classes: {}, edges: {}, markings: {markings}, status: {}",
        scg.classes.len(),
        scg.edges.len(),
        scg.status
    ));
    out.kv("classes", scg.classes.len());
    out.kv("edges", scg.edges.len());
    out.kv("markings", markings);
    out.kv("marking_edges", scg.marking_edges().len());
    out.kv("status", scg.status);
    if let Some(p) = dot {
        write_file(p, &scg.to_dot(&net))?;
    }
    Ok(status_code(scg.status))
}

type EdgeSet = BTreeSet<(Vec<u32>, String, Vec<u32>)>;

fn cmd_compare(g: &Global, out: &mut Report, path: &Path) -> Result<u8, CliError> {
    let net = load(path)?;
    let name = |t: usize| net.net().transition(t).name.clone();
    let ex = explore(&net, &g.options())?;
    let scg = build_scg(&net, &g.criteria())?;
    if !ex.status.is_complete() || !scg.status.is_complete() {
        out.line(format_args!(
            "inconclusive: explorer {}, state classes {}",
            ex.status, scg.status
        ));
        out.kv("explorer_status", ex.status);
        out.kv("scg_status", scg.status);
        return Ok(INCONCLUSIVE);
    }
    let ours: BTreeSet<Vec<u32>> = ex.graph.nodes().iter().map(|m| m.0.clone()).collect();
    let theirs: BTreeSet<Vec<u32>> = scg.markings().into_iter().map(|m| m.0).collect();
    let our_edges: EdgeSet = ex
        .graph
        .marking_edges()
        .map(|(a, t, b)| (a.0.clone(), name(t), b.0.clone()))
        .collect();
    let their_edges: EdgeSet = scg
        .marking_edges()
        .into_iter()
        .map(|(a, t, b)| (a.0, name(t), b.0))
        .collect();
    let same = ours == theirs && our_edges == their_edges;
    let rel = |a: usize, b: usize, eq: bool| format!("{a} {} {b}", if eq { "=" } else { "!=" });
    out.line(format_args!(
        "markings: {}, edges: {}",
        rel(ours.len(), theirs.len(), ours == theirs),
        rel(our_edges.len(), their_edges.len(), our_edges == their_edges)
    ));
    out.kv("explorer_markings", ours.len());
    out.kv("scg_markings", theirs.len());
    out.kv("explorer_edges", our_edges.len());
    out.kv("scg_edges", their_edges.len());
    out.kv("identical", same);
    let tuple = |v: &[u32]| tpn_core::Marking(v.to_vec()).to_string();
    for (side, markings, edges) in [
        ("explorer", &ours, &our_edges),
        ("scg", &theirs, &their_edges),
    ] {
        out.line(format_args!("{side} markings:"));
        for m in markings {
            out.line(format_args!("  {}", tuple(m)));
        }
        out.line(format_args!("{side} edges:"));
        for (a, t, b) in edges {
            out.line(format_args!("  {} -{t}-> {}", tuple(a), tuple(b)));
        }
    }
    Ok(if same { OK } else { NEGATIVE })
}

fn run(cli: &Cli, out: &mut Report) -> Result<u8, CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Explore { net, dot, zones } => cmd_explore(g, out, net, dot.as_deref(), *zones),
        Command::Reach { net, query } => cmd_reach(g, out, net, query),
        Command::Export {
            net,
            format,
            reduce_clocks,
            output,
            check,
        } => cmd_export(
            g,
            out,
            net,
            ExportArgs {
                format: *format,
                reduce: *reduce_clocks,
                output: output.as_deref(),
                check: *check,
            },
        ),
        Command::Scg { net, dot } => cmd_scg(g, out, net, dot.as_deref()),
        Command::Compare { net } => cmd_compare(g, out, net),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Report::new(cli.global.porcelain);
    let code = match run(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            INPUT_ERROR
        }
    };
    // The automaton owns stdout when exported without -o.
    let to_stderr = matches!(cli.command, Command::Export { output: None, .. });
    if to_stderr {
        eprint!("{}", out.text);
    } else {
        print!("{}", out.text);
    }
    ExitCode::from(code)
}
