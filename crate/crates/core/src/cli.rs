//! Command-line front end.

use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::cdx::{self, Item};
use crate::dialogue::{Scenario, Simulation, Trace, TraceError};
use crate::rules::{load_rulebase, StrategyRegistry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cdplus", version, about = "CD+ knowledge engine and Person/Robot dialogue simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its trace as JSON lines.
    Run {
        scenario: PathBuf,
        /// Where to write the trace; standard output if omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Compare the trace byte for byte with this file.
        #[arg(long)]
        golden: Option<PathBuf>,
    },
    /// Check a CDX file for syntax errors, ungrounded symbols and bad references.
    Validate { path: PathBuf },
    /// Print the provenance chain of a trace event back to a motivation.
    Explain { trace: PathBuf, event: u32 },
    /// Step through a scenario interactively. Commands: step, state <agent>, inject <cz>, trace, quit.
    Repl { scenario: PathBuf },
}

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Self {
        Style { color: std::env::var_os("CDPLUS_NO_COLOR").is_none() && io::stdout().is_terminal() }
    }

    fn dim(&self, s: &str) -> String {
        if self.color {
            format!("\x1b[2m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn bad(&self, s: &str) -> String {
        if self.color {
            format!("\x1b[31m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }
}

/// Runs one command, writing to `out` and `err`. Returns the exit code.
pub fn execute(cli: Cli, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let style = Style::detect();
    let result = match cli.command {
        Command::Run { scenario, trace, golden } => run(&scenario, trace.as_deref(), golden.as_deref(), out, err),
        Command::Validate { path } => validate(&path, out, err),
        Command::Explain { trace, event } => explain(&trace, event, &style, out, err),
        Command::Repl { scenario } => repl(&scenario, &style, input, out, err),
    };
    result.unwrap_or_else(|e| {
        let _ = writeln!(err, "cdplus: {e}");
        EXIT_FAILED
    })
}

fn run(path: &Path, trace_out: Option<&Path>, golden: Option<&Path>, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let scenario = match Scenario::load(path) {
        Ok(s) => s,
        Err(e) => {
            writeln!(err, "{}: {e}", path.display())?;
            return Ok(EXIT_INVALID);
        }
    };
    let outcome = match scenario.run() {
        Ok(o) => o,
        Err(e) => {
            writeln!(err, "{}: {e}", path.display())?;
            return Ok(EXIT_INVALID);
        }
    };
    let jsonl = outcome.trace.to_jsonl();
    match trace_out {
        Some(p) => std::fs::write(p, &jsonl)?,
        None if golden.is_none() => out.write_all(jsonl.as_bytes())?,
        None => {}
    }
    let Some(golden) = golden else { return Ok(EXIT_OK) };
    let expected = match std::fs::read_to_string(golden) {
        Ok(t) => t,
        Err(e) => {
            writeln!(err, "{}: {e}", golden.display())?;
            return Ok(EXIT_INVALID);
        }
    };
    if expected == jsonl {
        writeln!(out, "trace matches {}", golden.display())?;
        return Ok(EXIT_OK);
    }
    let line = expected.lines().zip(jsonl.lines()).position(|(a, b)| a != b).unwrap_or_else(|| {
        expected.lines().count().min(jsonl.lines().count())
    });
    writeln!(err, "trace differs from {} at line {}", golden.display(), line + 1)?;
    writeln!(err, "  expected: {}", expected.lines().nth(line).unwrap_or("<end of file>"))?;
    writeln!(err, "  actual:   {}", jsonl.lines().nth(line).unwrap_or("<end of file>"))?;
    Ok(EXIT_FAILED)
}

fn validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            writeln!(err, "{}: {e}", path.display())?;
            return Ok(EXIT_INVALID);
        }
    };
    let doc = match cdx::parse(&text) {
        Ok(d) => d,
        Err(e) => {
            writeln!(err, "{}:{e}", path.display())?;
            return Ok(EXIT_INVALID);
        }
    };
    let mut problems: Vec<String> = cdx::validate(&doc).iter().map(ToString::to_string).collect();
    if doc.items.iter().any(|i| matches!(i, Item::Rule(_))) {
        if let Err(e) = load_rulebase(&doc, &StrategyRegistry::builtin()) {
            problems.push(e.to_string());
        }
    }
    for p in &problems {
        writeln!(out, "{}: {p}", path.display())?;
    }
    if problems.is_empty() {
        writeln!(out, "{}: ok ({} items)", path.display(), doc.items.len())?;
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_FAILED)
    }
}

fn explain(path: &Path, event: u32, style: &Style, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let trace = match std::fs::read_to_string(path).map_err(|e| e.to_string()).and_then(|t| {
        Trace::from_jsonl(&t).map_err(|e| e.to_string())
    }) {
        Ok(t) => t,
        Err(e) => {
            writeln!(err, "{}: {e}", path.display())?;
            return Ok(EXIT_INVALID);
        }
    };
    match trace.why(event) {
        Ok(chain) => {
            for (hop, id) in chain.iter().enumerate() {
                let e = trace.get(*id).expect("chain ids exist");
                let arrow = if hop == 0 { "   " } else { "<- " };
                writeln!(out, "{}{e}", style.dim(arrow))?;
            }
            Ok(EXIT_OK)
        }
        Err(TraceError::UnknownEvent(id)) => {
            writeln!(err, "{}", style.bad(&format!("no event #{id} in {}", path.display())))?;
            Ok(EXIT_INVALID)
        }
        Err(e) => {
            writeln!(err, "{}", style.bad(&e.to_string()))?;
            Ok(EXIT_FAILED)
        }
    }
}

fn repl(path: &Path, style: &Style, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<i32> {
    let mut sim = match Scenario::load(path) {
        Ok(s) => Simulation::new(s),
        Err(e) => {
            writeln!(err, "{}: {e}", path.display())?;
            return Ok(EXIT_INVALID);
        }
    };
    let mut shown = 0;
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            break;
        }
        for command in line.split(';').map(str::trim).filter(|c| !c.is_empty()) {
            let (word, rest) = command.split_once(char::is_whitespace).unwrap_or((command, ""));
            match word {
                "step" => match sim.step() {
                    Ok(true) => {
                        for e in &sim.trace().events()[shown..] {
                            writeln!(out, "{e}")?;
                        }
                        shown = sim.trace().len();
                    }
                    Ok(false) => writeln!(out, "{}", style.dim(&format!("finished after tick {}", sim.tick())))?,
                    Err(e) => writeln!(out, "{}", style.bad(&e.to_string()))?,
                },
                "state" => match sim.agent(rest.trim()) {
                    Some(a) => write_state(a, sim.scenario(), out)?,
                    None => writeln!(out, "{}", style.bad(&format!("no agent {:?}", rest.trim())))?,
                },
                "inject" => {
                    let parsed = cdx::parse(rest).map_err(|e| e.to_string()).and_then(|d| match d.items.as_slice() {
                        [Item::Cz(t)] => Ok(t.clone()),
                        _ => Err("inject takes exactly one (cz ...) form".to_string()),
                    });
                    match parsed.and_then(|t| sim.inject(&t).map_err(|e| e.to_string())) {
                        Ok(id) => writeln!(out, "{}", sim.trace().get(id).expect("just emitted"))?,
                        Err(e) => writeln!(out, "{}", style.bad(&e))?,
                    }
                    shown = sim.trace().len();
                }
                "trace" => out.write_all(sim.trace().to_jsonl().as_bytes())?,
                "quit" | "exit" => return Ok(EXIT_OK),
                other => writeln!(out, "{}", style.bad(&format!("unknown command {other:?}")))?,
            }
        }
    }
    Ok(EXIT_OK)
}

fn write_state(a: &crate::agent::AgentState, s: &Scenario, out: &mut dyn Write) -> io::Result<()> {
    let tree = |id| crate::cdgraph::canonical_tree(&s.store, id).unwrap_or_default();
    writeln!(out, "{} (tick {})", a.id, a.last_tick)?;
    let affects: Vec<String> = a.affects.iter().map(|f| format!("{} since t{}", f.state, f.onset)).collect();
    writeln!(out, "  affects: {}", if affects.is_empty() { "none".to_string() } else { affects.join(", ") })?;
    for m in &a.motc {
        let origin = m.requester().map(|r| format!(" from {r}")).unwrap_or_default();
        writeln!(out, "  want{origin} [{:?}]: {}", m.status, tree(m.want))?;
    }
    for p in &a.expc.prosp {
        writeln!(out, "  expects [{:?}]: {}", p.status, tree(p.cz))?;
    }
    for (other, att) in &a.conc.attitudes {
        writeln!(out, "  toward {other}: {att}")?;
    }
    Ok(())
}
