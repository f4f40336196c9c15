//! Command-line front end: solve, verify, generate, export, bench, stats.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use evolomino::bench;
use evolomino::generator::{generate, GenParams};
use evolomino::grid::{parse_solution, serialize_solution, RegionRule};
use evolomino::model::{export_lp, stats, BuildOptions, Convention};
use evolomino::solver::{enumerate, solve, SolveLimits, SolveStatus};
use evolomino::{build_model_with, parse_puzzle, serialize_puzzle, verify, Puzzle, SolutionGrid};

/// Exit status for bad command lines (sysexits EX_USAGE).
const EXIT_USAGE: u8 = 64;
/// Exit status for unreadable or malformed inputs (sysexits EX_DATAERR).
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(
    name = "evolomino",
    version,
    about = "Solve, verify, generate and benchmark Evolomino puzzles"
)]
struct Cli {
    /// Print one JSON object on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a puzzle. Exit 0 feasible, 1 infeasible, 2 time limit.
    Solve {
        puzzle: PathBuf,
        /// Wall-clock limit in seconds.
        #[arg(long, value_name = "SECONDS", value_parser = parse_seconds)]
        time_limit: Option<Duration>,
        /// Collect up to CAP solutions and report whether the puzzle is unique.
        #[arg(long, value_name = "CAP", value_parser = clap::value_parser!(u64).range(1..))]
        enumerate: Option<u64>,
        /// Also write the model in LP format.
        #[arg(long, value_name = "PATH")]
        export_lp: Option<PathBuf>,
        /// Report model size and search counters.
        #[arg(long)]
        stats: bool,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Check a solution against the rules. Exit 0 valid, 1 invalid.
    Verify { puzzle: PathBuf, solution: PathBuf },
    /// Generate puzzles with a unique solution.
    Generate {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        /// RNG seed; drawn from entropy and printed when absent.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "F")]
        target_fill: Option<f64>,
        #[arg(long, value_name = "T")]
        tries: Option<u32>,
        /// Number of puzzles, using seeds S, S+1, ...
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        /// Directory for `<name>.puzzle`, `<name>.solution` and
        /// `metadata.jsonl`. Without it the puzzle and solution go to stdout.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Write the model of a puzzle in LP format.
    Export {
        puzzle: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Solve every `*.puzzle` file in a directory and summarize the times.
    Bench {
        dir: PathBuf,
        #[arg(long, value_name = "SECONDS", value_parser = parse_seconds)]
        time_limit: Option<Duration>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
        #[arg(long, value_name = "OUT.csv")]
        csv: PathBuf,
        #[arg(long, value_name = "OUT.md")]
        table: Option<PathBuf>,
    },
    /// Print per-family variable and constraint counts.
    Stats {
        puzzle: PathBuf,
        #[arg(long, value_enum, default_value_t = ConventionArg::Structural)]
        convention: ConventionArg,
        #[command(flatten)]
        model: ModelArgs,
    },
}

#[derive(Args, Clone, Copy)]
struct ModelArgs {
    /// Region rule used to restrict block cells.
    #[arg(long, value_enum, default_value_t = RegionArg::Refined)]
    region: RegionArg,
    /// Create flow variables between two cells of the same arrow path.
    #[arg(long)]
    in_path_flows: bool,
}

impl ModelArgs {
    fn options(self) -> BuildOptions {
        BuildOptions {
            region: match self.region {
                RegionArg::Refined => RegionRule::Refined,
                RegionArg::Literal => RegionRule::Literal,
            },
            in_path_flows: self.in_path_flows,
            ..Default::default()
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum RegionArg {
    Refined,
    Literal,
}

#[derive(ValueEnum, Clone, Copy)]
enum ConventionArg {
    /// Count variable bounds of flows and supplies as constraints.
    #[value(alias = "paper")]
    Bounds,
    /// Count only structural rows.
    Structural,
}

impl From<ConventionArg> for Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Bounds => Convention::Bounds,
            ConventionArg::Structural => Convention::Structural,
        }
    }
}

fn parse_seconds(s: &str) -> Result<Duration, String> {
    let secs: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    Duration::try_from_secs_f64(secs).map_err(|_| format!("`{s}` is not a valid duration"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_puzzle(path: &Path) -> Result<Puzzle> {
    parse_puzzle(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn print_json(v: &Value) {
    println!("{v}");
}

fn grid_rows(p: &Puzzle, s: &SolutionGrid) -> Vec<String> {
    serialize_solution(p, s)
        .lines()
        .skip(3)
        .map(str::to_string)
        .collect()
}

fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Solve {
            puzzle,
            time_limit,
            enumerate: cap,
            export_lp: lp,
            stats: want_stats,
            model,
        } => {
            let p = load_puzzle(puzzle)?;
            let m = build_model_with(&p, model.options());
            if let Some(path) = lp {
                write(path, &export_lp(&m))?;
            }
            let limits = SolveLimits {
                time: *time_limit,
                nodes: None,
            };
            let model_stats = want_stats.then(|| stats(&m, Convention::Structural));
            match cap {
                None => solve_once(cli.json, &p, &m, limits, model_stats),
                Some(cap) => solve_all(cli.json, &p, &m, *cap as usize, limits, model_stats),
            }
        }
        Command::Verify { puzzle, solution } => {
            let p = load_puzzle(puzzle)?;
            let s = parse_solution(&read(solution)?)
                .with_context(|| format!("{}", solution.display()))?;
            if (s.rows(), s.cols()) != (p.rows(), p.cols()) {
                bail!(
                    "solution is {}x{} but the puzzle is {}x{}",
                    s.rows(),
                    s.cols(),
                    p.rows(),
                    p.cols()
                );
            }
            let violations = verify(&p, &s).err().unwrap_or_default();
            if cli.json {
                let list: Vec<Value> = violations
                    .iter()
                    .map(|v| {
                        json!({
                            "rule": format!("{:?}", v.rule),
                            "detail": v.detail,
                            "cells": v.cells.iter().map(|c| [c.row, c.col]).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
                print_json(
                    &json!({"command": "verify", "ok": violations.is_empty(), "violations": list}),
                );
            } else if violations.is_empty() {
                println!("OK");
            } else {
                for v in &violations {
                    println!("{v}");
                }
            }
            Ok(if violations.is_empty() { 0 } else { 1 })
        }
        Command::Generate {
            rows,
            cols,
            seed,
            target_fill,
            tries,
            count,
            out,
        } => {
            let base = seed.unwrap_or_else(rand::random);
            if seed.is_none() {
                eprintln!("seed: {base}");
            }
            let mut params = GenParams::default();
            if let Some(f) = target_fill {
                params.target_fill = *f;
            }
            if let Some(t) = tries {
                params.max_tries = *t;
            }
            let mut records = Vec::new();
            for i in 0..*count {
                let params = GenParams {
                    seed: base.wrapping_add(i),
                    ..params.clone()
                };
                let g = generate(*rows, *cols, &params)?;
                let name = format!("evo-{rows}x{cols}-{}", params.seed);
                let puzzle_text = serialize_puzzle(&g.puzzle);
                let solution_text = serialize_solution(&g.puzzle, &g.solution);
                let meta = json!({"name": name, "meta": g.meta});
                if let Some(dir) = out {
                    fs::create_dir_all(dir)
                        .with_context(|| format!("cannot create {}", dir.display()))?;
                    write(&dir.join(format!("{name}.puzzle")), &puzzle_text)?;
                    write(&dir.join(format!("{name}.solution")), &solution_text)?;
                    let log = dir.join("metadata.jsonl");
                    let mut f = OpenOptions::new()
                        .create(true)
                        .append(true)
                        .open(&log)
                        .with_context(|| format!("cannot open {}", log.display()))?;
                    writeln!(f, "{meta}")?;
                    if !cli.json {
                        println!("{}", dir.join(&name).display());
                    }
                } else if !cli.json {
                    print!("{puzzle_text}\n{solution_text}");
                }
                records.push(json!({
                    "name": name,
                    "puzzle": puzzle_text,
                    "solution": solution_text,
                    "meta": g.meta,
                }));
            }
            if cli.json {
                print_json(&json!({"command": "generate", "puzzles": records}));
            }
            Ok(0)
        }
        Command::Export { puzzle, out, model } => {
            let p = load_puzzle(puzzle)?;
            let m = build_model_with(&p, model.options());
            let text = export_lp(&m);
            match out {
                Some(path) => write(path, &text)?,
                None if !cli.json => print!("{text}"),
                None => {}
            }
            if cli.json {
                print_json(&json!({
                    "command": "export",
                    "path": out.as_ref().map(|p| p.display().to_string()),
                    "vars": m.vars().len(),
                    "constraints": m.constraints().len(),
                    "lp": if out.is_none() { Value::from(text) } else { Value::Null },
                }));
            }
            Ok(0)
        }
        Command::Bench {
            dir,
            time_limit,
            jobs,
            csv,
            table,
        } => {
            let limits = SolveLimits {
                time: *time_limit,
                nodes: None,
            };
            let records = bench::run(dir, limits, *jobs as usize)
                .with_context(|| format!("cannot list {}", dir.display()))?;
            let file =
                fs::File::create(csv).with_context(|| format!("cannot write {}", csv.display()))?;
            bench::write_csv(&records, file)?;
            let summaries = bench::summarize(&records);
            let markdown = bench::markdown_table(&summaries);
            if let Some(path) = table {
                write(path, &markdown)?;
            }
            let errors: Vec<&str> = records
                .iter()
                .filter(|r| r.status == bench::BenchStatus::Error)
                .map(|r| r.id.as_str())
                .collect();
            if cli.json {
                print_json(&json!({
                    "command": "bench",
                    "records": records.len(),
                    "errors": errors,
                    "summaries": summaries,
                }));
            } else {
                print!("{markdown}");
                for id in errors {
                    eprintln!("error: {id} could not be read or parsed");
                }
            }
            Ok(0)
        }
        Command::Stats {
            puzzle,
            convention,
            model,
        } => {
            let p = load_puzzle(puzzle)?;
            let s = stats(&build_model_with(&p, model.options()), (*convention).into());
            if cli.json {
                print_json(&json!({"command": "stats", "stats": s}));
            } else {
                print!("{s}");
            }
            Ok(0)
        }
    }
}

fn exit_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Feasible => 0,
        SolveStatus::Infeasible => 1,
        SolveStatus::TimedOut => 2,
    }
}

fn solve_once(
    json_out: bool,
    p: &Puzzle,
    m: &evolomino::IlpModel,
    limits: SolveLimits,
    model_stats: Option<evolomino::model::ModelStats>,
) -> Result<u8> {
    let out = solve(m, limits);
    if json_out {
        print_json(&json!({
            "command": "solve",
            "status": out.status,
            "solution": out.solution.as_ref().map(|s| grid_rows(p, s)),
            "search": out.stats,
            "model": model_stats,
        }));
    } else {
        match (&out.solution, out.status) {
            (Some(s), _) => print!("{}", serialize_solution(p, s)),
            (None, SolveStatus::Infeasible) => println!("infeasible"),
            (None, _) => println!("time limit reached"),
        }
        if let Some(ms) = model_stats {
            eprint!("{ms}");
            eprintln!(
                "nodes {} propagations {} elapsed {:.3} ms",
                out.stats.nodes,
                out.stats.propagations,
                out.stats.elapsed.as_secs_f64() * 1000.0
            );
        }
    }
    Ok(exit_code(out.status))
}

fn solve_all(
    json_out: bool,
    p: &Puzzle,
    m: &evolomino::IlpModel,
    cap: usize,
    limits: SolveLimits,
    model_stats: Option<evolomino::model::ModelStats>,
) -> Result<u8> {
    let e = enumerate(m, cap, limits);
    let verdict = match (e.solutions.len(), e.exhausted) {
        (0, true) => "infeasible",
        (1, true) => "proved unique",
        (_, true) => "all solutions found",
        (0, false) => "time limit reached",
        (_, false) if e.truncated => "time limit reached, more solutions may exist",
        (_, false) => "cap reached, more solutions may exist",
    };
    let code = match (e.solutions.is_empty(), e.exhausted) {
        (false, _) => 0,
        (true, true) => 1,
        (true, false) => 2,
    };
    let status = ["Feasible", "Infeasible", "TimedOut"][code as usize];
    if json_out {
        let grids: Vec<Vec<String>> = e.solutions.iter().map(|s| grid_rows(p, s)).collect();
        print_json(&json!({
            "command": "solve",
            "status": status,
            "solutions": grids,
            "exhausted": e.exhausted,
            "truncated": e.truncated,
            "verdict": verdict,
            "search": e.stats,
            "model": model_stats,
        }));
    } else {
        for (i, s) in e.solutions.iter().enumerate() {
            if i > 0 {
                println!();
            }
            print!("{}", serialize_solution(p, s));
        }
        println!("{} solution(s): {verdict}", e.solutions.len());
        if let Some(ms) = model_stats {
            eprint!("{ms}");
            eprintln!(
                "nodes {} propagations {}",
                e.stats.nodes, e.stats.propagations
            );
        }
    }
    Ok(code)
}
