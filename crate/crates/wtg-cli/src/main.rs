use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use wtg::game::Payoff;
use wtg::oracle::{grid_value, simulate, GridSpec, RandomController};
use wtg::path::{cycle_value, path_value_fn, FinitePath};
use wtg::solver::{
    attractor, certify, default_budget, initial_map, solve, KappaMode, SolveOptions, SolveResult,
};
use wtg::strategy::Controller;
use wtg::unfold::{build_unfolding, CycleCache};
use wtg::{build_closure, compute_regions, ClosedGame, Configuration, Pwa, Rational, Region, Wtg};

#[derive(Parser)]
#[command(name = "wtg", version, about = "Exact solver for one-clock weighted timed games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a game file.
    Validate { file: PathBuf },
    /// List the regions of the clock.
    Regions { file: PathBuf },
    /// Dump the closure game.
    Closure {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        emit: GraphFormat,
    },
    /// Value of a finite path as a function of the initial valuation.
    PathValue {
        file: PathBuf,
        #[command(flatten)]
        path: PathArgs,
        /// Also evaluate at this valuation.
        #[arg(long)]
        valuation: Option<Rational>,
    },
    /// Value of a cyclic path started and ended at valuation 0.
    CycleValue {
        file: PathBuf,
        #[command(flatten)]
        path: PathArgs,
    },
    /// Build the acyclic unfolding from one closure location.
    Unfold {
        file: PathBuf,
        #[command(flatten)]
        root: RootArgs,
        #[arg(long, default_value_t = 2)]
        kappa: usize,
        #[arg(long)]
        budget_nodes: Option<usize>,
        /// Print only the statistics.
        #[arg(long)]
        stats: bool,
        #[arg(long, value_enum, default_value = "json")]
        emit: GraphFormat,
    },
    /// Compute and certify the value from one region.
    Solve(SolveArgs),
    /// Check a candidate value map against the fixpoint conditions.
    Certify {
        file: PathBuf,
        /// JSON object mapping closure location ids to PWA functions.
        #[arg(long)]
        values: PathBuf,
        #[command(flatten)]
        root: RootArgs,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        #[arg(long, default_value = "1/100")]
        epsilon: Rational,
    },
    /// Brute-force value on a grid of valuations, bounded horizon.
    Oracle {
        file: PathBuf,
        #[arg(long)]
        location: String,
        #[arg(long, default_value = "0")]
        valuation: Rational,
        #[arg(long, default_value_t = 8)]
        d: u64,
        #[arg(long, default_value_t = 8)]
        h: usize,
    },
    /// Play one game between two controllers on the closure.
    Simulate {
        file: PathBuf,
        #[arg(long)]
        location: String,
        #[arg(long, default_value = "0")]
        valuation: Rational,
        #[arg(long, value_enum, default_value = "random")]
        min: PlayerKind,
        #[arg(long, value_enum, default_value = "strategy")]
        max: PlayerKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Random landing dates are drawn on a grid of this resolution.
        #[arg(long, default_value_t = 8)]
        den: i64,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Re-emit the game in normal form or as a graph.
    Export {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "json")]
        emit: GraphFormat,
    },
}

#[derive(Args)]
struct PathArgs {
    /// Comma-separated transition ids; commas inside brackets belong to the id.
    #[arg(long)]
    path: String,
    /// Read ids as closure transitions instead of base transitions.
    #[arg(long)]
    closure: bool,
}

#[derive(Args)]
struct RootArgs {
    #[arg(long)]
    location: String,
    /// `point:a`, `open:a,b`, `{a}` or `(a,b)`.
    #[arg(long, default_value = "point:0")]
    region: String,
}

#[derive(Args)]
struct SolveArgs {
    file: PathBuf,
    #[command(flatten)]
    root: RootArgs,
    /// `bound` for the worst-case bound, a fixed `N`, or `deepen[:start-max]`.
    #[arg(long, default_value = "deepen")]
    kappa: String,
    #[arg(long, default_value_t = 200)]
    horizon: usize,
    #[arg(long, default_value = "1/100")]
    epsilon: Rational,
    #[arg(long)]
    budget_nodes: Option<usize>,
    /// Skip reconstruction from the iterates when no unfolding round certifies.
    #[arg(long)]
    no_reconstruct: bool,
    #[arg(long, value_enum, default_value = "json")]
    emit: ValueFormat,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Json,
    Dot,
}

#[derive(Clone, Copy, ValueEnum)]
enum ValueFormat {
    Json,
    Csv,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlayerKind {
    Random,
    Strategy,
}

enum Failure {
    Usage(String),
    Internal(String),
}

impl Failure {
    fn usage(e: impl ToString) -> Failure {
        Failure::Usage(e.to_string())
    }

    fn internal(e: impl ToString) -> Failure {
        Failure::Internal(e.to_string())
    }
}

/// What a command prints on stdout, plus the exit code it ends with.
struct Output {
    body: String,
    code: u8,
}

impl Output {
    fn json(v: Value) -> Output {
        Output { body: serde_json::to_string_pretty(&v).expect("serializable"), code: 0 }
    }

    fn text(s: String) -> Output {
        Output { body: s, code: 0 }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            // A closed pipe downstream is not an error of ours.
            let _ = writeln!(std::io::stdout().lock(), "{}", out.body.trim_end());
            ExitCode::from(out.code)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn load(file: &PathBuf) -> Result<Wtg, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
    Wtg::parse(&text).map_err(|e| {
        let lines: Vec<String> = e.0.iter().map(|d| format!("{}: {d}", file.display())).collect();
        Failure::Usage(lines.join("\n"))
    })
}

fn parse_region(s: &str) -> Result<Region, Failure> {
    Region::parse(s).ok_or_else(|| Failure::usage(format!("cannot parse region `{s}`")))
}

fn parse_kappa(s: &str) -> Result<KappaMode, Failure> {
    let bad = || Failure::usage(format!("--kappa expects bound, N or deepen[:start-max], got `{s}`"));
    match s {
        "bound" => Ok(KappaMode::Bound),
        "deepen" => Ok(KappaMode::Deepen { start: 2, max: 8 }),
        _ => {
            if let Some(range) = s.strip_prefix("deepen:") {
                let (a, b) = range.split_once('-').ok_or_else(bad)?;
                let (start, max) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if start == 0 || start > max {
                    return Err(bad());
                }
                return Ok(KappaMode::Deepen { start, max });
            }
            s.parse().map(KappaMode::Fixed).map_err(|_| bad())
        }
    }
}

/// Splits on commas outside brackets, so closure ids such as `d1@(0,1)>{1}` stay whole.
fn split_ids(s: &str) -> Vec<&str> {
    let (mut out, mut depth, mut start) = (vec![], 0i32, 0);
    for (i, c) in s.char_indices() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out.into_iter().map(str::trim).filter(|x| !x.is_empty()).collect()
}

fn path_game(g: &Wtg, closure: bool) -> ClosedGame {
    if closure {
        build_closure(g)
    } else {
        ClosedGame::lift(g)
    }
}

fn closure_root(c: &ClosedGame, g: &Wtg, root: &RootArgs) -> Result<usize, Failure> {
    let base = g.location(&root.location).ok_or_else(|| Failure::usage(format!("unknown location `{}`", root.location)))?;
    let region = parse_region(&root.region)?;
    let ri = c.regions.iter().position(|r| *r == region).ok_or_else(|| Failure::usage(format!("`{region}` is not a region of this game")))?;
    Ok(c.at(base, ri))
}

fn run(cmd: Command) -> Result<Output, Failure> {
    match cmd {
        Command::Validate { file } => {
            let g = load(&file)?;
            let diags = g.validate();
            if !diags.is_empty() {
                let lines: Vec<String> = diags.iter().map(|d| format!("{}: {d}", file.display())).collect();
                return Err(Failure::Usage(lines.join("\n")));
            }
            Ok(Output::json(json!({
                "valid": true,
                "clock_bound": g.clock_bound,
                "locations": g.locations.len(),
                "transitions": g.transitions.len(),
            })))
        }
        Command::Regions { file } => {
            let g = load(&file)?;
            let regions: Vec<Value> = compute_regions(&g).iter().map(|r| json!({"label": r.to_string(), "region": r.to_json()})).collect();
            Ok(Output::json(Value::Array(regions)))
        }
        Command::Closure { file, emit } => {
            let c = build_closure(&load(&file)?);
            Ok(match emit {
                GraphFormat::Json => Output::json(c.to_json()),
                GraphFormat::Dot => Output::text(c.to_dot()),
            })
        }
        Command::PathValue { file, path, valuation } => {
            let g = load(&file)?;
            let c = path_game(&g, path.closure);
            let pi = FinitePath::from_ids(&c, &split_ids(&path.path)).map_err(Failure::usage)?;
            let f = path_value_fn(&c, &pi).map_err(Failure::usage)?;
            let mut out = json!({"path": path.path, "value": f.to_json()});
            if let Some(v) = valuation {
                let at = f.eval(&v).map_err(Failure::usage)?;
                out["at"] = json!({"valuation": v.to_string(), "value": at.to_string()});
                eprintln!("value at {v}: {at}");
            }
            Ok(Output::json(out))
        }
        Command::CycleValue { file, path } => {
            let g = load(&file)?;
            let c = path_game(&g, path.closure);
            let pi = FinitePath::from_ids(&c, &split_ids(&path.path)).map_err(Failure::usage)?;
            let v = cycle_value(&c, &pi).map_err(Failure::usage)?;
            eprintln!("cycle value: {v}");
            Ok(Output::json(json!({"path": path.path, "cycle_value": v.to_string()})))
        }
        Command::Unfold { file, root, kappa, budget_nodes, stats, emit } => {
            let g = load(&file)?;
            let c = build_closure(&g);
            let r = closure_root(&c, &g, &root)?;
            let attr = attractor(&c);
            if !attr.inside[r] {
                return Err(Failure::usage(format!("{} has value +inf; nothing to unfold", c.locations[r].id)));
            }
            let budget = budget_nodes.unwrap_or_else(default_budget);
            let u = build_unfolding(&c, r, kappa, budget, &attr.inside, &mut CycleCache::default()).map_err(Failure::internal)?;
            let s = u.stats();
            eprintln!("{} nodes, {} edges, longest path {}", s.nodes, s.edges, s.max_path_len);
            if stats {
                return Ok(Output::json(serde_json::to_value(&s).expect("serializable")));
            }
            Ok(match emit {
                GraphFormat::Dot => Output::text(u.to_dot(&c)),
                GraphFormat::Json => Output::json(json!({
                    "root": c.locations[r].id,
                    "kappa": kappa,
                    "stats": s,
                    "structure": match u.check_structure(&c) { Ok(()) => "ok".to_string(), Err(e) => e },
                })),
            })
        }
        Command::Solve(args) => run_solve(args),
        Command::Certify { file, values, root, horizon, epsilon } => {
            let g = load(&file)?;
            let c = build_closure(&g);
            let r = closure_root(&c, &g, &root)?;
            let text = std::fs::read_to_string(&values).map_err(|e| Failure::usage(format!("{}: {e}", values.display())))?;
            let given: Map<String, Value> = serde_json::from_str(&text).map_err(Failure::usage)?;
            let mut vhat = initial_map(&c);
            for (id, f) in &given {
                let l = c.location(id).ok_or_else(|| Failure::usage(format!("unknown closure location `{id}`")))?;
                vhat[l] = Pwa::from_json(f).map_err(|e| Failure::usage(format!("{id}: {e}")))?;
            }
            let scope = wtg::solver::reachable(&c, r);
            let cert = certify(&c, &vhat, horizon, &epsilon, Some(&scope)).map_err(Failure::usage)?;
            eprintln!("{}", cert.status.label());
            let code = if cert.status.is_certified() { 0 } else { 3 };
            let body = serde_json::to_string_pretty(&cert).expect("serializable");
            Ok(Output { body, code })
        }
        Command::Oracle { file, location, valuation, d, h } => {
            let g = load(&file)?;
            let l = g.location(&location).ok_or_else(|| Failure::usage(format!("unknown location `{location}`")))?;
            let c = Configuration { location: l, valuation: valuation.clone() };
            let v = grid_value(&g, &c, GridSpec { d, h }).map_err(Failure::usage)?;
            eprintln!("grid value at ({location}, {valuation}) with D = {d}, H = {h}: {v}");
            Ok(Output::json(json!({
                "location": location,
                "valuation": valuation.to_string(),
                "d": d,
                "h": h,
                "value": v.to_string(),
                "bound": "upper bound on the value for finite H",
            })))
        }
        Command::Simulate { file, location, valuation, min, max, seed, den, steps } => {
            let g = load(&file)?;
            let base = g.location(&location).ok_or_else(|| Failure::usage(format!("unknown location `{location}`")))?;
            let c = build_closure(&g);
            let start = c.locate(base, &valuation).ok_or_else(|| Failure::usage(format!("valuation {valuation} outside [0, M]")))?;
            let solved = if min == PlayerKind::Strategy || max == PlayerKind::Strategy {
                let region = c.regions[c.locations[start].region.expect("closure location")].clone();
                let r = solve(&g, &location, &region, &SolveOptions::default()).map_err(Failure::internal)?;
                let strategies = r.strategies.clone().ok_or_else(|| {
                    Failure::Internal(format!("no certified strategies ({})", r.status.label()))
                })?;
                Some(strategies)
            } else {
                None
            };
            let mut random_min = RandomController::new(seed, den);
            let mut random_max = RandomController::new(seed.wrapping_add(1), den);
            let (mut smax, mut smin) = match solved {
                Some((a, b)) => (Some(a), Some(b)),
                None => (None, None),
            };
            let min_ctl: &mut dyn Controller = match (min, smin.as_mut()) {
                (PlayerKind::Strategy, Some(s)) => s,
                _ => &mut random_min,
            };
            let max_ctl: &mut dyn Controller = match (max, smax.as_mut()) {
                (PlayerKind::Strategy, Some(s)) => s,
                _ => &mut random_max,
            };
            let out = simulate(&c, start, &valuation, min_ctl, max_ctl, steps).map_err(Failure::internal)?;
            match &out.payoff {
                Payoff::Complete(v) => eprintln!("reached {} after {} steps, payoff {v}", c.locations[out.end.0].id, out.steps.len()),
                Payoff::Partial(w) => eprintln!("no target after {} steps, weight so far {w}", out.steps.len()),
            }
            Ok(Output::json(out.to_json(&c)))
        }
        Command::Export { file, emit } => {
            let g = load(&file)?;
            Ok(match emit {
                GraphFormat::Json => Output::text(g.to_json_string()),
                GraphFormat::Dot => Output::text(g.to_dot()),
            })
        }
    }
}

fn run_solve(args: SolveArgs) -> Result<Output, Failure> {
    let g = load(&args.file)?;
    let region = parse_region(&args.root.region)?;
    if !args.epsilon.is_positive() && !args.epsilon.is_zero() {
        return Err(Failure::usage("--epsilon must be non-negative"));
    }
    let opts = SolveOptions {
        kappa: parse_kappa(&args.kappa)?,
        horizon: args.horizon,
        epsilon: args.epsilon,
        budget: args.budget_nodes.unwrap_or_else(default_budget),
        reconstruct: !args.no_reconstruct,
    };
    let r = solve(&g, &args.root.location, &region, &opts).map_err(|e| match e {
        wtg::solver::SolveError::UnknownLocation(_) | wtg::solver::SolveError::UnknownRegion(_) => Failure::usage(e),
        _ => Failure::internal(e),
    })?;
    let at = r.value.eval(r.value.lo()).expect("domain end");
    eprintln!(
        "{} from {}: value {} at {} ({}, via {:?})",
        args.root.location,
        region,
        at,
        r.value.lo(),
        r.status.label(),
        r.diagnostics.source
    );
    for note in &r.diagnostics.notes {
        eprintln!("note: {note}");
    }
    let code = if r.status.is_certified() { 0 } else { 3 };
    let body = match args.emit {
        ValueFormat::Json => serde_json::to_string_pretty(&solve_json(&r, &region)).expect("serializable"),
        ValueFormat::Csv => r.value.to_csv(),
        ValueFormat::Dot => r.closure.to_dot(),
    };
    Ok(Output { body, code })
}

fn solve_json(r: &SolveResult, region: &Region) -> Value {
    let values: Map<String, Value> = r
        .scope
        .iter()
        .enumerate()
        .filter(|(_, inside)| **inside)
        .map(|(l, _)| (r.closure.locations[l].id.clone(), r.values[l].to_json()))
        .collect();
    let mut out = json!({
        "location": r.closure.locations[r.root].id,
        "region": region.to_json(),
        "value": r.value.to_json(),
        "status": r.status.label(),
        "certified": r.status.is_certified(),
        "values": values,
        "diagnostics": r.diagnostics,
    });
    if let Some((max, min)) = &r.strategies {
        out["strategies"] = json!({"max": max.to_json(&r.closure), "min": min.to_json(&r.closure)});
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_flags() {
        assert!(matches!(parse_kappa("bound"), Ok(KappaMode::Bound)));
        assert!(matches!(parse_kappa("5"), Ok(KappaMode::Fixed(5))));
        assert!(matches!(parse_kappa("deepen:1-4"), Ok(KappaMode::Deepen { start: 1, max: 4 })));
        assert!(parse_kappa("deepen:4-1").is_err());
        assert!(parse_kappa("lots").is_err());
    }

    #[test]
    fn ids_are_trimmed() {
        assert_eq!(split_ids(" d1, d2 ,"), ["d1", "d2"]);
        assert_eq!(split_ids("d1@{0}>(0,1),d2@[0,1]>{1}"), ["d1@{0}>(0,1)", "d2@[0,1]>{1}"]);
    }
}
