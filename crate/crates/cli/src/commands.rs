//! Subcommands and argument parsing.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use relaynet::analytic::{d_min, semicircle_chain, tri_candidates};
use relaynet::geometry::{Disk, Point2};
use relaynet::homotopy::{classify, partition_of, PlanarNetwork};
use relaynet::network::{cost, Scenario};
use relaynet::optimizer::chain::{optimize_chain, ChainConfig};
use relaynet::optimizer::{optimize, random_initial_state};
use relaynet::prescan::{prescan, state_network, thread_count};
use relaynet::steiner::SteinerTree;
use relaynet::visgraph::{build_graph, yen_k_paths, DEFAULT_YEN_K};
use serde::Deserialize;

use crate::report::{prescan_summary, prescan_table, solve_table, SolveRow};
use crate::scenario::ScenarioFile;
use crate::svg::{render, DEFAULT_SCALE};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "relaynet", version, about = "Relay placement around circular no-transmission zones")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve networks from random relay placements.
    Solve(SolveArgs),
    /// Enumerate homotopy candidates, filter and evolve them.
    Prescan(PrescanArgs),
    /// Print the homotopy fingerprint of a network.
    Classify(ClassifyArgs),
    /// K shortest loopless paths between two terminals, with their classes.
    Paths(PathsArgs),
    /// Closed-form results.
    #[command(subcommand)]
    Analytic(AnalyticCommand),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub scenario: PathBuf,
    /// Relay count (default: the scenario budget).
    #[arg(long)]
    pub relays: Option<usize>,
    /// Number of random starts; seeds run from the scenario seed upward.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV report path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Render the cheapest feasible run.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    pub scale: f64,
    /// Per-step trace of the cheapest run as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PrescanArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub relays: Option<usize>,
    /// Generation limit.
    #[arg(long)]
    pub generations: Option<usize>,
    /// Likelihood threshold in percent.
    #[arg(long)]
    pub cl_threshold: Option<f64>,
    /// Keep classes already seen when they come from a different graph.
    #[arg(long)]
    pub keep_redundant: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-candidate CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary CSV.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Render the best evolved network.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SCALE)]
    pub scale: f64,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    pub scenario: PathBuf,
    /// JSON with `nodes` ([[x, y], ...]), `edges` ([[u, v], ...]) and
    /// optional `terminals` (node ids; default: the first m nodes).
    pub network: PathBuf,
}

#[derive(Debug, Args)]
pub struct PathsArgs {
    pub scenario: PathBuf,
    /// Terminal ids (0-based).
    #[arg(long, default_value_t = 0)]
    pub from: usize,
    #[arg(long, default_value_t = 1)]
    pub to: usize,
    #[arg(short, long, default_value_t = DEFAULT_YEN_K)]
    pub k: usize,
}

#[derive(Debug, Subcommand)]
pub enum AnalyticCommand {
    /// Cheapest terminal half-distance for n relays around a unit obstacle.
    Dmin { n: usize },
    /// Equal-radius chain of n relays between (-d, 0) and (d, 0).
    Chain { n: usize, d: f64 },
    /// One relay for three terminals.
    Triangle {
        #[arg(allow_negative_numbers = true)]
        ax: f64,
        #[arg(allow_negative_numbers = true)]
        ay: f64,
        #[arg(allow_negative_numbers = true)]
        bx: f64,
        #[arg(allow_negative_numbers = true)]
        by: f64,
        #[arg(allow_negative_numbers = true)]
        cx: f64,
        #[arg(allow_negative_numbers = true)]
        cy: f64,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Prescan(a) => cmd_prescan(&a),
        Command::Classify(a) => cmd_classify(&a),
        Command::Paths(a) => cmd_paths(&a),
        Command::Analytic(a) => cmd_analytic(&a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn echo(cmd: &str, file: &ScenarioFile) {
    eprintln!("relaynet {cmd}: scenario sha256 {}", file.digest());
}

fn pool() -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(None))
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let file = ScenarioFile::load(&a.scenario)?;
    echo("solve", &file);
    let s = file.scenario()?;
    let n = a.relays.unwrap_or(s.relay_budget);
    let base = a.seed.unwrap_or(file.seed);
    let cfg = file.optimizer_config();
    cfg.validate()?;
    if a.seeds == 0 {
        return Err(CliError::Validation("--seeds must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..a.seeds).map(|k| base.wrapping_add(k)).collect();
    let rows: Vec<SolveRow> = pool()?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let c = relaynet::optimizer::OptimizerConfig { seed, ..cfg.clone() };
                let (state, trace) = optimize(&s, &random_initial_state(&s, n, seed), &c);
                let hvector = classify(&state_network(&s, &state), &s.obstacles)
                    .ok()
                    .map(|h| h.to_string());
                SolveRow { seed, trace, state, hvector }
            })
            .collect()
    });
    emit(a.out.as_deref(), &solve_table(&s, &rows)?)?;
    let best = rows
        .iter()
        .filter_map(|r| cost(&s, &r.state).value().map(|c| (c, r)))
        .min_by(|x, y| x.0.total_cmp(&y.0));
    let converged = rows.iter().filter(|r| r.trace.converged).count();
    eprintln!(
        "{} runs, {converged} converged, best cost {}, wall-clock {:.2} s",
        rows.len(),
        best.map_or("none".into(), |b| b.0.to_string()),
        started.elapsed().as_secs_f64()
    );
    let Some((_, best)) = best else {
        return Err(CliError::NoFeasible("every run overlaps an obstacle".into()));
    };
    if let Some(p) = &a.svg {
        std::fs::write(p, render(&s, &best.state, a.scale))?;
    }
    if let Some(p) = &a.trace {
        std::fs::write(p, best.trace.to_csv())?;
    }
    Ok(())
}

pub fn cmd_prescan(a: &PrescanArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let file = ScenarioFile::load(&a.scenario)?;
    echo("prescan", &file);
    let s = file.scenario()?;
    let mut cfg = file.prescan_config();
    cfg.relays = a.relays;
    if let Some(g) = a.generations {
        cfg.max_generations = g;
    }
    if let Some(t) = a.cl_threshold {
        cfg.cl_threshold = t;
    }
    cfg.keep_redundant |= a.keep_redundant;
    if let Some(seed) = a.seed {
        cfg.optimizer.seed = seed;
    }
    let r = prescan(&s, &cfg)?;
    emit(a.out.as_deref(), &prescan_table(&r)?)?;
    if let Some(p) = &a.summary {
        std::fs::write(p, prescan_summary(&r, &file.digest())?)?;
    }
    eprintln!(
        "n {}, generations {}, |S_pre| {}, CL passed {}, |S_fin| {}, min cost {}, wall-clock {:.2} s",
        r.relays,
        r.generations_scanned(),
        r.candidates.len(),
        r.passed(),
        r.final_classes(),
        r.min_cost().map_or("none".into(), |c| c.to_string()),
        started.elapsed().as_secs_f64()
    );
    if let (Some(p), Some(best)) = (&a.svg, r.evolved.first()) {
        std::fs::write(p, render(&s, &best.state, a.scale))?;
    }
    if r.evolved.is_empty() {
        if !r.baseline_only && r.passed() == 0 {
            return Err(CliError::NothingPassed(format!(
                "all {} candidates at or below {}%",
                r.candidates.len(),
                cfg.cl_threshold
            )));
        }
        return Err(CliError::NoFeasible("no evolved network is feasible".into()));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    nodes: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    terminals: Option<Vec<usize>>,
}

pub fn cmd_classify(a: &ClassifyArgs) -> Result<(), CliError> {
    let file = ScenarioFile::load(&a.scenario)?;
    let s = file.scenario()?;
    let text = std::fs::read_to_string(&a.network)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", a.network.display())))?;
    let nf: NetworkFile = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("network: {e}")))?;
    let net = network_from_file(&nf, &s)?;
    let h = classify(&net, &s.obstacles).map_err(|e| match e {
        relaynet::Error::NotATree(m) => CliError::Validation(format!("loop detected: {m}")),
        other => CliError::Validation(other.to_string()),
    })?;
    let blocks = partition_of(&net, &s.obstacles)?;
    println!("{h}");
    let parts: Vec<String> = blocks
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")))
        .collect();
    println!("partition {}", parts.join(" "));
    Ok(())
}

fn network_from_file(nf: &NetworkFile, s: &Scenario) -> Result<PlanarNetwork, CliError> {
    let nodes: Vec<Point2> = nf.nodes.iter().map(|&p| Point2::from(p)).collect();
    let terminals = nf.terminals.clone().unwrap_or_else(|| (0..s.terminal_count()).collect());
    for (k, e) in nf.edges.iter().enumerate() {
        if e[0] >= nodes.len() || e[1] >= nodes.len() || e[0] == e[1] {
            return Err(CliError::Validation(format!("network: edge {k} has invalid endpoints {e:?}")));
        }
    }
    if let Some(t) = terminals.iter().find(|&&t| t >= nodes.len()) {
        return Err(CliError::Validation(format!("network: terminal node {t} does not exist")));
    }
    let pairs: Vec<(usize, usize)> = nf.edges.iter().map(|e| (e[0], e[1])).collect();
    Ok(PlanarNetwork::from_segments(nodes, &pairs, terminals))
}

/// One line per path (rank, length, class), then the distinct class count.
/// Paths that cannot be classified print `-` as their class.
pub fn cmd_paths(a: &PathsArgs) -> Result<(), CliError> {
    let file = ScenarioFile::load(&a.scenario)?;
    let s = file.scenario()?;
    let m = s.terminal_count();
    if a.from >= m || a.to >= m || a.from == a.to {
        return Err(CliError::Validation(format!(
            "--from and --to must be distinct terminal ids below {m}"
        )));
    }
    if a.k == 0 {
        return Err(CliError::Validation("-k must be at least 1".into()));
    }
    let g = build_graph(&s.terminals, &s.obstacles)?;
    let paths = yen_k_paths(&g, a.from, a.to, a.k);
    if paths.is_empty() {
        return Err(CliError::NoFeasible(format!("terminals {} and {} are not connected", a.from, a.to)));
    }
    let mut classes = BTreeSet::new();
    for (rank, path) in paths.iter().enumerate() {
        let mut edges = path.edges.clone();
        edges.sort_unstable();
        let tree = SteinerTree {
            edges,
            total_length: path.length,
            terminals: vec![g.terminal_index[a.from], g.terminal_index[a.to]],
        };
        let net = PlanarNetwork::from_steiner(&g, &tree);
        let class = match classify(&net, &s.obstacles) {
            Ok(h) => {
                let text = h.to_string();
                classes.insert(h);
                text
            }
            Err(_) => "-".into(),
        };
        println!("{} {} {class}", rank + 1, path.length);
    }
    println!("{} paths, {} distinct classes", paths.len(), classes.len());
    Ok(())
}

pub fn cmd_analytic(a: &AnalyticCommand) -> Result<(), CliError> {
    match *a {
        AnalyticCommand::Dmin { n } => {
            let d = d_min(n).map_err(|e| CliError::Validation(e.to_string()))?;
            println!("d_min({n}) = {d}");
        }
        AnalyticCommand::Chain { n, d } => {
            d_min(n).map_err(|e| CliError::Validation(e.to_string()))?;
            if !(d > 1.0) {
                return Err(CliError::Validation(format!("d must exceed the obstacle radius 1, got {d}")));
            }
            let (relays, radii, c, how) = match semicircle_chain(n, d) {
                Ok(sol) => (sol.relay_positions, vec![sol.common_radius; n + 2], sol.cost, "closed form"),
                Err(relaynet::Error::OutOfClosedForm(_)) => {
                    // Below d_min: start from the semicircle and solve numerically.
                    let init: Vec<Point2> = (1..=n)
                        .map(|k| Point2::from_polar(d, std::f64::consts::PI * (1.0 - k as f64 / (n as f64 + 1.0))))
                        .collect();
                    let obstacle = [Disk::new(Point2::new(0.0, 0.0), 1.0)];
                    let res = optimize_chain(Point2::new(-d, 0.0), Point2::new(d, 0.0), &obstacle, &init, &ChainConfig::default());
                    if !res.converged {
                        return Err(CliError::NoFeasible(format!("no feasible {n}-relay chain found at d = {d}")));
                    }
                    (res.relay_positions, res.radii, res.cost, "numeric")
                }
                Err(e) => return Err(e.into()),
            };
            println!("method {how}");
            for (k, p) in relays.iter().enumerate() {
                println!("relay {k} {} {}", p.x, p.y);
            }
            let r: Vec<String> = radii.iter().map(|x| x.to_string()).collect();
            println!("radii {}", r.join(" "));
            println!("cost {c}");
        }
        AnalyticCommand::Triangle { ax, ay, bx, by, cx, cy } => {
            let pts = [Point2::new(ax, ay), Point2::new(bx, by), Point2::new(cx, cy)];
            if pts.iter().any(|p| !p.is_finite()) {
                return Err(CliError::Validation("coordinates must be finite".into()));
            }
            let mut all = tri_candidates(pts[0], pts[1], pts[2]);
            all.sort_by(|x, y| x.cost.total_cmp(&y.cost));
            let best = &all[0];
            println!("candidate {}", best.candidate_kind.as_str());
            match best.relay_position {
                Some(p) => println!("relay {} {}", p.x, p.y),
                None => println!("relay none"),
            }
            let r: Vec<String> = best.radii.iter().map(|x| x.to_string()).collect();
            println!("radii {}", r.join(" "));
            println!("cost {}", best.cost);
            for c in &all[1..] {
                println!("alternative {} cost {}", c.candidate_kind.as_str(), c.cost);
            }
        }
    }
    Ok(())
}
