use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use zenofront::generators::{self, Family, GeneratorSpec, Sequence};
use zenofront::io::{self, AnyInstance, FrontDocument, FrontFormat, ReductionSidecar};
use zenofront::model::GeneralInstance;
use zenofront::openflight::{self, PipelineOptions};
use zenofront::oracle::{oracle_general, oracle_instance, OracleOptions};
use zenofront::pddl;
use zenofront::transform::{self, Reduction};
use zenofront::{same_values, solve_classic, solve_noduplicate, Instance, Location, ParetoFront, SolveOptions, Stats};

#[derive(Parser)]
#[command(name = "zenofront", version, about = "Exact Pareto fronts for MultiZenoTravel", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated clique instance or pathological graph.
    Gen(GenArgs),
    /// Compute the Pareto front of an instance file.
    Solve(SolveArgs),
    /// Reduce a general graph to a clique instance plus a mapping sidecar.
    Reduce(ReduceArgs),
    /// Replace crossing city pairs by virtual cities.
    TransformBab(TransformArgs),
    /// Export a clique instance as a PDDL domain and problem.
    Pddl(PddlArgs),
    /// Build and solve an instance from OpenFlights airport and route files.
    Openflight(OpenflightArgs),
    /// Exhaustive search front of a tiny instance.
    Oracle(OracleArgs),
    /// Run both solvers, and the oracle when the instance is small enough, and diff the fronts.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algo {
    Classic,
    Nodup,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Routes,
    Splits,
}

impl From<Mode> for Reduction {
    fn from(m: Mode) -> Reduction {
        match m {
            Mode::Routes => Reduction::Routes,
            Mode::Splits => Reduction::Splits,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct GenArgs {
    /// Named preset `d_dbar_c`, e.g. lin_lin_log.
    #[arg(long, conflicts_with_all = ["table", "hansen", "layered"])]
    preset: Option<String>,
    /// Regression family d = d̄ = i, c = n + 1 - i with t = n, p = 2.
    #[arg(long, conflicts_with_all = ["hansen", "layered"])]
    table: Option<usize>,
    /// Hansen diamond-chain graph with this many vertices.
    #[arg(long, conflicts_with = "layered")]
    hansen: Option<usize>,
    /// Layered graph with this many inner vertices.
    #[arg(long)]
    layered: Option<usize>,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    /// Families: linear, sqrt, log1p, affine_mod.
    #[arg(long, default_value = "linear")]
    d: String,
    #[arg(long, default_value = "linear")]
    dbar: String,
    #[arg(long, default_value = "linear")]
    c: String,
    /// Evaluate costs at i = n..1.
    #[arg(long)]
    reverse_c: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = Algo::Nodup)]
    algo: Algo,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    prune: Switch,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Front file; CSV on stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Front format; guessed from the extension of --out.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write Stats as JSON here.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Reduction used for general graphs.
    #[arg(long, value_enum, default_value_t = Mode::Routes)]
    mode: Mode,
    /// Intermediate-vertex cap for general graphs; all vertices when absent.
    #[arg(long)]
    max_intermediate: Option<usize>,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
    /// Sidecar mapping; the output path with extension `mapping.json` when absent.
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Routes)]
    mode: Mode,
    #[arg(long)]
    max_intermediate: Option<usize>,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PddlArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long)]
    domain: PathBuf,
    #[arg(long)]
    problem: PathBuf,
}

#[derive(Args)]
struct OpenflightArgs {
    #[arg(long)]
    airports: PathBuf,
    #[arg(long)]
    routes: PathBuf,
    /// IATA codes by traffic, one per line; `ranking.txt` next to --airports when absent.
    #[arg(long)]
    ranking: Option<PathBuf>,
    #[arg(long, default_value = "ATL")]
    src: String,
    #[arg(long, default_value = "PEK")]
    dst: String,
    #[arg(long, default_value_t = 50)]
    top: usize,
    /// Most airports on a path, endpoints included.
    #[arg(long, default_value_t = 4)]
    max_cities: usize,
    #[arg(long, default_value_t = 6)]
    t: usize,
    #[arg(long, default_value_t = 2)]
    p: usize,
    #[arg(long, default_value_t = openflight::DEFAULT_COST_SCALE)]
    cost_scale: f64,
    /// Write the clique instance here.
    #[arg(long)]
    instance_out: Option<PathBuf>,
    /// Front file; only the extremes are printed when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Stop after the reduction.
    #[arg(long)]
    no_solve: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, short)]
    instance: PathBuf,
    /// Total leg budget over all planes.
    #[arg(long)]
    legs: Option<usize>,
    /// Skip the toy-scale guard.
    #[arg(long)]
    unchecked: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, short)]
    instance: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failed(_) => 2,
        }
    }
}

fn fail(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

type Result<T> = std::result::Result<T, CliError>;

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => io::write_text(path, text).map_err(fail),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn family(name: &str) -> Result<Family> {
    Family::parse(name).ok_or_else(|| CliError::Usage(format!("unknown family {name:?} (linear, sqrt, log1p, affine_mod)")))
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let counts = |g: GeneralInstance| -> Result<GeneralInstance> {
        g.with_counts(a.t.unwrap_or(g.t()), a.p.unwrap_or(g.p())).map_err(fail)
    };
    let text = if let Some(n) = a.hansen {
        io::to_json(&counts(generators::gen_hansen(n).map_err(fail)?)?)
    } else if let Some(n) = a.layered {
        io::to_json(&counts(generators::gen_layered(n).map_err(fail)?)?)
    } else {
        let mut spec = match (&a.preset, a.table) {
            (Some(name), _) => generators::preset(name).map_err(|e| CliError::Usage(e.to_string()))?,
            (None, Some(n)) => generators::table_spec(n),
            (None, None) => {
                let c = family(&a.c)?;
                let c = if a.reverse_c { Sequence::reversed(c) } else { Sequence::new(c) };
                let t = a.t.unwrap_or(a.n);
                GeneratorSpec::new(a.n, t, a.p.unwrap_or(t.min(2)), Sequence::new(family(&a.d)?), Sequence::new(family(&a.dbar)?), c)
            }
        };
        if a.preset.is_some() || a.table.is_some() {
            spec.t = a.t.unwrap_or(spec.t);
            spec.p = a.p.unwrap_or(spec.p);
        }
        spec.seed = a.seed;
        spec.jitter = a.jitter;
        io::to_json(&generators::generate(&spec).map_err(fail)?)
    };
    emit(a.out.as_deref(), &text)
}

fn solve_clique(inst: &Instance, algo: Algo, opts: &SolveOptions) -> Result<(ParetoFront, Stats)> {
    match algo {
        Algo::Classic => solve_classic(inst, opts),
        Algo::Nodup => solve_noduplicate(inst, opts),
    }
    .map_err(fail)
}

fn default_cap(g: &GeneralInstance) -> usize {
    g.vertices().len().saturating_sub(2).max(1)
}

/// Graph vertex ids for expanded plans.
fn vertex_name(g: &GeneralInstance) -> impl Fn(Location) -> String + '_ {
    move |loc| match loc {
        Location::Initial => g.vertices()[g.initial()].id.clone(),
        Location::Goal => g.vertices()[g.goal()].id.clone(),
        Location::City(v) => g.vertices()[v].id.clone(),
    }
}

struct Solved {
    front: ParetoFront,
    stats: Stats,
    /// Per point, the witness in arrow notation over the input's own locations.
    plans: Vec<Vec<String>>,
}

fn solve_any(inst: &AnyInstance, algo: Algo, opts: &SolveOptions, mode: Mode, cap: Option<usize>) -> Result<Solved> {
    match inst {
        AnyInstance::Clique(c) => {
            // central flights only matter through bridge cities for crossing pairs
            let bridged = match c.central() {
                Some(_) if !c.has_overrides() => {
                    let broken = zenofront::model::check_triangle(c).map_err(fail)?.len();
                    if broken > 0 {
                        eprintln!("warning: {broken} triangle-inequality violations; plans flying through several cities may be missed");
                    }
                    transform::transform_bab(c).map_err(fail)?
                }
                _ => c.clone(),
            };
            let (front, stats) = solve_clique(&bridged, algo, opts)?;
            let plans = front.points.iter().map(|p| p.witness.render()).collect();
            Ok(Solved { front, stats, plans })
        }
        AnyInstance::General(g) => {
            let (clique, mapping) = transform::reduce_to_clique(g, cap.unwrap_or_else(|| default_cap(g)), mode.into()).map_err(fail)?;
            let (front, stats) = solve_clique(&clique, algo, opts)?;
            let name = vertex_name(g);
            let plans = front
                .points
                .iter()
                .map(|p| transform::expand_plan(&p.witness, &mapping, g).map(|s| s.render_with(&name)))
                .collect::<std::result::Result<_, _>>()
                .map_err(fail)?;
            Ok(Solved { front, stats, plans })
        }
    }
}

fn front_text(s: &Solved, format: FrontFormat) -> String {
    match format {
        FrontFormat::Csv => io::front_csv(&s.front),
        FrontFormat::Json => io::to_json(&FrontDocument::new(&s.front, None, |i, _| s.plans[i].clone())),
    }
}

fn stats_line(s: &Stats) -> String {
    format!(
        "algorithm {} iterations {} calls {} S {} front {} pruning {} workers {}",
        s.algorithm,
        s.iterations,
        s.calls,
        s.s_size,
        s.front_size,
        if s.pruning_applied { "on" } else { "off" },
        s.workers
    )
}

fn read(path: &Path) -> Result<AnyInstance> {
    io::read_instance(path).map_err(fail)
}

fn read_clique(path: &Path) -> Result<Instance> {
    match read(path)? {
        AnyInstance::Clique(c) => Ok(c),
        AnyInstance::General(_) => Err(fail(format!("{}: expected a clique instance, got a general graph", path.display()))),
    }
}

fn read_general(path: &Path) -> Result<GeneralInstance> {
    match read(path)? {
        AnyInstance::General(g) => Ok(g),
        AnyInstance::Clique(_) => Err(fail(format!("{}: expected a general graph, got a clique instance", path.display()))),
    }
}

fn cmd_solve(a: SolveArgs) -> Result<()> {
    if a.workers == 0 {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    let inst = read(&a.instance)?;
    let opts = SolveOptions { prune: matches!(a.prune, Switch::On), workers: a.workers, ..SolveOptions::default() };
    let solved = solve_any(&inst, a.algo, &opts, a.mode, a.max_intermediate)?;
    if solved.front.is_empty() {
        return Err(fail(format!("{}: infeasible, no plan carries every traveler", a.instance.display())));
    }
    let format = match (a.format, &a.out) {
        (Some(Format::Csv), _) => FrontFormat::Csv,
        (Some(Format::Json), _) => FrontFormat::Json,
        (None, Some(path)) => FrontFormat::from_path(path),
        (None, None) => FrontFormat::Csv,
    };
    emit(a.out.as_deref(), &front_text(&solved, format))?;
    if let Some(path) = &a.stats {
        io::write_json(path, &solved.stats).map_err(fail)?;
    }
    eprintln!("{}", stats_line(&solved.stats));
    Ok(())
}

fn cmd_reduce(a: ReduceArgs) -> Result<()> {
    let g = read_general(&a.instance)?;
    let cap = a.max_intermediate.unwrap_or_else(|| default_cap(&g));
    let (clique, mapping) = transform::reduce_to_clique(&g, cap, a.mode.into()).map_err(fail)?;
    io::write_json(&a.out, &clique).map_err(fail)?;
    let sidecar = a.mapping.unwrap_or_else(|| a.out.with_extension("mapping.json"));
    io::write_json(&sidecar, &ReductionSidecar { mode: a.mode.into(), max_intermediate: cap, mapping }).map_err(fail)?;
    println!("{} central cities; mapping in {}", clique.n(), sidecar.display());
    Ok(())
}

fn cmd_transform(a: TransformArgs) -> Result<()> {
    let inst = read_clique(&a.instance)?;
    let pairs = transform::detect_bab(&inst).map_err(fail)?;
    let out = transform::transform_bab(&inst).map_err(fail)?;
    io::write_json(&a.out, &out).map_err(fail)?;
    println!("{} crossing pairs; {} cities after the transformation", pairs.len(), out.n());
    Ok(())
}

fn cmd_pddl(a: PddlArgs) -> Result<()> {
    let inst = read_clique(&a.instance)?;
    let pair = pddl::export_pddl(&inst).map_err(fail)?;
    pddl::check_syntax(&pair).map_err(fail)?;
    io::write_text(&a.domain, &pair.domain).map_err(fail)?;
    io::write_text(&a.problem, &pair.problem).map_err(fail)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn cmd_openflight(a: OpenflightArgs) -> Result<()> {
    let ranking_path = a.ranking.clone().unwrap_or_else(|| a.airports.with_file_name("ranking.txt"));
    let airports = openflight::read_airports(open(&a.airports)?).map_err(fail)?;
    let routes = openflight::read_routes(open(&a.routes)?).map_err(fail)?;
    let ranking = openflight::read_ranking(open(&ranking_path)?).map_err(fail)?;
    let mut opts = PipelineOptions::new(&a.src, &a.dst, a.top, a.max_cities, a.t, a.p);
    opts.cost_scale = a.cost_scale;
    let res = openflight::run_pipeline(&airports, &routes, &ranking, &opts).map_err(fail)?;
    for path in &res.paths {
        println!("{:>10.1} {:>10.1}  {}", path.duration, path.cost, res.render_path(path));
    }
    println!("{} nondominated paths over {} airports; {} central cities", res.paths.len(), res.airports(), res.instance.n());
    if let Some(path) = &a.instance_out {
        io::write_json(path, &res.instance).map_err(fail)?;
    }
    if a.no_solve {
        return Ok(());
    }
    let sopts = SolveOptions { workers: a.workers.max(1), ..SolveOptions::default() };
    let (front, stats) = solve_noduplicate(&res.instance, &sopts).map_err(fail)?;
    let name = vertex_name(&res.graph);
    let plans: Vec<Vec<String>> = front
        .points
        .iter()
        .map(|p| transform::expand_plan(&p.witness, &res.mapping, &res.graph).map(|s| s.render_with(&name)))
        .collect::<std::result::Result<_, _>>()
        .map_err(fail)?;
    println!("front of {} points; {}", front.len(), stats_line(&stats));
    for i in [0, front.len().saturating_sub(1)].into_iter().take(front.len().min(2)) {
        let pt = &front.points[i];
        println!("cost {} makespan {} {}", pt.cost, pt.makespan, pt.ppp.render());
        for line in &plans[i] {
            println!("  {line}");
        }
    }
    if let Some(out) = &a.out {
        let solved = Solved { front, stats, plans };
        io::write_text(out, &front_text(&solved, FrontFormat::from_path(out))).map_err(fail)?;
    }
    Ok(())
}

fn cmd_oracle(a: OracleArgs) -> Result<()> {
    let opts = OracleOptions { legs: a.legs, unchecked: a.unchecked };
    let res = match read(&a.instance)? {
        AnyInstance::Clique(c) => oracle_instance(&c, &opts),
        AnyInstance::General(g) => oracle_general(&g, &opts),
    }
    .map_err(fail)?;
    let mut out = String::from("cost,makespan\n");
    for (c, m) in res.values() {
        out.push_str(&format!("{c},{m}\n"));
    }
    print!("{out}");
    eprintln!("legs {} labels {} exhausted {}", res.legs, res.labels, res.exhausted);
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let inst = read(&a.instance)?;
    let opts = SolveOptions { workers: a.workers.max(1), ..SolveOptions::default() };
    let classic = solve_any(&inst, Algo::Classic, &opts, Mode::Routes, None)?.front.values();
    let nodup = solve_any(&inst, Algo::Nodup, &opts, Mode::Routes, None)?.front.values();
    let oracle = match &inst {
        AnyInstance::Clique(c) => oracle_instance(c, &OracleOptions::default()),
        AnyInstance::General(g) => oracle_general(g, &OracleOptions::default()),
    };
    let mut diffs = Vec::new();
    if !same_values(&classic, &nodup) {
        diffs.push(format!("classic {classic:?}\nnodup   {nodup:?}"));
    }
    match oracle {
        Ok(res) if !same_values(&classic, &res.values()) => diffs.push(format!("classic {classic:?}\noracle  {:?}", res.values())),
        Ok(_) => {}
        Err(e) => println!("oracle skipped: {e}"),
    }
    if diffs.is_empty() {
        println!("fronts identical ({} points)", classic.len());
        Ok(())
    } else {
        Err(CliError::Failed(format!("fronts differ\n{}", diffs.join("\n"))))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::TransformBab(a) => cmd_transform(a),
        Command::Pddl(a) => cmd_pddl(a),
        Command::Openflight(a) => cmd_openflight(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compare(a) => cmd_compare(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
