use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gerrygrid::edgelist::parse_edge_list;
use gerrygrid::error::{Error, Result};
use gerrygrid::par::{self, Summary, SweepJob};
use gerrygrid::planfile::{parse_plans, write_plans};
use gerrygrid::tables::{extremes_report, write_curves, write_slopes, Meta, SweepReader, SweepWriter};
use gerrygrid::text::{bits_hex, decimal, parse_bits_hex};
use gerrygrid_core::enumeration::MAX_PLAN_SIDE;
use gerrygrid_core::{
    enumerate_plans, Algorithm, ChainConfig, DualGraph, Evaluator, OptimizerConfig, PlanSet, SampleMode, SweepMode,
};
use serde::Serialize;

/// Exhaustive districting analysis and representation-maximizing search on grid graphs.
#[derive(Parser, Debug)]
#[command(name = "gerrygrid", version)]
struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: available parallelism). Outputs do not depend on it.
    #[arg(long, global = true, env = "GERRYGRID_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List every legal plan of the n x n grid into n districts.
    Enumerate {
        #[arg(short = 'n')]
        n: usize,
        /// Plan file to write.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Score voter distributions over every plan and write one CSV row each.
    Sweep {
        #[arg(short = 'n')]
        n: usize,
        /// Plan file from `enumerate` (enumerated on the fly when absent).
        #[arg(long)]
        plans: Option<PathBuf>,
        /// One row per symmetry orbit instead of per bit vector.
        #[arg(long)]
        dedup: bool,
        /// Only distributions with this many dots.
        #[arg(long)]
        num: Option<u32>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Continue an interrupted run after the row with this bits_hex.
        #[arg(long, requires = "out")]
        resume_from: Option<String>,
    },
    /// Regression slopes per num and extremal distributions from a sweep CSV.
    Analyze {
        sweep_csv: PathBuf,
        /// Slope CSV to write.
        #[arg(short, long)]
        out: PathBuf,
        /// Grid side (default: inferred from the histogram columns).
        #[arg(short = 'n')]
        n: Option<usize>,
    },
    /// Run one search and report the best distribution as JSON.
    Optimize {
        #[arg(long)]
        alg: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Edge-list graph for the chain backend instead of the n x n grid.
        #[arg(long, requires = "districts")]
        graph: Option<PathBuf>,
        /// District count on an edge-list graph.
        #[arg(long)]
        districts: Option<usize>,
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// CSV of the running best after each evaluation.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Mean best-so-far curves of several searches over seeded trials.
    Compare {
        /// Comma-separated algorithm names.
        #[arg(long, value_delimiter = ',', default_value = "rrils,sa,rsa,random")]
        algs: Vec<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100,1000")]
        k_max_grid: Vec<usize>,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Sweep CSV whose best row for `--num` gives the known maximum.
        #[arg(long, conflicts_with = "compute_known_max")]
        exhaustive: Option<PathBuf>,
        /// Find the known maximum by exhaustive search.
        #[arg(long)]
        compute_known_max: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(short = 'n', default_value_t = 5)]
    n: usize,
    #[arg(long)]
    num: usize,
    #[arg(long, default_value_t = 1000)]
    k_max: usize,
    #[arg(long, default_value_t = 0.4)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    t0: f64,
    #[arg(long, default_value_t = 0.95)]
    alpha: f64,
    #[arg(long, default_value_t = 0.05)]
    theta_r: f64,
    #[arg(long, default_value_t = 4)]
    n_swap: usize,
    /// Cool after every iteration rather than after each acceptance.
    #[arg(long)]
    cool_every_step: bool,
    /// Consecutive revisits of scored states before a search stops early.
    #[arg(long, default_value_t = 10_000)]
    stall_limit: usize,
}

impl SearchArgs {
    fn config(&self, seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            theta: self.theta,
            t0: self.t0,
            alpha: self.alpha,
            theta_r: self.theta_r,
            n_swap: self.n_swap,
            k_max: self.k_max,
            seed,
            cool_every_step: self.cool_every_step,
            stall_limit: self.stall_limit,
        }
    }

    fn annotate(&self, meta: Meta) -> Meta {
        meta.flag("n", self.n)
            .flag("num", self.num)
            .flag("theta", self.theta)
            .flag("t0", self.t0)
            .flag("alpha", self.alpha)
            .flag("theta_r", self.theta_r)
            .flag("n_swap", self.n_swap)
            .flag("cool_every_step", self.cool_every_step)
            .flag("stall_limit", self.stall_limit)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EvalKind {
    Exact,
    Sampled,
    Chain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SampleKind {
    WithReplacement,
    FullPass,
}

#[derive(Args, Debug, Serialize)]
struct EvalArgs {
    #[arg(long = "eval", value_enum, default_value_t = EvalKind::Exact)]
    kind: EvalKind,
    /// Plan file for the exact and sampled backends.
    #[arg(long)]
    plans: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    sample_size: usize,
    #[arg(long, value_enum, default_value_t = SampleKind::WithReplacement)]
    sample_mode: SampleKind,
    #[arg(long, default_value_t = 11_000)]
    steps: u64,
    #[arg(long, default_value_t = 1000)]
    burn_in: u64,
    #[arg(long, default_value_t = 10)]
    thin: u64,
}

impl EvalArgs {
    fn annotate(&self, meta: Meta) -> Meta {
        let meta = meta.flag("eval", format!("{:?}", self.kind).to_lowercase());
        let meta = match &self.plans {
            Some(p) => meta.flag("plans", p.display()),
            None => meta,
        };
        match self.kind {
            EvalKind::Exact => meta,
            EvalKind::Sampled => meta
                .flag("sample_size", self.sample_size)
                .flag("sample_mode", format!("{:?}", self.sample_mode).to_lowercase()),
            EvalKind::Chain => meta.flag("steps", self.steps).flag("burn_in", self.burn_in).flag("thin", self.thin),
        }
    }
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        let msg = info.to_string().replace('\n', " ");
        eprintln!("gerrygrid: internal error: {msg}");
        std::process::exit(2);
    }));
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            // First paragraph of clap's message, without the usage block.
            let rendered = e.to_string();
            let summary: Vec<&str> =
                rendered.lines().take_while(|l| !l.trim().is_empty()).map(str::trim).collect();
            eprintln!("gerrygrid: {}", summary.join(" ").trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io { source, .. }) if source.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gerrygrid: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Validation("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(t);
    }
    pool.build_global().map_err(|e| Error::Internal(e.to_string()))?;
    let seed = cli.seed;
    match cli.command {
        Command::Enumerate { n, out } => cmd_enumerate(n, out.as_deref()),
        Command::Sweep { n, plans, dedup, num, out, resume_from } => {
            cmd_sweep(n, plans.as_deref(), dedup, num, out.as_deref(), resume_from.as_deref(), seed)
        }
        Command::Analyze { sweep_csv, out, n } => cmd_analyze(&sweep_csv, &out, n, seed),
        Command::Optimize { alg, search, eval, graph, districts, out, curve } => {
            cmd_optimize(&alg, &search, &eval, graph.as_deref(), districts, out.as_deref(), curve.as_deref(), seed)
        }
        Command::Compare { algs, trials, k_max_grid, search, eval, exhaustive, compute_known_max, out } => {
            let known = KnownMax::from_flags(exhaustive, compute_known_max);
            cmd_compare(&algs, trials, &k_max_grid, &search, &eval, known, out.as_deref(), seed)
        }
    }
}

fn check_side(n: usize) -> Result<()> {
    if n == 0 || n > MAX_PLAN_SIDE {
        return Err(Error::Validation(format!("-n must lie in 1..={MAX_PLAN_SIDE}, got {n}")));
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Runs `body` against the file at `path`, or stdout.
fn with_output<F>(path: Option<&Path>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w).and_then(|()| w.flush()).map_err(|e| Error::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn load_plans(n: usize, path: Option<&Path>) -> Result<PlanSet> {
    check_side(n)?;
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_plans(&text, n, &p.display().to_string())
        }
        None => Ok(enumerate_plans(n)?),
    }
}

fn cmd_enumerate(n: usize, out: Option<&Path>) -> Result<()> {
    let plans = load_plans(n, None)?;
    if let Some(p) = out {
        let mut w = create(p)?;
        write_plans(&mut w, n, &plans).map_err(|e| Error::io(p, e))?;
    }
    println!("{}", plans.len());
    Ok(())
}

fn cmd_sweep(
    n: usize,
    plans_path: Option<&Path>,
    dedup: bool,
    num: Option<u32>,
    out: Option<&Path>,
    resume_from: Option<&str>,
    seed: u64,
) -> Result<()> {
    let plans = load_plans(n, plans_path)?;
    let g = DualGraph::square(n)?;
    let mode = if dedup { SweepMode::Dedup } else { SweepMode::Full };
    let mut meta = Meta::new("sweep", seed).flag("n", n).flag("mode", if dedup { "dedup" } else { "full" });
    if let Some(num) = num {
        meta = meta.flag("num", num);
    }
    if let Some(p) = plans_path {
        meta = meta.flag("plans", p.display());
    }
    let mut job = SweepJob::new(&g, &plans, mode, num);
    let nd = plans.n_districts();
    match (out, resume_from) {
        (Some(path), Some(hex)) => {
            let last = parse_bits_hex(hex)
                .ok_or_else(|| Error::Validation(format!("--resume-from '{hex}' is not a hexadecimal bit vector")))?;
            let file = truncate_after(path, &meta, last)?;
            job.start = last + 1;
            let mut w = SweepWriter::resume(BufWriter::new(file));
            job.for_each(|r| w.write(&r).map_err(|e| Error::io(path, e)))?;
            w.finish().map_err(|e| Error::io(path, e))?;
            Ok(())
        }
        (out, _) => with_output_result(out, |w| {
            let mut sw = SweepWriter::new(w, &meta, nd).map_err(|e| Error::io(display(out), e))?;
            job.for_each(|r| sw.write(&r).map_err(|e| Error::io(display(out), e)))?;
            sw.finish().map_err(|e| Error::io(display(out), e))?;
            Ok(())
        }),
    }
}

fn display(out: Option<&Path>) -> PathBuf {
    out.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
}

fn with_output_result<F>(path: Option<&Path>, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w)?;
            w.flush().map_err(|e| Error::io(p, e))
        }
        None => body(&mut io::stdout().lock()),
    }
}

/// Cuts an interrupted sweep CSV right after the row for `last` and returns
/// the file positioned for appending. The metadata line must match this run.
fn truncate_after(path: &Path, meta: &Meta, last: u64) -> Result<File> {
    let mut file = OpenOptions::new().read(true).write(true).open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(&mut file);
    let mut line = String::new();
    let mut offset = 0u64;
    let mut cut = None;
    let mut line_no = 0u64;
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
        if read == 0 {
            break;
        }
        line_no += 1;
        offset += read as u64;
        if line_no == 1 && line.trim_end() != meta.line() {
            return Err(Error::Validation(format!(
                "{}: metadata line does not match this sweep's flags; refusing to resume",
                path.display()
            )));
        }
        if !line.ends_with('\n') {
            break;
        }
        let first = line.split(',').next().unwrap_or("");
        if line_no > 2 && parse_bits_hex(first) == Some(last) {
            cut = Some(offset);
            break;
        }
    }
    let cut = cut.ok_or_else(|| {
        Error::Validation(format!("{}: no complete row with bits_hex {last:x} to resume after", path.display()))
    })?;
    drop(reader);
    file.set_len(cut).map_err(|e| Error::io(path, e))?;
    file.seek(SeekFrom::End(0)).map_err(|e| Error::io(path, e))?;
    Ok(file)
}

fn read_sweep(path: &Path, n: Option<usize>) -> Result<SweepReader<BufReader<File>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    SweepReader::new(BufReader::new(file), &path.display().to_string(), n)
}

fn cmd_analyze(input: &Path, out: &Path, n: Option<usize>, seed: u64) -> Result<()> {
    let reader = read_sweep(input, n)?;
    let side = reader.side();
    let mut summary = Summary::default();
    for rec in reader {
        summary.add(&rec?);
    }
    if summary.records.is_empty() {
        return Err(Error::parse(input.display().to_string(), 2, "sweep CSV has no records"));
    }
    let meta = Meta::new("analyze", seed).flag("input", input.display());
    let mut w = create(out)?;
    write_slopes(&mut w, &meta, &summary.slopes.rows()).map_err(|e| Error::io(out, e))?;
    let all: Vec<_> = summary.extremes.into_values().collect();
    print!("{}", extremes_report(&all, side));
    Ok(())
}

/// Graph and evaluator inputs shared by `optimize` and `compare`.
struct Setup {
    graph: DualGraph,
    plans: Option<PlanSet>,
    n_districts: usize,
}

impl Setup {
    fn new(search: &SearchArgs, eval: &EvalArgs, graph: Option<&Path>, districts: Option<usize>) -> Result<Setup> {
        if let Some(path) = graph {
            if eval.kind != EvalKind::Chain {
                return Err(Error::Validation("--graph needs --eval chain".into()));
            }
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let g = parse_edge_list(&text, &path.display().to_string())?;
            let n_districts = districts.expect("clap requires --districts with --graph");
            return Ok(Setup { graph: g, plans: None, n_districts });
        }
        check_side(search.n)?;
        let g = DualGraph::square(search.n)?;
        let plans = match eval.kind {
            EvalKind::Chain => None,
            _ => Some(load_plans(search.n, eval.plans.as_deref())?),
        };
        Ok(Setup { graph: g, plans, n_districts: search.n })
    }

    fn evaluator(&self, eval: &EvalArgs, seed: u64) -> Result<Evaluator<'_>> {
        Ok(match eval.kind {
            EvalKind::Exact => Evaluator::exact(self.plans.as_ref().expect("plans loaded"))?,
            EvalKind::Sampled => {
                let mode = match eval.sample_mode {
                    SampleKind::WithReplacement => SampleMode::WithReplacement,
                    SampleKind::FullPass => SampleMode::FullPass,
                };
                Evaluator::sampled(self.plans.as_ref().expect("plans loaded"), eval.sample_size, mode, seed)?
            }
            EvalKind::Chain => {
                let config = ChainConfig { steps: eval.steps, burn_in: eval.burn_in, thinning: eval.thin, seed };
                Evaluator::chain(&self.graph, self.n_districts, config)?
            }
        })
    }
}

fn parse_alg(name: &str) -> Result<Algorithm> {
    name.trim().parse::<Algorithm>().map_err(|e| Error::Validation(e.to_string()))
}

#[derive(Serialize)]
struct OptimizeReport<'a> {
    meta: &'a Meta,
    algorithm: &'static str,
    config: ConfigJson,
    eval: &'a EvalArgs,
    seed: u64,
    num: usize,
    best_bits_hex: String,
    best_score: f64,
    evaluations: usize,
}

#[derive(Serialize)]
struct ConfigJson {
    theta: f64,
    t0: f64,
    alpha: f64,
    theta_r: f64,
    n_swap: usize,
    k_max: usize,
    cool_every_step: bool,
    stall_limit: usize,
}

impl From<&OptimizerConfig> for ConfigJson {
    fn from(c: &OptimizerConfig) -> ConfigJson {
        ConfigJson {
            theta: c.theta,
            t0: c.t0,
            alpha: c.alpha,
            theta_r: c.theta_r,
            n_swap: c.n_swap,
            k_max: c.k_max,
            cool_every_step: c.cool_every_step,
            stall_limit: c.stall_limit,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_optimize(
    alg: &str,
    search: &SearchArgs,
    eval: &EvalArgs,
    graph: Option<&Path>,
    districts: Option<usize>,
    out: Option<&Path>,
    curve: Option<&Path>,
    seed: u64,
) -> Result<()> {
    let alg = parse_alg(alg)?;
    let setup = Setup::new(search, eval, graph, districts)?;
    let e = setup.evaluator(eval, seed)?;
    let cfg = search.config(seed);
    let result = alg.run(&e, &setup.graph, search.num, &cfg)?;
    let mut meta = eval.annotate(search.annotate(Meta::new("optimize", seed).flag("alg", alg))).flag("k_max", search.k_max);
    if let Some(p) = graph {
        meta = meta.flag("graph", p.display()).flag("districts", setup.n_districts);
    }
    let report = OptimizeReport {
        meta: &meta,
        algorithm: alg.name(),
        config: (&cfg).into(),
        eval,
        seed,
        num: search.num,
        best_bits_hex: bits_hex(result.best_distribution.bits(), setup.graph.k()),
        best_score: result.best_score,
        evaluations: result.evaluations(),
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Internal(e.to_string()))?;
    with_output(out, |w| writeln!(w, "{json}"))?;
    if let Some(p) = curve {
        with_output(Some(p), |w| {
            writeln!(w, "{}", meta.line())?;
            writeln!(w, "evaluation,best")?;
            for (i, b) in result.best_so_far.iter().enumerate() {
                writeln!(w, "{},{}", i + 1, decimal(*b))?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

enum KnownMax {
    None,
    FromSweep(PathBuf),
    Compute,
}

impl KnownMax {
    fn from_flags(exhaustive: Option<PathBuf>, compute: bool) -> KnownMax {
        match (exhaustive, compute) {
            (Some(p), _) => KnownMax::FromSweep(p),
            (None, true) => KnownMax::Compute,
            (None, false) => KnownMax::None,
        }
    }
}

fn max_from_sweep(path: &Path, n: usize, num: usize) -> Result<f64> {
    let mut best: Option<f64> = None;
    for rec in read_sweep(path, Some(n))? {
        let rec = rec?;
        if rec.num as usize == num {
            let e = rec.rep.expectation();
            best = Some(best.map_or(e, |b: f64| b.max(e)));
        }
    }
    best.ok_or_else(|| Error::Validation(format!("{}: no rows with num {num}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(
    algs: &[String],
    trials: usize,
    k_max_grid: &[usize],
    search: &SearchArgs,
    eval: &EvalArgs,
    known: KnownMax,
    out: Option<&Path>,
    seed: u64,
) -> Result<()> {
    let algorithms = algs.iter().map(|a| parse_alg(a)).collect::<Result<Vec<_>>>()?;
    let setup = Setup::new(search, eval, None, None)?;
    let e = setup.evaluator(eval, seed)?;
    let cfg = search.config(seed);
    let grid: Vec<String> = k_max_grid.iter().map(usize::to_string).collect();
    let names: Vec<&str> = algorithms.iter().map(|a| a.name()).collect();
    let mut meta = Meta::new("compare", seed).flag("algs", names.join(",")).flag("trials", trials);
    meta = eval.annotate(search.annotate(meta.flag("k_max_grid", grid.join(","))));
    let known_max = match known {
        KnownMax::None => None,
        KnownMax::FromSweep(p) => {
            meta = meta.flag("exhaustive", p.display());
            Some(max_from_sweep(&p, search.n, search.num)?)
        }
        KnownMax::Compute => {
            meta = meta.flag("compute_known_max", true);
            let plans = match &setup.plans {
                Some(p) => p.clone(),
                None => load_plans(search.n, eval.plans.as_deref())?,
            };
            Some(par::known_max(&setup.graph, &plans, search.num as u32)?)
        }
    };
    let points = par::compare(&algorithms, &e, &setup.graph, search.num, trials, k_max_grid, &cfg)?;
    with_output(out, |w| write_curves(w, &meta, &points, known_max))
}
