//! Command-line front end: node generation, subsampling, quality metrics,
//! multilevel solves and timing runs. Every command writes plain CSV/JSON files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::multilevel::{mlpre, solve_disk_problem, MlSettings, SolveReport};
use crate::nodeset::{read_nodes, write_atomic, write_nodes, NodeSet, Role, SortOrder};
use crate::problems::{generate_disk_nodes, DensityProfile, GeneratorParams, ProblemKind, TestProblem};
use crate::quality::{clr_sweep, ClrReport};
use crate::rbffd::StencilConfig;
use crate::subsample::{
    fit_factor, moving_front_indices, poisson_disk_indices, split_level, subsample_with_boundary_indices,
    weighted_indices, BoundaryMode, BoundaryPipelineParams, HierarchyParams, MovingFrontParams, PoissonDiskParams,
    WeightedParams,
};

#[derive(Debug, Parser)]
#[command(
    name = "nodethin",
    version,
    about = "Density-preserving node subsampling and multilevel RBF-FD solves"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// JSON file whose keys are used as flags (command line wins).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate variable-density nodes in the unit disk.
    Gen(GenArgs),
    /// Coarsen a node file.
    Subsample(SubsampleArgs),
    /// Comparative local regularity of a coarse set against its fine set.
    Metrics(MetricsArgs),
    /// Solve a disk test problem with the multilevel RBF-FD solver.
    Solve(SolveArgs),
    /// Time the subsamplers over a chain of sizes.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Poisson,
    Laplace,
}

impl From<ProblemArg> for ProblemKind {
    fn from(p: ProblemArg) -> Self {
        match p {
            ProblemArg::Poisson => ProblemKind::Poisson,
            ProblemArg::Laplace => ProblemKind::Laplace,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Mf,
    Pd,
    W,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Mf => "mf",
            Method::Pd => "pd",
            Method::W => "w",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryModeArg {
    Naive,
    Separate,
}

/// Density profile flags shared by `gen`, `solve` and `bench`.
#[derive(Debug, Clone, Args)]
pub struct ProfileArgs {
    /// Preset whose profile is used for unset spacing flags.
    #[arg(long, value_enum, default_value = "poisson")]
    pub problem: ProblemArg,
    #[arg(long)]
    pub rho1: Option<f64>,
    #[arg(long)]
    pub rho2: Option<f64>,
    #[arg(long)]
    pub d_lim: Option<f64>,
    #[arg(long)]
    pub d_bl: Option<f64>,
    /// Multiplies both spacings.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_nodes: Option<usize>,
}

impl ProfileArgs {
    fn profile(&self) -> Result<DensityProfile> {
        let base = match self.problem {
            ProblemArg::Poisson => DensityProfile::poisson_default(),
            ProblemArg::Laplace => DensityProfile::laplace_default(),
        };
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return Err(Error::Validation(format!("scale must be positive, got {}", self.scale)));
        }
        DensityProfile::new(
            self.rho1.unwrap_or(base.rho1) * self.scale,
            self.rho2.unwrap_or(base.rho2) * self.scale,
            self.d_lim.unwrap_or(base.d_lim),
            self.d_bl.unwrap_or(base.d_bl),
        )
    }

    fn generator(&self) -> GeneratorParams {
        let mut g = GeneratorParams::new(self.seed);
        if let Some(m) = self.max_nodes {
            g.max_nodes = m;
        }
        g
    }

    fn generate(&self) -> Result<(NodeSet, NodeSet)> {
        generate_disk_nodes(&self.profile()?, &self.generator())
    }
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct GenArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct SubsampleArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "mf")]
    pub method: Method,
    /// Coarsening factor (mf: elimination radius, pd: exclusion radius), in units
    /// of the nearest-neighbour distance.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Output size. Required for `w`; for `mf` and `pd` the factor is tuned to hit it.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sweep direction for `mf`, as `x,y`.
    #[arg(long, default_value = "0,1", value_parser = parse_direction)]
    pub direction: SortOrder,
    /// Reverse the sweep direction between levels.
    #[arg(long)]
    pub alternate: bool,
    /// Number of successive coarsening passes.
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    /// Treat boundary-role nodes apart from interior ones (`mf` only).
    #[arg(long, value_enum)]
    pub boundary_mode: Option<BoundaryModeArg>,
    /// Where to write the JSON summary (it is always printed).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    pub fine: PathBuf,
    pub coarse: PathBuf,
    #[arg(long, conflicts_with = "k_range")]
    pub k: Option<usize>,
    /// Inclusive range `a:b` of neighbour counts.
    #[arg(long, value_parser = parse_range)]
    pub k_range: Option<(usize, usize)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Polynomial degree of the Laplacian stencils.
    #[arg(long, default_value_t = 4)]
    pub m_l: u32,
    /// Minimum boundary nodes on the coarsest level (default 60 for Poisson, 120 for Laplace).
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long, default_value_t = 2)]
    pub nu1: usize,
    #[arg(long, default_value_t = 1)]
    pub nu2: usize,
    #[arg(long, default_value_t = 1e-16)]
    pub tol: f64,
    #[arg(long, default_value_t = 50)]
    pub i_max: usize,
    /// Interior node file; needs `--boundary` and replaces generation.
    #[arg(long, requires = "boundary")]
    pub domain: Option<PathBuf>,
    /// Boundary node file in curve order.
    #[arg(long, requires = "domain")]
    pub boundary: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write every level's operators in MatrixMarket format.
    #[arg(long)]
    pub export_operators: bool,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct BenchArgs {
    #[command(flatten)]
    pub profile: ProfileArgs,
    /// Fine node file; when absent a set of about `--fine-size` nodes is generated.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub fine_size: usize,
    /// Output sizes of successive transitions; each starts from the previous size.
    #[arg(long, value_delimiter = ',', default_value = "1000")]
    pub sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', value_enum, default_value = "mf,pd,w")]
    pub methods: Vec<Method>,
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_direction(s: &str) -> std::result::Result<SortOrder, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected x,y, got {s:?}"));
    }
    let x: f64 = parts[0].parse().map_err(|e| format!("{e}"))?;
    let y: f64 = parts[1].parse().map_err(|e| format!("{e}"))?;
    SortOrder::new([x, y]).map_err(|e| e.to_string())
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a > b {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok((a, b))
}

/// Parses `args` (program name first), merging a `--config` file if present, runs
/// the command and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<String> = args
        .into_iter()
        .map(|a| a.into().to_string_lossy().into_owned())
        .collect();
    let args = match expand_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("NODETHIN_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
    {
        if n > 0 {
            // a pool may already exist when called twice in one process
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Rewrites `prog [cmd] --config f.json rest...` to `prog cmd <flags from f> rest...`.
/// Object keys become `--key-name value` flags, `true` becomes a bare switch, and
/// `"command"` / `"args"` supply the subcommand and positional arguments.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let (path, consumed) = match args[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => match args.get(pos + 1) {
            Some(p) => (p.clone(), 2),
            None => return Err(Error::Validation("--config needs a file".into())),
        },
    };
    let mut rest: Vec<String> = args[1..pos].iter().chain(&args[pos + consumed..]).cloned().collect();
    let text = std::fs::read_to_string(&path)?;
    let map = match serde_json::from_str::<Value>(&text)? {
        Value::Object(m) => m,
        _ => return Err(Error::Validation(format!("{path}: config must be a JSON object"))),
    };

    let commands = ["gen", "subsample", "metrics", "solve", "bench"];
    let command = if rest.first().is_some_and(|a| commands.contains(&a.as_str())) {
        rest.remove(0)
    } else {
        match map.get("command") {
            Some(Value::String(c)) => c.clone(),
            _ => return Err(Error::Validation(format!("{path}: no command given"))),
        }
    };

    let mut out = vec![args[0].clone(), command];
    for (key, value) in &map {
        if key == "command" || key == "args" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => out.push(flag),
            Value::Array(items) => {
                out.push(flag);
                out.push(items.iter().map(scalar).collect::<Result<Vec<_>>>()?.join(","));
            }
            v => {
                out.push(flag);
                out.push(scalar(v)?);
            }
        }
    }
    if let Some(pos_args) = map.get("args") {
        let Value::Array(items) = pos_args else {
            return Err(Error::Validation(format!("{path}: \"args\" must be an array")));
        };
        for v in items {
            out.push(scalar(v)?);
        }
    }
    out.extend(rest);
    Ok(out)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        other => Err(Error::Validation(format!("unsupported config value {other}"))),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Subsample(a) => cmd_subsample(&a),
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    let (domain, boundary) = a.profile.generate()?;
    ensure_dir(&a.out_dir)?;
    write_nodes(&domain, a.out_dir.join("domain.csv"))?;
    write_nodes(&boundary, a.out_dir.join("boundary.csv"))?;
    println!("domain: {} nodes, boundary: {} nodes", domain.len(), boundary.len());
    Ok(())
}

#[derive(Debug, Serialize)]
struct SubsampleSummary {
    method: &'static str,
    input: String,
    output: String,
    n_in: usize,
    n_out: usize,
    level_sizes: Vec<usize>,
    c: Option<f64>,
    seconds: f64,
}

fn mf_params(a: &SubsampleArgs, c: f64, order: SortOrder) -> Result<MovingFrontParams> {
    MovingFrontParams::new(c, a.k, order)
}

/// One pass of the selected method; returns indices into `nodes`.
fn subsample_once(a: &SubsampleArgs, nodes: &NodeSet, c: f64, order: SortOrder) -> Result<Vec<usize>> {
    match a.method {
        Method::Mf => {
            let mf = mf_params(a, c, order)?;
            match a.boundary_mode {
                None => moving_front_indices(nodes, &mf),
                Some(mode) => {
                    let interior: Vec<usize> = (0..nodes.len()).filter(|&i| nodes.role(i) == Role::Interior).collect();
                    let on_boundary: Vec<usize> =
                        (0..nodes.len()).filter(|&i| nodes.role(i) == Role::Boundary).collect();
                    let (domain, boundary) = split_level(nodes);
                    let pipeline = BoundaryPipelineParams {
                        mode: match mode {
                            BoundaryModeArg::Naive => BoundaryMode::Naive,
                            BoundaryModeArg::Separate => BoundaryMode::Separate,
                        },
                        ..BoundaryPipelineParams::default()
                    };
                    let sel = subsample_with_boundary_indices(&domain, &boundary, &pipeline, &mf)?;
                    Ok(sel
                        .domain
                        .iter()
                        .map(|&i| interior[i])
                        .chain(sel.boundary.iter().map(|&i| on_boundary[i]))
                        .collect())
                }
            }
        }
        Method::Pd => poisson_disk_indices(nodes, &PoissonDiskParams { c, seed: a.seed }),
        Method::W => {
            let target = a
                .target
                .ok_or_else(|| Error::Validation("method w needs --target".into()))?;
            let mut p = WeightedParams::new(target);
            p.k = a.k;
            weighted_indices(nodes, &p)
        }
    }
}

fn default_c(method: Method) -> f64 {
    match method {
        Method::Pd => 1.0,
        _ => 1.5,
    }
}

pub fn cmd_subsample(a: &SubsampleArgs) -> Result<()> {
    if a.levels < 1 {
        return Err(Error::Validation("--levels must be at least 1".into()));
    }
    if a.boundary_mode.is_some() && a.method != Method::Mf {
        return Err(Error::Validation("--boundary-mode applies to method mf only".into()));
    }
    if a.method == Method::W && a.levels > 1 {
        return Err(Error::Validation("method w takes a single level".into()));
    }
    let input = read_nodes(&a.input)?;
    if let Some(t) = a.target {
        if t > input.len() {
            return Err(Error::Size {
                what: "target exceeds the input node count",
                requested: t,
                available: input.len(),
            });
        }
    }
    let t0 = Instant::now();
    let mut c = a.c.unwrap_or(default_c(a.method));
    if let (Some(target), Method::Mf | Method::Pd) = (a.target, a.method) {
        let lo = if a.method == Method::Mf { 1.0 + 1e-9 } else { 1e-3 };
        let tuned = fit_factor(target, 0.0, lo, 20.0, 60, |c| {
            Ok(subsample_once(a, &input, c, a.direction)?.len())
        })?;
        if tuned.count != target {
            eprintln!(
                "warning: no factor gives exactly {target} nodes; closest is {} at c = {}",
                tuned.count, tuned.factor
            );
        }
        c = tuned.factor;
    }
    let mut current = input.clone();
    let mut sizes = vec![input.len()];
    let mut order = a.direction;
    for _ in 0..a.levels {
        let kept = subsample_once(a, &current, c, order)?;
        current = current.select(&kept);
        sizes.push(current.len());
        if a.alternate {
            order = order.reversed();
        }
    }
    let seconds = t0.elapsed().as_secs_f64();
    write_nodes(&current, &a.output)?;
    let summary = SubsampleSummary {
        method: a.method.name(),
        input: a.input.display().to_string(),
        output: a.output.display().to_string(),
        n_in: input.len(),
        n_out: current.len(),
        level_sizes: sizes,
        c: (a.method != Method::W).then_some(c),
        seconds,
    };
    println!("{}", serde_json::to_string(&summary)?);
    if let Some(path) = &a.summary {
        write_json(&summary, path)?;
    }
    Ok(())
}

pub fn cmd_metrics(a: &MetricsArgs) -> Result<()> {
    let fine = read_nodes(&a.fine)?;
    let coarse = read_nodes(&a.coarse)?;
    let (lo, hi) = match (a.k, a.k_range) {
        (_, Some(r)) => r,
        (Some(k), None) => (k, k),
        (None, None) => (10, 10),
    };
    let reports: Vec<ClrReport> = clr_sweep(&fine, &coarse, lo..=hi)?;
    let text = serde_json::to_string_pretty(&reports)? + "\n";
    match &a.out {
        Some(path) => write_atomic(path, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ErrorNorms {
    max_relative: f64,
    max_abs: f64,
    l2: f64,
}

#[derive(Debug, Serialize)]
struct SolveOutput<'a> {
    problem: ProblemKind,
    m_l: u32,
    nodes: usize,
    #[serde(flatten)]
    report: &'a SolveReport,
    error_norms: Option<ErrorNorms>,
}

fn error_norms(u: &[f64], exact: &[f64]) -> ErrorNorms {
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let max_abs = u.iter().zip(exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let l2 = u.iter().zip(exact).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    ErrorNorms {
        max_relative: if scale > 0.0 { max_abs / scale } else { max_abs },
        max_abs,
        l2,
    }
}

fn solution_csv(nodes: &NodeSet, u: &[f64], exact: &[f64]) -> String {
    use std::fmt::Write;
    let mut s = String::from("x,y,role,u,u_exact\n");
    for i in 0..nodes.len() {
        let p = nodes.point(i);
        let _ = writeln!(
            s,
            "{:.17e},{:.17e},{},{:.17e},{:.17e}",
            p[0],
            p[1],
            nodes.role(i).as_str(),
            u[i],
            exact[i]
        );
    }
    s
}

pub fn cmd_solve(a: &SolveArgs) -> Result<()> {
    if a.m_l == 0 {
        return Err(Error::Validation("--m-l must be at least 1".into()));
    }
    if !(2..=8).contains(&a.m_l) {
        eprintln!("warning: --m-l {} is outside the tested range 2..8", a.m_l);
    }
    let kind: ProblemKind = a.profile.problem.into();
    let problem = TestProblem { kind };
    let n_min = a.n_min.unwrap_or(match kind {
        ProblemKind::Poisson => 60,
        ProblemKind::Laplace => 120,
    });
    let settings = MlSettings {
        nu1: a.nu1,
        nu2: a.nu2,
        i_max: a.i_max,
        tol: a.tol,
    };
    settings.validate()?;
    let (domain, boundary) = match (&a.domain, &a.boundary) {
        (Some(d), Some(b)) => (read_nodes(d)?, read_nodes(b)?),
        _ => a.profile.generate()?,
    };
    let hierarchy = HierarchyParams::new(n_min);
    ensure_dir(&a.out_dir)?;

    if a.export_operators {
        let ops = mlpre(&domain, &boundary, &hierarchy, &StencilConfig::for_laplacian(a.m_l))?;
        for j in 0..ops.depth() {
            ops.laplacian(j)
                .write_matrix_market(a.out_dir.join(format!("L{j}.mtx")))?;
            if j + 1 < ops.depth() {
                ops.interpolation(j)
                    .write_matrix_market(a.out_dir.join(format!("I{j}.mtx")))?;
                ops.restriction(j)
                    .write_matrix_market(a.out_dir.join(format!("R{j}.mtx")))?;
            }
        }
    }

    let sol = match solve_disk_problem(&domain, &boundary, &problem, a.m_l, &hierarchy, &settings) {
        Ok(s) => s,
        Err(Error::Divergence { report }) => {
            // keep the history of a failed run for inspection
            report.write_json(a.out_dir.join("report.json"))?;
            report.write_residual_csv(a.out_dir.join("residuals.csv"))?;
            return Err(Error::Divergence { report });
        }
        Err(e) => return Err(e),
    };
    let out = SolveOutput {
        problem: kind,
        m_l: a.m_l,
        nodes: sol.nodes.len(),
        report: &sol.report,
        error_norms: Some(error_norms(&sol.u, &sol.u_exact)),
    };
    write_atomic(
        &a.out_dir.join("solution.csv"),
        solution_csv(&sol.nodes, &sol.u, &sol.u_exact).as_bytes(),
    )?;
    write_json(&out, &a.out_dir.join("report.json"))?;
    sol.report.write_residual_csv(a.out_dir.join("residuals.csv"))?;
    println!(
        "{} nodes, {} levels, {} V-cycles ({:?}), relres {:.3e}, max rel error {:.3e}",
        sol.nodes.len(),
        sol.report.level_sizes.len(),
        sol.report.iterations,
        sol.report.status,
        sol.report.final_relative_residual().unwrap_or(0.0),
        out.error_norms.as_ref().map_or(f64::NAN, |e| e.max_relative)
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: &'static str,
    pub n_in: usize,
    pub n_out: usize,
    /// Median over the repetitions.
    pub seconds: f64,
    pub mean: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times each method on every transition `sizes[i-1] -> sizes[i]` (the first
/// transition starts from `fine`). Factors are tuned to the target size once,
/// outside the timed runs; the next transition starts from the moving-front output.
pub fn bench_chain(fine: &NodeSet, sizes: &[usize], methods: &[Method], repetitions: usize) -> Result<Vec<BenchRow>> {
    if repetitions < 1 {
        return Err(Error::Validation("repetitions must be at least 1".into()));
    }
    let mut rows = Vec::new();
    let mut current = fine.clone();
    for &target in sizes {
        if target > current.len() {
            return Err(Error::Size {
                what: "bench size exceeds the previous size",
                requested: target,
                available: current.len(),
            });
        }
        let mf_c = fit_factor(target, 0.0, 1.0 + 1e-9, 20.0, 60, |c| {
            Ok(moving_front_indices(&current, &MovingFrontParams::default().with_c(c))?.len())
        })?
        .factor;
        let mut next = None;
        let cur = &current;
        for &m in methods {
            let run: Box<dyn Fn() -> Result<Vec<usize>>> = match m {
                Method::Mf => {
                    let p = MovingFrontParams::default().with_c(mf_c);
                    Box::new(move || moving_front_indices(cur, &p))
                }
                Method::Pd => {
                    let c = fit_factor(target, 0.0, 1e-3, 20.0, 60, |c| {
                        Ok(poisson_disk_indices(cur, &PoissonDiskParams { c, seed: 0 })?.len())
                    })?
                    .factor;
                    let p = PoissonDiskParams { c, seed: 0 };
                    Box::new(move || poisson_disk_indices(cur, &p))
                }
                Method::W => {
                    let p = WeightedParams::new(target);
                    Box::new(move || weighted_indices(cur, &p))
                }
            };
            let mut times = Vec::with_capacity(repetitions);
            let mut n_out = 0;
            for _ in 0..repetitions {
                let t = Instant::now();
                let kept = run()?;
                times.push(t.elapsed().as_secs_f64());
                n_out = kept.len();
                if m == Method::Mf {
                    next = Some(kept);
                }
            }
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            rows.push(BenchRow {
                method: m.name(),
                n_in: current.len(),
                n_out,
                seconds: median(times),
                mean,
            });
        }
        let kept = match next {
            Some(k) => k,
            None => moving_front_indices(&current, &MovingFrontParams::default().with_c(mf_c))?,
        };
        current = current.select(&kept);
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    use std::fmt::Write;
    let mut s = String::from("method,n_in,n_out,seconds,mean\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{:.9},{:.9}", r.method, r.n_in, r.n_out, r.seconds, r.mean);
    }
    s
}

pub fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let fine = match &a.input {
        Some(path) => read_nodes(path)?,
        None => {
            if a.fine_size < 1 {
                return Err(Error::Validation("--fine-size must be positive".into()));
            }
            let mut profile = a.profile.clone();
            let est = profile.profile()?.estimated_count().max(1);
            profile.scale *= (est as f64 / a.fine_size as f64).sqrt();
            let (d, b) = profile.generate()?;
            d.concat(&b)?.with_all_roles(Role::Interior)
        }
    };
    let rows = bench_chain(&fine, &a.sizes, &a.methods, a.repetitions)?;
    let csv = bench_csv(&rows);
    match &a.out {
        Some(path) => write_atomic(path, csv.as_bytes())?,
        None => print!("{csv}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn config_keys_become_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(
            &path,
            r#"{"command":"gen","rho1":0.01,"d_lim":0.1,"alternate":true,"skip":false,"args":["a.csv"]}"#,
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let out = expand_config(s(&["nodethin", "--config", p, "--seed", "4"])).unwrap();
        assert_eq!(
            out,
            s(&[
                "nodethin",
                "gen",
                "--alternate",
                "--d-lim",
                "0.1",
                "--rho1",
                "0.01",
                "a.csv",
                "--seed",
                "4"
            ])
        );
        // an explicit subcommand takes precedence over the file's
        let out = expand_config(s(&["nodethin", "solve", &format!("--config={p}")])).unwrap();
        assert_eq!(out[1], "solve");
    }

    #[test]
    fn command_line_overrides_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"command":"gen","seed":1}"#).unwrap();
        let args = expand_config(s(&["nodethin", "--config", path.to_str().unwrap(), "--seed", "9"])).unwrap();
        let cli = Cli::try_parse_from(args).unwrap();
        match cli.command {
            Command::Gen(g) => assert_eq!(g.profile.seed, 9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn flag_parsers() {
        assert_eq!(parse_range("2:14"), Ok((2, 14)));
        assert!(parse_range("5:2").is_err());
        assert_eq!(parse_direction("1,0").unwrap().direction(), [1.0, 0.0]);
        assert!(parse_direction("0,0").is_err());
    }

    #[test]
    fn error_norms_of_exact_solution_vanish() {
        let e = error_norms(&[1.0, -2.0], &[1.0, -2.0]);
        assert_eq!((e.max_abs, e.l2, e.max_relative), (0.0, 0.0, 0.0));
        let e = error_norms(&[1.5, -2.0], &[1.0, -2.0]);
        assert_eq!(e.max_relative, 0.25);
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
