//! Batch front end: graph generation, spectra, solves, exhaustion runs and audits.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use grapde::energy::{Energy, FunctionPair, ModelSpec, VertexField};
use grapde::graph::{generate, DomainSpec, GraphFamily, Lattice, WeightSpec, WeightedGraph};
use grapde::nonlinearity::HypothesisReport;
use grapde::solver::{
    exhaustion_solve, minimize_direct, mountain_pass, newton_refine, SolveConfig, SolveReport, Status, TodaParams,
};
use grapde::spectral::{cstar_with, eigenspace_power_identity, first_eigenvalue, EigenspaceConstants, Exponent};
use grapde::verify::{embedding_audit, smp_check, solution_audit, AuditSpace, AuditTolerances, CheckReport};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use output::{emit, envelope, with_manifest, write_csv, Outcome, Recorder};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] grapde::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Usage(String),
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "grapde", version, about = "Nonlinear elliptic systems on weighted graphs")]
struct Cli {
    /// Leave wall-clock timing out of the manifest so identical runs are byte-identical.
    #[arg(long, global = true)]
    reproducible: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph from a standard family.
    Gen(GenArgs),
    /// First positive eigenvalue, its eigenspace and the embedding constants.
    Spectrum(SpectrumArgs),
    /// Solve one of the variational systems.
    Solve(SolveArgs),
    /// Solve the exponential system on growing balls of a lattice.
    Exhaust(ExhaustArgs),
    /// Audit a solution, the maximum principle or an embedding inequality.
    Check(CheckArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyArg {
    Path,
    Cycle,
    Complete,
    Star,
    Grid,
    Random,
}

#[derive(Args)]
struct GenArgs {
    /// Graph family.
    #[arg(long)]
    family: FamilyArg,
    /// Vertex count, or row count for grids.
    #[arg(long)]
    n: usize,
    /// Column count for grids; defaults to `n`.
    #[arg(long)]
    cols: Option<usize>,
    /// Edge probability for random graphs.
    #[arg(long, default_value_t = 0.3)]
    edge_prob: f64,
    /// unit, constant:W or uniform:LO:HI.
    #[arg(long, default_value = "unit", value_parser = parse_weights)]
    weights: WeightSpec,
    /// Seed for random graphs and random weights.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output graph JSON; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Graph JSON or edge list.
    #[arg(long)]
    graph: PathBuf,
    /// Gradient order for the embedding constants.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Target Lebesgue exponent.
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    /// Vertex from which distances enter the constants.
    #[arg(long, default_value_t = 0)]
    origin: usize,
    /// Seed for the eigenspace identity samples.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Rescale weights so the total measure is 1.
    #[arg(long)]
    unit_volume: bool,
    /// Output report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
enum MethodArg {
    /// Direct minimization for the eigenspace and quadratic models, mountain pass otherwise.
    Auto,
    Direct,
    MountainPass,
    Newton,
}

#[derive(Args)]
struct SolveArgs {
    /// Graph JSON or edge list.
    #[arg(long)]
    graph: PathBuf,
    /// Model JSON {"tag", "params", "nonlinearity"}.
    #[arg(long)]
    model: PathBuf,
    /// Domain JSON {"omega": [ids]}, required by the Dirichlet models.
    #[arg(long)]
    omega: Option<PathBuf>,
    /// Solver configuration JSON; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Solution method.
    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    method: MethodArg,
    /// Starting pair {"u": [...], "v": [...]} for Newton.
    #[arg(long)]
    start: Option<PathBuf>,
    /// Gradient-norm tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seed for random starts and ray directions.
    #[arg(long)]
    seed: Option<u64>,
    /// Keep energy and gradient traces in the report.
    #[arg(long)]
    trace: bool,
    /// Rescale weights so the total measure is 1.
    #[arg(long)]
    unit_volume: bool,
    /// Also write vertex,u,v,residual_u,residual_v as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Output report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LatticeArg {
    Path,
    Grid,
}

#[derive(Args)]
struct ExhaustArgs {
    /// Lattice whose balls around the origin are solved on.
    #[arg(long)]
    family: LatticeArg,
    /// Largest ball radius.
    #[arg(long = "K")]
    k: usize,
    /// Comma-separated vertex labels, e.g. -1,0,1 or 0:0,1:0.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    window: Vec<String>,
    /// Coupling strength of the first equation.
    #[arg(long, default_value_t = 1.0)]
    phi1: f64,
    /// Coupling strength of the second equation.
    #[arg(long, default_value_t = 1.0)]
    phi2: f64,
    /// Gradient order of the u energy.
    #[arg(long, default_value_t = 1)]
    order_u: usize,
    /// Gradient order of the v energy.
    #[arg(long, default_value_t = 1)]
    order_v: usize,
    /// Gradient-norm tolerance per ball.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap per ball.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum CheckKind {
    Smp,
    Embedding,
    Solution,
}

#[derive(Args)]
struct CheckArgs {
    /// Which audit to run.
    #[arg(long)]
    what: CheckKind,
    /// A solve report, or for smp a file {"u", "v", "h1", "h2", "p", "q"}.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Overrides the graph path recorded in a solve report.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Overrides the domain path recorded in a solve report.
    #[arg(long)]
    omega: Option<PathBuf>,
    /// Gradient order of the eigenspace for embedding audits.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Target exponent; a number or "inf".
    #[arg(long, default_value = "2", value_parser = parse_exponent)]
    q: Exponent,
    /// Random eigenspace elements per embedding audit.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Seed for the embedding samples.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Residual tolerance for solution audits.
    #[arg(long)]
    tol: Option<f64>,
    /// Output report; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_weights(s: &str) -> std::result::Result<WeightSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    match parts.as_slice() {
        ["unit"] => Ok(WeightSpec::Unit),
        ["constant", w] => Ok(WeightSpec::Constant(num(w)?)),
        ["uniform", lo, hi] => Ok(WeightSpec::Uniform(num(lo)?, num(hi)?)),
        _ => Err("expected unit, constant:W or uniform:LO:HI".into()),
    }
}

fn parse_exponent(s: &str) -> std::result::Result<Exponent, String> {
    match s {
        "inf" | "infinity" => Ok(Exponent::Infinity),
        _ => s.parse().map(Exponent::Finite).map_err(|e| format!("{s:?}: {e}")),
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| CliError::Json {
        path: path.into(),
        source,
    })
}

fn load_graph(path: &Path, unit_volume: bool) -> CliResult<WeightedGraph> {
    let g = match WeightedGraph::read(path) {
        Err(grapde::Error::Io(source)) => {
            return Err(CliError::Io {
                path: path.into(),
                source,
            })
        }
        Err(grapde::Error::Json(source)) => {
            return Err(CliError::Json {
                path: path.into(),
                source,
            })
        }
        other => other?,
    };
    Ok(if unit_volume { g.with_unit_volume()? } else { g })
}

fn load_domain(g: &WeightedGraph, path: Option<&Path>) -> CliResult<Option<DomainSpec>> {
    path.map(|p| {
        DomainSpec::from_json(g, &read_text(p)?).map_err(|e| match e {
            grapde::Error::Json(source) => CliError::Json { path: p.into(), source },
            e => e.into(),
        })
    })
    .transpose()
}

fn write(doc: &Value, out: Option<&Path>) -> CliResult<()> {
    emit(doc, out).map_err(|source| CliError::Io {
        path: out.map(Into::into).unwrap_or_else(|| "<stdout>".into()),
        source,
    })
}

fn gen(args: GenArgs, rec: Recorder) -> CliResult<Outcome> {
    let family = match args.family {
        FamilyArg::Path => GraphFamily::Path(args.n),
        FamilyArg::Cycle => GraphFamily::Cycle(args.n),
        FamilyArg::Complete => GraphFamily::Complete(args.n),
        FamilyArg::Star => GraphFamily::Star(args.n),
        FamilyArg::Grid => GraphFamily::Grid(args.n, args.cols.unwrap_or(args.n)),
        FamilyArg::Random => GraphFamily::RandomConnected(args.n, args.edge_prob),
    };
    let g = generate(family, args.weights, args.seed)?;
    let mut rec = rec;
    rec.config(serde_json::json!({ "family": family, "weights": args.weights }));
    rec.seed(args.seed);
    let Value::Object(doc) = serde_json::from_str(&g.to_json()).expect("graph JSON is an object") else {
        unreachable!("graph JSON is an object")
    };
    write(&with_manifest(doc, rec.finish()), args.out.as_deref())?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct NamedCheck {
    name: String,
    observed: f64,
    tolerance: f64,
    passed: bool,
}

impl NamedCheck {
    fn new(name: impl Into<String>, observed: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            observed,
            tolerance,
            passed: observed <= tolerance,
        }
    }
}

#[derive(Serialize)]
struct SpectrumReport {
    lambda1: f64,
    rayleigh_value: f64,
    multiplicity: usize,
    basis: Vec<Vec<f64>>,
    cstar: EigenspaceConstants,
    checks: Vec<NamedCheck>,
}

fn spectrum(args: SpectrumArgs, mut rec: Recorder) -> CliResult<Outcome> {
    let g = load_graph(&args.graph, args.unit_volume)?;
    rec.input("graph", &args.graph);
    rec.config(serde_json::json!({ "m": args.m, "q": args.q, "origin": args.origin, "unit_volume": args.unit_volume }));
    rec.seed(args.seed);
    let eig = first_eigenvalue(&g)?;
    let cstar = cstar_with(&g, eig.lambda1, args.m, args.q, args.origin)?;
    let mut checks = vec![NamedCheck::new(
        "dense and Rayleigh eigenvalues agree (relative)",
        (eig.lambda1 - eig.rayleigh_value).abs() / eig.lambda1,
        1e-8,
    )];
    for m in 1..=3 {
        let id = eigenspace_power_identity(&g, &eig, m, 16, args.seed)?;
        checks.push(NamedCheck::new(
            format!("gradient power identity, m = {m} (relative)"),
            id.max_relative_deviation,
            1e-10,
        ));
        if m == 1 {
            checks.push(NamedCheck::new("eigenfunctions have zero mean", id.max_abs_mean, 1e-10));
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    let report = SpectrumReport {
        lambda1: eig.lambda1,
        rayleigh_value: eig.rayleigh_value,
        multiplicity: eig.multiplicity,
        basis: eig.basis,
        cstar,
        checks,
    };
    write(&envelope(rec.finish(), report), args.out.as_deref())?;
    Ok(if passed { Outcome::Success } else { Outcome::Flagged })
}

#[derive(Serialize, Deserialize)]
struct SolveOutput {
    /// The model file as given, so audits can rebuild the energy.
    model_spec: Value,
    model: Value,
    omega: Option<Vec<usize>>,
    hypotheses: Option<Value>,
    result: SolveReport,
}

fn solve(args: SolveArgs, mut rec: Recorder) -> CliResult<Outcome> {
    let g = load_graph(&args.graph, args.unit_volume)?;
    let spec_text = read_text(&args.model)?;
    let spec = ModelSpec::from_json(&spec_text)?;
    let spec_value: Value = serde_json::from_str(&spec_text).expect("model text already parsed");
    let domain = load_domain(&g, args.omega.as_deref())?;
    let mut cfg: SolveConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => SolveConfig::default(),
    };
    if let Some(t) = args.tol {
        cfg.grad_tol = t;
    }
    if let Some(n) = args.max_iter {
        cfg.max_iter = n;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    rec.input("graph", &args.graph);
    rec.input("model", &args.model);
    rec.input("omega", &args.omega);
    rec.input("start", &args.start);
    rec.input("unit_volume", args.unit_volume);
    rec.config(serde_json::json!({ "solver": cfg, "method": args.method, "trace": args.trace }));
    rec.seed(cfg.seed);

    let energy = Energy::new(&g, spec.resolve()?, domain)?;
    let hypotheses: Option<HypothesisReport> = energy.hypotheses().transpose()?;
    let method = match args.method {
        MethodArg::Auto if args.start.is_some() => MethodArg::Newton,
        MethodArg::Auto => match energy.model() {
            grapde::energy::EnergyModel::Toda { .. } | grapde::energy::EnergyModel::Quadratic => MethodArg::Direct,
            _ => MethodArg::MountainPass,
        },
        m => m,
    };
    let mut report = match method {
        MethodArg::Direct => minimize_direct(&energy, &cfg)?,
        MethodArg::MountainPass => mountain_pass(&energy, &cfg)?,
        MethodArg::Newton => {
            let path = args
                .start
                .as_deref()
                .ok_or_else(|| CliError::Usage("--method newton needs --start".into()))?;
            let start: FunctionPair = read_json(path)?;
            newton_refine(&energy, &start, &cfg)?
        }
        MethodArg::Auto => unreachable!("resolved above"),
    };
    if !args.trace {
        report.energy_trace.clear();
        report.grad_norm_trace.clear();
    }
    if let Some(path) = &args.csv {
        write_csv(path, &report.solution, &report.el_residual).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?;
    }
    let hyp_ok = hypotheses.as_ref().is_none_or(HypothesisReport::passed);
    let outcome = if report.status == Status::Converged && hyp_ok {
        Outcome::Success
    } else {
        Outcome::Flagged
    };
    let out = SolveOutput {
        model_spec: spec_value,
        model: serde_json::to_value(energy.model()).expect("serializable model"),
        omega: energy.domain().map(|d| d.omega().to_vec()),
        hypotheses: hypotheses.map(|h| serde_json::to_value(h).expect("serializable hypotheses")),
        result: report,
    };
    write(&envelope(rec.finish(), out), args.out.as_deref())?;
    Ok(outcome)
}

fn exhaust(args: ExhaustArgs, mut rec: Recorder) -> CliResult<Outcome> {
    let lattice = match args.family {
        LatticeArg::Path => Lattice::Path,
        LatticeArg::Grid => Lattice::Grid,
    };
    let window = if args.window.is_empty() {
        vec![match lattice {
            Lattice::Path => "0".to_string(),
            Lattice::Grid => "0:0".to_string(),
        }]
    } else {
        args.window.clone()
    };
    let params = TodaParams {
        phi1: args.phi1,
        phi2: args.phi2,
        m: args.order_u,
        n: args.order_v,
    };
    let mut cfg = SolveConfig::default();
    if let Some(t) = args.tol {
        cfg.grad_tol = t;
    }
    if let Some(n) = args.max_iter {
        cfg.max_iter = n;
    }
    rec.config(
        serde_json::json!({ "family": args.family, "K": args.k, "window": window, "params": params, "solver": cfg }),
    );
    let report = exhaustion_solve(lattice, params, args.k, &window, &cfg)?;
    let ok = report.balls.iter().all(|b| b.status == Status::Converged);
    write(&envelope(rec.finish(), report), args.out.as_deref())?;
    Ok(if ok { Outcome::Success } else { Outcome::Flagged })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SmpInput {
    u: Vec<f64>,
    v: Vec<f64>,
    #[serde(default = "zero_field")]
    h1: VertexField,
    #[serde(default = "zero_field")]
    h2: VertexField,
    #[serde(default = "two")]
    p: f64,
    #[serde(default = "two")]
    q: f64,
}

fn zero_field() -> VertexField {
    VertexField::Constant(0.0)
}

fn two() -> f64 {
    2.0
}

/// A solve output file with the graph and domain it was computed on.
struct LoadedSolve {
    graph: WeightedGraph,
    domain: Option<DomainSpec>,
    output: SolveOutput,
}

fn load_solve(doc: Value, args: &CheckArgs, path: &Path) -> CliResult<LoadedSolve> {
    let recorded = |key: &str| doc["manifest"]["inputs"][key].as_str().map(PathBuf::from);
    let graph_path = args
        .graph
        .clone()
        .or_else(|| recorded("graph"))
        .ok_or_else(|| CliError::Usage(format!("{}: no graph path recorded; pass --graph", path.display())))?;
    let unit_volume = doc["manifest"]["inputs"]["unit_volume"].as_bool().unwrap_or(false);
    let graph = load_graph(&graph_path, unit_volume)?;
    let output: SolveOutput = serde_json::from_value(doc["report"].clone()).map_err(|source| CliError::Json {
        path: path.into(),
        source,
    })?;
    let domain = match (&args.omega, &output.omega) {
        (Some(p), _) => load_domain(&graph, Some(p))?,
        (None, Some(omega)) => Some(DomainSpec::new(&graph, omega)?),
        (None, None) => None,
    };
    Ok(LoadedSolve { graph, domain, output })
}

fn check(args: CheckArgs, mut rec: Recorder) -> CliResult<Outcome> {
    rec.input("in", &args.input);
    rec.input("graph", &args.graph);
    rec.input("omega", &args.omega);
    rec.config(
        serde_json::json!({ "what": args.what, "m": args.m, "q": args.q, "samples": args.samples, "tol": args.tol }),
    );
    rec.seed(args.seed);
    let need_input = || {
        args.input
            .as_deref()
            .ok_or_else(|| CliError::Usage("--in is required for this check".into()))
    };
    let report: CheckReport = match args.what {
        CheckKind::Embedding => {
            let path = args
                .graph
                .as_deref()
                .ok_or_else(|| CliError::Usage("embedding check needs --graph".into()))?;
            let g = load_graph(path, false)?;
            let space = AuditSpace::Eigenspace { m: args.m, origin: 0 };
            embedding_audit(&g, &space, args.q, args.samples, args.seed)?
        }
        CheckKind::Solution => {
            let path = need_input()?;
            let loaded = load_solve(read_json(path)?, &args, path)?;
            let spec = ModelSpec::from_json(&loaded.output.model_spec.to_string())?;
            let energy = Energy::new(&loaded.graph, spec.resolve()?, loaded.domain)?;
            let tol = AuditTolerances {
                residual: args.tol.unwrap_or(AuditTolerances::default().residual),
                ..Default::default()
            };
            solution_audit(&energy, &loaded.output.result, tol)?
        }
        CheckKind::Smp => {
            let path = need_input()?;
            let doc: Value = read_json(path)?;
            if doc.get("report").is_some() {
                let loaded = load_solve(doc, &args, path)?;
                let n = loaded.graph.vertex_count();
                let model = &loaded.output.model;
                let params = &model["params"];
                let (h, p, q) = match model["tag"].as_str() {
                    Some("J6_global") => (params["h"].clone(), 2.0, 2.0),
                    Some("J7_plap_global") => (
                        params["h"].clone(),
                        params["p"].as_f64().unwrap_or(2.0),
                        params["q"].as_f64().unwrap_or(2.0),
                    ),
                    Some("J3_dirichlet") => (Value::from(0.0), 2.0, 2.0),
                    Some("J4_plap") => (
                        Value::from(0.0),
                        params["p"].as_f64().unwrap_or(2.0),
                        params["q"].as_f64().unwrap_or(2.0),
                    ),
                    other => {
                        return Err(CliError::Usage(format!(
                            "the maximum principle check covers first-order models, not {}",
                            other.unwrap_or("unknown")
                        )))
                    }
                };
                let h: VertexField = serde_json::from_value(h).map_err(|source| CliError::Json {
                    path: path.into(),
                    source,
                })?;
                let h = h.resolve(n)?;
                let s = &loaded.output.result.solution;
                smp_check(&loaded.graph, &s.u, &s.v, &h, &h, p, q)?
            } else {
                let input: SmpInput = serde_json::from_value(doc).map_err(|source| CliError::Json {
                    path: path.into(),
                    source,
                })?;
                let gpath = args
                    .graph
                    .as_deref()
                    .ok_or_else(|| CliError::Usage("smp check needs --graph".into()))?;
                let g = load_graph(gpath, false)?;
                let n = g.vertex_count();
                smp_check(
                    &g,
                    &input.u,
                    &input.v,
                    &input.h1.resolve(n)?,
                    &input.h2.resolve(n)?,
                    input.p,
                    input.q,
                )?
            }
        }
    };
    let outcome = if report.passed() {
        Outcome::Success
    } else {
        Outcome::Flagged
    };
    write(&envelope(rec.finish(), report), args.out.as_deref())?;
    Ok(outcome)
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("GRAPDE_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Usage(format!("GRAPDE_THREADS must be a positive integer, found {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> CliResult<Outcome> {
    configure_threads()?;
    let rec = |name| Recorder::new(name, cli.reproducible);
    match cli.command {
        Command::Gen(a) => gen(a, rec("gen")),
        Command::Spectrum(a) => spectrum(a, rec("spectrum")),
        Command::Solve(a) => solve(a, rec("solve")),
        Command::Exhaust(a) => exhaust(a, rec("exhaust")),
        Command::Check(a) => check(a, rec("check")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(outcome) => outcome.into(),
        Err(CliError::Core(e @ (grapde::Error::NoMountainGeometry(_) | grapde::Error::TrivialSubspace))) => {
            eprintln!("grapde: {e}");
            Outcome::Flagged.into()
        }
        Err(e) => {
            eprintln!("grapde: {e}");
            ExitCode::FAILURE
        }
    }
}
