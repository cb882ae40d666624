//! `magbench`: runs the integrator experiments and writes CSV.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use log::info;
use magnus_symplectic::bench::{
    self, best_q_table, convergence_order, error_vs_omega, format_real, omega_grid, parse_key_values, parse_list,
    parse_real, stability_analysis, write_best_q_csv, write_omega_csv, write_rows_csv, ExperimentSpec, KeyValues,
    ProblemConfig,
};
use magnus_symplectic::reference::ReferenceCache;
use magnus_symplectic::{Error, Execution, Method};

#[derive(Parser, Debug)]
#[command(name = "magbench", version, about = "Error-versus-cost experiments for symplectic Magnus integrators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mathieu equation x'' + (ω² + ε cos 2t)x = 0
    Mathieu(CommonArgs),
    /// Matrix Hill equation with a Pascal perturbation
    Hill(CommonArgs),
    /// Trapped wave equation on a periodic grid
    Wave(CommonArgs),
    /// Mathieu monodromy error as a function of ω at a fixed step
    OmegaSweep(SweepArgs),
    /// Rank the series truncations q by error at a common cost
    BestQ(BestQArgs),
    /// Monodromy eigenvalues of a periodic problem
    Stability(CommonArgs),
    /// Fit the observed order of convergence
    OrderCheck(CommonArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct CommonArgs {
    /// Method label (upsilon4q6, upsilon6qexact, psi11, rk4, rkgl6, rkgl4rho2, ...);
    /// `upsilon` and `rkgl` take their order from --p and --q. Repeatable or comma separated.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    /// Order p of the decomposition or Gauss–Legendre method
    #[arg(long)]
    p: Option<u32>,
    /// Series truncation q (6, 8, 10, 12 or exact)
    #[arg(long)]
    q: Option<String>,
    /// Step sizes (comma separated; `pi/20` style accepted)
    #[arg(long)]
    h: Option<String>,
    /// Step counts (comma separated)
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    t1: Option<String>,
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    n_grid: Option<usize>,
    /// matrix or vector
    #[arg(long)]
    mode: Option<String>,
    /// spectral or fd2
    #[arg(long)]
    disc: Option<String>,
    /// Problem for `stability` and `order-check` (mathieu, hill, wave)
    #[arg(long)]
    problem: Option<String>,
    /// Reference-solution tolerance per entry
    #[arg(long)]
    tolerance: Option<String>,
    /// key=value file; its entries override the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock time per cell (makes output non-reproducible)
    #[arg(long)]
    timing: bool,
    /// Run cells one after another instead of in parallel
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug, Clone)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long, default_value = "1")]
    eps: String,
    #[arg(long, default_value = "pi/20")]
    h: String,
    #[arg(long, default_value = "0")]
    omega_min: String,
    #[arg(long, default_value = "10")]
    omega_max: String,
    #[arg(long, default_value = "0.5")]
    omega_step: String,
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug, Clone)]
struct BestQArgs {
    /// Decomposition orders to rank
    #[arg(long, default_value = "4,6")]
    p: String,
    #[arg(long, default_value = "1,1/10")]
    eps: String,
    #[arg(long, default_value = "1/125,1/25,1/5,1,5,25,125")]
    omega: String,
    #[arg(long, default_value = "6,8,10,12")]
    q: String,
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sequential: bool,
}

const DEFAULT_MATRIX_METHODS: &str = "upsilon4q6,upsilon4q8,upsilon6q8,upsilon6q12,psi11,rk4,rkgl4,rkgl6";
const DEFAULT_VECTOR_METHODS: &str = "psi11,rk4,rkgl4,rkgl6";

/// Failure classes mapped onto exit codes 2 and 3.
#[derive(Debug)]
enum Failure {
    Spec(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.into())
        } else {
            Failure::Spec(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Spec(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn resolve_methods(args: &CommonArgs) -> CliResult<Option<String>> {
    if args.method.is_empty() {
        return Ok(None);
    }
    let mut labels = Vec::new();
    for m in &args.method {
        let label = match m.as_str() {
            "upsilon" => {
                let p = args.p.unwrap_or(4);
                let q = args.q.clone().unwrap_or_else(|| if p == 4 { "6".into() } else { "8".into() });
                format!("upsilon{p}q{q}")
            }
            "rkgl" => format!("rkgl{}", args.p.unwrap_or(6)),
            other => other.to_string(),
        };
        label.parse::<Method>()?;
        labels.push(label);
    }
    Ok(Some(labels.join(",")))
}

/// Flags first, then the config file on top.
fn key_values(problem: &str, args: &CommonArgs) -> CliResult<KeyValues> {
    let mut kv = KeyValues::new();
    kv.insert("problem".into(), args.problem.clone().unwrap_or_else(|| problem.into()));
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            kv.insert(k.into(), v);
        }
    };
    set("methods", resolve_methods(args)?);
    set("h", args.h.clone());
    set("steps", args.steps.clone());
    set("t1", args.t1.clone());
    set("omega", args.omega.clone());
    set("eps", args.eps.clone());
    set("delta", args.delta.clone());
    set("r", args.r.map(|r| r.to_string()));
    set("n_grid", args.n_grid.map(|n| n.to_string()));
    set("mode", args.mode.clone());
    set("disc", args.disc.clone());
    set("tolerance", args.tolerance.clone());
    if args.timing {
        kv.insert("timing".into(), "true".into());
    }
    if args.sequential {
        kv.insert("execution".into(), "sequential".into());
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        kv.extend(parse_key_values(&text)?);
    }
    let wave = kv.get("problem").is_some_and(|p| p == "wave");
    if !kv.contains_key("mode") && wave {
        kv.insert("mode".into(), "vector".into());
    }
    let vector = kv.get("mode").is_some_and(|m| m == "vector");
    kv.entry("methods".into()).or_insert_with(|| {
        if vector { DEFAULT_VECTOR_METHODS } else { DEFAULT_MATRIX_METHODS }.into()
    });
    if !kv.contains_key("h") && !kv.contains_key("steps") {
        let steps = if wave { "500,1000,2000,4000" } else { "10,20,40,80,160" };
        kv.insert("steps".into(), steps.into());
    }
    Ok(kv)
}

fn open_output(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(io::BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn execution(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn tolerance(t: &Option<String>) -> CliResult<f64> {
    Ok(t.as_deref().map(parse_real).transpose()?.unwrap_or(magnus_symplectic::reference::DEFAULT_TOLERANCE))
}

fn run_problem(problem: &str, args: &CommonArgs) -> CliResult<()> {
    let spec = ExperimentSpec::from_key_values(&key_values(problem, args)?)?;
    info!("running {} cells", spec.methods.len() * spec.steps.len());
    let output = bench::run(&spec, ReferenceCache::global())?;
    let mut w = open_output(&args.out)?;
    write_rows_csv(&mut w, &spec.to_key_values(), &output.metadata, &output.rows).context("writing CSV")?;
    w.flush().context("writing CSV")?;
    for row in output.rows.iter().filter(|r| r.failure.is_some()) {
        log::warn!("{} with {} steps failed: {}", row.method, row.steps, row.failure.as_deref().unwrap_or(""));
    }
    if output.any_numerical_failure() {
        return Err(Failure::Numerical(anyhow::anyhow!("at least one cell failed numerically")));
    }
    if output.any_failure() {
        return Err(Failure::Spec(anyhow::anyhow!("at least one cell was rejected")));
    }
    Ok(())
}

fn omega_sweep(args: &SweepArgs) -> CliResult<()> {
    let methods: Vec<Method> = if args.method.is_empty() {
        parse_list(DEFAULT_MATRIX_METHODS, |m| m.parse())?
    } else {
        args.method.iter().map(|m| m.parse()).collect::<Result<_, _>>()?
    };
    let eps = parse_real(&args.eps)?;
    let h = parse_real(&args.h)?;
    let omegas = omega_grid(
        parse_real(&args.omega_min)?,
        parse_real(&args.omega_max)?,
        parse_real(&args.omega_step)?,
    )?;
    let tol = tolerance(&args.tolerance)?;
    let rows = error_vs_omega(&methods, eps, h, &omegas, tol, execution(args.sequential), ReferenceCache::global())?;
    let mut kv = KeyValues::new();
    kv.insert("problem".into(), "mathieu".into());
    kv.insert("eps".into(), format!("{eps:?}"));
    kv.insert("h".into(), format!("{h:?}"));
    kv.insert("t1".into(), format!("{:?}", std::f64::consts::PI));
    kv.insert("omegas".into(), format!("{}..{} step {}", args.omega_min, args.omega_max, args.omega_step));
    kv.insert("methods".into(), methods.iter().map(Method::label).collect::<Vec<_>>().join(","));
    kv.insert("tolerance".into(), format!("{tol:?}"));
    let mut w = open_output(&args.out)?;
    write_omega_csv(&mut w, &kv, &["error=L1 of monodromy matrix".into()], &rows).context("writing CSV")?;
    w.flush().context("writing CSV")?;
    if rows.iter().any(|r| r.row.numerical_failure) {
        return Err(Failure::Numerical(anyhow::anyhow!("at least one cell failed numerically")));
    }
    Ok(())
}

fn best_q(args: &BestQArgs) -> CliResult<()> {
    let parse_u32 = |s: &str| {
        s.parse::<u32>()
            .map_err(|_| Error::InvalidArgument(format!("expected an integer, got '{s}'")))
    };
    let p_set = parse_list(&args.p, parse_u32)?;
    let eps_set = parse_list(&args.eps, parse_real)?;
    let omega_set = parse_list(&args.omega, parse_real)?;
    let q_set = parse_list(&args.q, parse_u32)?;
    let tol = tolerance(&args.tolerance)?;
    let rows = best_q_table(&p_set, &eps_set, &omega_set, &q_set, tol, execution(args.sequential), ReferenceCache::global())?;
    let mut kv = KeyValues::new();
    kv.insert("problem".into(), "mathieu".into());
    kv.insert("p".into(), args.p.clone());
    kv.insert("eps".into(), args.eps.clone());
    kv.insert("omega".into(), args.omega.clone());
    kv.insert("q".into(), args.q.clone());
    kv.insert("tolerance".into(), format!("{tol:?}"));
    let criterion = [
        "criterion=smallest monodromy L1 error at a common cost budget (log-log interpolated)".to_string(),
        "budget=largest cost among the q at the middle of a 2^k step refinement".to_string(),
    ];
    let mut w = open_output(&args.out)?;
    write_best_q_csv(&mut w, &kv, &criterion, &q_set, &rows).context("writing CSV")?;
    w.flush().context("writing CSV")?;
    Ok(())
}

fn stability(args: &CommonArgs) -> CliResult<()> {
    let kv = key_values("mathieu", args)?;
    let config = ProblemConfig::from_key_values(&kv)?;
    let problem = config.build()?;
    let label = kv["methods"].split(',').next().unwrap_or("psi11").to_string();
    let method: Method = if args.method.is_empty() { Method::Psi11 } else { label.parse()? };
    let h = match (kv.get("h"), kv.get("steps")) {
        (Some(h), _) => parse_real(h.split(',').next().unwrap_or(h))?,
        (None, Some(n)) => {
            let n: usize = n
                .split(',')
                .next()
                .unwrap_or(n)
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad step count '{n}'")))?;
            problem.period().unwrap_or(std::f64::consts::PI) / n.max(1) as f64
        }
        (None, None) => std::f64::consts::PI / 100.0,
    };
    let report = stability_analysis(problem.as_ref(), &method, h)?;
    let mut w = open_output(&args.out)?;
    let mut meta = config.to_key_values();
    meta.insert("method".into(), method.label());
    meta.insert("h".into(), format!("{h:?}"));
    for (k, v) in &meta {
        writeln!(w, "# {k}={v}").context("writing CSV")?;
    }
    writeln!(w, "# max_modulus={}", format_real(report.max_modulus)).context("writing CSV")?;
    writeln!(w, "# stable={}", report.stable).context("writing CSV")?;
    writeln!(w, "# reciprocal_pairs={}", report.reciprocal_pairs).context("writing CSV")?;
    writeln!(w, "re,im,modulus").context("writing CSV")?;
    for l in &report.eigenvalues {
        writeln!(w, "{},{},{}", format_real(l.re), format_real(l.im), format_real(l.norm())).context("writing CSV")?;
    }
    w.flush().context("writing CSV")?;
    Ok(())
}

fn order_check(args: &CommonArgs) -> CliResult<()> {
    let kv = key_values("mathieu", args)?;
    let spec = ExperimentSpec::from_key_values(&kv)?;
    let problem = spec.problem.build()?;
    let mut w = open_output(&args.out)?;
    for (k, v) in spec.to_key_values() {
        writeln!(w, "# {k}={v}").context("writing CSV")?;
    }
    writeln!(w, "method,slope,points_used").context("writing CSV")?;
    let mut numerical = false;
    for method in &spec.methods {
        match convergence_order(problem.as_ref(), method, &spec.steps, spec.t0, spec.t1, spec.tolerance, ReferenceCache::global()) {
            Ok(est) => {
                let used = est.points.iter().filter(|p| p.1 >= bench::ROUNDOFF_FLOOR).count();
                let slope = est.slope.map_or_else(|| "undefined".to_string(), format_real);
                writeln!(w, "{},{},{}", method.label(), slope, used).context("writing CSV")?;
            }
            Err(e) if e.is_numerical() => {
                numerical = true;
                writeln!(w, "# failed method={}: {e}", method.label()).context("writing CSV")?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    w.flush().context("writing CSV")?;
    if numerical {
        return Err(Failure::Numerical(anyhow::anyhow!("order estimation failed for some methods")));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Mathieu(a) => run_problem("mathieu", a),
        Command::Hill(a) => run_problem("hill", a),
        Command::Wave(a) => run_problem("wave", a),
        Command::OmegaSweep(a) => omega_sweep(a),
        Command::BestQ(a) => best_q(a),
        Command::Stability(a) => stability(a),
        Command::OrderCheck(a) => order_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Spec(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(3)
        }
    }
}
