//! The `cantor` command line tool.
//!
//! Exit codes: 0 on success, 2 for invalid input (bad files or flags, caps,
//! I/O failures), 3 when a result fails an internal consistency check.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use cantor_core::classify::{
    classify, palis_fails, phase_contours, phase_diagram, ClassifyOptions, Region, Rule, Verdict, C_BAND,
};
use cantor_core::correlation::{gamma_table, EdgeWeights};
use cantor_core::report::{json_document, write_contours_csv, write_gamma_csv, write_phase_csv, ConfigEcho, CountsWriter};
use cantor_core::simulate::{simulate_with, SimConfig};
use cantor_core::spectral::{lsr_depth_n, LsrMethod, MatrixFamily};
use cantor_core::survival::{JointSurvivalDistribution, DEFAULT_ENTRY_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Input(#[from] cantor_core::Error),
    #[error("internal consistency check failed: {0}")]
    Invariant(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Input(cantor_core::Error::Io(e.into()))
        } else {
            CliError::Input(e.into())
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "cantor", version, about = "Intervals in differences of random M-adic Cantor sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Order-n correlation coefficients as CSV `n,k,gamma`.
    Gamma(GammaArgs),
    /// Lower spectral radius estimate of the expectation matrices, as JSON.
    Lsr(LsrArgs),
    /// Interval / no-interval verdict, as JSON.
    Classify(ClassifyArgs),
    /// Monte Carlo triangle counts as CSV, plus a JSON summary.
    Simulate(SimulateArgs),
    /// Region labels on a grid of symmetric 2-adic marginals, as CSV.
    Phase(PhaseArgs),
}

#[derive(Debug, Args)]
struct PairArgs {
    /// Distribution file of the first set.
    #[arg(long)]
    dist: PathBuf,
    /// Distribution file of the second set; defaults to the first.
    #[arg(long)]
    dist2: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GammaArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LsrArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    /// norm | perron | closed2 | permutative
    #[arg(long, default_value = "norm")]
    method: LsrMethod,
    /// Include the minimizing digit string.
    #[arg(long)]
    witness: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Highest order tried by the higher-order sweep.
    #[arg(long, default_value_t = 20)]
    nmax: usize,
    /// Product length searched by the spectral criterion.
    #[arg(long, default_value_t = 12)]
    depth: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    dist1: PathBuf,
    /// Defaults to `--dist1`.
    #[arg(long)]
    dist2: Option<PathBuf>,
    #[arg(long)]
    level: usize,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-replication counts CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON path; with `--out` and no `--summary` the summary goes to standard output.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    #[arg(long, default_value_t = 201)]
    resolution: usize,
    /// Grid CSV; the curve contours go next to it as `<stem>.contours.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Gamma(a) => gamma_cmd(a, stdout),
        Command::Lsr(a) => lsr_cmd(a, stdout),
        Command::Classify(a) => classify_cmd(a, stdout),
        Command::Simulate(a) => simulate_cmd(a, stdout),
        Command::Phase(a) => phase_cmd(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            match e {
                CliError::Input(_) => EXIT_INPUT,
                CliError::Invariant(_) => EXIT_INVARIANT,
            }
        }
    }
}

fn load(path: &Path) -> CliResult<JointSurvivalDistribution> {
    JointSurvivalDistribution::from_json_file(path)
        .map_err(|e| cantor_core::Error::Invalid(format!("{}: {e}", path.display())).into())
}

fn compact(d: &JointSurvivalDistribution) -> String {
    d.to_json_value().to_string()
}

fn load_pair(pair: &PairArgs) -> CliResult<(JointSurvivalDistribution, JointSurvivalDistribution)> {
    let mu = load(&pair.dist)?;
    let lambda = match &pair.dist2 {
        Some(p) => load(p)?,
        None => mu.clone(),
    };
    Ok((mu, lambda))
}

fn echo_pair(echo: ConfigEcho, pair: &PairArgs, mu: &JointSurvivalDistribution, lambda: &JointSurvivalDistribution) -> ConfigEcho {
    echo.with("dist", pair.dist.display())
        .with("dist2", pair.dist2.as_deref().unwrap_or(&pair.dist).display())
        .with("mu", compact(mu))
        .with("lambda", compact(lambda))
}

fn sink<'a>(out: Option<&Path>, stdout: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(stdout),
    })
}

fn write_json(value: &Value, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult {
    let mut w = sink(out, stdout)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn gamma_cmd(a: GammaArgs, stdout: &mut dyn Write) -> CliResult {
    if a.order == 0 {
        return Err(cantor_core::Error::Invalid("order must be at least 1".into()).into());
    }
    let (mu, lambda) = load_pair(&a.pair)?;
    let (p, q) = (mu.marginals(), lambda.marginals());
    let w = EdgeWeights::from_marginals(&p, &q)?;
    let g = gamma_table(&w, a.order, DEFAULT_ENTRY_CAP)?;
    // one period sums to (||p||_1 ||q||_1)^n
    let total: f64 = g.values().iter().sum();
    let expected = (p.norm1() * q.norm1()).powi(a.order as i32);
    if relative_gap(total, expected) > 1e-9 || g.values().iter().any(|&x| !(x >= 0.0)) {
        return Err(CliError::Invariant(format!("coefficients sum to {total}, expected {expected}")));
    }
    let echo = echo_pair(ConfigEcho::new("gamma"), &a.pair, &mu, &lambda).with("order", a.order);
    let mut w = sink(a.out.as_deref(), stdout)?;
    write_gamma_csv(&mut w, &echo, &g)?;
    w.flush()?;
    Ok(())
}

fn lsr_cmd(a: LsrArgs, stdout: &mut dyn Write) -> CliResult {
    let (mu, lambda) = load_pair(&a.pair)?;
    let w = EdgeWeights::from_marginals(&mu.marginals(), &lambda.marginals())?;
    let family = MatrixFamily::from_edge_weights(&w);
    let mut estimate = lsr_depth_n(&family, a.depth, a.method)?;
    if let Some(v) = estimate.reevaluate(&family) {
        if relative_gap(v, estimate.value) > 1e-12 {
            return Err(CliError::Invariant(format!("witness evaluates to {v}, reported {}", estimate.value)));
        }
    }
    if !a.witness {
        estimate.witness = None;
    }
    let echo = echo_pair(ConfigEcho::new("lsr"), &a.pair, &mu, &lambda)
        .with("depth", a.depth)
        .with("method", a.method)
        .with("witness", a.witness);
    write_json(&json_document(&echo, &estimate)?, a.out.as_deref(), stdout)
}

fn check_verdict(v: &Verdict, mu: &JointSurvivalDistribution, lambda: &JointSurvivalDistribution) -> CliResult {
    let (p, q) = (mu.marginals(), lambda.marginals());
    let symmetric = p.approx_eq(&q, 1e-12);
    let ok = match v.rule {
        Some(Rule::LsrA) => {
            symmetric
                && mu.jsc_holds()
                && lambda.jsc_holds()
                && MatrixFamily::from_edge_weights(&EdgeWeights::symmetric(&p)).is_irreducible()
        }
        Some(Rule::TwoAdicC) => symmetric && p.m() == 2,
        Some(Rule::DsA) => mu.jsc_holds() && lambda.jsc_holds(),
        _ => true,
    };
    if !ok {
        return Err(CliError::Invariant(format!("rule {} fired outside its hypotheses", v.rule.expect("rule set"))));
    }
    Ok(())
}

fn classify_cmd(a: ClassifyArgs, stdout: &mut dyn Write) -> CliResult {
    let (mu, lambda) = load_pair(&a.pair)?;
    let verdict = classify(&mu, &lambda, ClassifyOptions { n_max: a.nmax, depth: a.depth })?;
    check_verdict(&verdict, &mu, &lambda)?;
    let echo = echo_pair(ConfigEcho::new("classify"), &a.pair, &mu, &lambda)
        .with("nmax", a.nmax)
        .with("depth", a.depth);
    write_json(&json_document(&echo, &verdict)?, a.out.as_deref(), stdout)
}

fn simulate_cmd(a: SimulateArgs, stdout: &mut dyn Write) -> CliResult {
    let mu = load(&a.dist1)?;
    let lambda = match &a.dist2 {
        Some(p) => load(p)?,
        None => mu.clone(),
    };
    let echo = ConfigEcho::new("simulate")
        .with("dist1", a.dist1.display())
        .with("dist2", a.dist2.as_deref().unwrap_or(&a.dist1).display())
        .with("mu", compact(&mu))
        .with("lambda", compact(&lambda))
        .with("level", a.level)
        .with("reps", a.reps)
        .with("seed", a.seed);
    let config = SimConfig { seed: a.seed, replications: a.reps, level: a.level, mu, lambda };

    let (summary_to_stdout, summary_path) = match (&a.out, &a.summary) {
        (_, Some(path)) => (false, Some(path.clone())),
        (Some(_), None) => (true, None),
        (None, None) => (false, None),
    };
    let summary = {
        let w = sink(a.out.as_deref(), &mut *stdout)?;
        let mut writer = CountsWriter::new(w, &echo)?;
        let mut violation = None;
        let summary = simulate_with(&config, |r, counts| {
            // every square contributes one L- and one R-triangle
            let (l, rr): (u64, u64) = counts.columns().fold((0, 0), |acc, d| (acc.0 + counts.zl(d), acc.1 + counts.zr(d)));
            if l != rr && violation.is_none() {
                violation = Some(format!("replication {r}: {l} L-triangles vs {rr} R-triangles"));
            }
            writer.write(r, counts)
        })?;
        writer.finish()?;
        if let Some(msg) = violation {
            return Err(CliError::Invariant(msg));
        }
        summary
    };
    let doc = json_document(&echo, &summary)?;
    if let Some(path) = summary_path {
        write_json(&doc, Some(&path), stdout)?;
    } else if summary_to_stdout {
        write_json(&doc, None, stdout)?;
    }
    Ok(())
}

/// Companion path `<stem>.contours.csv` next to the grid CSV.
pub fn contours_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.contours.csv"))
}

fn phase_cmd(a: PhaseArgs, stdout: &mut dyn Write) -> CliResult {
    let points = phase_diagram(a.resolution)?;
    let contours = phase_contours(a.resolution)?;
    for p in &points {
        let clear = (p.c - 1.0).abs() > C_BAND && p.norm1 > 1.0;
        if clear && (p.region == Region::PalisFails) != palis_fails(p.p0, p.p1) {
            return Err(CliError::Invariant(format!("label {} at ({}, {})", p.region, p.p0, p.p1)));
        }
    }
    if let Some(c) = contours.iter().find(|c| c.residual.abs() > 1e-9) {
        return Err(CliError::Invariant(format!("{} contour residual {}", c.curve, c.residual)));
    }
    let echo = ConfigEcho::new("phase").with("resolution", a.resolution);
    let mut w = sink(a.out.as_deref(), stdout)?;
    write_phase_csv(&mut w, &echo, &points)?;
    w.flush()?;
    drop(w);
    if let Some(out) = &a.out {
        let file = BufWriter::new(File::create(contours_path(out))?);
        write_contours_csv(file, &echo, &contours)?;
    }
    Ok(())
}
