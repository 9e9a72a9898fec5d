use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use latshift::bounds::theoretical_bound;
use latshift::cbc::{cbc_shift_with, cbc_vector_with, CandidateSet, SearchStrategy, ShiftOptions, VectorOptions};
use latshift::io::{self, ShiftSpec, ShiftTable, TableFormat};
use latshift::oracle::verify_grid;
use latshift::quadrature::{apply_rule, random_shift_estimate, Integrand};
use latshift::wce::theorem1_bound;
use latshift::{HalfShift, LatticeRule, Report, Shift, WeightFamily, Weights};

#[derive(Parser)]
#[command(name = "latshift", version, about = "Shifted rank-1 lattice rules: error evaluation and CBC constructions")]
struct Cli {
    /// Worker threads for the parallel searches (default: all cores).
    #[arg(long, global = true, env = "LATSHIFT_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a generating vector component by component.
    CbcZ(CbcZArgs),
    /// Choose half-shifts component by component for a given vector and print the κ table.
    CbcShift(CbcShiftArgs),
    /// Print e², shift-averaged e² and κ for every prefix of a shifted rule.
    Wce(WceArgs),
    /// Print the a-priori CBC error bound or the half-shift averaging bound.
    Bound(BoundArgs),
    /// Check the averaging bound and the fast evaluations against reference sums.
    Verify(VerifyArgs),
    /// Apply a rule to a built-in integrand.
    Integrate(IntegrateArgs),
}

#[derive(Args)]
struct VectorInput {
    /// Generating vector file: one integer per line or `index value` pairs.
    #[arg(long)]
    z_file: PathBuf,
    /// Reduce components mod N before range checking.
    #[arg(long)]
    reduce_mod_n: bool,
}

#[derive(Args)]
struct CbcZArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    smax: usize,
    #[arg(long)]
    weights: String,
    /// Search all of 1..N instead of the integers coprime to N.
    #[arg(long)]
    all_candidates: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Tsv,
    Json,
}

impl From<Format> for TableFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => TableFormat::Csv,
            Format::Tsv => TableFormat::Tsv,
            Format::Json => TableFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    Scan,
    Direct,
}

#[derive(Args)]
struct CbcShiftArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    smax: usize,
    #[arg(long)]
    weights: String,
    #[command(flatten)]
    vector: VectorInput,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, value_enum, default_value = "scan")]
    strategy: Strategy,
    /// Largest N the pair cache accepts.
    #[arg(long, default_value_t = latshift::wce::DEFAULT_MAX_PAIR_N)]
    max_n: usize,
    /// Table destination (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the chosen shift as `s m delta` lines.
    #[arg(long)]
    shift_out: Option<PathBuf>,
    /// Print each row to stderr as soon as it is fixed.
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
#[group(id = "shift", multiple = false)]
struct ShiftChoice {
    /// Shift file: `s m delta` lines or one real component per line.
    #[arg(long, group = "shift")]
    shift_file: Option<PathBuf>,
    #[arg(long, group = "shift")]
    zero_shift: bool,
    /// Comma-separated half-shift indices m_j, each giving delta_j = (2 m_j - 1)/(2N).
    #[arg(long, group = "shift", value_delimiter = ',')]
    half_shift_indices: Option<Vec<usize>>,
}

#[derive(Args)]
struct WceArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    weights: String,
    #[command(flatten)]
    vector: VectorInput,
    /// Dimensions to use (default: every row of the vector file).
    #[arg(long)]
    smax: Option<usize>,
    #[command(flatten)]
    shift: ShiftChoice,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    smax: usize,
    #[arg(long)]
    weights: String,
    #[arg(long, required_unless_present = "theorem1", conflicts_with = "theorem1")]
    lambda: Option<f64>,
    /// Print the half-shift averaging bound instead.
    #[arg(long)]
    theorem1: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 12)]
    max_n: usize,
    #[arg(long, default_value_t = 3)]
    max_s: usize,
}

#[derive(Args)]
struct IntegrateArgs {
    #[arg(long)]
    n: usize,
    /// Accepted for symmetry with the other commands; integration does not use it.
    #[arg(long)]
    weights: Option<String>,
    #[command(flatten)]
    vector: VectorInput,
    #[arg(long)]
    smax: Option<usize>,
    /// Integrand: const, prod, affine:c1,..,cs or quad:a1,..,as.
    #[arg(long = "f")]
    f: String,
    #[arg(long, conflicts_with = "random")]
    shift_file: Option<PathBuf>,
    /// Average over random shifts instead of using one fixed shift.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 16, requires = "random")]
    q: usize,
    #[arg(long, default_value_t = 0, requires = "random")]
    seed: u64,
}

fn weights(spec: &str, s: usize) -> Result<(Weights, String)> {
    let family = WeightFamily::parse(spec)?;
    let w = Weights::family(&family, s)?;
    Ok((w, spec.to_string()))
}

fn read_vector(input: &VectorInput, n: usize, s: Option<usize>) -> Result<Vec<usize>> {
    let path = &input.z_file;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let z = match s {
        Some(s) => io::parse_vector(&text, n, s, input.reduce_mod_n),
        None => io::parse_vector_all(&text, n, input.reduce_mod_n),
    };
    z.with_context(|| format!("in {}", path.display()))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cbc_z(a: &CbcZArgs) -> Result<()> {
    let (w, _) = weights(&a.weights, a.smax)?;
    let opts = VectorOptions {
        candidates: if a.all_candidates { CandidateSet::All } else { CandidateSet::Coprime },
        ..VectorOptions::default()
    };
    let v = cbc_vector_with(a.n, a.smax, &w, &opts)?;
    write_out(a.out.as_deref(), &io::format_vector(&v.z))
}

fn cbc_shift(a: &CbcShiftArgs) -> Result<()> {
    let (w, spec) = weights(&a.weights, a.smax)?;
    let z = read_vector(&a.vector, a.n, Some(a.smax))?;
    let opts = ShiftOptions {
        strategy: match a.strategy {
            Strategy::Scan => SearchStrategy::Scan,
            Strategy::Direct => SearchStrategy::Direct,
        },
        max_n: a.max_n,
        ..ShiftOptions::default()
    };
    let result = cbc_shift_with(a.n, &z, a.smax, &w, &opts, None, |r| {
        if a.progress {
            eprintln!("s={} m={} kappa={:.6} kappa0={:.6}", r.s, r.m, r.kappa, r.kappa0);
        }
    })?;
    if let Some(p) = &a.shift_out {
        fs::write(p, io::format_shift(&result.shift())).with_context(|| format!("writing {}", p.display()))?;
    }
    let table = ShiftTable::from_result(&result, &spec)?;
    write_out(a.out.as_deref(), &table.emit(a.format.into())?)
}

fn wce(a: &WceArgs) -> Result<()> {
    let z = read_vector(&a.vector, a.n, a.smax)?;
    let s = z.len();
    let (w, _) = weights(&a.weights, s)?;
    let rule = LatticeRule::new(a.n, z)?;
    let c = &a.shift;
    let shift: Shift = if let Some(p) = &c.shift_file {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        io::parse_shift(&text, a.n)?.to_real()
    } else if let Some(m) = &c.half_shift_indices {
        HalfShift::new(a.n, m.clone())?.to_real()
    } else {
        Shift::zero(s)
    };
    if shift.dim() != s {
        bail!("shift has {} components but the rule has {s}", shift.dim());
    }
    let report = Report::evaluate(&rule, &shift, &w)?;
    println!("s,e2,esh2,kappa,kappa0");
    for r in &report.records {
        println!("{},{:.17e},{:.17e},{:.10},{:.10}", r.s, r.e2, r.esh2, r.kappa, r.kappa0);
    }
    Ok(())
}

fn bound(a: &BoundArgs) -> Result<()> {
    let (w, _) = weights(&a.weights, a.smax)?;
    let b = match a.lambda {
        Some(lambda) if !a.theorem1 => theoretical_bound(a.n, &w, a.smax, lambda)?,
        _ => theorem1_bound(a.n, &w, a.smax)?,
    };
    println!("{b:.6}");
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let v = verify_grid(a.max_n, a.max_s)?;
    for msg in &v.violations {
        eprintln!("violation: {msg}");
    }
    println!(
        "{} instances, {} checks, {} violations",
        v.instances,
        v.checks,
        v.violations.len()
    );
    Ok(v.passed())
}

fn integrate(a: &IntegrateArgs) -> Result<()> {
    let z = read_vector(&a.vector, a.n, a.smax)?;
    if let Some(spec) = &a.weights {
        weights(spec, z.len())?;
    }
    let rule = LatticeRule::new(a.n, z)?;
    let f = Integrand::<f64>::by_name(&a.f, rule.dim())?;
    if a.random {
        let est = random_shift_estimate(&rule, &f, a.q, a.seed)?;
        println!("mean {:.17e}", est.mean);
        match est.std_error {
            Some(se) => println!("std_error {se:.6e}"),
            None => println!("std_error n/a"),
        }
        println!("q {} seed {}", est.q, est.seed);
        if let Some(exact) = f.exact() {
            println!("exact {exact:.17e}");
            println!("error {:.6e}", (est.mean - exact).abs());
        }
        return Ok(());
    }
    let shift = match &a.shift_file {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            match io::parse_shift(&text, a.n)? {
                ShiftSpec::Half(h) => h.to_real(),
                ShiftSpec::Real(r) => r,
            }
        }
        None => Shift::zero(rule.dim()),
    };
    let q = apply_rule(&rule, &shift, &f)?;
    println!("estimate {q:.17e}");
    if let Some(exact) = f.exact() {
        println!("exact {exact:.17e}");
        println!("error {:.6e}", (q - exact).abs());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("configuring worker pool")?;
    }
    match &cli.command {
        Command::CbcZ(a) => cbc_z(a)?,
        Command::CbcShift(a) => cbc_shift(a)?,
        Command::Wce(a) => wce(a)?,
        Command::Bound(a) => bound(a)?,
        Command::Verify(a) => return verify(a),
        Command::Integrate(a) => integrate(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
