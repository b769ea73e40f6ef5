//! `rankgeo`: file-based workflows over rank-metric codes and q-systems.
//!
//! Exit codes: 0 success, 1 property violation or failed precondition,
//! 2 malformed input or configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rankgeo::construct::{self, Construction, ConstructionRequest, Kind};
use rankgeo::projective::set_enumeration_budget;
use rankgeo::verify::{self, SuiteConfig};
use rankgeo::{geometric_dual, CodeFile, Error, Fe, FieldTower, MatF, QSystem, RankMetricCode, SystemFile};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "rankgeo", version, about = "Rank-metric codes, q-systems and linear sets")]
struct Cli {
    /// Worker threads for enumeration; output does not depend on it.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Cap on enumerated projective points and scanned vectors.
    #[arg(long, global = true, env = "RANKGEO_BUDGET", value_parser = clap::value_parser!(u64).range(1..))]
    budget: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct TowerArgs {
    #[arg(long)]
    p: u32,
    #[arg(long, default_value_t = 1)]
    r: u32,
    #[arg(long)]
    m: u32,
}

#[derive(Subcommand)]
enum Command {
    /// Describe the tower F_p ≤ F_q ≤ F_{q^m}.
    Field {
        #[command(flatten)]
        tower: TowerArgs,
        /// Comma-separated little-endian coefficients of a monic modulus of degree r·m.
        #[arg(long, value_delimiter = ',')]
        modulus: Option<Vec<u32>>,
    },
    /// Build a code, subspace or family and write it as JSON.
    Construct {
        #[arg(value_parser = parse_kind)]
        kind: Kind,
        #[command(flatten)]
        tower: TowerArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        e: Option<u32>,
        #[arg(long)]
        d: Option<usize>,
        /// Required for scattered_search.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        restarts: Option<u32>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Parameters, weight distribution and two-weight/antipodal/MRD flags of a code.
    Analyze {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Linear-set profile and hyperplane spectrum of a system or code file.
    System {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a geometric dual of a code.
    Dual {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply an F_q matrix (JSON array of rows of element encodings) to a code.
    Puncture {
        input: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Seeded search for an F_{q^e}-scattered subspace.
    Search {
        #[command(flatten)]
        tower: TowerArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        e: u32,
        /// Target F_{q^e}-dimension; defaults to km/(2e).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = construct::DEFAULT_RESTARTS)]
        restarts: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a verification suite: `default`, `empty`, or a config file.
    Verify {
        #[arg(long, default_value = "default")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure with an exit status.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        let code = match err.downcast_ref::<Error>() {
            Some(
                Error::Precondition(_)
                | Error::NotSpanning
                | Error::Degenerate
                | Error::NotLinear { .. }
                | Error::Certification(_)
                | Error::Invariant(_),
            ) => 1,
            _ => 2,
        };
        Failure { code, err }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        anyhow::Error::from(err).into()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(b) = cli.budget {
        set_enumeration_budget(b);
    }
    let pool = match cli.workers {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n as usize).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let fmt = cli.format;
    match &cli.command {
        Command::Field { tower, modulus } => {
            let t = FieldTower::with_modulus(tower.p, tower.r, tower.m, modulus.clone())?;
            let out = match fmt {
                Format::Json => pretty(&json!({
                    "tower": t.descriptor(),
                    "q": t.q(),
                    "order": t.order(),
                    "primitive": t.primitive(),
                    "subfields": t.divisors().iter().map(|&e| json!({ "e": e, "order": t.q_pow(e) })).collect::<Vec<_>>(),
                }))?,
                Format::Csv => {
                    let mut s = String::from("e,order\n");
                    for e in t.divisors() {
                        s += &format!("{e},{}\n", t.q_pow(e));
                    }
                    s
                }
            };
            emit(None, &out)?;
            Ok(0)
        }
        Command::Construct { kind, tower, k, n, e, d, seed, restarts, output } => {
            if *kind == Kind::ScatteredSearch && seed.is_none() {
                return Err(Failure { code: 2, err: anyhow!("scattered_search requires --seed") });
            }
            let mut req = ConstructionRequest::new(*kind, tower.p, tower.r, tower.m);
            (req.k, req.n, req.e, req.d, req.seed, req.restarts) = (*k, *n, *e, *d, *seed, *restarts);
            let result = construct::run(&req)?;
            emit(output.as_deref(), &result.to_json(&req)?)?;
            if matches!(result, Construction::NotFound) {
                eprintln!("no subspace found");
                return Ok(1);
            }
            Ok(0)
        }
        Command::Analyze { input, output } => {
            let code = read_code(input)?;
            let dist = code.weight_distribution()?;
            let out = match fmt {
                Format::Csv => dist.to_csv(),
                Format::Json => {
                    let weights = dist.nonzero_weights();
                    let singleton = code.singleton_check()?;
                    pretty(&json!({
                        "tower": code.tower().descriptor(),
                        "n": code.n(),
                        "k": code.k(),
                        "m": code.m(),
                        "nondegenerate": code.is_nondegenerate(),
                        "distribution": counts_map(&dist.counts),
                        "d": code.minimum_distance()?,
                        "weights": weights,
                        "two_weight": weights.len() == 2,
                        "antipodal": code.is_antipodal()?,
                        "mrd": singleton.is_mrd,
                        "singleton": singleton,
                    }))?
                }
            };
            emit(output.as_deref(), &out)?;
            Ok(0)
        }
        Command::System { input, output } => {
            let sys = read_system(input)?;
            let profile = sys.profile()?;
            let spectrum = sys.hyperplane_spectrum()?;
            let out = match fmt {
                Format::Csv => {
                    let mut s = String::from("weight,count\n");
                    for (w, c) in profile.counts.iter().enumerate() {
                        s += &format!("{w},{c}\n");
                    }
                    s + "\n" + &spectrum.to_csv()
                }
                Format::Json => pretty(&json!({
                    "tower": sys.tower().descriptor(),
                    "k": sys.k(),
                    "n": sys.n(),
                    "spans": sys.full_span(),
                    "scattered": profile.max_weight <= 1,
                    "profile": profile,
                    "hyperplane_spectrum": counts_map(&spectrum.counts),
                }))?,
            };
            emit(output.as_deref(), &out)?;
            Ok(0)
        }
        Command::Dual { input, output } => {
            let dual = geometric_dual(&read_code(input)?)?;
            emit(output.as_deref(), &dual.to_json())?;
            Ok(0)
        }
        Command::Puncture { input, matrix, output } => {
            let code = read_code(input)?;
            let rows: Vec<Vec<Fe>> = serde_json::from_str(&read(matrix)?).context("puncturing matrix")?;
            let a = MatF::from_rows(code.tower(), 1, &rows)?;
            let punctured = code.puncture(&a)?;
            if punctured.k() < code.k() {
                eprintln!("warning: the punctured code has dimension {} < {}", punctured.k(), code.k());
            }
            emit(output.as_deref(), &punctured.to_json())?;
            Ok(0)
        }
        Command::Search { tower, k, e, n, seed, restarts, output } => {
            let mut req = ConstructionRequest::new(Kind::ScatteredSearch, tower.p, tower.r, tower.m);
            (req.k, req.e, req.n, req.seed, req.restarts) = (Some(*k), Some(*e), *n, Some(*seed), Some(*restarts));
            let result = construct::run(&req)?;
            emit(output.as_deref(), &result.to_json(&req)?)?;
            Ok(u8::from(matches!(result, Construction::NotFound)))
        }
        Command::Verify { suite, seed, out } => {
            let config = match suite.as_str() {
                "default" => SuiteConfig::default_suite(*seed),
                "empty" => SuiteConfig::empty(*seed),
                path => {
                    let text = read(Path::new(path))?;
                    serde_json::from_str(&text).with_context(|| format!("suite config {path}"))?
                }
            };
            let report = verify::run_suite(&config);
            let json = verify::report_json(&report)?;
            match out {
                Some(p) => write_file(p, &json)?,
                None => println!("{json}"),
            }
            for v in &report {
                let status = match (v.hypotheses_met, v.conclusion_holds) {
                    (false, _) => "SKIP",
                    (true, true) => "PASS",
                    (true, false) => "FAIL",
                };
                eprintln!("[{status}] {} {}", v.theorem_id, v.instance);
            }
            Ok(verify::exit_code(&report) as u8)
        }
    }
}

fn counts_map(counts: &[u64]) -> Value {
    Value::Object(counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i.to_string(), json!(c))).collect())
}

fn pretty(v: &Value) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn read_code(path: &Path) -> anyhow::Result<RankMetricCode> {
    let file: CodeFile = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    Ok(RankMetricCode::from_file(&file)?)
}

/// A system file, or the system of a code file.
fn read_system(path: &Path) -> anyhow::Result<QSystem> {
    let value: Value = serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("subspace").is_some() {
        let file: SystemFile = serde_json::from_value(value)?;
        Ok(QSystem::from_file(&file)?)
    } else if value.get("generator").is_some() {
        let file: CodeFile = serde_json::from_value(value)?;
        Ok(QSystem::from_code(&RankMetricCode::from_file(&file)?)?)
    } else {
        bail!("{} is neither a code file nor a system file", path.display())
    }
}
