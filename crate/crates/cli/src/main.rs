//! `pitman`: single estimates, variances, sweeps and named verification
//! experiments.
//!
//! Exit codes: 0 when no verdict fails, 1 when some verdict fails, 2 on usage
//! or configuration errors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use pitman_core::bench::{self, ExperimentConfig};
use pitman_core::dist::DistributionSpec;
use pitman_core::pitman::{pitman_estimate, pitman_multivariate, pitman_variance, Sample};
use pitman_core::poly_pitman::{moments_for, variance_sweep, ModelKind};
use pitman_core::rng::{SeededStream, DEFAULT_SEED};

const WORKERS_ENV: &str = "PITMAN_LAB_WORKERS";

#[derive(Parser)]
#[command(name = "pitman", version, about = "Pitman location estimators and variance inequality checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// A population given either as spec JSON or as a family with parameters.
#[derive(clap::Args)]
struct PopulationArgs {
    /// Family name, e.g. gaussian, uniform, exponential, laplace, cauchy, lattice.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated `key=value` pairs; array values use `;`, e.g. `points=-1;1`.
    #[arg(long, allow_hyphen_values = true)]
    params: Option<String>,
    /// Population spec as inline JSON or `@path`.
    #[arg(long, conflicts_with_all = ["family", "params"])]
    spec: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Pitman estimate for one sample.
    Estimate {
        #[command(flatten)]
        population: PopulationArgs,
        /// Comma-separated values; points of a multivariate sample are separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        sample: String,
    },
    /// `var(t_n)`, exact where possible, otherwise Monte Carlo.
    Variance {
        #[command(flatten)]
        population: PopulationArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// `n var` over a range of sample sizes, for `t_n` or the degree-k polynomial estimator.
    Sweep {
        #[command(flatten)]
        population: PopulationArgs,
        /// Comma-separated sample sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n_values: Vec<usize>,
        /// Polynomial degree; omit for the Pitman estimator itself.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long, default_value_t = 100_000)]
        reps: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a named experiment and report its verdicts.
    Verify {
        #[arg(long)]
        experiment: Option<String>,
        /// Experiment config JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// List registered experiment names.
    ListExperiments,
}

/// Operational failure, reported on stderr with exit code 2.
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type CliResult<T> = Result<T, UsageError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("error: {}", e.0);
        return ExitCode::from(2);
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.0);
            ExitCode::from(2)
        }
    }
}

fn configure_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = raw
        .parse()
        .ok()
        .filter(|&w| w > 0)
        .ok_or_else(|| UsageError(format!("{WORKERS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(workers).build_global()?;
    Ok(())
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::Estimate { population, sample } => {
            let spec = population.resolve()?;
            let value = if spec.is_multivariate() {
                let points = sample
                    .split(';')
                    .map(parse_reals)
                    .collect::<CliResult<Vec<_>>>()?;
                let est = pitman_multivariate(&spec, &Sample::multivariate(points)?)?;
                serde_json::to_string(&est)?
            } else {
                let est = pitman_estimate(&spec, &Sample::univariate(parse_reals(&sample)?)?)?;
                format!("{est}")
            };
            out(&format!("{value}\n"))?;
        }
        Command::Variance { population, n, reps, seed } => {
            let spec = population.resolve()?;
            let stream = SeededStream::new(seed).fork_named("variance");
            let v = pitman_variance(&spec, n, reps, &stream)?;
            let line = serde_json::to_string(&json!({ "population": spec.label(), "n": n, "variance": v }))?;
            out(&format!("{line}\n"))?;
        }
        Command::Sweep { population, n_values, k, reps, seed, output } => {
            let spec = population.resolve()?;
            let text = sweep(&spec, &n_values, k, reps, seed)?;
            emit(&text, output.as_deref())?;
        }
        Command::Verify { experiment, config, reps, seed, format, output } => {
            let cfg = load_config(experiment, config.as_deref(), reps, seed)?;
            let report = bench::run_experiment(&cfg)?;
            let text = match format {
                Format::Csv => report.to_csv()?,
                Format::Json => report.to_json(),
            };
            emit(&text, output.as_deref())?;
            if report.has_failures() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::ListExperiments => {
            let list: String = bench::experiments().iter().map(|e| format!("{}\t{}\n", e.name, e.description)).collect();
            out(&list)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

impl PopulationArgs {
    fn resolve(&self) -> CliResult<DistributionSpec> {
        let value = match (&self.spec, &self.family) {
            (Some(s), _) => {
                let text = match s.strip_prefix('@') {
                    Some(path) => fs::read_to_string(path).map_err(|e| UsageError(format!("{path}: {e}")))?,
                    None => s.clone(),
                };
                serde_json::from_str::<Value>(&text).map_err(|e| UsageError(format!("--spec: {e}")))?
            }
            (None, Some(family)) => json!({ "family": family, "params": parse_params(self.params.as_deref().unwrap_or(""))? }),
            (None, None) => return Err(UsageError("a population is required: pass --family or --spec".into())),
        };
        let spec: DistributionSpec = deserialize(value, "population")?;
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_reals(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| UsageError(format!("not a number: `{t}`"))))
        .collect()
}

fn parse_params(s: &str) -> CliResult<Map<String, Value>> {
    let mut out = Map::new();
    for pair in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, raw) = pair
            .split_once('=')
            .ok_or_else(|| UsageError(format!("expected key=value in --params, got `{pair}`")))?;
        let number = |t: &str| -> CliResult<Value> {
            let x: f64 = t.trim().parse().map_err(|_| UsageError(format!("param `{key}`: not a number: `{t}`")))?;
            Ok(json!(x))
        };
        let value = if raw.contains(';') {
            Value::Array(raw.split(';').map(number).collect::<CliResult<_>>()?)
        } else {
            number(raw)?
        };
        out.insert(key.trim().to_string(), value);
    }
    Ok(out)
}

/// Deserializes with the failing location reported as a JSON pointer.
fn deserialize<T: serde::de::DeserializeOwned>(value: Value, what: &str) -> CliResult<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let pointer = json_pointer(e.path());
        UsageError(format!("invalid {what} at {pointer}: {}", e.inner()))
    })
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn load_config(experiment: Option<String>, path: Option<&Path>, reps: Option<usize>, seed: Option<u64>) -> CliResult<ExperimentConfig> {
    let mut value = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| UsageError(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text).map_err(|e| UsageError(format!("{}: {e}", p.display())))?
        }
        None => json!({}),
    };
    let obj = value
        .as_object_mut()
        .ok_or_else(|| UsageError("invalid config at /: expected a JSON object".into()))?;
    if let Some(name) = experiment {
        match obj.get("experiment").and_then(Value::as_str) {
            Some(existing) if existing != name => {
                return Err(UsageError(format!(
                    "invalid config at /experiment: `{existing}` conflicts with --experiment {name}"
                )));
            }
            _ => {
                obj.insert("experiment".into(), json!(name));
            }
        }
    }
    if let Some(r) = reps {
        obj.insert("reps".into(), json!(r));
    }
    if let Some(s) = seed {
        obj.insert("seed".into(), json!(s));
    }
    let cfg: ExperimentConfig = deserialize(value, "config")?;
    cfg.validate()?;
    Ok(cfg)
}

fn sweep(spec: &DistributionSpec, ns: &[usize], k: Option<u32>, reps: usize, seed: u64) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "variance", "n_variance", "stderr", "method"])?;
    match k {
        Some(k) => {
            let moments = moments_for(spec, k)?;
            for (n, v) in variance_sweep(&moments, k, ns, ModelKind::ResidualSpace)? {
                w.write_record([n.to_string(), v.to_string(), (n as f64 * v).to_string(), "0".into(), format!("poly_k{k}")])?;
            }
        }
        None => {
            let root = SeededStream::new(seed).fork_named("sweep");
            for &n in ns {
                let v = pitman_variance(spec, n, reps, &root.fork(n as u64))?;
                w.write_record([
                    n.to_string(),
                    v.value.to_string(),
                    (n as f64 * v.value).to_string(),
                    v.stderr.to_string(),
                    v.method.to_string(),
                ])?;
            }
        }
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| UsageError(e.to_string()))?)?)
}

/// Writes to stdout; a closed pipe is not an error.
fn out(text: &str) -> CliResult<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Writes to stdout, or atomically to `path` via a sibling temp file.
fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    let Some(path) = path else {
        return out(text);
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| UsageError(format!("{}: {e}", dir.display())))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| UsageError(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}
