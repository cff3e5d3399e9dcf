//! `sscosamp`: run experiments and write CSV tables.
//!
//! Exit status is 0 on success, 1 when a verification claim fails and 2 on
//! any other error.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sscosamp_core::harness::{replay, run, FailedTrial, ResultTable, RunOptions, WORKERS_ENV};
use sscosamp_core::projection::Backend;
use sscosamp_core::sensing::{CoefficientModel, InstanceRecord, MeasurementKind, SignalStructure};
use sscosamp_core::{BoundMode, Error, ExperimentKind, ExperimentSpec};

#[derive(Parser)]
#[command(name = "sscosamp", version, about = "Signal-space CoSaMP experiments over overcomplete DFT dictionaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Perfect-recovery rates over measurement counts, backends and signal structures
    Phase(Common),
    /// Dominance factors, B(h_min), isometry bounds and OMP thresholds
    Bounds(Common),
    /// Gram magnitudes, their majorant and the coherence envelope
    Gram(Common),
    /// Exact OMP support recovery above the coefficient threshold
    VerifyTheorem(Common),
    /// Isometry deviation of separated supports against the bound
    VerifyLemma(Common),
    /// Basis pursuit exactness for separated supports
    VerifyL1(Common),
    /// Projection backends against the exhaustive oracle
    OracleCompare(Common),
    /// Rerun recovery on a saved instance
    Replay(ReplayArgs),
}

/// Grids accept `a,b,c` or `start:end[:step]`.
#[derive(Args, Clone, Default)]
struct Common {
    /// Start from a TOML spec instead of the built-in defaults
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_name = "GRID")]
    k: Option<String>,
    #[arg(long = "m-grid", alias = "m", value_name = "GRID")]
    m_grid: Option<String>,
    #[arg(long = "hmin-grid", alias = "hmin", value_name = "GRID")]
    hmin_grid: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Comma-separated: omp, cosamp, l1, oracle
    #[arg(long)]
    backend: Option<String>,
    /// Comma-separated: exact, envelope, brute
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated: clustered, separated:<h_min>
    #[arg(long)]
    structure: Option<String>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    exhaustive: bool,
    /// Coefficient model: gaussian, or phase[:<magnitude>]
    #[arg(long)]
    coefficients: Option<String>,
    /// gaussian or identity
    #[arg(long)]
    measurement: Option<String>,
    #[arg(long = "max-outer")]
    max_outer: Option<usize>,
    #[arg(long = "l1-max-iterations")]
    l1_max_iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// CSV destination; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write failed phase trials as JSON into this directory
    #[arg(long = "dump-failures")]
    dump_failures: Option<PathBuf>,
    /// Print the resolved spec as TOML and exit
    #[arg(long = "print-spec")]
    print_spec: bool,
}

#[derive(Args)]
struct ReplayArgs {
    /// Instance JSON written by --dump-failures
    file: PathBuf,
    /// Backend; defaults to the one recorded in the file
    #[arg(long)]
    backend: Option<Backend>,
}

fn parse_list<T>(text: &str, parse: impl Fn(&str) -> Result<T, Error>) -> Result<Vec<T>, Error> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse).collect()
}

fn parse_grid(text: &str) -> Result<Vec<usize>, Error> {
    let number = |s: &str| s.trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad grid value `{s}`")));
    if text.contains(':') {
        let parts: Vec<usize> = text.split(':').map(number).collect::<Result<_, _>>()?;
        let (start, end, step) = match parts[..] {
            [start, end] => (start, end, 1),
            [start, end, step] if step > 0 => (start, end, step),
            _ => return Err(Error::Parse(format!("bad range `{text}`"))),
        };
        return Ok((start..=end).step_by(step).collect());
    }
    parse_list(text, number)
}

fn parse_coefficients(text: &str) -> Result<CoefficientModel, Error> {
    match text.split_once(':') {
        None if text == "gaussian" => Ok(CoefficientModel::Gaussian),
        None if text == "phase" => Ok(CoefficientModel::Phase { magnitude: 1.0 }),
        Some(("phase", m)) => m
            .parse()
            .map(|magnitude| CoefficientModel::Phase { magnitude })
            .map_err(|_| Error::Parse(format!("bad magnitude in `{text}`"))),
        _ => Err(Error::Parse(format!("unknown coefficient model `{text}`"))),
    }
}

fn parse_measurement(text: &str) -> Result<MeasurementKind, Error> {
    match text {
        "gaussian" => Ok(MeasurementKind::Gaussian),
        "identity" => Ok(MeasurementKind::Identity),
        _ => Err(Error::Parse(format!("unknown measurement kind `{text}`"))),
    }
}

fn resolve_spec(kind: ExperimentKind, args: &Common) -> Result<ExperimentSpec, Error> {
    let mut spec = match &args.spec {
        Some(path) => {
            let spec = ExperimentSpec::from_toml(&fs::read_to_string(path)?)?;
            if spec.kind != kind {
                return Err(Error::Config(format!("{} holds a {} spec", path.display(), spec.kind)));
            }
            spec
        }
        None => ExperimentSpec::for_kind(kind),
    };
    if let Some(n) = args.n {
        spec.n = n;
    }
    if let Some(d) = args.d {
        spec.d = d;
    }
    if let Some(k) = &args.k {
        spec.k_grid = parse_grid(k)?;
    }
    if let Some(m) = &args.m_grid {
        spec.m_grid = parse_grid(m)?;
    }
    if let Some(h) = &args.hmin_grid {
        spec.h_min_grid = parse_grid(h)?;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(epsilon) = args.epsilon {
        spec.epsilon = epsilon;
    }
    if let Some(backends) = &args.backend {
        spec.backends = parse_list(backends, str::parse::<Backend>)?;
    }
    if let Some(modes) = &args.mode {
        spec.modes = parse_list(modes, str::parse::<BoundMode>)?;
    }
    if let Some(structures) = &args.structure {
        spec.structures = parse_list(structures, str::parse::<SignalStructure>)?;
    }
    if let Some(margin) = args.margin {
        spec.margin = margin;
    }
    spec.exhaustive |= args.exhaustive;
    if let Some(model) = &args.coefficients {
        spec.coefficients = parse_coefficients(model)?;
    }
    if let Some(kind) = &args.measurement {
        spec.measurement = parse_measurement(kind)?;
    }
    if let Some(max_outer) = args.max_outer {
        spec.max_outer_iterations = max_outer;
    }
    if let Some(cap) = args.l1_max_iterations {
        spec.projection.l1_max_iterations = cap;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    Ok(spec)
}

fn failure_file_name(failure: &FailedTrial) -> String {
    format!(
        "{}-{}-m{}-trial{}.json",
        failure.backend,
        failure.instance.structure.to_string().replace(':', "-"),
        failure.instance.m,
        failure.trial
    )
}

fn dump_failures(dir: &Path, table: &ResultTable) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    for failure in &table.failures {
        let json = serde_json::to_string_pretty(failure).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(dir.join(failure_file_name(failure)), json)?;
    }
    Ok(())
}

fn experiment(kind: ExperimentKind, args: &Common) -> Result<ExitCode, Error> {
    let spec = resolve_spec(kind, args)?;
    if args.print_spec {
        print!("{}", spec.to_toml()?);
        return Ok(ExitCode::SUCCESS);
    }
    let options = RunOptions { workers: args.workers, collect_failures: args.dump_failures.is_some() };
    let table = run(&spec, &options)?;
    match &args.out {
        Some(path) => {
            let mut file = BufWriter::new(File::create(path)?);
            table.write_csv(&mut file)?;
            file.flush()?;
            eprintln!("{}: {} rows written to {}", kind, table.rows.len(), path.display());
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    if let Some(dir) = &args.dump_failures {
        dump_failures(dir, &table)?;
        eprintln!("{} failed trials written to {}", table.failures.len(), dir.display());
    }
    let violations = table.violations();
    for violation in &violations {
        eprintln!("FAILED {violation}");
    }
    Ok(if violations.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn replay_file(args: &ReplayArgs) -> Result<ExitCode, Error> {
    let text = fs::read_to_string(&args.file)?;
    let (record, recorded_backend) = match serde_json::from_str::<FailedTrial>(&text) {
        Ok(failure) => (failure.instance, Some(failure.backend)),
        Err(_) => (InstanceRecord::from_json(&text)?, None),
    };
    let backend = args
        .backend
        .or(recorded_backend)
        .ok_or_else(|| Error::Config("the instance records no backend; pass --backend".into()))?;
    let outcome = replay(&record, backend, None)?;
    let json = serde_json::to_string_pretty(&outcome).map_err(|e| Error::Parse(e.to_string()))?;
    println!("{json}");
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Phase(args) => experiment(ExperimentKind::Phase, args),
        Command::Bounds(args) => experiment(ExperimentKind::Bounds, args),
        Command::Gram(args) => experiment(ExperimentKind::Gram, args),
        Command::VerifyTheorem(args) => experiment(ExperimentKind::VerifyTheorem, args),
        Command::VerifyLemma(args) => experiment(ExperimentKind::VerifyLemma, args),
        Command::VerifyL1(args) => experiment(ExperimentKind::VerifyL1, args),
        Command::OracleCompare(args) => experiment(ExperimentKind::OracleCompare, args),
        Command::Replay(args) => replay_file(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("4,8, 16").unwrap(), vec![4, 8, 16]);
        assert_eq!(parse_grid("32:64:16").unwrap(), vec![32, 48, 64]);
        assert_eq!(parse_grid("1:3").unwrap(), vec![1, 2, 3]);
        assert!(parse_grid("1:3:0").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn coefficient_models_parse() {
        assert_eq!(parse_coefficients("gaussian").unwrap(), CoefficientModel::Gaussian);
        assert_eq!(parse_coefficients("phase:0.5").unwrap(), CoefficientModel::Phase { magnitude: 0.5 });
        assert!(parse_coefficients("uniform").is_err());
    }

    #[test]
    fn overrides_apply() {
        let args = Common {
            n: Some(64),
            d: Some(256),
            m_grid: Some("16,32".into()),
            backend: Some("omp,l1".into()),
            structure: Some("clustered".into()),
            seed: Some(5),
            ..Common::default()
        };
        let spec = resolve_spec(ExperimentKind::Phase, &args).unwrap();
        assert_eq!((spec.n, spec.d, spec.seed), (64, 256, 5));
        assert_eq!(spec.m_grid, vec![16, 32]);
        assert_eq!(spec.backends, vec![Backend::Omp, Backend::L1]);
        assert_eq!(spec.structures, vec![SignalStructure::Clustered]);
    }
}
