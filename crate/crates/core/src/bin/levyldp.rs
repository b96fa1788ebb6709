//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 convergence or integrator error,
//! 4 experiment FAIL.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use levyldp::cadlag::{j1_distance, CadlagPath};
use levyldp::cluster::{estimate_cjk, estimate_cjk_tilde, ClusterSampleSpec};
use levyldp::experiments::{
    config::{parse_drift, parse_model, parse_set},
    output::{to_csv, to_json},
    run_probability_table, run_ratio_experiment, run_slope_experiment, with_threads, write_outputs,
    ConfigMap, ExperimentConfig, ResultRecord,
};
use levyldp::levy::ScaledPathSampler;
use levyldp::rate::{largest_jumps_pi, rate_i, rate_i_tilde, DEFAULT_TOL_STEP};
use levyldp::solution::{apply_f, apply_f_inverse, DriftSpec, SolverConfig};
use levyldp::Error;

#[derive(Parser)]
#[command(name = "levyldp", version, about = "Heavy-tailed Lévy SDE simulation and large-deviation checks")]
struct Cli {
    /// Experiment configuration file (flat key = value).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (all cores by default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for result files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Format of the summary printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct DriftArgs {
    /// Drift registry name when no config is given.
    #[arg(long)]
    drift: Option<String>,
    /// Drift parameter when no config is given.
    #[arg(long)]
    drift_param: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample scaled noise paths `εL^ε`.
    Simulate {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Apply the solution map (or its inverse) to a path file.
    Solve {
        path: PathBuf,
        #[arg(long)]
        inverse: bool,
        #[command(flatten)]
        drift: DriftArgs,
    },
    /// Evaluate `I` and `Ĩ` on a path file.
    Rate {
        path: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_TOL_STEP)]
        tol_step: f64,
        #[command(flatten)]
        drift: DriftArgs,
    },
    /// Cluster-measure estimate for the configured set.
    Cjk {
        #[arg(long)]
        j: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        floor: f64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        /// Push samples through the configured drift.
        #[arg(long)]
        tilde: bool,
    },
    /// Probability table over the configured ε-grid.
    Probability,
    /// Slope of log-probability against log(1/ε).
    Slope,
    /// Ratio of probability to its normalizer.
    Ratio,
    /// J1 distance bracket between two path files.
    J1 {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

enum Failure {
    Error(Error),
    Fail,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Convergence { .. } | Error::IntegratorInconsistency { .. } | Error::SolverFailures { .. } => 3,
        _ => 2,
    }
}

fn load_map(cli: &Cli) -> Result<Option<ConfigMap>, Error> {
    let Some(path) = &cli.config else { return Ok(None) };
    let mut map = ConfigMap::load(path)?;
    if let Some(seed) = cli.seed {
        map.set("seed", seed);
    }
    Ok(Some(map))
}

fn require_map(cli: &Cli) -> Result<ConfigMap, Error> {
    load_map(cli)?.ok_or_else(|| Error::Config("this command needs --config".into()))
}

fn experiment(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::from_map(&require_map(cli)?)?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    Ok(cfg)
}

fn drift(cli: &Cli, args: &DriftArgs) -> Result<DriftSpec, Error> {
    if let Some(name) = &args.drift {
        return DriftSpec::from_registry(name, args.drift_param);
    }
    match load_map(cli)? {
        Some(map) => parse_drift(&map),
        None => Ok(DriftSpec::zero()),
    }
}

fn read_path(p: &Path) -> Result<CadlagPath, Error> {
    let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
    CadlagPath::from_json(&text)
}

fn emit(cli: &Cli, stem: &str, text: String) -> Result<(), Error> {
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(stem), text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_path(cli: &Cli, stem: &str, p: &CadlagPath) -> Result<(), Error> {
    match cli.format {
        Format::Json => emit(cli, &format!("{stem}.json"), p.to_json()? + "\n"),
        Format::Csv => emit(cli, &format!("{stem}.csv"), p.to_csv()),
    }
}

fn report(cli: &Cli, record: &ResultRecord, stem: &str) -> Result<(), Failure> {
    let cfg_dir = cli.out.clone();
    if let Some(dir) = cfg_dir.as_deref().or(Some(Path::new("."))) {
        let paths = write_outputs(record, dir, stem)?;
        eprintln!("wrote {}, {}, {}", paths.csv.display(), paths.json.display(), paths.gnuplot.display());
    }
    match cli.format {
        Format::Csv => print!("{}", to_csv(record)),
        Format::Json => println!("{}", to_json(record)?),
    }
    for note in &record.notes {
        eprintln!("note: {note}");
    }
    if let Some(s) = &record.slope {
        eprintln!(
            "slope {:.4} (95% CI {:.4}..{:.4}), theory {}, accepted [{}, {}]",
            s.slope, s.slope_ci95.0, s.slope_ci95.1, s.theory_slope, s.accepted.0, s.accepted.1
        );
    }
    if let Some(r) = &record.ratio {
        eprintln!("ratio branch {} at ({},{}), ratios {:?}, bracket {:?}", r.branch, r.j, r.k, r.ratios, r.bracket);
    }
    eprintln!("{}", if record.pass { "PASS" } else { "FAIL" });
    if record.pass {
        Ok(())
    } else {
        Err(Failure::Fail)
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Simulate { eps, count } => {
            let cfg = experiment(cli)?;
            let eps = eps.unwrap_or(cfg.epsilons[0]);
            let sampler = ScaledPathSampler::new(&cfg.model, &cfg.sim_for(eps))?;
            for i in 0..*count {
                emit_path(cli, &format!("path_{i}"), &sampler.sample(i))?;
            }
            Ok(())
        }
        Command::Solve { path, inverse, drift: d } => {
            let b = drift(cli, d)?;
            let g = read_path(path)?;
            let solver = SolverConfig::default();
            let f = if *inverse { apply_f_inverse(&b, &g, &solver)? } else { apply_f(&b, &g, &solver)? };
            emit_path(cli, if *inverse { "inverse" } else { "solution" }, &f)?;
            Ok(())
        }
        Command::Rate { path, alpha, beta, tol_step, drift: d } => {
            let model = load_map(cli)?.map(|m| parse_model(&m)).transpose()?;
            let alpha = alpha.or(model.as_ref().map(|m| m.alpha)).ok_or(Error::MissingKey("model.alpha".into()))?;
            let beta = beta.or(model.as_ref().map(|m| m.beta)).unwrap_or(alpha);
            let b = drift(cli, d)?;
            let p = read_path(path)?;
            let i = rate_i(&p, alpha, beta, *tol_step, 0.0)?;
            let it = rate_i_tilde(&p, &b, alpha, beta, *tol_step, &SolverConfig::default())?;
            let (u, dn) = largest_jumps_pi(&p);
            let out = serde_json::json!({ "rate_i": i, "rate_i_tilde": it, "drift": b.name(), "pi": [u, dn] });
            match cli.format {
                Format::Json => println!("{out}"),
                Format::Csv => println!("rate_i,rate_i_tilde,pi_up,pi_down\n{i},{it},{u},{dn}"),
            }
            Ok(())
        }
        Command::Cjk { j, k, floor, n, tilde } => {
            let map = require_map(cli)?;
            let model = parse_model(&map)?;
            let set = parse_set(&map)?;
            let seed = map.u64_or("seed", 1)?;
            let spec = ClusterSampleSpec::new(*j, *k, model.alpha, model.beta, *floor, *n, seed);
            let est = with_threads(cli.threads, || {
                if *tilde {
                    estimate_cjk_tilde(&set, &parse_drift(&map)?, &spec, &SolverConfig::default())
                } else {
                    estimate_cjk(&set, &spec)
                }
            })??;
            let v = est.to_json_value();
            match cli.format {
                Format::Json => println!("{v}"),
                Format::Csv => println!(
                    "j,k,n,inner,inner_lo,inner_hi,outer,outer_lo,outer_hi\n{j},{k},{n},{},{},{},{},{},{}",
                    est.inner.value, est.inner.ci95.0, est.inner.ci95.1, est.outer.value, est.outer.ci95.0, est.outer.ci95.1
                ),
            }
            Ok(())
        }
        Command::Probability => {
            let cfg = experiment(cli)?;
            let record = with_threads(cli.threads, || run_probability_table(&cfg))??;
            report(cli, &record, "probability")
        }
        Command::Slope => {
            let cfg = experiment(cli)?;
            let record = with_threads(cli.threads, || run_slope_experiment(&cfg))??;
            report(cli, &record, "slope")
        }
        Command::Ratio => {
            let cfg = experiment(cli)?;
            let record = with_threads(cli.threads, || run_ratio_experiment(&cfg))??;
            report(cli, &record, "ratio")
        }
        Command::J1 { a, b, tol } => {
            let bracket = j1_distance(&read_path(a)?, &read_path(b)?, *tol)?;
            match cli.format {
                Format::Json => println!("{}", serde_json::to_string(&bracket).map_err(Error::from)?),
                Format::Csv => println!(
                    "lower,upper,converged,exact\n{},{},{},{}",
                    bracket.lower, bracket.upper, bracket.converged, bracket.exact
                ),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Fail) => ExitCode::from(4),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
