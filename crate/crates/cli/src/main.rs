//! `contab`: generate contingency tables with prescribed margins and odds
//! ratios, fit loglinear Poisson models, estimate population sizes from
//! masked tables and run Monte Carlo studies.

mod config;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use contab::io::{
    describe_dependence, describe_margins, read_observed_csv, read_table_csv,
    read_table_json, write_summary_csv, write_table_csv, write_table_json, SummaryRow,
};
use contab::sim::{CvDenominator, SimulationConfig};
use contab::{
    estimate_population, fit_poisson, generate, realized_conditional_ors, ConditionalOr,
    ContingencyTable, DependenceSpec, Error, ModelSpec, PairwiseOr, DEFAULT_SCALE,
};

use config::{parse_pair, ConfigFile};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn config(message: String) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message,
        }
    }

    pub fn from_config_err(e: Error) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Spec(_) | Error::Input(_) | Error::IndexOutOfRange(_) => EXIT_CONFIG,
            _ => EXIT_NUMERIC,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "contab",
    about = "Contingency tables with prescribed margins and odds ratios; \
             dual/triple-system population size estimation",
    after_help = "Exit codes: 0 success, 2 configuration error, 3 numeric failure."
)]
struct Cli {
    /// Output file (default: stdout)
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format for tables and results
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Override the config base seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Number of simulation worker threads (default: available parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a probability table from a scenario config
    Generate {
        /// Scenario config (TOML)
        config: PathBuf,
    },
    /// Fit a loglinear Poisson model to a table file, optionally with offsets
    Fit {
        /// Table file (.csv or .json)
        table: PathBuf,
        /// Model in generator-class notation, e.g. "[A][B]" or "[AB][AC]"
        #[arg(long)]
        model: String,
        /// Pairwise odds-ratio offset, e.g. "AB=2" (repeatable)
        #[arg(long = "or")]
        odds_ratios: Vec<String>,
        /// Conditional odds-ratio offset, e.g. "AB|0=2" (repeatable)
        #[arg(long = "cond-or")]
        conditional_odds_ratios: Vec<String>,
    },
    /// Estimate the population size from an observed table with one missing cell
    Estimate {
        /// Observed-table CSV with a `missing` marker row
        table: PathBuf,
        /// Model in generator-class notation
        #[arg(long)]
        model: String,
    },
    /// Run the Monte Carlo study described by a scenario config
    Simulate {
        /// Scenario config (TOML) with a [simulation] section
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate { config } => cmd_generate(cli, config),
        Command::Fit {
            table,
            model,
            odds_ratios,
            conditional_odds_ratios,
        } => cmd_fit(cli, table, model, odds_ratios, conditional_odds_ratios),
        Command::Estimate { table, model } => cmd_estimate(cli, table, model),
        Command::Simulate { config } => cmd_simulate(cli, config),
    }
}

fn open_output(cli: &Cli) -> Result<Box<dyn Write>, CliError> {
    match &cli.output {
        Some(path) => File::create(path)
            .map(|f| Box::new(f) as Box<dyn Write>)
            .map_err(|e| CliError::config(format!("cannot create {}: {e}", path.display()))),
        None => Ok(Box::new(std::io::stdout())),
    }
}

fn read_table(path: &Path) -> Result<ContingencyTable, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::config(format!("cannot open {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        Ok(read_table_json(file)?)
    } else {
        Ok(read_table_csv(file)?)
    }
}

fn cmd_generate(cli: &Cli, config_path: &Path) -> Result<(), CliError> {
    let cfg = ConfigFile::load(config_path)?;
    let margins = cfg.margins()?;
    let dep = cfg.dependence()?;
    let scale = cfg.scale.unwrap_or(DEFAULT_SCALE);
    let generated = generate(&margins, &dep, scale)?;
    let table = &generated.table;

    // verification report on stderr
    eprintln!("margins: {}", describe_margins(&margins));
    for (name, _) in margins.factors() {
        let dist = table.margin_distribution(name)?;
        let realized: Vec<String> = dist.iter().map(|p| format!("{p:.6}")).collect();
        eprintln!("realized margin {name}: {}", realized.join(", "));
    }
    match &dep {
        DependenceSpec::Pairwise(_) => {
            for (or, theta) in contab::generate::realized_pairwise_ors(table, &dep)? {
                eprintln!(
                    "realized OR {}{}[{},{}]: {theta:.6}",
                    or.factors.0, or.factors.1, or.levels.0, or.levels.1
                );
            }
        }
        DependenceSpec::Conditional(specs) => {
            for (or, theta) in realized_conditional_ors(table, specs)? {
                eprintln!(
                    "realized OR {}{}|{}: {theta:.6}",
                    or.pair.0, or.pair.1, or.conditioning_level
                );
            }
        }
    }
    if !generated.degenerate_cells.is_empty() {
        eprintln!(
            "warning: {} cell(s) below 1e-12 of the total (extreme odds ratios)",
            generated.degenerate_cells.len()
        );
    }

    let out = open_output(cli)?;
    match cli.format {
        Format::Csv => write_table_csv(table, out)?,
        Format::Json => write_table_json(table, out)?,
    }
    Ok(())
}

fn parse_or_flag(spec: &str) -> Result<PairwiseOr, CliError> {
    let (pair, theta) = spec
        .split_once('=')
        .ok_or_else(|| CliError::config(format!("--or expects PAIR=THETA, got {spec:?}")))?;
    let (a, b) = parse_pair(pair)?;
    let theta: f64 = theta
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("--or {spec:?}: cannot parse theta")))?;
    Ok(PairwiseOr::new(a, b, theta))
}

fn parse_cond_or_flag(spec: &str) -> Result<ConditionalOr, CliError> {
    let (lhs, theta) = spec.split_once('=').ok_or_else(|| {
        CliError::config(format!("--cond-or expects PAIR|LEVEL=THETA, got {spec:?}"))
    })?;
    let (pair, level) = lhs.split_once('|').ok_or_else(|| {
        CliError::config(format!("--cond-or expects PAIR|LEVEL=THETA, got {spec:?}"))
    })?;
    let (a, b) = parse_pair(pair)?;
    let level: usize = level
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("--cond-or {spec:?}: cannot parse level")))?;
    let theta: f64 = theta
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("--cond-or {spec:?}: cannot parse theta")))?;
    Ok(ConditionalOr::new(a, b, level, theta))
}

fn cmd_fit(
    cli: &Cli,
    table_path: &Path,
    model: &str,
    or_flags: &[String],
    cond_or_flags: &[String],
) -> Result<(), CliError> {
    let table = read_table(table_path)?;
    let model = ModelSpec::parse(model).map_err(CliError::from_config_err)?;
    let dep = match (or_flags.is_empty(), cond_or_flags.is_empty()) {
        (false, false) => {
            return Err(CliError::config(
                "give either --or or --cond-or flags, not both".into(),
            ))
        }
        (true, false) => DependenceSpec::Conditional(
            cond_or_flags
                .iter()
                .map(|s| parse_cond_or_flag(s))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        _ => DependenceSpec::Pairwise(
            or_flags
                .iter()
                .map(|s| parse_or_flag(s))
                .collect::<Result<Vec<_>, _>>()?,
        ),
    };
    let shape = table.shape();
    let design = contab::build_design(shape, &model)?
        .with_offset(contab::build_offset(shape, &dep)?)?;
    let fit = fit_poisson(table.cells(), &design)?;

    let mut out = open_output(cli)?;
    match cli.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, &fit)
                .map_err(|e| CliError::config(e.to_string()))?;
            writeln!(out).ok();
        }
        Format::Csv => {
            writeln!(out, "model: {model}").ok();
            for (label, coef) in fit.coefficient_labels.iter().zip(&fit.coefficients) {
                writeln!(out, "{label} = {coef:.10}").ok();
            }
            let fitted: Vec<String> =
                fit.fitted_values.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "fitted: {}", fitted.join(", ")).ok();
            writeln!(out, "deviance: {:.10e}", fit.deviance).ok();
            writeln!(out, "iterations: {}", fit.iterations).ok();
        }
    }
    Ok(())
}

fn cmd_estimate(cli: &Cli, table_path: &Path, model: &str) -> Result<(), CliError> {
    let file = File::open(table_path)
        .map_err(|e| CliError::config(format!("cannot open {}: {e}", table_path.display())))?;
    let observed = read_observed_csv(file)?;
    let model = ModelSpec::parse(model).map_err(CliError::from_config_err)?;
    let estimate = estimate_population(&observed, &model)?;
    let mut out = open_output(cli)?;
    serde_json::to_writer_pretty(&mut out, &estimate)
        .map_err(|e| CliError::config(e.to_string()))?;
    writeln!(out).ok();
    Ok(())
}

fn cmd_simulate(cli: &Cli, config_path: &Path) -> Result<(), CliError> {
    let cfg = ConfigFile::load(config_path)?;
    let sim_section = cfg.simulation.as_ref().ok_or_else(|| {
        CliError::config(format!(
            "{}: missing [simulation] section",
            config_path.display()
        ))
    })?;
    let margins = cfg.margins()?;
    let dependence = cfg.dependence()?;
    let models = cfg.models()?;
    let base_seed = cli.seed.or(cfg.base_seed).unwrap_or(0);
    let sim_config = SimulationConfig {
        margins: margins.clone(),
        dependence: dependence.clone(),
        population_size: sim_section.population_size,
        replicates: sim_section.replicates,
        models,
        base_seed,
        cv_denominator: sim_section.cv_denominator.unwrap_or(CvDenominator::Mean),
        generator_scale: cfg.scale.unwrap_or(DEFAULT_SCALE),
    };
    let summary = contab::run_simulation(&sim_config)?;

    let rows: Vec<SummaryRow> = summary
        .per_model
        .iter()
        .map(|m| SummaryRow {
            n: summary.population_size,
            margins: describe_margins(&margins),
            odds_ratios: describe_dependence(&dependence),
            model: m.model.clone(),
            mean: m.mean,
            median: m.median,
            q_low: m.quantile_low,
            q_high: m.quantile_high,
            rbias_percent: m.relative_bias_percent,
            cv: m.coefficient_of_variation,
            failures: m.failed_replicate_count,
        })
        .collect();
    for row in &rows {
        eprintln!(
            "{} N={} mean={:.3} median={:.3} rbias%={:.3} cv={:.3} failures={}",
            row.model, row.n, row.mean, row.median, row.rbias_percent, row.cv, row.failures
        );
    }
    let out = open_output(cli)?;
    write_summary_csv(&rows, out)?;
    Ok(())
}
