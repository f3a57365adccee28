use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use intraday_cli::config::split_list;
use intraday_cli::{
    cmd_gradcheck, cmd_report, cmd_run, cmd_synth, cmd_validate, exit_code, format_diagnostics, format_gradcheck,
    print_table, CliError, RunConfig,
};
use intraday_core::lstm::GradcheckConfig;

#[derive(Parser)]
#[command(name = "intraday", version, about = "Rolling-window intraday return forecasting")]
struct Cli {
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic minute bars to a CSV file.
    Synth {
        #[command(flatten)]
        common: ConfigArgs,
        /// Number of weekdays to generate.
        #[arg(long)]
        days: Option<usize>,
        /// First calendar day (YYYY-MM-DD).
        #[arg(long)]
        start: Option<NaiveDate>,
        /// Output CSV path.
        #[arg(long, default_value = "synthetic_bars.csv")]
        out: PathBuf,
    },
    /// Check a minute-bar CSV; exits 0 only if it is clean.
    Validate { path: PathBuf },
    /// Run the rolling-window pipeline and write predictions and reports.
    Run {
        #[command(flatten)]
        common: ConfigArgs,
        /// Minute-bar CSV (synthetic data is generated if omitted).
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated models, e.g. NAIVE,OLS-VIX,LSTM-VIX,RF.
        #[arg(long)]
        models: Option<String>,
        /// Comma-separated predictor sets (VIX, AR1, AGG).
        #[arg(long)]
        predictors: Option<String>,
    },
    /// Compare analytic LSTM gradients with central differences.
    Gradcheck(GradcheckArgs),
    /// Recompute daily and aggregate reports from a prediction store.
    Report {
        /// Prediction store CSV.
        #[arg(long, default_value = "out/predictions.csv")]
        predictions: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        match &self.config {
            Some(p) => RunConfig::from_file(p),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 2)]
    input_dim: usize,
    #[arg(long, default_value_t = 3)]
    hidden_dim: usize,
    #[arg(long, default_value_t = 5)]
    seq_len: usize,
    #[arg(long, default_value_t = 20)]
    instances: usize,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            common,
            days,
            start,
            out,
        } => {
            let mut cfg = common.load()?;
            cfg.synth_days = days.or(cfg.synth_days);
            cfg.synth_seed = common.seed.or(cfg.synth_seed);
            cfg.synth_start = start.or(cfg.synth_start);
            let rows = cmd_synth(&cfg.synth_params(), cfg.synth_start(), &out)?;
            println!("wrote {rows} rows to {}", out.display());
        }
        Command::Validate { path } => {
            let diag = cmd_validate(&path)?;
            print!("{}", format_diagnostics(&diag));
            if !diag.is_clean() {
                return Err(CliError::Data(format!("{} issue(s) in {}", diag.issue_count(), path.display())).into());
            }
        }
        Command::Run {
            common,
            input,
            workers,
            out,
            models,
            predictors,
        } => {
            let mut cfg = common.load()?;
            cfg.seed = common.seed.or(cfg.seed);
            cfg.input = input.or(cfg.input);
            cfg.workers = workers.or(cfg.workers);
            cfg.out = out.or(cfg.out);
            cfg.models = models.as_deref().map(split_list).or(cfg.models);
            cfg.predictors = predictors.as_deref().map(split_list).or(cfg.predictors);
            let output = cmd_run(&cfg)?;
            print_table(&output.aggregate);
            println!("{} predictions written to {}", output.records.len(), output.out_dir.display());
        }
        Command::Gradcheck(a) => {
            let report = cmd_gradcheck(&GradcheckConfig {
                input_dim: a.input_dim,
                hidden_dim: a.hidden_dim,
                seq_len: a.seq_len,
                instances: a.instances,
                eps: a.eps,
                tolerance: a.tolerance,
                seed: a.seed,
                ..GradcheckConfig::default()
            })?;
            print!("{}", format_gradcheck(&report));
            if !report.passed {
                return Err(CliError::Numeric(format!(
                    "max relative error {:.3e} exceeds {:.1e}",
                    report.max_rel_error, a.tolerance
                ))
                .into());
            }
        }
        Command::Report { predictions, out } => {
            let rows = cmd_report(&predictions, &out)?;
            print_table(&rows);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
