use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noma_beams::experiment::{self, Experiment, ExperimentConfig, PresetOverrides};
use noma_beams::validate::{self, Suite};
use noma_beams::{CandidateStrategy, Error, Metric};

/// Secondary-user NOMA over zero-forcing beams: sweeps, figure presets and
/// self-checks.
#[derive(Parser)]
#[command(name = "noma-beams", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a figure preset (fig1a, fig1b, fig2a, fig2b).
    Preset {
        name: String,
        /// Comma-separated beam counts; N = M for each.
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        #[arg(long)]
        r_p: Option<f64>,
        #[arg(long)]
        r_s: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a validation suite: zf, distribution, solver, dominance, lemma1, all.
    Validate {
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Output CSV path; `-` for standard output.
    #[arg(long, default_value = "-")]
    out: String,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// SNR grid as start:stop:step in dB.
    #[arg(long = "snr-db")]
    snr_db: Option<String>,
    /// prefixes, prefixes+singletons or all-subsets.
    #[arg(long)]
    strategy: Option<String>,
    /// outage, ergodic_rate, ergodic_rate_unconditioned or primary_min_rate.
    #[arg(long)]
    metric: Option<String>,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Also print a summary table (to stderr when the CSV goes to stdout).
    #[arg(long)]
    summary: bool,
}

enum Failure {
    Validation(String),
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Usage(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) => Failure::Usage(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep { config, run } => cmd_sweep(&config, &run),
        Command::Preset { name, m, r_p, r_s, run } => cmd_preset(&name, m, r_p, r_s, &run),
        Command::Validate { suite, seed } => cmd_validate(&suite, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn parse_overrides(run: &RunArgs) -> Result<PresetOverrides, Failure> {
    Ok(PresetOverrides {
        trials: run.trials,
        seed: run.seed,
        snr_db: run.snr_db.as_deref().map(experiment::parse_snr_range).transpose()?,
        strategy: run.strategy.as_deref().map(str::parse::<CandidateStrategy>).transpose()?,
        metric: run.metric.as_deref().map(str::parse::<Metric>).transpose()?,
        ..Default::default()
    })
}

fn cmd_sweep(config: &Path, run: &RunArgs) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::load(config)?;
    let o = parse_overrides(run)?;
    if let Some(t) = o.trials {
        cfg.trials = t;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(snr) = o.snr_db {
        cfg.snr_db = snr;
    }
    if let Some(s) = o.strategy {
        cfg.candidate_strategy = Some(s.name().to_string());
    }
    if let Some(m) = o.metric {
        cfg.metric = m.name().to_string();
    }
    let name = config.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let exp = Experiment::from_config(&name, &cfg)?;
    execute(&exp, run)
}

fn cmd_preset(
    name: &str,
    m: Option<Vec<usize>>,
    r_p: Option<f64>,
    r_s: Option<f64>,
    run: &RunArgs,
) -> Result<(), Failure> {
    let overrides = PresetOverrides {
        m_beams: m,
        r_p,
        r_s,
        ..parse_overrides(run)?
    };
    let exp = experiment::preset(name, &overrides)?;
    execute(&exp, run)
}

fn execute(exp: &Experiment, run: &RunArgs) -> Result<(), Failure> {
    let to_stdout = run.out == "-";
    // open the destination before the (possibly long) run
    let file = if to_stdout {
        None
    } else {
        Some(File::create(&run.out).map_err(|e| Failure::Io(format!("cannot write {}: {e}", run.out)))?)
    };
    let results = exp.run(run.workers)?;
    let io_err = |e: io::Error| Failure::Io(format!("cannot write {}: {e}", run.out));
    match file {
        Some(f) => {
            let mut w = BufWriter::new(f);
            experiment::write_csv(&mut w, exp, &results).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            experiment::write_csv(&mut w, exp, &results).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
    }
    if run.summary {
        let table = experiment::summary_table(&results);
        if to_stdout {
            eprint!("{table}");
        } else {
            print!("{table}");
        }
    }
    Ok(())
}

fn cmd_validate(suite: &str, seed: u64) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let report = validate::run(suite, seed)?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        let names: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        Err(Failure::Validation(format!("failed: {}", names.join("; "))))
    }
}
