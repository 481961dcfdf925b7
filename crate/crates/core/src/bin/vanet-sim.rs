use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vanet_sim::harness::{
    self, emit_csv, parse_config, Condition, MatrixRow, ScenarioConfig, DEFAULT_SEEDS, DENSITIES,
};
use vanet_sim::{Scheme, SimError};

#[derive(Parser)]
#[command(
    name = "vanet-sim",
    version,
    about = "Vehicular announcement and trust simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single condition.
    Run(Common),
    /// Run every condition at n = 10, 30, 50 over the seed list.
    Matrix(Common),
}

#[derive(Args)]
struct Common {
    /// Config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// no_event, false_announcement, unannounced_event or trustworthy_announcement.
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
    #[arg(long)]
    vehicles: Option<u32>,
    /// none, receiver_side or sender_side.
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    Condition::parse(s).ok_or_else(|| format!("unknown condition `{s}`"))
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    Scheme::parse(s).ok_or_else(|| format!("unknown scheme `{s}`"))
}

fn load(c: &Common) -> Result<ScenarioConfig, SimError> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| SimError::Io {
                path: path.clone(),
                source,
            })?;
            parse_config(&text)?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(v) = c.condition {
        cfg.condition = v;
    }
    if let Some(v) = c.vehicles {
        cfg.n_vehicles = v;
    }
    if let Some(v) = c.scheme {
        cfg.scheme.scheme = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<bool, SimError> {
    let rows = match &cli.command {
        Command::Run(c) => {
            let cfg = load(c)?;
            let report = harness::run_condition(&cfg)?;
            vec![MatrixRow {
                condition: cfg.condition,
                n_vehicles: cfg.n_vehicles,
                scheme: cfg.scheme.scheme,
                seed: cfg.seed,
                report,
            }]
        }
        Command::Matrix(c) => {
            let cfg = load(c)?;
            let densities = c.vehicles.map_or(DENSITIES.to_vec(), |n| vec![n]);
            let schemes = c.scheme.map_or(Scheme::ALL.to_vec(), |s| vec![s]);
            let conditions = c.condition.map_or(Condition::ALL.to_vec(), |k| vec![k]);
            let seeds = c.seed.map_or(DEFAULT_SEEDS.to_vec(), |s| vec![s]);
            harness::run_matrix(&cfg, &conditions, &densities, &schemes, &seeds)?
        }
    };
    let out = match &cli.command {
        Command::Run(c) | Command::Matrix(c) => &c.out,
    };
    let paths = emit_csv(&rows, out)?;
    let mut complete = true;
    // A closed pipe on stdout must not turn a finished run into a failure.
    let mut stdout = io::stdout().lock();
    for r in &rows {
        let avg = r
            .report
            .average_travel_time()
            .map_or("n/a".to_string(), |a| format!("{a:.3}"));
        let _ = writeln!(
            stdout,
            "{} n={} scheme={} seed={} avg_travel_time={} trust_messages={}{}",
            r.condition.as_str(),
            r.n_vehicles,
            r.scheme.as_str(),
            r.seed,
            avg,
            r.report.trust_messages(),
            if r.report.incomplete {
                " INCOMPLETE"
            } else {
                ""
            }
        );
        complete &= !r.report.incomplete;
    }
    let _ = writeln!(
        stdout,
        "wrote {} and {}",
        paths.vehicles.display(),
        paths.aggregate.display()
    );
    Ok(complete)
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: at least one run did not finish every vehicle");
            ExitCode::from(3)
        }
        Err(e @ SimError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
