use std::path::PathBuf;
use std::process::ExitCode;

use catest::config::{Config, Mode};
use catest::{run, Experiment};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "catest", version, about = "Forecast-test experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; missing sections take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,
    /// Directory for CSV and summary reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Rejection rate of the test under the true theory.
    Type1,
    /// Equilibrium lottery of the manipulation game, and the calibrated forecaster.
    Manipulate,
    /// Revelation histories for random or configured lotteries.
    Reveal,
    /// Revelation along random dense paths with likelihood-ratio checks.
    Prop3,
    /// Screening-contract payoffs.
    Contract,
    /// Forecast-equivalence probes of each test.
    Audit,
    /// Every experiment at small sizes.
    Demo,
    /// Print the resolved configuration.
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

fn load(cli: &Cli) -> Result<Config, String> {
    let mut cfg = match (&cli.config, cli.command) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            Config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        (None, Command::Demo) => Config::demo(),
        (None, _) => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(mode) = cli.mode {
        cfg.run.mode = match mode {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Float => Mode::Float,
        };
    }
    if let Some(out) = &cli.out {
        cfg.run.out = out.display().to_string();
    }
    if cli.jobs.is_some() {
        cfg.run.jobs = cli.jobs;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(jobs) = cfg.run.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let kinds: Vec<Experiment> = match cli.command {
        Command::Config => {
            print!("{}", cfg.render());
            return ExitCode::SUCCESS;
        }
        Command::Type1 => vec![Experiment::Type1],
        Command::Manipulate => vec![Experiment::Manipulate],
        Command::Reveal => vec![Experiment::Reveal],
        Command::Prop3 => vec![Experiment::Prop3],
        Command::Contract => vec![Experiment::Contract],
        Command::Audit => vec![Experiment::Audit],
        Command::Demo => Experiment::ALL.to_vec(),
    };
    let resolved = cfg.render();
    let out = PathBuf::from(&cfg.run.out);
    let mut all_held = true;
    for kind in kinds {
        let reports = match run(kind, &cfg) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error in {kind:?}: {e}");
                return ExitCode::from(2);
            }
        };
        for report in reports {
            println!("== {} ({})", report.name, if report.held { "held" } else { "NOT HELD" });
            for line in &report.summary {
                println!("   {line}");
            }
            match report.write(&out, &resolved) {
                Ok((csv, _)) => println!("   wrote {}", csv.display()),
                Err(e) => {
                    eprintln!("error writing {}: {e}", report.name);
                    return ExitCode::from(2);
                }
            }
            all_held &= report.held;
        }
    }
    if all_held {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
