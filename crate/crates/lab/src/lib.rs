//! Experiment harness for the forecast-testing core: configuration, the
//! experiment drivers, exact checks and CSV reports.

pub mod checks;
pub mod config;
pub mod contract;
pub mod experiments;
pub mod report;
pub mod syntax;

use config::Config;
use experiments::{ExperimentError, Options};
use report::Report;

/// Experiments that the command line can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Type1,
    Manipulate,
    Reveal,
    Prop3,
    Contract,
    Audit,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Type1,
        Experiment::Manipulate,
        Experiment::Reveal,
        Experiment::Prop3,
        Experiment::Contract,
        Experiment::Audit,
    ];
}

/// Calibration error target for the randomized forecaster.
pub const CALIBRATION_TARGET: f64 = 0.05;

/// Runs one experiment; `manipulate` also runs the calibration forecaster.
pub fn run(kind: Experiment, cfg: &Config) -> Result<Vec<Report>, ExperimentError> {
    let opts = Options {
        seed: cfg.run.seed,
        mode: cfg.run.mode.arith(),
    };
    Ok(match kind {
        Experiment::Type1 => vec![experiments::type1(&cfg.type1, &opts)?],
        Experiment::Manipulate => vec![
            experiments::manipulate(&cfg.manipulate)?.report,
            experiments::calibration(&cfg.manipulate, &opts, CALIBRATION_TARGET),
        ],
        Experiment::Reveal => vec![experiments::reveal(&cfg.reveal, &opts)?.0],
        Experiment::Prop3 => vec![experiments::prop3(&cfg.reveal, &cfg.prop3, &opts)?],
        Experiment::Contract => vec![experiments::contract(&cfg.contract)?],
        Experiment::Audit => vec![experiments::audit(&cfg.audit, &opts)?],
    })
}

impl Config {
    /// Every experiment at sizes that finish in seconds.
    pub fn demo() -> Self {
        let mut c = Config::default();
        c.type1.replications = 500;
        c.type1.horizon = 128;
        c.manipulate.horizon = 6;
        c.manipulate.g = 4;
        c.manipulate.test = "avgmatch:tol=0.3,nmin=2".into();
        c.manipulate.calibration_rounds = 10_000;
        c.manipulate.calibration_seeds = 1;
        c.reveal.random = 4;
        c.reveal.max_support = 4;
        c.prop3.thetas = 3;
        c.audit.probes = 100;
        c.audit.horizon = 6;
        c
    }
}
