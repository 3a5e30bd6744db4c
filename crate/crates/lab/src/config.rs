//! Experiment configuration: a TOML file with one section per experiment.
//!
//! ```toml
//! [run]
//! seed = 7
//! mode = "float"
//!
//! [type1]
//! test = "gct:K=7,I=12,D=64"
//! theories = ["bernoulli:0.2", "bernoulli:0.5", "bernoulli:0.8"]
//! horizon = 256
//! replications = 20000
//! ```

use catest_core::Arith;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::SyntaxError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("[{section}] {field}: {source}")]
    Field {
        section: &'static str,
        field: &'static str,
        #[source]
        source: SyntaxError,
    },
    #[error("[{section}] {field}: {message}")]
    Value {
        section: &'static str,
        field: &'static str,
        message: String,
    },
}

impl ConfigError {
    pub fn field(section: &'static str, field: &'static str) -> impl FnOnce(SyntaxError) -> ConfigError {
        move |source| ConfigError::Field { section, field, source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    #[default]
    Float,
}

impl Mode {
    pub fn arith(self) -> Arith {
        match self {
            Mode::Exact => Arith::Exact,
            Mode::Float => Arith::Approx,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub seed: u64,
    pub mode: Mode,
    pub jobs: Option<usize>,
    pub out: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 1,
            mode: Mode::Float,
            jobs: None,
            out: "reports".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Type1Section {
    pub test: String,
    pub theories: Vec<String>,
    pub horizon: usize,
    pub replications: usize,
}

impl Default for Type1Section {
    fn default() -> Self {
        Self {
            test: "gct:K=7,I=12,D=64".into(),
            theories: vec!["bernoulli:0.2".into(), "bernoulli:0.5".into(), "bernoulli:0.8".into()],
            horizon: 256,
            replications: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ManipulateSection {
    pub test: String,
    /// `double-oracle` over grid strategies, or `menu` over `menu` theories.
    pub strategy: String,
    #[serde(rename = "Th")]
    pub horizon: usize,
    pub g: u32,
    pub gap: f64,
    pub max_rounds: usize,
    pub menu: Vec<String>,
    pub calibration_grid: u32,
    pub calibration_rounds: u64,
    pub calibration_seeds: u64,
}

impl Default for ManipulateSection {
    fn default() -> Self {
        Self {
            test: "avgmatch:tol=0.3,nmin=3".into(),
            strategy: "double-oracle".into(),
            horizon: 8,
            g: 5,
            gap: 0.02,
            max_rounds: 400,
            menu: Vec::new(),
            calibration_grid: 10,
            calibration_rounds: 100_000,
            calibration_seeds: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RevealSection {
    /// Explicit lotteries; when empty, `random` lotteries are drawn.
    pub zeta: Vec<String>,
    pub random: usize,
    pub max_support: usize,
    #[serde(rename = "K")]
    pub layers: usize,
    #[serde(rename = "I")]
    pub paths: usize,
    #[serde(rename = "D")]
    pub depth: usize,
}

impl Default for RevealSection {
    fn default() -> Self {
        Self {
            zeta: Vec::new(),
            random: 20,
            max_support: 8,
            layers: 5,
            paths: 12,
            depth: 64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prop3Section {
    pub thetas: usize,
    #[serde(rename = "N")]
    pub cap: usize,
    pub c: String,
}

impl Default for Prop3Section {
    fn default() -> Self {
        Self {
            thetas: 20,
            cap: 200,
            c: "2".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractSection {
    pub u: Vec<String>,
    pub d: Vec<String>,
    pub eps: Vec<String>,
}

impl Default for ContractSection {
    fn default() -> Self {
        Self {
            u: ["0.5", "1", "1.5", "2"].map(String::from).to_vec(),
            d: ["2", "3", "5", "10"].map(String::from).to_vec(),
            eps: (1..=30).map(|n| format!("{}", f64::from(n) / 100.0)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSection {
    pub probes: usize,
    pub horizon: usize,
    pub tests: Vec<String>,
    pub gct: String,
}

impl Default for AuditSection {
    fn default() -> Self {
        Self {
            probes: 1000,
            horizon: 8,
            tests: vec![
                "avgmatch:tol=0.2,nmin=2".into(),
                "calib:w=0.25,tol=0.2,min=2,T=8".into(),
                "lik:q=bernoulli:1/3,c=3".into(),
            ],
            gct: "gct:K=2,I=4,D=16,atoms=declared".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub run: RunSection,
    pub type1: Type1Section,
    pub manipulate: ManipulateSection,
    pub reveal: RevealSection,
    pub prop3: Prop3Section,
    pub contract: ContractSection,
    pub audit: AuditSection,
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
            ConfigError::Parse {
                line,
                column,
                message: e.message().to_string(),
            }
        })
    }

    /// The fully resolved configuration, defaults included.
    pub fn render(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_sections() {
        let c = Config::parse("[run]\nseed = 9\nmode = \"exact\"\n").unwrap();
        assert_eq!(c.run.seed, 9);
        assert_eq!(c.run.mode, Mode::Exact);
        assert_eq!(c.type1, Type1Section::default());
        assert_eq!(Config::parse(&c.render()).unwrap(), c);
    }

    #[test]
    fn errors_point_at_the_line() {
        let text = "[run]\nseed = 1\n\n[type1]\nhorizon = \"long\"\n";
        match Config::parse(text) {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        match Config::parse("[type1]\nhorizn = 3\n") {
            Err(ConfigError::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("horizn"));
            }
            other => panic!("{other:?}"),
        }
    }
}
