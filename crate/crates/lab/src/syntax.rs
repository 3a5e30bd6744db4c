//! Text forms of theories, lotteries and tests, as used in config files and
//! reports. Numbers are read exactly: `0.1` is the rational `1/10`.

use catest_core::category::{AtomMode, DenseEnum, GctParams};
use catest_core::forecast_test::{combine, AvgMatch, Calibration, LikelihoodFixed, Test};
use catest_core::likelihood::{RlrParams, TbarParams, Weights};
use catest_core::{Arith, History, PathSpec, Prob, Theory, TheoryLottery, TreeStrategy};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SyntaxError {
    #[error("bad number `{0}`")]
    Number(String),
    #[error("`{0}` is not a probability")]
    NotProbability(String),
    #[error("bad path `{0}`")]
    Path(String),
    #[error("unknown {what} `{name}`")]
    Unknown { what: &'static str, name: String },
    #[error("`{spec}`: {reason}")]
    Invalid { spec: String, reason: String },
    #[error("missing `{key}` in `{spec}`")]
    MissingKey { spec: String, key: &'static str },
    #[error("unbalanced brackets in `{0}`")]
    Brackets(String),
}

fn invalid(spec: &str, reason: impl ToString) -> SyntaxError {
    SyntaxError::Invalid {
        spec: spec.into(),
        reason: reason.to_string(),
    }
}

/// Parses `3`, `-0.25`, `1/8` or `2.5e-3` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational, SyntaxError> {
    let bad = || SyntaxError::Number(s.into());
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !(int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())) {
        return Err(bad());
    }
    let joined: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(joined);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -r } else { r })
}

pub fn parse_prob(s: &str, mode: Arith) -> Result<Prob, SyntaxError> {
    let r = parse_rational(s)?;
    if r.is_negative() || r > BigRational::one() {
        return Err(SyntaxError::NotProbability(s.into()));
    }
    Ok(Prob::from_rational(r, Arith::Exact)
        .expect("checked range")
        .to_mode(mode))
}

pub fn parse_path(s: &str) -> Result<PathSpec, SyntaxError> {
    s.trim().parse().map_err(|_| SyntaxError::Path(s.into()))
}

pub fn parse_history(s: &str) -> Result<History, SyntaxError> {
    s.trim().parse().map_err(|_| SyntaxError::Path(s.into()))
}

/// Splits on `sep` outside square brackets.
pub fn split_top(s: &str, sep: char) -> Result<Vec<&str>, SyntaxError> {
    let mut depth = 0i32;
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth < 0 {
                    return Err(SyntaxError::Brackets(s.into()));
                }
            }
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(SyntaxError::Brackets(s.into()));
    }
    out.push(&s[start..]);
    Ok(out)
}

fn unbracket(s: &str) -> &str {
    let t = s.trim();
    match t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
        Some(inner) => inner,
        None => t,
    }
}

/// `key=value` pairs; a segment without `=` continues the previous value,
/// so `q=markov:0.9,0.1,0.2,0.8,c=10` reads `q` as the whole Markov spec.
fn key_values(spec: &str, body: &str) -> Result<Vec<(String, String)>, SyntaxError> {
    let mut out: Vec<(String, String)> = Vec::new();
    if body.trim().is_empty() {
        return Ok(out);
    }
    for seg in split_top(body, ',')? {
        match seg.split_once('=') {
            Some((k, v)) if !k.contains([':', '[', '@']) => out.push((k.trim().into(), v.trim().into())),
            _ => match out.last_mut() {
                Some((_, v)) => {
                    v.push(',');
                    v.push_str(seg.trim());
                }
                None => return Err(invalid(spec, "expected key=value")),
            },
        }
    }
    Ok(out)
}

struct Fields<'a> {
    spec: &'a str,
    pairs: Vec<(String, String)>,
}

impl<'a> Fields<'a> {
    fn new(spec: &'a str, body: &str, allowed: &[&str]) -> Result<Self, SyntaxError> {
        let pairs = key_values(spec, body)?;
        for (k, _) in &pairs {
            if !allowed.contains(&k.as_str()) {
                return Err(SyntaxError::Unknown {
                    what: "key",
                    name: k.clone(),
                });
            }
        }
        Ok(Self { spec, pairs })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn require(&self, key: &'static str) -> Result<&str, SyntaxError> {
        self.get(key).ok_or(SyntaxError::MissingKey {
            spec: self.spec.into(),
            key,
        })
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize, SyntaxError> {
        match self.get(key) {
            Some(v) => v.parse().map_err(|_| SyntaxError::Number(v.into())),
            None => Ok(default),
        }
    }
}

fn head_body(spec: &str) -> (&str, &str) {
    let t = spec.trim();
    match t.split_once(':') {
        Some((h, b)) => (h.trim(), b.trim()),
        None => (t, ""),
    }
}

pub fn parse_theory(spec: &str, mode: Arith) -> Result<Theory, SyntaxError> {
    let spec = unbracket(spec);
    let (head, body) = head_body(spec);
    let built = match head {
        "bernoulli" => Theory::bernoulli(parse_prob(body, mode)?),
        "markov" => {
            let parts: Vec<&str> = body.split(',').collect();
            if parts.len() != 4 {
                return Err(invalid(spec, "markov needs p00,p01,p10,p11"));
            }
            let p: Vec<Prob> = parts.iter().map(|s| parse_prob(s, mode)).collect::<Result<_, _>>()?;
            Theory::markov(p[0].clone(), p[1].clone(), p[2].clone(), p[3].clone())
        }
        "pointmass" => Ok(Theory::point_mass(parse_path(body)?, mode)),
        "counting" => Ok(Theory::counting(mode)),
        "mixture" => {
            let parts = weighted(spec, body, mode)?;
            Theory::mixture(parts.into_iter().map(|(t, w)| (w, t)).collect())
        }
        "tree" => {
            let fields: Vec<&str> = body.split('/').collect();
            if fields.len() != 3 {
                return Err(invalid(spec, "tree needs grid/horizon/levels"));
            }
            let grid: u32 = fields[0].parse().map_err(|_| SyntaxError::Number(fields[0].into()))?;
            let horizon: usize = fields[1].parse().map_err(|_| SyntaxError::Number(fields[1].into()))?;
            let mut nodes = vec![0];
            for c in fields[2].chars() {
                nodes.push(c.to_digit(36).ok_or_else(|| invalid(spec, "levels are base-36 digits"))?);
            }
            Theory::tree(TreeStrategy { grid, horizon, nodes }, mode)
        }
        other => {
            return Err(SyntaxError::Unknown {
                what: "theory",
                name: other.into(),
            })
        }
    };
    built.map_err(|e| invalid(spec, e))
}

fn weighted(spec: &str, body: &str, mode: Arith) -> Result<Vec<(Theory, Prob)>, SyntaxError> {
    split_top(body, ';')?
        .into_iter()
        .filter(|s| !s.trim().is_empty())
        .map(|part| {
            let (w, t) = part
                .split_once('@')
                .ok_or_else(|| invalid(spec, "components are weight@theory"))?;
            Ok((parse_theory(t, mode)?, parse_prob(w, mode)?))
        })
        .collect()
}

/// `w@theory;w@theory;...`, or `uniform:[theory;theory;...]`.
pub fn parse_lottery(spec: &str, mode: Arith) -> Result<TheoryLottery, SyntaxError> {
    let t = spec.trim();
    let built = if let Some(rest) = t.strip_prefix("uniform:") {
        let theories = split_top(unbracket(rest), ';')?
            .into_iter()
            .map(|s| parse_theory(s, mode))
            .collect::<Result<Vec<_>, _>>()?;
        TheoryLottery::uniform(theories, mode)
    } else if t.contains('@') {
        TheoryLottery::new(weighted(spec, t, mode)?)
    } else {
        Ok(TheoryLottery::singleton(parse_theory(t, mode)?))
    };
    built.map_err(|e| invalid(spec, e))
}

/// Renders a lottery in the form [`parse_lottery`] reads.
pub fn render_lottery(lottery: &TheoryLottery) -> String {
    lottery
        .support()
        .iter()
        .map(|(t, w)| {
            if t.label().contains(';') {
                format!("{w}@[{}]", t.label())
            } else {
                format!("{w}@{}", t.label())
            }
        })
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_gct(spec: &str) -> Result<GctParams, SyntaxError> {
    let (head, body) = head_body(spec);
    if head != "gct" {
        return Err(SyntaxError::Unknown {
            what: "test",
            name: head.into(),
        });
    }
    gct_fields(spec, body)
}

fn gct_fields(spec: &str, body: &str) -> Result<GctParams, SyntaxError> {
    let f = Fields::new(spec, body, &["K", "I", "D", "atoms", "S"])?;
    let defaults = GctParams::default();
    let mut params = GctParams::new(
        f.usize_or("K", defaults.layers)?,
        f.usize_or("I", defaults.paths)?,
        f.usize_or("D", defaults.depth)?,
    )
    .map_err(|e| invalid(spec, e))?;
    if let Some(a) = f.get("atoms") {
        params = params.with_atoms(match a {
            "conservative" => AtomMode::Conservative,
            "declared" => AtomMode::Declared,
            other => {
                return Err(SyntaxError::Unknown {
                    what: "atom mode",
                    name: other.into(),
                })
            }
        });
    }
    if let Some(s) = f.get("S") {
        params = params.with_dense(parse_dense(s)?);
    }
    Ok(params)
}

pub fn parse_dense(s: &str) -> Result<DenseEnum, SyntaxError> {
    match s.trim() {
        "default" => Ok(DenseEnum::Default),
        other => match other.strip_prefix("theta:") {
            Some(path) => Ok(DenseEnum::Theta(parse_path(path)?)),
            None => Err(SyntaxError::Unknown {
                what: "dense family",
                name: other.into(),
            }),
        },
    }
}

/// Reads any test in the syntax produced by its `Display` form.
pub fn parse_test(spec: &str, mode: Arith) -> Result<Test, SyntaxError> {
    let spec = unbracket(spec);
    let (head, body) = head_body(spec);
    match head {
        "accept" => Ok(Test::AlwaysAccept),
        "avgmatch" => {
            let f = Fields::new(spec, body, &["tol", "nmin"])?;
            Ok(Test::AvgMatch(AvgMatch::new(
                parse_rational(f.require("tol")?)?,
                f.usize_or("nmin", 1)?,
            )))
        }
        "calib" => {
            let f = Fields::new(spec, body, &["w", "tol", "min", "T"])?;
            let w = parse_rational(f.require("w")?)?;
            let inv = w.recip();
            if !w.is_positive() || !inv.is_integer() {
                return Err(invalid(spec, "bin width must be 1/n"));
            }
            let bins: u32 = inv.to_integer().try_into().map_err(|_| invalid(spec, "too many bins"))?;
            Ok(Test::Calibration(Calibration::new(
                bins,
                parse_rational(f.require("tol")?)?,
                f.usize_or("min", 1)?,
                f.usize_or("T", Calibration::DEFAULT_HORIZON)?,
            )))
        }
        "lik" => {
            let f = Fields::new(spec, body, &["q", "c"])?;
            Ok(Test::Likelihood(LikelihoodFixed::new(
                parse_theory(f.require("q")?, mode)?,
                parse_rational(f.require("c")?)?,
            )))
        }
        "gct" => Ok(Test::Gct(gct_fields(spec, body)?)),
        "tbar" => {
            let f = Fields::new(spec, body, &["M", "c", "I", "D", "weights"])?;
            let defaults = GctParams::default();
            let caps = GctParams::new(
                defaults.layers,
                f.usize_or("I", defaults.paths)?,
                f.usize_or("D", defaults.depth)?,
            )
            .map_err(|e| invalid(spec, e))?;
            let weights = match f.get("weights") {
                None | Some("telescoping") => Weights::Telescoping,
                Some("literal") => Weights::Literal,
                Some(other) => {
                    return Err(SyntaxError::Unknown {
                        what: "weights",
                        name: other.into(),
                    })
                }
            };
            Ok(Test::Tbar(TbarParams {
                max_layer: f.usize_or("M", 9)?,
                c: parse_rational(f.require("c")?)?,
                caps,
                weights,
            }))
        }
        "rlr" => {
            let f = Fields::new(spec, body, &["theta", "N", "c"])?;
            Ok(Test::RandomizedLr(RlrParams {
                theta: parse_path(f.require("theta")?)?,
                cap: f.usize_or("N", 1000)?,
                c: parse_rational(f.require("c")?)?,
            }))
        }
        "combine" => {
            let parts = split_top(unbracket(body), ';')?;
            let mut acc = Test::AlwaysAccept;
            for part in parts.into_iter().filter(|p| !p.trim().is_empty()) {
                acc = combine(acc, parse_test(part, mode)?);
            }
            Ok(acc)
        }
        other => Err(SyntaxError::Unknown {
            what: "test",
            name: other.into(),
        }),
    }
}

/// `p/q` for exact probabilities, 12 significant digits otherwise.
pub fn render_prob(p: &Prob) -> String {
    match p.as_rational() {
        Some(r) if r.is_integer() => r.numer().to_string(),
        Some(r) => format!("{}/{}", r.numer(), r.denom()),
        None => render_float(p.to_f64()),
    }
}

/// A decimal rounded to 12 significant digits.
pub fn render_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}
