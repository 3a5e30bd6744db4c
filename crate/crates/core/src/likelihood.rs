//! Likelihood-ratio tests against alternatives built from the category
//! test's rejection regions (`tbar`) and from a dense path family (`rlr`).

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::category::{layers_for, DenseEnum, GctParams, GctRegion};
use crate::forecast_test::{fmt_rational, Verdict};
use crate::path::{History, PathSpec};
use crate::prob::{Arith, Prob};
use crate::theory::Theory;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LikelihoodError {
    #[error("no cylinder of positive measure below 1/(2(m+1)^3) for m={m} within depth {depth}")]
    NoPositiveCylinder { m: usize, depth: usize },
}

fn rat(n: u128, d: u128) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Certified enclosure of a truncated series.
#[derive(Clone, Debug, PartialEq)]
pub struct MassInterval {
    pub lower: Prob,
    pub upper: Prob,
}

impl MassInterval {
    pub fn width(&self) -> Prob {
        &self.upper - &self.lower
    }

    pub fn contains(&self, x: &Prob) -> bool {
        self.lower.le(x) && x.le(&self.upper)
    }
}

/// Layer weights `π(m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Weights {
    /// `1/(m(m+1))`, summing to one.
    #[default]
    Telescoping,
    /// `1/(m+1)^m`.
    Literal,
}

impl Weights {
    pub fn exact(&self, m: usize) -> BigRational {
        let m = m as u128;
        match self {
            Weights::Telescoping => rat(1, m * (m + 1)),
            Weights::Literal => BigRational::new(
                BigInt::one(),
                num_traits::pow(BigInt::from(m + 1), m as usize),
            ),
        }
    }

    pub fn pi(&self, m: usize, mode: Arith) -> Prob {
        Prob::from_rational(self.exact(m), Arith::Exact)
            .expect("weights are probabilities")
            .to_mode(mode)
    }

    /// `Σ_{m > cap} π(m)` for telescoping weights; a geometric upper bound
    /// `(cap+2)^{-(cap+1)} (cap+2)/(cap+1)` for literal ones.
    pub fn tail(&self, cap: usize, mode: Arith) -> Prob {
        let r = match self {
            Weights::Telescoping => rat(1, cap as u128 + 1),
            Weights::Literal => {
                let base = BigInt::from(cap as u128 + 2);
                BigRational::new(
                    base.clone(),
                    num_traits::pow(base, cap + 1) * BigInt::from(cap as u128 + 1),
                )
            }
        };
        Prob::from_rational(r, Arith::Exact).expect("nonnegative").to_mode(mode)
    }
}

/// Removes duplicates and bases that extend another base.
pub fn antichain(mut bases: Vec<History>) -> Vec<History> {
    bases.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.bits().cmp(b.bits())));
    bases.dedup();
    let mut out: Vec<History> = Vec::new();
    for b in bases {
        if !out.iter().any(|a| b.extends(a)) {
            out.push(b);
        }
    }
    out
}

/// Bases of `⋃A ∩ ⋃B` for two cylinder unions.
pub fn intersect(a: &[History], b: &[History]) -> Vec<History> {
    let mut out = Vec::new();
    for x in a {
        for y in b {
            if x.extends(y) {
                out.push(x.clone());
            } else if y.extends(x) {
                out.push(y.clone());
            }
        }
    }
    antichain(out)
}

/// One layer of the alternative: the category region with `K(m)` layers
/// plus a padding cylinder of small positive mass.
#[derive(Clone, Debug)]
pub struct Layer {
    pub m: usize,
    pub core: Vec<History>,
    pub padding: History,
    /// Antichain of bases of the whole region, with their masses.
    pub region: Vec<(History, Prob)>,
    pub mass: Prob,
}

impl Layer {
    /// `P(C(h) ∩ R)`.
    pub fn overlap(&self, h: &History, mass_h: &Prob) -> Prob {
        if self.region.iter().any(|(b, _)| h.extends(b)) {
            return mass_h.clone();
        }
        Prob::sum(
            self.region.iter().filter(|(b, _)| b.extends(h)).map(|(_, m)| m),
            mass_h.mode(),
        )
    }

    pub fn contains(&self, h: &History) -> bool {
        self.region.iter().any(|(b, _)| h.extends(b))
    }
}

/// The category rejection region with `layers` layers as an antichain.
pub fn category_region(p: &Theory, params: &GctParams) -> Vec<History> {
    let region = GctRegion::build(p, params);
    let mut acc: Option<Vec<History>> = None;
    for k in 1..=params.layers {
        let layer = antichain(region.layer(k).map(|(_, b)| b.clone()).collect());
        acc = Some(match acc {
            None => layer,
            Some(prev) => intersect(&prev, &layer),
        });
    }
    acc.unwrap_or_default()
}

/// Walks to the smaller positive child (ties to 0) until the cylinder's
/// measure lies strictly between 0 and `bound`.
pub fn padding_cylinder(p: &Theory, bound: &Prob, depth: usize, m: usize) -> Result<History, LikelihoodError> {
    let mut cursor = p.cursor();
    let mut h = History::empty();
    loop {
        let mass = cursor.mass().clone();
        if !mass.is_zero() && bound.gt(&mass) {
            return Ok(h);
        }
        if h.len() >= depth {
            return Err(LikelihoodError::NoPositiveCylinder { m, depth });
        }
        let f = cursor.forecast();
        let zero = &mass * &f.complement();
        let one = &mass * &f;
        let bit = match (zero.is_zero(), one.is_zero()) {
            (true, true) => return Err(LikelihoodError::NoPositiveCylinder { m, depth }),
            (true, false) => 1,
            (false, true) => 0,
            (false, false) => u8::from(zero.gt(&one)),
        };
        cursor.step(bit);
        h.push(bit);
    }
}

/// `R_P^m` and its padding cylinder; `caps` supplies `I`, `D`, atom mode
/// and the dense family, while the layer count is `K(m)`.
pub fn build_layer(p: &Theory, m: usize, caps: &GctParams) -> Result<Layer, LikelihoodError> {
    let params = caps.clone().with_layers(layers_for(m));
    let core = category_region(p, &params);
    let c = (m as u64 + 1).pow(3);
    let bound = Prob::from_ratio(1, 2 * c, p.mode());
    let padding = padding_cylinder(p, &bound, caps.depth, m)?;
    let mut bases = core.clone();
    bases.push(padding.clone());
    let region: Vec<(History, Prob)> = antichain(bases)
        .into_iter()
        .map(|b| {
            let mass = p.cylinder_prob(&b);
            (b, mass)
        })
        .collect();
    let mass = Prob::sum(region.iter().map(|(_, m)| m), p.mode());
    Ok(Layer {
        m,
        core,
        padding,
        region,
        mass,
    })
}

/// `Q_P^m(C(h)) = P(C(h) ∩ R_P^m) / P(R_P^m)`.
pub fn qm_cylinder(p: &Theory, layer: &Layer, h: &History) -> Prob {
    let mass_h = p.cylinder_prob(h);
    &layer.overlap(h, &mass_h) / &layer.mass
}

/// Parameters of the layered-alternative likelihood test.
#[derive(Clone, Debug, PartialEq)]
pub struct TbarParams {
    pub max_layer: usize,
    pub c: BigRational,
    pub caps: GctParams,
    pub weights: Weights,
}

impl TbarParams {
    pub fn new(max_layer: usize, c: BigRational) -> Self {
        Self {
            max_layer,
            c,
            caps: GctParams::default(),
            weights: Weights::Telescoping,
        }
    }

    /// The alternative's lower mass is a sub-probability, so the ratio is a
    /// nonnegative supermartingale under `P`.
    pub fn declared_epsilon(&self) -> f64 {
        (1.0 / self.c.to_f64().unwrap_or(1.0)).min(1.0)
    }
}

impl fmt::Display for TbarParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tbar:M={},c={},I={},D={}",
            self.max_layer,
            fmt_rational(&self.c),
            self.caps.paths,
            self.caps.depth
        )?;
        if self.weights == Weights::Literal {
            f.write_str(",weights=literal")?;
        }
        Ok(())
    }
}

/// The layered alternative for one theory.
#[derive(Clone, Debug)]
pub struct TbarRegion {
    theory: Theory,
    c: BigRational,
    weights: Weights,
    max_layer: usize,
    atomic: bool,
    /// `layers[m-1]`; `None` where no padding cylinder was found.
    pub layers: Vec<Option<Layer>>,
}

impl TbarRegion {
    pub fn build(p: &Theory, params: &TbarParams) -> Self {
        let atomic = p.is_finitely_atomic();
        let layers = if atomic {
            Vec::new()
        } else {
            (1..=params.max_layer)
                .map(|m| build_layer(p, m, &params.caps).ok())
                .collect()
        };
        Self {
            theory: p.clone(),
            c: params.c.clone(),
            weights: params.weights,
            max_layer: params.max_layer,
            atomic,
            layers,
        }
    }

    pub fn layer(&self, m: usize) -> Option<&Layer> {
        self.layers.get(m - 1).and_then(Option::as_ref)
    }

    fn lower_with_mass(&self, h: &History, mass_h: &Prob) -> Prob {
        let mode = self.theory.mode();
        let mut lower = Prob::zero(mode);
        for layer in self.layers.iter().flatten() {
            let q = &layer.overlap(h, mass_h) / &layer.mass;
            lower = &lower + &(&self.weights.pi(layer.m, mode) * &q);
        }
        lower
    }

    /// `Q_P(C(h))` enclosed by its first `M` layers and the weight tail.
    pub fn qbar(&self, h: &History) -> MassInterval {
        let mode = self.theory.mode();
        let lower = self.lower_with_mass(h, &self.theory.cylinder_prob(h));
        let upper = &lower + &self.weights.tail(self.max_layer, mode);
        MassInterval { lower, upper }
    }

    pub fn verdict(&self, h: &History) -> Verdict {
        let mut cursor = self.theory.cursor();
        for (idx, &b) in h.bits().iter().enumerate() {
            cursor.step(b);
            let mass = cursor.mass();
            if mass.is_zero() {
                return Verdict::Reject(idx + 1);
            }
            if self.atomic {
                continue;
            }
            let prefix = h.truncate(idx + 1);
            if self.lower_with_mass(&prefix, mass).exceeds_ratio(mass, &self.c) {
                return Verdict::Reject(idx + 1);
            }
        }
        Verdict::AcceptSoFar
    }
}

pub fn qbar_cylinder(p: &Theory, h: &History, params: &TbarParams) -> MassInterval {
    TbarRegion::build(p, params).qbar(h)
}

pub fn tbar_verdict(p: &Theory, h: &History, params: &TbarParams) -> Verdict {
    TbarRegion::build(p, params).verdict(h)
}

/// `Σ_{i in set} 1/(i(i+1))` for a sorted index set, summed run by run.
fn run_sum(indices: &[usize], mode: Arith) -> Prob {
    match mode {
        Arith::Exact => {
            let mut acc = BigRational::zero();
            let mut j = 0;
            while j < indices.len() {
                let a = indices[j];
                let mut b = a;
                while j + 1 < indices.len() && indices[j + 1] == b + 1 {
                    j += 1;
                    b += 1;
                }
                acc += rat(1, a as u128) - rat(1, b as u128 + 1);
                j += 1;
            }
            Prob::from_rational(acc, Arith::Exact).expect("nonnegative")
        }
        Arith::Approx => {
            let s: f64 = indices.iter().map(|&i| 1.0 / (i as f64 * (i as f64 + 1.0))).sum();
            Prob::from_f64(s, Arith::Approx).expect("nonnegative")
        }
    }
}

/// `Q^S(C(h))` from the first `cap` paths of `dense`, with tail `1/(cap+1)`.
pub fn qs_cylinder_mass(dense: &DenseEnum, h: &History, cap: usize, mode: Arith) -> MassInterval {
    let hits: Vec<usize> = (1..=cap).filter(|&i| dense.path(i).in_cylinder(h)).collect();
    let lower = run_sum(&hits, mode);
    let upper = &lower + &Prob::from_ratio(1, cap as u64 + 1, mode);
    MassInterval { lower, upper }
}

/// Parameters of the likelihood test against `Q^{S_θ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct RlrParams {
    pub theta: PathSpec,
    pub cap: usize,
    pub c: BigRational,
}

impl RlrParams {
    pub fn dense(&self) -> DenseEnum {
        DenseEnum::Theta(self.theta.clone())
    }

    pub fn declared_epsilon(&self) -> f64 {
        (1.0 / self.c.to_f64().unwrap_or(1.0)).min(1.0)
    }
}

impl fmt::Display for RlrParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rlr:theta={},N={},c={}", self.theta, self.cap, fmt_rational(&self.c))
    }
}

/// Randomized likelihood test bound to one theory.
pub struct RlrPrepared<'a> {
    params: &'a RlrParams,
    theory: Theory,
    paths: Vec<PathSpec>,
}

impl<'a> RlrPrepared<'a> {
    pub fn new(params: &'a RlrParams, theory: &Theory) -> Self {
        let dense = params.dense();
        Self {
            params,
            theory: theory.clone(),
            paths: (1..=params.cap).map(|i| dense.path(i)).collect(),
        }
    }

    /// Lower `Q^S` mass of `C(h|n)` for each `n = 0..=h.len()`.
    pub fn lower_masses(&self, h: &History) -> Vec<Prob> {
        let mode = self.theory.mode();
        let agreement: Vec<usize> = self.paths.iter().map(|s| s.agreement_with(h)).collect();
        (0..=h.len())
            .map(|n| {
                let hits: Vec<usize> = agreement
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a >= n)
                    .map(|(j, _)| j + 1)
                    .collect();
                run_sum(&hits, mode)
            })
            .collect()
    }

    pub fn verdict(&self, h: &History) -> Verdict {
        let lower = self.lower_masses(h);
        let mut cursor = self.theory.cursor();
        for (idx, &b) in h.bits().iter().enumerate() {
            cursor.step(b);
            let mass = cursor.mass();
            if mass.is_zero() || lower[idx + 1].exceeds_ratio(mass, &self.params.c) {
                return Verdict::Reject(idx + 1);
            }
        }
        Verdict::AcceptSoFar
    }
}

pub fn randomized_lr_verdict(params: &RlrParams, p: &Theory, h: &History) -> Verdict {
    RlrPrepared::new(params, p).verdict(h)
}
