//! Finite-time tests of theories: verdicts, the classic manipulable tests,
//! combination, and prequentiality witnesses.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::category::{GctParams, GctRegion};
use crate::likelihood::{RlrParams, RlrPrepared, TbarParams, TbarRegion};
use crate::path::History;
use crate::prob::{Arith, Prob};
use crate::theory::Theory;

/// Outcome of a test on a finite history.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    AcceptSoFar,
    /// Rejected once the first `t` outcomes were seen.
    Reject(usize),
    /// The test has not reached its decision horizon.
    Undecided,
}

impl Verdict {
    pub fn is_reject(&self) -> bool {
        matches!(self, Verdict::Reject(_))
    }

    pub fn rejection_period(&self) -> Option<usize> {
        match self {
            Verdict::Reject(t) => Some(*t),
            _ => None,
        }
    }

    /// Earliest rejection wins; otherwise undecided dominates acceptance.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Reject(a), Verdict::Reject(b)) => Verdict::Reject(a.min(b)),
            (r @ Verdict::Reject(_), _) | (_, r @ Verdict::Reject(_)) => r,
            (Verdict::Undecided, _) | (_, Verdict::Undecided) => Verdict::Undecided,
            _ => Verdict::AcceptSoFar,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::AcceptSoFar => f.write_str("accept"),
            Verdict::Reject(t) => write!(f, "reject@{t}"),
            Verdict::Undecided => f.write_str("undecided"),
        }
    }
}

pub(crate) fn fmt_rational(r: &BigRational) -> String {
    if r.denom() == &BigInt::from(1) {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Running sum of forecasts, exact or floating.
enum Running {
    Exact(BigRational),
    Float(f64),
}

impl Running {
    fn new(mode: Arith) -> Self {
        match mode {
            Arith::Exact => Running::Exact(BigRational::zero()),
            Arith::Approx => Running::Float(0.0),
        }
    }

    fn add(&mut self, p: &Prob) {
        match (self, p.as_rational()) {
            (Running::Exact(acc), Some(r)) => *acc += r,
            (Running::Float(acc), _) => *acc += p.to_f64(),
            (this, None) => {
                let acc = this.to_f64() + p.to_f64();
                *this = Running::Float(acc);
            }
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            Running::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Running::Float(x) => *x,
        }
    }

    /// `|self − ones| > tol · n`
    fn deviates(&self, ones: usize, n: usize, tol: &BigRational) -> bool {
        match self {
            Running::Exact(acc) => {
                let dev = (acc - BigRational::from_integer(BigInt::from(ones))).abs();
                dev > tol * BigRational::from_integer(BigInt::from(n))
            }
            Running::Float(acc) => {
                (acc - ones as f64).abs() > tol.to_f64().unwrap_or(0.0) * n as f64
            }
        }
    }
}

/// Rejects at the first `n ≥ n_min` where the average forecast of 1 and
/// the empirical frequency of 1 differ by more than `tol`.
#[derive(Clone, Debug, PartialEq)]
pub struct AvgMatch {
    pub tol: BigRational,
    pub n_min: usize,
}

impl AvgMatch {
    pub fn new(tol: BigRational, n_min: usize) -> Self {
        Self { tol, n_min: n_min.max(1) }
    }

    pub fn verdict(&self, p: &Theory, h: &History) -> Verdict {
        let mut cursor = p.cursor();
        let mut sum = Running::new(p.mode());
        let mut ones = 0;
        for (idx, &b) in h.bits().iter().enumerate() {
            sum.add(&cursor.forecast());
            cursor.step(b);
            ones += usize::from(b);
            let n = idx + 1;
            if n >= self.n_min && sum.deviates(ones, n, &self.tol) {
                return Verdict::Reject(n);
            }
        }
        Verdict::AcceptSoFar
    }

    /// Hoeffding with a union bound over the monitored periods up to `horizon`.
    pub fn declared_epsilon(&self, horizon: usize) -> f64 {
        let tol = self.tol.to_f64().unwrap_or(0.0);
        let mut eps = 0.0;
        for n in self.n_min..=horizon {
            eps += 2.0 * libm::exp(-2.0 * n as f64 * tol * tol);
            if eps >= 1.0 {
                return 1.0;
            }
        }
        eps
    }
}

/// Bins forecasts by value and compares, at the horizon, each well-populated
/// bin's outcome frequency with its mean forecast.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub bins: u32,
    pub tol: BigRational,
    pub min_count: usize,
    pub horizon: usize,
}

/// Per-bin tallies gathered by [`Calibration::bin_stats`].
#[derive(Clone, Debug, Default)]
pub struct BinStat {
    pub count: usize,
    pub ones: usize,
    pub forecast_sum: f64,
}

impl Calibration {
    pub const DEFAULT_HORIZON: usize = 100;

    pub fn new(bins: u32, tol: BigRational, min_count: usize, horizon: usize) -> Self {
        Self {
            bins: bins.max(1),
            tol,
            min_count,
            horizon,
        }
    }

    fn bin_of(&self, f: &Prob) -> usize {
        let b = match f.as_rational() {
            Some(r) => (r * BigRational::from_integer(BigInt::from(self.bins)))
                .floor()
                .to_integer()
                .to_usize()
                .unwrap_or(0),
            None => libm::floor(f.to_f64() * f64::from(self.bins)) as usize,
        };
        b.min(self.bins as usize - 1)
    }

    fn tallies(&self, p: &Theory, h: &History) -> Vec<(BinStat, Running)> {
        let mut stats: Vec<(BinStat, Running)> = (0..self.bins)
            .map(|_| (BinStat::default(), Running::new(p.mode())))
            .collect();
        let mut cursor = p.cursor();
        for &b in h.bits() {
            let f = cursor.forecast();
            let (stat, sum) = &mut stats[self.bin_of(&f)];
            stat.count += 1;
            stat.ones += usize::from(b);
            stat.forecast_sum += f.to_f64();
            sum.add(&f);
            cursor.step(b);
        }
        stats
    }

    /// Per-bin counts, outcome ones and forecast sums along `h`.
    pub fn bin_stats(&self, p: &Theory, h: &History) -> Vec<BinStat> {
        self.tallies(p, h).into_iter().map(|(stat, _)| stat).collect()
    }

    pub fn verdict(&self, p: &Theory, h: &History) -> Verdict {
        if h.len() < self.horizon {
            return Verdict::Undecided;
        }
        let window = h.truncate(self.horizon);
        for (stat, sum) in self.tallies(p, &window) {
            if stat.count >= self.min_count
                && stat.count > 0
                && sum.deviates(stat.ones, stat.count, &self.tol)
            {
                return Verdict::Reject(self.horizon);
            }
        }
        Verdict::AcceptSoFar
    }
}

/// Rejects at the first `n` with `P(C(h|n)) = 0` or `Q(C(h|n)) > c · P(C(h|n))`.
#[derive(Clone, Debug)]
pub struct LikelihoodFixed {
    pub alternative: Theory,
    pub c: BigRational,
}

impl LikelihoodFixed {
    pub fn new(alternative: Theory, c: BigRational) -> Self {
        Self { alternative, c }
    }

    pub fn verdict(&self, p: &Theory, h: &History) -> Verdict {
        let mut cp = p.cursor();
        let mut cq = self.alternative.cursor();
        for (idx, &b) in h.bits().iter().enumerate() {
            cp.step(b);
            cq.step(b);
            if cp.mass().is_zero() || cq.mass().exceeds_ratio(cp.mass(), &self.c) {
                return Verdict::Reject(idx + 1);
            }
        }
        Verdict::AcceptSoFar
    }

    /// Ville's inequality for the likelihood-ratio martingale.
    pub fn declared_epsilon(&self) -> f64 {
        (1.0 / self.c.to_f64().unwrap_or(1.0)).min(1.0)
    }
}

/// A test with its parameters.
#[derive(Clone, Debug)]
pub enum Test {
    AlwaysAccept,
    AvgMatch(AvgMatch),
    Calibration(Calibration),
    Likelihood(LikelihoodFixed),
    Gct(GctParams),
    Tbar(TbarParams),
    RandomizedLr(RlrParams),
    Combine(Vec<Test>),
}

/// A test bound to one theory, with any per-theory structure precomputed.
pub enum Prepared<'a> {
    Accept,
    Simple(&'a Test, Theory),
    Gct(GctRegion),
    Tbar(Box<TbarRegion>),
    RandomizedLr(RlrPrepared<'a>),
    Combine(Vec<Prepared<'a>>),
}

impl Prepared<'_> {
    pub fn verdict(&self, h: &History) -> Verdict {
        match self {
            Prepared::Accept => Verdict::AcceptSoFar,
            Prepared::Simple(test, p) => test.verdict(p, h),
            Prepared::Gct(region) => region.verdict(h),
            Prepared::Tbar(region) => region.verdict(h),
            Prepared::RandomizedLr(r) => r.verdict(h),
            Prepared::Combine(parts) => parts
                .iter()
                .fold(Verdict::AcceptSoFar, |v, part| v.and(part.verdict(h))),
        }
    }
}

impl Test {
    /// Precomputes what the test needs to evaluate `p` on many histories.
    pub fn prepare(&self, p: &Theory) -> Prepared<'_> {
        match self {
            Test::AlwaysAccept => Prepared::Accept,
            Test::AvgMatch(_) | Test::Calibration(_) | Test::Likelihood(_) => {
                Prepared::Simple(self, p.clone())
            }
            Test::Gct(params) => Prepared::Gct(GctRegion::build(p, params)),
            Test::Tbar(params) => Prepared::Tbar(Box::new(TbarRegion::build(p, params))),
            Test::RandomizedLr(params) => Prepared::RandomizedLr(RlrPrepared::new(params, p)),
            Test::Combine(parts) => Prepared::Combine(parts.iter().map(|t| t.prepare(p)).collect()),
        }
    }

    pub fn verdict(&self, p: &Theory, h: &History) -> Verdict {
        match self {
            Test::AlwaysAccept => Verdict::AcceptSoFar,
            Test::AvgMatch(t) => t.verdict(p, h),
            Test::Calibration(t) => t.verdict(p, h),
            Test::Likelihood(t) => t.verdict(p, h),
            _ => self.prepare(p).verdict(h),
        }
    }

    /// Whether the verdict depends on the theory only through its forecasts
    /// along the evaluated history.
    pub fn is_prequential(&self) -> bool {
        match self {
            Test::AlwaysAccept | Test::AvgMatch(_) | Test::Calibration(_) | Test::Likelihood(_) => true,
            Test::RandomizedLr(_) => true,
            Test::Gct(_) | Test::Tbar(_) => false,
            Test::Combine(parts) => parts.iter().all(Test::is_prequential),
        }
    }

    /// An upper bound on the probability, under `p` itself, of rejection
    /// within `horizon` periods, when one is known.
    pub fn declared_epsilon(&self, p: &Theory, horizon: usize) -> Option<f64> {
        match self {
            Test::AlwaysAccept => Some(0.0),
            Test::AvgMatch(t) => Some(t.declared_epsilon(horizon)),
            Test::Calibration(_) => None,
            Test::Likelihood(t) => Some(t.declared_epsilon()),
            Test::Gct(params) => Some(crate::category::type1_bound(p, params).to_f64()),
            Test::Tbar(params) => Some(params.declared_epsilon()),
            Test::RandomizedLr(params) => Some(params.declared_epsilon()),
            Test::Combine(parts) => parts
                .iter()
                .map(|t| t.declared_epsilon(p, horizon))
                .try_fold(0.0, |acc, e| e.map(|e| acc + e))
                .map(|e: f64| e.min(1.0)),
        }
    }
}

impl fmt::Display for Test {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Test::AlwaysAccept => f.write_str("accept"),
            Test::AvgMatch(t) => write!(f, "avgmatch:tol={},nmin={}", fmt_rational(&t.tol), t.n_min),
            Test::Calibration(t) => write!(
                f,
                "calib:w=1/{},tol={},min={},T={}",
                t.bins,
                fmt_rational(&t.tol),
                t.min_count,
                t.horizon
            ),
            Test::Likelihood(t) => write!(f, "lik:q={},c={}", t.alternative.label(), fmt_rational(&t.c)),
            Test::Gct(p) => write!(f, "{p}"),
            Test::Tbar(p) => write!(f, "{p}"),
            Test::RandomizedLr(p) => write!(f, "{p}"),
            Test::Combine(parts) => {
                f.write_str("combine:[")?;
                for (i, t) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// A test that rejects whenever either argument does.
pub fn combine(a: Test, b: Test) -> Test {
    let mut parts = Vec::new();
    for t in [a, b] {
        match t {
            Test::Combine(inner) => parts.extend(inner),
            Test::AlwaysAccept => {}
            other => parts.push(other),
        }
    }
    match parts.len() {
        0 => Test::AlwaysAccept,
        1 => parts.pop().expect("one part"),
        _ => Test::Combine(parts),
    }
}

/// True iff `p` and `q` make identical forecasts at every prefix of `h`
/// (including `h`) while `test` gives them different verdicts on `h`.
pub fn is_prequential_witness(test: &Test, p: &Theory, q: &Theory, h: &History) -> bool {
    if p.forecasts_along(h) != q.forecasts_along(h) {
        return false;
    }
    test.verdict(p, h) != test.verdict(q, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::PathSpec;
    use alloc::string::ToString;

    const E: Arith = Arith::Exact;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn p(n: u64, d: u64) -> Prob {
        Prob::from_ratio(n, d, E)
    }

    fn h(s: &str) -> History {
        s.parse().unwrap()
    }

    fn zeros(n: usize) -> History {
        History::from_bits(&alloc::vec![0; n])
    }

    #[test]
    fn avg_match_examples() {
        let pm = Theory::point_mass(PathSpec::constant(0), E);
        let t = AvgMatch::new(q(1, 10), 1);
        assert_eq!(t.verdict(&pm, &zeros(50)), Verdict::AcceptSoFar);

        let ones = Theory::bernoulli(p(1, 1)).unwrap();
        assert_eq!(AvgMatch::new(q(1, 2), 1).verdict(&ones, &h("0000")), Verdict::Reject(1));

        let half = Theory::bernoulli(p(1, 2)).unwrap();
        let alt = History::from_bits(&(0..40).map(|i| (i % 2) as u8).collect::<Vec<_>>());
        // deviations cancel at even n; at odd n they are 1/(2n)
        assert_eq!(AvgMatch::new(q(1, 10), 6).verdict(&half, &alt), Verdict::AcceptSoFar);
        assert_eq!(AvgMatch::new(q(1, 10), 2).verdict(&half, &alt), Verdict::Reject(3));
    }

    #[test]
    fn calibration_examples() {
        // Bernoulli(7/10) forecasts on a history with exactly 70 ones in 100
        let seven = Theory::bernoulli(p(7, 10)).unwrap();
        let bits: Vec<u8> = (0..100).map(|i| u8::from(i % 10 < 7)).collect();
        let t = Calibration::new(10, q(1, 10), 10, 100);
        assert_eq!(t.verdict(&seven, &History::from_bits(&bits)), Verdict::AcceptSoFar);

        let nine = Theory::bernoulli(p(9, 10)).unwrap();
        assert_eq!(t.verdict(&nine, &zeros(100)), Verdict::Reject(100));
        assert_eq!(t.verdict(&nine, &zeros(99)), Verdict::Undecided);
    }

    #[test]
    fn likelihood_examples() {
        let half = Theory::bernoulli(p(1, 2)).unwrap();
        let same = LikelihoodFixed::new(half.clone(), q(100, 1));
        assert_eq!(same.verdict(&half, &h("0110101")), Verdict::AcceptSoFar);

        let alt = LikelihoodFixed::new(Theory::point_mass(PathSpec::constant(0), E), q(100, 1));
        assert_eq!(alt.verdict(&half, &zeros(12)), Verdict::Reject(7));
        assert_eq!(alt.verdict(&half, &zeros(6)), Verdict::AcceptSoFar);

        let ones = Theory::point_mass(PathSpec::constant(1), E);
        assert_eq!(alt.verdict(&ones, &h("0")), Verdict::Reject(1));
    }

    #[test]
    fn combine_examples() {
        let ones = Theory::bernoulli(p(1, 1)).unwrap();
        let avg = Test::AvgMatch(AvgMatch::new(q(1, 2), 1));
        let lik = Test::Likelihood(LikelihoodFixed::new(
            Theory::point_mass(PathSpec::constant(0), E),
            q(100, 1),
        ));
        let both = combine(avg.clone(), lik.clone());
        assert_eq!(both.verdict(&ones, &zeros(5)), Verdict::Reject(1));
        assert_eq!(
            combine(avg.clone(), Test::AlwaysAccept).to_string(),
            avg.to_string()
        );
        let half = Theory::bernoulli(p(1, 2)).unwrap();
        for hist in History::all_of_length(8) {
            let twice = Test::Combine(alloc::vec![lik.clone(), lik.clone()]);
            assert_eq!(twice.verdict(&half, &hist), lik.verdict(&half, &hist));
        }
        assert!(both.is_prequential());
    }

    #[test]
    fn witness_needs_a_difference() {
        let half = Theory::bernoulli(p(1, 2)).unwrap();
        let avg = Test::AvgMatch(AvgMatch::new(q(1, 10), 1));
        assert!(!is_prequential_witness(&avg, &half, &half, &h("0101")));
        let mix = Theory::mixture(alloc::vec![(p(1, 2), half.clone()), (p(1, 2), half.clone())]).unwrap();
        for hist in History::all_of_length(6) {
            assert!(!is_prequential_witness(&avg, &half, &mix, &hist));
        }
    }

    #[test]
    fn verdict_and_is_min_rejection() {
        use Verdict::*;
        assert_eq!(Reject(3).and(Reject(2)), Reject(2));
        assert_eq!(AcceptSoFar.and(Undecided), Undecided);
        assert_eq!(Undecided.and(Reject(4)), Reject(4));
        assert_eq!(AcceptSoFar.and(AcceptSoFar), AcceptSoFar);
    }

    #[test]
    fn declared_epsilon_is_a_probability() {
        let t = AvgMatch::new(q(1, 10), 100);
        assert_eq!(t.declared_epsilon(10_000), 1.0);
        let strict = AvgMatch::new(q(1, 2), 50);
        assert!(strict.declared_epsilon(1000) < 1e-9);
    }
}
