//! Probability values carried either as exact rationals or in the log domain.
//!
//! Arithmetic closes within a mode; mixing an exact and an approximate operand
//! yields an approximate result. Values are nonnegative. Constructors check the
//! `[0, 1]` range, but sums such as type-I bounds with atom slack may exceed 1
//! and are left unclamped.

use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Relative tolerance applied to comparisons between log-domain values.
pub const LOG_TOLERANCE: f64 = 1e-9;

/// Arithmetic mode, chosen once per run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Arith {
    #[default]
    Exact,
    Approx,
}

#[derive(Clone)]
pub enum Prob {
    Exact(BigRational),
    /// Natural logarithm of the value; `-inf` encodes zero.
    Log(f64),
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(libm::exp(lo - hi))
}

fn log_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + libm::log(-libm::expm1(b - a))
}

impl Prob {
    pub fn zero(mode: Arith) -> Self {
        match mode {
            Arith::Exact => Prob::Exact(BigRational::zero()),
            Arith::Approx => Prob::Log(f64::NEG_INFINITY),
        }
    }

    pub fn one(mode: Arith) -> Self {
        match mode {
            Arith::Exact => Prob::Exact(BigRational::one()),
            Arith::Approx => Prob::Log(0.0),
        }
    }

    /// `n / d`; panics unless `0 <= n <= d` and `d > 0`.
    pub fn from_ratio(n: u64, d: u64, mode: Arith) -> Self {
        assert!(d > 0 && n <= d, "probability {n}/{d} out of range");
        match mode {
            Arith::Exact => Prob::Exact(BigRational::new(BigInt::from(n), BigInt::from(d))),
            Arith::Approx => Prob::Log(libm::log(n as f64 / d as f64)),
        }
    }

    /// Wraps a rational; `None` outside `[0, 1]`.
    pub fn from_rational(r: BigRational, mode: Arith) -> Option<Self> {
        if r.is_negative() || r > BigRational::one() {
            return None;
        }
        Some(match mode {
            Arith::Exact => Prob::Exact(r),
            Arith::Approx => Prob::Log(libm::log(r.to_f64().unwrap_or(0.0))),
        })
    }

    /// Wraps a float; exact mode takes the float's exact binary value.
    pub fn from_f64(x: f64, mode: Arith) -> Option<Self> {
        if !(0.0..=1.0).contains(&x) {
            return None;
        }
        Some(match mode {
            Arith::Exact => Prob::Exact(BigRational::from_float(x)?),
            Arith::Approx => Prob::Log(libm::log(x)),
        })
    }

    pub fn from_ln(ln: f64) -> Self {
        Prob::Log(ln)
    }

    /// `2^{-k}`.
    pub fn pow2_neg(k: u32, mode: Arith) -> Self {
        match mode {
            Arith::Exact => Prob::Exact(BigRational::new(
                BigInt::one(),
                BigInt::one() << (k as usize),
            )),
            Arith::Approx => Prob::Log(-(k as f64) * core::f64::consts::LN_2),
        }
    }

    pub fn mode(&self) -> Arith {
        match self {
            Prob::Exact(_) => Arith::Exact,
            Prob::Log(_) => Arith::Approx,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Prob::Exact(r) => r.is_zero(),
            Prob::Log(l) => *l == f64::NEG_INFINITY,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Prob::Exact(r) => r.is_one(),
            Prob::Log(l) => *l == 0.0,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Prob::Exact(r) => Some(r),
            Prob::Log(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Prob::Exact(r) => r.to_f64().unwrap_or_else(|| libm::exp(rational_ln(r))),
            Prob::Log(l) => libm::exp(*l),
        }
    }

    /// Natural logarithm of the value.
    pub fn ln(&self) -> f64 {
        match self {
            Prob::Exact(r) => rational_ln(r),
            Prob::Log(l) => *l,
        }
    }

    /// Converts to the given mode (exact targets are only reachable from exact values).
    pub fn to_mode(&self, mode: Arith) -> Prob {
        match (self, mode) {
            (Prob::Exact(r), Arith::Approx) => Prob::Log(rational_ln(r)),
            _ => self.clone(),
        }
    }

    /// `1 - self`, saturating at zero.
    pub fn complement(&self) -> Prob {
        &Prob::one(self.mode()) - self
    }

    pub fn pow(&self, e: u32) -> Prob {
        match self {
            Prob::Exact(r) => Prob::Exact(num_traits::pow(r.clone(), e as usize)),
            Prob::Log(l) => {
                if e == 0 {
                    Prob::Log(0.0)
                } else {
                    Prob::Log(*l * e as f64)
                }
            }
        }
    }

    /// Multiplies by an exact nonnegative scalar (which may exceed 1).
    pub fn scale(&self, c: &BigRational) -> Prob {
        match self {
            Prob::Exact(r) => Prob::Exact(r * c),
            Prob::Log(l) => Prob::Log(l + rational_ln(c)),
        }
    }

    /// `self <= other`, with a relative log-domain tolerance in approximate mode.
    pub fn le(&self, other: &Prob) -> bool {
        match (self, other) {
            (Prob::Exact(a), Prob::Exact(b)) => a <= b,
            _ => {
                let (a, b) = (self.ln(), other.ln());
                if b == f64::NEG_INFINITY {
                    return a == f64::NEG_INFINITY;
                }
                a <= b + LOG_TOLERANCE * b.abs().max(1.0)
            }
        }
    }

    /// `self > other` as the negation of [`Prob::le`].
    pub fn gt(&self, other: &Prob) -> bool {
        !self.le(other)
    }

    /// `self > c * other` for a scalar threshold `c`.
    pub fn exceeds_ratio(&self, other: &Prob, c: &BigRational) -> bool {
        self.gt(&other.scale(c))
    }

    /// `self / other` as a nonnegative real in exact form when both are exact.
    pub fn ratio_to(&self, other: &Prob) -> Option<BigRational> {
        match (self, other) {
            (Prob::Exact(a), Prob::Exact(b)) if !b.is_zero() => Some(a / b),
            _ => None,
        }
    }

    /// Sum of an iterator of probabilities in the given mode.
    pub fn sum<'a, I: IntoIterator<Item = &'a Prob>>(items: I, mode: Arith) -> Prob {
        items
            .into_iter()
            .fold(Prob::zero(mode), |acc, p| &acc + p)
    }

    /// Exact rational `n/d` as a probability-like amount (may exceed 1).
    pub fn amount(n: i64, d: i64, mode: Arith) -> Prob {
        let r = ratio(n, d);
        match mode {
            Arith::Exact => Prob::Exact(r),
            Arith::Approx => Prob::Log(rational_ln(&r)),
        }
    }
}

/// `ln(r)` for a positive rational without overflowing `f64` on huge parts.
pub fn rational_ln(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    big_ln(r.numer()) - big_ln(r.denom())
}

fn big_ln(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return libm::log(x.to_f64().unwrap_or(f64::INFINITY).abs());
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> (shift as usize);
    libm::log(top.to_f64().unwrap_or(1.0)) + shift as f64 * core::f64::consts::LN_2
}

impl PartialEq for Prob {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for Prob {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Prob::Exact(a), Prob::Exact(b)) => Some(a.cmp(b)),
            _ => self.ln().partial_cmp(&other.ln()),
        }
    }
}

impl<'a> Mul<&'a Prob> for &'a Prob {
    type Output = Prob;

    fn mul(self, rhs: &'a Prob) -> Prob {
        match (self, rhs) {
            (Prob::Exact(a), Prob::Exact(b)) => Prob::Exact(a * b),
            _ => Prob::Log(self.ln() + rhs.ln()),
        }
    }
}

impl<'a> Add<&'a Prob> for &'a Prob {
    type Output = Prob;

    fn add(self, rhs: &'a Prob) -> Prob {
        match (self, rhs) {
            (Prob::Exact(a), Prob::Exact(b)) => Prob::Exact(a + b),
            _ => Prob::Log(log_add(self.ln(), rhs.ln())),
        }
    }
}

impl<'a> Sub<&'a Prob> for &'a Prob {
    type Output = Prob;

    /// Saturating difference: negative results become zero.
    fn sub(self, rhs: &'a Prob) -> Prob {
        match (self, rhs) {
            (Prob::Exact(a), Prob::Exact(b)) => {
                if a > b {
                    Prob::Exact(a - b)
                } else {
                    Prob::Exact(BigRational::zero())
                }
            }
            _ => Prob::Log(log_sub(self.ln(), rhs.ln())),
        }
    }
}

impl<'a> Div<&'a Prob> for &'a Prob {
    type Output = Prob;

    /// Quotient; division by zero yields zero (the null convention).
    fn div(self, rhs: &'a Prob) -> Prob {
        if rhs.is_zero() {
            return Prob::zero(if matches!((self, rhs), (Prob::Exact(_), Prob::Exact(_))) {
                Arith::Exact
            } else {
                Arith::Approx
            });
        }
        match (self, rhs) {
            (Prob::Exact(a), Prob::Exact(b)) => Prob::Exact(a / b),
            _ => Prob::Log(self.ln() - rhs.ln()),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Prob> for Prob {
            type Output = Prob;
            fn $m(self, rhs: Prob) -> Prob {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Mul, mul);
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Div, div);

impl fmt::Debug for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => write!(f, "Exact({r})"),
            Prob::Log(l) => write!(f, "Approx({:e})", libm::exp(*l)),
        }
    }
}

/// Exact values print as `p/q`; approximate values as decimals.
impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prob::Exact(r) => write!(f, "{r}"),
            Prob::Log(l) => write!(f, "{}", libm::exp(*l)),
        }
    }
}
