//! The screening contract: an expert is paid `u` for announcing a theory and
//! loses `d` if the test rejects it.

use catest_core::Prob;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ContractError {
    #[error("need 0 < u < d, got u={u} d={d}")]
    Utilities { u: String, d: String },
    #[error("type-I level {0} outside [0,1]")]
    Level(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractParams {
    pub u: BigRational,
    pub d: BigRational,
    pub eps: BigRational,
}

impl ContractParams {
    pub fn new(u: BigRational, d: BigRational, eps: BigRational) -> Result<Self, ContractError> {
        if !u.is_positive() || d <= u {
            return Err(ContractError::Utilities {
                u: u.to_string(),
                d: d.to_string(),
            });
        }
        if eps.is_negative() || eps > BigRational::one() {
            return Err(ContractError::Level(eps.to_string()));
        }
        Ok(Self { u, d, eps })
    }

    /// An informed expert gains from the contract.
    pub fn informed_accepts(&self) -> bool {
        (&self.u - &self.d * &self.eps).is_positive()
    }

    /// An uninformed expert facing a test it cannot manipulate declines.
    pub fn uninformed_declines(&self) -> bool {
        (&self.u - &self.d * (BigRational::one() - &self.eps)).is_negative()
    }

    pub fn screens(&self) -> bool {
        self.informed_accepts() && self.uninformed_declines()
    }
}

/// `u − d · worst_fail`.
pub fn screening_payoff(params: &ContractParams, worst_fail: &BigRational) -> BigRational {
    &params.u - &params.d * worst_fail
}

/// [`screening_payoff`] for a probability; approximate values are converted
/// at double precision.
pub fn screening_payoff_prob(params: &ContractParams, worst_fail: &Prob) -> BigRational {
    let w = match worst_fail.as_rational() {
        Some(r) => r.clone(),
        None => BigRational::from_float(worst_fail.to_f64()).unwrap_or_else(BigRational::zero),
    };
    screening_payoff(params, &w)
}

/// One point of a contract sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub params: ContractParams,
    pub screens: bool,
    /// Payoff when the worst-case failure probability is `ε`.
    pub at_eps: BigRational,
    /// Payoff when it is `1 − ε`.
    pub at_complement: BigRational,
}

impl SweepPoint {
    /// Positive at `ε` and negative at `1 − ε`; only required when the
    /// parameters screen.
    pub fn sign_pattern(&self) -> bool {
        self.at_eps.is_positive() && self.at_complement.is_negative()
    }
}

pub fn sweep(us: &[BigRational], ds: &[BigRational], epss: &[BigRational]) -> Vec<SweepPoint> {
    let mut out = Vec::new();
    for u in us {
        for d in ds {
            for eps in epss {
                let Ok(params) = ContractParams::new(u.clone(), d.clone(), eps.clone()) else {
                    continue;
                };
                let at_eps = screening_payoff(&params, eps);
                let at_complement = screening_payoff(&params, &(BigRational::one() - eps));
                out.push(SweepPoint {
                    screens: params.screens(),
                    params,
                    at_eps,
                    at_complement,
                });
            }
        }
    }
    out
}

/// `n/100` for each `n`.
pub fn percent(ns: impl IntoIterator<Item = i64>) -> Vec<BigRational> {
    ns.into_iter()
        .map(|n| BigRational::new(BigInt::from(n), BigInt::from(100)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn payoff_examples() {
        let c = ContractParams::new(q(1, 1), q(2, 1), q(1, 10)).unwrap();
        assert_eq!(screening_payoff(&c, &q(0, 1)), q(1, 1));
        assert_eq!(screening_payoff(&c, &q(1, 1)), q(-1, 1));
        assert_eq!(screening_payoff(&c, &q(1, 10)), q(4, 5));
        assert!(c.screens());
    }

    #[test]
    fn invalid_parameters() {
        assert!(ContractParams::new(q(2, 1), q(1, 1), q(1, 10)).is_err());
        assert!(ContractParams::new(q(0, 1), q(1, 1), q(1, 10)).is_err());
        assert!(ContractParams::new(q(1, 1), q(2, 1), q(11, 10)).is_err());
    }

    #[test]
    fn sweep_keeps_the_sign_pattern() {
        let points = sweep(&percent([50, 100, 150]), &percent([200, 300, 1000]), &percent(1..=30));
        assert!(points.iter().filter(|p| p.screens).all(SweepPoint::sign_pattern));
        assert!(points.iter().any(|p| !p.screens));
    }
}
