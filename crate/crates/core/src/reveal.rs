//! Revelation histories: finite prefixes on which every theory in a
//! finite-support lottery fails the category test.

use alloc::string::String;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::category::{gct_verdict, DenseEnum, GctParams, GctRegion};
use crate::likelihood::{RlrParams, RlrPrepared};
use crate::path::{History, PathSpec};
use crate::prob::Prob;
use crate::theory::TheoryLottery;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RevealError {
    #[error("no s^i with i <= {cap} extends the history {history}")]
    DensityExhausted { history: String, cap: usize },
    #[error("support theory {0} is not declared nonatomic")]
    Atomic(String),
}

/// How one support theory fared on the revelation history.
#[derive(Clone, Debug)]
pub struct TheoryOutcome {
    pub label: String,
    pub weight: Prob,
    pub rejection: Option<usize>,
    /// Layers where this theory's `t`-index exceeded the depth cap.
    pub skipped_layers: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct RevelationResult {
    pub history: History,
    pub outcomes: Vec<TheoryOutcome>,
    /// Total weight of rejected theories.
    pub failure: Prob,
}

impl RevelationResult {
    pub fn has_skips(&self) -> bool {
        self.outcomes.iter().any(|o| !o.skipped_layers.is_empty())
    }
}

/// Extends the history layer by layer along the first dense path it can
/// still follow, far enough that every support theory's layer cylinder
/// contains it.
pub fn revelation_path(lottery: &TheoryLottery, params: &GctParams) -> Result<RevelationResult, RevealError> {
    let regions: Vec<GctRegion> = lottery
        .support()
        .iter()
        .map(|(p, _)| GctRegion::build(p, params))
        .collect();
    let mut skipped: Vec<Vec<usize>> = alloc::vec![Vec::new(); regions.len()];
    let mut h = History::empty();
    for k in 1..=params.layers {
        let i = params
            .dense
            .first_extending(&h, params.paths)
            .ok_or_else(|| RevealError::DensityExhausted {
                history: alloc::format!("{h}"),
                cap: params.paths,
            })?;
        let mut target = h.len();
        for (j, region) in regions.iter().enumerate() {
            match region.t_index(i, k) {
                Some(t) => target = target.max(t),
                None => skipped[j].push(k),
            }
        }
        h = params.dense.path(i).truncate(target);
    }
    let mode = lottery.mode();
    let mut failure = Prob::zero(mode);
    let outcomes = lottery
        .support()
        .iter()
        .zip(regions.iter().zip(skipped))
        .map(|((p, w), (region, skipped_layers))| {
            let rejection = region.verdict(&h).rejection_period();
            if rejection.is_some() {
                failure = &failure + w;
            }
            TheoryOutcome {
                label: p.label().into(),
                weight: w.clone(),
                rejection,
                skipped_layers,
            }
        })
        .collect();
    Ok(RevelationResult {
        history: h,
        outcomes,
        failure,
    })
}

/// Total weight of the support theories that the category test rejects on
/// `h`, evaluated from scratch.
pub fn verify_failure(lottery: &TheoryLottery, h: &History, params: &GctParams) -> Prob {
    let mode = lottery.mode();
    lottery
        .support()
        .iter()
        .filter(|(p, _)| gct_verdict(p, h, params).is_reject())
        .fold(Prob::zero(mode), |acc, (_, w)| &acc + w)
}

/// `depth` fair-coin bits followed by a constant random bit.
pub fn random_theta(seed: u64, depth: usize) -> PathSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefix: Vec<u8> = (0..depth).map(|_| u8::from(rng.random::<bool>())).collect();
    let tail = u8::from(rng.random::<bool>());
    PathSpec::new(&prefix, &[tail]).expect("nonempty period")
}

/// One θ draw of [`prop3_check`].
#[derive(Clone, Debug)]
pub struct Prop3Draw {
    pub theta: PathSpec,
    pub history: History,
    pub category_failure: Prob,
    /// Every support theory rejected by the likelihood test against `Q^{S_θ}`.
    pub all_rejected: bool,
    /// Layer cylinders containing the history that were checked.
    pub events: usize,
    /// Cylinders whose likelihood ratio fell short of the guaranteed bound.
    pub violations: usize,
}

#[derive(Clone, Debug)]
pub struct Prop3Report {
    pub draws: Vec<Prop3Draw>,
}

impl Prop3Report {
    /// Fraction of draws with full rejection.
    pub fn fraction(&self) -> f64 {
        if self.draws.is_empty() {
            return 0.0;
        }
        self.draws.iter().filter(|d| d.all_rejected).count() as f64 / self.draws.len() as f64
    }

    pub fn violations(&self) -> usize {
        self.draws.iter().map(|d| d.violations).sum()
    }

    pub fn events(&self) -> usize {
        self.draws.iter().map(|d| d.events).sum()
    }
}

fn pow2(e: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(1u8) << e)
}

/// Reveals along `S_θ` for one θ and checks the likelihood-ratio bounds at
/// every layer cylinder the history falls in.
pub fn prop3_draw(
    lottery: &TheoryLottery,
    theta: PathSpec,
    params: &GctParams,
    cap: usize,
    c: BigRational,
) -> Result<Prop3Draw, RevealError> {
    let params = params.clone().with_dense(DenseEnum::Theta(theta.clone()));
    let revealed = revelation_path(lottery, &params)?;
    let h = revealed.history.clone();
    let rlr = RlrParams {
        theta: theta.clone(),
        cap,
        c,
    };
    let mut all_rejected = true;
    let mut events = 0;
    let mut violations = 0;
    for (p, _) in lottery.support() {
        let prepared = RlrPrepared::new(&rlr, p);
        if !prepared.verdict(&h).is_reject() {
            all_rejected = false;
        }
        let lower = prepared.lower_masses(&h);
        let region = GctRegion::build(p, &params);
        let masses = p.cylinder_probs_along(&h);
        for k in 1..=params.layers {
            for (i, base) in region.layer(k) {
                if !h.extends(base) {
                    continue;
                }
                events += 1;
                let n = base.len();
                let ratio_floor = pow2(k + i) / BigRational::from_integer(BigInt::from(i * (i + 1)));
                let weak = pow2(k - 1);
                let q = &lower[n];
                let ok = masses[n].scale(&ratio_floor).le(q) && masses[n].scale(&weak).le(q);
                if !ok {
                    violations += 1;
                }
            }
        }
    }
    Ok(Prop3Draw {
        theta,
        history: h,
        category_failure: revealed.failure,
        all_rejected,
        events,
        violations,
    })
}

/// Runs [`prop3_draw`] for θ drawn from each seed.
pub fn prop3_check(
    lottery: &TheoryLottery,
    theta_seeds: &[u64],
    params: &GctParams,
    cap: usize,
    c: BigRational,
) -> Result<Prop3Report, RevealError> {
    if let Some((p, _)) = lottery.support().iter().find(|(p, _)| !p.is_nonatomic()) {
        return Err(RevealError::Atomic(p.label().into()));
    }
    let draws = theta_seeds
        .iter()
        .map(|&seed| {
            let theta = random_theta(seed, params.depth);
            prop3_draw(lottery, theta, params, cap, c.clone())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Prop3Report { draws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Arith;
    use crate::theory::Theory;

    const E: Arith = Arith::Exact;

    fn q(n: u64, d: u64) -> Prob {
        Prob::from_ratio(n, d, E)
    }

    fn params(k: usize) -> GctParams {
        GctParams {
            layers: k,
            ..GctParams::default()
        }
    }

    #[test]
    fn single_fair_coin() {
        let lottery = TheoryLottery::singleton(Theory::bernoulli(q(1, 2)).unwrap());
        let r = revelation_path(&lottery, &params(2)).unwrap();
        assert_eq!(r.history, "000".parse().unwrap());
        assert_eq!(r.failure, q(1, 1));
        assert_eq!(verify_failure(&lottery, &r.history, &params(2)), q(1, 1));
    }

    #[test]
    fn two_coins() {
        let lottery = TheoryLottery::new(alloc::vec![
            (Theory::bernoulli(q(1, 4)).unwrap(), q(1, 2)),
            (Theory::bernoulli(q(3, 4)).unwrap(), q(1, 2)),
        ])
        .unwrap();
        let r = revelation_path(&lottery, &params(2)).unwrap();
        assert_eq!(r.failure, q(1, 1));
        assert_eq!(verify_failure(&lottery, &r.history, &params(2)), q(1, 1));
        assert!(!r.has_skips());
    }

    #[test]
    fn no_layers_reveal_nothing() {
        let lottery = TheoryLottery::singleton(Theory::bernoulli(q(1, 2)).unwrap());
        let r = revelation_path(&lottery, &params(0)).unwrap();
        assert!(r.history.is_empty());
        assert!(r.failure.is_zero());
        assert!(verify_failure(&lottery, &History::empty(), &params(3)).is_zero());
    }

    #[test]
    fn depth_exceeded_is_reported() {
        // a coin that almost never shows 1 needs very long runs of zeros
        let lottery = TheoryLottery::singleton(Theory::bernoulli(q(1, 1000)).unwrap());
        let r = revelation_path(&lottery, &params(2)).unwrap();
        assert!(r.failure.is_zero());
        assert!(r.has_skips());
    }

    #[test]
    fn theta_revelation_on_fair_coin() {
        let lottery = TheoryLottery::singleton(Theory::bernoulli(q(1, 2)).unwrap());
        let c = BigRational::from_integer(BigInt::from(2));
        let report = prop3_check(&lottery, &(0..20).collect::<Vec<_>>(), &params(5), 200, c).unwrap();
        assert_eq!(report.fraction(), 1.0);
        assert_eq!(report.violations(), 0);
        assert!(report.events() >= 20 * 5);

        let atomic = TheoryLottery::singleton(Theory::point_mass(PathSpec::constant(0), E));
        assert!(matches!(
            prop3_check(&atomic, &[1], &params(5), 200, BigRational::from_integer(BigInt::from(2))),
            Err(RevealError::Atomic(_))
        ));
    }
}
