#![allow(dead_code)]

use catest_core::{Arith, PathSpec, Prob, Theory, TreeStrategy};
use num_bigint::BigInt;
use num_rational::BigRational;

pub const E: Arith = Arith::Exact;

pub fn p(n: u64, d: u64) -> Prob {
    Prob::from_ratio(n, d, E)
}

pub fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn h(s: &str) -> catest_core::History {
    s.parse().unwrap()
}

/// Built-in nonatomic theories in exact mode.
pub fn nonatomic() -> Vec<Theory> {
    vec![
        Theory::bernoulli(p(1, 2)).unwrap(),
        Theory::bernoulli(p(1, 3)).unwrap(),
        Theory::bernoulli(p(3, 4)).unwrap(),
        Theory::markov(p(3, 5), p(2, 5), p(3, 10), p(7, 10)).unwrap(),
        Theory::counting(E),
        Theory::mixture(vec![
            (p(1, 2), Theory::bernoulli(p(1, 4)).unwrap()),
            (p(1, 2), Theory::bernoulli(p(2, 3)).unwrap()),
        ])
        .unwrap(),
    ]
}

/// Nonatomic theories plus atomic and undeclared ones.
pub fn catalogue() -> Vec<Theory> {
    let mut out = nonatomic();
    out.push(Theory::point_mass(PathSpec::new(&[1], &[0]).unwrap(), E));
    out.push(
        Theory::mixture(vec![
            (p(1, 2), Theory::point_mass(PathSpec::constant(0), E)),
            (p(1, 2), Theory::bernoulli(p(1, 2)).unwrap()),
        ])
        .unwrap(),
    );
    out.push(
        Theory::tree(
            TreeStrategy {
                grid: 4,
                horizon: 3,
                nodes: vec![0, 2, 1, 3, 0, 4, 2, 2],
            },
            E,
        )
        .unwrap(),
    );
    out
}
