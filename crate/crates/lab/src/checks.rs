//! Exact-arithmetic checks of the layer constructions and the game solver.

use std::fmt;

use catest_core::category::{layers_for, DenseEnum, GctParams, GctRegion};
use catest_core::game::{solve_zero_sum, GameMatrix};
use catest_core::likelihood::{qs_cylinder_mass, TbarParams, TbarRegion, Weights};
use catest_core::{Arith, History, Prob, Theory};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one check.
#[derive(Clone, Debug)]
pub struct Check {
    pub held: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", if self.held { "held" } else { "failed" }, self.detail)
    }
}

fn q(n: u64, d: u64) -> Prob {
    Prob::from_ratio(n, d, Arith::Exact)
}

fn int(n: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// The built-in nonatomic theories, exact mode.
pub fn nonatomic_catalogue() -> Vec<Theory> {
    vec![
        Theory::bernoulli(q(1, 2)).expect("interior"),
        Theory::bernoulli(q(1, 5)).expect("interior"),
        Theory::bernoulli(q(4, 5)).expect("interior"),
        Theory::bernoulli(q(1, 3)).expect("interior"),
        Theory::markov(q(3, 5), q(2, 5), q(3, 10), q(7, 10)).expect("rows sum to one"),
        Theory::markov(q(1, 4), q(3, 4), q(2, 3), q(1, 3)).expect("rows sum to one"),
        Theory::counting(Arith::Exact),
        Theory::mixture(vec![
            (q(1, 2), Theory::bernoulli(q(1, 4)).expect("interior")),
            (q(1, 2), Theory::bernoulli(q(2, 3)).expect("interior")),
        ])
        .expect("weights sum to one"),
    ]
}

/// Each of the first `max_k` category layers has measure at most `2^{-k}`,
/// summed over its cylinders in exact arithmetic.
pub fn layer_measure(theories: &[Theory], max_k: usize) -> Check {
    let params = GctParams::default();
    let mut worst = String::new();
    let mut failures = 0;
    let mut checked = 0;
    for theory in theories {
        let region = GctRegion::build(theory, &params);
        for k in 1..=max_k {
            let total = Prob::sum(
                region
                    .layer(k)
                    .map(|(_, base)| theory.cylinder_prob(base))
                    .collect::<Vec<_>>()
                    .iter(),
                Arith::Exact,
            );
            checked += 1;
            if !total.le(&Prob::pow2_neg(k as u32, Arith::Exact)) {
                failures += 1;
                worst = format!(", e.g. {theory} at k={k}: {total}");
            }
        }
    }
    Check {
        held: failures == 0,
        detail: format!("{checked} (theory, k) pairs, {failures} above 2^-k{worst}"),
    }
}

/// Category rejections with `K(m)` layers against the likelihood test with
/// `M = m` and threshold `m`, on sampled (theory, path) pairs. Half of the
/// paths are drawn from the theory, half are dense paths `s^i` cut at the
/// depth cap.
pub fn category_dominated(theories: &[Theory], pairs: usize, ms: &[usize], seed: u64) -> Check {
    let caps = GctParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<(usize, History)> = (0..pairs)
        .map(|j| {
            let t = rng.random_range(0..theories.len());
            let h = if j % 2 == 0 {
                theories[t].sample_path(rng.random(), caps.depth)
            } else {
                caps.dense.path(rng.random_range(1..=caps.paths)).truncate(caps.depth)
            };
            (t, h)
        })
        .collect();
    let mut rejections = 0;
    let mut counterexamples = Vec::new();
    for &m in ms {
        let gct = caps.clone().with_layers(layers_for(m));
        let tbar = TbarParams {
            caps: caps.clone(),
            ..TbarParams::new(m, int(m))
        };
        let regions: Vec<(GctRegion, TbarRegion)> = theories
            .iter()
            .map(|p| (GctRegion::build(p, &gct), TbarRegion::build(p, &tbar)))
            .collect();
        for (t, h) in &samples {
            let (g, l) = &regions[*t];
            if let Some(at) = g.verdict(h).rejection_period() {
                rejections += 1;
                match l.verdict(h).rejection_period() {
                    Some(r) if r <= at => {}
                    _ => counterexamples.push(format!("{} m={m} {h}", theories[*t])),
                }
            }
        }
    }
    Check {
        held: counterexamples.is_empty(),
        detail: format!(
            "{pairs} pairs, m in {ms:?}: {rejections} category rejections, {} counterexamples{}",
            counterexamples.len(),
            counterexamples.first().map_or(String::new(), |c| format!(" ({c})"))
        ),
    }
}

/// Cylinders of length at most `horizon` inside layer `m`, plus the layer's
/// own bases.
fn cylinders_in_layer(region: &TbarRegion, m: usize, horizon: usize) -> Vec<History> {
    let Some(layer) = region.layer(m) else {
        return Vec::new();
    };
    let mut out: Vec<History> = (0..=horizon)
        .flat_map(History::all_of_length)
        .filter(|h| layer.contains(h))
        .collect();
    out.extend(layer.region.iter().map(|(b, _)| b.clone()));
    out
}

/// Counts of `(checked, violations)` for one weighting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BoundCount {
    pub checked: usize,
    pub violations: usize,
}

/// `lower Q(C) >= m P(C)` for every cylinder `C` inside layer `m`, and the
/// single-layer term `π(m) Q^m(C) >= m P(C)` that carries it.
pub fn likelihood_bound(theory: &Theory, max_m: usize, horizon: usize, weights: Weights) -> Vec<(BoundCount, BoundCount)> {
    let params = TbarParams {
        weights,
        ..TbarParams::new(max_m, int(1))
    };
    let region = TbarRegion::build(theory, &params);
    (1..=max_m)
        .map(|m| {
            let mut full = BoundCount::default();
            let mut term = BoundCount::default();
            let Some(layer) = region.layer(m) else {
                return (full, term);
            };
            let pi = weights.pi(m, Arith::Exact);
            for h in cylinders_in_layer(&region, m, horizon) {
                let mass = theory.cylinder_prob(&h);
                let need = mass.scale(&int(m));
                full.checked += 1;
                if !need.le(&region.qbar(&h).lower) {
                    full.violations += 1;
                }
                let q = &(&pi * &layer.overlap(&h, &mass)) / &layer.mass;
                term.checked += 1;
                if !need.le(&q) {
                    term.violations += 1;
                }
            }
            (full, term)
        })
        .collect()
}

/// The bound with telescoping weights across `theories`, and the literal
/// weights' per-layer term at `m = 1..=max_m` for the first theory.
pub fn likelihood_bounds(theories: &[Theory], max_m: usize, horizon: usize) -> (Check, Check) {
    let mut checked = 0;
    let mut violations = 0;
    for theory in theories {
        for (full, term) in likelihood_bound(theory, max_m, horizon, Weights::Telescoping) {
            checked += full.checked + term.checked;
            violations += full.violations + term.violations;
        }
    }
    let telescoping = Check {
        held: violations == 0 && checked > 0,
        detail: format!("{} theories, m <= {max_m}, horizon <= {horizon}: {checked} inequalities, {violations} violations", theories.len()),
    };
    let literal = likelihood_bound(&theories[0], max_m, horizon, Weights::Literal);
    let first_fail = literal.iter().position(|(_, term)| term.violations > 0).map(|i| i + 1);
    let per_m: Vec<String> = literal
        .iter()
        .enumerate()
        .map(|(i, (full, term))| {
            format!(
                "m={}: {}/{} per-layer, {}/{} total",
                i + 1,
                term.violations,
                term.checked,
                full.violations,
                full.checked
            )
        })
        .collect();
    let literal_check = Check {
        held: first_fail == Some(3),
        detail: format!(
            "literal weights on {}: first per-layer failure at m={} ({})",
            theories[0],
            first_fail.map_or("none".into(), |m| m.to_string()),
            per_m.join("; ")
        ),
    };
    (telescoping, literal_check)
}

/// `Σ_{i<=N} 1/(i(i+1)) = N/(N+1)` for every `N <= max`, the weight tail
/// `1/(M+1)`, and the dense measure of the whole space.
pub fn telescoping(max: usize) -> Check {
    let mut sum = BigRational::zero();
    let mut bad = Vec::new();
    let w = Weights::Telescoping;
    let mut weights = BigRational::zero();
    for n in 1..=max {
        sum += BigRational::new(BigInt::from(1), BigInt::from(n * (n + 1)));
        if sum != BigRational::new(BigInt::from(n), BigInt::from(n + 1)) {
            bad.push(format!("partial sum at N={n}"));
        }
        weights += w.exact(n);
        let tail = w.tail(n, Arith::Exact);
        if tail != q(1, n as u64 + 1) || Prob::from_rational(weights.clone(), Arith::Exact).map(|p| p.complement()) != Some(tail) {
            bad.push(format!("weight tail at M={n}"));
        }
    }
    let all = qs_cylinder_mass(&DenseEnum::Default, &History::empty(), max, Arith::Exact);
    if all.lower != q(max as u64, max as u64 + 1) || !all.upper.is_one() {
        bad.push("dense mass of the whole space".into());
    }
    Check {
        held: bad.is_empty(),
        detail: format!(
            "N, M <= {max}: {} mismatches{}",
            bad.len(),
            bad.first().map_or(String::new(), |b| format!(" ({b})"))
        ),
    }
}

fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |mask| (0..n).filter(|&i| mask & (1 << i) != 0).collect())
}

/// Game value by brute force: an optimal row strategy equalizes some square
/// submatrix, so try them all.
pub fn brute_force_value(m: &[Vec<u8>]) -> f64 {
    let (rows, cols) = (m.len(), m[0].len());
    let mut best = f64::NEG_INFINITY;
    for rs in subsets(rows) {
        for cs in subsets(cols).filter(|cs| cs.len() == rs.len()) {
            let k = rs.len();
            let mut a = vec![vec![0.0; k + 1]; k + 1];
            let mut b = vec![0.0; k + 1];
            for (eq, &c) in cs.iter().enumerate() {
                for (j, &r) in rs.iter().enumerate() {
                    a[eq][j] = f64::from(m[r][c]);
                }
                a[eq][k] = -1.0;
            }
            a[k][..k].fill(1.0);
            b[k] = 1.0;
            let Some(x) = solve_linear(a, b) else { continue };
            if x[..k].iter().any(|&w| w < -1e-12) {
                continue;
            }
            let worst = (0..cols)
                .map(|c| rs.iter().zip(&x).map(|(&r, w)| w * f64::from(m[r][c])).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            best = best.max(worst);
        }
    }
    best
}

/// All sixteen 0/1 2×2 games and a fixed suite of 4×4 games.
pub fn solver_suite() -> Vec<Vec<Vec<u8>>> {
    let mut suite: Vec<Vec<Vec<u8>>> = (0..16u8)
        .map(|bits| vec![vec![bits & 1, (bits >> 1) & 1], vec![(bits >> 2) & 1, (bits >> 3) & 1]])
        .collect();
    suite.extend([
        vec![vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 1]],
        vec![vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 1, 1], vec![1, 0, 0, 1]],
        vec![vec![1, 1, 1, 0], vec![1, 0, 0, 1], vec![0, 1, 0, 1], vec![0, 0, 1, 1]],
        vec![vec![0, 0, 0, 0], vec![1, 1, 1, 1], vec![1, 0, 1, 0], vec![0, 1, 0, 1]],
        vec![vec![1, 0, 1, 1], vec![0, 1, 1, 0], vec![1, 1, 0, 0], vec![0, 0, 0, 1]],
    ]);
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..15 {
        suite.push(
            (0..4)
                .map(|_| (0..4).map(|_| u8::from(rng.random::<bool>())).collect())
                .collect(),
        );
    }
    suite
}

/// Solver value against [`brute_force_value`] on [`solver_suite`].
pub fn solver_agreement(tolerance: f64) -> Check {
    let suite = solver_suite();
    let mut worst: f64 = 0.0;
    let mut bad = 0;
    for rows in &suite {
        let m = GameMatrix::from_rows(rows).expect("nonempty");
        let value = match solve_zero_sum(&m, tolerance / 10.0) {
            Ok(eq) => eq.value.to_f64(),
            Err(_) => f64::NAN,
        };
        let diff = (value - brute_force_value(rows)).abs();
        if diff.is_nan() || diff > tolerance {
            bad += 1;
        }
        worst = worst.max(diff);
    }
    Check {
        held: bad == 0,
        detail: format!("{} games, max |solver - brute force| = {worst:.2e}, {bad} beyond {tolerance}", suite.len()),
    }
}
