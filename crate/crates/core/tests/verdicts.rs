mod common;

use catest_core::category::{AtomMode, GctParams};
use catest_core::forecast_test::{
    combine, is_prequential_witness, AvgMatch, Calibration, LikelihoodFixed, Test, Verdict,
};
use catest_core::likelihood::{RlrParams, TbarParams};
use catest_core::{History, PathSpec, Theory, TreeStrategy};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn suite() -> Vec<Test> {
    vec![
        Test::AvgMatch(AvgMatch::new(r(1, 5), 3)),
        Test::Calibration(Calibration::new(2, r(1, 5), 2, 6)),
        Test::Likelihood(LikelihoodFixed::new(Theory::bernoulli(p(1, 4)).unwrap(), r(4, 1))),
        Test::Gct(GctParams::new(2, 3, 12).unwrap()),
        Test::Tbar(TbarParams::new(2, r(2, 1))),
        Test::RandomizedLr(RlrParams {
            theta: PathSpec::new(&[1], &[0]).unwrap(),
            cap: 20,
            c: r(2, 1),
        }),
        combine(
            Test::AvgMatch(AvgMatch::new(r(1, 5), 3)),
            Test::Gct(GctParams::new(2, 3, 12).unwrap()),
        ),
    ]
}

#[test]
fn rejection_is_absorbing() {
    let histories: Vec<History> = (0..=9).flat_map(History::all_of_length).collect();
    for test in suite() {
        let mut rejections = 0;
        for theory in catalogue() {
            let prepared = test.prepare(&theory);
            for h in &histories {
                if let Verdict::Reject(t) = prepared.verdict(h) {
                    rejections += 1;
                    assert!(t <= h.len());
                    for b in 0..2 {
                        assert_eq!(prepared.verdict(&h.child(b)), Verdict::Reject(t), "{test} {theory} {h}");
                    }
                }
            }
        }
        assert!(rejections > 0, "{test} never rejects");
    }
}

#[test]
fn combination_is_harder_than_each_part() {
    let tests = suite();
    for (a, b) in [(0, 1), (0, 3), (2, 4), (1, 5)] {
        let both = combine(tests[a].clone(), tests[b].clone());
        for theory in catalogue() {
            let (pa, pb, pc) = (tests[a].prepare(&theory), tests[b].prepare(&theory), both.prepare(&theory));
            for h in History::all_of_length(6) {
                if !pc.verdict(&h).is_reject() {
                    assert!(!pa.verdict(&h).is_reject() && !pb.verdict(&h).is_reject(), "{both} {theory} {h}");
                }
            }
        }
    }
}

fn random_tree(rng: &mut ChaCha8Rng, grid: u32, horizon: usize) -> TreeStrategy {
    let mut nodes = vec![0; 1 << horizon];
    for v in nodes.iter_mut().skip(1) {
        *v = rng.random_range(0..=grid);
    }
    TreeStrategy { grid, horizon, nodes }
}

/// Same forecasts at every prefix of `h`, different forecasts elsewhere.
fn rewire_off_path(rng: &mut ChaCha8Rng, tree: &TreeStrategy, h: &History) -> TreeStrategy {
    let on_path: Vec<usize> = (0..=h.len().min(tree.horizon - 1))
        .map(|t| catest_core::theory::node_index(&h.truncate(t)))
        .collect();
    let mut out = tree.clone();
    for (v, level) in out.nodes.iter_mut().enumerate().skip(1) {
        if !on_path.contains(&v) {
            *level = rng.random_range(0..=tree.grid);
        }
    }
    out
}

#[test]
fn prequential_tests_have_no_witnesses() {
    let tests = [
        Test::AvgMatch(AvgMatch::new(r(1, 5), 2)),
        Test::Calibration(Calibration::new(4, r(1, 5), 2, 8)),
        Test::Likelihood(LikelihoodFixed::new(Theory::bernoulli(p(1, 3)).unwrap(), r(3, 1))),
        Test::RandomizedLr(RlrParams {
            theta: PathSpec::constant(1),
            cap: 16,
            c: r(3, 2),
        }),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let base = catalogue();
    let mut differing = 0;
    for probe in 0..1000 {
        let len = rng.random_range(1..=8);
        let h = History::from_index(rng.random_range(0..1u64 << len), len);
        let (a, b) = if probe % 2 == 0 {
            let tree = random_tree(&mut rng, 4, 9);
            let other = rewire_off_path(&mut rng, &tree, &h);
            (Theory::tree(tree, E).unwrap(), Theory::tree(other, E).unwrap())
        } else {
            let a = base[rng.random_range(0..base.len())].clone();
            let b = a.atomic_splice(&h);
            (a, b)
        };
        assert_eq!(a.forecasts_along(&h), b.forecasts_along(&h));
        let mut off = h.bits().to_vec();
        off[0] ^= 1;
        let off = History::from_bits(&off).child(1).child(0);
        if a.forecasts_along(&off) != b.forecasts_along(&off) {
            differing += 1;
        }
        for test in &tests {
            assert!(test.is_prequential());
            assert!(!is_prequential_witness(test, &a, &b, &h), "{test} {a} {b} {h}");
        }
    }
    assert!(differing > 0);
}

#[test]
fn category_test_has_a_witness() {
    let mut found = None;
    'search: for atoms in [AtomMode::Conservative, AtomMode::Declared] {
        let test = Test::Gct(GctParams::new(2, 4, 16).unwrap().with_atoms(atoms));
        for len in 0..=8 {
            for h in History::all_of_length(len) {
                for theory in nonatomic() {
                    let spliced = theory.atomic_splice(&h);
                    if is_prequential_witness(&test, &theory, &spliced, &h) {
                        found = Some((test.clone(), theory, h));
                        break 'search;
                    }
                }
            }
        }
    }
    let (test, theory, h) = found.expect("a witness at horizon 8");
    assert!(!test.is_prequential());
    assert_ne!(test.verdict(&theory, &h), test.verdict(&theory.atomic_splice(&h), &h));
}
