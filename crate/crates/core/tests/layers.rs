mod common;

use catest_core::category::{gct_verdict, t_index, type1_bound, CategoryError, DenseEnum, GctParams, GctRegion};
use catest_core::{History, Prob};
use common::*;

#[test]
fn layer_measure_is_at_most_two_to_minus_k() {
    let params = GctParams::default();
    for theory in nonatomic() {
        let region = GctRegion::build(&theory, &params);
        for k in 1..=4 {
            // sum the layer cylinders directly rather than through layer_mass
            let mut total = Prob::zero(E);
            for (_, base) in region.layer(k) {
                total = &total + &theory.cylinder_prob(base);
            }
            assert!(total.le(&Prob::pow2_neg(k as u32, E)), "{theory} k={k}: {total}");
            if let Some(mass) = region.layer_mass(k) {
                assert_eq!(mass, total);
            }
        }
    }
}

#[test]
fn fair_coin_indices_are_k_plus_i() {
    let params = GctParams::default();
    let coin = &nonatomic()[0];
    for k in 1..=4 {
        for i in 1..=12 {
            assert_eq!(t_index(coin, i, k, &params).unwrap(), k + i);
        }
    }
}

#[test]
fn t_index_grows_with_k() {
    let params = GctParams::default();
    for theory in catalogue() {
        for i in 1..=12 {
            let mut prev = 0;
            for k in 1..=7 {
                match t_index(&theory, i, k, &params) {
                    Ok(t) => {
                        assert!(t >= prev, "{theory} i={i} k={k}");
                        prev = t;
                    }
                    Err(CategoryError::DepthExceeded { .. }) => prev = usize::MAX,
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }
}

#[test]
fn layers_are_nested() {
    let params = GctParams::new(4, 6, 24).unwrap();
    for theory in catalogue() {
        let region = GctRegion::build(&theory, &params);
        for k in 1..params.layers {
            let outer: Vec<&History> = region.layer(k).map(|(_, b)| b).collect();
            for (_, inner) in region.layer(k + 1) {
                assert!(outer.iter().any(|b| inner.extends(b)), "{theory} k={k} {inner}");
            }
            for h in History::all_of_length(10) {
                let in_inner = region.layer(k + 1).any(|(_, b)| h.extends(b));
                let in_outer = region.layer(k).any(|(_, b)| h.extends(b));
                assert!(!in_inner || in_outer);
            }
        }
    }
}

#[test]
fn refining_truncation_never_unrejects() {
    let mut grid = Vec::new();
    for k in 1..=3 {
        for i in [2, 4, 6] {
            for d in [10, 16, 24] {
                grid.push(GctParams::new(k, i, d).unwrap());
            }
        }
    }
    let paths: Vec<History> = History::all_of_length(8).collect();
    for theory in catalogue() {
        let rejected: Vec<Vec<bool>> = grid
            .iter()
            .map(|params| {
                let region = GctRegion::build(&theory, params);
                paths.iter().map(|h| region.verdict(h).is_reject()).collect()
            })
            .collect();
        for (a, pa) in grid.iter().enumerate() {
            for (b, pb) in grid.iter().enumerate() {
                let finer = pb.layers <= pa.layers && pb.paths >= pa.paths && pb.depth >= pa.depth;
                if !finer {
                    continue;
                }
                for (j, h) in paths.iter().enumerate() {
                    assert!(!rejected[a][j] || rejected[b][j], "{theory} {pa} -> {pb} on {h}");
                }
            }
        }
    }
}

#[test]
fn dense_family_meets_every_short_cylinder() {
    for dense in [DenseEnum::Default, DenseEnum::Theta("0110|1".parse().unwrap())] {
        for len in 0..=6 {
            for h in History::all_of_length(len) {
                let i = dense.first_extending(&h, dense.density_bound(len)).expect("dense");
                assert!(dense.path(i).in_cylinder(&h));
            }
        }
    }
}

#[test]
fn atomic_theories_pay_for_their_atoms() {
    let params = GctParams::default();
    let atomic = &catalogue()[7];
    let bound = type1_bound(atomic, &params);
    assert!(bound.gt(&Prob::pow2_neg(7, E)));
    // the half-weight atom on 0^∞ is never rejected
    let zeros = History::from_bits(&[0; 40]);
    assert!(!gct_verdict(atomic, &zeros, &params).is_reject());
}
