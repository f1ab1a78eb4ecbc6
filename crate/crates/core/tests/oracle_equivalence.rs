//! Sparse contractions against dense full-tensor sums.

mod common;

use common::*;
use proptest::prelude::*;
use redbasis_core::{reduced_norm, rotate_tensor, truncated_rdm1, truncated_rdm2, CiTensor};
use redbasis_oracle::{rotate_by_minors, DenseTensor};

fn shape() -> impl Strategy<Value = (usize, usize, usize)> {
    (2usize..=6).prop_flat_map(|m| (Just(m), 1usize..=3.min(m))).prop_flat_map(|(m, n)| (Just(m), Just(n), n..=m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rdm1_matches_dense((m, n, kept) in shape(), seed in any::<u64>()) {
        let t = uniform_tensor(m, n, seed);
        let dense = DenseTensor::from_ci(&t).rdm1(kept);
        let gamma = truncated_rdm1(&t, kept).unwrap();
        prop_assert!(max_diff(&gamma.matrix, &dense) < 1e-12);
    }

    #[test]
    fn rdm2_matches_dense((m, n, kept) in shape(), seed in any::<u64>()) {
        prop_assume!(n >= 2);
        let t = uniform_tensor(m, n, seed);
        let dense = DenseTensor::from_ci(&t).rdm2(kept);
        let pair = truncated_rdm2(&t, kept).unwrap();
        for (pos, expected) in dense.iter().enumerate() {
            let (p, q, r, s) = (pos / (m * m * m), (pos / (m * m)) % m, (pos / m) % m, pos % m);
            prop_assert!((pair.pair(p, q, r, s) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_matches_dense((m, n, kept) in shape(), seed in any::<u64>()) {
        let t = uniform_tensor(m, n, seed);
        let u = random_rotation(m, seed ^ 0xabcdef);
        let rotated = rotate_tensor(&t, &u).unwrap();
        let dense = DenseTensor::from_ci(&t).rotate(u.matrix());
        prop_assert!(coeff_diff(&rotated, &dense.to_ci()) < 1e-12);
        for ((tuple, v), (tuple2, w)) in rotate_by_minors(&t, u.matrix()).iter().zip(rotated_entries(&rotated)) {
            prop_assert_eq!(tuple, &tuple2);
            prop_assert!((v - w).abs() < 1e-12);
        }
        prop_assert!((reduced_norm(&t, &u, kept).unwrap() - dense.reduced_norm(kept)).abs() < 1e-12);
    }
}

/// All determinants including zeros, lexicographic.
fn rotated_entries(t: &CiTensor) -> Vec<(Vec<usize>, f64)> {
    redbasis_core::combinatorics::lex_tuples(t.orbitals(), t.particles())
        .map(|tuple| {
            let v = t.coeff(redbasis_core::combinatorics::mask_from_indices(&tuple));
            (tuple.iter().map(|i| i + 1).collect(), v)
        })
        .collect()
}

#[test]
fn dense_tensor_is_antisymmetric_with_unit_norm() {
    for seed in 0..10 {
        let dense = DenseTensor::from_ci(&ratio_tensor(5, 3, 11, seed));
        assert!(dense.antisymmetry_defect() < 1e-15);
        assert!((dense.data.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn element_is_antisymmetric_under_transposition() {
    let t = ratio_tensor(6, 3, 2, 0);
    let d = t.element(&[1, 4, 6]).unwrap();
    assert_eq!(t.element(&[4, 1, 6]).unwrap(), -d);
    assert_eq!(t.element(&[6, 4, 1]).unwrap(), -d);
    assert_eq!(t.element(&[4, 6, 1]).unwrap(), d);
}
