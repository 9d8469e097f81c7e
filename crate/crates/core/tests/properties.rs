mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rtd_rc::device::{default_params, reference_params};
use rtd_rc::linalg::Cholesky;
use rtd_rc::matrix::Matrix;
use rtd_rc::readout::{classify, fit_ridge};
use rtd_rc::reservoir::StateMatrix;

proptest! {
    #[test]
    fn current_is_finite_and_sign_follows_bias(v in -50.0f64..50.0) {
        for p in [default_params::<f64>(), reference_params()] {
            let i = p.total_current(v);
            prop_assert!(i.is_finite());
            if v > 0.0 {
                prop_assert!(i > 0.0);
            } else if v < 0.0 {
                prop_assert!(i < 0.0);
            }
        }
    }

    #[test]
    fn resonant_term_is_monotone(a in -10.0f64..10.0, d in 1e-3f64..1.0) {
        let p = default_params::<f64>();
        prop_assert!(p.resonant_current(a + d) > p.resonant_current(a));
    }

    #[test]
    fn single_precision_agrees(v in -5.0f64..5.0) {
        let hi = default_params::<f64>().total_current(v);
        let lo = default_params::<f32>().total_current(v as f32) as f64;
        prop_assert!((hi - lo).abs() <= 1e-5 * hi.abs().max(1e-3));
    }

    #[test]
    fn gram_equals_transpose_product(seed in any::<u64>(), k in 1usize..40, j in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = support::random_matrix(&mut rng, k, j);
        let g = x.gram();
        let oracle = support::to_na(&x).transpose() * support::to_na(&x);
        prop_assert!((support::to_na(&g) - &oracle).norm() <= 1e-12 * oracle.norm().max(1.0));
        prop_assert_eq!(g.clone(), g.transpose());
    }

    #[test]
    fn cholesky_solves_spd_systems(seed in any::<u64>(), n in 1usize..25, m in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = support::random_matrix(&mut rng, n + 3, n);
        let mut a = b.gram();
        for i in 0..n {
            a.as_mut_slice()[i * n + i] += 0.1;
        }
        let rhs = support::random_matrix(&mut rng, n, m);
        let x = Cholesky::factor(&a).unwrap().solve(&rhs).unwrap();
        let r = a.matmul(&x).unwrap().sub(&rhs).unwrap();
        prop_assert!(r.frobenius_norm() <= 1e-10 * rhs.frobenius_norm().max(1.0));
    }

    #[test]
    fn regularisation_shrinks_weights(seed in any::<u64>(), l1 in 1e-4f64..1.0, factor in 1.5f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = support::random_instance(&mut rng, l1);
        let w1 = fit_ridge(&inst.x, &inst.y, l1).unwrap().weights().frobenius_norm();
        let w2 = fit_ridge(&inst.x, &inst.y, l1 * factor).unwrap().weights().frobenius_norm();
        prop_assert!(w1 >= w2 * (1.0 - 1e-12));
    }

    #[test]
    fn classify_ignores_monotone_transforms(seed in any::<u64>(), shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = support::random_matrix(&mut rng, 12, 7);
        let moved = Matrix::from_vec(
            12,
            7,
            scores.as_slice().iter().map(|&s| (scale * s + shift).exp()).collect(),
        )
        .unwrap();
        prop_assert_eq!(classify(&scores), classify(&moved));
    }
}

#[test]
fn stacked_state_rows_are_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = support::random_matrix(&mut rng, 10, 4);
    let s = StateMatrix::from_matrix(x.clone());
    let sub = s.select(&[3, 1]);
    assert_eq!(sub.matrix().row(0), x.row(3));
    assert_eq!(sub.matrix().row(1), x.row(1));
}
