mod support;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rtd_rc::readout::{fit_ridge, gradient, normal_equation_residual, objective};
use support::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ridge_matches_explicit_inverse(seed in any::<u64>(), li in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, LAMBDAS[li]);
        let model = fit_ridge(&inst.x, &inst.y, inst.lambda).unwrap();
        let oracle = ridge_by_inverse(inst.x.matrix(), &inst.y, inst.lambda);
        let err = rel_frobenius(model.weights(), &oracle);
        prop_assert!(err < 1e-10, "relative error {err:e}");
        let res = normal_equation_residual(&inst.x, &inst.y, &model).unwrap();
        prop_assert!(res < 1e-8, "residual {res:e}");
    }

    #[test]
    fn ridge_is_stationary_point_of_objective(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 0.1);
        let model = fit_ridge(&inst.x, &inst.y, inst.lambda).unwrap();
        let g = gradient(&inst.x, &inst.y, model.weights(), inst.lambda).unwrap();
        let scale = objective(&inst.x, &inst.y, model.weights(), inst.lambda).unwrap().max(1.0);
        prop_assert!(g.frobenius_norm() < 1e-8 * scale);
    }
}
