mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn op_gradients_match_finite_differences(seed in 0u64..10_000) {
        for (name, err) in common::op_gradient_errors(seed) {
            let tol = if name == "linear" { 1e-5 } else { common::GRAD_TOL };
            prop_assert!(err < tol, "{name}: rel err {err:e}");
        }
    }

    #[test]
    fn composite_loss_gradient_matches_finite_differences(seed in 0u64..10_000) {
        let err = common::composite_gradient_error(seed);
        prop_assert!(err < common::GRAD_TOL, "rel err {err:e}");
    }
}

#[test]
fn reports_worst_errors() {
    let mut worst = std::collections::BTreeMap::<&str, f64>::new();
    for seed in 0..20 {
        for (name, err) in common::op_gradient_errors(seed) {
            let w = worst.entry(name).or_default();
            *w = w.max(err);
        }
        let w = worst.entry("composite").or_default();
        *w = w.max(common::composite_gradient_error(seed));
    }
    for (name, err) in &worst {
        println!("{name:>20}: {err:.3e}");
        assert!(*err < common::GRAD_TOL, "{name}");
    }
}
