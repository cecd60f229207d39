use appstress::model_selection::Classifier;
use appstress::svm::{dual_objective, gram_matrix, solve_dual, train_multiclass, KernelSpec, MulticlassModel, SvmParams};
use appstress::synth::brute_force_svm_oracle;
use proptest::prelude::*;

fn problem() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..=6, 1usize..=3).prop_flat_map(|(n, d)| {
        (
            prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d), n),
            prop::collection::vec(prop::bool::ANY, n),
        )
            .prop_filter_map("needs both classes", |(xs, bs)| {
                let ys: Vec<f64> = bs.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
                (ys.contains(&1.0) && ys.contains(&-1.0)).then_some((xs, ys))
            })
    })
}

fn kernel() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        Just(KernelSpec::Linear),
        (0.05..2.0f64).prop_map(|gamma| KernelSpec::Rbf { gamma }),
        (2u32..=3).prop_map(|degree| KernelSpec::Polynomial { degree, coef0: 1.0 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smo_reaches_the_oracle_optimum((xs, ys) in problem(), k in kernel(), c in prop::sample::select(vec![0.1, 1.0, 10.0])) {
        let sol = solve_dual(&xs, &ys, &k, &SvmParams::with_c(c)).unwrap();
        let oracle = brute_force_svm_oracle(&xs, &ys, &k, c).unwrap();
        let w = dual_objective(&gram_matrix(&xs, &k), &ys, &sol.alphas);
        prop_assert!((w - oracle.objective).abs() <= 1e-4 * oracle.objective.abs().max(1.0));
        let eq: f64 = sol.alphas.iter().zip(&ys).map(|(a, y)| a * y).sum();
        prop_assert!(eq.abs() < 1e-9);
        prop_assert!(sol.alphas.iter().all(|&a| (0.0..=c).contains(&a)));
    }
}

#[test]
fn models_survive_json_round_trip() {
    let xs: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i * i % 7) as f64]).collect();
    let labels: Vec<u8> = (0..12).map(|i| 1 + (i % 3) as u8).collect();
    let m = train_multiclass(&xs, &labels, &KernelSpec::Rbf { gamma: 0.5 }, &SvmParams::with_c(10.0)).unwrap();
    let text = serde_json::to_string(&m).unwrap();
    let back: MulticlassModel = serde_json::from_str(&text).unwrap();
    assert_eq!(back, m);
    for x in &xs {
        assert_eq!(back.predict(x).unwrap(), m.predict(x).unwrap());
    }
}

#[test]
fn single_class_training_falls_back_to_constant() {
    let xs = vec![vec![0.0], vec![1.0], vec![2.0]];
    let c = Classifier::fit(&xs, &[4, 4, 4], &KernelSpec::Linear, &SvmParams::default()).unwrap();
    assert!(c.is_fallback());
    assert_eq!(c.predict(&[10.0]).unwrap(), 4);
}
