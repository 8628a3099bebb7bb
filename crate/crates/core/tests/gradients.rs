use proptest::prelude::*;
use pvtkin_core::gradsuite::{check_op, run_suite, SuiteConfig, DEFAULT_TOLERANCE, OPS};
use pvtkin_core::tensor::{finite_diff_check, Tape, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn every_operation_passes_finite_differences() {
    let report = run_suite(&SuiteConfig::default()).unwrap();
    print!("{}", report.to_text(DEFAULT_TOLERANCE));
    assert_eq!(report.results.len(), OPS.len());
    for r in &report.results {
        assert!(r.cases >= 10);
        assert!(
            r.passed(DEFAULT_TOLERANCE),
            "{} error {:e} at {:?}",
            r.op,
            r.max_rel_error,
            r.worst_shapes
        );
    }
}

#[test]
fn suite_is_deterministic() {
    let cfg = SuiteConfig {
        cases: 3,
        ..SuiteConfig::default()
    };
    assert_eq!(
        check_op("layer_norm", &cfg).unwrap(),
        check_op("layer_norm", &cfg).unwrap()
    );
}

// Adjoint of a linear map: <A x, y> == <x, Aᵀ y> for the matmul vjp.
#[test]
fn matmul_vjp_is_the_adjoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let a = Tensor::randn([3, 4], 1.0, &mut rng);
        let x = Tensor::randn([4, 2], 1.0, &mut rng);
        let y = Tensor::randn([3, 2], 1.0, &mut rng);
        let mut tape = Tape::new();
        let av = tape.constant(a.clone());
        let xv = tape.leaf(x.clone());
        let ax = tape.matmul(av, xv).unwrap();
        let yv = tape.constant(y.clone());
        let prod = tape.mul(ax, yv).unwrap();
        let s = tape.sum(prod);
        let lhs = tape.value(s).item().unwrap();
        tape.backward(s).unwrap();
        let g = tape.grad(xv).unwrap();
        let rhs: f64 = g.data().iter().zip(x.data()).map(|(p, q)| p * q).sum();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_rows_sum_to_one(vals in prop::collection::vec(-50.0f64..50.0, 12), shift in -500.0f64..500.0) {
        let mut tape = Tape::new();
        let shifted: Vec<f64> = vals.iter().map(|v| v + shift).collect();
        let x = tape.constant(Tensor::new([3, 4], vals.clone()).unwrap());
        let y = tape.constant(Tensor::new([3, 4], shifted).unwrap());
        let sx = tape.softmax(x, 1).unwrap();
        let sy = tape.softmax(y, 1).unwrap();
        for row in tape.value(sx).data().chunks(4) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
        prop_assert!(tape.value(sx).max_abs_diff(tape.value(sy)) < 1e-12);
    }

    #[test]
    fn gradient_of_a_sum_is_additive(vals in prop::collection::vec(-3.0f64..3.0, 6)) {
        // d/dx [f + g] = f' + g' for f = sum(x²), g = sum(gelu(x))
        let x = Tensor::new([2, 3], vals).unwrap();
        let grad = |which: u8| {
            let mut tape = Tape::new();
            let v = tape.leaf(x.clone());
            let sq = tape.mul(v, v).unwrap();
            let f = tape.sum(sq);
            let gl = tape.gelu(v);
            let g = tape.sum(gl);
            let out = match which {
                0 => f,
                1 => g,
                _ => {

                    tape.add(f, g).unwrap()
                }
            };
            tape.backward(out).unwrap();
            tape.grad(v).unwrap()
        };
        let (gf, gg, gs) = (grad(0), grad(1), grad(2));
        for i in 0..6 {
            prop_assert!((gf.data()[i] + gg.data()[i] - gs.data()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn layer_norm_rows_are_standardized(vals in prop::collection::vec(-10.0f64..10.0, 8)) {
        prop_assume!(vals[..4].iter().any(|v| (v - vals[0]).abs() > 1e-3));
        prop_assume!(vals[4..].iter().any(|v| (v - vals[4]).abs() > 1e-3));
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::new([2, 4], vals).unwrap());
        let g = tape.constant(Tensor::ones([4]));
        let b = tape.constant(Tensor::zeros([4]));
        let y = tape.layer_norm(x, g, b, 1e-12).unwrap();
        for row in tape.value(y).data().chunks(4) {
            let mean = row.iter().sum::<f64>() / 4.0;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 4.0;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn single_input_check_matches_analytic_square() {
    let x = Tensor::vector(&[0.5, -1.5, 2.0]);
    let err = finite_diff_check(
        |t, v| {
            let sq = t.mul(v, v)?;
            Ok(t.sum(sq))
        },
        &x,
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-8);
}
