use gle_anneal::matrices::{make_a, make_lambda, make_sigma, Design};
use nalgebra::DMatrix;
use proptest::prelude::*;

const DESIGNS: [u32; 4] = [1, 2, 3, 4];

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

#[test]
fn sigma_and_left_inverse_identities() {
    for d in DESIGNS {
        let design = Design::from_index(d).unwrap();
        for n in [1usize, 2, 3, 12] {
            for mu in [0.5, 1.0, 4.0] {
                let a = make_a(design, n, mu).unwrap();
                let s = make_sigma(&a).unwrap();
                let err = max_abs(&(&s.sigma * s.sigma.transpose() - (&a.a + a.a.transpose())));
                assert!(err <= 1e-10, "design {d} n {n} mu {mu}: {err}");

                let l = make_lambda(design, n, mu).unwrap();
                let err = max_abs(&(&l.left_inverse * &l.lambda - DMatrix::identity(n, n)));
                assert!(err <= 1e-12, "design {d} n {n}: {err}");
                assert_eq!(l.lambda.clone().rank(1e-12), n);
                assert_eq!(l.m(), a.dim());
            }
        }
    }
}

#[test]
fn worked_examples() {
    let a = make_a(Design::from_index(1).unwrap(), 2, 1.0).unwrap();
    assert_eq!(a.a, DMatrix::identity(2, 2));
    assert!((a.coercivity - 1.0).abs() < 1e-12);

    let a2 = make_a(Design::from_index(2).unwrap(), 1, 1.0).unwrap();
    assert_eq!(a2.a, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 1.0]));
    assert!(a2.coercivity.abs() < 1e-12);
    let s = make_sigma(&a2).unwrap().sigma;
    let expected = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2f64.sqrt()]);
    assert!(max_abs(&(&s * s.transpose() - &expected * expected.transpose())) < 1e-12);

    let a4 = make_a(Design::from_index(4).unwrap(), 1, 1.0).unwrap();
    assert_eq!(&a4.a + a4.a.transpose(), DMatrix::identity(2, 2) * 2.0);

    let l3 = make_lambda(Design::from_index(3).unwrap(), 2, 1.0).unwrap();
    assert_eq!((l3.m(), l3.n()), (4, 2));

    let l2 = make_lambda(Design::from_index(2).unwrap(), 1, 0.5).unwrap();
    let z = nalgebra::DVector::from_vec(vec![3.0, 7.0]);
    assert!(((l2.lambda.transpose() * z)[0] - 1.5).abs() < 1e-15);
}

#[test]
fn invalid_design_rejected() {
    assert!(Design::from_index(0).is_err());
    assert!(Design::from_index(5).is_err());
}

proptest! {
    #[test]
    fn quadratic_form_bounded_below(d in 1u32..=4, n in 1usize..5, mu in 0.1f64..5.0,
                                    seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let a = make_a(Design::from_index(d).unwrap(), n, mu).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..a.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let zz: f64 = z.iter().map(|v| v * v).sum();
        prop_assert!(a.quadratic_form(&z) >= a.coercivity * zz - 1e-9);
        prop_assert!(a.quadratic_form(&z) >= -1e-12);
    }

    #[test]
    fn sigma_identity_random_mu(d in 1u32..=4, n in 1usize..6, mu in 0.01f64..10.0) {
        let a = make_a(Design::from_index(d).unwrap(), n, mu).unwrap();
        let s = make_sigma(&a).unwrap();
        let err = max_abs(&(&s.sigma * s.sigma.transpose() - (&a.a + a.a.transpose())));
        prop_assert!(err <= 1e-10 * mu.max(1.0));
    }
}
