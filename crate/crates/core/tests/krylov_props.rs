mod common;

use common::*;
use helmdd::krylov::{gmres_right, identity, GmresOptions};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn random_system(n: usize, seed: u64, shift: f64) -> (DMatrix<C>, DVector<C>, Vec<C>) {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut z = || c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let mut a = DMatrix::from_fn(n, n, |_, _| z());
    for i in 0..n {
        a[(i, i)] += c(shift, 0.5);
    }
    let b = DVector::from_fn(n, |_, _| z());
    let d: Vec<C> = (0..n).map(|_| z() + c(2.0, 0.0)).collect();
    (a, b, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gmres_solves_small_dense_systems(
        n in 2usize..25,
        seed in any::<u64>(),
        shift in 0.0..4.0f64,
        precondition in prop::bool::ANY,
    ) {
        let (a, b, d) = random_system(n, seed, shift);
        let opts = GmresOptions { tol: 1e-10, max_iters: n + 5 };
        let apply_a = |x: &[C]| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec());
        let diag = |x: &[C]| Ok(x.iter().zip(&d).map(|(v, s)| v / s).collect());
        let (x, rep) = if precondition {
            gmres_right(apply_a, diag, b.as_slice(), &opts).unwrap()
        } else {
            gmres_right(apply_a, identity, b.as_slice(), &opts).unwrap()
        };
        prop_assert!(rep.converged);
        prop_assert!(rep.iterations <= n, "{} iterations for n = {n}", rep.iterations);
        prop_assert!(rep.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        prop_assert!(rep.orthogonality_loss <= 1e-8);
        let resid = (&b - &a * DVector::from_column_slice(&x)).norm() / b.norm();
        prop_assert!(resid <= 1e-9, "true residual {resid}");
        prop_assert!((rep.true_residual - resid).abs() <= 1e-9);
    }

    #[test]
    fn iteration_cap_is_respected(n in 10usize..30, seed in any::<u64>(), cap in 1usize..5) {
        let (a, b, _) = random_system(n, seed, 0.0);
        let opts = GmresOptions { tol: 1e-14, max_iters: cap };
        let apply_a = |x: &[C]| Ok((&a * DVector::from_column_slice(x)).as_slice().to_vec());
        let (_, rep) = gmres_right(apply_a, identity, b.as_slice(), &opts).unwrap();
        prop_assert!(rep.iterations <= cap);
        prop_assert_eq!(rep.history.len(), rep.iterations + 1);
        prop_assert_eq!(rep.converged, *rep.history.last().unwrap() <= 1e-14);
    }
}

#[test]
fn zero_rhs_returns_zero() {
    let b = vec![c(0.0, 0.0); 4];
    let (x, rep) = gmres_right(|v: &[C]| Ok(v.to_vec()), identity, &b, &GmresOptions::default()).unwrap();
    assert!(rep.converged);
    assert_eq!(rep.iterations, 0);
    assert!(x.iter().all(|v| v.norm() == 0.0));
}
