use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use stiefel_landing::linalg::{
    frobenius, orth_complement, skew, solve_lyapunov_skew, solve_lyapunov_spd, spd_sqrt, sym,
    FullRankMatrix, SkewMatrix, SpdMatrix, SymMatrix,
};
use stiefel_landing::random::{gaussian_matrix, random_skew, random_spd, random_symmetric, rng_from_seed};

/// Solves `A S + S A = C` by vectorizing: `(I ⊗ A + A ⊗ I) vec(S) = vec(C)`.
fn lyapunov_by_kronecker(a: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    let k = a.nrows();
    let eye = DMatrix::<f64>::identity(k, k);
    let big = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_column_slice(c.as_slice());
    let sol = big.lu().solve(&rhs).expect("nonsingular Kronecker system");
    DMatrix::from_column_slice(k, k, sol.as_slice())
}

#[test]
fn lyapunov_small_example_matches_direct_solve() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
    let c = DMatrix::from_row_slice(2, 2, &[2.0, 4.0, 4.0, 6.0]);

    // Unknowns s11, s12, s22 of a symmetric S.
    let system = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 6.0]);
    let rhs = DVector::from_column_slice(&[2.0, 4.0, 6.0]);
    let s = system.lu().solve(&rhs).unwrap();
    let direct = DMatrix::from_row_slice(2, 2, &[s[0], s[1], s[1], s[2]]);
    assert_relative_eq!(direct, DMatrix::from_element(2, 2, 1.0), epsilon = 1e-14);

    let spd = SpdMatrix::new(a.clone()).unwrap();
    let solved = solve_lyapunov_spd(&spd, &SymMatrix::from_square(&c).unwrap()).unwrap();
    assert_relative_eq!(solved.matrix(), &direct, epsilon = 1e-14);
    assert_relative_eq!(&a * solved.matrix() + solved.matrix() * &a, c, epsilon = 1e-14);
}

#[test]
fn lyapunov_residual_over_two_hundred_instances() {
    let mut rng = rng_from_seed(11);
    for i in 0..200 {
        let k = 1 + i % 20;
        let a = SpdMatrix::new(random_spd(&mut rng, k)).unwrap();
        let c = SymMatrix::from_square(&random_symmetric(&mut rng, k)).unwrap();
        let s = solve_lyapunov_spd(&a, &c).unwrap();
        let res = a.matrix() * s.matrix() + s.matrix() * a.matrix() - c.matrix();
        assert!(res.norm() <= 1e-10 * c.matrix().norm(), "k={k}: {}", res.norm());

        let w = SkewMatrix::from_square(&random_skew(&mut rng, k)).unwrap();
        let omega = solve_lyapunov_skew(&a, &w).unwrap();
        let om = omega.matrix();
        assert_eq!(om + om.transpose(), DMatrix::zeros(k, k));
        let res = om * a.matrix() + a.matrix() * om - w.matrix();
        assert!(res.norm() <= 1e-10 * w.matrix().norm().max(f64::MIN_POSITIVE));
    }
}

#[test]
fn lyapunov_agrees_with_kronecker_oracle() {
    let mut rng = rng_from_seed(12);
    for k in 1..=8 {
        let a = random_spd(&mut rng, k);
        let c = random_symmetric(&mut rng, k);
        let oracle = lyapunov_by_kronecker(&a, &c);
        let s = solve_lyapunov_spd(&SpdMatrix::new(a).unwrap(), &SymMatrix::from_square(&c).unwrap()).unwrap();
        assert_relative_eq!(s.matrix(), &oracle, epsilon = 1e-10, max_relative = 1e-10);
    }
}

#[test]
fn skew_lyapunov_identity_gives_half() {
    let mut rng = rng_from_seed(13);
    let c = SkewMatrix::from_square(&random_skew(&mut rng, 5)).unwrap();
    let omega = solve_lyapunov_skew(&SpdMatrix::identity(5), &c).unwrap();
    assert_relative_eq!(omega.matrix(), &(c.matrix() * 0.5), epsilon = 1e-15);
}

#[test]
fn complement_of_coordinate_frame() {
    let mut x = DMatrix::zeros(6, 2);
    x[(0, 0)] = 1.0;
    x[(1, 1)] = 1.0;
    let perp = orth_complement(&FullRankMatrix::new(x.clone()).unwrap());
    assert_eq!(perp.shape(), (6, 4));
    assert!((x.transpose() * &perp).norm() <= 1e-12);
    assert!((perp.transpose() * &perp - DMatrix::identity(4, 4)).norm() <= 1e-12);
    assert!(perp.rows(0, 2).norm() <= 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sym_plus_skew_reconstructs(seed in any::<u64>(), k in 1usize..12) {
        let mut rng = rng_from_seed(seed);
        let a = gaussian_matrix(&mut rng, k, k);
        let back = sym(&a).unwrap().into_inner() + skew(&a).unwrap().into_inner();
        let scale = a.amax();
        prop_assert!((back - &a).amax() <= 2.0 * f64::EPSILON * scale);
    }

    #[test]
    fn sym_is_orthogonal_to_skew(seed in any::<u64>(), k in 1usize..12) {
        let mut rng = rng_from_seed(seed);
        let a = gaussian_matrix(&mut rng, k, k);
        let b = gaussian_matrix(&mut rng, k, k);
        let ip = frobenius(sym(&a).unwrap().matrix(), skew(&b).unwrap().matrix());
        prop_assert!(ip.abs() <= 1e-12 * a.norm() * b.norm());
    }

    #[test]
    fn spd_sqrt_squares_back(seed in any::<u64>(), k in 1usize..12) {
        let mut rng = rng_from_seed(seed);
        let m = SpdMatrix::new(random_spd(&mut rng, k)).unwrap();
        let r = spd_sqrt(&m);
        let rm = r.matrix();
        prop_assert_eq!(rm, &rm.transpose());
        prop_assert!((rm * rm - m.matrix()).norm() <= 1e-10 * m.matrix().norm());
    }

    #[test]
    fn lyapunov_round_trips(seed in any::<u64>(), k in 1usize..15) {
        let mut rng = rng_from_seed(seed);
        let a = SpdMatrix::new(random_spd(&mut rng, k)).unwrap();
        let s0 = random_symmetric(&mut rng, k);
        let c = a.matrix() * &s0 + &s0 * a.matrix();
        let s = solve_lyapunov_spd(&a, &SymMatrix::from_square(&c).unwrap()).unwrap();
        prop_assert!((s.matrix() - &s0).norm() <= 1e-9 * s0.norm().max(1.0));

        let w0 = random_skew(&mut rng, k);
        let c = &w0 * a.matrix() + a.matrix() * &w0;
        let w = solve_lyapunov_skew(&a, &SkewMatrix::from_square(&c).unwrap()).unwrap();
        prop_assert!((w.matrix() - &w0).norm() <= 1e-9 * w0.norm().max(1.0));
    }

    #[test]
    fn complement_satisfies_defining_identities(seed in any::<u64>(), n in 2usize..14, p in 1usize..8) {
        prop_assume!(p < n);
        let mut rng = rng_from_seed(seed);
        let x = FullRankMatrix::new(gaussian_matrix(&mut rng, n, p)).unwrap();
        let perp = orth_complement(&x);
        prop_assert_eq!(perp.shape(), (n, n - p));
        let scale = x.matrix().norm();
        prop_assert!((x.matrix().transpose() * &perp).norm() <= 1e-12 * scale.max(1.0));
        prop_assert!((perp.transpose() * &perp - DMatrix::identity(n - p, n - p)).norm() <= 1e-12);
    }
}
