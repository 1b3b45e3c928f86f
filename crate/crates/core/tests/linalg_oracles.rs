use delaycert::linalg::*;
use nalgebra::{dmatrix, DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{rngs::StdRng, Rng, SeedableRng};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_matrix(rng: &mut StdRng, n: usize, scale: f64) -> RealMatrix {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..scale))
}

fn random_hurwitz(rng: &mut StdRng, n: usize) -> RealMatrix {
    let a = random_matrix(rng, n, 1.0);
    let shift = spectral_abscissa(&a).unwrap() + rng.gen_range(0.2..1.5);
    a - RealMatrix::identity(n, n) * shift
}

#[test]
fn exp_times_inverse_exp_is_identity() {
    let a = dmatrix![0.0, 1.0; -1.0, 1.0];
    let prod = mat_exp(&a, 1.0).unwrap() * mat_exp(&a, -1.0).unwrap();
    assert!((prod - RealMatrix::identity(2, 2)).amax() < 1e-10);
}

#[test]
fn exp_of_symmetric_matches_eigendecomposition() {
    // ‖A‖ up to 50 as in the accuracy contract
    let mut rng = StdRng::seed_from_u64(11);
    for &scale in &[0.1, 1.0, 10.0, 25.0] {
        for n in 1..=6 {
            let r = random_matrix(&mut rng, n, scale);
            let s = (&r + r.transpose()) * 0.5;
            let eig = SymmetricEigen::new(s.clone());
            let expect = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::exp))
                * eig.eigenvectors.transpose();
            let got = mat_exp(&s, 1.0).unwrap();
            let rel = (&got - &expect).amax() / expect.amax();
            assert!(rel < 1e-12, "scale {scale}, n {n}: {rel:e}");
        }
    }
}

#[test]
fn exp_of_rotation_generator() {
    let w = 2.5;
    let a = dmatrix![0.0, -w; w, 0.0];
    let e = mat_exp(&a, 1.3).unwrap();
    let (s, co) = (w * 1.3f64).sin_cos();
    let expect = dmatrix![co, -s; s, co];
    assert!((e - expect).amax() < 1e-14);
}

#[test]
fn exp_of_complex_scalar() {
    let a = ComplexMatrix::from_element(1, 1, c(-0.5, 2.0));
    let e = mat_exp_complex(&a, 0.7).unwrap();
    let expect = (c(-0.5, 2.0) * 0.7).exp();
    assert!((e[(0, 0)] - expect).norm() < 1e-14);
}

proptest! {
    #[test]
    fn exp_semigroup(entries in prop::collection::vec(-2.0f64..2.0, 9), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let a = DMatrix::from_vec(3, 3, entries);
        let lhs = mat_exp(&a, s + t).unwrap();
        let rhs = mat_exp(&a, s).unwrap() * mat_exp(&a, t).unwrap();
        prop_assert!((&lhs - &rhs).amax() <= 1e-12 * lhs.amax().max(1.0));
    }

    #[test]
    fn realify_is_a_homomorphism(
        re in prop::collection::vec(-3.0f64..3.0, 18),
        im in prop::collection::vec(-3.0f64..3.0, 18),
    ) {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| c(re[3 * i + j], im[3 * i + j]));
        let n = ComplexMatrix::from_fn(3, 3, |i, j| c(re[9 + 3 * i + j], im[9 + 3 * i + j]));
        let prod = realify(&(&m * &n)) - realify(&m) * realify(&n);
        prop_assert!(prod.amax() < 1e-12);
        let sum = realify(&(&m + &n)) - (realify(&m) + realify(&n));
        prop_assert!(sum.amax() == 0.0);
    }

    #[test]
    fn realified_spectrum_is_spectrum_and_conjugate(
        re in prop::collection::vec(-3.0f64..3.0, 9),
        im in prop::collection::vec(-3.0f64..3.0, 9),
    ) {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| c(re[3 * i + j], im[3 * i + j]));
        let mut expect = spectrum_complex(&m).unwrap().0;
        let conj: Vec<Complex64> = expect.iter().map(|z| z.conj()).collect();
        expect.extend(conj);
        let got = spectrum(&realify(&m)).unwrap().0;
        prop_assert!(spectrum_mismatch(&got, &expect) < 1e-7);
    }

    #[test]
    fn lyapunov_residual(seed in 0u64..10_000, n in 1usize..6) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = random_hurwitz(&mut rng, n);
        let p = solve_lyapunov_identity(&m).unwrap();
        let res = m.transpose() * &p + &p * &m + RealMatrix::identity(n, n);
        prop_assert!(res.amax() < 1e-9 * (1.0 + p.amax()));
        prop_assert!(max_asymmetry(&p) == 0.0);
    }
}

#[test]
fn lyapunov_known_matrix() {
    let m = dmatrix![0.0, 1.0; -1.0, -2.0];
    let p = solve_lyapunov_identity(&m).unwrap();
    let res = m.transpose() * &p + &p * &m + RealMatrix::identity(2, 2);
    assert!(res.amax() < 1e-9);
    assert!(matches!(
        solve_lyapunov_identity(&dmatrix![0.0, 1.0; 0.0, 0.0]),
        Err(delaycert::Error::NotHurwitz { .. }) | Err(delaycert::Error::Singular(_))
    ));
}

#[test]
fn norm2_dominates_random_directions_and_matches_power_iteration() {
    let mut rng = StdRng::seed_from_u64(5);
    let a = random_matrix(&mut rng, 5, 1.0);
    let norm = induced_norm2(&a);
    let mut best: f64 = 0.0;
    for _ in 0..10_000 {
        let v: DVector<f64> = DVector::from_fn(5, |_, _| rng.gen_range(-1.0..1.0));
        let v = &v / v.norm();
        best = best.max((&a * v).norm());
    }
    assert!(best <= norm * (1.0 + 1e-12));
    assert!(best >= 0.9 * norm);
    // power iteration on AᵀA
    let ata = a.transpose() * &a;
    let mut v = DVector::from_element(5, 1.0);
    for _ in 0..2000 {
        v = &ata * &v;
        v /= v.norm();
    }
    let power = (&a * &v).norm();
    assert!((power - norm).abs() <= 1e-6 * norm);
}

#[test]
fn extremal_eigs_match_full_spectrum() {
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..20 {
        let r = random_matrix(&mut rng, 6, 2.0);
        let s = (&r + r.transpose()) * 0.5;
        let (lo, hi) = symmetric_extremal_eigs(&s).unwrap();
        let all = SymmetricEigen::new(s).eigenvalues;
        assert!((lo - all.min()).abs() < 1e-8);
        assert!((hi - all.max()).abs() < 1e-8);
    }
    assert!(symmetric_extremal_eigs(&dmatrix![1.0, 2.0; 0.0, 1.0]).is_err());
}

#[test]
fn abscissa_of_closed_loop_examples() {
    let acl = dmatrix![0.0, 1.0; -2.0, -2.0];
    assert!((spectral_abscissa(&acl).unwrap() + 1.0).abs() < 1e-12);
    assert!(ensure_hurwitz(&dmatrix![0.1, 0.0; 0.0, -1.0]).is_err());
}

#[test]
fn placement_matches_targets_on_random_controllable_pairs() {
    let mut rng = StdRng::seed_from_u64(21);
    let mut placed = 0;
    while placed < 30 {
        let n = rng.gen_range(2..=5);
        let m = rng.gen_range(1..=2);
        let a = random_matrix(&mut rng, n, 1.0);
        let b = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
        if controllability_rank(&a, &b).unwrap() < n {
            continue;
        }
        let mut targets: Vec<Complex64> = Vec::new();
        while targets.len() < n {
            if n - targets.len() >= 2 && rng.gen_bool(0.4) {
                let (re, im) = (rng.gen_range(-3.0..-0.5), rng.gen_range(0.2..1.5));
                targets.push(c(re, im));
                targets.push(c(re, -im));
            } else {
                targets.push(c(rng.gen_range(-3.0..-0.5), 0.0));
            }
        }
        let k = place_poles(&a, &b, &targets).unwrap();
        let got = spectrum(&(&a + &b * &k)).unwrap();
        assert!(spectrum_mismatch(&got.0, &targets) < 1e-6, "{got:?} vs {targets:?}");
        placed += 1;
    }
}

#[test]
fn placement_for_three_mode_truncation() {
    use std::f64::consts::PI;
    let cfg = delaycert::pde::ReactionDiffusionConfig::new(0.5, 0.5, 2.0 * PI).unwrap();
    let (a, b) = delaycert::pde::truncated_matrices(&cfg, 3);
    let targets = [c(-0.75, 0.0), c(-1.0, 0.0), c(-1.25, 0.0)];
    let k = place_poles(&a, &b, &targets).unwrap();
    let got = spectrum(&(&a + &b * &k)).unwrap();
    assert!(spectrum_mismatch(&got.0, &targets) < 1e-6);
    // deterministic
    assert_eq!(k, place_poles(&a, &b, &targets).unwrap());
}

#[test]
fn realified_matrix_where_plain_qr_stalls() {
    let re = [
        [-0.32153628595321671, -0.35941709260543142, -2.83972032905355221],
        [-2.89096066801417706, 2.00098950968613742, 2.22433266267569785],
        [1.04948066315248667, 1.85773221124055965, -1.44430839353838580],
    ];
    let im = [
        [0.31663885613794829, 2.50543050789071131, 1.21562782027747573],
        [-0.14076381698704665, 0.79301674174561976, 2.45436507422985883],
        [-1.67067762234303041, -1.92952610448705197, 1.72585576610638647],
    ];
    let m = ComplexMatrix::from_fn(3, 3, |i, j| c(re[i][j], im[i][j]));
    let mut expect = spectrum_complex(&m).unwrap().0;
    let conj: Vec<Complex64> = expect.iter().map(|z| z.conj()).collect();
    expect.extend(conj);
    let got = spectrum(&realify(&m)).unwrap().0;
    assert!(spectrum_mismatch(&got, &expect) < 1e-9);
}
