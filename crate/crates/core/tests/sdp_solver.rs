use delaycert::linalg::{symmetric_extremal_eigs, RealMatrix};
use delaycert::sdp::*;
use nalgebra::DMatrix;
use rand::{rngs::StdRng, Rng, SeedableRng};

fn random_symmetric(rng: &mut StdRng, n: usize) -> RealMatrix {
    let r = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&r + r.transpose()) * 0.5
}

fn lambda_max(a0: &RealMatrix, a1: &RealMatrix, x: f64) -> f64 {
    symmetric_extremal_eigs(&(a0 + a1 * x)).unwrap().1
}

/// Golden-section search of the convex `x ↦ λ_max(A₀ + xA₁)` on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

#[test]
fn one_variable_problems_match_line_search() {
    let mut rng = StdRng::seed_from_u64(3);
    for _ in 0..25 {
        let a0 = random_symmetric(&mut rng, 4);
        // indefinite direction keeps the problem bounded
        let mut a1 = random_symmetric(&mut rng, 4);
        a1[(0, 0)] = 2.0;
        a1[(3, 3)] = -2.0;
        let mut map = AffineSymmetricMap::new(1);
        map.push_block(a0.clone(), vec![a1.clone()]).unwrap();
        let out = minimize_max_eig(&map, &SolverOptions::default());
        let oracle = golden_min(|x| lambda_max(&a0, &a1, x), -100.0, 100.0);
        assert!((out.margin - oracle).abs() < 1e-5, "{} vs {oracle}", out.margin);
        assert!((map.max_eigenvalue(&out.witness) - out.margin).abs() < 1e-12);
    }
}

#[test]
fn diagonal_lp_optimum() {
    // min t with x₁ ≤ t, x₂ ≤ t, 1 − x₁ − x₂ ≤ t: optimum t = 1/3
    let e = |i: usize| {
        let mut m = DMatrix::zeros(3, 3);
        m[(i, i)] = 1.0;
        m
    };
    let mut map = AffineSymmetricMap::new(2);
    let mut c = DMatrix::zeros(3, 3);
    c[(2, 2)] = 1.0;
    map.push_block(c, vec![e(0) - e(2), e(1) - e(2)]).unwrap();
    let out = minimize_max_eig(&map, &SolverOptions::default());
    assert!((out.margin - 1.0 / 3.0).abs() < 1e-6);
    assert_eq!(out.status, FeasibilityStatus::Infeasible);
    let x = &out.witness;
    assert!((x[0] - 1.0 / 3.0).abs() < 1e-5 && (x[1] - 1.0 / 3.0).abs() < 1e-5);
}

#[test]
fn status_thresholds() {
    let opts = SolverOptions::default();
    let mut map = AffineSymmetricMap::new(0);
    map.push_block(DMatrix::from_element(1, 1, -1e-9), vec![]).unwrap();
    assert_eq!(minimize_max_eig(&map, &opts).status, FeasibilityStatus::Marginal);
    let mut map = AffineSymmetricMap::new(0);
    map.push_block(DMatrix::from_element(1, 1, -1e-7), vec![]).unwrap();
    assert_eq!(minimize_max_eig(&map, &opts).status, FeasibilityStatus::StrictlyFeasible);
}
