use std::f64::consts::{FRAC_PI_4, PI};

use delaycert::dde::{DelaySignal, PredictorLoop, RunSettings, TransitionSignal};
use delaycert::linalg::{controllability_rank, place_poles, RealMatrix};
use delaycert::lmi::decay_rate_eta;
use delaycert::pde::*;
use nalgebra::DVector;
use num_complex::Complex64;

fn cfg() -> ReactionDiffusionConfig {
    ReactionDiffusionConfig::new(0.5, 0.5, 2.0 * PI).unwrap()
}

fn placed_gain(cfg: &ReactionDiffusionConfig) -> RealMatrix {
    let (a, b) = truncated_matrices(cfg, 3);
    let targets = [-0.75, -1.0, -1.25].map(|r| Complex64::new(r, 0.0));
    place_poles(&a, &b, &targets).unwrap()
}

fn delay() -> DelaySignal {
    DelaySignal::sinusoid(1.0, 0.25, 3.0 * PI, FRAC_PI_4)
}

fn x0_profile(l: f64) -> impl Fn(f64) -> f64 {
    move |x| -x * (2.0 * l / 3.0 - x) * (l - x)
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` above `s` (Sturm count).
fn count_above(d: &[f64], e: f64, s: f64) -> usize {
    let mut count = 0;
    let mut q = d[0] - s;
    if q > 0.0 {
        count += 1;
    }
    for &di in &d[1..] {
        let prev = if q == 0.0 { 1e-300 } else { q };
        q = di - s - e * e / prev;
        if q > 0.0 {
            count += 1;
        }
    }
    count
}

#[test]
fn eigenvalues_match_finite_difference_operator() {
    let cfg = cfg();
    let points = 2000;
    let h = cfg.length / (points + 1) as f64;
    let diag = vec![cfg.c - 2.0 * cfg.a / (h * h); points];
    let off = cfg.a / (h * h);
    for n in 1..=4 {
        // n-th largest eigenvalue by bisection on the Sturm count
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if count_above(&diag, off, mid) >= n {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let exact = eigenvalue(&cfg, n);
        assert!((lo - exact).abs() <= 0.005 * exact.abs() + 1e-5, "n = {n}: {lo} vs {exact}");
    }
}

#[test]
fn truncation_is_controllable_and_gain_places_the_spectrum() {
    let cfg = cfg();
    let (a, b) = truncated_matrices(&cfg, 3);
    assert_eq!(controllability_rank(&a, &b).unwrap(), 3);
    let k = placed_gain(&cfg);
    let mut eigs: Vec<f64> = (&a + &b * &k).complex_eigenvalues().iter().map(|z| z.re).collect();
    eigs.sort_by(f64::total_cmp);
    for (got, want) in eigs.iter().zip([-1.25, -1.0, -0.75]) {
        assert!((got - want).abs() < 1e-6);
    }
}

#[test]
fn projection_converges_under_refinement() {
    let cfg = cfg();
    let f = x0_profile(cfg.length);
    let coarse = project_initial(&cfg, &f, 10);
    let fine = project_initial_with(&cfg, &f, 10, 20_001);
    let scale = fine.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (c, r) in coarse.iter().zip(&fine) {
        assert!((c - r).abs() <= 1e-8 * scale, "{c} vs {r}");
    }
}

#[test]
fn zero_initial_profile_gives_a_zero_run() {
    let cfg = cfg();
    let k = placed_gain(&cfg);
    let phi = TransitionSignal::new(0.5).unwrap();
    let tr = simulate_pde_closed_loop(&cfg, 3, 10, &k, 1.0, &delay(), &phi, |_| 0.0, &RunSettings::new(5.0, 0.01), 51)
        .unwrap();
    assert!(tr.coeffs.iter().chain(&tr.u).chain(&tr.u_delayed).all(|v| v.iter().all(|&e| e == 0.0)));
    assert!(tr.field.unwrap().values.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn a_single_stable_mode_evolves_alone_without_input() {
    let stable = ReactionDiffusionConfig::new(0.5, 0.1, 2.0 * PI).unwrap();
    let k = RealMatrix::zeros(2, 1);
    let phi = TransitionSignal::new(0.5).unwrap();
    let tr = simulate_pde_closed_loop(
        &stable,
        1,
        10,
        &k,
        1.0,
        &DelaySignal::constant(1.0),
        &phi,
        |x| eigenfunction(&stable, 5, x),
        &RunSettings::new(4.0, 0.01),
        21,
    )
    .unwrap();
    let l5 = eigenvalue(&stable, 5);
    let c5 = tr.coeffs[0][4];
    assert!((c5 - 1.0).abs() < 1e-10);
    // RK4 on ċ = λc multiplies by the degree-4 Taylor polynomial of e^{hλ} each step
    let z = 0.01 * l5;
    let amp = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
    for (j, (t, c)) in tr.times.iter().zip(&tr.coeffs).enumerate() {
        assert!((c[4] - c5 * amp.powi(j as i32)).abs() < 1e-13);
        assert!((c[4] - c5 * (l5 * t).exp()).abs() < 1e-7);
        for (n, v) in c.iter().enumerate() {
            if n != 4 {
                assert!(v.abs() < 1e-9);
            }
        }
    }
    assert!(tr.u.iter().all(|u| u.iter().all(|&v| v == 0.0)));
}

#[test]
fn truncated_run_reproduces_the_lti_loop() {
    let cfg = cfg();
    let k = placed_gain(&cfg);
    let phi = TransitionSignal::new(0.5).unwrap();
    let settings = RunSettings::new(8.0, 0.01);
    let modal = simulate_pde_closed_loop(&cfg, 3, 3, &k, 1.0, &delay(), &phi, x0_profile(cfg.length), &settings, 11)
        .unwrap();
    let (a, b) = truncated_matrices(&cfg, 3);
    let c0 = DVector::from_vec(project_initial(&cfg, x0_profile(cfg.length), 3));
    let lti = PredictorLoop::lti(&a, &b, &k, 1.0).unwrap().run(&delay(), &phi, &c0, &settings).unwrap();
    assert_eq!(modal.len(), lti.len());
    for i in 0..lti.len() {
        assert!((&modal.coeffs[i] - &lti.x[i]).amax() <= 1e-12 * (1.0 + lti.x[i].amax()));
        assert!((&modal.u_delayed[i] - &lti.u_delayed[i]).amax() <= 1e-12 * (1.0 + lti.u[i].amax()));
    }
}

#[test]
fn full_setup_decays_with_parseval_and_residual_rates() {
    let cfg = cfg();
    let k = placed_gain(&cfg);
    let phi = TransitionSignal::new(0.5).unwrap();
    let tr = simulate_pde_closed_loop(
        &cfg,
        3,
        DEFAULT_SIM_MODES,
        &k,
        1.0,
        &delay(),
        &phi,
        x0_profile(cfg.length),
        &RunSettings::new(40.0, 0.01),
        DEFAULT_FIELD_POINTS,
    )
    .unwrap();
    let (rate, _) = tr.fit_decay(10.0, 40.0).unwrap();
    assert!(rate >= 0.19, "{rate}");

    let field = tr.field.as_ref().unwrap();
    for i in (0..tr.len()).step_by(400) {
        let modal = tr.coeffs[i].norm();
        if modal > 1e-300 {
            let rel = (field.l2_norm(i) - modal).abs() / modal;
            assert!(rel < 0.02, "t = {}: {rel}", tr.times[i]);
        }
    }

    let eta = decay_rate_eta(0.2, spectral_gap(&cfg, 3).unwrap());
    for n in 4..=DEFAULT_SIM_MODES {
        let (r, _) = tr.fit_mode_decay(n, 10.0, 40.0).unwrap();
        let bound = 0.9 * (-eigenvalue(&cfg, n)).min(eta);
        assert!(r >= bound, "mode {n}: {r} < {bound}");
    }
}

#[test]
fn certification_is_monotone_in_kappa_and_needs_a_stabilising_gain() {
    let cfg = cfg();
    let k = placed_gain(&cfg);
    let at_02 = certify_pde(&cfg, 3, &k, 1.0, 0.2, 1e-3).unwrap().delta;
    let at_0 = certify_pde(&cfg, 3, &k, 1.0, 0.0, 1e-3).unwrap().delta;
    assert!(at_0 >= at_02 && at_02 > 0.0, "{at_0} vs {at_02}");
    assert!(certify_pde(&cfg, 3, &RealMatrix::zeros(2, 3), 1.0, 0.2, 1e-3).is_err());
}

#[test]
fn modal_and_field_csv_columns() {
    let cfg = cfg();
    let k = placed_gain(&cfg);
    let phi = TransitionSignal::new(0.5).unwrap();
    let tr = simulate_pde_closed_loop(&cfg, 3, 4, &k, 1.0, &delay(), &phi, x0_profile(cfg.length), &RunSettings::new(0.1, 0.01), 3)
        .unwrap();
    let mut modal = Vec::new();
    tr.write_modal_csv(&mut modal).unwrap();
    let modal = String::from_utf8(modal).unwrap();
    assert_eq!(modal.lines().next().unwrap(), "t,c_1,c_2,c_3,c_4,utilde_1,utilde_2");
    assert_eq!(modal.lines().count(), 12);
    let mut field = Vec::new();
    tr.write_field_csv(&mut field).unwrap();
    let field = String::from_utf8(field).unwrap();
    assert_eq!(field.lines().next().unwrap(), "t,x,y");
    assert_eq!(field.lines().count(), 1 + 11 * 3);
}

#[test]
fn complex_spectral_system_certifies_through_realification() {
    // two copies of the first modes rotated into a complex basis
    let cfg = cfg();
    let sys = cfg.spectral_system(3, 3).unwrap();
    let rot = Complex64::from_polar(1.0, 0.7);
    let rotated = SpectralSystemFixture::rotate(&sys, rot);
    let k = placed_gain(&cfg);
    let kc = k.map(|v| Complex64::new(v, 0.0)) / rot;
    let real = sys.certify(&k.map(|v| Complex64::new(v, 0.0)), 1.0, 0.2, 1e-3).unwrap().delta;
    let complex = rotated.certify(&kc, 1.0, 0.2, 1e-3).unwrap().delta;
    assert!((real - complex).abs() <= 2e-3, "{real} vs {complex}");
}

struct SpectralSystemFixture;

impl SpectralSystemFixture {
    /// Same dynamics with every input coefficient multiplied by `r`.
    fn rotate(sys: &SpectralSystem, r: Complex64) -> SpectralSystem {
        let coeffs = sys
            .input_coeffs
            .iter()
            .map(|row| row.iter().map(|b| b * r).collect())
            .collect();
        SpectralSystem::new(sys.eigenvalues.clone(), coeffs, sys.n0, sys.n_sim, sys.riesz_bounds).unwrap()
    }
}
