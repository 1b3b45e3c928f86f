use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;

use super::{ModalTrajectory, SpectralSystem};
use crate::dde::{DelaySignal, RunSettings, TransitionSignal};
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::lmi::MaxDelta;

pub const DEFAULT_SIM_MODES: usize = 10;
pub const DEFAULT_FIELD_POINTS: usize = 201;
pub const DEFAULT_PROJECTION_POINTS: usize = 2001;

/// `y_t = a y_xx + c y` on `(0, L)`, actuated through Dirichlet values at `x = 0` and `x = L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReactionDiffusionConfig {
    /// Diffusivity, length²/s.
    pub a: f64,
    /// Reaction rate, 1/s.
    pub c: f64,
    /// Domain length.
    pub length: f64,
}

impl ReactionDiffusionConfig {
    pub fn new(a: f64, c: f64, length: f64) -> Result<Self> {
        let cfg = Self { a, c, length };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("a", self.a), ("c", self.c), ("L", self.length)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// The spectral description with `max(n_sim, n0 + 1)` listed modes.
    pub fn spectral_system(&self, n0: usize, n_sim: usize) -> Result<SpectralSystem> {
        self.validate()?;
        let count = n_sim.max(n0 + 1);
        let eigs = (1..=count)
            .map(|n| Complex64::new(eigenvalue(self, n), 0.0))
            .collect();
        let coeffs = (1..=count)
            .map(|n| {
                let (b1, b2) = input_coefficients(self, n);
                vec![Complex64::new(b1, 0.0), Complex64::new(b2, 0.0)]
            })
            .collect();
        SpectralSystem::new(eigs, coeffs, n0, n_sim, (1.0, 1.0))
    }
}

/// `λ_n = c − a n²π²/L²`.
pub fn eigenvalue(cfg: &ReactionDiffusionConfig, n: usize) -> f64 {
    let k = n as f64 * PI / cfg.length;
    cfg.c - cfg.a * k * k
}

/// `(b_{n,1}, b_{n,2}) = a nπ √(2/L³) · (1, (−1)^{n+1})`.
pub fn input_coefficients(cfg: &ReactionDiffusionConfig, n: usize) -> (f64, f64) {
    let b1 = cfg.a * n as f64 * PI * (2.0 / cfg.length.powi(3)).sqrt();
    let b2 = if n % 2 == 1 { b1 } else { -b1 };
    (b1, b2)
}

/// `φ_n(x) = √(2/L) sin(nπx/L)`.
pub fn eigenfunction(cfg: &ReactionDiffusionConfig, n: usize, x: f64) -> f64 {
    (2.0 / cfg.length).sqrt() * (n as f64 * PI * x / cfg.length).sin()
}

/// `(diag(λ_1..λ_{N₀}), (b_{n,k}))`.
pub fn truncated_matrices(cfg: &ReactionDiffusionConfig, n0: usize) -> (RealMatrix, RealMatrix) {
    let a = RealMatrix::from_fn(n0, n0, |i, j| if i == j { eigenvalue(cfg, i + 1) } else { 0.0 });
    let b = RealMatrix::from_fn(n0, 2, |i, k| {
        let (b1, b2) = input_coefficients(cfg, i + 1);
        if k == 0 {
            b1
        } else {
            b2
        }
    });
    (a, b)
}

/// `α = −λ_{N₀+1}`; errors when that mode is not stable.
pub fn spectral_gap(cfg: &ReactionDiffusionConfig, n0: usize) -> Result<f64> {
    let next = eigenvalue(cfg, n0 + 1);
    if !(next < 0.0) {
        return Err(Error::Assumption(format!(
            "first residual eigenvalue lambda_{} = {next} is not negative",
            n0 + 1
        )));
    }
    Ok(-next)
}

/// `c_n = ∫₀^L X0(x) φ_n(x) dx`, `n = 1..=count`, by composite Simpson on
/// [`DEFAULT_PROJECTION_POINTS`] nodes.
pub fn project_initial(
    cfg: &ReactionDiffusionConfig,
    x0: impl Fn(f64) -> f64,
    count: usize,
) -> Vec<f64> {
    project_initial_with(cfg, x0, count, DEFAULT_PROJECTION_POINTS)
}

/// As [`project_initial`] with `points` nodes (rounded up to an odd count ≥ 3).
pub fn project_initial_with(
    cfg: &ReactionDiffusionConfig,
    x0: impl Fn(f64) -> f64,
    count: usize,
    points: usize,
) -> Vec<f64> {
    let points = points.max(3) | 1;
    let intervals = points - 1;
    let h = cfg.length / intervals as f64;
    let samples: Vec<f64> = (0..points).map(|i| x0(i as f64 * h)).collect();
    (1..=count)
        .map(|n| {
            let mut acc = 0.0;
            for (i, &s) in samples.iter().enumerate() {
                let w = if i == 0 || i == intervals {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                acc += w * s * eigenfunction(cfg, n, i as f64 * h);
            }
            acc * h / 3.0
        })
        .collect()
}

/// Field `y(t, x) = Σ c_n(t) φ_n(x)` on a uniform x-grid.
#[derive(Clone, Debug)]
pub struct FieldSamples {
    pub xs: Vec<f64>,
    /// `values[i][j] = y(times[i], xs[j])`.
    pub values: Vec<Vec<f64>>,
}

impl FieldSamples {
    pub fn reconstruct(
        cfg: &ReactionDiffusionConfig,
        coeffs: &[DVector<f64>],
        points: usize,
    ) -> Self {
        let points = points.max(2);
        let xs: Vec<f64> = (0..points)
            .map(|j| cfg.length * j as f64 / (points - 1) as f64)
            .collect();
        let modes = coeffs.first().map_or(0, |c| c.len());
        let basis: Vec<Vec<f64>> = (1..=modes)
            .map(|n| xs.iter().map(|&x| eigenfunction(cfg, n, x)).collect())
            .collect();
        let values = coeffs
            .iter()
            .map(|c| {
                (0..points)
                    .map(|j| (0..modes).map(|n| c[n] * basis[n][j]).sum())
                    .collect()
            })
            .collect();
        Self { xs, values }
    }

    /// `‖y(t_i, ·)‖_{L²}` by the trapezoid rule on the grid.
    pub fn l2_norm(&self, i: usize) -> f64 {
        let row = &self.values[i];
        let mut acc = 0.0;
        for j in 1..self.xs.len() {
            let dx = self.xs[j] - self.xs[j - 1];
            acc += 0.5 * dx * (row[j - 1] * row[j - 1] + row[j] * row[j]);
        }
        acc.sqrt()
    }
}

/// Closed-loop modal run for the reaction–diffusion family with the field
/// reconstructed on `field_points` uniform nodes.
#[allow(clippy::too_many_arguments)]
pub fn simulate_pde_closed_loop(
    cfg: &ReactionDiffusionConfig,
    n0: usize,
    n_sim: usize,
    k: &RealMatrix,
    d0: f64,
    delay: &DelaySignal,
    phi: &TransitionSignal,
    x0: impl Fn(f64) -> f64,
    settings: &RunSettings,
    field_points: usize,
) -> Result<ModalTrajectory> {
    let system = cfg.spectral_system(n0, n_sim)?;
    let c0 = DVector::from_vec(project_initial(cfg, x0, n_sim));
    let mut traj = system.simulate(k, d0, delay, phi, &c0, settings)?;
    traj.field = Some(FieldSamples::reconstruct(cfg, &traj.coeffs, field_points));
    Ok(traj)
}

/// Largest δ certified for `K` on the `N₀`-mode truncation.
pub fn certify_pde(
    cfg: &ReactionDiffusionConfig,
    n0: usize,
    k: &RealMatrix,
    d0: f64,
    kappa: f64,
    tol: f64,
) -> Result<MaxDelta> {
    let system = cfg.spectral_system(n0, n0)?;
    system.certify(&k.map(|v| Complex64::new(v, 0.0)), d0, kappa, tol)
}
