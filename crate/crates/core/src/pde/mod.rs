//! Modal truncation of diagonal boundary control systems.
//!
//! A system is described by its eigenvalues `λ_n` and input coefficients
//! `b_{n,k}`: each mode obeys `ċ_n = λ_n c_n + Σ_k b_{n,k} ũ_k(t)`. The predictor
//! is designed on the first `N₀` modes and the remaining simulated modes are
//! driven open loop. [`ReactionDiffusionConfig`] instantiates the family
//! `y_t = a y_xx + c y` on `(0, L)` with Dirichlet boundary inputs at both ends.

mod reaction_diffusion;

pub use reaction_diffusion::{
    certify_pde, eigenfunction, eigenvalue, input_coefficients, project_initial,
    project_initial_with, simulate_pde_closed_loop, spectral_gap, truncated_matrices,
    FieldSamples, ReactionDiffusionConfig, DEFAULT_FIELD_POINTS, DEFAULT_PROJECTION_POINTS,
    DEFAULT_SIM_MODES,
};

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::dde::{fit_log_linear, fmt_num, DelaySignal, PredictorLoop, RunSettings, TransitionSignal};
use crate::error::{Error, Result};
use crate::linalg::{ensure_hurwitz, ComplexMatrix, RealMatrix};
use crate::lmi::{build_problem, build_problem_complex, max_delta, MaxDelta};

/// Spectral data of a diagonal system with `N₀` controlled and `N_sim` simulated modes.
#[derive(Clone, Debug)]
pub struct SpectralSystem {
    /// `λ_1, λ_2, …`; at least `max(N_sim, N₀ + 1)` entries.
    pub eigenvalues: Vec<Complex64>,
    /// Row `n` holds `b_{n,1..m}`; one row per eigenvalue.
    pub input_coeffs: Vec<Vec<Complex64>>,
    pub n0: usize,
    pub n_sim: usize,
    /// `Re λ_n ≤ −alpha` for every listed `n > N₀`.
    pub alpha: f64,
    pub riesz_bounds: (f64, f64),
}

impl SpectralSystem {
    pub fn new(
        eigenvalues: Vec<Complex64>,
        input_coeffs: Vec<Vec<Complex64>>,
        n0: usize,
        n_sim: usize,
        riesz_bounds: (f64, f64),
    ) -> Result<Self> {
        if n0 == 0 || n_sim < n0 {
            return Err(Error::Precondition(format!(
                "need 1 <= N0 <= N_sim, got N0 = {n0}, N_sim = {n_sim}"
            )));
        }
        if eigenvalues.len() < n_sim.max(n0 + 1) {
            return Err(Error::Dimension(format!(
                "{} eigenvalues given, need at least {}",
                eigenvalues.len(),
                n_sim.max(n0 + 1)
            )));
        }
        if input_coeffs.len() != eigenvalues.len() {
            return Err(Error::Dimension("one row of input coefficients per eigenvalue".into()));
        }
        let m = input_coeffs[0].len();
        if m == 0 || input_coeffs.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("input coefficient rows differ in length".into()));
        }
        let (m_r, big_m_r) = riesz_bounds;
        if !(m_r > 0.0 && big_m_r >= m_r) {
            return Err(Error::Precondition("Riesz bounds must satisfy 0 < m_R <= M_R".into()));
        }
        let worst = eigenvalues[n0..]
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        if !(worst < 0.0) {
            return Err(Error::Assumption(format!(
                "residual mode with Re(lambda) = {worst} is not stable"
            )));
        }
        Ok(Self {
            eigenvalues,
            input_coeffs,
            n0,
            n_sim,
            alpha: -worst,
            riesz_bounds,
        })
    }

    pub fn inputs(&self) -> usize {
        self.input_coeffs[0].len()
    }

    pub fn is_real(&self) -> bool {
        self.eigenvalues.iter().all(|l| l.im == 0.0)
            && self.input_coeffs.iter().flatten().all(|b| b.im == 0.0)
    }

    /// `(diag(λ_1..λ_count), (b_{n,k}))`.
    pub fn modal_matrices(&self, count: usize) -> (ComplexMatrix, ComplexMatrix) {
        let m = self.inputs();
        let a = ComplexMatrix::from_fn(count, count, |i, j| {
            if i == j {
                self.eigenvalues[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let b = ComplexMatrix::from_fn(count, m, |i, k| self.input_coeffs[i][k]);
        (a, b)
    }

    fn real_modal_matrices(&self, count: usize) -> Result<(RealMatrix, RealMatrix)> {
        if !self.is_real() {
            return Err(Error::Precondition(
                "modal simulation needs real eigenvalues and input coefficients".into(),
            ));
        }
        let (a, b) = self.modal_matrices(count);
        Ok((a.map(|v| v.re), b.map(|v| v.re)))
    }

    /// Largest δ certified for `K` on the `N₀`-mode truncation, realified when complex.
    pub fn certify(&self, k: &ComplexMatrix, d0: f64, kappa: f64, tol: f64) -> Result<MaxDelta> {
        let (a, b) = self.modal_matrices(self.n0);
        let problem = if self.is_real() && k.iter().all(|v| v.im == 0.0) {
            build_problem(
                &a.map(|v| v.re),
                &b.map(|v| v.re),
                &k.map(|v| v.re),
                d0,
                kappa,
            )?
        } else {
            build_problem_complex(&a, &b, k, d0, kappa)?
        };
        max_delta(&problem, tol)
    }

    /// Runs all `N_sim` modes under predictor feedback on the first `N₀`.
    #[allow(clippy::too_many_arguments)]
    pub fn simulate(
        &self,
        k: &RealMatrix,
        d0: f64,
        delay: &DelaySignal,
        phi: &TransitionSignal,
        c0: &DVector<f64>,
        settings: &RunSettings,
    ) -> Result<ModalTrajectory> {
        let (a, b) = self.real_modal_matrices(self.n_sim)?;
        if c0.len() != self.n_sim {
            return Err(Error::Dimension(format!(
                "{} initial coefficients for {} simulated modes",
                c0.len(),
                self.n_sim
            )));
        }
        let design_a = a.view((0, 0), (self.n0, self.n0)).into_owned();
        let design_b = b.rows(0, self.n0).into_owned();
        if k.shape() != (self.inputs(), self.n0) {
            return Err(Error::Dimension(format!(
                "gain is {:?}, expected {}x{}",
                k.shape(),
                self.inputs(),
                self.n0
            )));
        }
        ensure_hurwitz(&(design_a + design_b * k))?;
        let run = PredictorLoop::truncated(&a, &b, self.n0, k, d0)?.run(delay, phi, c0, settings)?;
        Ok(ModalTrajectory {
            n0: self.n0,
            times: run.times,
            coeffs: run.x,
            u: run.u,
            u_delayed: run.u_delayed,
            field: None,
        })
    }
}

/// Modal run: coefficients `c_n(t)`, input `u(t)`, delayed input `ũ(t) = u(t − D(t))`.
#[derive(Clone, Debug)]
pub struct ModalTrajectory {
    pub n0: usize,
    pub times: Vec<f64>,
    pub coeffs: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub u_delayed: Vec<DVector<f64>>,
    pub field: Option<FieldSamples>,
}

impl ModalTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `Y(t) = (c_1, …, c_{N₀})`.
    pub fn controlled(&self, i: usize) -> DVector<f64> {
        self.coeffs[i].rows(0, self.n0).into_owned()
    }

    /// Decay rate of `‖Y(t)‖ + ‖u(t)‖` over `[t_start, t_end]`.
    pub fn fit_decay(&self, t_start: f64, t_end: f64) -> Result<(f64, f64)> {
        let (ts, vs): (Vec<f64>, Vec<f64>) = self
            .window(t_start, t_end)
            .map(|i| (self.times[i], self.controlled(i).norm() + self.u[i].norm()))
            .unzip();
        fit_log_linear(&ts, &vs)
    }

    /// Decay rate of `|c_n(t)|` (1-based `n`) over `[t_start, t_end]`.
    pub fn fit_mode_decay(&self, n: usize, t_start: f64, t_end: f64) -> Result<(f64, f64)> {
        if n == 0 || n > self.coeffs.first().map_or(0, |c| c.len()) {
            return Err(Error::Dimension(format!("mode {n} is not simulated")));
        }
        let (ts, vs): (Vec<f64>, Vec<f64>) = self
            .window(t_start, t_end)
            .map(|i| (self.times[i], self.coeffs[i][n - 1].abs()))
            .unzip();
        fit_log_linear(&ts, &vs)
    }

    fn window(&self, t_start: f64, t_end: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.times[i] >= t_start && self.times[i] <= t_end)
    }

    /// Columns `t, c_1..c_N, utilde_1..utilde_m`.
    pub fn write_modal_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.coeffs.first().map_or(0, |c| c.len());
        let m = self.u_delayed.first().map_or(0, |u| u.len());
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("c_{i}")));
        header.extend((1..=m).map(|i| format!("utilde_{i}")));
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut row = vec![fmt_num(self.times[i])];
            row.extend(self.coeffs[i].iter().map(|&v| fmt_num(v)));
            row.extend(self.u_delayed[i].iter().map(|&v| fmt_num(v)));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Long format `t, x, y`; writes only the header when no field was reconstructed.
    pub fn write_field_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,x,y")?;
        if let Some(field) = &self.field {
            for (i, row) in field.values.iter().enumerate() {
                for (x, y) in field.xs.iter().zip(row) {
                    writeln!(w, "{},{},{}", fmt_num(self.times[i]), fmt_num(*x), fmt_num(*y))?;
                }
            }
        }
        Ok(())
    }
}
