//! Brute-force feasibility for scalar (`n = 1`) problems.
//!
//! With `P₁ = 1` fixed by homogeneity, `(P₂, P₃)` range over a uniform grid
//! and `Q` over a logarithmic grid; `Θ ≺ 0` is tested through the leading
//! principal minors of `−Θ`. Used to cross-check the SDP path.

use super::{check_feasibility, CertificationProblem};
use crate::error::Result;

#[derive(Clone, Debug)]
pub struct OracleGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub p_step: f64,
    pub q_values: Vec<f64>,
}

impl Default for OracleGrid {
    fn default() -> Self {
        let q_values = (0..=60).map(|i| 10f64.powf(-5.0 + 6.0 * i as f64 / 60.0)).collect();
        Self {
            p_min: -10.0,
            p_max: 10.0,
            p_step: 0.1,
            q_values,
        }
    }
}

impl OracleGrid {
    fn p_values(&self) -> Vec<f64> {
        let count = ((self.p_max - self.p_min) / self.p_step).round() as usize;
        (0..=count)
            .map(|i| self.p_min + i as f64 * self.p_step)
            .collect()
    }
}

fn negative_definite(t: [[f64; 3]; 3]) -> bool {
    // minors of −Θ
    let d1 = -t[0][0];
    if d1 <= 0.0 {
        return false;
    }
    let d2 = t[0][0] * t[1][1] - t[0][1] * t[1][0];
    if d2 <= 0.0 {
        return false;
    }
    let det = t[0][0] * (t[1][1] * t[2][2] - t[1][2] * t[2][1])
        - t[0][1] * (t[1][0] * t[2][2] - t[1][2] * t[2][0])
        + t[0][2] * (t[1][0] * t[2][1] - t[1][1] * t[2][0]);
    -det > 0.0
}

/// Whether some grid point `(1, P₂, P₃, Q)` makes `Θ(δ, κ)` negative definite.
pub fn brute_force_feasible(
    m: f64,
    n: f64,
    d0: f64,
    kappa: f64,
    delta: f64,
    grid: &OracleGrid,
) -> bool {
    let decay = (-2.0 * kappa * d0).exp();
    let ps = grid.p_values();
    for &p2 in &ps {
        let t11 = 2.0 * kappa + 2.0 * m * p2;
        if t11 >= 0.0 {
            continue;
        }
        for &p3 in &ps {
            let t12 = 1.0 - p2 + m * p3;
            let t13 = delta * p2 * n;
            let t23 = delta * p3 * n;
            for &q in &grid.q_values {
                let t22 = -2.0 * p3 + 2.0 * delta * q;
                if t22 >= 0.0 {
                    break;
                }
                let t33 = -delta * decay * q;
                if negative_definite([[t11, t12, t13], [t12, t22, t23], [t13, t23, t33]]) {
                    return true;
                }
            }
        }
    }
    false
}

#[derive(Clone, Debug)]
pub struct OracleComparison {
    pub deltas: Vec<f64>,
    pub kappas: Vec<f64>,
    /// `solver[i][j]` is the SDP verdict at `(deltas[i], kappas[j])`.
    pub solver: Vec<Vec<bool>>,
    pub oracle: Vec<Vec<bool>>,
    pub disagreements: usize,
    /// Disagreements with no verdict change within one cell of the point.
    pub disagreements_outside_band: usize,
}

/// Standard `10 × 10` grid: `δ = D₀(i+1)/11`, `κ = |M|·j/10`.
pub fn default_grid(m: f64, d0: f64) -> (Vec<f64>, Vec<f64>) {
    let deltas = (0..10).map(|i| d0 * (i + 1) as f64 / 11.0).collect();
    let kappas = (0..10).map(|j| m.abs() * j as f64 / 10.0).collect();
    (deltas, kappas)
}

pub fn compare_scalar(
    m: f64,
    n: f64,
    d0: f64,
    deltas: &[f64],
    kappas: &[f64],
    grid: &OracleGrid,
) -> Result<OracleComparison> {
    let mut solver = vec![vec![false; kappas.len()]; deltas.len()];
    let mut oracle = solver.clone();
    for (i, &delta) in deltas.iter().enumerate() {
        for (j, &kappa) in kappas.iter().enumerate() {
            let problem = CertificationProblem::new(
                nalgebra::dmatrix![m],
                nalgebra::dmatrix![n],
                d0,
                kappa,
            )?;
            solver[i][j] = check_feasibility(&problem, delta)?.is_feasible();
            oracle[i][j] = brute_force_feasible(m, n, d0, kappa, delta, grid);
        }
    }
    let mut disagreements = 0;
    let mut outside = 0;
    for i in 0..deltas.len() {
        for j in 0..kappas.len() {
            if solver[i][j] == oracle[i][j] {
                continue;
            }
            disagreements += 1;
            let mut near_boundary = false;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= deltas.len() as i64 || jj >= kappas.len() as i64
                    {
                        continue;
                    }
                    let (ii, jj) = (ii as usize, jj as usize);
                    if oracle[ii][jj] != oracle[i][j] || solver[ii][jj] != solver[i][j] {
                        near_boundary = true;
                    }
                }
            }
            if !near_boundary {
                outside += 1;
            }
        }
    }
    Ok(OracleComparison {
        deltas: deltas.to_vec(),
        kappas: kappas.to_vec(),
        solver,
        oracle,
        disagreements,
        disagreements_outside_band: outside,
    })
}
