//! Small-gain robustness bounds: the closed-form `δ_E` and the envelope-based
//! condition `M‖e^{D₀A}BK‖(e^{‖A_cl‖δ} − e^{−μδ}) < μ`.

use crate::error::{Error, Result};
use crate::linalg::{ensure_hurwitz, induced_norm2, mat_exp, spectral_abscissa, RealMatrix};

pub const ENVELOPE_HORIZON_FACTOR: f64 = 50.0;
pub const ENVELOPE_STEP_FRACTION: f64 = 1e-3;
pub const ENVELOPE_SAFETY: f64 = 1.01;

/// Constants with `‖e^{A_cl t}‖ ≤ m_const·e^{−mu·t}` on the sampling grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallGainEnvelope {
    pub m_const: f64,
    pub mu: f64,
}

fn closed_loop(a: &RealMatrix, b: &RealMatrix, k: &RealMatrix) -> Result<RealMatrix> {
    if a.nrows() != a.ncols() || b.nrows() != a.nrows() || k.shape() != (b.ncols(), a.nrows()) {
        return Err(Error::Dimension(format!(
            "A {:?}, B {:?}, K {:?} are not conformable",
            a.shape(),
            b.shape(),
            k.shape()
        )));
    }
    let acl = a + b * k;
    ensure_hurwitz(&acl)?;
    Ok(acl)
}

/// `δ_E = log(1 + μ_M/‖e^{D₀A}BK‖)/‖A_cl‖`, with `μ_M = −max Re sp(A_cl)`;
/// returns `D₀` when the mismatch norm vanishes.
pub fn delta_e(a: &RealMatrix, b: &RealMatrix, k: &RealMatrix, d0: f64) -> Result<f64> {
    let acl = closed_loop(a, b, k)?;
    let mu_max = -spectral_abscissa(&acl)?;
    let gain = induced_norm2(&(mat_exp(a, d0)? * b * k));
    if gain == 0.0 {
        return Ok(d0);
    }
    Ok((mu_max / gain).ln_1p() / induced_norm2(&acl))
}

/// Samples `‖e^{A_cl t}‖e^{μt}` on `[0, 50/μ_M]` with step `10⁻³` of the horizon
/// and returns the maximum times 1.01.
pub fn estimate_envelope(acl: &RealMatrix, mu: f64) -> Result<SmallGainEnvelope> {
    let mu_max = -spectral_abscissa(acl)?;
    if !(mu > 0.0 && mu < mu_max) {
        return Err(Error::Precondition(format!(
            "mu = {mu} must lie in (0, {mu_max})"
        )));
    }
    let horizon = ENVELOPE_HORIZON_FACTOR / mu_max;
    let h = ENVELOPE_STEP_FRACTION * horizon;
    let steps = (1.0 / ENVELOPE_STEP_FRACTION).round() as usize;
    let step = mat_exp(acl, h)?;
    let mut power = RealMatrix::identity(acl.nrows(), acl.ncols());
    let mut peak: f64 = 1.0;
    for i in 1..=steps {
        power = &step * &power;
        peak = peak.max(induced_norm2(&power) * (mu * i as f64 * h).exp());
    }
    Ok(SmallGainEnvelope {
        m_const: ENVELOPE_SAFETY * peak,
        mu,
    })
}

/// Left side of the small-gain condition; robustness holds when it is `< μ`.
pub fn small_gain_lhs(env: &SmallGainEnvelope, gain: f64, acl_norm: f64, delta: f64) -> f64 {
    env.m_const * gain * ((acl_norm * delta).exp() - (-env.mu * delta).exp())
}

/// `μ_M·j/21` for `j = 1..=20`.
pub fn default_mu_grid(acl: &RealMatrix) -> Result<Vec<f64>> {
    let mu_max = -spectral_abscissa(acl)?;
    Ok((1..=20).map(|j| mu_max * j as f64 / 21.0).collect())
}

/// Best δ over `mu_grid` satisfying the small-gain condition, capped at `D₀`.
pub fn small_gain_delta(
    a: &RealMatrix,
    b: &RealMatrix,
    k: &RealMatrix,
    d0: f64,
    mu_grid: &[f64],
) -> Result<(f64, SmallGainEnvelope)> {
    if mu_grid.is_empty() {
        return Err(Error::Precondition("empty mu grid".into()));
    }
    let acl = closed_loop(a, b, k)?;
    let gain = induced_norm2(&(mat_exp(a, d0)? * b * k));
    let acl_norm = induced_norm2(&acl);
    let mut best: Option<(f64, SmallGainEnvelope)> = None;
    for &mu in mu_grid {
        let env = estimate_envelope(&acl, mu)?;
        let holds = |d: f64| small_gain_lhs(&env, gain, acl_norm, d) < mu;
        let delta = if holds(d0) {
            d0
        } else {
            let (mut lo, mut hi) = (0.0, d0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if holds(mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        if best.map_or(true, |(d, _)| delta > d) {
            best = Some((delta, env));
        }
    }
    Ok(best.expect("grid is non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn normal_matrices_have_unit_envelope() {
        let e = estimate_envelope(&(-RealMatrix::identity(2, 2)), 0.5).unwrap();
        assert!(e.m_const >= 1.0 && e.m_const <= 1.01 + 1e-12);
        let e = estimate_envelope(&dmatrix![-1.0, 0.0; 0.0, -2.0], 0.9).unwrap();
        assert!(e.m_const <= 1.01 + 1e-12);
    }

    #[test]
    fn envelope_rejects_mu_out_of_range() {
        assert!(estimate_envelope(&(-RealMatrix::identity(2, 2)), 1.0).is_err());
        assert!(estimate_envelope(&(-RealMatrix::identity(2, 2)), 0.0).is_err());
    }

    #[test]
    fn zero_gain_caps_at_d0() {
        let a = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let b = dmatrix![1.0; 1.0];
        let k = RealMatrix::zeros(1, 2);
        assert_eq!(delta_e(&a, &b, &k, 1.5).unwrap(), 1.5);
        let grid = default_mu_grid(&a).unwrap();
        assert_eq!(small_gain_delta(&a, &b, &k, 1.5, &grid).unwrap().0, 1.5);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let a = dmatrix![-1.0];
        let b = dmatrix![1.0];
        let k = dmatrix![0.5];
        assert!(small_gain_delta(&a, &b, &k, 1.0, &[]).is_err());
    }
}
