use nalgebra::DVector;

use super::engine::check_grid;
use super::history::HistoryBuffer;
use super::signals::{DelaySignal, TransitionSignal};
use crate::error::{Error, Result};
use crate::linalg::{mat_exp, RealMatrix};

/// Samples of the transformed state on the integration grid.
#[derive(Clone, Debug, Default)]
pub struct ZTrajectory {
    pub times: Vec<f64>,
    pub z: Vec<DVector<f64>>,
}

/// Integrates `ż = (A + φBK)z + e^{D₀A}BK([φz](t − D(t)) − [φz](t − D₀))`
/// directly by RK4. Since `φ` vanishes for `t ≤ 0`, the delayed `φz` terms
/// read zero before the origin and no history seed is needed.
#[allow(clippy::too_many_arguments)]
pub fn simulate_z_ode(
    a: &RealMatrix,
    b: &RealMatrix,
    k: &RealMatrix,
    d0: f64,
    delay: &DelaySignal,
    phi: &TransitionSignal,
    z0: &DVector<f64>,
    t_end: f64,
    h: f64,
) -> Result<ZTrajectory> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || k.shape() != (b.ncols(), n) || z0.len() != n {
        return Err(Error::Dimension("A, B, K and z0 are not conformable".into()));
    }
    delay.validate()?;
    if (delay.nominal() - d0).abs() > 1e-12 * d0 {
        return Err(Error::Precondition("delay signal nominal differs from D0".into()));
    }
    let steps = check_grid(t_end, h, phi.t0, delay)?;
    let bk = b * k;
    let mismatch = mat_exp(a, d0)? * &bk;

    let mut hist = HistoryBuffer::with_capacity(0.0, h, n, steps + 1)?;
    let mut out = ZTrajectory::default();
    let mut z = z0.clone();
    let mut w_now = DVector::zeros(n);
    let mut w_lag = DVector::zeros(n);

    let field = |tau: f64,
                 state: &DVector<f64>,
                 hist: &HistoryBuffer,
                 w_now: &mut DVector<f64>,
                 w_lag: &mut DVector<f64>|
     -> Result<DVector<f64>> {
        hist.value_into(tau - delay.value(tau), w_now)?;
        hist.value_into(tau - d0, w_lag)?;
        let mut dz = a * state + &bk * state * phi.value(tau);
        dz.gemv(1.0, &mismatch, &(&*w_now - &*w_lag), 1.0);
        Ok(dz)
    };

    for j in 0..=steps {
        let t = j as f64 * h;
        if !z.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { time: t });
        }
        let dz = field(t, &z, &hist, &mut w_now, &mut w_lag)?;
        let w_dot = &z * phi.derivative(t) + &dz * phi.value(t);
        hist.push(&z * phi.value(t), w_dot)?;
        out.times.push(t);
        out.z.push(z.clone());
        if j == steps {
            break;
        }
        let k1 = dz;
        let k2 = field(t + 0.5 * h, &(&z + &k1 * (0.5 * h)), &hist, &mut w_now, &mut w_lag)?;
        let k3 = field(t + 0.5 * h, &(&z + &k2 * (0.5 * h)), &hist, &mut w_now, &mut w_lag)?;
        let k4 = field(t + h, &(&z + &k3 * h), &hist, &mut w_now, &mut w_lag)?;
        z += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    Ok(out)
}
