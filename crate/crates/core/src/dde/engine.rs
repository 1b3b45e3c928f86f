use std::io::Write;

use nalgebra::{DMatrix, DVector};

use super::history::HistoryBuffer;
use super::signals::{DelaySignal, TransitionSignal};
use crate::error::{Error, Result};
use crate::linalg::{mat_exp, RealMatrix};

/// Fixed-step settings for one closed-loop run.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub t_end: f64,
    pub h: f64,
    /// Keep every `record_every`-th grid point in the output (≥ 1).
    pub record_every: usize,
    /// State jumps `(time, Δx)` applied at the first grid point at or after `time`.
    pub impulses: Vec<(f64, DVector<f64>)>,
}

impl RunSettings {
    pub fn new(t_end: f64, h: f64) -> Self {
        Self {
            t_end,
            h,
            record_every: 1,
            impulses: Vec::new(),
        }
    }
}

/// `min(t0, D₀ − δ)/50`, shrunk so that it divides `t0`.
pub fn default_step(delay: &DelaySignal, phi: &TransitionSignal) -> f64 {
    let base = phi.t0.min(delay.nominal() - delay.max_deviation()) / 50.0;
    phi.t0 / (phi.t0 / base).ceil()
}

/// Sampled closed-loop run. `x` is the full plant state; `z` the Artstein
/// state of the predictor's design model.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub x: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub z: Vec<DVector<f64>>,
    /// Plant input `u(t − D(t))`.
    pub u_delayed: Vec<DVector<f64>>,
    pub delay: Vec<f64>,
    pub phi: Vec<f64>,
}

pub(crate) fn fmt_num(v: f64) -> String {
    format!("{v:.14e}")
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let (n, m, nz) = match (self.x.first(), self.u.first(), self.z.first()) {
            (Some(x), Some(u), Some(z)) => (x.len(), u.len(), z.len()),
            _ => (0, 0, 0),
        };
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=n).map(|i| format!("x_{i}")));
        cols.extend((1..=m).map(|i| format!("u_{i}")));
        cols.extend((1..=nz).map(|i| format!("z_{i}")));
        cols.push("D".into());
        cols.push("phi".into());
        cols
    }

    /// Columns `t, x_1..x_n, u_1..u_m, z_1..z_n, D, phi`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.header().join(","))?;
        for i in 0..self.len() {
            let mut row = vec![fmt_num(self.times[i])];
            row.extend(self.x[i].iter().map(|&v| fmt_num(v)));
            row.extend(self.u[i].iter().map(|&v| fmt_num(v)));
            row.extend(self.z[i].iter().map(|&v| fmt_num(v)));
            row.push(fmt_num(self.delay[i]));
            row.push(fmt_num(self.phi[i]));
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Predictor feedback `u = φK z` on a design model `(A, B)` that is the
/// leading block of a larger plant `(A_p, B_p)`; the predictor reads the
/// first `n` plant states. For an LTI run the two coincide.
#[derive(Clone, Debug)]
pub struct PredictorLoop {
    plant_a: RealMatrix,
    plant_b: RealMatrix,
    design_a: RealMatrix,
    design_b: RealMatrix,
    gain: RealMatrix,
    d0: f64,
}

impl PredictorLoop {
    pub fn lti(a: &RealMatrix, b: &RealMatrix, k: &RealMatrix, d0: f64) -> Result<Self> {
        Self::new(a.clone(), b.clone(), a.clone(), b.clone(), k.clone(), d0)
    }

    /// Plant `(A_p, B_p)` with the predictor designed on its leading `n0` states.
    pub fn truncated(
        plant_a: &RealMatrix,
        plant_b: &RealMatrix,
        n0: usize,
        k: &RealMatrix,
        d0: f64,
    ) -> Result<Self> {
        if n0 == 0 || n0 > plant_a.nrows() {
            return Err(Error::Dimension(format!(
                "design order {n0} outside 1..={}",
                plant_a.nrows()
            )));
        }
        let design_a = plant_a.view((0, 0), (n0, n0)).into_owned();
        let design_b = plant_b.rows(0, n0).into_owned();
        Self::new(plant_a.clone(), plant_b.clone(), design_a, design_b, k.clone(), d0)
    }

    fn new(
        plant_a: RealMatrix,
        plant_b: RealMatrix,
        design_a: RealMatrix,
        design_b: RealMatrix,
        gain: RealMatrix,
        d0: f64,
    ) -> Result<Self> {
        let np = plant_a.nrows();
        let n = design_a.nrows();
        let m = plant_b.ncols();
        if plant_a.ncols() != np
            || plant_b.nrows() != np
            || design_b.shape() != (n, m)
            || gain.shape() != (m, n)
        {
            return Err(Error::Dimension(format!(
                "plant A {:?}, B {:?}, gain {:?} are not conformable",
                plant_a.shape(),
                plant_b.shape(),
                gain.shape()
            )));
        }
        if !(d0 > 0.0 && d0.is_finite()) {
            return Err(Error::Precondition(format!("D0 = {d0} must be positive")));
        }
        Ok(Self {
            plant_a,
            plant_b,
            design_a,
            design_b,
            gain,
            d0,
        })
    }

    pub fn design_order(&self) -> usize {
        self.design_a.nrows()
    }

    pub fn plant_order(&self) -> usize {
        self.plant_a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.plant_b.ncols()
    }

    pub fn run(
        &self,
        delay: &DelaySignal,
        phi: &TransitionSignal,
        x0: &DVector<f64>,
        settings: &RunSettings,
    ) -> Result<Trajectory> {
        self.run_with_history(delay, phi, x0, settings).map(|(t, _)| t)
    }

    /// As [`run`](Self::run), also returning the input history on the full grid.
    pub fn run_with_history(
        &self,
        delay: &DelaySignal,
        phi: &TransitionSignal,
        x0: &DVector<f64>,
        settings: &RunSettings,
    ) -> Result<(Trajectory, HistoryBuffer)> {
        let np = self.plant_order();
        let n = self.design_order();
        let m = self.inputs();
        if x0.len() != np {
            return Err(Error::Dimension(format!(
                "initial state has length {}, expected {np}",
                x0.len()
            )));
        }
        if (delay.nominal() - self.d0).abs() > 1e-12 * self.d0 {
            return Err(Error::Precondition(format!(
                "delay signal nominal {} differs from the predictor's D0 = {}",
                delay.nominal(),
                self.d0
            )));
        }
        delay.validate()?;
        let h = settings.h;
        let steps = check_grid(settings.t_end, h, phi.t0, delay)?;
        if settings.record_every == 0 {
            return Err(Error::Precondition("record_every must be at least 1".into()));
        }
        for (_, dx) in &settings.impulses {
            if dx.len() != np {
                return Err(Error::Dimension("impulse length differs from the state".into()));
            }
        }

        let quad = Quadrature::new(&self.design_a, &self.design_b, self.d0, h)?;
        // u solves (I − φ w₀ K B) u = φ K ẑ, so that u = φ K z exactly.
        let kb = &self.gain * &self.design_b;
        let exp_d0_b = &quad.exp_d0_b;

        let mut hist = HistoryBuffer::with_capacity(0.0, h, m, steps + 1)?;
        let mut traj = Trajectory::default();
        let mut x = x0.clone();
        let mut impulses = settings.impulses.clone();
        impulses.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut next_impulse = 0;

        let mut k1 = DVector::zeros(np);
        let mut k2 = DVector::zeros(np);
        let mut k3 = DVector::zeros(np);
        let mut k4 = DVector::zeros(np);
        let mut ud = DVector::zeros(m);

        for j in 0..=steps {
            let t = j as f64 * h;
            while next_impulse < impulses.len() && impulses[next_impulse].0 <= t + 1e-12 * h {
                x += &impulses[next_impulse].1;
                next_impulse += 1;
            }
            let y = x.rows(0, n).into_owned();
            let phi_t = phi.value(t);
            let zp = quad.partial(&y, &hist, j, t)?;
            let lhs = DMatrix::identity(m, m) - &kb * (phi_t * quad.w0);
            let rhs = &self.gain * &zp * phi_t;
            let u = if phi_t == 0.0 {
                DVector::zeros(m)
            } else {
                lhs.lu()
                    .solve(&rhs)
                    .ok_or_else(|| Error::Singular("predictor input equation".into()))?
            };
            let z = &zp + &self.design_b * &u * quad.w0;

            let d_t = delay.value(t);
            hist.value_into(t - d_t, &mut ud)?;
            let u_lag = hist.value_at(t - self.d0)?;
            let z_dot = &self.design_a * &z + &self.design_b * &u + exp_d0_b * (&ud - &u_lag);
            let u_dot = &self.gain * (&z * phi.derivative(t) + z_dot * phi_t);

            if !(x.iter().chain(u.iter()).chain(u_dot.iter()).all(|v| v.is_finite())) {
                return Err(Error::Divergence { time: t });
            }
            hist.push(u.clone(), u_dot)?;

            if j % settings.record_every == 0 {
                traj.times.push(t);
                traj.x.push(x.clone());
                traj.u.push(u);
                traj.z.push(z);
                traj.u_delayed.push(ud.clone());
                traj.delay.push(d_t);
                traj.phi.push(phi_t);
            }
            if j == steps {
                break;
            }

            // RK4 on ẋ = A_p x + B_p u(τ − D(τ)).
            let mut rhs = |tau: f64, state: &DVector<f64>, out: &mut DVector<f64>| -> Result<()> {
                hist.value_into(tau - delay.value(tau), &mut ud)?;
                out.gemv(1.0, &self.plant_a, state, 0.0);
                out.gemv(1.0, &self.plant_b, &ud, 1.0);
                Ok(())
            };
            rhs(t, &x, &mut k1)?;
            rhs(t + 0.5 * h, &(&x + &k1 * (0.5 * h)), &mut k2)?;
            rhs(t + 0.5 * h, &(&x + &k2 * (0.5 * h)), &mut k3)?;
            rhs(t + h, &(&x + &k3 * h), &mut k4)?;
            x += (&k1 + &k2 * 2.0 + &k3 * 2.0 + &k4) * (h / 6.0);
        }
        Ok((traj, hist))
    }
}

/// Validates the fixed-step grid and returns the number of steps.
pub(crate) fn check_grid(t_end: f64, h: f64, t0: f64, delay: &DelaySignal) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Precondition(format!("step h = {h} must be positive")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::Precondition(format!("horizon T = {t_end} must be positive")));
    }
    let divides = |span: f64| {
        let k = (span / h).round();
        k >= 1.0 && (span - k * h).abs() <= 1e-9 * span.max(h)
    };
    if !divides(t_end) {
        return Err(Error::Precondition(format!("h = {h} does not divide T = {t_end}")));
    }
    if !divides(t0) {
        return Err(Error::Precondition(format!("h = {h} does not divide t0 = {t0}")));
    }
    let min_delay = delay.nominal() - delay.max_deviation();
    if h > min_delay / 10.0 * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "h = {h} exceeds (D0 - delta)/10 = {}",
            min_delay / 10.0
        )));
    }
    Ok((t_end / h).round() as usize)
}

/// Composite trapezoid for `∫_{t−D₀}^{t} e^{(t−s)A}B u(s) ds` on the
/// simulation grid, with a final partial interval when `h` does not divide `D₀`.
pub(crate) struct Quadrature {
    exp_d0: RealMatrix,
    exp_d0_b: RealMatrix,
    /// `e^{khA}B` for `k = 0..=q`.
    kernels: Vec<RealMatrix>,
    /// Trapezoid weights at `s = t − kh`.
    weights: Vec<f64>,
    /// Length of the partial interval `[t − D₀, t − qh]`.
    remainder: f64,
    d0: f64,
    pub w0: f64,
}

impl Quadrature {
    pub fn new(a: &RealMatrix, b: &RealMatrix, d0: f64, h: f64) -> Result<Self> {
        let mut q = (d0 / h).floor() as usize;
        let mut remainder = d0 - q as f64 * h;
        if remainder > h * (1.0 - 1e-9) {
            q += 1;
            remainder = 0.0;
        }
        if remainder.abs() <= 1e-9 * h {
            remainder = 0.0;
        }
        let step_exp = mat_exp(a, h)?;
        let mut kernels = Vec::with_capacity(q + 1);
        kernels.push(b.clone());
        for k in 1..=q {
            let next = &step_exp * &kernels[k - 1];
            kernels.push(next);
        }
        let mut weights = vec![h; q + 1];
        weights[0] = 0.5 * h;
        if q >= 1 {
            weights[q] = 0.5 * h + 0.5 * remainder;
        } else {
            weights[0] = 0.5 * remainder;
        }
        let exp_d0 = mat_exp(a, d0)?;
        let exp_d0_b = &exp_d0 * b;
        Ok(Self {
            w0: weights[0],
            exp_d0,
            exp_d0_b,
            kernels,
            weights,
            remainder,
            d0,
        })
    }

    /// `e^{D₀A}y` plus every quadrature term except the one at `s = t`.
    pub fn partial(
        &self,
        y: &DVector<f64>,
        hist: &HistoryBuffer,
        index: usize,
        t: f64,
    ) -> Result<DVector<f64>> {
        let mut acc = &self.exp_d0 * y;
        for k in 1..self.kernels.len() {
            let j = index as i64 - k as i64;
            if j < 0 {
                break;
            }
            acc.gemv(self.weights[k], &self.kernels[k], hist.sample(j as usize), 1.0);
        }
        if self.remainder > 0.0 {
            let u_end = hist.value_at(t - self.d0)?;
            acc.gemv(0.5 * self.remainder, &self.exp_d0_b, &u_end, 1.0);
        }
        Ok(acc)
    }
}

/// `z(t) = e^{D₀A}x(t) + ∫_{t−D₀}^{t} e^{(t−s)A}Bu(s) ds` by the trapezoid
/// rule on the history's grid; `t` must be a grid time of `u_hist`.
pub fn artstein_transform(
    x_t: &DVector<f64>,
    u_hist: &HistoryBuffer,
    a: &RealMatrix,
    b: &RealMatrix,
    d0: f64,
    t: f64,
) -> Result<DVector<f64>> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || x_t.len() != n || b.ncols() != u_hist.dim() {
        return Err(Error::Dimension("A, B, x and history are not conformable".into()));
    }
    let h = u_hist.step();
    let pos = (t - u_hist.origin()) / h;
    let index = pos.round();
    if (pos - index).abs() > 1e-9 * (1.0 + index.abs()) || index < 0.0 {
        return Err(Error::Precondition(format!("t = {t} is not a grid time of the history")));
    }
    let index = index as usize;
    if index >= u_hist.len() {
        return Err(Error::HistorySpan {
            time: t,
            start: u_hist.origin(),
            end: u_hist.end().unwrap_or(u_hist.origin()),
        });
    }
    let quad = Quadrature::new(a, b, d0, h)?;
    let zp = quad.partial(x_t, u_hist, index, t)?;
    Ok(zp + b * u_hist.sample(index) * quad.w0)
}

/// Closed loop `ẋ = Ax + Bu(t − D(t))`, `u = φ(t)K z(t)`, from `x(0) = x0`
/// with zero input history.
#[allow(clippy::too_many_arguments)]
pub fn simulate_closed_loop(
    a: &RealMatrix,
    b: &RealMatrix,
    k: &RealMatrix,
    d0: f64,
    delay: &DelaySignal,
    phi: &TransitionSignal,
    x0: &DVector<f64>,
    t_end: f64,
    h: f64,
) -> Result<Trajectory> {
    PredictorLoop::lti(a, b, k, d0)?.run(delay, phi, x0, &RunSettings::new(t_end, h))
}
