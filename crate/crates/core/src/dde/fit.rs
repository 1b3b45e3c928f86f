use super::engine::Trajectory;
use crate::error::{Error, Result};

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares fit `log v ≈ c − rate·t`; returns `(rate, c)`.
///
/// Samples are used up to the first non-positive value.
pub fn fit_log_linear(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.len() != values.len() {
        return Err(Error::Dimension("times and values differ in length".into()));
    }
    let usable = values
        .iter()
        .position(|&v| !(v > 0.0 && v.is_finite()))
        .unwrap_or(values.len());
    if usable < MIN_FIT_SAMPLES {
        return Err(Error::Precondition(format!(
            "only {usable} positive samples in the fit window, need {MIN_FIT_SAMPLES}"
        )));
    }
    let ts = &times[..usable];
    let ls: Vec<f64> = values[..usable].iter().map(|v| v.ln()).collect();
    let count = usable as f64;
    let t_mean = ts.iter().sum::<f64>() / count;
    let l_mean = ls.iter().sum::<f64>() / count;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (t, l) in ts.iter().zip(&ls) {
        sxx += (t - t_mean) * (t - t_mean);
        sxy += (t - t_mean) * (l - l_mean);
    }
    if !(sxx > 0.0) {
        return Err(Error::Precondition("fit window has no time spread".into()));
    }
    let slope = sxy / sxx;
    Ok((-slope, l_mean - slope * t_mean))
}

/// Decay rate of `‖x(t)‖ + ‖u(t)‖` over `[t_start, t_end]`.
pub fn fit_decay(traj: &Trajectory, t_start: f64, t_end: f64) -> Result<(f64, f64)> {
    let (times, values): (Vec<f64>, Vec<f64>) = (0..traj.len())
        .filter(|&i| traj.times[i] >= t_start && traj.times[i] <= t_end)
        .map(|i| (traj.times[i], traj.x[i].norm() + traj.u[i].norm()))
        .unzip();
    fit_log_linear(&times, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        (0..n)
            .map(|i| {
                let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
                (t, f(t))
            })
            .unzip()
    }

    #[test]
    fn exact_exponential() {
        let (t, v) = series(|t| (-0.3 * t).exp(), 0.0, 10.0, 101);
        let (rate, c) = fit_log_linear(&t, &v).unwrap();
        assert!((rate - 0.3).abs() < 1e-6);
        assert!(c.abs() < 1e-9);
    }

    #[test]
    fn oscillation_averages_out() {
        let (t, v) = series(|t| (-0.3 * t).exp() * (2.0 + (5.0 * t).sin()), 10.0, 30.0, 2001);
        let (rate, _) = fit_log_linear(&t, &v).unwrap();
        assert!((rate - 0.3).abs() < 0.02, "{rate}");
    }

    #[test]
    fn zero_signal_is_rejected() {
        let (t, v) = series(|_| 0.0, 0.0, 1.0, 50);
        assert!(fit_log_linear(&t, &v).is_err());
    }

    #[test]
    fn window_shrinks_to_last_positive_sample() {
        let (t, mut v) = series(|t| (-t).exp(), 0.0, 5.0, 40);
        for x in v.iter_mut().skip(20) {
            *x = 0.0;
        }
        let (rate, _) = fit_log_linear(&t, &v).unwrap();
        assert!((rate - 1.0).abs() < 1e-9);
    }
}
