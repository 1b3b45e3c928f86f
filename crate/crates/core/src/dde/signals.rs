use crate::error::{Error, Result};

/// Time-varying input delay `D(t)` around a nominal `D₀`, in seconds.
#[derive(Clone, Debug, PartialEq)]
pub enum DelaySignal {
    Constant {
        d0: f64,
    },
    /// `D(t) = d0 + amplitude·sin(omega·t + phase)`.
    Sinusoid {
        d0: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// Piecewise-linear through `(time, value)` samples, held constant outside.
    Table {
        d0: f64,
        samples: Vec<(f64, f64)>,
    },
}

impl DelaySignal {
    pub fn constant(d0: f64) -> Self {
        Self::Constant { d0 }
    }

    pub fn sinusoid(d0: f64, amplitude: f64, omega: f64, phase: f64) -> Self {
        Self::Sinusoid {
            d0,
            amplitude,
            omega,
            phase,
        }
    }

    pub fn table(d0: f64, samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Precondition("delay table is empty".into()));
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Precondition(
                "delay table times must be strictly increasing".into(),
            ));
        }
        Ok(Self::Table { d0, samples })
    }

    pub fn nominal(&self) -> f64 {
        match *self {
            Self::Constant { d0 } | Self::Sinusoid { d0, .. } | Self::Table { d0, .. } => d0,
        }
    }

    /// `sup |D(t) − D₀|`.
    pub fn max_deviation(&self) -> f64 {
        match self {
            Self::Constant { .. } => 0.0,
            Self::Sinusoid { amplitude, .. } => amplitude.abs(),
            Self::Table { d0, samples } => samples
                .iter()
                .map(|&(_, v)| (v - d0).abs())
                .fold(0.0, f64::max),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Self::Constant { d0 } => *d0,
            Self::Sinusoid {
                d0,
                amplitude,
                omega,
                phase,
            } => d0 + amplitude * (omega * t + phase).sin(),
            Self::Table { samples, .. } => {
                let first = samples[0];
                let last = samples[samples.len() - 1];
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                let i = samples.partition_point(|&(s, _)| s <= t) - 1;
                let (t0, v0) = samples[i];
                let (t1, v1) = samples[i + 1];
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Checks `0 < D₀ − δ` and `D₀ + δ < 2D₀`.
    pub fn validate(&self) -> Result<()> {
        let d0 = self.nominal();
        if !(d0 > 0.0 && d0.is_finite()) {
            return Err(Error::Precondition(format!("nominal delay {d0} must be positive")));
        }
        let dev = self.max_deviation();
        if !(dev < d0) || !dev.is_finite() {
            return Err(Error::Precondition(format!(
                "delay deviation {dev} must be below D0 = {d0}"
            )));
        }
        Ok(())
    }
}

/// `10s³ − 15s⁴ + 6s⁵` with `s = clamp(t/t0, 0, 1)`.
pub fn quintic_transition(t: f64, t0: f64) -> f64 {
    let s = (t / t0).clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

/// Smooth 0→1 ramp over `[0, t0]` with vanishing first and second derivatives at both ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionSignal {
    pub t0: f64,
}

impl TransitionSignal {
    pub fn new(t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::Precondition(format!("t0 = {t0} must be positive")));
        }
        Ok(Self { t0 })
    }

    pub fn value(&self, t: f64) -> f64 {
        quintic_transition(t, self.t0)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.t0 {
            return 0.0;
        }
        let s = t / self.t0;
        30.0 * s * s * (1.0 - s) * (1.0 - s) / self.t0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_endpoints_and_midpoint() {
        assert_eq!(quintic_transition(0.0, 0.5), 0.0);
        assert_eq!(quintic_transition(0.5, 0.5), 1.0);
        assert_eq!(quintic_transition(-1.0, 0.5), 0.0);
        assert_eq!(quintic_transition(3.0, 0.5), 1.0);
        assert!((quintic_transition(0.25, 0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quintic_coefficients_solve_boundary_system() {
        // f = Σ c_k s^k, k = 0..5, with f, f', f'' fixed at s = 0 and s = 1
        use nalgebra::{DMatrix, DVector};
        let mut m = DMatrix::zeros(6, 6);
        let mut rhs = DVector::zeros(6);
        for k in 0..6 {
            let kf = k as f64;
            m[(0, k)] = if k == 0 { 1.0 } else { 0.0 };
            m[(1, k)] = if k == 1 { 1.0 } else { 0.0 };
            m[(2, k)] = if k == 2 { 2.0 } else { 0.0 };
            m[(3, k)] = 1.0;
            m[(4, k)] = kf;
            m[(5, k)] = kf * (kf - 1.0);
        }
        rhs[3] = 1.0;
        let c = m.lu().solve(&rhs).unwrap();
        let expect = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];
        for (got, want) in c.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_derivative_matches_difference_quotient() {
        let phi = TransitionSignal::new(0.5).unwrap();
        for &t in &[0.05, 0.2, 0.37, 0.49] {
            let eps = 1e-6;
            let fd = (phi.value(t + eps) - phi.value(t - eps)) / (2.0 * eps);
            assert!((fd - phi.derivative(t)).abs() < 1e-7);
        }
        assert_eq!(phi.derivative(0.0), 0.0);
        assert_eq!(phi.derivative(0.6), 0.0);
    }

    #[test]
    fn delay_signals() {
        let s = DelaySignal::sinusoid(1.0, 0.25, 3.0 * std::f64::consts::PI, std::f64::consts::FRAC_PI_4);
        assert!((s.value(0.0) - (1.0 + 0.25 * std::f64::consts::FRAC_1_SQRT_2)).abs() < 1e-15);
        assert_eq!(s.max_deviation(), 0.25);
        let tbl = DelaySignal::table(1.0, vec![(0.0, 0.9), (1.0, 1.1), (2.0, 1.0)]).unwrap();
        assert!((tbl.value(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(tbl.value(-1.0), 0.9);
        assert_eq!(tbl.value(5.0), 1.0);
        assert!((tbl.max_deviation() - 0.1).abs() < 1e-15);
        assert!(DelaySignal::table(1.0, vec![(1.0, 1.0), (1.0, 1.0)]).is_err());
        assert!(DelaySignal::sinusoid(1.0, 1.0, 1.0, 0.0).validate().is_err());
        assert!(DelaySignal::constant(0.0).validate().is_err());
    }
}
