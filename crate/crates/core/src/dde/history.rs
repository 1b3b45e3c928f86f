use nalgebra::DVector;

use crate::error::{Error, Result};

/// Uniformly sampled signal with value and derivative samples, for random
/// access at arbitrary past times.
///
/// Times before `origin` read as zero. Between samples the signal is cubic
/// Hermite, except on the first interval where it is linear.
#[derive(Clone, Debug)]
pub struct HistoryBuffer {
    step: f64,
    origin: f64,
    dim: usize,
    values: Vec<DVector<f64>>,
    derivatives: Vec<DVector<f64>>,
}

impl HistoryBuffer {
    pub fn new(origin: f64, step: f64, dim: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Precondition(format!("history step {step} must be positive")));
        }
        Ok(Self {
            step,
            origin,
            dim,
            values: Vec::new(),
            derivatives: Vec::new(),
        })
    }

    pub fn with_capacity(origin: f64, step: f64, dim: usize, capacity: usize) -> Result<Self> {
        let mut h = Self::new(origin, step, dim)?;
        h.values.reserve(capacity);
        h.derivatives.reserve(capacity);
        Ok(h)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Time of the newest sample.
    pub fn end(&self) -> Option<f64> {
        (!self.values.is_empty()).then(|| self.time_of(self.values.len() - 1))
    }

    pub fn time_of(&self, index: usize) -> f64 {
        self.origin + index as f64 * self.step
    }

    pub fn push(&mut self, value: DVector<f64>, derivative: DVector<f64>) -> Result<()> {
        if value.len() != self.dim || derivative.len() != self.dim {
            return Err(Error::Dimension(format!(
                "history sample of length {}/{} in a buffer of dimension {}",
                value.len(),
                derivative.len(),
                self.dim
            )));
        }
        self.values.push(value);
        self.derivatives.push(derivative);
        Ok(())
    }

    pub fn sample(&self, index: usize) -> &DVector<f64> {
        &self.values[index]
    }

    pub fn derivative_sample(&self, index: usize) -> &DVector<f64> {
        &self.derivatives[index]
    }

    /// Value at grid index `index`, with negative indices reading as zero.
    pub fn sample_or_zero(&self, index: i64) -> DVector<f64> {
        if index < 0 {
            DVector::zeros(self.dim)
        } else {
            self.values[index as usize].clone()
        }
    }

    /// Interpolated value at `t`; zero before `origin`, error past the newest sample.
    pub fn value_at(&self, t: f64) -> Result<DVector<f64>> {
        let mut out = DVector::zeros(self.dim);
        self.value_into(t, &mut out)?;
        Ok(out)
    }

    pub fn value_into(&self, t: f64, out: &mut DVector<f64>) -> Result<()> {
        out.fill(0.0);
        if t < self.origin {
            return Ok(());
        }
        let last = match self.values.len() {
            0 => {
                return Err(Error::HistorySpan {
                    time: t,
                    start: self.origin,
                    end: self.origin,
                })
            }
            n => n - 1,
        };
        let pos = (t - self.origin) / self.step;
        let last_f = last as f64;
        if pos > last_f + 1e-9 {
            return Err(Error::HistorySpan {
                time: t,
                start: self.origin,
                end: self.time_of(last),
            });
        }
        let nearest = pos.round();
        if (pos - nearest).abs() <= 1e-12 * (1.0 + nearest) {
            out.copy_from(&self.values[(nearest as usize).min(last)]);
            return Ok(());
        }
        let i = (pos.floor() as usize).min(last.saturating_sub(1));
        let s = pos - i as f64;
        if last == 0 {
            out.copy_from(&self.values[0]);
            return Ok(());
        }
        let v0 = &self.values[i];
        let v1 = &self.values[i + 1];
        if i == 0 {
            out.axpy(1.0 - s, v0, 0.0);
            out.axpy(s, v1, 1.0);
            return Ok(());
        }
        let d0 = &self.derivatives[i];
        let d1 = &self.derivatives[i + 1];
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        out.axpy(h00, v0, 0.0);
        out.axpy(h10 * self.step, d0, 1.0);
        out.axpy(h01, v1, 1.0);
        out.axpy(h11 * self.step, d1, 1.0);
        Ok(())
    }
}
