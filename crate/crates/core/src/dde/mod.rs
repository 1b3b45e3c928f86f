//! Fixed-step simulation of predictor feedback under a time-varying input delay.
//!
//! The plant `ẋ = Ax + Bu(t − D(t))` is integrated by RK4. The input is
//! `u(t) = φ(t)K z(t)` with the Artstein state
//! `z(t) = e^{D₀A}x(t) + ∫_{t−D₀}^{t} e^{(t−s)A}Bu(s) ds` evaluated by the
//! trapezoid rule on the integration grid. The input history before `t = 0`
//! is zero.

mod engine;
mod fit;
mod history;
mod signals;
mod zode;

pub use engine::{
    artstein_transform, default_step, simulate_closed_loop, PredictorLoop, RunSettings,
    Trajectory,
};
pub(crate) use engine::fmt_num;
pub use fit::{fit_decay, fit_log_linear, MIN_FIT_SAMPLES};
pub use history::HistoryBuffer;
pub use signals::{quintic_transition, DelaySignal, TransitionSignal};
pub use zode::{simulate_z_ode, ZTrajectory};
