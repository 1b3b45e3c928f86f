//! Robustness certification for constant-delay linear predictor feedback.
//!
//! The crate answers one question: given a plant `ẋ = Ax + Bu(t − D(t))` driven
//! by a predictor designed for the nominal delay `D₀`, how far may `D(t)`
//! wander from `D₀` before exponential stability is lost? It provides
//!
//! - [`linalg`]: dense kernels (matrix exponential, spectra, Lyapunov, pole placement),
//! - [`sdp`]: a small barrier-method solver for max-eigenvalue LMIs,
//! - [`lmi`]: the Lyapunov–Krasovskii certificate, its δ search and the small-gain bounds,
//! - [`dde`]: a fixed-step simulator of the closed loop and of its Artstein transform,
//! - [`pde`]: modal truncation of diagonal boundary control systems, with the
//!   reaction–diffusion instance.

pub mod dde;
pub mod error;
pub mod linalg;
pub mod lmi;
pub mod pde;
pub mod sdp;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, RealMatrix};
