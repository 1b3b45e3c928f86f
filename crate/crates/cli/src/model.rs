use delaycert::dde::{DelaySignal, TransitionSignal};
use delaycert::linalg::{place_poles, place_poles_complex, realify, ComplexMatrix, RealMatrix};
use delaycert::lmi::{build_problem, build_problem_complex, CertificationProblem};
use delaycert::pde::{ReactionDiffusionConfig, SpectralSystem, DEFAULT_SIM_MODES};
use delaycert::{Error, Result};
use num_complex::Complex64;

use crate::config::{DelayConfig, DelayKind, ProfileConfig, ProfileKind, SystemConfig, SystemKind};

pub enum Plant {
    Lti {
        a: RealMatrix,
        b: RealMatrix,
        k: RealMatrix,
    },
    Modal {
        system: SpectralSystem,
        k: ComplexMatrix,
        rd: Option<ReactionDiffusionConfig>,
    },
}

fn matrix(rows: &[Vec<f64>]) -> RealMatrix {
    RealMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
}

fn complex_rows(re: &[Vec<f64>], im: Option<&Vec<Vec<f64>>>) -> Vec<Vec<Complex64>> {
    re.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| Complex64::new(v, im.map_or(0.0, |m| m[i][j])))
                .collect()
        })
        .collect()
}

fn targets(cfg: &SystemConfig) -> Vec<Complex64> {
    let re = cfg.poles.as_deref().unwrap_or_default();
    re.iter()
        .enumerate()
        .map(|(i, &r)| Complex64::new(r, cfg.poles_im.as_ref().map_or(0.0, |im| im[i])))
        .collect()
}

impl Plant {
    /// Builds the plant and its gain; poles are placed on the design model.
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        match cfg.kind {
            SystemKind::Lti => {
                let a = matrix(cfg.a_matrix.as_ref().expect("validated"));
                let b = matrix(cfg.b_matrix.as_ref().expect("validated"));
                let k = match &cfg.k_matrix {
                    Some(k) => matrix(k),
                    None => place_poles(&a, &b, &targets(cfg))?,
                };
                Ok(Plant::Lti { a, b, k })
            }
            SystemKind::ReactionDiffusion => {
                let rd = ReactionDiffusionConfig::new(
                    cfg.a.expect("validated"),
                    cfg.c.expect("validated"),
                    cfg.length.expect("validated"),
                )?;
                let n0 = cfg.n0.unwrap_or(3);
                let system = rd.spectral_system(n0, cfg.n_sim.unwrap_or(DEFAULT_SIM_MODES).max(n0))?;
                let k = Self::modal_gain(cfg, &system)?;
                Ok(Plant::Modal {
                    system,
                    k,
                    rd: Some(rd),
                })
            }
            SystemKind::Spectral => {
                let re = cfg.eigenvalues.as_ref().expect("validated");
                let eigs = re
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| Complex64::new(r, cfg.eigenvalues_im.as_ref().map_or(0.0, |im| im[i])))
                    .collect();
                let coeffs = complex_rows(cfg.input_coeffs.as_ref().expect("validated"), cfg.input_coeffs_im.as_ref());
                let n0 = cfg.n0.expect("validated");
                let system = SpectralSystem::new(eigs, coeffs, n0, cfg.n_sim.unwrap_or(n0), (1.0, 1.0))?;
                let k = Self::modal_gain(cfg, &system)?;
                Ok(Plant::Modal { system, k, rd: None })
            }
        }
    }

    fn modal_gain(cfg: &SystemConfig, system: &SpectralSystem) -> Result<ComplexMatrix> {
        if let Some(k) = &cfg.k_matrix {
            let rows = complex_rows(k, cfg.k_im.as_ref());
            return Ok(ComplexMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]));
        }
        let (a, b) = system.modal_matrices(system.n0);
        if system.is_real() {
            let k = place_poles(&a.map(|v| v.re), &b.map(|v| v.re), &targets(cfg))?;
            Ok(k.map(|v| Complex64::new(v, 0.0)))
        } else {
            place_poles_complex(&a, &b, &targets(cfg))
        }
    }

    /// Design model `(A, B, K)` over ℝ, realified when complex.
    pub fn design_real(&self) -> (RealMatrix, RealMatrix, RealMatrix) {
        match self {
            Plant::Lti { a, b, k } => (a.clone(), b.clone(), k.clone()),
            Plant::Modal { system, k, .. } => {
                let (a, b) = system.modal_matrices(system.n0);
                if self.is_real() {
                    (a.map(|v| v.re), b.map(|v| v.re), k.map(|v| v.re))
                } else {
                    (realify(&a), realify(&b), realify(k))
                }
            }
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            Plant::Lti { .. } => true,
            Plant::Modal { system, k, .. } => system.is_real() && k.iter().all(|v| v.im == 0.0),
        }
    }

    pub fn problem(&self, d0: f64, kappa: f64, eps_pd: f64) -> Result<CertificationProblem> {
        let p = match self {
            Plant::Lti { a, b, k } => build_problem(a, b, k, d0, kappa)?,
            Plant::Modal { system, k, .. } => {
                let (a, b) = system.modal_matrices(system.n0);
                if self.is_real() {
                    build_problem(&a.map(|v| v.re), &b.map(|v| v.re), &k.map(|v| v.re), d0, kappa)?
                } else {
                    build_problem_complex(&a, &b, k, d0, kappa)?
                }
            }
        };
        p.with_eps_pd(eps_pd)
    }

    /// `α` of the residual modes, when the plant is modal.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            Plant::Modal { system, .. } => Some(system.alpha),
            Plant::Lti { .. } => None,
        }
    }
}

pub fn delay_signal(cfg: Option<&DelayConfig>, d0: f64) -> Result<DelaySignal> {
    let Some(cfg) = cfg else {
        return Ok(DelaySignal::constant(d0));
    };
    match cfg.kind {
        DelayKind::Constant => Ok(DelaySignal::constant(d0)),
        DelayKind::Sinusoid => {
            let s = DelaySignal::sinusoid(d0, cfg.amplitude, cfg.omega, cfg.phase);
            s.validate()?;
            Ok(s)
        }
        DelayKind::Table => DelaySignal::table(
            d0,
            cfg.table.as_ref().expect("validated").iter().map(|r| (r[0], r[1])).collect(),
        ),
    }
}

pub fn transition(t0: f64) -> Result<TransitionSignal> {
    TransitionSignal::new(t0)
}

/// Initial modal coefficients for `n_sim` modes.
pub fn initial_coefficients(
    profile: &ProfileConfig,
    rd: Option<&ReactionDiffusionConfig>,
    n_sim: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n_sim];
    match profile.kind {
        ProfileKind::Zero => {}
        ProfileKind::Coefficients => {
            let v = profile.values.as_ref().expect("validated");
            if v.len() > n_sim {
                return Err(Error::Dimension(format!(
                    "{} initial coefficients for {n_sim} simulated modes",
                    v.len()
                )));
            }
            out[..v.len()].copy_from_slice(v);
        }
        ProfileKind::Mode => {
            let n = profile.n.expect("validated");
            if n > n_sim {
                return Err(Error::Dimension(format!("mode {n} is not simulated")));
            }
            out[n - 1] = profile.amplitude.unwrap_or(1.0);
        }
        ProfileKind::Polynomial => {
            let rd = rd.ok_or_else(|| Error::Precondition("polynomial profiles need a reaction-diffusion system".into()))?;
            let roots: Vec<f64> = profile
                .roots_over_length
                .as_ref()
                .expect("validated")
                .iter()
                .map(|r| r * rd.length)
                .collect();
            let scale = profile.scale.unwrap_or(1.0);
            let f = |x: f64| scale * roots.iter().map(|r| x - r).product::<f64>();
            out = delaycert::pde::project_initial(rd, f, n_sim);
        }
    }
    Ok(out)
}

