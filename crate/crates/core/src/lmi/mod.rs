//! Lyapunov–Krasovskii certification of delay-mismatch robustness.
//!
//! For the comparison system `ẋ = Mx + N{x(t − D(t)) − x(t − D₀)}` with
//! `|D − D₀| ≤ δ`, exponential decay at rate `κ` follows from feasibility of
//! the LMI `Θ(δ, κ) ⪯ 0` in `(P₁, P₂, P₃, Q)`, with `P₁, Q ≻ 0`. This module
//! assembles `Θ`, decides it with [`crate::sdp`], re-checks every certificate it
//! reports, and bisects for the largest certified `δ`.

mod small_gain;
pub mod scalar_oracle;

pub use small_gain::{
    default_mu_grid, delta_e, estimate_envelope, small_gain_delta, small_gain_lhs,
    SmallGainEnvelope,
};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_hurwitz, induced_norm2, mat_exp, mat_exp_complex, realify, solve_lyapunov_identity,
    symmetric_extremal_eigs, symmetric_extremal_eigs_unchecked, ComplexMatrix, RealMatrix,
};
use crate::sdp::{minimize_max_eig, AffineSymmetricMap, FeasibilityStatus, SolverOptions};

pub const DEFAULT_EPS_PD: f64 = 1e-6;
pub const DEFAULT_DELTA_TOL: f64 = 1e-4;

/// One LMI feasibility query: `M`, `N`, nominal delay `D₀` (s) and decay rate `κ` (1/s).
#[derive(Clone, Debug)]
pub struct CertificationProblem {
    pub closed_loop: RealMatrix,
    pub mismatch: RealMatrix,
    pub d0: f64,
    pub kappa: f64,
    pub eps_pd: f64,
}

impl CertificationProblem {
    pub fn new(closed_loop: RealMatrix, mismatch: RealMatrix, d0: f64, kappa: f64) -> Result<Self> {
        let problem = Self {
            closed_loop,
            mismatch,
            d0,
            kappa,
            eps_pd: DEFAULT_EPS_PD,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn with_eps_pd(mut self, eps_pd: f64) -> Result<Self> {
        self.eps_pd = eps_pd;
        self.validate()?;
        Ok(self)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        let mut p = self.clone();
        p.kappa = kappa;
        p.validate()?;
        Ok(p)
    }

    pub fn order(&self) -> usize {
        self.closed_loop.nrows()
    }

    fn validate(&self) -> Result<()> {
        let n = self.closed_loop.nrows();
        if self.closed_loop.ncols() != n || self.mismatch.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "M is {:?} and N is {:?}; both must be square of equal order",
                self.closed_loop.shape(),
                self.mismatch.shape()
            )));
        }
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            return Err(Error::Precondition(format!("D0 = {} must be positive", self.d0)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Precondition(format!("kappa = {} must be >= 0", self.kappa)));
        }
        if !(self.eps_pd > 0.0) {
            return Err(Error::Precondition("eps_pd must be positive".into()));
        }
        Ok(())
    }
}

/// Decision variables of the functional, plus the margin they achieve.
#[derive(Clone, Debug)]
pub struct LkCertificate {
    pub p1: RealMatrix,
    pub p2: RealMatrix,
    pub p3: RealMatrix,
    pub q: RealMatrix,
    pub margin: f64,
}

impl LkCertificate {
    pub fn theta(&self, delta: f64, problem: &CertificationProblem) -> Result<RealMatrix> {
        assemble_theta(&self.p1, &self.p2, &self.p3, &self.q, delta, problem)
    }

    /// Multiplies every variable by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            p1: &self.p1 * s,
            p2: &self.p2 * s,
            p3: &self.p3 * s,
            q: &self.q * s,
            margin: self.margin * s,
        }
    }
}

/// The `3n × 3n` matrix `Θ(δ, κ)`:
///
/// ```text
/// [ 2κP₁ + MᵀP₂ + P₂ᵀM   P₁ − P₂ᵀ + MᵀP₃       δP₂ᵀN          ]
/// [        ·             −P₃ − P₃ᵀ + 2δQ        δP₃ᵀN          ]
/// [        ·                    ·            −δe^{−2κD₀}Q      ]
/// ```
///
/// The lower triangle is filled with exact transposes, so the output is
/// symmetric bit-for-bit.
pub fn assemble_theta(
    p1: &RealMatrix,
    p2: &RealMatrix,
    p3: &RealMatrix,
    q: &RealMatrix,
    delta: f64,
    problem: &CertificationProblem,
) -> Result<RealMatrix> {
    let n = problem.order();
    for (name, m) in [("P1", p1), ("P2", p2), ("P3", p3), ("Q", q)] {
        if m.shape() != (n, n) {
            return Err(Error::Dimension(format!(
                "{name} is {:?}, expected {n}x{n}",
                m.shape()
            )));
        }
    }
    let m = &problem.closed_loop;
    let nm = &problem.mismatch;
    let kappa = problem.kappa;
    let mt = m.transpose();

    let mt_p2 = &mt * p2;
    let b11 = (p1 + p1.transpose()) * kappa + &mt_p2 + mt_p2.transpose();
    let b12 = p1 - p2.transpose() + &mt * p3;
    let b13 = p2.transpose() * nm * delta;
    let b22 = -(p3 + p3.transpose()) + (q + q.transpose()) * delta;
    let b23 = p3.transpose() * nm * delta;
    let b33 = (q + q.transpose()) * (-0.5 * delta * (-2.0 * kappa * problem.d0).exp());
    let (b11, b22, b33) = (mirror_upper(b11), mirror_upper(b22), mirror_upper(b33));

    let mut theta = RealMatrix::zeros(3 * n, 3 * n);
    theta.view_mut((0, 0), (n, n)).copy_from(&b11);
    theta.view_mut((0, n), (n, n)).copy_from(&b12);
    theta.view_mut((0, 2 * n), (n, n)).copy_from(&b13);
    theta.view_mut((n, 0), (n, n)).copy_from(&b12.transpose());
    theta.view_mut((n, n), (n, n)).copy_from(&b22);
    theta.view_mut((n, 2 * n), (n, n)).copy_from(&b23);
    theta.view_mut((2 * n, 0), (n, n)).copy_from(&b13.transpose());
    theta.view_mut((2 * n, n), (n, n)).copy_from(&b23.transpose());
    theta.view_mut((2 * n, 2 * n), (n, n)).copy_from(&b33);
    Ok(theta)
}

// sums like x_ij + x_ji round differently from x_ji + x_ij
fn mirror_upper(mut m: RealMatrix) -> RealMatrix {
    for j in 0..m.ncols() {
        for i in j + 1..m.nrows() {
            m[(i, j)] = m[(j, i)];
        }
    }
    m
}

/// Coordinates of `(P₁, P₂, P₃, Q)` in the solver's decision vector:
/// upper triangles of `P₁` and `Q`, all entries of `P₂` and `P₃`.
struct Layout {
    n: usize,
}

impl Layout {
    fn sym_len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn len(&self) -> usize {
        2 * self.sym_len() + 2 * self.n * self.n
    }

    fn sym_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.sym_len());
        for i in 0..self.n {
            for j in i..self.n {
                out.push((i, j));
            }
        }
        out
    }

    fn unpack(&self, x: &DVector<f64>) -> [RealMatrix; 4] {
        let n = self.n;
        let s = self.sym_len();
        let pairs = self.sym_pairs();
        let sym = |offset: usize| {
            let mut m = RealMatrix::zeros(n, n);
            for (k, &(i, j)) in pairs.iter().enumerate() {
                m[(i, j)] = x[offset + k];
                m[(j, i)] = x[offset + k];
            }
            m
        };
        let full = |offset: usize| RealMatrix::from_fn(n, n, |i, j| x[offset + i * n + j]);
        [sym(0), full(s), full(s + n * n), sym(s + 2 * n * n)]
    }

    fn unit(&self, index: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.len());
        e[index] = 1.0;
        e
    }
}

/// The solver-facing map: `Θ ⪯ tI`, `εI − P₁ ⪯ tI`, `εI − Q ⪯ tI`, and the
/// normalisations `P₁ − I ⪯ tI`, `Q − I ⪯ tI`, `‖P₂‖, ‖P₃‖ ≤ R + t` that keep
/// the homogeneous problem bounded. A negative optimum is equivalent to strict
/// feasibility with `‖P₂‖, ‖P₃‖ < R·λ_max(P₁)`.
fn build_map(problem: &CertificationProblem, delta: f64) -> Result<(AffineSymmetricMap, Layout)> {
    let n = problem.order();
    let layout = Layout { n };
    let dim = layout.len();
    let mut map = AffineSymmetricMap::new(dim);

    let mut theta_coeffs = Vec::with_capacity(dim);
    let mut p1_coeffs = Vec::with_capacity(dim);
    let mut q_coeffs = Vec::with_capacity(dim);
    let mut p2_coeffs = Vec::with_capacity(dim);
    let mut p3_coeffs = Vec::with_capacity(dim);
    for j in 0..dim {
        let [p1, p2, p3, q] = layout.unpack(&layout.unit(j));
        theta_coeffs.push(assemble_theta(&p1, &p2, &p3, &q, delta, problem)?);
        p1_coeffs.push(p1);
        q_coeffs.push(q);
        p2_coeffs.push(dilation(&p2));
        p3_coeffs.push(dilation(&p3));
    }
    let eye = RealMatrix::identity(n, n);
    map.push_block(RealMatrix::zeros(3 * n, 3 * n), theta_coeffs)?;
    map.push_block(
        &eye * problem.eps_pd,
        p1_coeffs.iter().map(|m| -m).collect(),
    )?;
    map.push_block(&eye * problem.eps_pd, q_coeffs.iter().map(|m| -m).collect())?;
    map.push_block(-&eye, p1_coeffs)?;
    map.push_block(-&eye, q_coeffs)?;
    let bound = RealMatrix::identity(2 * n, 2 * n) * -CROSS_TERM_BOUND;
    map.push_block(bound.clone(), p2_coeffs)?;
    map.push_block(bound, p3_coeffs)?;
    Ok((map, layout))
}

/// Bound on `‖P₂‖, ‖P₃‖` relative to the `P₁ ⪯ I` normalisation.
const CROSS_TERM_BOUND: f64 = 1e4;

/// `[[0, P], [Pᵀ, 0]]`, whose eigenvalues are `±σᵢ(P)`.
fn dilation(p: &RealMatrix) -> RealMatrix {
    let n = p.nrows();
    let mut out = RealMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, n), (n, n)).copy_from(p);
    out.view_mut((n, 0), (n, n)).copy_from(&p.transpose());
    out
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Feasible(LkCertificate),
    Infeasible { margin: f64 },
    /// The solver failed or its witness did not survive re-verification.
    Indeterminate { margin: f64, reason: String },
}

impl Verdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible(_))
    }

    pub fn certificate(&self) -> Option<&LkCertificate> {
        match self {
            Verdict::Feasible(c) => Some(c),
            _ => None,
        }
    }
}

fn check_delta_range(problem: &CertificationProblem, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < problem.d0) {
        return Err(Error::Precondition(format!(
            "delta = {delta} must lie in (0, D0 = {})",
            problem.d0
        )));
    }
    Ok(())
}

/// Decides strict feasibility of `Θ(δ, κ) ≺ 0`, `P₁, Q ⪰ eps_pd·I`.
pub fn check_feasibility(problem: &CertificationProblem, delta: f64) -> Result<Verdict> {
    check_feasibility_with(problem, delta, &SolverOptions::default())
}

pub fn check_feasibility_with(
    problem: &CertificationProblem,
    delta: f64,
    opts: &SolverOptions,
) -> Result<Verdict> {
    check_delta_range(problem, delta)?;
    let (map, layout) = build_map(problem, delta)?;
    let outcome = minimize_max_eig(&map, opts);
    match outcome.status {
        FeasibilityStatus::StrictlyFeasible => {}
        FeasibilityStatus::Marginal | FeasibilityStatus::Infeasible => {
            return Ok(Verdict::Infeasible {
                margin: outcome.margin,
            })
        }
        FeasibilityStatus::NumericalFailure => {
            return Ok(Verdict::Indeterminate {
                margin: outcome.margin,
                reason: format!(
                    "solver failed after {} Newton steps",
                    outcome.newton_steps
                ),
            })
        }
    }

    let [p1, p2, p3, q] = layout.unpack(&outcome.witness);
    let cert = LkCertificate {
        p1,
        p2,
        p3,
        q,
        margin: outcome.margin,
    };
    match verify_certificate(&cert, delta, problem, opts.strictness) {
        Ok(()) => Ok(Verdict::Feasible(cert)),
        Err(reason) => Ok(Verdict::Indeterminate {
            margin: outcome.margin,
            reason,
        }),
    }
}

/// Independent re-check of a certificate: `λ_max(Θ) < −strictness` and
/// `λ_min(P₁), λ_min(Q) ≥ eps_pd`.
pub fn verify_certificate(
    cert: &LkCertificate,
    delta: f64,
    problem: &CertificationProblem,
    strictness: f64,
) -> std::result::Result<(), String> {
    let theta = cert.theta(delta, problem).map_err(|e| e.to_string())?;
    let (_, theta_max) = symmetric_extremal_eigs(&theta).map_err(|e| e.to_string())?;
    if !(theta_max < -strictness) {
        return Err(format!("re-verified lambda_max(Theta) = {theta_max:e}"));
    }
    if theta_max > cert.margin + 1e-7 * (1.0 + cert.margin.abs()) {
        return Err(format!(
            "lambda_max(Theta) = {theta_max:e} exceeds the reported margin {:e}",
            cert.margin
        ));
    }
    for (name, m) in [("P1", &cert.p1), ("Q", &cert.q)] {
        let (lo, _) = symmetric_extremal_eigs_unchecked(m);
        if !(lo >= problem.eps_pd) {
            return Err(format!("lambda_min({name}) = {lo:e} below eps_pd"));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct MaxDelta {
    /// Largest certified δ on the tolerance grid, or 0 when nothing certifies.
    pub delta: f64,
    pub certificate: Option<LkCertificate>,
    /// Some solve during the search was indeterminate and was treated as infeasible.
    pub had_indeterminate: bool,
    pub diagnostic: Option<String>,
}

/// Largest `δ = k·tol < D₀` certified by the LMI.
///
/// Feasibility is downward-closed in δ, so a bisection over the integer
/// grid `k` returns `δ` feasible with `δ + tol` infeasible (or ≥ `D₀`).
pub fn max_delta(problem: &CertificationProblem, tol: f64) -> Result<MaxDelta> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    ensure_hurwitz(&problem.closed_loop)?;
    let kmax = ((problem.d0 / tol).ceil() as i64 - 1).max(0);
    if kmax < 1 {
        return Err(Error::Precondition(format!(
            "tolerance {tol} is not smaller than D0 = {}",
            problem.d0
        )));
    }
    let mut had_indeterminate = false;
    let mut probe = |k: i64| -> Result<Option<LkCertificate>> {
        match check_feasibility(problem, k as f64 * tol)? {
            Verdict::Feasible(c) => Ok(Some(c)),
            Verdict::Infeasible { .. } => Ok(None),
            Verdict::Indeterminate { .. } => {
                had_indeterminate = true;
                Ok(None)
            }
        }
    };

    let Some(first) = probe(1)? else {
        return Ok(MaxDelta {
            delta: 0.0,
            certificate: None,
            had_indeterminate,
            diagnostic: Some(format!(
                "LMI infeasible at delta = {tol}: M is not certified at kappa = {}",
                problem.kappa
            )),
        });
    };
    if let Some(c) = probe(kmax)? {
        return Ok(MaxDelta {
            delta: kmax as f64 * tol,
            certificate: Some(c),
            had_indeterminate,
            diagnostic: None,
        });
    }
    let (mut lo, mut hi) = (1i64, kmax);
    let mut best = first;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match probe(mid)? {
            Some(c) => {
                lo = mid;
                best = c;
            }
            None => hi = mid,
        }
    }
    Ok(MaxDelta {
        delta: lo as f64 * tol,
        certificate: Some(best),
        had_indeterminate,
        diagnostic: had_indeterminate
            .then(|| "some solves were indeterminate and treated as infeasible".to_string()),
    })
}

/// Closed-form lower bound `δ*(κ)` on the certified δ:
///
/// `min(D₀, min{1 − 4κλ_M(P₂), λ_m(M⁻ᵀM⁻¹)} / (2√2 e^{κD₀} ‖Nᵀ[P₂, −M⁻ᵀP₂]‖))`
///
/// where `MᵀP₂ + P₂M = −I`; `δ* = D₀` when `N = 0`.
pub fn delta_star(problem: &CertificationProblem) -> Result<f64> {
    let m = &problem.closed_loop;
    let n = problem.order();
    let p2 = solve_lyapunov_identity(m)?;
    let (_, p2_max) = symmetric_extremal_eigs_unchecked(&p2);
    let kappa = problem.kappa;
    if !(kappa < 1.0 / (4.0 * p2_max)) {
        return Err(Error::Precondition(format!(
            "kappa = {kappa} must be below 1/(4 lambda_max(P2)) = {}",
            1.0 / (4.0 * p2_max)
        )));
    }
    if problem.mismatch.iter().all(|&v| v == 0.0) {
        return Ok(problem.d0);
    }
    let m_inv = m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("closed-loop matrix".into()))?;
    let m_inv_t = m_inv.transpose();
    let (s3_min, _) = symmetric_extremal_eigs_unchecked(&(&m_inv_t * &m_inv));
    let mut stacked = RealMatrix::zeros(n, 2 * n);
    stacked.view_mut((0, 0), (n, n)).copy_from(&p2);
    stacked.view_mut((0, n), (n, n)).copy_from(&(-(&m_inv_t * &p2)));
    let coupling = induced_norm2(&(problem.mismatch.transpose() * stacked));
    let numer = (1.0 - 4.0 * kappa * p2_max).min(s3_min);
    let bound = numer / (2.0 * 2f64.sqrt() * (kappa * problem.d0).exp() * coupling);
    Ok(problem.d0.min(bound))
}

/// `M = A + BK`, `N = e^{D₀A}BK` for a real plant.
pub fn build_problem(
    a: &RealMatrix,
    b: &RealMatrix,
    k: &RealMatrix,
    d0: f64,
    kappa: f64,
) -> Result<CertificationProblem> {
    check_system_shapes(a.shape(), b.shape(), k.shape())?;
    let bk = b * k;
    let closed = a + &bk;
    ensure_hurwitz(&closed)?;
    let mismatch = mat_exp(a, d0)? * bk;
    CertificationProblem::new(closed, mismatch, d0, kappa)
}

/// `M = R(A + BK)`, `N = R(e^{D₀A}BK)` for a complex plant.
pub fn build_problem_complex(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    k: &ComplexMatrix,
    d0: f64,
    kappa: f64,
) -> Result<CertificationProblem> {
    check_system_shapes(a.shape(), b.shape(), k.shape())?;
    let bk = b * k;
    let closed = realify(&(a + &bk));
    ensure_hurwitz(&closed)?;
    let mismatch = realify(&(mat_exp_complex(a, d0)? * bk));
    CertificationProblem::new(closed, mismatch, d0, kappa)
}

fn check_system_shapes(
    a: (usize, usize),
    b: (usize, usize),
    k: (usize, usize),
) -> Result<()> {
    let n = a.0;
    if a.1 != n || b.0 != n || k != (b.1, n) {
        return Err(Error::Dimension(format!(
            "A {a:?}, B {b:?}, K {k:?} are not conformable"
        )));
    }
    Ok(())
}

/// Decay rate guaranteed for the full modal system: `κ` when the spectral
/// gap `α` exceeds it, otherwise `0.99·α` (the admissible set is open there).
pub fn decay_rate_eta(kappa: f64, alpha: f64) -> f64 {
    if alpha > kappa {
        kappa
    } else {
        0.99 * alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn scalar(m: f64, n: f64, d0: f64, kappa: f64) -> CertificationProblem {
        CertificationProblem::new(dmatrix![m], dmatrix![n], d0, kappa).unwrap()
    }

    #[test]
    fn theta_scalar_substitution() {
        let p = scalar(-1.0, 0.0, 1.0, 0.0);
        let one = dmatrix![1.0];
        let th = assemble_theta(&one, &one, &one, &one, 0.5, &p).unwrap();
        let expect = dmatrix![-2.0, -1.0, 0.0; -1.0, -1.0, 0.0; 0.0, 0.0, -0.5];
        assert_eq!(th, expect);
    }

    #[test]
    fn theta_rejects_bad_shapes() {
        let p = scalar(-1.0, 0.0, 1.0, 0.0);
        let one = dmatrix![1.0];
        let two = RealMatrix::identity(2, 2);
        assert!(assemble_theta(&two, &one, &one, &one, 0.5, &p).is_err());
    }

    #[test]
    fn problem_validation() {
        assert!(CertificationProblem::new(dmatrix![-1.0], dmatrix![0.0], 0.0, 0.0).is_err());
        assert!(CertificationProblem::new(dmatrix![-1.0], dmatrix![0.0], 1.0, -0.1).is_err());
        assert!(CertificationProblem::new(
            dmatrix![-1.0],
            RealMatrix::zeros(2, 2),
            1.0,
            0.0
        )
        .is_err());
    }

    #[test]
    fn delta_star_examples() {
        assert_eq!(delta_star(&scalar(-1.0, 0.0, 1.0, 0.0)).unwrap(), 1.0);
        let v = delta_star(&scalar(-1.0, 1.0, 1.0, 0.0)).unwrap();
        assert!((v - 0.5).abs() < 1e-12, "{v}");
        // kappa must stay below 1/(4 lambda_max(P2)) = 0.5
        assert!(delta_star(&scalar(-1.0, 1.0, 1.0, 0.5)).is_err());
        assert!(delta_star(&scalar(1.0, 1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn scalar_feasible_below_delta_star() {
        let v = check_feasibility(&scalar(-1.0, 1.0, 1.0, 0.0), 0.4).unwrap();
        assert!(v.is_feasible());
    }

    #[test]
    fn delta_out_of_range_is_rejected() {
        let p = scalar(-1.0, 1.0, 1.0, 0.0);
        assert!(check_feasibility(&p, 0.0).is_err());
        assert!(check_feasibility(&p, 1.0).is_err());
    }

    #[test]
    fn no_mismatch_certifies_up_to_d0() {
        let p = scalar(-1.0, 0.0, 1.0, 0.0);
        let r = max_delta(&p, 1e-2).unwrap();
        assert!((r.delta - 0.99).abs() < 1e-12, "{}", r.delta);
    }

    #[test]
    fn build_problem_zero_gain() {
        let a = dmatrix![-1.0, 0.5; 0.0, -2.0];
        let b = dmatrix![1.0; 1.0];
        let k = RealMatrix::zeros(1, 2);
        let p = build_problem(&a, &b, &k, 1.0, 0.0).unwrap();
        assert_eq!(p.closed_loop, a);
        assert!(p.mismatch.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn build_problem_rejects_unstable_loop() {
        let a = dmatrix![1.0];
        let b = dmatrix![1.0];
        let k = dmatrix![0.0];
        assert!(matches!(
            build_problem(&a, &b, &k, 1.0, 0.0),
            Err(Error::NotHurwitz { .. })
        ));
    }

    #[test]
    fn build_problem_complex_scalar() {
        use num_complex::Complex64;
        let c = |re, im| ComplexMatrix::from_element(1, 1, Complex64::new(re, im));
        let d0: f64 = 0.7;
        let p = build_problem_complex(&c(0.0, 1.0), &c(1.0, 0.0), &c(-1.0, -1.0), d0, 0.0)
            .unwrap();
        assert_eq!(p.closed_loop, dmatrix![-1.0, 0.0; 0.0, -1.0]);
        // e^{i d0} (−1 − i)
        let z = Complex64::new(d0.cos(), d0.sin()) * Complex64::new(-1.0, -1.0);
        let expect = dmatrix![z.re, -z.im; z.im, z.re];
        assert!((p.mismatch - expect).amax() < 1e-13);
    }

    #[test]
    fn eta_rule() {
        assert_eq!(decay_rate_eta(0.2, 0.625), 0.2);
        assert!((decay_rate_eta(1.0, 0.5) - 0.495).abs() < 1e-15);
        assert!((decay_rate_eta(0.3, 0.3) - 0.297).abs() < 1e-15);
    }
}
