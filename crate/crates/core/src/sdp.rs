//! Max-eigenvalue minimisation over affine symmetric maps.
//!
//! Given blocks `F_i(x) = C_i + Σ_j x_j A_ij`, the solver computes
//!
//! ```text
//! t* = min_{x, t} t   s.t.   F_i(x) ⪯ t I  for every block i
//! ```
//!
//! with a primal log-barrier path-following method on the epigraph: for an
//! increasing weight `τ` it minimises `τ t − Σ_i log det(tI − F_i(x))` by damped
//! Newton steps. At an exact barrier minimiser the duality gap is `θ/τ`, where
//! `θ` is the summed block order, so the outer loop stops once `θ/τ ≤ tol_gap`.
//! The returned witness is always re-evaluated; callers are expected to check it
//! independently.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{max_asymmetry, symmetric_extremal_eigs_unchecked, RealMatrix};

pub const DEFAULT_TOL_GAP: f64 = 1e-7;
pub const DEFAULT_STRICTNESS: f64 = 1e-8;
pub const UNBOUNDED_CLAMP: f64 = -1e6;

/// One diagonal block `C + Σ x_j A_j`.
#[derive(Clone, Debug)]
pub struct SymmetricBlock {
    pub constant: RealMatrix,
    pub coefficients: Vec<RealMatrix>,
}

impl SymmetricBlock {
    pub fn order(&self) -> usize {
        self.constant.nrows()
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> RealMatrix {
        let mut out = self.constant.clone();
        for (a, &xj) in self.coefficients.iter().zip(x.iter()) {
            if xj != 0.0 {
                out += a * xj;
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct AffineSymmetricMap {
    decision_dim: usize,
    blocks: Vec<SymmetricBlock>,
}

impl AffineSymmetricMap {
    pub fn new(decision_dim: usize) -> Self {
        Self {
            decision_dim,
            blocks: Vec::new(),
        }
    }

    pub fn decision_dim(&self) -> usize {
        self.decision_dim
    }

    pub fn blocks(&self) -> &[SymmetricBlock] {
        &self.blocks
    }

    /// Adds a block after checking shapes and symmetry (to 1e-12).
    pub fn push_block(&mut self, constant: RealMatrix, coefficients: Vec<RealMatrix>) -> Result<()> {
        let order = constant.nrows();
        if constant.ncols() != order {
            return Err(Error::Dimension("block constant must be square".into()));
        }
        if coefficients.len() != self.decision_dim {
            return Err(Error::Dimension(format!(
                "block has {} coefficient matrices, decision dimension is {}",
                coefficients.len(),
                self.decision_dim
            )));
        }
        for m in std::iter::once(&constant).chain(coefficients.iter()) {
            if m.shape() != (order, order) {
                return Err(Error::Dimension(format!(
                    "coefficient of shape {:?} in a block of order {order}",
                    m.shape()
                )));
            }
            let asym = max_asymmetry(m);
            if asym > 1e-12 {
                return Err(Error::NotSymmetric(asym));
            }
        }
        self.blocks.push(SymmetricBlock {
            constant,
            coefficients,
        });
        Ok(())
    }

    pub fn evaluate(&self, x: &DVector<f64>) -> Vec<RealMatrix> {
        self.blocks.iter().map(|b| b.evaluate(x)).collect()
    }

    /// `max_i λ_max(F_i(x))`.
    pub fn max_eigenvalue(&self, x: &DVector<f64>) -> f64 {
        self.blocks
            .iter()
            .map(|b| symmetric_extremal_eigs_unchecked(&b.evaluate(x)).1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn total_order(&self) -> usize {
        self.blocks.iter().map(|b| b.order()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeasibilityStatus {
    StrictlyFeasible,
    Marginal,
    Infeasible,
    NumericalFailure,
}

#[derive(Clone, Debug)]
pub struct FeasibilityOutcome {
    pub status: FeasibilityStatus,
    /// `max_i λ_max(F_i(witness))`, an upper bound on the optimum within `tol_gap`.
    pub margin: f64,
    pub witness: DVector<f64>,
    pub newton_steps: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub tol_gap: f64,
    pub max_iters: usize,
    pub strictness: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_gap: DEFAULT_TOL_GAP,
            max_iters: 2000,
            strictness: DEFAULT_STRICTNESS,
        }
    }
}

fn classify(margin: f64, strictness: f64) -> FeasibilityStatus {
    if margin < -strictness {
        FeasibilityStatus::StrictlyFeasible
    } else if margin <= strictness {
        FeasibilityStatus::Marginal
    } else {
        FeasibilityStatus::Infeasible
    }
}

/// Barrier value and, on request, the `L⁻¹ D L⁻ᵀ` whitened directions of
/// each block at `(x, t)`. `None` when some slack is not positive definite.
struct BarrierPoint {
    value: f64,
    // per block: Cholesky factor of S = tI − F(x)
    factors: Vec<Cholesky<f64, nalgebra::Dyn>>,
}

fn barrier_point(map: &AffineSymmetricMap, x: &DVector<f64>, t: f64) -> Option<BarrierPoint> {
    let mut value = 0.0;
    let mut factors = Vec::with_capacity(map.blocks.len());
    for block in &map.blocks {
        let n = block.order();
        let slack = RealMatrix::identity(n, n) * t - block.evaluate(x);
        let chol = Cholesky::new(slack)?;
        let l = chol.l_dirty();
        let mut logdet = 0.0;
        for i in 0..n {
            let d = l[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            logdet += 2.0 * d.ln();
        }
        value -= logdet;
        factors.push(chol);
    }
    Some(BarrierPoint { value, factors })
}

/// Gradient and Hessian of `−Σ log det(tI − F(x))` w.r.t. `(x, t)`.
fn barrier_derivatives(
    map: &AffineSymmetricMap,
    point: &BarrierPoint,
) -> (DVector<f64>, DMatrix<f64>) {
    let d = map.decision_dim;
    let dim = d + 1;
    let mut grad = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    for (block, chol) in map.blocks.iter().zip(point.factors.iter()) {
        let n = block.order();
        let l = chol.l();
        // W_a = L⁻¹ D_a L⁻ᵀ with D_x = −A_j, D_t = I.
        let whiten = |m: &RealMatrix| -> RealMatrix {
            let half = l.solve_lower_triangular(m).expect("triangular solve");
            let full = l
                .solve_lower_triangular(&half.transpose())
                .expect("triangular solve");
            full.transpose()
        };
        let mut ws: Vec<Option<RealMatrix>> = Vec::with_capacity(dim);
        for a in &block.coefficients {
            if a.iter().all(|&v| v == 0.0) {
                ws.push(None);
            } else {
                ws.push(Some(-whiten(a)));
            }
        }
        ws.push(Some(whiten(&RealMatrix::identity(n, n))));
        for i in 0..dim {
            let Some(wi) = &ws[i] else { continue };
            grad[i] -= wi.trace();
            for j in i..dim {
                let Some(wj) = &ws[j] else { continue };
                let v = wi.dot(wj);
                hess[(i, j)] += v;
                if i != j {
                    hess[(j, i)] += v;
                }
            }
        }
    }
    (grad, hess)
}

/// Solves `H s = −g` after symmetric Jacobi scaling, with a tiny ridge.
fn newton_direction(hess: &DMatrix<f64>, grad: &DVector<f64>) -> Option<DVector<f64>> {
    let dim = grad.len();
    let scale: DVector<f64> = DVector::from_fn(dim, |i, _| {
        let h = hess[(i, i)];
        if h > 0.0 {
            1.0 / h.sqrt()
        } else {
            1.0
        }
    });
    let mut scaled = DMatrix::from_fn(dim, dim, |i, j| hess[(i, j)] * scale[i] * scale[j]);
    for i in 0..dim {
        scaled[(i, i)] += 1e-13;
    }
    let rhs = -grad.component_mul(&scale);
    let y = match Cholesky::new(scaled.clone()) {
        Some(ch) => ch.solve(&rhs),
        None => scaled.lu().solve(&rhs)?,
    };
    Some(y.component_mul(&scale))
}

/// `min t` s.t. every block `⪯ tI`. See the module docs for the method.
pub fn minimize_max_eig(map: &AffineSymmetricMap, opts: &SolverOptions) -> FeasibilityOutcome {
    let d = map.decision_dim;
    let theta = map.total_order().max(1) as f64;
    let mut x = DVector::zeros(d);

    let failure = |x: DVector<f64>, steps: usize| {
        let margin = map.max_eigenvalue(&x);
        FeasibilityOutcome {
            status: FeasibilityStatus::NumericalFailure,
            margin,
            witness: x,
            newton_steps: steps,
        }
    };

    if map.blocks.is_empty() {
        return FeasibilityOutcome {
            status: FeasibilityStatus::StrictlyFeasible,
            margin: f64::NEG_INFINITY,
            witness: x,
            newton_steps: 0,
        };
    }
    let start = map.max_eigenvalue(&x);
    if !start.is_finite() || !(opts.tol_gap > 0.0) {
        return failure(x, 0);
    }
    // No decision variables: the answer is just the current maximum.
    if d == 0 || map
        .blocks
        .iter()
        .all(|b| b.coefficients.iter().all(|a| a.iter().all(|&v| v == 0.0)))
    {
        return FeasibilityOutcome {
            status: classify(start, opts.strictness),
            margin: start,
            witness: x,
            newton_steps: 0,
        };
    }

    let mut t = start + 1.0;
    let mut tau = theta / (1.0 + start.abs());
    let mut steps = 0usize;
    let mu = 8.0;

    loop {
        // Centering by damped Newton.
        loop {
            let Some(point) = barrier_point(map, &x, t) else {
                return failure(x, steps);
            };
            let (mut grad, hess) = barrier_derivatives(map, &point);
            grad[d] += tau;
            let Some(step) = newton_direction(&hess, &grad) else {
                return failure(x, steps);
            };
            let decrement = -grad.dot(&step);
            if !decrement.is_finite() {
                return failure(x, steps);
            }
            if decrement <= 2e-10 {
                break;
            }
            steps += 1;
            if steps > opts.max_iters {
                return failure(x, steps);
            }

            let f0 = tau * t + point.value;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let xn = &x + step.rows(0, d) * alpha;
                let tn = t + step[d] * alpha;
                if let Some(p) = barrier_point(map, &xn, tn) {
                    let fnew = tau * tn + p.value;
                    if fnew < f0 && fnew <= f0 - 0.01 * alpha * decrement {
                        x = xn;
                        t = tn;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                // Newton direction stalls only at machine precision; treat as centred.
                break;
            }
            if t < UNBOUNDED_CLAMP {
                let margin = map.max_eigenvalue(&x);
                return FeasibilityOutcome {
                    status: FeasibilityStatus::StrictlyFeasible,
                    margin: margin.min(t),
                    witness: x,
                    newton_steps: steps,
                };
            }
        }
        if theta / tau <= opts.tol_gap {
            break;
        }
        tau *= mu;
    }

    let margin = map.max_eigenvalue(&x);
    if !margin.is_finite() {
        return failure(x, steps);
    }
    FeasibilityOutcome {
        status: classify(margin, opts.strictness),
        margin,
        witness: x,
        newton_steps: steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn constant_block_without_variables() {
        let mut map = AffineSymmetricMap::new(0);
        map.push_block(dmatrix![-2.0], vec![]).unwrap();
        let out = minimize_max_eig(&map, &SolverOptions::default());
        assert_eq!(out.status, FeasibilityStatus::StrictlyFeasible);
        assert_eq!(out.margin, -2.0);
    }

    #[test]
    fn free_direction_is_clamped() {
        let mut map = AffineSymmetricMap::new(1);
        map.push_block(RealMatrix::zeros(2, 2), vec![RealMatrix::identity(2, 2)])
            .unwrap();
        let out = minimize_max_eig(&map, &SolverOptions::default());
        assert_eq!(out.status, FeasibilityStatus::StrictlyFeasible);
        assert!(out.margin <= -1e6, "margin {}", out.margin);
        // witness reproduces the margin
        assert!((map.max_eigenvalue(&out.witness) - out.margin).abs() <= 1e-7 * out.margin.abs());
    }

    #[test]
    fn bounded_problem_reaches_known_optimum() {
        // blocks [x, 1; 1, -x] has λ_max = sqrt(x² + 1) ≥ 1, optimum 1 at x = 0
        let mut map = AffineSymmetricMap::new(1);
        map.push_block(dmatrix![0.0, 1.0; 1.0, 0.0], vec![dmatrix![1.0, 0.0; 0.0, -1.0]])
            .unwrap();
        let out = minimize_max_eig(&map, &SolverOptions::default());
        assert_eq!(out.status, FeasibilityStatus::Infeasible);
        assert!((out.margin - 1.0).abs() < 1e-7, "margin {}", out.margin);
    }

    #[test]
    fn two_blocks_compete() {
        // x ⪯ t and -x - 1 ⪯ t  →  t* = -1/2
        let mut map = AffineSymmetricMap::new(1);
        map.push_block(dmatrix![0.0], vec![dmatrix![1.0]]).unwrap();
        map.push_block(dmatrix![-1.0], vec![dmatrix![-1.0]]).unwrap();
        let out = minimize_max_eig(&map, &SolverOptions::default());
        assert_eq!(out.status, FeasibilityStatus::StrictlyFeasible);
        assert!((out.margin + 0.5).abs() < 1e-7);
    }

    #[test]
    fn rejects_asymmetric_coefficients() {
        let mut map = AffineSymmetricMap::new(1);
        let err = map
            .push_block(RealMatrix::zeros(2, 2), vec![dmatrix![0.0, 1.0; 0.0, 0.0]])
            .unwrap_err();
        assert!(matches!(err, Error::NotSymmetric(_)));
    }

    #[test]
    fn rejects_wrong_coefficient_count() {
        let mut map = AffineSymmetricMap::new(2);
        assert!(map.push_block(dmatrix![1.0], vec![dmatrix![1.0]]).is_err());
    }

    #[test]
    fn iteration_budget_exhaustion_is_a_failure() {
        let mut map = AffineSymmetricMap::new(1);
        map.push_block(dmatrix![0.0, 1.0; 1.0, 0.0], vec![dmatrix![1.0, 0.0; 0.0, -1.0]])
            .unwrap();
        let opts = SolverOptions {
            max_iters: 1,
            ..SolverOptions::default()
        };
        let out = minimize_max_eig(&map, &opts);
        assert_eq!(out.status, FeasibilityStatus::NumericalFailure);
    }
}
