//! Dense real/complex kernels shared by the certification and simulation code.
//!
//! Matrices are plain `nalgebra` dynamic matrices. Decompositions (Schur, SVD,
//! symmetric eigen, LU) come from `nalgebra`; the matrix exponential, the
//! Lyapunov solver and the pole placement are implemented here.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type ComplexMatrix = DMatrix<Complex64>;

/// Eigenvalues of a square matrix, in the order returned by the Schur form.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum(pub Vec<Complex64>);

impl Spectrum {
    pub fn max_re(&self) -> f64 {
        self.0.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn ensure_square<T: nalgebra::Scalar>(m: &DMatrix<T>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

// ---------------------------------------------------------------------------
// Matrix exponential

// Padé(13) numerator coefficients and the matching 1-norm threshold.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `e^{tA}` by scaling and squaring with a diagonal Padé(13) approximant.
pub fn mat_exp(a: &RealMatrix, t: f64) -> Result<RealMatrix> {
    let n = ensure_square(a, "matrix exponential argument")?;
    if !t.is_finite() {
        return Err(Error::Precondition(format!("non-finite time {t}")));
    }
    let mut x = a * t;
    if n == 0 {
        return Ok(x);
    }
    let norm1 = x
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    if !norm1.is_finite() {
        return Err(Error::Numerical("non-finite matrix in exponential".into()));
    }
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if squarings > 0 {
        x /= 2f64.powi(squarings);
    }

    let b = &PADE13;
    let ident = RealMatrix::identity(n, n);
    let x2 = &x * &x;
    let x4 = &x2 * &x2;
    let x6 = &x4 * &x2;
    let u_inner = &x6 * (&x6 * b[13] + &x4 * b[11] + &x2 * b[9])
        + &x6 * b[7]
        + &x4 * b[5]
        + &x2 * b[3]
        + &ident * b[1];
    let u = &x * u_inner;
    let v = &x6 * (&x6 * b[12] + &x4 * b[10] + &x2 * b[8])
        + &x6 * b[6]
        + &x4 * b[4]
        + &x2 * b[2]
        + &ident * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut r = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Singular("Padé denominator".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// `e^{tA}` for complex `A`, through the realification homomorphism.
pub fn mat_exp_complex(a: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let n = ensure_square(a, "matrix exponential argument")?;
    let e = mat_exp(&realify(a), t)?;
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        Complex64::new(e[(i, j)], e[(n + i, j)])
    }))
}

// ---------------------------------------------------------------------------
// Spectra and norms

/// Shifted QR occasionally cycles on matrices with exactly paired eigenvalues
/// (realified complex matrices). Retries with a larger budget, then on a fixed
/// orthogonal similarity, which leaves the spectrum unchanged.
fn schur_with_retry<T: nalgebra::ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Result<Schur<T, nalgebra::Dyn>> {
    let n = a.nrows();
    if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, 100 * n).or_else(|| Schur::try_new(a.clone(), f64::EPSILON, 2000 * n)) {
        return Ok(s);
    }
    let v = DVector::from_fn(n, |i, _| 1.0 + 0.37 * i as f64);
    let h = (DMatrix::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared())).map(T::from_real);
    Schur::try_new(&h * a * &h, f64::EPSILON, 2000 * n)
        .ok_or_else(|| Error::Numerical("QR iteration did not converge".into()))
}

/// Eigenvalues through a real Schur decomposition (Hessenberg + shifted QR).
pub fn spectrum(a: &RealMatrix) -> Result<Spectrum> {
    let n = ensure_square(a, "eigenvalue argument")?;
    if n == 0 {
        return Ok(Spectrum(Vec::new()));
    }
    let schur = schur_with_retry(a)?;
    Ok(Spectrum(schur.complex_eigenvalues().iter().copied().collect()))
}

pub fn spectrum_complex(a: &ComplexMatrix) -> Result<Spectrum> {
    let n = ensure_square(a, "eigenvalue argument")?;
    if n == 0 {
        return Ok(Spectrum(Vec::new()));
    }
    let (_, t) = schur_with_retry(a)?.unpack();
    Ok(Spectrum((0..n).map(|i| t[(i, i)]).collect()))
}

/// `max Re λ` over the spectrum. A matrix is Hurwitz iff this is negative.
pub fn spectral_abscissa(a: &RealMatrix) -> Result<f64> {
    Ok(spectrum(a)?.max_re())
}

pub fn spectral_abscissa_complex(a: &ComplexMatrix) -> Result<f64> {
    Ok(spectrum_complex(a)?.max_re())
}

pub fn ensure_hurwitz(a: &RealMatrix) -> Result<f64> {
    let abscissa = spectral_abscissa(a)?;
    if abscissa < 0.0 {
        Ok(abscissa)
    } else {
        Err(Error::NotHurwitz { abscissa })
    }
}

/// Largest singular value.
pub fn induced_norm2(a: &RealMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn max_asymmetry(p: &RealMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..p.nrows() {
        for j in (i + 1)..p.ncols() {
            worst = worst.max((p[(i, j)] - p[(j, i)]).abs());
        }
    }
    worst
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn symmetric_extremal_eigs(p: &RealMatrix) -> Result<(f64, f64)> {
    let n = ensure_square(p, "symmetric eigenvalue argument")?;
    if n == 0 {
        return Err(Error::Dimension("empty matrix has no eigenvalues".into()));
    }
    let scale = p.amax().max(1.0);
    let asym = max_asymmetry(p);
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(symmetric_extremal_eigs_unchecked(p))
}

/// Same as [`symmetric_extremal_eigs`] but symmetrises instead of checking.
pub(crate) fn symmetric_extremal_eigs_unchecked(p: &RealMatrix) -> (f64, f64) {
    let sym = (p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

// ---------------------------------------------------------------------------
// Lyapunov, realification, controllability

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &RealMatrix, b: &RealMatrix) -> RealMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    RealMatrix::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// The unique `P` with `MᵀP + PM = −I`, for Hurwitz `M`.
///
/// Solved by vectorisation: `(I ⊗ Mᵀ + Mᵀ ⊗ I) vec P = −vec I`.
pub fn solve_lyapunov_identity(m: &RealMatrix) -> Result<RealMatrix> {
    let n = ensure_square(m, "Lyapunov argument")?;
    ensure_hurwitz(m)?;
    let ident = RealMatrix::identity(n, n);
    let mt = m.transpose();
    let op = kron(&ident, &mt) + kron(&mt, &ident);
    let rhs = DVector::from_iterator(n * n, ident.iter().map(|v| -v));
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Lyapunov operator".into()))?;
    let p = RealMatrix::from_column_slice(n, n, sol.as_slice());
    Ok((&p + p.transpose()) * 0.5)
}

/// `R(M) = [Re M, −Im M; Im M, Re M]`.
pub fn realify(m: &ComplexMatrix) -> RealMatrix {
    let (r, c) = m.shape();
    RealMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

pub fn complexify(m: &RealMatrix) -> ComplexMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

fn controllability_matrix<T>(a: &DMatrix<T>, b: &DMatrix<T>) -> Result<DMatrix<T>>
where
    T: nalgebra::ComplexField,
{
    let n = ensure_square(a, "state matrix")?;
    if b.nrows() != n {
        return Err(Error::Dimension(format!(
            "input matrix has {} rows, state dimension is {n}",
            b.nrows()
        )));
    }
    let m = b.ncols();
    let mut out = DMatrix::<T>::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = a * &block;
    }
    Ok(out)
}

fn numerical_rank(c: &RealMatrix) -> usize {
    if c.is_empty() {
        return 0;
    }
    let sv = c.clone().svd(false, false).singular_values;
    let top = sv.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-9 * top).count()
}

/// Rank of `[B, AB, …, A^{n−1}B]`, relative tolerance `1e−9·σ_max`.
pub fn controllability_rank(a: &RealMatrix, b: &RealMatrix) -> Result<usize> {
    Ok(numerical_rank(&controllability_matrix(a, b)?))
}

pub fn controllability_rank_complex(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<usize> {
    // rank R(C) = 2 rank C
    Ok(numerical_rank(&realify(&controllability_matrix(a, b)?)) / 2)
}

// ---------------------------------------------------------------------------
// Pole placement

/// Greedy nearest matching of two eigenvalue multisets; returns the worst distance.
pub fn spectrum_mismatch(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut pool: Vec<Complex64> = b.to_vec();
    let mut worst = 0.0f64;
    for z in a {
        let (idx, dist) = pool
            .iter()
            .enumerate()
            .map(|(i, w)| (i, (z - w).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, cur| {
                if cur.1 < acc.1 {
                    cur
                } else {
                    acc
                }
            });
        worst = worst.max(dist);
        pool.swap_remove(idx);
    }
    worst
}

/// Real block-diagonal form of a conjugate-closed target list: one 1×1 block
/// per real target, one `[a b; −b a]` block per pair `a ± ib`.
fn real_target_matrix(targets: &[Complex64]) -> Result<RealMatrix> {
    let n = targets.len();
    let scale = targets.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let tol = 1e-10 * scale;
    let mut used = vec![false; n];
    let mut lambda = RealMatrix::zeros(n, n);
    let mut pos = 0;
    for i in 0..n {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = targets[i];
        if z.im.abs() <= tol {
            lambda[(pos, pos)] = z.re;
            pos += 1;
            continue;
        }
        let partner = (0..n)
            .find(|&j| !used[j] && (targets[j] - z.conj()).norm() <= tol)
            .ok_or_else(|| {
                Error::Placement(format!("target {z} has no conjugate partner"))
            })?;
        used[partner] = true;
        let (re, im) = (z.re, z.im.abs());
        lambda[(pos, pos)] = re;
        lambda[(pos, pos + 1)] = im;
        lambda[(pos + 1, pos)] = -im;
        lambda[(pos + 1, pos + 1)] = re;
        pos += 2;
    }
    Ok(lambda)
}

/// Parameter matrices `G` offered to the Sylvester placement.
///
/// Small problems (`mn ≤ 8`) enumerate every nonzero `G ∈ {−1, 0, 1}^{m×n}`;
/// larger ones use a few fixed patterns, the first routing state column `j`
/// to input `j mod m`.
fn gain_candidates(m: usize, n: usize) -> Vec<RealMatrix> {
    if m * n <= 8 {
        let count = 3usize.pow((m * n) as u32);
        return (1..count)
            .map(|code| {
                let mut c = code;
                RealMatrix::from_fn(m, n, |_, _| {
                    let digit = (c % 3) as f64 - 1.0;
                    c /= 3;
                    digit
                })
            })
            .collect();
    }
    (0..6)
        .map(|k| match k {
            0 => RealMatrix::from_fn(m, n, |i, j| if j % m == i { 1.0 } else { 0.0 }),
            1 => RealMatrix::from_element(m, n, 1.0),
            k => RealMatrix::from_fn(m, n, |i, j| (((i + 1) * (j + 2) * (k + 3)) % 7) as f64 - 3.0),
        })
        .collect()
}

/// Indices ordered by norm, earliest first on ties.
fn smallest_norm(norms: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..norms.len()).collect();
    order.sort_by(|&i, &j| norms[i].total_cmp(&norms[j]));
    order
}

/// State feedback `K` such that `sp(A + BK)` equals `targets`.
///
/// The closed loop is parametrised as `(A + BK)X = XΛ`, with `Λ` the real
/// block form of the targets. Fixing `G = KX` turns this into the Sylvester
/// equation `AX − XΛ = −BG`; then `K = G X⁻¹`. Among the candidate `G`s the
/// smallest-norm `K` that reproduces the targets is returned. If the targets already coincide with `sp(A)` the zero gain is returned.
pub fn place_poles(a: &RealMatrix, b: &RealMatrix, targets: &[Complex64]) -> Result<RealMatrix> {
    let n = ensure_square(a, "state matrix")?;
    if b.nrows() != n {
        return Err(Error::Dimension("input matrix row count".into()));
    }
    if targets.len() != n {
        return Err(Error::Dimension(format!(
            "{} targets for a state of dimension {n}",
            targets.len()
        )));
    }
    let m = b.ncols();
    if controllability_rank(a, b)? < n {
        return Err(Error::Placement("pair (A, B) is not controllable".into()));
    }
    let open = spectrum(a)?;
    let scale = targets.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if spectrum_mismatch(&open.0, targets) <= 1e-12 * scale {
        return Ok(RealMatrix::zeros(m, n));
    }
    let lambda = real_target_matrix(targets)?;

    let ident = RealMatrix::identity(n, n);
    let op = kron(&ident, a) - kron(&lambda.transpose(), &ident);
    let lu = op.lu();
    let mut gains = Vec::new();
    for g in gain_candidates(m, n) {
        let rhs = -(b * &g);
        let Some(sol) = lu.solve(&DVector::from_column_slice(rhs.as_slice())) else {
            return Err(Error::Placement(
                "targets overlap the open-loop spectrum".into(),
            ));
        };
        let x = RealMatrix::from_column_slice(n, n, sol.as_slice());
        let Some(x_inv) = x.try_inverse() else {
            continue;
        };
        let k = &g * x_inv;
        if k.iter().all(|v| v.is_finite()) {
            gains.push(k);
        }
    }
    let norms: Vec<f64> = gains.iter().map(|k| k.norm()).collect();
    for i in smallest_norm(&norms) {
        let closed = spectrum(&(a + b * &gains[i]))?;
        if spectrum_mismatch(&closed.0, targets) <= 1e-6 * scale {
            return Ok(gains.swap_remove(i));
        }
    }
    Err(Error::Placement(
        "no parameter pattern produced an accurate placement".into(),
    ))
}

/// Complex counterpart of [`place_poles`]; targets need not be conjugate-closed.
pub fn place_poles_complex(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    targets: &[Complex64],
) -> Result<ComplexMatrix> {
    let n = ensure_square(a, "state matrix")?;
    if b.nrows() != n || targets.len() != n {
        return Err(Error::Dimension("placement data".into()));
    }
    let m = b.ncols();
    if controllability_rank_complex(a, b)? < n {
        return Err(Error::Placement("pair (A, B) is not controllable".into()));
    }
    let open = spectrum_complex(a)?;
    let scale = targets.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if spectrum_mismatch(&open.0, targets) <= 1e-12 * scale {
        return Ok(ComplexMatrix::zeros(m, n));
    }
    let ident = ComplexMatrix::identity(n, n);
    // vec(AX − XΛ) = (I ⊗ A − Λᵀ ⊗ I) vec X, with Λ diagonal.
    let mut op = ComplexMatrix::zeros(n * n, n * n);
    for col in 0..n {
        let base = col * n;
        op.view_mut((base, base), (n, n))
            .copy_from(&(a - &ident * targets[col]));
    }
    let lu = op.lu();
    let mut gains = Vec::new();
    for g in gain_candidates(m, n) {
        let g = complexify(&g);
        let rhs = -(b * &g);
        let Some(sol) = lu.solve(&nalgebra::DVector::from_column_slice(rhs.as_slice())) else {
            return Err(Error::Placement(
                "targets overlap the open-loop spectrum".into(),
            ));
        };
        let x = ComplexMatrix::from_column_slice(n, n, sol.as_slice());
        let Some(x_inv) = x.try_inverse() else {
            continue;
        };
        let k = &g * x_inv;
        if k.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            gains.push(k);
        }
    }
    let norms: Vec<f64> = gains.iter().map(|k| k.norm()).collect();
    for i in smallest_norm(&norms) {
        let closed = spectrum_complex(&(a + b * &gains[i]))?;
        if spectrum_mismatch(&closed.0, targets) <= 1e-6 * scale {
            return Ok(gains.swap_remove(i));
        }
    }
    Err(Error::Placement(
        "no parameter pattern produced an accurate placement".into(),
    ))
}
