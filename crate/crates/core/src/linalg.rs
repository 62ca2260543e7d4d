//! Dense complex linear algebra kernel.
//!
//! Thin layer over `faer` that fixes the conventions used by the rest of the
//! crate: eigenvalues ascending, tolerances relative to matrix norms, and
//! explicit handling of empty (0-dimensional) operands, which `faer` does not
//! always accept.

pub use faer::c64;
use faer::linalg::solvers::Solve;
use faer::{Col, Mat, MatRef, Side};

use crate::error::{contract, Error, Result};

pub type CMatrix = Mat<c64>;
pub type CVector = Col<c64>;

pub const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
pub const ONE: c64 = c64 { re: 1.0, im: 0.0 };
pub const I: c64 = c64 { re: 0.0, im: 1.0 };

#[inline]
pub fn cr(re: f64) -> c64 {
    c64::new(re, 0.0)
}

/// Spectral decomposition `M = U diag(λ) U^H` of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EighResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `i` belongs to `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

/// Kept part of a PSD matrix after dropping the (numerical) null space.
#[derive(Clone, Debug)]
pub struct NullspaceSplit {
    pub kept_basis: CMatrix,
    pub kept_eigenvalues: Vec<f64>,
    /// Smallest eigenvalue of the input, kept or not.
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    Mat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMatrix {
    Mat::identity(n, n)
}

pub fn from_real_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMatrix {
    Mat::from_fn(rows, cols, |i, j| cr(f(i, j)))
}

pub fn diag(values: &[c64]) -> CMatrix {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { values[i] } else { ZERO })
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    Mat::from_fn(n, n, |i, j| if i == j { cr(values[i]) } else { ZERO })
}

pub fn adjoint(m: MatRef<'_, c64>) -> CMatrix {
    m.adjoint().to_owned()
}

pub fn scaled(m: MatRef<'_, c64>, s: c64) -> CMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s)
}

/// `a + s·b`, entrywise.
pub fn axpy(a: MatRef<'_, c64>, s: c64, b: MatRef<'_, c64>) -> CMatrix {
    assert_eq!(a.shape(), b.shape());
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + s * b[(i, j)])
}

pub fn matmul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    if a.nrows() == 0 || b.ncols() == 0 {
        return zeros(a.nrows(), b.ncols());
    }
    if a.ncols() == 0 {
        return zeros(a.nrows(), b.ncols());
    }
    a * b
}

/// `a^H b`.
pub fn adj_mul(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "adj_mul shape mismatch");
    if a.ncols() == 0 || b.ncols() == 0 || a.nrows() == 0 {
        return zeros(a.ncols(), b.ncols());
    }
    a.adjoint() * b
}

/// `a b^H`.
pub fn mul_adj(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMatrix {
    assert_eq!(a.ncols(), b.ncols(), "mul_adj shape mismatch");
    if a.nrows() == 0 || b.nrows() == 0 || a.ncols() == 0 {
        return zeros(a.nrows(), b.nrows());
    }
    a * b.adjoint()
}

pub fn matvec(a: MatRef<'_, c64>, x: &CVector) -> CVector {
    assert_eq!(a.ncols(), x.nrows(), "matvec shape mismatch");
    if a.nrows() == 0 || a.ncols() == 0 {
        return Col::zeros(a.nrows());
    }
    a * x
}

/// `⟨x, y⟩ = y^H x`, linear in `x`.
pub fn inner(x: &CVector, y: &CVector) -> c64 {
    assert_eq!(x.nrows(), y.nrows());
    (0..x.nrows()).fold(ZERO, |acc, i| acc + x[i] * y[i].conj())
}

/// `y^H M x`.
pub fn sesq(m: MatRef<'_, c64>, x: &CVector, y: &CVector) -> c64 {
    inner(&matvec(m, x), y)
}

pub fn vnorm(x: &CVector) -> f64 {
    x.norm_l2()
}

pub fn col_of(m: MatRef<'_, c64>, j: usize) -> CVector {
    Col::from_fn(m.nrows(), |i| m[(i, j)])
}

pub fn as_column_matrix(x: &CVector) -> CMatrix {
    Mat::from_fn(x.nrows(), 1, |i, _| x[i])
}

pub fn frob(m: MatRef<'_, c64>) -> f64 {
    m.norm_l2()
}

pub fn is_finite(m: MatRef<'_, c64>) -> bool {
    m.is_all_finite()
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: MatRef<'_, c64>) -> CMatrix {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

/// `(M - M^H) / (2i)`, Hermitian.
pub fn skew_part(m: MatRef<'_, c64>) -> CMatrix {
    let n = m.nrows();
    Mat::from_fn(n, n, |i, j| {
        let d = (m[(i, j)] - m[(j, i)].conj()) * 0.5;
        // d / i = -i d
        c64::new(d.im, -d.re)
    })
}

pub fn hermitian_defect(m: MatRef<'_, c64>) -> f64 {
    let n = m.nrows();
    let mut acc = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt()
}

fn check_hermitian(m: MatRef<'_, c64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(contract(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !m.is_all_finite() {
        return Err(contract("matrix has non-finite entries"));
    }
    let scale = frob(m);
    if hermitian_defect(m) > 1e-12 * scale {
        return Err(contract(format!(
            "matrix is not Hermitian (defect {:e} vs norm {:e})",
            hermitian_defect(m),
            scale
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
///
/// The input is symmetrized before factorization; the Hermitian check uses
/// Frobenius norms.
pub fn hermitian_eig(m: MatRef<'_, c64>) -> Result<EighResult> {
    check_hermitian(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(EighResult {
            eigenvalues: Vec::new(),
            eigenvectors: zeros(0, 0),
        });
    }
    let h = hermitian_part(m);
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Internal(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let u = evd.U();
    let eigenvalues = order.iter().map(|&k| s[k].re).collect();
    let eigenvectors = Mat::from_fn(n, n, |i, j| u[(i, order[j])]);
    Ok(EighResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    check_hermitian(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev = hermitian_part(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Internal(format!("eigenvalue computation failed: {e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

pub fn singular_values(m: MatRef<'_, c64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = m.singular_values().expect(SVD_FAILED);
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value; 0 for empty matrices.
pub fn spectral_norm(m: MatRef<'_, c64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let f = frob(m);
    if f == 0.0 {
        return 0.0;
    }
    if m.nrows() == m.ncols() && hermitian_defect(m) <= 1e-14 * f {
        let ev = hermitian_part(m)
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("eigenvalue computation failed");
        return ev.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    }
    singular_values(m)[0]
}

pub fn one_norm(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `A X = B` by partial-pivoting LU.
pub fn solve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<CMatrix> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(contract("solve: shape mismatch"));
    }
    if a.nrows() == 0 || b.ncols() == 0 {
        return Ok(zeros(a.nrows(), b.ncols()));
    }
    let x = a.partial_piv_lu().solve(b);
    if !x.is_all_finite() {
        return Err(Error::Internal("singular system in LU solve".into()));
    }
    Ok(x)
}

pub fn solve_vec(a: MatRef<'_, c64>, b: &CVector) -> Result<CVector> {
    let x = solve(a, as_column_matrix(b).as_ref())?;
    Ok(col_of(x.as_ref(), 0))
}

pub fn inverse(a: MatRef<'_, c64>) -> Result<CMatrix> {
    solve(a, identity(a.nrows()).as_ref())
}

/// Splits a PSD Hermitian matrix into the eigenpairs with `λ > rel_tol·λ_max`.
///
/// Negative eigenvalues produced by rounding are dropped with the null space.
/// If every eigenvalue is below the cutoff the kept basis is empty.
pub fn nullspace_split(g: MatRef<'_, c64>, rel_tol: f64) -> Result<NullspaceSplit> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(contract(format!("rel_tol must lie in (0,1), got {rel_tol}")));
    }
    let n = g.nrows();
    let eig = hermitian_eig(g)?;
    if n == 0 {
        return Ok(NullspaceSplit {
            kept_basis: zeros(0, 0),
            kept_eigenvalues: Vec::new(),
            min_eigenvalue: 0.0,
            max_eigenvalue: 0.0,
        });
    }
    let lmax = eig.eigenvalues[n - 1];
    let lmin = eig.eigenvalues[0];
    let kept: Vec<usize> = if lmax > 0.0 {
        (0..n)
            .filter(|&k| eig.eigenvalues[k] > rel_tol * lmax)
            .collect()
    } else {
        Vec::new()
    };
    let kept_basis = Mat::from_fn(n, kept.len(), |i, j| eig.eigenvectors[(i, kept[j])]);
    Ok(NullspaceSplit {
        kept_basis,
        kept_eigenvalues: kept.iter().map(|&k| eig.eigenvalues[k]).collect(),
        min_eigenvalue: lmin,
        max_eigenvalue: lmax,
    })
}

const SVD_FAILED: &str = "SVD did not converge (non-finite input?)";

/// Orthonormal basis of the column space, singular-value cutoff `rel_tol·σ_max`.
pub fn column_space(m: MatRef<'_, c64>, rel_tol: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 || frob(m) == 0.0 {
        return zeros(rows, 0);
    }
    let svd = m.thin_svd().expect(SVD_FAILED);
    let s = svd.S().column_vector();
    let k = s.nrows();
    let smax = (0..k).map(|i| s[i].re).fold(0.0, f64::max);
    let keep: Vec<usize> = (0..k).filter(|&i| s[i].re > rel_tol * smax).collect();
    let u = svd.U();
    Mat::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis of the null space `{x : M x = 0}`.
pub fn null_space(m: MatRef<'_, c64>, rel_tol: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return zeros(0, 0);
    }
    if rows == 0 || frob(m) == 0.0 {
        return identity(cols);
    }
    let svd = m.svd().expect(SVD_FAILED);
    let s = svd.S().column_vector();
    let k = s.nrows();
    let smax = (0..k).map(|i| s[i].re).fold(0.0, f64::max);
    let rank = (0..k).filter(|&i| s[i].re > rel_tol * smax).count();
    let v = svd.V();
    let null: Vec<usize> = (0..cols)
        .filter(|&j| j >= k || s[j].re <= rel_tol * smax)
        .collect();
    debug_assert_eq!(null.len(), cols - rank);
    Mat::from_fn(cols, null.len(), |i, j| v[(i, null[j])])
}

/// Orthonormal basis of the orthogonal complement of the column space.
pub fn orthogonal_complement(m: MatRef<'_, c64>, rel_tol: f64) -> CMatrix {
    null_space(m.adjoint().to_owned().as_ref(), rel_tol)
}

/// Minimum-norm least-squares solution of `A X ≈ B` (SVD, cutoff `rel_tol·σ_max`).
pub fn least_squares(a: MatRef<'_, c64>, b: MatRef<'_, c64>, rel_tol: f64) -> CMatrix {
    let (rows, cols) = a.shape();
    assert_eq!(rows, b.nrows());
    if rows == 0 || cols == 0 || frob(a) == 0.0 {
        return zeros(cols, b.ncols());
    }
    let svd = a.thin_svd().expect(SVD_FAILED);
    let s = svd.S().column_vector();
    let k = s.nrows();
    let smax = (0..k).map(|i| s[i].re).fold(0.0, f64::max);
    let u = svd.U();
    let v = svd.V();
    let keep: Vec<usize> = (0..k).filter(|&i| s[i].re > rel_tol * smax).collect();
    let uk = Mat::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])]);
    let vk = Mat::from_fn(cols, keep.len(), |i, j| v[(i, keep[j])] / s[keep[j]].re);
    let ub = adj_mul(uk.as_ref(), b);
    matmul(vk.as_ref(), ub.as_ref())
}

/// Principal angles between `span(a)` and `span(b)`, ascending.
///
/// Uses the singular values of `[Qa Qb]`, which equal `√2·sin(θ/2)` for the
/// smallest `min(p, q)` of them; this keeps small angles accurate where the
/// `acos` of the cosines would lose half the digits.
pub fn principal_angles(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Vec<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let qa = column_space(a, 1e-12);
    let qb = column_space(b, 1e-12);
    let (p, q) = (qa.ncols(), qb.ncols());
    let k = p.min(q);
    if k == 0 {
        return Vec::new();
    }
    let n = a.nrows();
    let stacked = hstack(&[qa.as_ref(), qb.as_ref()]);
    let mut s = singular_values(stacked.as_ref());
    // p + q > n forces p + q - n exact zeros that a thin SVD does not return.
    while s.len() < p + q {
        s.push(0.0);
    }
    let _ = n;
    s.sort_by(f64::total_cmp);
    s.iter()
        .take(k)
        .map(|&sv| 2.0 * (sv / std::f64::consts::SQRT_2).min(1.0).asin())
        .collect()
}

pub fn hstack(blocks: &[MatRef<'_, c64>]) -> CMatrix {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows);
        for j in 0..b.ncols() {
            for i in 0..rows {
                out[(i, off + j)] = b[(i, j)];
            }
        }
        off += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[MatRef<'_, c64>]) -> CMatrix {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols);
        for j in 0..cols {
            for i in 0..b.nrows() {
                out[(off + i, j)] = b[(i, j)];
            }
        }
        off += b.nrows();
    }
    out
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
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
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.53939833006323e-1,
    9.504178996162932e-1,
    2.097847961257068,
    5.371920351148152,
];

/// Beyond this 1-norm of `t·M` the exponential is refused: the squaring phase
/// would need more than 40 steps. Overflow is detected on the result.
pub const EXP_NORM_GUARD: f64 = 1e12;

/// `exp(t·M)`.
///
/// Hermitian `t·M` is exponentiated through its eigendecomposition; anything
/// else uses scaling and squaring with a Padé approximant of degree 3–13
/// chosen from the 1-norm (Higham 2005).
pub fn matrix_exp(m: MatRef<'_, c64>, t: f64) -> Result<CMatrix> {
    if m.nrows() != m.ncols() {
        return Err(contract("matrix_exp: matrix must be square"));
    }
    if !t.is_finite() || !m.is_all_finite() {
        return Err(contract("matrix_exp: non-finite input"));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let a = scaled(m, cr(t));
    let norm1 = one_norm(a.as_ref());
    if norm1 > EXP_NORM_GUARD {
        return Err(Error::Range(format!(
            "matrix_exp: ||tM||_1 = {norm1:e} exceeds guard {EXP_NORM_GUARD}"
        )));
    }
    if norm1 == 0.0 {
        return Ok(identity(n));
    }
    let f = frob(a.as_ref());
    if hermitian_defect(a.as_ref()) <= 1e-14 * f {
        let eig = hermitian_eig(a.as_ref())?;
        let r = spectral_apply(&eig, |l| cr(l.exp()));
        if !r.is_all_finite() {
            return Err(Error::Range("matrix_exp overflowed".into()));
        }
        return Ok(r);
    }
    pade_exp(a.as_ref(), norm1)
}

/// `U f(Λ) U^H` for a Hermitian eigendecomposition.
pub fn spectral_apply(eig: &EighResult, f: impl Fn(f64) -> c64) -> CMatrix {
    let u = &eig.eigenvectors;
    let n = u.nrows();
    let fl: Vec<c64> = eig.eigenvalues.iter().map(|&l| f(l)).collect();
    let uf = Mat::from_fn(n, n, |i, j| u[(i, j)] * fl[j]);
    mul_adj(uf.as_ref(), u.as_ref())
}

fn pade_exp(a: MatRef<'_, c64>, norm1: f64) -> Result<CMatrix> {
    let n = a.nrows();
    let id = identity(n);
    let a2 = matmul(a, a);
    let poly = |coeffs: &[f64], powers: &[&CMatrix]| -> (CMatrix, CMatrix) {
        // u = A * sum b_{2k+1} A^{2k},  v = sum b_{2k} A^{2k}
        let mut u = zeros(n, n);
        let mut v = zeros(n, n);
        for (k, p) in powers.iter().enumerate() {
            u = axpy(u.as_ref(), cr(coeffs[2 * k + 1]), p.as_ref());
            v = axpy(v.as_ref(), cr(coeffs[2 * k]), p.as_ref());
        }
        (matmul(a, u.as_ref()), v)
    };
    let (u, v, squarings) = if norm1 <= THETA[0] {
        let (u, v) = poly(&PADE3, &[&id, &a2]);
        (u, v, 0)
    } else if norm1 <= THETA[1] {
        let a4 = matmul(a2.as_ref(), a2.as_ref());
        let (u, v) = poly(&PADE5, &[&id, &a2, &a4]);
        (u, v, 0)
    } else if norm1 <= THETA[2] {
        let a4 = matmul(a2.as_ref(), a2.as_ref());
        let a6 = matmul(a4.as_ref(), a2.as_ref());
        let (u, v) = poly(&PADE7, &[&id, &a2, &a4, &a6]);
        (u, v, 0)
    } else if norm1 <= THETA[3] {
        let a4 = matmul(a2.as_ref(), a2.as_ref());
        let a6 = matmul(a4.as_ref(), a2.as_ref());
        let a8 = matmul(a6.as_ref(), a2.as_ref());
        let (u, v) = poly(&PADE9, &[&id, &a2, &a4, &a6, &a8]);
        (u, v, 0)
    } else {
        let s = ((norm1 / THETA[4]).log2().ceil()).max(0.0) as i32;
        let factor = 0.5f64.powi(s);
        let b = scaled(a, cr(factor));
        let b2 = scaled(a2.as_ref(), cr(factor * factor));
        let b4 = matmul(b2.as_ref(), b2.as_ref());
        let b6 = matmul(b4.as_ref(), b2.as_ref());
        let c = &PADE13;
        let inner_u = lin3(c[13], &b6, c[11], &b4, c[9], &b2);
        let mut u = matmul(b6.as_ref(), inner_u.as_ref());
        u = add_lin(&u, &[(c[7], &b6), (c[5], &b4), (c[3], &b2), (c[1], &id)]);
        let u = matmul(b.as_ref(), u.as_ref());
        let inner_v = lin3(c[12], &b6, c[10], &b4, c[8], &b2);
        let mut v = matmul(b6.as_ref(), inner_v.as_ref());
        v = add_lin(&v, &[(c[6], &b6), (c[4], &b4), (c[2], &b2), (c[0], &id)]);
        (u, v, s)
    };
    let p = axpy(v.as_ref(), ONE, u.as_ref());
    let q = axpy(v.as_ref(), cr(-1.0), u.as_ref());
    let mut r = solve(q.as_ref(), p.as_ref())?;
    for _ in 0..squarings {
        r = matmul(r.as_ref(), r.as_ref());
    }
    if !r.is_all_finite() {
        return Err(Error::Range("matrix_exp overflowed".into()));
    }
    Ok(r)
}

fn lin3(c1: f64, m1: &CMatrix, c2: f64, m2: &CMatrix, c3: f64, m3: &CMatrix) -> CMatrix {
    let n = m1.nrows();
    Mat::from_fn(n, n, |i, j| {
        m1[(i, j)] * c1 + m2[(i, j)] * c2 + m3[(i, j)] * c3
    })
}

fn add_lin(base: &CMatrix, terms: &[(f64, &CMatrix)]) -> CMatrix {
    let n = base.nrows();
    Mat::from_fn(n, n, |i, j| {
        terms
            .iter()
            .fold(base[(i, j)], |acc, (c, m)| acc + m[(i, j)] * *c)
    })
}
