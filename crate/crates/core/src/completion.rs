//! The completion `(V, q)` of `(dom(a), ⟨·,·⟩_{a,j})` and the extensions
//! `ã`, `j̃`.
//!
//! `V` is realized as `ℂ^r` with the standard inner product: `q = Q` has rows
//! `√λ_i u_i^H` for the kept eigenpairs of the Gram matrix `G`, so
//! `Q^H Q = G` and `‖Qx‖ = ‖x‖_{a,j}`.

use serde::Serialize;

use crate::error::{contract, Error, Result};
use crate::forms::{self, FormInH, Sector};
use crate::linalg::{self, c64, CMatrix};

/// Relative eigenvalue cutoff for the null space of the Gram matrix.
pub const NULLSPACE_TOL: f64 = 1e-12;
/// Relative limit for the well-definedness and continuity residuals.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Relative limit below which a Gram eigenvalue counts as a sector violation.
pub const GRAM_NEG_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct CompletedForm {
    /// `q`, `r × m`.
    pub q: CMatrix,
    /// Right inverse of `q`, `m × r`.
    pub qpinv: CMatrix,
    /// `ã`, `r × r`.
    pub atilde: CMatrix,
    /// `j̃`, `d × r`.
    pub jtilde: CMatrix,
    pub residual_form: f64,
    pub residual_j: f64,
}

impl CompletedForm {
    /// `dim V`.
    pub fn r(&self) -> usize {
        self.q.nrows()
    }

    pub fn d(&self) -> usize {
        self.jtilde.nrows()
    }

    pub fn m(&self) -> usize {
        self.q.ncols()
    }
}

/// Builds `(V, q, ã, j̃)` for a form that is quasi-sectorial with the vertex of
/// `sector`.
///
/// Sectoriality itself is not re-verified (that is `sector_verify`'s job);
/// only the Gram matrix is checked for negative eigenvalues, which is what
/// the construction needs.
pub fn complete(form: &FormInH, sector: Sector) -> Result<CompletedForm> {
    let g = forms::gram_matrix(form, sector.gamma);
    let (m, d) = (form.m(), form.d());
    if m == 0 {
        return Ok(CompletedForm {
            q: linalg::zeros(0, 0),
            qpinv: linalg::zeros(0, 0),
            atilde: linalg::zeros(0, 0),
            jtilde: linalg::zeros(d, 0),
            residual_form: 0.0,
            residual_j: 0.0,
        });
    }
    let split = linalg::nullspace_split(g.as_ref(), NULLSPACE_TOL)?;
    let scale = split.max_eigenvalue.abs().max(split.min_eigenvalue.abs());
    if split.min_eigenvalue < -GRAM_NEG_TOL * scale {
        return Err(Error::NotSectorial(format!(
            "Gram matrix has eigenvalue {:e} (norm {scale:e}) for vertex {}",
            split.min_eigenvalue, sector.gamma
        )));
    }
    let r = split.kept_eigenvalues.len();
    let u = &split.kept_basis;
    let sq: Vec<f64> = split.kept_eigenvalues.iter().map(|l| l.sqrt()).collect();
    let q = faer::Mat::from_fn(r, m, |i, k| u[(k, i)].conj() * sq[i]);
    let qpinv = faer::Mat::from_fn(m, r, |k, i| u[(k, i)] / sq[i]);
    let fq = linalg::matmul(form.f.as_ref(), qpinv.as_ref());
    let atilde = linalg::adj_mul(qpinv.as_ref(), fq.as_ref());
    let jtilde = linalg::matmul(form.j.as_ref(), qpinv.as_ref());

    // F - Q^H Ã Q = F - P F P with P = Qpinv Q the projector onto the kept part.
    let p = linalg::matmul(qpinv.as_ref(), q.as_ref());
    let pfp = linalg::adj_mul(p.as_ref(), linalg::matmul(form.f.as_ref(), p.as_ref()).as_ref());
    let residual_form = linalg::frob(linalg::axpy(form.f.as_ref(), c64::new(-1.0, 0.0), pfp.as_ref()).as_ref());
    let jp = linalg::matmul(jtilde.as_ref(), q.as_ref());
    let residual_j = linalg::frob(linalg::axpy(form.j.as_ref(), c64::new(-1.0, 0.0), jp.as_ref()).as_ref());
    let fnorm = linalg::frob(form.f.as_ref());
    let jnorm = linalg::frob(form.j.as_ref());
    if residual_form > RESIDUAL_TOL * fnorm.max(scale) || residual_j > RESIDUAL_TOL * jnorm.max(scale.sqrt()) {
        return Err(Error::NotWellDefined {
            residual_form,
            residual_j,
        });
    }
    Ok(CompletedForm {
        q,
        qpinv,
        atilde,
        jtilde,
        residual_form,
        residual_j,
    })
}

/// Extends a seminorm-continuous `L: dom(a) → W` to `L̃: V → W` with `L̃ q = L`.
pub fn extend_operator(l: &CMatrix, completed: &CompletedForm) -> Result<CMatrix> {
    if l.ncols() != completed.m() {
        return Err(contract(format!(
            "extend_operator: L has {} columns, dom(a) has dimension {}",
            l.ncols(),
            completed.m()
        )));
    }
    let lt = linalg::matmul(l.as_ref(), completed.qpinv.as_ref());
    let back = linalg::matmul(lt.as_ref(), completed.q.as_ref());
    let residual = linalg::frob(linalg::axpy(l.as_ref(), c64::new(-1.0, 0.0), back.as_ref()).as_ref());
    if residual > RESIDUAL_TOL * linalg::frob(l.as_ref()) {
        return Err(Error::NotSeminormContinuous(residual));
    }
    Ok(lt)
}

/// Serializable view of a [`CompletedForm`] using `[re, im]` pairs.
#[derive(Serialize)]
pub struct CompletedFormJson {
    pub r: usize,
    pub m: usize,
    pub d: usize,
    #[serde(rename = "Q")]
    pub q: Vec<[f64; 2]>,
    #[serde(rename = "Atilde")]
    pub atilde: Vec<[f64; 2]>,
    #[serde(rename = "Jtilde")]
    pub jtilde: Vec<[f64; 2]>,
    pub residual_form: f64,
    pub residual_j: f64,
}

impl From<&CompletedForm> for CompletedFormJson {
    fn from(c: &CompletedForm) -> Self {
        Self {
            r: c.r(),
            m: c.m(),
            d: c.d(),
            q: crate::io::flatten(&c.q),
            atilde: crate::io::flatten(&c.atilde),
            jtilde: crate::io::flatten(&c.jtilde),
            residual_form: c.residual_form,
            residual_j: c.residual_j,
        }
    }
}
