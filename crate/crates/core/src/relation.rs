//! Linear relations associated with quasi-sectorial forms and their
//! resolvents.
//!
//! `A = A₁ ⊕ ({0} × H₁^⊥)` with `H₁ = closure(ran j̃)`: the operator part `A₁`
//! lives on `H₁`, and every `y ∈ H₁^⊥` is an admissible image of `0`.

use crate::completion::{self, CompletedForm};
use crate::error::{Error, Result};
use crate::forms::{FormInH, Sector};
use crate::lax_milgram::CoerciveFormOnV;
use crate::linalg::{self, cr, CMatrix, CVector};

/// Relative SVD cutoff for `H₁ = ran j̃`.
pub const RANGE_TOL: f64 = 1e-12;
/// Largest `d` or `r` accepted by [`graph_oracle`].
pub const ORACLE_MAX_DIM: usize = 40;

#[derive(Clone, Debug)]
pub struct LinearRelationRep {
    /// Orthogonal projection onto `H₁`, `d × d`.
    pub p1: CMatrix,
    /// `A₁` in the coordinates of `basis_h1`, `h × h`.
    pub a1: CMatrix,
    pub gamma: f64,
    /// Orthonormal basis of `H₁`, `d × h`.
    pub basis_h1: CMatrix,
}

impl LinearRelationRep {
    pub fn d(&self) -> usize {
        self.p1.nrows()
    }

    /// `dim H₁`.
    pub fn h(&self) -> usize {
        self.basis_h1.ncols()
    }

    /// `(λ + A)⁻¹ = B (λ + A₁)⁻¹ B^H`.
    pub fn resolvent(&self, lambda: f64) -> Result<CMatrix> {
        if lambda <= -self.gamma {
            return Err(Error::NotInResolventSet {
                lambda,
                bound: -self.gamma,
            });
        }
        let shifted = linalg::axpy(self.a1.as_ref(), cr(lambda), linalg::identity(self.h()).as_ref());
        let x = linalg::solve(shifted.as_ref(), linalg::adjoint(self.basis_h1.as_ref()).as_ref())?;
        Ok(linalg::matmul(self.basis_h1.as_ref(), x.as_ref()))
    }

    /// `A₁` as a `d × d` operator that vanishes on `H₁^⊥`.
    pub fn a1_full(&self) -> CMatrix {
        let ba = linalg::matmul(self.basis_h1.as_ref(), self.a1.as_ref());
        linalg::mul_adj(ba.as_ref(), self.basis_h1.as_ref())
    }
}

/// The form `a_λ = a + λ⟨j·, j·⟩` completed, with its coercivity constant.
#[derive(Clone, Debug)]
pub struct ShiftedProblem {
    pub completed: CompletedForm,
    /// `λ_min(Re ã_λ)`.
    pub alpha: f64,
    pub lambda: f64,
}

impl ShiftedProblem {
    /// `(λ + A)⁻¹ = j̃ 𝒜_λ⁻¹ k̃` with `k̃ = j̃^H`.
    pub fn resolvent(&self) -> Result<CMatrix> {
        let jt = &self.completed.jtilde;
        let x = linalg::solve(self.completed.atilde.as_ref(), linalg::adjoint(jt.as_ref()).as_ref())?;
        Ok(linalg::matmul(jt.as_ref(), x.as_ref()))
    }

    /// `𝒜_λ⁻¹ η`.
    pub fn solve(&self, eta: &CVector) -> Result<CVector> {
        linalg::solve_vec(self.completed.atilde.as_ref(), eta)
    }

    /// `ã_λ` as a coercive form on `V`, with `M = ‖ã_λ‖`.
    pub fn coercive(&self) -> CoerciveFormOnV {
        let m_bound = linalg::spectral_norm(self.completed.atilde.as_ref());
        CoerciveFormOnV::with_constants(self.completed.atilde.clone(), m_bound, self.alpha)
    }
}

/// Completes `a + λ⟨j·, j·⟩` (vertex `γ + λ`). The Gram matrix and hence `V`
/// coincide with those of the unshifted form.
pub fn shifted_problem(form: &FormInH, sector: Sector, lambda: f64) -> Result<ShiftedProblem> {
    if lambda.is_nan() || lambda <= -sector.gamma {
        return Err(Error::NotInResolventSet {
            lambda,
            bound: -sector.gamma,
        });
    }
    let shifted = form.shifted(lambda);
    let vertex = sector.gamma + lambda;
    let completed = completion::complete(&shifted, sector.with_gamma(vertex))?;
    // ‖u‖²_V = Re ã_λ(u) + (1 − γ − λ)‖j̃u‖² together with Re ã_λ(u) ≥ (γ+λ)‖j̃u‖²
    // gives Re ã_λ(u) ≥ min(1, γ+λ)‖u‖².
    let guaranteed = vertex.min(1.0);
    let re = linalg::hermitian_part(completed.atilde.as_ref());
    let ev = linalg::hermitian_eigenvalues(re.as_ref())?;
    let alpha = ev.first().copied().unwrap_or(f64::INFINITY);
    if alpha < guaranteed * (1.0 - 1e-6) {
        return Err(Error::Internal(format!(
            "completed shifted form has coercivity {alpha:e}, expected at least {guaranteed:e}"
        )));
    }
    Ok(ShiftedProblem {
        completed,
        alpha,
        lambda,
    })
}

/// `(λ + A)⁻¹` as a `d × d` matrix.
pub fn resolvent(form: &FormInH, sector: Sector, lambda: f64) -> Result<CMatrix> {
    shifted_problem(form, sector, lambda)?.resolvent()
}

/// Builds `A = A₁ ⊕ ({0} × H₁^⊥)` from the resolvent of the vertex-0 form
/// `a − γ⟨j·, j·⟩` at `λ = 1`, then adds `γ` back.
pub fn associated_relation(form: &FormInH, sector: Sector) -> Result<LinearRelationRep> {
    let base = form.shifted(-sector.gamma);
    let sp = shifted_problem(&base, sector.with_gamma(0.0), 1.0)?;
    let r1 = sp.resolvent()?;
    let basis = linalg::column_space(sp.completed.jtilde.as_ref(), RANGE_TOL);
    let h = basis.ncols();
    let d = form.d();
    let compressed = linalg::adj_mul(basis.as_ref(), linalg::matmul(r1.as_ref(), basis.as_ref()).as_ref());
    let inv = linalg::inverse(compressed.as_ref())?;
    let a1 = linalg::axpy(inv.as_ref(), cr(sector.gamma - 1.0), linalg::identity(h).as_ref());
    let p1 = if h == 0 {
        linalg::zeros(d, d)
    } else {
        linalg::mul_adj(basis.as_ref(), basis.as_ref())
    };
    Ok(LinearRelationRep {
        p1,
        a1,
        gamma: sector.gamma,
        basis_h1: basis,
    })
}

/// Orthonormal basis (`2d × d`, stacked `[x; y]`) of the graph of `A`,
/// computed directly from `(x, y) ∈ A ⇔ ∃u: j̃u = x, ã(u, ·) = ⟨y, j̃ ·⟩`.
#[derive(Clone, Debug)]
pub struct GraphOracle {
    pub basis: CMatrix,
}

pub fn graph_oracle(form: &FormInH, sector: Sector) -> Result<GraphOracle> {
    let c = completion::complete(form, sector)?;
    let (r, d) = (c.r(), c.d());
    if d > ORACLE_MAX_DIM || r > ORACLE_MAX_DIM {
        return Err(Error::TooLarge(format!(
            "graph oracle limited to d, r <= {ORACLE_MAX_DIM} (got d = {d}, r = {r})"
        )));
    }
    // Unknowns (u, x, y) ∈ ℂ^r × ℂ^d × ℂ^d:
    //   j̃u − x = 0,   ãu − j̃^H y = 0.
    let n = r + 2 * d;
    let rows = d + r;
    let mut cm = linalg::zeros(rows, n);
    for i in 0..d {
        for k in 0..r {
            cm[(i, k)] = c.jtilde[(i, k)];
        }
        cm[(i, r + i)] = cr(-1.0);
    }
    for i in 0..r {
        for k in 0..r {
            cm[(d + i, k)] = c.atilde[(i, k)];
        }
        for k in 0..d {
            cm[(d + i, r + d + k)] = -c.jtilde[(k, i)].conj();
        }
    }
    let kernel = linalg::null_space(cm.as_ref(), 1e-12);
    let xy = faer::Mat::from_fn(2 * d, kernel.ncols(), |i, j| kernel[(r + i, j)]);
    Ok(GraphOracle {
        basis: linalg::column_space(xy.as_ref(), 1e-10),
    })
}

/// Graph of `A` recovered from `R = (λ + A)⁻¹`: `{(Rh, h − λRh) : h ∈ H}`.
pub fn graph_from_resolvent(r: &CMatrix, lambda: f64) -> CMatrix {
    let d = r.nrows();
    let y = linalg::axpy(linalg::identity(d).as_ref(), cr(-lambda), r.as_ref());
    linalg::vstack(&[r.as_ref(), y.as_ref()])
}

/// `(x, y) ∈ A`: `x ∈ H₁` and `P₁y = A₁x` (the `H₁^⊥` part of `y` is free).
pub fn relation_membership(rep: &LinearRelationRep, x: &CVector, y: &CVector) -> bool {
    let scale = linalg::vnorm(x).max(linalg::vnorm(y)).max(f64::MIN_POSITIVE);
    let tol = 1e-9 * scale;
    let px = linalg::matvec(rep.p1.as_ref(), x);
    if linalg::vnorm(&(px - x)) > tol {
        return false;
    }
    let bt = linalg::adjoint(rep.basis_h1.as_ref());
    let xhat = linalg::matvec(bt.as_ref(), x);
    let yhat = linalg::matvec(bt.as_ref(), y);
    let ax = linalg::matvec(rep.a1.as_ref(), &xhat);
    let a_scale = linalg::spectral_norm(rep.a1.as_ref()).max(1.0);
    linalg::vnorm(&(ax - yhat)) <= 1e-9 * a_scale * scale
}
