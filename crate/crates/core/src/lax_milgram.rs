//! Lax–Milgram operators on `V`, the sectorial Cauchy–Schwarz estimate and the
//! extended Céa bound.
//!
//! `V` always carries the standard inner product, so antilinear functionals
//! are stored as their Riesz vectors: `η` represents `v ↦ ⟨η, v⟩_V`.

use serde::Serialize;

use crate::error::{contract, Error, Result};
use crate::forms::{self, FormInH, Sector};
use crate::linalg::{self, c64, cr, CMatrix, CVector};
use crate::random;

/// A bounded coercive form on `V = ℂ^r`.
#[derive(Clone, Debug)]
pub struct CoerciveFormOnV {
    pub atilde: CMatrix,
    /// `‖Ã‖₂`.
    pub m_bound: f64,
    /// `λ_min(Re Ã)`.
    pub alpha: f64,
}

impl CoerciveFormOnV {
    pub fn new(atilde: CMatrix) -> Result<Self> {
        let (m_bound, alpha) = bounds(&atilde)?;
        if atilde.nrows() > 0 && alpha <= 0.0 {
            return Err(Error::NotCoercive(alpha));
        }
        Ok(Self {
            atilde,
            m_bound,
            alpha,
        })
    }

    /// Coercive form with a known lower bound for `α`, skipping the eigenvalue
    /// computation.
    pub(crate) fn with_constants(atilde: CMatrix, m_bound: f64, alpha: f64) -> Self {
        Self {
            atilde,
            m_bound,
            alpha,
        }
    }

    pub fn dim(&self) -> usize {
        self.atilde.nrows()
    }
}

/// `(M, α) = (‖Ã‖₂, λ_min(Re Ã))`. `α` may be non-positive.
pub fn bounds(atilde: &CMatrix) -> Result<(f64, f64)> {
    if atilde.nrows() != atilde.ncols() {
        return Err(contract("bounds: matrix must be square"));
    }
    if atilde.nrows() == 0 {
        return Ok((0.0, f64::INFINITY));
    }
    let m = linalg::spectral_norm(atilde.as_ref());
    let re = linalg::hermitian_part(atilde.as_ref());
    let alpha = linalg::hermitian_eigenvalues(re.as_ref())?[0];
    Ok((m, alpha))
}

/// Solves `a(u, v) = ⟨η, v⟩` for all `v`, i.e. `Ã u = η`.
pub fn lm_solve(form: &CoerciveFormOnV, eta: &CVector) -> Result<CVector> {
    if form.alpha <= 0.0 {
        return Err(Error::NotCoercive(form.alpha));
    }
    if eta.nrows() != form.dim() {
        return Err(contract("lm_solve: right-hand side has the wrong dimension"));
    }
    linalg::solve_vec(form.atilde.as_ref(), eta)
}

/// `J′ η = η ∘ J` under the Riesz identifications: `J^H`.
pub fn dual_map(jmap: &CMatrix) -> CMatrix {
    linalg::adjoint(jmap.as_ref())
}

/// `(V, a)`, `(V̌, ǎ)` and `J ∈ L(V̌, V)` with a sectorial defect
/// `b(w, v) = ǎ(w, v) − a(Jw, Jv)`.
#[derive(Clone, Debug)]
pub struct GalerkinPair {
    pub big: CoerciveFormOnV,
    pub small: CoerciveFormOnV,
    /// `r × ř`.
    pub jmap: CMatrix,
    /// Sector angle of the defect.
    pub theta: f64,
}

impl GalerkinPair {
    /// With `theta = None` the minimal angle of the defect is fitted; with an
    /// explicit angle the defect is verified against it.
    pub fn new(
        big: CoerciveFormOnV,
        small: CoerciveFormOnV,
        jmap: CMatrix,
        theta: Option<f64>,
    ) -> Result<Self> {
        if jmap.nrows() != big.dim() || jmap.ncols() != small.dim() {
            return Err(contract(format!(
                "J must be {}x{}, got {}x{}",
                big.dim(),
                small.dim(),
                jmap.nrows(),
                jmap.ncols()
            )));
        }
        let b = defect(&big, &small, &jmap);
        // rounding in b is relative to the forms it is the difference of
        let scale = linalg::spectral_norm(small.atilde.as_ref()).max(linalg::spectral_norm(
            linalg::axpy(b.as_ref(), cr(-1.0), small.atilde.as_ref()).as_ref(),
        ));
        let theta = match theta {
            Some(t) => {
                Sector::new(t, 0.0)?;
                let rep = forms::verify_matrix(&b, t, scale);
                if !rep.passes {
                    return Err(Error::NotSectorial(format!(
                        "defect form fails the sector test at angle {t} (margin {:e})",
                        rep.margin
                    )));
                }
                t
            }
            None => forms::fit_matrix_angle(&b, scale).ok_or_else(|| {
                Error::NotSectorial("defect form is not sectorial for any angle".into())
            })?,
        };
        Ok(Self {
            big,
            small,
            jmap,
            theta,
        })
    }

    /// Matrix of `b` on `V̌`.
    pub fn defect_matrix(&self) -> CMatrix {
        defect(&self.big, &self.small, &self.jmap)
    }

    /// `c = 1 + tan θ`.
    pub fn c(&self) -> f64 {
        1.0 + self.theta.tan()
    }
}

fn defect(big: &CoerciveFormOnV, small: &CoerciveFormOnV, jmap: &CMatrix) -> CMatrix {
    let aj = linalg::matmul(big.atilde.as_ref(), jmap.as_ref());
    let jaj = linalg::adj_mul(jmap.as_ref(), aj.as_ref());
    linalg::axpy(small.atilde.as_ref(), cr(-1.0), jaj.as_ref())
}

/// `u = 𝒜⁻¹η` and `ǔ = 𝒜̌⁻¹J′η`.
pub fn galerkin_solution(pair: &GalerkinPair, eta: &CVector) -> Result<(CVector, CVector)> {
    let u = lm_solve(&pair.big, eta)?;
    let jeta = linalg::matvec(dual_map(&pair.jmap).as_ref(), eta);
    let ucheck = lm_solve(&pair.small, &jeta)?;
    Ok((u, ucheck))
}

/// Sampling check of `|b(w,v)| ≤ c (Re b(w))^½ (Re b(v))^½`, `c = 1 + tan θ`.
///
/// Returns `(passes, worst_ratio)`.
pub fn sector_cauchy_schwarz_check(
    b: &CMatrix,
    theta: f64,
    samples: usize,
    seed: u64,
) -> Result<(bool, f64)> {
    let form = FormInH::embedded(b.clone())?;
    let rep = forms::sector_verify(&form, Sector::new(theta, 0.0)?);
    if !rep.passes {
        return Err(Error::NotSectorial(format!(
            "b is not sectorial of angle {theta} (margin {:e})",
            rep.margin
        )));
    }
    let n = b.nrows();
    let c = 1.0 + theta.tan();
    let mut rng = random::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let w = random::random_vector(&mut rng, n);
        let v = random::random_vector(&mut rng, n);
        let bw = form.quadratic(&w).re;
        let bv = form.quadratic(&v).re;
        let den = c * bw.max(0.0).sqrt() * bv.max(0.0).sqrt();
        if den > 0.0 {
            worst = worst.max(form.eval(&w, &v).norm() / den);
        }
    }
    Ok((worst <= 1.0 + 1e-9, worst))
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateBound {
    pub abs_bound: f64,
    pub re_bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CeaReport {
    /// `‖u − Jǔ‖²_V`.
    pub exact_sq: f64,
    pub bounds: Vec<CandidateBound>,
    /// Index of the candidate minimizing `abs_bound`.
    pub best: usize,
    pub c: f64,
    pub m_bound: f64,
    pub alpha: f64,
    /// `M²‖u‖²/α²`, the reference size for tolerances.
    pub scale: f64,
    /// `‖J^H Ã (u − Jǔ) − B ǔ‖`, which vanishes by the variational identities.
    pub orthogonality_residual: f64,
}

impl CeaReport {
    pub fn best_abs_bound(&self) -> f64 {
        self.bounds[self.best].abs_bound
    }

    pub fn best_re_bound(&self) -> f64 {
        self.bounds[self.best].re_bound
    }
}

/// Evaluates both forms of the extended Céa bound at each candidate `v ∈ V̌`.
///
/// The infimum of the bound is only sampled on `candidates`, so the reported
/// minimum is an upper bound for it.
pub fn cea_error_bound(
    pair: &GalerkinPair,
    eta: &CVector,
    candidates: &[CVector],
) -> Result<CeaReport> {
    if candidates.is_empty() {
        return Err(contract("cea_error_bound: candidate set is empty"));
    }
    let (u, ucheck) = galerkin_solution(pair, eta)?;
    cea_from_solutions(pair, &u, &ucheck, candidates)
}

pub(crate) fn cea_from_solutions(
    pair: &GalerkinPair,
    u: &CVector,
    ucheck: &CVector,
    candidates: &[CVector],
) -> Result<CeaReport> {
    let (m, alpha) = (pair.big.m_bound, pair.big.alpha);
    let c = pair.c();
    let b = pair.defect_matrix();
    let ju = linalg::matvec(pair.jmap.as_ref(), ucheck);
    let err = &u.clone() - &ju;
    let exact_sq = linalg::vnorm(&err).powi(2);
    let k1 = (m / alpha).powi(2);
    let k2 = c * c / (2.0 * alpha);
    let mut bounds = Vec::with_capacity(candidates.len());
    for v in candidates {
        if v.nrows() != pair.small.dim() {
            return Err(contract("cea_error_bound: candidate has the wrong dimension"));
        }
        let jv = linalg::matvec(pair.jmap.as_ref(), v);
        let dist = linalg::vnorm(&(u.clone() - &jv)).powi(2);
        let bv: c64 = linalg::sesq(b.as_ref(), v, v);
        bounds.push(CandidateBound {
            abs_bound: k1 * dist + k2 * bv.norm(),
            re_bound: k1 * dist + k2 * bv.re,
        });
    }
    let best = (0..bounds.len())
        .min_by(|&i, &j| bounds[i].abs_bound.total_cmp(&bounds[j].abs_bound))
        .expect("nonempty");
    let lhs = linalg::matvec(
        pair.jmap.adjoint().to_owned().as_ref(),
        &linalg::matvec(pair.big.atilde.as_ref(), &err),
    );
    let rhs = linalg::matvec(b.as_ref(), ucheck);
    Ok(CeaReport {
        exact_sq,
        bounds,
        best,
        c,
        m_bound: m,
        alpha,
        scale: k1 * linalg::vnorm(u).powi(2),
        orthogonality_residual: linalg::vnorm(&(lhs - rhs)),
    })
}

/// The least-squares projection of `u` onto `ran J` (pulled back to `V̌`)
/// and the Galerkin solution `ǔ` itself.
pub fn default_candidates(pair: &GalerkinPair, u: &CVector, ucheck: &CVector) -> Vec<CVector> {
    let proj = linalg::least_squares(
        pair.jmap.as_ref(),
        linalg::as_column_matrix(u).as_ref(),
        1e-12,
    );
    vec![linalg::col_of(proj.as_ref(), 0), ucheck.clone()]
}
