//! Degenerate strongly continuous semigroups generated by `−A` for an
//! associated relation `A = A₁ ⊕ ({0} × H₀)`: `T(t) = T₁(t) ⊕ 0`.

use serde::Serialize;

use crate::convergence::FormSequenceProblem;
use crate::error::{contract, Result};
use crate::linalg::{self, c64, cr, CMatrix, CVector, EighResult};
use crate::relation::{self, LinearRelationRep};

/// Relative defect below which `A₁` is exponentiated through its eigenbasis.
pub const HERMITIAN_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct DegenerateSemigroup {
    /// `T(0)`, the orthogonal projection onto `H₁`.
    pub p: CMatrix,
    pub a1: CMatrix,
    pub basis_h1: CMatrix,
    /// Eigendecomposition of `A₁` when it is Hermitian.
    spectral: Option<EighResult>,
}

pub fn from_relation(rep: &LinearRelationRep) -> DegenerateSemigroup {
    let a1 = rep.a1.clone();
    let f = linalg::frob(a1.as_ref());
    // A₁ recovered from a resolvent is Hermitian only up to rounding that grows
    // with its condition number; treat it as Hermitian below this relative defect.
    let spectral = if a1.nrows() > 0 && linalg::hermitian_defect(a1.as_ref()) <= HERMITIAN_TOL * f {
        linalg::hermitian_eig(linalg::hermitian_part(a1.as_ref()).as_ref()).ok()
    } else {
        None
    };
    DegenerateSemigroup {
        p: rep.p1.clone(),
        a1,
        basis_h1: rep.basis_h1.clone(),
        spectral,
    }
}

impl DegenerateSemigroup {
    pub fn d(&self) -> usize {
        self.p.nrows()
    }

    /// `exp(−tA₁)` in `H₁` coordinates.
    fn inner_exp(&self, t: f64) -> Result<CMatrix> {
        match &self.spectral {
            Some(eig) => Ok(linalg::spectral_apply(eig, |l| cr((-t * l).exp()))),
            None => linalg::matrix_exp(self.a1.as_ref(), -t),
        }
    }

    /// `T(t) = B exp(−tA₁) B^H`.
    pub fn evaluate(&self, t: f64) -> Result<CMatrix> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(self.p.clone());
        }
        let e = self.inner_exp(t)?;
        let be = linalg::matmul(self.basis_h1.as_ref(), e.as_ref());
        Ok(linalg::mul_adj(be.as_ref(), self.basis_h1.as_ref()))
    }

    /// `T(t)x` for each column `x` of `probes` (`d × p`).
    pub fn apply(&self, t: f64, probes: &CMatrix) -> Result<CMatrix> {
        check_time(t)?;
        let coords = linalg::adj_mul(self.basis_h1.as_ref(), probes.as_ref());
        let evolved = match &self.spectral {
            Some(eig) => {
                let u = &eig.eigenvectors;
                let w = linalg::adj_mul(u.as_ref(), coords.as_ref());
                let scaled = faer::Mat::from_fn(w.nrows(), w.ncols(), |i, j| {
                    w[(i, j)] * (-t * eig.eigenvalues[i]).exp()
                });
                linalg::matmul(u.as_ref(), scaled.as_ref())
            }
            None if t == 0.0 => coords,
            None => linalg::matmul(self.inner_exp(t)?.as_ref(), coords.as_ref()),
        };
        Ok(linalg::matmul(self.basis_h1.as_ref(), evolved.as_ref()))
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(contract(format!("semigroup time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `n` Chebyshev–Lobatto points in `[0, t_max]`, both endpoints included.
pub fn chebyshev_grid(t_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                let s = std::f64::consts::PI * i as f64 / (n - 1) as f64;
                0.5 * t_max * (1.0 - s.cos())
            })
            .collect(),
    }
}

/// Default grid: 33 points in `[0, 1]`.
pub fn default_grid() -> Vec<f64> {
    chebyshev_grid(1.0, 33)
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupErrorRow {
    pub n: usize,
    pub probe_index: usize,
    pub sup_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SemigroupConvergence {
    pub rows: Vec<SemigroupErrorRow>,
}

impl SemigroupConvergence {
    /// `sup_err` for member `n` (1-based), indexed by probe.
    pub fn errors_for(&self, n: usize) -> Vec<f64> {
        self.rows.iter().filter(|r| r.n == n).map(|r| r.sup_err).collect()
    }
}

/// `max_{t ∈ grid} ‖T_n(t)x − T(t)x‖` for every member `n` and probe `x`.
///
/// The maximum over a finite grid is a lower bound for the supremum over the
/// interval.
pub fn semigroup_convergence(
    problem: &FormSequenceProblem,
    probes: &[CVector],
    t_grid: &[f64],
) -> Result<SemigroupConvergence> {
    for &t in t_grid {
        check_time(t)?;
    }
    let d = problem.base.d();
    let x = probe_matrix(probes, d)?;
    let limit = from_relation(&relation::associated_relation(&problem.base, problem.sector)?);
    let reference: Vec<CMatrix> = t_grid
        .iter()
        .map(|&t| limit.apply(t, &x))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for n in 1..=problem.len() {
        let member = problem.member_form(n)?;
        let sector = problem.member_sector(n)?;
        let sg = from_relation(&relation::associated_relation(&member, sector)?);
        let mut sup = vec![0.0f64; probes.len()];
        for (k, &t) in t_grid.iter().enumerate() {
            let got = sg.apply(t, &x)?;
            let diff = linalg::axpy(got.as_ref(), cr(-1.0), reference[k].as_ref());
            for (p, s) in sup.iter_mut().enumerate() {
                *s = s.max(linalg::vnorm(&linalg::col_of(diff.as_ref(), p)));
            }
        }
        for (p, s) in sup.into_iter().enumerate() {
            rows.push(SemigroupErrorRow {
                n,
                probe_index: p,
                sup_err: s,
            });
        }
    }
    Ok(SemigroupConvergence { rows })
}

pub(crate) fn probe_matrix(probes: &[CVector], d: usize) -> Result<CMatrix> {
    for p in probes {
        if p.nrows() != d {
            return Err(contract(format!("probe has dimension {}, expected {d}", p.nrows())));
        }
    }
    Ok(faer::Mat::from_fn(d, probes.len(), |i, j| probes[j][i]))
}

/// `‖T(t+s) − T(t)T(s)‖₂`.
pub fn semigroup_law_residual(sg: &DegenerateSemigroup, t: f64, s: f64) -> Result<f64> {
    let lhs = sg.evaluate(t + s)?;
    let rhs = linalg::matmul(sg.evaluate(t)?.as_ref(), sg.evaluate(s)?.as_ref());
    Ok(linalg::spectral_norm(linalg::axpy(lhs.as_ref(), c64::new(-1.0, 0.0), rhs.as_ref()).as_ref()))
}
