//! Sequences of forms `(a_n, j|dom(a_n))` approximating `(a, j)`: hypothesis
//! checks, approximation defects, resolvent errors and the transfer bound.

use serde::Serialize;

use crate::completion;
use crate::error::{contract, Error, Result};
use crate::forms::{self, FormInH, Sector, SectorCheckReport};
use crate::lax_milgram::{self, CeaReport, GalerkinPair};
use crate::linalg::{self, cr, CMatrix, CVector};
use crate::relation::{self, ShiftedProblem};
use crate::semigroup::probe_matrix;

/// Smallest singular value accepted for an inclusion map.
pub const INJECTIVITY_TOL: f64 = 1e-10;

/// One member: the form matrix `F_n` on `dom(a_n)` and the inclusion
/// `ι_n: dom(a_n) → dom(a)`.
#[derive(Clone, Debug)]
pub struct Member {
    pub f: CMatrix,
    pub iota: CMatrix,
}

#[derive(Clone, Debug)]
pub struct FormSequenceProblem {
    pub base: FormInH,
    pub sector: Sector,
    pub members: Vec<Member>,
    /// Columns span the core `D`; `None` means all of `dom(a)`.
    pub core: Option<CMatrix>,
}

impl FormSequenceProblem {
    pub fn new(
        base: FormInH,
        sector: Sector,
        members: Vec<Member>,
        core: Option<CMatrix>,
    ) -> Result<Self> {
        let m = base.m();
        for (k, mem) in members.iter().enumerate() {
            let n = k + 1;
            if mem.iota.nrows() != m {
                return Err(contract(format!(
                    "member {n}: inclusion has {} rows, dom(a) has dimension {m}",
                    mem.iota.nrows()
                )));
            }
            if mem.f.nrows() != mem.f.ncols() || mem.f.ncols() != mem.iota.ncols() {
                return Err(contract(format!(
                    "member {n}: form is {}x{} but inclusion has {} columns",
                    mem.f.nrows(),
                    mem.f.ncols(),
                    mem.iota.ncols()
                )));
            }
            if !mem.f.is_all_finite() || !mem.iota.is_all_finite() {
                return Err(contract(format!("member {n}: non-finite entries")));
            }
            if !is_injective(&mem.iota) {
                return Err(contract(format!("member {n}: inclusion is not injective")));
            }
        }
        if let Some(c) = &core {
            if c.nrows() != m {
                return Err(contract("core basis has the wrong number of rows"));
            }
        }
        Ok(Self {
            base,
            sector,
            members,
            core,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member `n` (1-based).
    pub fn member(&self, n: usize) -> Result<&Member> {
        if n == 0 || n > self.members.len() {
            return Err(Error::Range(format!(
                "member index {n} outside 1..={}",
                self.members.len()
            )));
        }
        Ok(&self.members[n - 1])
    }

    /// `(a_n, j ι_n)`.
    pub fn member_form(&self, n: usize) -> Result<FormInH> {
        let mem = self.member(n)?;
        FormInH::new(mem.f.clone(), linalg::matmul(self.base.j.as_ref(), mem.iota.as_ref()))
    }

    /// `F_n − ι_n^H F ι_n`, the matrix of `a_n − a` on `dom(a_n)`.
    pub fn defect_matrix(&self, n: usize) -> Result<CMatrix> {
        let mem = self.member(n)?;
        let fi = linalg::matmul(self.base.f.as_ref(), mem.iota.as_ref());
        let restricted = linalg::adj_mul(mem.iota.as_ref(), fi.as_ref());
        Ok(linalg::axpy(mem.f.as_ref(), cr(-1.0), restricted.as_ref()))
    }

    /// Sector used for member `n`. When the defect lies in `Σ̄_θ`,
    /// `a_n − γ‖j·‖² = (a_n − a) + (a − γ‖j·‖²)` lies in the convex cone `Σ̄_θ`,
    /// so the problem's sector applies; otherwise the member's own minimal
    /// angle at vertex `γ` is fitted.
    pub fn member_sector(&self, n: usize) -> Result<Sector> {
        if check_unif_est(self, n)?.passes {
            return Ok(self.sector);
        }
        let form = self.member_form(n)?;
        match forms::fit_minimal_angle(&form, self.sector.gamma) {
            Some(theta) => Sector::new(theta, self.sector.gamma),
            None => Err(Error::NotSectorial(format!(
                "member {n} is not quasi-sectorial with vertex {}",
                self.sector.gamma
            ))),
        }
    }

    /// Columns spanning the core.
    pub fn core_basis(&self) -> CMatrix {
        self.core
            .clone()
            .unwrap_or_else(|| linalg::identity(self.base.m()))
    }
}

fn is_injective(iota: &CMatrix) -> bool {
    let (rows, cols) = iota.shape();
    if cols == 0 {
        return true;
    }
    if cols > rows {
        return false;
    }
    // Coordinate inclusions are recognized without a factorization.
    let mut seen = vec![false; rows];
    let mut selection = true;
    'cols: for j in 0..cols {
        let mut hit = None;
        for i in 0..rows {
            let z = iota[(i, j)];
            if z == cr(1.0) && hit.is_none() {
                hit = Some(i);
            } else if z != cr(0.0) {
                selection = false;
                break 'cols;
            }
        }
        match hit {
            Some(i) if !seen[i] => seen[i] = true,
            _ => {
                selection = false;
                break;
            }
        }
    }
    if selection {
        return true;
    }
    let s = linalg::singular_values(iota.as_ref());
    s.len() == cols && s[cols - 1] > INJECTIVITY_TOL
}

/// Checks `a_n(u) − a(u) ∈ Σ̄_θ` for `u ∈ dom(a_n)`.
pub fn check_unif_est(problem: &FormSequenceProblem, n: usize) -> Result<SectorCheckReport> {
    let defect = FormInH::embedded(problem.defect_matrix(n)?)?;
    Ok(forms::sector_verify(
        &defect,
        Sector::new(problem.sector.theta, 0.0)?,
    ))
}

/// Upper bound for `inf_v ‖u − v‖²_a + |a_n(v) − a(v)|` over `v ∈ dom(a_n)`,
/// evaluated at the minimizer `v*` of the first term.
#[derive(Clone, Debug)]
pub struct ApproximationDefect {
    pub value: f64,
    pub v_star: CVector,
}

pub fn approximation_defect(
    problem: &FormSequenceProblem,
    u: &CVector,
    n: usize,
) -> Result<ApproximationDefect> {
    if u.nrows() != problem.base.m() {
        return Err(contract("approximation_defect: u has the wrong dimension"));
    }
    let q = base_q(problem)?;
    let (values, v) = defects_with_q(problem, &q, &linalg::as_column_matrix(u), n)?;
    Ok(ApproximationDefect {
        value: values[0],
        v_star: linalg::col_of(v.as_ref(), 0),
    })
}

/// Approximation defects of every column of `us` (`m × k`).
pub fn approximation_defects(
    problem: &FormSequenceProblem,
    us: &CMatrix,
    n: usize,
) -> Result<Vec<f64>> {
    let q = base_q(problem)?;
    Ok(defects_with_q(problem, &q, us, n)?.0)
}

fn base_q(problem: &FormSequenceProblem) -> Result<CMatrix> {
    Ok(completion::complete(&problem.base, problem.sector)?.q)
}

/// With `Q^H Q = G`: `v* = argmin ‖Q u − Q ι v‖`, value
/// `‖Q(u − ι v*)‖² + |v*^H (F_n − ι^H F ι) v*|`.
fn defects_with_q(
    problem: &FormSequenceProblem,
    q: &CMatrix,
    us: &CMatrix,
    n: usize,
) -> Result<(Vec<f64>, CMatrix)> {
    let mem = problem.member(n)?;
    let qi = linalg::matmul(q.as_ref(), mem.iota.as_ref());
    let qu = linalg::matmul(q.as_ref(), us.as_ref());
    let v = linalg::least_squares(qi.as_ref(), qu.as_ref(), 1e-12);
    let resid = linalg::axpy(qu.as_ref(), cr(-1.0), linalg::matmul(qi.as_ref(), v.as_ref()).as_ref());
    let dv = linalg::matmul(problem.defect_matrix(n)?.as_ref(), v.as_ref());
    let values = (0..us.ncols())
        .map(|k| {
            let r = linalg::col_of(resid.as_ref(), k);
            let vk = linalg::col_of(v.as_ref(), k);
            let dk = linalg::col_of(dv.as_ref(), k);
            linalg::vnorm(&r).powi(2) + linalg::inner(&dk, &vk).norm()
        })
        .collect();
    Ok((values, v))
}

/// Per-member record of a convergence run.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Margin of the `a_n − a ∈ Σ̄_θ` check.
    pub sector_margin: f64,
    pub unif_est_passes: bool,
    /// Largest approximation defect over the core basis, if computed.
    pub defect_max: Option<f64>,
    /// `‖(λ+A_n)⁻¹x − (λ+A)⁻¹x‖` per probe.
    pub strong_errors: Vec<f64>,
    pub strong_err_max: f64,
    /// `‖(λ+A_n)⁻¹ − (λ+A)⁻¹‖₂`.
    pub op_norm_err: f64,
    pub cea_lhs: Option<f64>,
    pub cea_rhs: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub lambda: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn op_norm_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.op_norm_err).collect()
    }

    pub fn strong_err_max(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.strong_err_max).collect()
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub lambda: f64,
    pub probes: Vec<CVector>,
    /// Compute approximation defects over the core basis.
    pub defects: bool,
    /// Evaluate the transfer bound with `η = k̃ x₀` for the first probe.
    pub cea: bool,
}

/// Strong and operator-norm resolvent errors, with defects and the transfer
/// bound.
pub fn resolvent_errors(
    problem: &FormSequenceProblem,
    lambda: f64,
    probes: &[CVector],
) -> Result<ConvergenceReport> {
    run(
        problem,
        &RunOptions {
            lambda,
            probes: probes.to_vec(),
            defects: true,
            cea: true,
        },
    )
}

pub fn run(problem: &FormSequenceProblem, opts: &RunOptions) -> Result<ConvergenceReport> {
    let lambda = opts.lambda;
    let d = problem.base.d();
    let x = probe_matrix(&opts.probes, d)?;
    let base = relation::shifted_problem(&problem.base, problem.sector, lambda)?;
    let r = base.resolvent()?;
    let rx = linalg::matmul(r.as_ref(), x.as_ref());
    let core = if opts.defects {
        Some(problem.core_basis())
    } else {
        None
    };
    let mut rows = Vec::with_capacity(problem.len());
    for n in 1..=problem.len() {
        let unif = check_unif_est(problem, n)?;
        let sector = if unif.passes {
            problem.sector
        } else {
            problem.member_sector(n)?
        };
        let member = problem.member_form(n)?;
        let sp = relation::shifted_problem(&member, sector, lambda)?;
        let rn = sp.resolvent()?;
        let diff = linalg::axpy(rn.as_ref(), cr(-1.0), r.as_ref());
        let op_norm_err = linalg::spectral_norm(diff.as_ref());
        let dx = linalg::axpy(linalg::matmul(rn.as_ref(), x.as_ref()).as_ref(), cr(-1.0), rx.as_ref());
        let strong_errors: Vec<f64> = (0..x.ncols())
            .map(|k| linalg::vnorm(&linalg::col_of(dx.as_ref(), k)))
            .collect();
        let strong_err_max = strong_errors.iter().copied().fold(0.0, f64::max);
        let defect_max = match &core {
            Some(c) => Some(
                defects_with_q(problem, &base.completed.q, c, n)?
                    .0
                    .into_iter()
                    .fold(0.0, f64::max),
            ),
            None => None,
        };
        let (cea_lhs, cea_rhs) = if opts.cea && !opts.probes.is_empty() {
            let eta = linalg::matvec(
                linalg::adjoint(base.completed.jtilde.as_ref()).as_ref(),
                &opts.probes[0],
            );
            match transfer_with(problem, &base, &sp, n, &eta, unif.passes.then_some(problem.sector.theta)) {
                Ok(t) => (Some(t.lhs), Some(t.rhs)),
                Err(Error::NotSeminormContinuous(_)) | Err(Error::NotSectorial(_)) => (None, None),
                Err(e) => return Err(e),
            }
        } else {
            (None, None)
        };
        rows.push(ConvergenceRow {
            n,
            sector_margin: unif.margin,
            unif_est_passes: unif.passes,
            defect_max,
            strong_errors,
            strong_err_max,
            op_norm_err,
            cea_lhs,
            cea_rhs,
        });
    }
    Ok(ConvergenceReport { lambda, rows })
}

/// Both sides of `‖𝒜⁻¹η − J_n𝒜_n⁻¹J_n′η‖² ≤ inf_v (…)` in the shifted
/// coercive setting.
#[derive(Clone, Debug, Serialize)]
pub struct TransferBound {
    pub lhs: f64,
    pub rhs: f64,
    pub scale: f64,
}

/// `J_n ∈ L(V_n, V)` with `J_n q_n = q ι_n`.
pub fn transfer_map(base: &ShiftedProblem, member: &ShiftedProblem, iota: &CMatrix) -> Result<CMatrix> {
    let qi = linalg::matmul(base.completed.q.as_ref(), iota.as_ref());
    completion::extend_operator(&qi, &member.completed)
}

/// Evaluates the transfer bound for member `n` at shift `λ`, with `η ∈ V`
/// given as a Riesz vector. `c = 1 + tan θ` uses the problem's `θ`.
pub fn cea_transfer_bound(
    problem: &FormSequenceProblem,
    n: usize,
    lambda: f64,
    eta: &CVector,
) -> Result<TransferBound> {
    let base = relation::shifted_problem(&problem.base, problem.sector, lambda)?;
    let sector = problem.member_sector(n)?;
    let sp = relation::shifted_problem(&problem.member_form(n)?, sector, lambda)?;
    transfer_with(problem, &base, &sp, n, eta, Some(problem.sector.theta))
}

fn transfer_with(
    problem: &FormSequenceProblem,
    base: &ShiftedProblem,
    member: &ShiftedProblem,
    n: usize,
    eta: &CVector,
    theta: Option<f64>,
) -> Result<TransferBound> {
    let report = transfer_report(problem, base, member, n, eta, theta)?;
    Ok(TransferBound {
        lhs: report.exact_sq,
        rhs: report.best_abs_bound(),
        scale: report.scale,
    })
}

fn transfer_report(
    problem: &FormSequenceProblem,
    base: &ShiftedProblem,
    member: &ShiftedProblem,
    n: usize,
    eta: &CVector,
    theta: Option<f64>,
) -> Result<CeaReport> {
    let jn = transfer_map(base, member, &problem.member(n)?.iota)?;
    let pair = GalerkinPair::new(base.coercive(), member.coercive(), jn, theta)?;
    let (u, ucheck) = lax_milgram::galerkin_solution(&pair, eta)?;
    let candidates = lax_milgram::default_candidates(&pair, &u, &ucheck);
    lax_milgram::cea_from_solutions(&pair, &u, &ucheck, &candidates)
}

/// `j̃(𝒜⁻¹ − J_n𝒜_n⁻¹J_n′)k̃x`, which equals `(λ+A)⁻¹x − (λ+A_n)⁻¹x`.
pub fn transfer_difference(
    problem: &FormSequenceProblem,
    n: usize,
    lambda: f64,
    x: &CVector,
) -> Result<CVector> {
    let base = relation::shifted_problem(&problem.base, problem.sector, lambda)?;
    let sector = problem.member_sector(n)?;
    let member = relation::shifted_problem(&problem.member_form(n)?, sector, lambda)?;
    let jn = transfer_map(&base, &member, &problem.member(n)?.iota)?;
    let jt = &base.completed.jtilde;
    let eta = linalg::matvec(linalg::adjoint(jt.as_ref()).as_ref(), x);
    let u = base.solve(&eta)?;
    let ucheck = member.solve(&linalg::matvec(linalg::adjoint(jn.as_ref()).as_ref(), &eta))?;
    let diff = u - linalg::matvec(jn.as_ref(), &ucheck);
    Ok(linalg::matvec(jt.as_ref(), &diff))
}

/// Finite-schedule stand-in for the older hypothesis that
/// `{u ∈ ∪_k ∩_{n≥k} dom(a_n) : a_n(u) → a(u)}` is a core: the tail
/// intersection `∩_{n ≥ tail_start} dom(a_n)` must be mapped by `q` onto `V`.
#[derive(Clone, Debug, Serialize)]
pub struct LegacyCoreCheck {
    pub tail_start: usize,
    /// `dim ∩_{n ≥ tail_start} dom(a_n)`.
    pub intersection_dim: usize,
    /// `dim q(∩ …)`.
    pub core_rank: usize,
    /// `dim V`.
    pub r: usize,
    pub passes: bool,
}

pub fn legacy_core_check(problem: &FormSequenceProblem, tail_start: usize) -> Result<LegacyCoreCheck> {
    if tail_start == 0 || tail_start > problem.len() {
        return Err(Error::Range(format!(
            "tail start {tail_start} outside 1..={}",
            problem.len()
        )));
    }
    let mut basis = linalg::column_space(problem.member(tail_start)?.iota.as_ref(), 1e-12);
    for n in tail_start + 1..=problem.len() {
        basis = intersect(&basis, &problem.member(n)?.iota);
        if basis.ncols() == 0 {
            break;
        }
    }
    let c = completion::complete(&problem.base, problem.sector)?;
    let image = linalg::matmul(c.q.as_ref(), basis.as_ref());
    let core_rank = linalg::column_space(image.as_ref(), 1e-10).ncols();
    Ok(LegacyCoreCheck {
        tail_start,
        intersection_dim: basis.ncols(),
        core_rank,
        r: c.r(),
        passes: core_rank == c.r(),
    })
}

/// Orthonormal basis of `span(a) ∩ span(b)`; `a` has orthonormal columns.
fn intersect(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.nrows();
    if a.ncols() == 0 || b.ncols() == 0 {
        return linalg::zeros(rows, 0);
    }
    let qb = linalg::column_space(b.as_ref(), 1e-12);
    let stacked = linalg::hstack(&[a.as_ref(), linalg::scaled(qb.as_ref(), cr(-1.0)).as_ref()]);
    let kernel = linalg::null_space(stacked.as_ref(), 1e-10);
    let coeffs = faer::Mat::from_fn(a.ncols(), kernel.ncols(), |i, j| kernel[(i, j)]);
    let vecs = linalg::matmul(a.as_ref(), coeffs.as_ref());
    linalg::column_space(vecs.as_ref(), 1e-10)
}

/// The two hypotheses of the convergence theorem on a finite schedule.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesesCheck {
    /// `a_n − a ∈ Σ̄_θ` for every member.
    pub unif_est_all: bool,
    pub defect_first: f64,
    pub defect_last: f64,
    /// The largest defect of the last member is below `tol·max(1, defect_first)`.
    pub defect_vanishes: bool,
    pub passes: bool,
}

pub fn check_hypotheses(problem: &FormSequenceProblem, tol: f64) -> Result<HypothesesCheck> {
    if problem.is_empty() {
        return Err(Error::Schedule("empty schedule".into()));
    }
    let mut unif_est_all = true;
    for n in 1..=problem.len() {
        unif_est_all &= check_unif_est(problem, n)?.passes;
    }
    let core = problem.core_basis();
    let q = base_q(problem)?;
    let max_of = |n: usize| -> Result<f64> {
        Ok(defects_with_q(problem, &q, &core, n)?.0.into_iter().fold(0.0, f64::max))
    };
    let defect_first = max_of(1)?;
    let defect_last = max_of(problem.len())?;
    let defect_vanishes = defect_last <= tol * defect_first.max(1.0);
    Ok(HypothesesCheck {
        unif_est_all,
        defect_first,
        defect_last,
        defect_vanishes,
        passes: unif_est_all && defect_vanishes,
    })
}
