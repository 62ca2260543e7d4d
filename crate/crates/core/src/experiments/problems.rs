//! Canned form sequences.

use crate::convergence::{FormSequenceProblem, Member};
use crate::error::{Error, Result};
use crate::experiments::mesh::{assemble_dirichlet_1d, FemAssembly, Mesh1D};
use crate::forms::{FormInH, Sector};
use crate::linalg::{self, c64, cr, CMatrix};
use crate::random;

/// Boundary margin (relative to the domain length) in support tests.
const SUPPORT_EPS: f64 = 1e-12;

/// Coordinate inclusion `ℂ^k → ℂ^m` selecting `indices` (ascending).
pub fn selection(m: usize, indices: &[usize]) -> CMatrix {
    let mut s = linalg::zeros(m, indices.len());
    for (k, &i) in indices.iter().enumerate() {
        s[(i, k)] = cr(1.0);
    }
    s
}

/// `ι^H F ι`.
pub fn restrict(f: &CMatrix, iota: &CMatrix) -> CMatrix {
    linalg::adj_mul(iota.as_ref(), linalg::matmul(f.as_ref(), iota.as_ref()).as_ref())
}

/// Basis positions (into `fem.dofs`) of the hats whose closed support lies in
/// the open interval `(lo, hi)`.
pub fn hats_inside(mesh: &Mesh1D, fem: &FemAssembly, lo: f64, hi: f64) -> Vec<usize> {
    let (a, b) = mesh.domain();
    let eps = SUPPORT_EPS * (b - a);
    fem.dofs
        .iter()
        .enumerate()
        .filter(|(_, &node)| {
            let (s0, s1) = mesh.hat_support(node);
            s0 > lo + eps && s1 < hi - eps
        })
        .map(|(k, _)| k)
        .collect()
}

/// `Ω_k = (1/k, 1 − 1/k)` scaled to the mesh domain, for `k = 2, 4, …, k_max`.
pub fn symmetric_schedule(mesh: &Mesh1D, k_max: usize) -> Result<Vec<(f64, f64)>> {
    if k_max < 2 {
        return Err(Error::Schedule(format!("k_max must be at least 2, got {k_max}")));
    }
    let (a, b) = mesh.domain();
    let len = b - a;
    Ok((1..=k_max / 2)
        .map(|i| {
            let k = (2 * i) as f64;
            (a + len / k, b - len / k)
        })
        .collect())
}

/// Dirichlet form of the whole mesh as the base and its restrictions to the
/// hats inside each `Ω_k` as members.
pub fn dirichlet_subdomain_problem(fine: &Mesh1D, schedule: &[(f64, f64)]) -> Result<FormSequenceProblem> {
    let (a, b) = fine.domain();
    dirichlet_partial_base_problem(fine, (a - 1.0, b + 1.0), schedule)
}

/// As [`dirichlet_subdomain_problem`], but the base form only contains the
/// hats inside `base_interval`, while `H` still carries every hat of the mesh.
/// Then `ran(j)` is a proper subspace of `H`.
pub fn dirichlet_partial_base_problem(
    fine: &Mesh1D,
    base_interval: (f64, f64),
    schedule: &[(f64, f64)],
) -> Result<FormSequenceProblem> {
    let (a, b) = fine.domain();
    let eps = SUPPORT_EPS * (b - a);
    for &(lo, hi) in schedule {
        if !(lo >= a - eps && hi <= b + eps && lo <= hi + eps) {
            return Err(Error::Schedule(format!(
                "subinterval ({lo}, {hi}) is not contained in ({a}, {b})"
            )));
        }
        if lo < base_interval.0 - eps || hi > base_interval.1 + eps {
            return Err(Error::Schedule(format!(
                "subinterval ({lo}, {hi}) is not contained in the base interval"
            )));
        }
    }
    let fem = assemble_dirichlet_1d(fine)?;
    let all = fem.dofs.len();
    let base_idx = hats_inside(fine, &fem, base_interval.0, base_interval.1);
    let base_iota = selection(all, &base_idx);
    let base = FormInH::new(
        restrict(&fem.stiffness, &base_iota),
        linalg::matmul(fem.form.j.as_ref(), base_iota.as_ref()),
    )?;
    let position: std::collections::HashMap<usize, usize> =
        base_idx.iter().enumerate().map(|(p, &k)| (k, p)).collect();
    let members = schedule
        .iter()
        .map(|&(lo, hi)| {
            let idx: Vec<usize> = hats_inside(fine, &fem, lo, hi)
                .into_iter()
                .map(|k| position[&k])
                .collect();
            let iota = selection(base.m(), &idx);
            Member {
                f: restrict(&base.f, &iota),
                iota,
            }
        })
        .collect();
    FormSequenceProblem::new(base, Sector::new(0.0, 0.0)?, members, None)
}

/// Nested Galerkin spaces: member `n` is spanned by the coarse hats of level
/// `L − N + n` on a uniform mesh with `d = 2^L − 1` interior nodes.
pub fn galerkin_problem(d: usize, n_members: usize) -> Result<FormSequenceProblem> {
    let levels = (d + 1).trailing_zeros() as usize;
    if d == 0 || (d + 1) != 1 << levels {
        return Err(Error::Mesh(format!("galerkin-1d needs d = 2^L - 1, got {d}")));
    }
    if n_members == 0 || n_members > levels {
        return Err(Error::Schedule(format!(
            "galerkin-1d with d = {d} supports 1..={levels} members, got {n_members}"
        )));
    }
    let fine = Mesh1D::uniform(d, 1.0)?;
    let fem = assemble_dirichlet_1d(&fine)?;
    let members = (1..=n_members)
        .map(|n| {
            let level = levels - n_members + n;
            let stride = 1usize << (levels - level);
            let coarse = (1usize << level) - 1;
            // coarse hat c sits at fine node (c+1)·stride; fine dof i is node i+1
            let p = linalg::from_real_fn(d, coarse, |i, c| {
                let centre = (c + 1) * stride;
                let dist = (i + 1).abs_diff(centre);
                if dist < stride {
                    1.0 - dist as f64 / stride as f64
                } else {
                    0.0
                }
            });
            Member {
                f: restrict(&fem.stiffness, &p),
                iota: p,
            }
        })
        .collect();
    FormSequenceProblem::new(fem.form, Sector::new(0.0, 0.0)?, members, None)
}

/// Parameters of [`rotating_subspace_problem`].
#[derive(Clone, Debug)]
pub struct RotatingParams {
    pub d: usize,
    pub n_members: usize,
    pub theta: f64,
    /// Member `n` is rotated by a unitary `exp(iH)` with `‖H‖ = rotation/n`.
    pub rotation: f64,
    pub seed: u64,
}

/// Galerkin restrictions to dimension-growing subspaces that pairwise meet
/// only in `{0}` inside `dom(a)`, while their images in `V` fill `V`.
///
/// `dom(a) = ℂ^{2d}` with `a((y, z), (y', z')) = a₀(y, y')` and `j(y, z) = y`;
/// the hidden coordinates `z` are annihilated by the completion, so `A` is the
/// operator of `a₀` on `ℂ^d`. Member `n` has dimension `k_n = ⌈d n / N⌉` and
/// is spanned by the columns of `[U_n[:, :k_n]; W_n]` with a random unitary
/// `U_n` of distance `O(1/n)` from the identity and a Gaussian `W_n`.
pub fn rotating_subspace_problem(p: &RotatingParams) -> Result<FormSequenceProblem> {
    if p.d < 2 {
        return Err(Error::Range(format!("rotating-subspaces needs d >= 2, got {}", p.d)));
    }
    if p.n_members == 0 {
        return Err(Error::Schedule("need at least one member".into()));
    }
    let d = p.d;
    let mut rng = random::rng(p.seed);
    let mu: Vec<f64> = (0..d).map(|i| 1.0 + i as f64).collect();
    let s = random::random_hermitian(&mut rng, d);
    let sn = linalg::spectral_norm(s.as_ref());
    let c = if sn > 0.0 { 0.9 * p.theta.tan() / sn } else { 0.0 };
    let f0 = linalg::axpy(linalg::real_diag(&mu).as_ref(), c64::new(0.0, c), s.as_ref());
    let mut f = linalg::zeros(2 * d, 2 * d);
    let mut j = linalg::zeros(d, 2 * d);
    for r in 0..d {
        for col in 0..d {
            f[(r, col)] = f0[(r, col)];
        }
        j[(r, r)] = cr(1.0);
    }
    let base = FormInH::new(f, j)?;
    let n_total = p.n_members;
    let mut members = Vec::with_capacity(n_total);
    for n in 1..=n_total {
        let k = (d * n).div_ceil(n_total);
        let u = random::random_rotation(&mut rng, d, p.rotation / n as f64);
        let w = random::random_matrix(&mut rng, d, k);
        let iota = faer::Mat::from_fn(2 * d, k, |r, col| {
            if r < d {
                u[(r, col)]
            } else {
                w[(r - d, col)]
            }
        });
        members.push(Member {
            f: restrict(&base.f, &iota),
            iota,
        });
    }
    FormSequenceProblem::new(base, Sector::new(p.theta, 0.0)?, members, None)
}

/// `a_n = a + ε_n e^{iθ₀} m` on the full domain, where `m` is the `L₂` form.
/// The defect lies on the ray `arg = θ₀`, so it is in `Σ̄_θ` iff `θ₀ ≤ θ`.
pub fn absorption_problem(fine: &Mesh1D, theta: f64, theta0: f64, eps: &[f64]) -> Result<FormSequenceProblem> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta0) {
        return Err(Error::Range(format!("theta0 = {theta0} outside [0, pi/2)")));
    }
    let fem = assemble_dirichlet_1d(fine)?;
    let m = fem.dofs.len();
    let phase = c64::new(theta0.cos(), theta0.sin());
    let members = eps
        .iter()
        .map(|&e| Member {
            f: linalg::axpy(fem.stiffness.as_ref(), phase * e, fem.mass.as_ref()),
            iota: linalg::identity(m),
        })
        .collect();
    FormSequenceProblem::new(fem.form, Sector::new(theta, 0.0)?, members, None)
}
