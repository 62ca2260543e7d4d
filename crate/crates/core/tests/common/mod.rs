//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use formconv::convergence::FormSequenceProblem;
use formconv::experiments::{self, Mesh1D, RotatingParams};
use formconv::linalg::{self, c64, cr, CMatrix, CVector};

/// Parameters of the runs whose results are frozen in the acceptance suite.
pub const DIRICHLET_D: usize = 511;
pub const DIRICHLET_K_MAX: usize = 64;
pub const ROTATING: RotatingParams = RotatingParams {
    d: 24,
    n_members: 12,
    theta: 0.6,
    rotation: 1.0,
    seed: 2024,
};
pub const ABSORPTION_D: usize = 63;
pub const ABSORPTION_N: usize = 16;
pub const ABSORPTION_THETA: f64 = 0.6;
pub const ABSORPTION_THETA0: f64 = 0.4;
pub const PROBE_SEED: u64 = 7;
pub const PROBES: usize = 5;

fn sub(a: &CMatrix, b: &CMatrix) -> CMatrix {
    linalg::axpy(a.as_ref(), cr(-1.0), b.as_ref())
}

/// `J ι (ι^H S ι)⁻¹ ι^H J^H` for an invertible-on-ran(ι) matrix `S`.
pub fn galerkin_resolvent(s: &CMatrix, j: &CMatrix, iota: &CMatrix) -> CMatrix {
    let d = j.nrows();
    if iota.ncols() == 0 {
        return linalg::zeros(d, d);
    }
    let ji = linalg::matmul(j.as_ref(), iota.as_ref());
    let si = linalg::matmul(s.as_ref(), iota.as_ref());
    let small = linalg::matmul(linalg::adjoint(iota.as_ref()).as_ref(), si.as_ref());
    let x = linalg::solve(small.as_ref(), linalg::adjoint(ji.as_ref()).as_ref()).unwrap();
    linalg::matmul(ji.as_ref(), x.as_ref())
}

/// `(λ+A)⁻¹` for the FEM form: `J (K + λM)⁻¹ J^H`, restricted through `ι`.
pub fn fem_resolvent(k: &CMatrix, m: &CMatrix, j: &CMatrix, iota: &CMatrix, lambda: f64) -> CMatrix {
    let s = linalg::axpy(k.as_ref(), cr(lambda), m.as_ref());
    galerkin_resolvent(&s, j, iota)
}

/// Operator-norm resolvent errors of the Dirichlet subdomain schedule.
pub fn dirichlet_op_errors(d: usize, k_max: usize, lambda: f64) -> Vec<f64> {
    let mesh = Mesh1D::uniform(d, 1.0).unwrap();
    let fem = experiments::assemble_dirichlet_1d(&mesh).unwrap();
    let r = fem_resolvent(&fem.stiffness, &fem.mass, &fem.form.j, &linalg::identity(d), lambda);
    experiments::symmetric_schedule(&mesh, k_max)
        .unwrap()
        .into_iter()
        .map(|(lo, hi)| {
            let idx: Vec<usize> = (0..d)
                .filter(|&i| {
                    let (a, b) = mesh.hat_support(fem.dofs[i]);
                    a > lo + 1e-12 && b < hi - 1e-12
                })
                .collect();
            let iota = experiments::problems::selection(d, &idx);
            let rk = fem_resolvent(&fem.stiffness, &fem.mass, &fem.form.j, &iota, lambda);
            linalg::spectral_norm(sub(&rk, &r).as_ref())
        })
        .collect()
}

/// Strong errors `max_x ‖(λ+A_n)⁻¹x − (λ+A)⁻¹x‖` of a lifted Galerkin problem
/// (`F = diag(F₀, 0)`, `J = [I, 0]`), from the visible block of each member.
pub fn lifted_strong_errors(problem: &FormSequenceProblem, lambda: f64, probes: &[CVector]) -> Vec<f64> {
    let d = problem.base.d();
    let f0 = faer::Mat::from_fn(d, d, |i, j| problem.base.f[(i, j)]);
    let s = linalg::axpy(f0.as_ref(), cr(lambda), linalg::identity(d).as_ref());
    let r = linalg::inverse(s.as_ref()).unwrap();
    let eye = linalg::identity(d);
    problem
        .members
        .iter()
        .map(|m| {
            let u = faer::Mat::from_fn(d, m.iota.ncols(), |i, j| m.iota[(i, j)]);
            let rn = galerkin_resolvent(&s, &eye, &u);
            let diff = sub(&rn, &r);
            probes
                .iter()
                .map(|x| linalg::vnorm(&linalg::matvec(diff.as_ref(), x)))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// Operator-norm errors of `K + ε_n e^{iθ₀} M` against `K`.
pub fn absorption_op_errors(d: usize, n: usize, theta0: f64, lambda: f64) -> Vec<f64> {
    let mesh = Mesh1D::uniform(d, 1.0).unwrap();
    let fem = experiments::assemble_dirichlet_1d(&mesh).unwrap();
    let eye = linalg::identity(d);
    let r = fem_resolvent(&fem.stiffness, &fem.mass, &fem.form.j, &eye, lambda);
    (1..=n)
        .map(|k| {
            let eps = 1.0 / k as f64;
            let kn = linalg::axpy(fem.stiffness.as_ref(), c64::new(theta0.cos(), theta0.sin()) * eps, fem.mass.as_ref());
            let rn = fem_resolvent(&kn, &fem.mass, &fem.form.j, &eye, lambda);
            linalg::spectral_norm(sub(&rn, &r).as_ref())
        })
        .collect()
}

pub fn rotating_problem() -> FormSequenceProblem {
    experiments::rotating_subspace_problem(&ROTATING).unwrap()
}

pub fn absorption_problem(theta0: f64) -> FormSequenceProblem {
    let mesh = Mesh1D::uniform(ABSORPTION_D, 1.0).unwrap();
    let eps: Vec<f64> = (1..=ABSORPTION_N).map(|k| 1.0 / k as f64).collect();
    experiments::absorption_problem(&mesh, ABSORPTION_THETA, theta0, &eps).unwrap()
}
