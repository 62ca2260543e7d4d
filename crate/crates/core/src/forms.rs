//! Sesquilinear forms in a Hilbert space and sector checks.
//!
//! **Convention.** A form is stored as a matrix `F` with
//! `a(x, y) = y^H F x`: linear in the first argument, conjugate-linear in the
//! second. The quadratic form is `a(x) = a(x, x) = x^H F x`.
//!
//! A form in `H` is the pair `(a, j)` where `j: dom(a) → H` is an arbitrary
//! linear map (`J`, `d × m`). Nothing requires `j` to be injective or to have
//! dense range.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Error, Result};
use crate::linalg::{self, c64, CMatrix, CVector};

/// Relative PSD tolerance used by the sector criterion.
pub const SECTOR_TOL: f64 = 1e-10;

/// Closed sector `γ + Σ̄_θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub theta: f64,
    pub gamma: f64,
}

impl Sector {
    pub fn new(theta: f64, gamma: f64) -> Result<Self> {
        check_angle(theta)?;
        if !gamma.is_finite() {
            return Err(contract("sector vertex must be finite"));
        }
        Ok(Self { theta, gamma })
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }
}

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..FRAC_PI_2).contains(&theta) {
        return Err(contract(format!("sector angle {theta} outside [0, pi/2)")));
    }
    Ok(())
}

/// A form `(a, j)` in `H`: `F` is `m × m`, `J` is `d × m`.
#[derive(Clone, Debug)]
pub struct FormInH {
    pub f: CMatrix,
    pub j: CMatrix,
}

impl FormInH {
    pub fn new(f: CMatrix, j: CMatrix) -> Result<Self> {
        if f.nrows() != f.ncols() {
            return Err(contract(format!(
                "form matrix must be square, got {}x{}",
                f.nrows(),
                f.ncols()
            )));
        }
        if j.ncols() != f.ncols() {
            return Err(contract(format!(
                "J has {} columns but dom(a) has dimension {}",
                j.ncols(),
                f.ncols()
            )));
        }
        if !f.is_all_finite() || !j.is_all_finite() {
            return Err(contract("form has non-finite entries"));
        }
        Ok(Self { f, j })
    }

    /// The embedded form `(a, id)` on `ℂ^m`.
    pub fn embedded(f: CMatrix) -> Result<Self> {
        let m = f.nrows();
        Self::new(f, linalg::identity(m))
    }

    /// `dim dom(a)`.
    pub fn m(&self) -> usize {
        self.f.ncols()
    }

    /// `dim H`.
    pub fn d(&self) -> usize {
        self.j.nrows()
    }

    pub fn eval(&self, x: &CVector, y: &CVector) -> c64 {
        linalg::sesq(self.f.as_ref(), x, y)
    }

    pub fn quadratic(&self, x: &CVector) -> c64 {
        self.eval(x, x)
    }

    /// `J^H J`, the Gram matrix of `⟨j·, j·⟩_H`.
    pub fn j_gram(&self) -> CMatrix {
        linalg::adj_mul(self.j.as_ref(), self.j.as_ref())
    }

    /// The form `a + s⟨j·, j·⟩_H` with the same `j`.
    pub fn shifted(&self, s: f64) -> Self {
        let f = if s == 0.0 {
            self.f.clone()
        } else {
            linalg::axpy(self.f.as_ref(), linalg::cr(s), self.j_gram().as_ref())
        };
        Self {
            f,
            j: self.j.clone(),
        }
    }
}

/// Result of [`sector_verify`].
#[derive(Clone, Debug)]
pub struct SectorCheckReport {
    pub passes: bool,
    /// Smallest eigenvalue among the three PSD tests, divided by the scale.
    pub margin: f64,
    /// A vector `u` with `a(u) - γ‖ju‖² ∉ Σ̄_θ`, present when the check fails.
    pub witness: Option<CVector>,
}

/// `z ∈ Σ̄_θ`, boundary included.
pub fn sigma_membership(z: c64, theta: f64) -> Result<bool> {
    check_angle(theta)?;
    Ok(sector_violation(z, theta) <= 0.0)
}

/// Amount by which `z` lies outside `Σ̄_θ`; non-positive iff inside.
///
/// `max(-Re z, |Im z| - tan θ · Re z)`.
pub fn sector_violation(z: c64, theta: f64) -> f64 {
    (-z.re).max(z.im.abs() - theta.tan() * z.re)
}

/// `(F + F^H) / 2`, the matrix of `Re a`.
pub fn real_part(f: &CMatrix) -> Result<CMatrix> {
    if f.nrows() != f.ncols() {
        return Err(contract("real_part: matrix must be square"));
    }
    Ok(linalg::hermitian_part(f.as_ref()))
}

/// Exact check of `a(u) - γ‖j(u)‖² ∈ Σ̄_θ` for all `u`.
///
/// With `F' = F - γ J^H J`, the numerical range of `F'` lies in `Σ̄_θ` iff
/// `Re F'`, `tan θ·Re F' + Im F'` and `tan θ·Re F' - Im F'` are all PSD.
/// Eigenvalues are compared against `-1e-10·max(‖F‖, ‖F'‖)`.
pub fn sector_verify(form: &FormInH, sector: Sector) -> SectorCheckReport {
    let m = form.m();
    if m == 0 {
        return SectorCheckReport {
            passes: true,
            margin: 0.0,
            witness: None,
        };
    }
    let fp = if sector.gamma == 0.0 {
        form.f.clone()
    } else {
        form.shifted(-sector.gamma).f
    };
    verify_shifted(form, &fp, sector.theta)
}

fn form_scale(form: &FormInH, fp: &CMatrix) -> f64 {
    linalg::spectral_norm(form.f.as_ref()).max(linalg::spectral_norm(fp.as_ref()))
}

fn verify_shifted(form: &FormInH, fp: &CMatrix, theta: f64) -> SectorCheckReport {
    verify_matrix(fp, theta, form_scale(form, fp))
}

/// Numerical range of `fp` against `Σ̄_θ`, with eigenvalues compared against
/// `-1e-10·scale`. Lets callers whose matrix is a difference of larger forms
/// measure rounding relative to those forms.
pub fn verify_matrix(fp: &CMatrix, theta: f64, scale: f64) -> SectorCheckReport {
    if fp.nrows() == 0 || linalg::frob(fp.as_ref()) == 0.0 {
        return SectorCheckReport {
            passes: true,
            margin: 0.0,
            witness: None,
        };
    }
    let scale = scale.max(linalg::spectral_norm(fp.as_ref())).max(f64::MIN_POSITIVE);
    let re = linalg::hermitian_part(fp.as_ref());
    let im = linalg::skew_part(fp.as_ref());
    let t = theta.tan();
    let mut candidates = vec![re.clone()];
    if linalg::frob(im.as_ref()) > 0.0 {
        candidates.push(linalg::axpy(im.as_ref(), linalg::cr(t), re.as_ref()));
        candidates.push(linalg::axpy(
            linalg::scaled(im.as_ref(), linalg::cr(-1.0)).as_ref(),
            linalg::cr(t),
            re.as_ref(),
        ));
    }
    let mut worst = f64::INFINITY;
    let mut worst_idx = 0;
    for (k, c) in candidates.iter().enumerate() {
        let ev = linalg::hermitian_eigenvalues(c.as_ref()).expect("Hermitian by construction");
        let lo = ev[0];
        if lo < worst {
            worst = lo;
            worst_idx = k;
        }
    }
    let margin = worst / scale;
    let passes = margin >= -SECTOR_TOL;
    let witness = if passes {
        None
    } else {
        let eig = linalg::hermitian_eig(candidates[worst_idx].as_ref()).expect("Hermitian");
        Some(linalg::col_of(eig.eigenvectors.as_ref(), 0))
    };
    SectorCheckReport {
        passes,
        margin,
        witness,
    }
}

/// Gram matrix of `⟨x, y⟩_{a,j} = Re a(x, y) + (1 - γ)⟨jx, jy⟩_H`, unchecked.
pub fn gram_matrix(form: &FormInH, gamma: f64) -> CMatrix {
    let re = linalg::hermitian_part(form.f.as_ref());
    if gamma == 1.0 {
        return re;
    }
    linalg::axpy(re.as_ref(), linalg::cr(1.0 - gamma), form.j_gram().as_ref())
}

/// The semi-inner product `⟨·,·⟩_{a,j}` for vertex `γ`, as a PSD Gram matrix.
pub fn semi_inner_gram(form: &FormInH, gamma: f64) -> Result<CMatrix> {
    let g = gram_matrix(form, gamma);
    if form.m() == 0 {
        return Ok(g);
    }
    let ev = linalg::hermitian_eigenvalues(g.as_ref())?;
    let scale = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if ev[0] < -1e-8 * scale {
        return Err(Error::NotSectorial(format!(
            "not quasi-sectorial with vertex {gamma}: Gram eigenvalue {:e} (norm {scale:e})",
            ev[0]
        )));
    }
    Ok(g)
}

/// Smallest angle (to within `1e-6`) for which `sector_verify` passes with
/// vertex `gamma`. `None` if even `π/2 - 1e-6` fails.
pub fn fit_minimal_angle(form: &FormInH, gamma: f64) -> Option<f64> {
    if form.m() == 0 {
        return Some(0.0);
    }
    let fp = form.shifted(-gamma).f;
    fit_matrix_angle(&fp, form_scale(form, &fp))
}

/// [`fit_minimal_angle`] for a bare matrix, with [`verify_matrix`] scaling.
pub fn fit_matrix_angle(fp: &CMatrix, scale: f64) -> Option<f64> {
    let passes = |theta: f64| verify_matrix(fp, theta, scale).passes;
    let hi_limit = FRAC_PI_2 - 1e-6;
    if passes(0.0) {
        return Some(0.0);
    }
    if !passes(hi_limit) {
        return None;
    }
    let (mut lo, mut hi) = (0.0, hi_limit);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if passes(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, from_real_fn, identity, real_diag};
    use crate::random::{random_matrix, random_unit_vector, random_vector, rng};
    use std::f64::consts::FRAC_PI_4;

    fn jordan() -> FormInH {
        let f = from_real_fn(2, 2, |i, j| if i == 0 && j == 1 { 1.0 } else { 0.0 });
        FormInH::embedded(f).unwrap()
    }

    fn diag_1_1pi() -> FormInH {
        FormInH::embedded(linalg::diag(&[cr(1.0), c64::new(1.0, 1.0)])).unwrap()
    }

    #[test]
    fn sigma_membership_examples() {
        assert!(sigma_membership(c64::new(0.0, 0.0), 0.3).unwrap());
        assert!(sigma_membership(c64::new(1.0, 1.0), FRAC_PI_4 + 1e-15).unwrap());
        assert!(!sigma_membership(c64::new(1.0, 2.0), FRAC_PI_4).unwrap());
        assert!(!sigma_membership(c64::new(0.0, 1e-3), 1.0).unwrap());
        assert!(sigma_membership(c64::new(2.0, 0.0), 0.0).unwrap());
        assert!(sigma_membership(c64::new(1.0, 0.0), FRAC_PI_2).is_err());
        assert!(sigma_membership(c64::new(1.0, 0.0), -0.1).is_err());
    }

    #[test]
    fn real_part_examples() {
        let f = linalg::diag(&[c64::new(1.0, 1.0), cr(2.0)]);
        let r = real_part(&f).unwrap();
        assert_eq!(r[(0, 0)], cr(1.0));
        assert_eq!(r[(1, 1)], cr(2.0));
        assert_eq!(r[(0, 1)], cr(0.0));

        let f = from_real_fn(2, 2, |i, j| if i == 0 && j == 1 { 2.0 } else { 0.0 });
        let r = real_part(&f).unwrap();
        assert_eq!(r[(0, 1)], cr(1.0));
        assert_eq!(r[(1, 0)], cr(1.0));
        assert!(real_part(&linalg::zeros(2, 3)).is_err());
    }

    #[test]
    fn real_part_matches_quadratic_form() {
        let mut r = rng(1);
        let f = random_matrix(&mut r, 5, 5);
        let re = real_part(&f).unwrap();
        for _ in 0..20 {
            let x = random_vector(&mut r, 5);
            let direct = linalg::sesq(f.as_ref(), &x, &x).re;
            let via = linalg::sesq(re.as_ref(), &x, &x);
            assert!((direct - via.re).abs() < 1e-12 * (1.0 + direct.abs()));
            assert!(via.im.abs() < 1e-12 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn identity_form_at_vertex_one_passes() {
        let form = FormInH::embedded(identity(3)).unwrap();
        for theta in [0.0, 0.4, 1.2] {
            assert!(sector_verify(&form, Sector::new(theta, 1.0).unwrap()).passes);
        }
    }

    #[test]
    fn diag_one_one_plus_i_passes_at_quarter_pi() {
        let form = diag_1_1pi();
        let rep = sector_verify(&form, Sector::new(FRAC_PI_4, 0.0).unwrap());
        assert!(rep.passes);
        let mut r = rng(2);
        for _ in 0..10_000 {
            let u = random_unit_vector(&mut r, 2);
            assert!(sector_violation(form.quadratic(&u), FRAC_PI_4) <= 1e-12);
        }
        assert!(!sector_verify(&form, Sector::new(0.7, 0.0).unwrap()).passes);
    }

    #[test]
    fn jordan_block_fails_with_witness() {
        let form = jordan();
        for theta in [0.0, 0.5, 1.5] {
            let rep = sector_verify(&form, Sector::new(theta, 0.0).unwrap());
            assert!(!rep.passes);
            let w = rep.witness.expect("witness");
            assert!(sector_violation(form.quadratic(&w), theta) > 1e-12);
        }
    }

    #[test]
    fn empty_domain_passes_vacuously() {
        let form = FormInH::new(linalg::zeros(0, 0), linalg::zeros(3, 0)).unwrap();
        assert!(sector_verify(&form, Sector::new(0.0, 5.0).unwrap()).passes);
        assert_eq!(fit_minimal_angle(&form, 0.0), Some(0.0));
    }

    #[test]
    fn semi_inner_gram_examples() {
        let form = FormInH::embedded(identity(2)).unwrap();
        let g1 = semi_inner_gram(&form, 1.0).unwrap();
        assert_eq!(g1[(0, 0)], cr(1.0));
        let g0 = semi_inner_gram(&form, 0.0).unwrap();
        assert_eq!(g0[(1, 1)], cr(2.0));
        assert_eq!(g0[(0, 1)], cr(0.0));

        let f = real_diag(&[1.0, 0.0]);
        let j = from_real_fn(2, 2, |i, k| if i == 0 && k == 0 { 1.0 } else { 0.0 });
        let form = FormInH::new(f, j).unwrap();
        let g = semi_inner_gram(&form, 1.0).unwrap();
        assert_eq!(g[(0, 0)], cr(1.0));
        assert_eq!(g[(1, 1)], cr(0.0));
    }

    #[test]
    fn semi_inner_gram_rejects_wrong_vertex() {
        let form = FormInH::embedded(identity(2)).unwrap();
        assert!(matches!(
            semi_inner_gram(&form, 3.0),
            Err(Error::NotSectorial(_))
        ));
    }

    #[test]
    fn minimal_angle_examples() {
        let form = FormInH::embedded(identity(3)).unwrap();
        assert!(fit_minimal_angle(&form, 0.0).unwrap() < 1e-6);
        let th = fit_minimal_angle(&diag_1_1pi(), 0.0).unwrap();
        assert!((th - FRAC_PI_4).abs() < 1e-6, "{th}");
        assert!(fit_minimal_angle(&jordan(), 0.0).is_none());
    }

    #[test]
    fn form_constructor_validates() {
        assert!(FormInH::new(linalg::zeros(2, 3), linalg::zeros(2, 3)).is_err());
        assert!(FormInH::new(identity(2), linalg::zeros(2, 3)).is_err());
    }
}
