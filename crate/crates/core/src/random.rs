//! Seeded random matrices and vectors.
//!
//! Everything draws from `ChaCha8Rng` so experiment output is reproducible
//! across platforms for a fixed seed.

use faer::c64;
use faer::{Col, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMatrix, CVector};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex standard normal: real and imaginary parts each N(0, 1/2).
pub fn complex_normal<R: Rng + ?Sized>(r: &mut R) -> c64 {
    let re: f64 = r.sample(StandardNormal);
    let im: f64 = r.sample(StandardNormal);
    c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn random_matrix<R: Rng + ?Sized>(r: &mut R, rows: usize, cols: usize) -> CMatrix {
    Mat::from_fn(rows, cols, |_, _| complex_normal(r))
}

pub fn random_vector<R: Rng + ?Sized>(r: &mut R, n: usize) -> CVector {
    Col::from_fn(n, |_| complex_normal(r))
}

pub fn random_unit_vector<R: Rng + ?Sized>(r: &mut R, n: usize) -> CVector {
    loop {
        let v = random_vector(r, n);
        let nv = v.norm_l2();
        if nv > 1e-8 {
            return Col::from_fn(n, |i| v[i] / nv);
        }
    }
}

pub fn random_hermitian<R: Rng + ?Sized>(r: &mut R, n: usize) -> CMatrix {
    let m = random_matrix(r, n, n);
    linalg::hermitian_part(m.as_ref())
}

/// `B^H B` for a Gaussian `B` with `rank` rows.
pub fn random_psd<R: Rng + ?Sized>(r: &mut R, n: usize, rank: usize) -> CMatrix {
    let b = random_matrix(r, rank, n);
    linalg::adj_mul(b.as_ref(), b.as_ref())
}

/// Random matrix whose numerical range lies in the closed sector of half-angle
/// `theta`: `P + i·P^{1/2} S P^{1/2}` with `‖S‖ ≤ tan θ` and `P` PSD.
pub fn random_sectorial<R: Rng + ?Sized>(r: &mut R, n: usize, rank: usize, theta: f64) -> CMatrix {
    let b = random_matrix(r, rank, n);
    let p = linalg::adj_mul(b.as_ref(), b.as_ref());
    let s = random_hermitian(r, rank);
    let sn = linalg::spectral_norm(s.as_ref());
    let scale = if sn > 0.0 { theta.tan() / sn } else { 0.0 };
    // P^{1/2} S P^{1/2} congruent form: B^H (scale·S) B has range inside tan θ·Re.
    let skew = linalg::adj_mul(
        b.as_ref(),
        linalg::matmul(linalg::scaled(s.as_ref(), linalg::cr(scale)).as_ref(), b.as_ref())
            .as_ref(),
    );
    Mat::from_fn(n, n, |i, j| p[(i, j)] + linalg::I * skew[(i, j)])
}

/// Random unitary `exp(i·H)` with `‖H‖₂ = magnitude`.
pub fn random_rotation<R: Rng + ?Sized>(r: &mut R, n: usize, magnitude: f64) -> CMatrix {
    if n == 0 {
        return linalg::zeros(0, 0);
    }
    let h = random_hermitian(r, n);
    let hn = linalg::spectral_norm(h.as_ref());
    let gen = linalg::scaled(h.as_ref(), linalg::I * (magnitude / hn));
    linalg::matrix_exp(gen.as_ref(), 1.0).expect("rotation generator has bounded norm")
}
