//! One-dimensional meshes and P1 finite elements.

use crate::error::{Error, Result};
use crate::forms::FormInH;
use crate::linalg::{self, cr, CMatrix};

/// Nodes of a 1D mesh, strictly increasing, with Dirichlet flags.
#[derive(Clone, Debug)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    dirichlet: Vec<bool>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>, dirichlet: Vec<bool>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Mesh("need at least two nodes".into()));
        }
        if dirichlet.len() != nodes.len() {
            return Err(Error::Mesh("one boundary flag per node required".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::Mesh("non-finite node".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Mesh("nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes, dirichlet })
    }

    /// `interior + 2` equispaced nodes on `[0, length]`, Dirichlet at both ends.
    pub fn uniform(interior: usize, length: f64) -> Result<Self> {
        if length.is_nan() || length <= 0.0 {
            return Err(Error::Mesh("length must be positive".into()));
        }
        let n = interior + 2;
        let h = length / (n - 1) as f64;
        let nodes = (0..n).map(|i| i as f64 * h).collect();
        let mut dirichlet = vec![false; n];
        dirichlet[0] = true;
        dirichlet[n - 1] = true;
        Self::new(nodes, dirichlet)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Indices of the free (non-Dirichlet) nodes, which carry the hat basis.
    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| !self.dirichlet[i]).collect()
    }

    /// Closed support `[x_{i−1}, x_{i+1}]` of the hat at node `i`, clipped to
    /// the mesh.
    pub fn hat_support(&self, i: usize) -> (f64, f64) {
        let lo = self.nodes[i.saturating_sub(1)];
        let hi = self.nodes[(i + 1).min(self.nodes.len() - 1)];
        (lo, hi)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }
}

/// Stiffness and mass matrices of the hats on the free nodes, and the form
/// `(a, j)` with `F = K` and `J = L^H` for `M = L L^H`.
#[derive(Clone, Debug)]
pub struct FemAssembly {
    pub form: FormInH,
    pub stiffness: CMatrix,
    pub mass: CMatrix,
    /// Free node indices, in basis order.
    pub dofs: Vec<usize>,
}

/// P1 assembly of `a(f, g) = ∫ f′ ḡ′` with the mass-orthonormalized
/// coordinate space as `H`, so `‖J u‖` is the `L₂` norm of the interpolant.
///
/// On a uniform mesh with spacing `h` this gives `K = (1/h)·tridiag(−1, 2, −1)`
/// and `M = (h/6)·tridiag(1, 4, 1)`.
pub fn assemble_dirichlet_1d(mesh: &Mesh1D) -> Result<FemAssembly> {
    let dofs = mesh.free_nodes();
    let n = dofs.len();
    let mut index = vec![usize::MAX; mesh.nodes.len()];
    for (k, &i) in dofs.iter().enumerate() {
        index[i] = k;
    }
    let mut k = linalg::zeros(n, n);
    let mut m = linalg::zeros(n, n);
    for e in 0..mesh.nodes.len() - 1 {
        let h = mesh.nodes[e + 1] - mesh.nodes[e];
        let local_k = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
        let local_m = [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]];
        let ends = [index[e], index[e + 1]];
        for a in 0..2 {
            for b in 0..2 {
                if ends[a] == usize::MAX || ends[b] == usize::MAX {
                    continue;
                }
                let (i, j) = (ends[a], ends[b]);
                k[(i, j)] += cr(local_k[a][b]);
                m[(i, j)] += cr(local_m[a][b]);
            }
        }
    }
    let j = if n == 0 {
        linalg::zeros(0, 0)
    } else {
        let chol = m
            .llt(faer::Side::Lower)
            .map_err(|_| Error::Mesh("mass matrix is not positive definite".into()))?;
        linalg::adjoint(chol.L())
    };
    let form = FormInH::new(k.clone(), j)?;
    Ok(FemAssembly {
        form,
        stiffness: k,
        mass: m,
        dofs,
    })
}

/// Smallest eigenvalue of `K u = λ M u`, computed as the smallest eigenvalue
/// of `J^{-H} K J^{-1}`.
pub fn smallest_generalized_eigenvalue(fem: &FemAssembly) -> Result<f64> {
    let j = &fem.form.j;
    let jinv = linalg::inverse(j.as_ref())?;
    let a = linalg::adj_mul(jinv.as_ref(), linalg::matmul(fem.stiffness.as_ref(), jinv.as_ref()).as_ref());
    let a = linalg::hermitian_part(a.as_ref());
    Ok(linalg::hermitian_eigenvalues(a.as_ref())?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_interior_nodes() {
        let fem = assemble_dirichlet_1d(&Mesh1D::uniform(3, 1.0).unwrap()).unwrap();
        let k = &fem.stiffness;
        for i in 0..3 {
            assert!((k[(i, i)].re - 8.0).abs() < 1e-12);
        }
        assert!((k[(0, 1)].re + 4.0).abs() < 1e-12);
        assert!((k[(1, 2)].re + 4.0).abs() < 1e-12);
        assert_eq!(k[(0, 2)], cr(0.0));
        assert!((fem.mass[(0, 0)].re - 1.0 / 6.0).abs() < 1e-15);
        assert!((fem.mass[(0, 1)].re - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn single_interior_node() {
        let fem = assemble_dirichlet_1d(&Mesh1D::uniform(1, 1.0).unwrap()).unwrap();
        assert!((fem.stiffness[(0, 0)].re - 4.0).abs() < 1e-14);
    }

    #[test]
    fn j_realizes_the_l2_norm() {
        let fem = assemble_dirichlet_1d(&Mesh1D::uniform(9, 1.0).unwrap()).unwrap();
        let jhj = linalg::adj_mul(fem.form.j.as_ref(), fem.form.j.as_ref());
        let err = linalg::frob(linalg::axpy(jhj.as_ref(), cr(-1.0), fem.mass.as_ref()).as_ref());
        assert!(err < 1e-15);
    }

    #[test]
    fn lowest_eigenvalue_approximates_pi_squared() {
        let fem = assemble_dirichlet_1d(&Mesh1D::uniform(63, 1.0).unwrap()).unwrap();
        let l = smallest_generalized_eigenvalue(&fem).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(((l - pi2) / pi2).abs() < 1e-3, "{l}");
        assert!(l > pi2);
    }

    #[test]
    fn invalid_meshes() {
        assert!(Mesh1D::new(vec![0.0], vec![true]).is_err());
        assert!(Mesh1D::new(vec![0.0, 0.0], vec![true, true]).is_err());
        assert!(Mesh1D::new(vec![0.0, 1.0], vec![true]).is_err());
        assert!(Mesh1D::uniform(3, 0.0).is_err());
    }
}
