//! Canned experiments and their specification format.

pub mod mesh;
pub mod problems;

use serde::{Deserialize, Serialize};

use crate::convergence::FormSequenceProblem;
use crate::error::{Error, Result};
use crate::linalg::CVector;
use crate::random;

pub use mesh::{assemble_dirichlet_1d, smallest_generalized_eigenvalue, FemAssembly, Mesh1D};
pub use problems::{
    absorption_problem, dirichlet_partial_base_problem, dirichlet_subdomain_problem, galerkin_problem,
    rotating_subspace_problem, symmetric_schedule, RotatingParams,
};

/// Largest fine dimension accepted by the experiments.
pub const MAX_DIM: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Galerkin1d,
    Dirichlet1d,
    RotatingSubspaces,
    Absorption,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "galerkin-1d" => Ok(Self::Galerkin1d),
            "dirichlet-1d" => Ok(Self::Dirichlet1d),
            "rotating-subspaces" => Ok(Self::RotatingSubspaces),
            "absorption" => Ok(Self::Absorption),
            other => Err(Error::Schema {
                field: "kind".into(),
                reason: format!(
                    "unknown experiment `{other}` (expected galerkin-1d, dirichlet-1d, rotating-subspaces or absorption)"
                ),
            }),
        }
    }
}

/// Experiment description. `n` is the number of members; for `dirichlet-1d`
/// the schedule is `k = 2, 4, …, 2n`, for `absorption` `ε_k = 1/k`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub lambda: f64,
    pub theta: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: String| Error::Schema {
            field: field.into(),
            reason,
        };
        if self.d == 0 || self.d > MAX_DIM {
            return Err(bad("d", format!("must lie in 1..={MAX_DIM}, got {}", self.d)));
        }
        if self.n == 0 {
            return Err(bad("N", "must be positive".into()));
        }
        if !self.lambda.is_finite() || self.lambda <= -self.gamma {
            return Err(bad("lambda", format!("must exceed -gamma = {}", -self.gamma)));
        }
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&self.theta) {
            return Err(bad("theta", "must lie in [0, pi/2)".into()));
        }
        if !self.gamma.is_finite() {
            return Err(bad("gamma", "must be finite".into()));
        }
        if self.kind == ExperimentKind::Absorption {
            match self.theta0 {
                Some(t) if (0.0..std::f64::consts::FRAC_PI_2).contains(&t) => {}
                Some(_) => return Err(bad("theta0", "must lie in [0, pi/2)".into())),
                None => return Err(bad("theta0", "required for absorption".into())),
            }
        }
        Ok(())
    }

    /// Builds the form sequence; the sector is `(theta, gamma)` from the spec.
    pub fn build(&self) -> Result<FormSequenceProblem> {
        self.validate()?;
        let mut problem = match self.kind {
            ExperimentKind::Galerkin1d => galerkin_problem(self.d, self.n)?,
            ExperimentKind::Dirichlet1d => {
                let mesh = Mesh1D::uniform(self.d, 1.0)?;
                let schedule = symmetric_schedule(&mesh, 2 * self.n)?;
                dirichlet_subdomain_problem(&mesh, &schedule)?
            }
            ExperimentKind::RotatingSubspaces => rotating_subspace_problem(&RotatingParams {
                d: self.d,
                n_members: self.n,
                theta: self.theta,
                rotation: 1.0,
                seed: self.seed,
            })?,
            ExperimentKind::Absorption => {
                let mesh = Mesh1D::uniform(self.d, 1.0)?;
                let eps: Vec<f64> = (1..=self.n).map(|k| 1.0 / k as f64).collect();
                absorption_problem(&mesh, self.theta, self.theta0.unwrap_or(0.0), &eps)?
            }
        };
        problem.sector = crate::forms::Sector::new(self.theta, self.gamma)?;
        Ok(problem)
    }
}

/// `count` seeded unit vectors in `ℂ^d`.
pub fn probes(d: usize, count: usize, seed: u64) -> Vec<CVector> {
    let mut rng = random::rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..count).map(|_| random::random_unit_vector(&mut rng, d)).collect()
}
