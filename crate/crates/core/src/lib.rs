//! Quasi-sectorial forms in finite dimension: completion, associated linear
//! relations and resolvents, the extended Céa bound, resolvent and semigroup
//! convergence for sequences of forms.
//!
//! Forms follow the convention `a(x, y) = y^H F x` (linear in the first
//! argument). See [`forms`] for details.

pub mod cli;
pub mod completion;
pub mod convergence;
pub mod error;
pub mod experiments;
pub mod forms;
pub mod io;
pub mod lax_milgram;
pub mod linalg;
pub mod random;
pub mod relation;
pub mod semigroup;

pub use error::{Error, Result};
pub use forms::{FormInH, Sector, SectorCheckReport};
pub use linalg::{c64, CMatrix, CVector};
