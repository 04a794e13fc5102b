//! Computing several eigenvalues of polynomial, nonlinear and multiparameter
//! eigenvalue problems with divided-difference *selection* instead of
//! deflation or locking.
//!
//! Once an eigentriplet `(λ_i, x_i, y_i)` has been found, a subspace method
//! only accepts a new approximation `(θ, v)` if
//! `|y_i^* F[λ_i, θ] v| / |y_i^* F'(λ_i) x_i| < η` for all detected triplets.
//! The divided difference `F[λ, θ]` annihilates left and right eigenvectors
//! belonging to different eigenvalues, so the test tells new eigenvalues from
//! old ones even when eigenvectors coincide.
//!
//! The main entry points are [`jdsolver::jd_solve`] for one-parameter
//! problems and [`mep::mep_subspace_solve`] for linear multiparameter
//! problems. Dense oracles ([`oracle::oracle_all_eigenpairs`],
//! [`mep::dense_solve_2p`], [`mep::dense_solve_3p`]) compute complete
//! spectra of small problems for verification.

pub mod dense;
pub mod error;
pub mod homogeneous;
pub mod io;
pub mod jdsolver;
pub mod linsolve;
pub mod mep;
pub mod oracle;
pub mod problems;
pub mod selection;
pub mod sparse;

pub use dense::C64;
pub use error::{Error, Result};
pub use homogeneous::{ExtendedScalar, ProjectivePoint};
pub use jdsolver::{jd_solve, ConvergenceRecord, Extraction, JDOptions, JdOutcome};

pub use problems::{GeneralNep, NonlinearProblem, PolyProblem};
pub use selection::{CandidatePair, EigenTriplet, EigenValue, Registry, SelectionConfig, SelectionMode};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/homogeneous.md")]
    mod homogeneous {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/multiparameter.md")]
    mod multiparameter {}
    #[doc = include_str!("../../../book/src/files-and-cli.md")]
    mod files_and_cli {}
}
