//! Numerical machinery for set optimization over finite-family set-valued
//! maps `F(x) = {f_1(x), ..., f_p(x)}` ordered by a solid pointed polyhedral
//! cone `K`.
//!
//! The crate evaluates set-order relations (lower-/upper-less), the
//! Gerstewitz scalarizing functional and its subdifferential, the
//! scalarization functionals `g_l`, `g_u`, `f_l`, `f_u`, the coderivative
//! polytopes that upper-estimate their subdifferentials, and certifies
//! lower-/upper-stationarity of candidate points via a convex-hull
//! membership kernel. Brute-force grid and sampling oracles cross-check
//! every analytic path at desk scale.

pub mod cone;
pub mod error;
pub mod expr;
pub mod hull;
pub mod linalg;
pub mod normals;
pub mod oracle;
pub mod problem;
pub mod scalarize;
pub mod scalfun;
pub mod setmap;
pub mod setrel;
pub mod solver;
pub mod stationarity;
pub mod tol;

pub use cone::{ConeContext, Region};
pub use error::Error;
pub use expr::Expression;
pub use hull::MembershipCertificate;
pub use normals::{EstimatePolytope, NormalConeDescriptor};
pub use oracle::GridVerdict;
pub use problem::{Omega, ProblemFile};
pub use scalarize::SubdifferentialFace;
pub use scalfun::ScalarizationResult;
pub use setmap::{ImageSet, SetMap};
pub use setrel::{ExtremalKind, PointSet, Relation};
pub use solver::DescentTrace;
pub use stationarity::StationarityCertificate;
pub use tol::Tolerances;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
