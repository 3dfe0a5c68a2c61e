//! Combinatorial and Morse-theoretic invariants of complex hyperplane
//! arrangements.
//!
//! The crate computes the intersection lattice and `chi(M)` of the complement
//! `M = C^n \ H`, locates and certifies the critical points of the master
//! function `Phi_alpha = prod xi_i^alpha_i`, integrates the gradient and
//! circle-valued flows of `f_alpha = |Phi_alpha|`, samples the analytic
//! bounds that control those flows near `H`, and computes Aomoto complex
//! cohomology. [`report::full_report`] ties the pieces together into the
//! predicted Novikov rank table.

pub mod arrangement;
pub mod bounds;
pub mod error;
pub mod flows;
pub mod lattice;
pub mod linalg;
pub mod master;
pub mod os_aomoto;
pub mod report;

pub type Complex = num::complex::Complex64;

pub use arrangement::{parse_arrangement, serialize_arrangement, Arrangement, Hyperplane, Weight, Weights};
pub use error::{Error, Result};
pub use lattice::{build_lattice, essentialize, Essentialization, Flat, Lattice, LatticeMode};
pub use master::{
    certify_morse, find_critical_points, CriticalPoint, CriticalSet, SearchStatus, SolverConfig,
};
pub use bounds::{BoundCertificate, InequalityId};
pub use flows::{Field, Trajectory, WeightRank};
pub use os_aomoto::{AomotoComplex, OSAlgebra, ResonanceReport};
pub use report::{full_report, verify_identities, IdentityReport, RankReport, ReportConfig};
