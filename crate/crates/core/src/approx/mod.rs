//! Approximation results: the smooth maximum, the collision map `Gamma_N`,
//! the cube-to-simplex map `nu_n`, collision search and the error bound it
//! implies for any sum-decomposition through `R^(M-1)`.

pub mod bound;
pub mod collision;
pub mod contours;
pub mod gamma;
pub mod lse;
pub mod nu;
pub mod phi;
pub mod search;

pub use bound::{
    error_lower_bound, sampled_lipschitz, Decomposition, ErrorBound, SumDecomposition,
};
pub use collision::{
    declared_tolerance, find_collision, Candidate, CollisionCertificate, SearchBudget, SearchTrace,
    CERTIFICATE_SCHEMA,
};
pub use contours::{emit_contour_grid, grid_coord, ContourGrid, ContourTarget};
pub use gamma::{gamma, left_shift, ShiftedPhi};
pub use lse::lse_max;
pub use nu::nu;
pub use phi::{PhiMap, PhiSpec};
