//! The matrix function `f = Xi^{-1} H`, its negative inverse `G`, recovery of
//! the boundary measure of `G` by Stieltjes inversion, and numerical checks of
//! the identities and inequalities relating them to the counting integrand.

mod checks;
pub mod complex;
mod fatou;
mod matrix;

pub use checks::{
    adapted_complex_structure_at, b_decomposition_min_eigenvalue, check_identity_chain, check_key1,
    check_theorem_nice, check_xi_identity, det_growth_bound, minkowski_det_lower_bound, DetGrowthBound,
    IdentityChain, MinkowskiMargin, NiceReport,
};
pub use complex::C64;
pub use fatou::{
    fatou_reconstruct, mass_scale, stieltjes_invert, Atom, FatouData, DEFAULT_ATOM_THRESHOLD, DEFAULT_TAU_SCHEDULE,
};
pub use matrix::{
    f_constant_curvature, f_real_axis_numeric, neg_inverse, Branch, ComplexSymMatrix, HerglotzMatrix, HerglotzSource,
};
