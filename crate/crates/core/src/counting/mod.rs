//! The Berger-Bott integral for the total counting function, combinatorial
//! oracles on spheres and tori, growth classification and the loop-space
//! comparison on spheres.

mod berger_bott;
mod curve;
mod gromov;
mod growth;
mod oracles;

pub use berger_bott::{berger_bott_curve, berger_bott_integrand, berger_bott_total};
pub use curve::{CountingCurve, CountingMethod};
pub use gromov::{
    check_gromov_inequality, loop_space_betti_partial_sums, minimal_gromov_constant, GromovOptions, GromovReport,
    GromovRow, GromovSearch, LoopSpace,
};
pub use growth::{classify_growth, GrowthClass, GrowthReport};
pub use oracles::{count_sphere_arcs, count_torus_lattice, torus_count_integral_oracle, torus_count_integral_oracle_curve};
