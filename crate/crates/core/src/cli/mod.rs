//! Manifest-driven experiment runner.
//!
//! A manifest is an INI file with three sections. Keys not listed here are
//! rejected.
//!
//! ```text
//! [manifold]
//! kind = sphere | hyperbolic | euclidean | constant_curvature | flat_torus | warped_product
//! c = <float>              ; curvature (sphere defaults to 1, hyperbolic to -1)
//! n = <int>                ; dimension
//! basis = 1 0; 0 1         ; flat torus lattice vectors, one per row (default: identity)
//! warp = linear | sine | sinh | cubic
//! warp_param = <float>     ; k for sine/sinh, a for cubic
//! entire_tube = true|false ; declared, never detected
//!
//! [task]
//! task = count | growth | herglotz_verify | lemma_suite | gromov
//! t = 1, 2, 5              ; or t_range = start, stop, count
//! scheme = product_gauss | monte_carlo
//! order = 32
//! step = 1e-3
//! seed = 0
//! oracle_samples = 0       ; flat torus only: Monte Carlo lattice oracle
//! expected_growth = polynomial(1) | exponential
//! tau = 1e-1, 1e-2, 1e-3   ; Stieltjes inversion schedule
//! interval = -1, 7
//! atom_threshold = 0.1
//! samples = 20             ; sigma samples for the identity checks
//! k_max = 50
//! c_grid = 0.5, 1, 2, 5, 10
//! space = sphere(2)
//!
//! [output]
//! dir = .
//! prefix = <task name>
//! ```
//!
//! The manifest hash covers `[manifold]` and `[task]` in canonical order, so
//! moving the output directory does not change it.

pub mod manifest;
pub mod report;
pub mod runner;

pub use manifest::{ExperimentManifest, RawManifest, Task};
pub use report::{emit_report, CheckResult, Relation, Report};
pub use runner::{execute, run_manifest, write_artifacts, Artifact, ExitStatus, RunError, RunOutcome, VERSION};
