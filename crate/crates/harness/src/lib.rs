//! Testing and exploration tools for fuse: random core programs, soundness
//! checks, a reference evaluator for surface programs, view-lowering
//! oracles and design-space sweeps.

pub mod dse;
pub mod fuzz;
pub mod gen;
pub mod goldens;
pub mod preservation;
pub mod reference;
pub mod soundness;
pub mod surface_gen;
pub mod views;

pub use gen::{generate_well_typed, random_inputs, GenConfig};
pub use soundness::{assert_progress_preservation, compare_semantics, shrink, Agreement, Verdict};
