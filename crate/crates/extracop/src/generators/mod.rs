//! Procedural generation of test systems: Bravais lattices, an fcc crystal
//! with an extrinsic stacking fault, Penrose rhombus-tiling vertices, and
//! Poisson-disk random packings.

mod fault;
mod lattice;
mod penrose;
mod poisson;

pub use fault::{generate_fcc_with_extrinsic_stacking_fault, FaultSpec, FaultedCrystal, LayerRole};
pub use lattice::{generate_lattice, packing_factor, LatticeKind, LatticeSpec};
pub use penrose::{generate_penrose_vertices, PenroseOutput};
pub use poisson::{generate_poisson_disk, PackingSpec};
