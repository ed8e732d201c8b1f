//! Local structure analysis for systems of interacting particles.
//!
//! The pipeline has two stages: a stochastically robustified Voronoi model
//! demarcates each particle's neighborhood, and an information-theoretic
//! coefficient scores how geometrically ordered that neighborhood is. The
//! coefficient measures the information saved by enumerating a neighborhood's
//! unique bond angles instead of its bond pairs, so regular environments
//! (lattices, icosahedra, five-fold quasicrystal vertices) score high and
//! disordered ones score low.
//!
//! Supporting modules procedurally generate reference systems (Bravais
//! lattices, a faulted fcc crystal, Penrose tiling vertices, Poisson-disk
//! packings), simulate thermal noise with correlated Gaussian displacements,
//! and post-process results (rank correlations, spatial autocorrelation,
//! mesh classification).

pub mod analysis;
pub mod cli;
pub mod extracop;
pub mod generators;
pub mod grid;
pub mod neighborhoods;
pub mod seed;
pub mod system;
pub mod thermal;
pub mod validate;
pub mod voronoi;
pub mod xyz;

pub use crate::extracop::{
    analyze, bond_angles, coefficient, discretize_angles, max_coefficient, polygon_coefficient,
    AnglePartition, BondSet, ExtracopResult, DEFAULT_RMSE_THRESHOLD,
};
pub use crate::neighborhoods::{
    naive_neighborhood, robust_voronoi_neighborhood, voronoi_neighborhood, NeighborMap,
    PerturbationConfig,
};
pub use crate::seed::SeedPolicy;
pub use crate::system::{Dim, ParticleSystem};

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("particle index {index} out of range (system has {len} particles)")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid input: {0}")]
    Domain(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 input errors, 3 capacity/numerical,
    /// 1 everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } | Error::Io(_) => 2,
            Error::Capacity(_) | Error::Numerical(_) => 3,
            _ => 1,
        }
    }
}
