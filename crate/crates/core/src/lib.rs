//! Injective low-dimensional embeddings of simplicial meshes by fixed-point
//! Laplacian mapping, with an independent validity auditor.
//!
//! The pipeline is: build or load a [`SimplicialMesh`], run [`run_fplm`] to
//! obtain an [`Embedding`], then [`audit`] the result.

pub mod fplm;
pub mod generators;
pub mod hull;
pub mod laplacian;
pub mod matrix;
pub mod meshio;
pub mod predicates;
pub mod simplicial;
pub mod solver;
pub mod sparse;
pub mod validity;

pub use fplm::{
    run_fplm, Branch, Embedding, FixedKind, FixedPointSet, FplmError, FplmOptions,
    PolygonOrientation, SeedStrategy,
};

pub use generators::{generate, GeneratedMesh, GeneratorError, GeneratorKind, GeneratorSpec, Resolution, Triangulation};
pub use laplacian::{build_weights, WeightedGraph, DEFAULT_GAMMA};
pub use matrix::Matrix;
pub use simplicial::{
    detect_boundary, detect_dividing_simplices, validate_mesh, BoundaryComplex, MeshError,
    SimplicialMesh, Violation,
};
pub use solver::{SolveConfig, SolveMethod};
pub use validity::{audit, AuditOptions, AuditPartition, ValidityReport, Verdict};
