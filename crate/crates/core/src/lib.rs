//! Numerical laboratory for stationary surfaces of prescribed mean curvature
//! with a free boundary on a support surface with edge.

pub mod error;
pub mod analysis;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod mesh;
pub mod poly;
pub mod quadrature;
pub mod scalar;
pub mod solver;
pub mod transform;
pub mod vekua;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double precision aliases.
pub type Chart = geometry::SupportChart<f64>;
pub type Field = geometry::FieldQ<f64>;
pub type Mesh = mesh::HalfDiscMesh<f64>;
pub type Map = solver::DiscreteMap<f64>;
pub type ArcData = solver::ArcData<f64>;
pub type Problem = solver::Problem<f64>;
pub type SolveOptions = solver::SolveOptions<f64>;
pub type SolveReport = solver::SolveReport<f64>;
pub type DiscField = vekua::DiscField<f64>;
pub type Holder = vekua::HolderEstimate<f64>;
pub type BranchFit = analysis::ExpansionFit<f64>;
pub type BranchScan = analysis::BranchScan<f64>;
