//! Compatible hybridized discretization of coupled Stokes-Darcy flow and
//! of contaminant transport driven by the discrete velocity.

pub mod error;
pub mod fespace;
pub mod field;
pub mod flow;
pub mod io;
pub mod mesh;
pub mod sparse;
pub mod transport;
pub mod verify;

pub use error::{Error, Result};
pub use mesh::{build_structured_mesh, mesh_size, BoundaryLabel, Diagonal, Mesh, MeshParams, Region, Vec2};
