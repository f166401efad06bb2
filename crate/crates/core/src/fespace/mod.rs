//! Finite element spaces: quadrature, Lagrange bases, dof maps and
//! projections.

pub mod basis;
pub mod dofmap;
pub mod element;
pub mod projection;
pub mod quadrature;

pub use basis::{dim_p, ReferenceBasis, SegmentBasis};
pub use dofmap::{build_cell_space, build_skeleton_space, Continuity, DofMap, Rank, Restriction, SpaceKind};
pub use projection::{l2_project_cell, l2_project_cell_vector, l2_project_cell_with, l2_project_skeleton};
pub use quadrature::{quadrature_segment, quadrature_triangle, SegmentRule, TriangleRule};
