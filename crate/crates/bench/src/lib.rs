//! Shared setups for the benchmarks: the river/aquifer case on small meshes.

use sdt_core::flow::{solve_flow, FlowSolution};
use sdt_core::verify::ContaminantCase;
use sdt_core::{build_structured_mesh, Diagonal, Mesh, MeshParams};

/// Contaminant case on an `n x 2n` crossed mesh with its flow solved.
pub fn river_setup(n: usize, k: usize, ell: usize) -> (ContaminantCase, Mesh, FlowSolution) {
    let case = ContaminantCase { mesh: MeshParams::new(n, 2 * n, Diagonal::Crossed), k, ell, ..ContaminantCase::ci() };
    let mesh = build_structured_mesh(&case.mesh).expect("valid mesh");
    let flow = solve_flow(&mesh, &case.flow_problem(), k).expect("flow solves");
    (case, mesh, flow)
}
