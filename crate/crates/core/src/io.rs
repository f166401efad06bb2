//! Legacy ASCII VTK snapshots and CSV time series.
//!
//! Discontinuous fields are written on a grid with three private points
//! per cell, so jumps between cells survive.

use std::io::Write;

use crate::error::Result;
use crate::fespace::ReferenceBasis;
use crate::field::ScalarField;
use crate::flow::FlowSolution;
use crate::mesh::{Mesh, Region};
use crate::transport::{StepRecord, TransportSpaces, TransportState};

const VTK_TRIANGLE: u8 = 5;
const REFERENCE_VERTICES: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// The title line holds at most 256 characters and no newline.
fn title_line(title: &str) -> String {
    title.replace(['\n', '\r'], " ").chars().take(255).collect()
}

fn write_points_and_cells(w: &mut dyn Write, title: &str, points: &[[f64; 2]], cells: &[[usize; 3]]) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 2.0")?;
    writeln!(w, "{}", title_line(title))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", points.len())?;
    for p in points {
        writeln!(w, "{:.17e} {:.17e} 0", p[0], p[1])?;
    }
    writeln!(w, "CELLS {} {}", cells.len(), 4 * cells.len())?;
    for c in cells {
        writeln!(w, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(w, "CELL_TYPES {}", cells.len())?;
    for _ in cells {
        writeln!(w, "{VTK_TRIANGLE}")?;
    }
    Ok(())
}

fn write_scalars(w: &mut dyn Write, name: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    writeln!(w, "SCALARS {name} double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in values {
        writeln!(w, "{v:.17e}")?;
    }
    Ok(())
}

fn region_code(r: Region) -> f64 {
    match r {
        Region::Stokes => 0.0,
        Region::Darcy => 1.0,
    }
}

fn write_region(w: &mut dyn Write, mesh: &Mesh) -> Result<()> {
    writeln!(w, "CELL_DATA {}", mesh.num_cells())?;
    write_scalars(w, "region", mesh.cells.iter().map(|c| region_code(c.region)))
}

/// Three points per cell, in counterclockwise cell-vertex order.
fn broken_grid(mesh: &Mesh) -> (Vec<[f64; 2]>, Vec<[usize; 3]>) {
    let points = mesh.cells.iter().flat_map(|c| c.vertices.map(|v| [mesh.vertices[v].x, mesh.vertices[v].y])).collect();
    let cells = (0..mesh.num_cells()).map(|c| [3 * c, 3 * c + 1, 3 * c + 2]).collect();
    (points, cells)
}

/// The mesh with shared vertices and the region of each cell (0 for
/// free flow, 1 for porous).
pub fn write_mesh_vtk(w: &mut dyn Write, mesh: &Mesh, title: &str) -> Result<()> {
    let points: Vec<[f64; 2]> = mesh.vertices.iter().map(|v| [v.x, v.y]).collect();
    let cells: Vec<[usize; 3]> = mesh.cells.iter().map(|c| c.vertices).collect();
    write_points_and_cells(w, title, &points, &cells)?;
    write_region(w, mesh)
}

/// Cell velocity and pressure sampled at the cell vertices, with the
/// region and, if given, the permeability at cell centroids.
pub fn write_flow_vtk(
    w: &mut dyn Write,
    mesh: &Mesh,
    flow: &FlowSolution,
    permeability: Option<&ScalarField>,
    title: &str,
) -> Result<()> {
    let (points, cells) = broken_grid(mesh);
    write_points_and_cells(w, title, &points, &cells)?;
    writeln!(w, "POINT_DATA {}", points.len())?;
    writeln!(w, "VECTORS velocity double")?;
    for c in 0..mesh.num_cells() {
        for xi in REFERENCE_VERTICES {
            let u = flow.velocity(c, xi);
            writeln!(w, "{:.17e} {:.17e} 0", u.x, u.y)?;
        }
    }
    let pressure = (0..mesh.num_cells()).flat_map(|c| REFERENCE_VERTICES.map(|xi| flow.pressure(c, xi)));
    write_scalars(w, "pressure", pressure)?;
    write_region(w, mesh)?;
    if let Some(kappa) = permeability {
        let centroid = |c: usize| mesh.cell_map(c).to_physical([1.0 / 3.0, 1.0 / 3.0]);
        write_scalars(w, "permeability", (0..mesh.num_cells()).map(|c| kappa(centroid(c))))?;
    }
    Ok(())
}

/// Cell concentration sampled at the cell vertices.
pub fn write_concentration_vtk(
    w: &mut dyn Write,
    mesh: &Mesh,
    spaces: &TransportSpaces,
    state: &TransportState,
    title: &str,
) -> Result<()> {
    let (points, cells) = broken_grid(mesh);
    write_points_and_cells(w, title, &points, &cells)?;
    writeln!(w, "FIELD FieldData 1")?;
    writeln!(w, "TIME 1 1 double")?;
    writeln!(w, "{:.17e}", state.t)?;
    writeln!(w, "POINT_DATA {}", points.len())?;
    let basis = ReferenceBasis::new(spaces.ell);
    let tab: Vec<Vec<f64>> = REFERENCE_VERTICES.iter().map(|&xi| basis.values(xi)).collect();
    let values = (0..mesh.num_cells()).flat_map(|c| {
        let dofs = spaces.c.entity_dofs(c);
        tab.iter().map(move |v| dofs.iter().zip(v).map(|(&d, b)| state.c[d] * b).sum::<f64>()).collect::<Vec<_>>()
    });
    write_scalars(w, "concentration", values)?;
    write_region(w, mesh)
}

/// Comment lines starting with `#`, one per entry.
pub fn write_comment_header(w: &mut dyn Write, lines: &[String]) -> Result<()> {
    for l in lines {
        for part in l.lines() {
            writeln!(w, "# {part}")?;
        }
    }
    Ok(())
}

/// Conservation time series with columns `t,mass,drift`.
pub fn write_conservation_csv(w: &mut dyn Write, header: &[String], records: &[StepRecord]) -> Result<()> {
    write_comment_header(w, header)?;
    writeln!(w, "t,mass,drift")?;
    for r in records {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", r.t, r.mass, r.drift)?;
    }
    Ok(())
}
