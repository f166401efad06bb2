//! L2 projections onto cell and skeleton spaces.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Vec2};
use crate::sparse::{DofRef, LuSolver, SparseSystem};

use super::basis::{ReferenceBasis, SegmentBasis};
use super::dofmap::{DofMap, SpaceKind};
use super::quadrature::{quadrature_segment, quadrature_triangle};

/// Mass matrix of the reference basis on the reference triangle.
pub fn reference_mass(basis: &ReferenceBasis, quad_degree: usize) -> Result<DMatrix<f64>> {
    let rule = quadrature_triangle(quad_degree)?;
    let n = basis.len();
    let mut m = DMatrix::zeros(n, n);
    let mut v = vec![0.0; n];
    for (p, &w) in rule.points.iter().zip(&rule.weights) {
        basis.values_into(*p, &mut v);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    Ok(m)
}

/// Cellwise L2 projection of `f(x, component)` onto a DG space, using a
/// triangle rule of the given degree. Dofs of inactive cells stay zero.
pub fn l2_project_cell_with(
    mesh: &Mesh,
    space: &DofMap,
    f: &dyn Fn(Vec2, usize) -> f64,
    quad_degree: usize,
) -> Result<Vec<f64>> {
    if space.kind != SpaceKind::CellDg {
        return Err(Error::Space("cell projection needs a cell space".into()));
    }
    let basis = ReferenceBasis::new(space.degree);
    let rule = quadrature_triangle(quad_degree)?;
    let mass = reference_mass(&basis, 2 * space.degree.max(1))?;
    let chol = mass.cholesky().ok_or_else(|| Error::Space("reference mass matrix is not positive definite".into()))?;
    let tab: Vec<Vec<f64>> = rule.points.iter().map(|&p| basis.values(p)).collect();
    let n = basis.len();
    let ncomp = space.components();
    let mut out = vec![0.0; space.n_dofs()];
    for c in 0..mesh.num_cells() {
        let Some(nodes) = space.nodes(c) else {
            continue;
        };
        let map = mesh.cell_map(c);
        for comp in 0..ncomp {
            let mut rhs = nalgebra::DVector::zeros(n);
            for (q, p) in rule.points.iter().enumerate() {
                let val = f(map.to_physical(*p), comp) * rule.weights[q];
                for i in 0..n {
                    rhs[i] += val * tab[q][i];
                }
            }
            // the |det| factor cancels between mass and load
            let coef = chol.solve(&rhs);
            for (j, &node) in nodes.iter().enumerate() {
                out[space.dof(node, comp)] = coef[j];
            }
        }
    }
    Ok(out)
}

/// Scalar cellwise L2 projection with a rule exact for degree
/// `2 * degree + 4` integrands.
pub fn l2_project_cell(mesh: &Mesh, space: &DofMap, f: impl Fn(Vec2) -> f64) -> Result<Vec<f64>> {
    l2_project_cell_with(mesh, space, &|x, _| f(x), 2 * space.degree + 4)
}

/// Vector cellwise L2 projection.
pub fn l2_project_cell_vector(mesh: &Mesh, space: &DofMap, f: impl Fn(Vec2) -> Vec2) -> Result<Vec<f64>> {
    l2_project_cell_with(mesh, space, &|x, c| f(x)[c], 2 * space.degree + 4)
}

/// L2 projection onto a skeleton space (continuous or discontinuous) over
/// all of its facets. Essential constraints of the space are ignored.
pub fn l2_project_skeleton(mesh: &Mesh, space: &DofMap, f: &dyn Fn(Vec2, usize) -> f64) -> Result<Vec<f64>> {
    if space.kind == SpaceKind::CellDg {
        return Err(Error::Space("skeleton projection needs a skeleton space".into()));
    }
    let basis = SegmentBasis::new(space.degree);
    let rule = quadrature_segment(2 * space.degree + 4)?;
    let tab: Vec<Vec<f64>> = rule.points.iter().map(|&t| basis.values(t)).collect();
    let n = basis.len();
    let ncomp = space.components();
    let mut sys = SparseSystem::new(space.n_dofs());
    for fct in 0..mesh.facets.len() {
        let Some(nodes) = space.nodes(fct) else {
            continue;
        };
        let len = mesh.facet_length(fct);
        for comp in 0..ncomp {
            let refs: Vec<DofRef> = nodes.iter().map(|&nd| DofRef::Free(space.dof(nd, comp))).collect();
            let mut m = DMatrix::zeros(n, n);
            let mut b = vec![0.0; n];
            for (q, &t) in rule.points.iter().enumerate() {
                let w = rule.weights[q] * len;
                let val = f(mesh.facet_point(fct, t), comp);
                for i in 0..n {
                    b[i] += w * val * tab[q][i];
                    for j in 0..n {
                        m[(i, j)] += w * tab[q][i] * tab[q][j];
                    }
                }
            }
            sys.add_local(&refs, &refs, &m);
            sys.add_local_vector(&refs, &b);
        }
    }
    let lu = LuSolver::factor(sys.matrix())?;
    lu.solve(&sys.rhs(), 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::dofmap::{build_cell_space, build_skeleton_space, Continuity, Rank, Restriction};
    use crate::fespace::quadrature::quadrature_triangle;
    use crate::mesh::{build_structured_mesh, Diagonal, MeshParams};
    use std::f64::consts::PI;

    fn mesh(n: usize) -> Mesh {
        build_structured_mesh(&MeshParams::square(n, Diagonal::Right)).unwrap()
    }

    #[test]
    fn constant_projects_to_ones() {
        let m = mesh(2);
        let s = build_cell_space(&m, 1, Rank::Scalar, Restriction::All).unwrap();
        let c = l2_project_cell(&m, &s, |_| 1.0).unwrap();
        assert!(c.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn projection_is_idempotent_on_polynomials() {
        let m = mesh(4);
        let s = build_cell_space(&m, 2, Rank::Vector, Restriction::All).unwrap();
        let c = l2_project_cell_vector(&m, &s, |x| Vec2::new(x.x * x.y, 1.0 - x.y * x.y)).unwrap();
        let nodes = s.node_coordinates(&m);
        for (n, x) in nodes.iter().enumerate() {
            assert!((c[s.dof(n, 0)] - x.x * x.y).abs() < 1e-12);
            assert!((c[s.dof(n, 1)] - (1.0 - x.y * x.y)).abs() < 1e-12);
        }
    }

    fn sin_error(n: usize) -> f64 {
        let m = mesh(n);
        let s = build_cell_space(&m, 1, Rank::Scalar, Restriction::All).unwrap();
        let f = |x: Vec2| (PI * x.x).sin();
        let c = l2_project_cell(&m, &s, f).unwrap();
        let basis = ReferenceBasis::new(1);
        let rule = quadrature_triangle(8).unwrap();
        let mut e2 = 0.0;
        for cell in 0..m.num_cells() {
            let map = m.cell_map(cell);
            let nodes = s.nodes(cell).unwrap();
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let v = basis.values(*p);
                let uh: f64 = nodes.iter().zip(&v).map(|(&nd, vi)| c[nd] * vi).sum();
                e2 += w * map.det.abs() * (uh - f(map.to_physical(*p))).powi(2);
            }
        }
        e2.sqrt()
    }

    #[test]
    fn refinement_ratio_matches_second_order() {
        let r = sin_error(8) / sin_error(16);
        assert!((r - 4.0).abs() < 0.3, "ratio {r}");
    }

    #[test]
    fn skeleton_projection_reproduces_polynomials() {
        let m = mesh(2);
        for cont in [Continuity::Continuous, Continuity::Discontinuous] {
            let s = build_skeleton_space(&m, 2, Rank::Scalar, cont, Restriction::All, &[]).unwrap();
            let c = l2_project_skeleton(&m, &s, &|x, _| x.x * x.x - x.y).unwrap();
            for (n, x) in s.node_coordinates(&m).iter().enumerate() {
                assert!((c[n] - (x.x * x.x - x.y)).abs() < 1e-12);
            }
        }
    }
}
