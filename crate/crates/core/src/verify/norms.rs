//! Error norms and the transport energy semi-norm.

use crate::error::{Error, Result};
use crate::fespace::element::facet_points;
use crate::fespace::{quadrature_segment, quadrature_triangle, DofMap, ReferenceBasis, SegmentBasis, SpaceKind};
use crate::mesh::{Mesh, Region, Vec2};

/// `(sum_K int_K |field - exact|^2)^{1/2}` for a (scalar or vector) DG
/// field; `exact(x, region, component)`.
pub fn l2_error(
    mesh: &Mesh,
    space: &DofMap,
    coeffs: &[f64],
    exact: &dyn Fn(Vec2, Region, usize) -> f64,
) -> Result<f64> {
    if space.kind != SpaceKind::CellDg {
        return Err(Error::Space("l2_error needs a cell space".into()));
    }
    let basis = ReferenceBasis::new(space.degree);
    let rule = quadrature_triangle(2 * (space.degree + 2))?;
    let tab: Vec<Vec<f64>> = rule.points.iter().map(|&p| basis.values(p)).collect();
    let mut sum = 0.0;
    for c in 0..mesh.num_cells() {
        let Some(nodes) = space.nodes(c) else {
            continue;
        };
        let map = mesh.cell_map(c);
        let det = map.det.abs();
        let region = mesh.cells[c].region;
        for (q, p) in rule.points.iter().enumerate() {
            let x = map.to_physical(*p);
            for comp in 0..space.components() {
                let v: f64 = nodes.iter().zip(&tab[q]).map(|(&n, b)| coeffs[space.dof(n, comp)] * b).sum();
                sum += rule.weights[q] * det * (v - exact(x, region, comp)).powi(2);
            }
        }
    }
    Ok(sum.sqrt())
}

/// `(sum_K |grad w|_K^2 + h_K^{-1} |w - wbar|_{dK}^2)^{1/2}` for a cell
/// field `w` and skeleton field `wbar`, each given as a function of the
/// cell (or facet) and a point. `cell_field(c, xi) -> (w, grad w)`.
pub fn energy_seminorm_with(
    mesh: &Mesh,
    degree: usize,
    cell_field: &dyn Fn(usize, [f64; 2]) -> (f64, Vec2),
    facet_field: &dyn Fn(usize, f64) -> f64,
) -> Result<f64> {
    let rule = quadrature_triangle(2 * (degree + 2))?;
    let seg = quadrature_segment(2 * (degree + 2))?;
    let mut sum = 0.0;
    for c in 0..mesh.num_cells() {
        let map = mesh.cell_map(c);
        let det = map.det.abs();
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            sum += w * det * cell_field(c, *p).1.norm_squared();
        }
        let hk = mesh.cell_diameter(c);
        for &f in &mesh.cells[c].facets {
            for (q, fp) in facet_points(mesh, &map, f, &seg).iter().enumerate() {
                let jump = cell_field(c, fp.xi).0 - facet_field(f, seg.points[q]);
                sum += fp.weight * jump * jump / hk;
            }
        }
    }
    Ok(sum.sqrt())
}

/// Energy semi-norm of a discrete pair `(w, wbar)` in a DG cell space and a
/// skeleton space.
pub fn energy_seminorm(mesh: &Mesh, cell_space: &DofMap, w: &[f64], facet_space: &DofMap, wbar: &[f64]) -> Result<f64> {
    let cb = ReferenceBasis::new(cell_space.degree);
    let fb = SegmentBasis::new(facet_space.degree);
    let cell_field = |c: usize, xi: [f64; 2]| {
        let map = mesh.cell_map(c);
        let (v, g) = cb.eval(xi);
        let nodes = cell_space.nodes(c).expect("cell space covers all cells");
        let mut val = 0.0;
        let mut grad = Vec2::zeros();
        for (j, &n) in nodes.iter().enumerate() {
            val += w[n] * v[j];
            grad += map.push_gradient(g[j]) * w[n];
        }
        (val, grad)
    };
    let facet_field = |f: usize, t: f64| {
        let nodes = facet_space.nodes(f).expect("skeleton space covers all facets");
        nodes.iter().zip(fb.values(t)).map(|(&n, b)| wbar[n] * b).sum()
    };
    energy_seminorm_with(mesh, cell_space.degree, &cell_field, &facet_field)
}

/// Energy semi-norm of `(c - c_h, c|_facets - cbar_h)` for an exact field
/// with its gradient.
pub fn energy_error(
    mesh: &Mesh,
    cell_space: &DofMap,
    c_h: &[f64],
    facet_space: &DofMap,
    cbar_h: &[f64],
    exact: &dyn Fn(Vec2) -> (f64, Vec2),
) -> Result<f64> {
    let cb = ReferenceBasis::new(cell_space.degree);
    let fb = SegmentBasis::new(facet_space.degree);
    let cell_field = |c: usize, xi: [f64; 2]| {
        let map = mesh.cell_map(c);
        let (v, g) = cb.eval(xi);
        let nodes = cell_space.nodes(c).expect("cell space covers all cells");
        let (ev, eg) = exact(map.to_physical(xi));
        let mut val = ev;
        let mut grad = eg;
        for (j, &n) in nodes.iter().enumerate() {
            val -= c_h[n] * v[j];
            grad -= map.push_gradient(g[j]) * c_h[n];
        }
        (val, grad)
    };
    let facet_field = |f: usize, t: f64| {
        let nodes = facet_space.nodes(f).expect("skeleton space covers all facets");
        let h: f64 = nodes.iter().zip(fb.values(t)).map(|(&n, b)| cbar_h[n] * b).sum();
        exact(mesh.facet_point(f, t)).0 - h
    };
    energy_seminorm_with(mesh, cell_space.degree, &cell_field, &facet_field)
}
