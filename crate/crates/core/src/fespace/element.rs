//! Per-cell and per-facet quadrature data with tabulated basis functions.

use crate::mesh::{AffineMap, Mesh, Vec2};

use super::basis::{ReferenceBasis, SegmentBasis};
use super::quadrature::{SegmentRule, TriangleRule};

/// Basis values and reference gradients tabulated at the points of a
/// triangle rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub values: Vec<Vec<f64>>,
    pub ref_grads: Vec<Vec<[f64; 2]>>,
}

impl Tabulation {
    pub fn new(basis: &ReferenceBasis, rule: &TriangleRule) -> Self {
        let (values, ref_grads) = rule.points.iter().map(|&p| basis.eval(p)).unzip();
        Self { values, ref_grads }
    }

    /// Physical gradients at quadrature point `q` for a given cell map.
    pub fn grads(&self, map: &AffineMap, q: usize) -> Vec<Vec2> {
        self.ref_grads[q].iter().map(|&g| map.push_gradient(g)).collect()
    }
}

/// A quadrature point on the boundary of a cell, seen from that cell.
#[derive(Clone, Debug)]
pub struct FacetPoint {
    /// Facet parameter in `[0, 1]`.
    pub t: f64,
    pub x: Vec2,
    /// Reference coordinates in the cell.
    pub xi: [f64; 2],
    /// Quadrature weight times facet length.
    pub weight: f64,
}

pub fn facet_points(mesh: &Mesh, map: &AffineMap, facet: usize, rule: &SegmentRule) -> Vec<FacetPoint> {
    let len = mesh.facet_length(facet);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| {
            let x = mesh.facet_point(facet, t);
            FacetPoint { t, x, xi: map.to_reference(&x), weight: w * len }
        })
        .collect()
}

/// Cell basis values and physical gradients at an arbitrary reference point.
pub fn eval_cell(basis: &ReferenceBasis, map: &AffineMap, xi: [f64; 2]) -> (Vec<f64>, Vec<Vec2>) {
    let (v, g) = basis.eval(xi);
    (v, g.into_iter().map(|g| map.push_gradient(g)).collect())
}

/// Facet basis values at parameter `t`.
pub fn eval_facet(basis: &SegmentBasis, t: f64) -> Vec<f64> {
    basis.values(t)
}
