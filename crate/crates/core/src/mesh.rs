//! Two-region simplicial meshes of the unit square.
//!
//! The Stokes region sits above the horizontal interface `x2 = split_y`,
//! the Darcy region below it. Facets carry their incident cells together
//! with the outward unit normal seen from each cell.

use std::collections::HashMap;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;

/// Relative tolerance for coordinate predicates on facets.
const COORD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Stokes,
    Darcy,
}

/// Labels of the exterior boundary segments.
///
/// `StokesLeft`, `StokesRight` and `StokesTop` partition the Stokes
/// boundary; `DarcySide` (both vertical sides) and `DarcyBottom` partition
/// the Darcy boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryLabel {
    StokesLeft,
    StokesRight,
    StokesTop,
    DarcySide,
    DarcyBottom,
}

impl BoundaryLabel {
    pub const ALL: [BoundaryLabel; 5] = [
        BoundaryLabel::StokesLeft,
        BoundaryLabel::StokesRight,
        BoundaryLabel::StokesTop,
        BoundaryLabel::DarcySide,
        BoundaryLabel::DarcyBottom,
    ];

    /// Coarse label: the region whose exterior boundary contains this segment.
    pub fn region(self) -> Region {
        match self {
            BoundaryLabel::StokesLeft | BoundaryLabel::StokesRight | BoundaryLabel::StokesTop => Region::Stokes,
            BoundaryLabel::DarcySide | BoundaryLabel::DarcyBottom => Region::Darcy,
        }
    }

    /// All fine labels making up the exterior boundary of `region`.
    pub fn of_region(region: Region) -> Vec<BoundaryLabel> {
        Self::ALL.into_iter().filter(|l| l.region() == region).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetKind {
    Interior,
    Interface,
    Boundary(BoundaryLabel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagonal {
    /// Each grid square split by its lower-left to upper-right diagonal.
    Right,
    /// Each grid square split into four by both diagonals.
    Crossed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshParams {
    pub nx: usize,
    pub ny: usize,
    pub split_y: f64,
    pub diagonal: Diagonal,
}

impl MeshParams {
    pub fn new(nx: usize, ny: usize, diagonal: Diagonal) -> Self {
        Self { nx, ny, split_y: 0.5, diagonal }
    }

    /// Square `n x n` grid with the interface at mid-height.
    pub fn square(n: usize, diagonal: Diagonal) -> Self {
        Self::new(n, n, diagonal)
    }
}

#[derive(Clone, Debug)]
pub struct Cell {
    /// Counterclockwise vertex indices.
    pub vertices: [usize; 3],
    pub region: Region,
    /// `facets[e]` is the facet opposite local vertex `e`.
    pub facets: [usize; 3],
}

/// One cell's view of a facet.
#[derive(Clone, Copy, Debug)]
pub struct FacetSide {
    pub cell: usize,
    pub local_edge: usize,
    /// Outward unit normal of `cell` on this facet.
    pub normal: Vec2,
}

#[derive(Clone, Debug)]
pub struct Facet {
    /// Vertex indices, sorted ascending. The facet parameter `t` runs from
    /// `vertices[0]` (t = 0) to `vertices[1]` (t = 1).
    pub vertices: [usize; 2],
    pub kind: FacetKind,
    /// Incident cells. For interface facets `sides[0]` is the Stokes cell.
    pub sides: Vec<FacetSide>,
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        matches!(self.kind, FacetKind::Boundary(_))
    }

    pub fn label(&self) -> Option<BoundaryLabel> {
        match self.kind {
            FacetKind::Boundary(l) => Some(l),
            _ => None,
        }
    }

    pub fn side_of(&self, cell: usize) -> Option<&FacetSide> {
        self.sides.iter().find(|s| s.cell == cell)
    }
}

/// Affine map from the reference triangle `{x >= 0, y >= 0, x + y <= 1}`.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub origin: Vec2,
    pub jacobian: Matrix2<f64>,
    pub inverse: Matrix2<f64>,
    pub det: f64,
}

impl AffineMap {
    pub fn to_physical(&self, xi: [f64; 2]) -> Vec2 {
        self.origin + self.jacobian * Vec2::new(xi[0], xi[1])
    }

    pub fn to_reference(&self, x: &Vec2) -> [f64; 2] {
        let r = self.inverse * (x - self.origin);
        [r.x, r.y]
    }

    /// Physical gradient from a reference gradient: `J^{-T} g`.
    pub fn push_gradient(&self, g: [f64; 2]) -> Vec2 {
        self.inverse.transpose() * Vec2::new(g[0], g[1])
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<Vec2>,
    pub cells: Vec<Cell>,
    pub facets: Vec<Facet>,
    /// Height of the Stokes/Darcy interface.
    pub split_y: f64,
}

/// Build a structured triangulation of the unit square.
pub fn build_structured_mesh(params: &MeshParams) -> Result<Mesh> {
    let MeshParams { nx, ny, split_y, diagonal } = *params;
    if nx == 0 || ny == 0 {
        return Err(Error::MeshParams(format!("nx and ny must be positive (got {nx} x {ny})")));
    }
    if !(0.0..=1.0).contains(&split_y) {
        return Err(Error::MeshParams(format!("split_y = {split_y} lies outside [0, 1]")));
    }
    let rows = ny as f64 * split_y;
    if (rows - rows.round()).abs() > 1e-9 {
        return Err(Error::MeshParams(format!(
            "interface at x2 = {split_y} does not coincide with a mesh row: ny * split_y = {rows} is not an integer"
        )));
    }

    let grid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vec2::new(i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }

    let mut raw = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let a = grid(i, j);
            let b = grid(i + 1, j);
            let c = grid(i + 1, j + 1);
            let d = grid(i, j + 1);
            match diagonal {
                Diagonal::Right => {
                    raw.push([a, b, c]);
                    raw.push([a, c, d]);
                }
                Diagonal::Crossed => {
                    let m = vertices.len();
                    vertices.push(Vec2::new((i as f64 + 0.5) / nx as f64, (j as f64 + 0.5) / ny as f64));
                    raw.push([a, b, m]);
                    raw.push([b, c, m]);
                    raw.push([c, d, m]);
                    raw.push([d, a, m]);
                }
            }
        }
    }

    let cells = raw
        .into_iter()
        .map(|v| {
            let centroid = (vertices[v[0]] + vertices[v[1]] + vertices[v[2]]) / 3.0;
            let region = if centroid.y > split_y { Region::Stokes } else { Region::Darcy };
            (v, region)
        })
        .collect::<Vec<_>>();
    Mesh::from_cells(vertices, cells, split_y)
}

impl Mesh {
    /// Build connectivity and classify facets from raw cells.
    ///
    /// Clockwise cells are reoriented.
    pub fn from_cells(vertices: Vec<Vec2>, cells: Vec<([usize; 3], Region)>, split_y: f64) -> Result<Mesh> {
        if cells.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let mut out_cells = Vec::with_capacity(cells.len());
        for (ci, (mut v, region)) in cells.into_iter().enumerate() {
            if v.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::MalformedMesh(format!("cell {ci} references a missing vertex")));
            }
            let area = signed_area(&vertices[v[0]], &vertices[v[1]], &vertices[v[2]]);
            if area.abs() < 1e-300 {
                return Err(Error::MalformedMesh(format!("cell {ci} has zero area")));
            }
            if area < 0.0 {
                v.swap(1, 2);
            }
            out_cells.push(Cell { vertices: v, region, facets: [usize::MAX; 3] });
        }

        let mut lookup: HashMap<[usize; 2], usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        for (ci, cell) in out_cells.iter_mut().enumerate() {
            for e in 0..3 {
                let a = cell.vertices[(e + 1) % 3];
                let b = cell.vertices[(e + 2) % 3];
                let key = if a < b { [a, b] } else { [b, a] };
                let d = vertices[b] - vertices[a];
                let normal = Vec2::new(d.y, -d.x) / d.norm();
                let side = FacetSide { cell: ci, local_edge: e, normal };
                let fi = *lookup.entry(key).or_insert_with(|| {
                    facets.push(Facet { vertices: key, kind: FacetKind::Interior, sides: Vec::new() });
                    facets.len() - 1
                });
                facets[fi].sides.push(side);
                cell.facets[e] = fi;
            }
        }

        let mut mesh = Mesh { vertices, cells: out_cells, facets, split_y };
        mesh.classify_facets()?;
        Ok(mesh)
    }

    /// Assign facet kinds and boundary labels.
    pub fn classify_facets(&mut self) -> Result<()> {
        let tol = COORD_TOL * self.domain_size();
        for fi in 0..self.facets.len() {
            let nsides = self.facets[fi].sides.len();
            let kind = match nsides {
                1 => {
                    let side = self.facets[fi].sides[0];
                    let region = self.cells[side.cell].region;
                    let [a, b] = self.facets[fi].vertices;
                    let (pa, pb) = (self.vertices[a], self.vertices[b]);
                    FacetKind::Boundary(boundary_label(&pa, &pb, region, tol).ok_or_else(|| {
                        Error::MalformedMesh(format!(
                            "boundary facet {fi} ({pa:?} - {pb:?}) does not lie on the unit-square boundary"
                        ))
                    })?)
                }
                2 => {
                    let r0 = self.cells[self.facets[fi].sides[0].cell].region;
                    let r1 = self.cells[self.facets[fi].sides[1].cell].region;
                    if r0 == r1 {
                        FacetKind::Interior
                    } else {
                        if r1 == Region::Stokes {
                            self.facets[fi].sides.swap(0, 1);
                        }
                        FacetKind::Interface
                    }
                }
                n => return Err(Error::MalformedMesh(format!("facet {fi} has {n} incident cells"))),
            };
            self.facets[fi].kind = kind;
        }
        Ok(())
    }

    fn domain_size(&self) -> f64 {
        let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).max().max(f64::MIN_POSITIVE)
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_coords(&self, c: usize) -> [Vec2; 3] {
        let v = self.cells[c].vertices;
        [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]]]
    }

    pub fn cell_map(&self, c: usize) -> AffineMap {
        let [p0, p1, p2] = self.cell_coords(c);
        let jacobian = Matrix2::from_columns(&[p1 - p0, p2 - p0]);
        let det = jacobian.determinant();
        let inverse = jacobian.try_inverse().expect("cell with zero area");
        AffineMap { origin: p0, jacobian, inverse, det }
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [p0, p1, p2] = self.cell_coords(c);
        signed_area(&p0, &p1, &p2)
    }

    /// Longest edge of the cell.
    pub fn cell_diameter(&self, c: usize) -> f64 {
        let [p0, p1, p2] = self.cell_coords(c);
        (p1 - p0).norm().max((p2 - p1).norm()).max((p0 - p2).norm())
    }

    pub fn cell_centroid(&self, c: usize) -> Vec2 {
        let [p0, p1, p2] = self.cell_coords(c);
        (p0 + p1 + p2) / 3.0
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facets[f].vertices;
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Point at parameter `t` along the facet.
    pub fn facet_point(&self, f: usize, t: f64) -> Vec2 {
        let [a, b] = self.facets[f].vertices;
        self.vertices[a] * (1.0 - t) + self.vertices[b] * t
    }

    pub fn facet_midpoint(&self, f: usize) -> Vec2 {
        self.facet_point(f, 0.5)
    }

    /// Whether facet `f` belongs to the skeleton of `region`, i.e. touches a
    /// cell of that region. Interface facets belong to both skeletons.
    pub fn facet_in_region(&self, f: usize, region: Region) -> bool {
        self.facets[f].sides.iter().any(|s| self.cells[s.cell].region == region)
    }

    /// Facet indices of the `region` skeleton.
    pub fn skeleton(&self, region: Region) -> Vec<usize> {
        (0..self.facets.len()).filter(|&f| self.facet_in_region(f, region)).collect()
    }

    pub fn cells_in(&self, region: Region) -> impl Iterator<Item = usize> + '_ {
        self.cells.iter().enumerate().filter(move |(_, c)| c.region == region).map(|(i, _)| i)
    }

    pub fn region_area(&self, region: Region) -> f64 {
        self.cells_in(region).map(|c| self.cell_area(c)).sum()
    }

    pub fn has_label(&self, label: BoundaryLabel) -> bool {
        self.facets.iter().any(|f| f.kind == FacetKind::Boundary(label))
    }

    pub fn interface_facets(&self) -> impl Iterator<Item = usize> + '_ {
        self.facets.iter().enumerate().filter(|(_, f)| f.kind == FacetKind::Interface).map(|(i, _)| i)
    }

    pub fn count_kind(&self, pred: impl Fn(&FacetKind) -> bool) -> usize {
        self.facets.iter().filter(|f| pred(&f.kind)).count()
    }
}

/// Mesh size `h`: the largest cell diameter.
pub fn mesh_size(mesh: &Mesh) -> Result<f64> {
    if mesh.cells.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok((0..mesh.cells.len()).map(|c| mesh.cell_diameter(c)).fold(0.0, f64::max))
}

fn signed_area(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

fn boundary_label(a: &Vec2, b: &Vec2, region: Region, tol: f64) -> Option<BoundaryLabel> {
    let on = |pa: f64, pb: f64, v: f64| (pa - v).abs() <= tol && (pb - v).abs() <= tol;
    let vertical_side = on(a.x, b.x, 0.0) || on(a.x, b.x, 1.0);
    match region {
        Region::Stokes => {
            if on(a.x, b.x, 0.0) {
                Some(BoundaryLabel::StokesLeft)
            } else if on(a.x, b.x, 1.0) {
                Some(BoundaryLabel::StokesRight)
            } else if on(a.y, b.y, 1.0) {
                Some(BoundaryLabel::StokesTop)
            } else {
                None
            }
        }
        Region::Darcy => {
            if vertical_side {
                Some(BoundaryLabel::DarcySide)
            } else if on(a.y, b.y, 0.0) {
                Some(BoundaryLabel::DarcyBottom)
            } else {
                None
            }
        }
    }
}
