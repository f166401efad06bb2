//! Degree-of-freedom maps for cell spaces and skeleton (facet) spaces.

use crate::error::{Error, Result};
use crate::mesh::{BoundaryLabel, FacetKind, Mesh, Region, Vec2};
use crate::sparse::DofRef;

use super::basis::{dim_p, ReferenceBasis, SegmentBasis};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    CellDg,
    SkeletonContinuous,
    SkeletonDiscontinuous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rank {
    Scalar,
    Vector,
}

impl Rank {
    pub fn components(self) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Continuity {
    Continuous,
    Discontinuous,
}

/// Which cells (for cell spaces) or which skeleton (for facet spaces) a
/// space lives on. `Region(r)` on a skeleton means all facets touching a
/// cell of `r`, so interface facets belong to both region skeletons.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Restriction {
    All,
    Region(Region),
}

/// Global numbering of a (possibly vector-valued) Lagrange space.
///
/// Scalar nodes are numbered first; the dof of component `c` at node `n` is
/// `n * ncomp + c`. Constrained dofs carry a prescribed value and are left
/// out of the free numbering.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub kind: SpaceKind,
    pub rank: Rank,
    pub degree: usize,
    pub restriction: Restriction,
    nodes_per_entity: usize,
    entity_nodes: Vec<usize>,
    n_nodes: usize,
    fixed: Vec<Option<f64>>,
    free: Vec<usize>,
    n_free: usize,
}

impl DofMap {
    pub fn components(&self) -> usize {
        self.rank.components()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.components()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn nodes_per_entity(&self) -> usize {
        self.nodes_per_entity
    }

    /// Scalar node indices of a cell (cell spaces) or facet (skeleton
    /// spaces), in local node order; `None` outside the restriction.
    pub fn nodes(&self, entity: usize) -> Option<&[usize]> {
        let s = &self.entity_nodes[entity * self.nodes_per_entity..(entity + 1) * self.nodes_per_entity];
        (s[0] != NONE).then_some(s)
    }

    pub fn is_active(&self, entity: usize) -> bool {
        self.nodes(entity).is_some()
    }

    pub fn dof(&self, node: usize, comp: usize) -> usize {
        node * self.components() + comp
    }

    /// Global dofs of an entity in component-major local order: local index
    /// `c * nodes_per_entity + j` is component `c` at local node `j`.
    pub fn entity_dofs(&self, entity: usize) -> Vec<usize> {
        let nodes = self.nodes(entity).expect("entity outside the space");
        (0..self.components()).flat_map(|c| nodes.iter().map(move |&n| self.dof(n, c))).collect()
    }

    /// Entity dofs as system references, with free indices shifted by
    /// `offset` (the position of this space's block in the global system).
    pub fn entity_refs(&self, entity: usize, offset: usize) -> Vec<DofRef> {
        self.entity_dofs(entity)
            .into_iter()
            .map(|d| match self.fixed[d] {
                Some(v) => DofRef::Fixed(v),
                None => DofRef::Free(offset + self.free[d]),
            })
            .collect()
    }

    pub fn free_index(&self, dof: usize) -> Option<usize> {
        let i = self.free[dof];
        (i != NONE).then_some(i)
    }

    pub fn fixed_value(&self, dof: usize) -> Option<f64> {
        self.fixed[dof]
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.fixed[dof].is_some()
    }

    pub fn constrained_dofs(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fixed.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v)))
    }

    /// Full coefficient vector from free values, with prescribed values
    /// filled in.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        (0..self.n_dofs())
            .map(|d| match self.fixed[d] {
                Some(v) => v,
                None => free_values[self.free[d]],
            })
            .collect()
    }

    fn renumber(&mut self) {
        let mut next = 0;
        for d in 0..self.n_dofs() {
            if self.fixed[d].is_some() {
                self.free[d] = NONE;
            } else {
                self.free[d] = next;
                next += 1;
            }
        }
        self.n_free = next;
    }

    fn skeleton_facets<'a>(&'a self, mesh: &'a Mesh, labels: &'a [BoundaryLabel]) -> impl Iterator<Item = usize> + 'a {
        (0..mesh.facets.len()).filter(move |&f| {
            self.is_active(f) && matches!(mesh.facets[f].kind, FacetKind::Boundary(l) if labels.contains(&l))
        })
    }

    /// Constrain the dofs on facets carrying any of `labels` (all
    /// components, or only `component`) to zero.
    pub fn constrain(&mut self, mesh: &Mesh, labels: &[BoundaryLabel], component: Option<usize>) -> Result<()> {
        if self.kind == SpaceKind::CellDg {
            return Err(Error::Space("essential constraints apply to skeleton spaces only".into()));
        }
        for &l in labels {
            if !self.skeleton_facets(mesh, std::slice::from_ref(&l)).any(|_| true) {
                return Err(Error::Space(format!("boundary label {l:?} is absent from this skeleton")));
            }
        }
        let facets: Vec<usize> = self.skeleton_facets(mesh, labels).collect();
        let ncomp = self.components();
        for f in facets {
            let nodes = self.nodes(f).unwrap().to_vec();
            for n in nodes {
                for c in 0..ncomp {
                    if component.is_none_or(|cc| cc == c) {
                        let d = self.dof(n, c);
                        self.fixed[d].get_or_insert(0.0);
                    }
                }
            }
        }
        self.renumber();
        Ok(())
    }

    /// Set prescribed values on constrained dofs of `labels` facets by nodal
    /// interpolation of `g(x, component)`.
    pub fn interpolate_constraints(&mut self, mesh: &Mesh, labels: &[BoundaryLabel], g: &dyn Fn(Vec2, usize) -> f64) {
        let basis = SegmentBasis::new(self.degree);
        let facets: Vec<usize> = self.skeleton_facets(mesh, labels).collect();
        let ncomp = self.components();
        for f in facets {
            let nodes = self.nodes(f).unwrap().to_vec();
            for (j, n) in nodes.into_iter().enumerate() {
                let x = mesh.facet_point(f, basis.nodes[j]);
                for c in 0..ncomp {
                    let d = self.dof(n, c);
                    if self.fixed[d].is_some() {
                        self.fixed[d] = Some(g(x, c));
                    }
                }
            }
        }
    }

    /// Physical coordinates of every scalar node.
    pub fn node_coordinates(&self, mesh: &Mesh) -> Vec<Vec2> {
        let mut out = vec![Vec2::zeros(); self.n_nodes];
        match self.kind {
            SpaceKind::CellDg => {
                let basis = ReferenceBasis::new(self.degree);
                for c in 0..mesh.num_cells() {
                    if let Some(nodes) = self.nodes(c) {
                        let map = mesh.cell_map(c);
                        for (j, &n) in nodes.iter().enumerate() {
                            out[n] = map.to_physical(basis.nodes[j]);
                        }
                    }
                }
            }
            _ => {
                let basis = SegmentBasis::new(self.degree);
                for f in 0..mesh.facets.len() {
                    if let Some(nodes) = self.nodes(f) {
                        for (j, &n) in nodes.iter().enumerate() {
                            out[n] = mesh.facet_point(f, basis.nodes[j]);
                        }
                    }
                }
            }
        }
        out
    }
}

fn cell_in(mesh: &Mesh, c: usize, r: Restriction) -> bool {
    match r {
        Restriction::All => true,
        Restriction::Region(reg) => mesh.cells[c].region == reg,
    }
}

fn facet_in(mesh: &Mesh, f: usize, r: Restriction) -> bool {
    match r {
        Restriction::All => true,
        Restriction::Region(reg) => mesh.facet_in_region(f, reg),
    }
}

/// Discontinuous `P_degree` space on the cells of `restriction`.
pub fn build_cell_space(mesh: &Mesh, degree: usize, rank: Rank, restriction: Restriction) -> Result<DofMap> {
    let npe = dim_p(degree);
    let mut entity_nodes = vec![NONE; mesh.num_cells() * npe];
    let mut next = 0;
    for c in 0..mesh.num_cells() {
        if cell_in(mesh, c, restriction) {
            for j in 0..npe {
                entity_nodes[c * npe + j] = next;
                next += 1;
            }
        }
    }
    if next == 0 {
        return Err(Error::Space(format!("no cells in restriction {restriction:?}")));
    }
    let ndofs = next * rank.components();
    let mut map = DofMap {
        kind: SpaceKind::CellDg,
        rank,
        degree,
        restriction,
        nodes_per_entity: npe,
        entity_nodes,
        n_nodes: next,
        fixed: vec![None; ndofs],
        free: vec![NONE; ndofs],
        n_free: 0,
    };
    map.renumber();
    Ok(map)
}

/// `P_degree` space on the facets of a skeleton, continuous across skeleton
/// vertices or discontinuous facet-by-facet. Dofs on facets labelled with
/// any of `essential` are constrained (initially to zero).
pub fn build_skeleton_space(
    mesh: &Mesh,
    degree: usize,
    rank: Rank,
    continuity: Continuity,
    restriction: Restriction,
    essential: &[BoundaryLabel],
) -> Result<DofMap> {
    if continuity == Continuity::Continuous && degree == 0 {
        return Err(Error::Space("continuous skeleton spaces need degree >= 1".into()));
    }
    let npe = degree + 1;
    let nf = mesh.facets.len();
    let mut entity_nodes = vec![NONE; nf * npe];
    let mut next = 0;
    match continuity {
        Continuity::Discontinuous => {
            for f in 0..nf {
                if facet_in(mesh, f, restriction) {
                    for j in 0..npe {
                        entity_nodes[f * npe + j] = next;
                        next += 1;
                    }
                }
            }
        }
        Continuity::Continuous => {
            let mut vertex_node = vec![NONE; mesh.vertices.len()];
            for f in 0..nf {
                if !facet_in(mesh, f, restriction) {
                    continue;
                }
                for (j, &v) in mesh.facets[f].vertices.iter().enumerate() {
                    if vertex_node[v] == NONE {
                        vertex_node[v] = next;
                        next += 1;
                    }
                    entity_nodes[f * npe + j] = vertex_node[v];
                }
                for j in 2..npe {
                    entity_nodes[f * npe + j] = next;
                    next += 1;
                }
            }
        }
    }
    if next == 0 {
        return Err(Error::Space(format!("no facets in restriction {restriction:?}")));
    }
    let kind = match continuity {
        Continuity::Continuous => SpaceKind::SkeletonContinuous,
        Continuity::Discontinuous => SpaceKind::SkeletonDiscontinuous,
    };
    let ndofs = next * rank.components();
    let mut map = DofMap {
        kind,
        rank,
        degree,
        restriction,
        nodes_per_entity: npe,
        entity_nodes,
        n_nodes: next,
        fixed: vec![None; ndofs],
        free: vec![NONE; ndofs],
        n_free: 0,
    };
    map.renumber();
    if !essential.is_empty() {
        map.constrain(mesh, essential, None)?;
    }
    Ok(map)
}
