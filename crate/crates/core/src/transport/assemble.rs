//! Assembly of the transport forms: upwinded advection, interior-penalty
//! diffusion, the open-boundary outflow term, the porosity-weighted mass
//! and the load.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::element::{facet_points, FacetPoint, Tabulation};
use crate::fespace::{
    quadrature_segment, quadrature_triangle, ReferenceBasis, SegmentBasis, SegmentRule, TriangleRule,
};
use crate::flow::FlowSolution;
use crate::mesh::{Mesh, Vec2};
use crate::sparse::{CsrMatrix, DofRef, SparseSystem};

use super::{eval_diffusion, DiffusionModel, TransportProblem, TransportSpaces};

/// Relative band around `u . n = 0` treated as outflow.
pub const INFLOW_TOLERANCE: f64 = 1e-12;

/// Normal velocity `u_h . n` at the facet quadrature points of every
/// cell-facet incidence, with the outward normal of that cell.
#[derive(Clone, Debug)]
pub struct InflowFlags {
    /// Absolute threshold: inflow iff `u . n < -tol`.
    pub tol: f64,
    normal_velocity: Vec<[Vec<f64>; 3]>,
}

impl InflowFlags {
    pub fn normal_velocity(&self, cell: usize, local_facet: usize, q: usize) -> f64 {
        self.normal_velocity[cell][local_facet][q]
    }

    pub fn is_inflow(&self, cell: usize, local_facet: usize, q: usize) -> bool {
        self.normal_velocity(cell, local_facet, q) < -self.tol
    }

    pub fn n_points(&self) -> usize {
        self.normal_velocity.first().map_or(0, |f| f[0].len())
    }
}

/// Classify every facet quadrature point of every cell as inflow or
/// outflow. Points within `1e-12` of the velocity scale count as outflow.
pub fn classify_inflow(flow: &FlowSolution, mesh: &Mesh, rule: &SegmentRule) -> InflowFlags {
    let tol = INFLOW_TOLERANCE * flow.velocity_scale();
    let normal_velocity = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let map = mesh.cell_map(c);
            let facets = mesh.cells[c].facets;
            [0, 1, 2].map(|e| {
                let f = facets[e];
                let n = mesh.facets[f].side_of(c).expect("cell touches its facets").normal;
                facet_points(mesh, &map, f, rule).iter().map(|fp| flow.velocity(c, fp.xi).dot(&n)).collect()
            })
        })
        .collect();
    InflowFlags { tol, normal_velocity }
}

/// Quadrature rules and tabulated bases for one transport degree.
struct Tables {
    vol: TriangleRule,
    seg: SegmentRule,
    cb: ReferenceBasis,
    c_tab: Tabulation,
    u_tab: Tabulation,
    fb_tab: Vec<Vec<f64>>,
}

impl Tables {
    fn new(flow: &FlowSolution, ell: usize, quad_degree: usize) -> Result<Self> {
        let vol = quadrature_triangle(quad_degree)?;
        let seg = quadrature_segment(quad_degree)?;
        let cb = ReferenceBasis::new(ell);
        let fb = SegmentBasis::new(ell);
        let c_tab = Tabulation::new(&cb, &vol);
        let u_tab = Tabulation::new(flow.velocity_basis(), &vol);
        let fb_tab = seg.points.iter().map(|&t| fb.values(t)).collect();
        Ok(Self { vol, seg, cb, c_tab, u_tab, fb_tab })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cell unknowns followed by the trace unknowns of the three facets.
fn cell_refs(mesh: &Mesh, spaces: &TransportSpaces, c: usize) -> Vec<DofRef> {
    let mut refs = spaces.c.entity_refs(c, 0);
    for &f in &mesh.cells[c].facets {
        refs.extend(spaces.cbar.entity_refs(f, spaces.off_cbar()));
    }
    refs
}

/// Per-cell local matrices on `[c_K | cbar_f0 | cbar_f1 | cbar_f2]`,
/// assembled in parallel and merged in cell order.
fn assemble_cells(
    mesh: &Mesh,
    spaces: &TransportSpaces,
    local: impl Fn(usize) -> Result<DMatrix<f64>> + Sync,
) -> Result<SparseSystem> {
    let dim = spaces.dim();
    let parts: Vec<SparseSystem> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| -> Result<SparseSystem> {
            let mut sys = SparseSystem::new(dim);
            let l = local(c)?;
            let refs = cell_refs(mesh, spaces, c);
            sys.add_local(&refs, &refs, &l);
            Ok(sys)
        })
        .collect::<Result<_>>()?;
    Ok(SparseSystem::merge(dim, parts))
}

/// Facet quadrature data seen from cell `c` through its local facet `e`.
struct FacetView {
    normal: Vec2,
    points: Vec<FacetPoint>,
}

fn facet_view(mesh: &Mesh, c: usize, e: usize, rule: &SegmentRule) -> FacetView {
    let f = mesh.cells[c].facets[e];
    let normal = mesh.facets[f].side_of(c).expect("cell touches its facets").normal;
    FacetView { normal, points: facet_points(mesh, &mesh.cell_map(c), f, rule) }
}

/// Values of the jump basis `w - wbar` at one facet point: the cell basis
/// followed by the negated facet basis placed at facet slot `e`.
fn jump_basis(phi: &[f64], psi: &[f64], e: usize, size: usize) -> Vec<(usize, f64)> {
    let n = phi.len();
    let m = psi.len();
    let mut out = Vec::with_capacity(n + m);
    out.extend(phi.iter().copied().enumerate());
    out.extend(psi.iter().enumerate().map(|(j, &v)| (n + m * e + j, -v)));
    debug_assert!(out.iter().all(|&(a, _)| a < size));
    out
}

/// Upwinded advection form
/// `-(c u, grad w)_K + <c u.n, w - wbar>_dK - <u.n (c - cbar), w - wbar>_{dK in}`.
pub fn assemble_advection(
    mesh: &Mesh,
    flow: &FlowSolution,
    spaces: &TransportSpaces,
    flags: &InflowFlags,
    quad_degree: usize,
) -> Result<SparseSystem> {
    let t = Tables::new(flow, spaces.ell, quad_degree)?;
    check_rule(flags, &t.seg)?;
    let n = t.cb.len();
    let m = spaces.ell + 1;
    let size = n + 3 * m;
    assemble_cells(mesh, spaces, |c| {
        let map = mesh.cell_map(c);
        let det = map.det.abs();
        let [ua, ub] = flow.cell_coefficients(c);
        let mut l = DMatrix::zeros(size, size);
        for q in 0..t.vol.len() {
            let uv = &t.u_tab.values[q];
            let u = Vec2::new(dot(&ua, uv), dot(&ub, uv));
            let w = t.vol.weights[q] * det;
            let phi = &t.c_tab.values[q];
            let g = t.c_tab.grads(&map, q);
            for i in 0..n {
                let ug = w * u.dot(&g[i]);
                for j in 0..n {
                    l[(i, j)] -= ug * phi[j];
                }
            }
        }
        for e in 0..3 {
            let fv = facet_view(mesh, c, e, &t.seg);
            for (q, fp) in fv.points.iter().enumerate() {
                let phi = t.cb.values(fp.xi);
                let psi = &t.fb_tab[q];
                let un = flags.normal_velocity(c, e, q);
                let w = fp.weight * un;
                let jb = jump_basis(&phi, psi, e, size);
                for &(a, ja) in &jb {
                    for j in 0..n {
                        l[(a, j)] += w * phi[j] * ja;
                    }
                }
                if flags.is_inflow(c, e, q) {
                    for &(a, ja) in &jb {
                        for &(b, jbv) in &jb {
                            l[(a, b)] -= w * jbv * ja;
                        }
                    }
                }
            }
        }
        Ok(l)
    })
}

/// Interior-penalty diffusion form with the tensor evaluated from the
/// cell's own velocity trace. The contribution is symmetric.
pub fn assemble_diffusion(
    mesh: &Mesh,
    flow: &FlowSolution,
    spaces: &TransportSpaces,
    model: &DiffusionModel,
    beta_c: f64,
    quad_degree: usize,
) -> Result<SparseSystem> {
    if !(beta_c > 0.0) {
        return Err(Error::Problem(format!("penalty beta_c = {beta_c} must be positive")));
    }
    let t = Tables::new(flow, spaces.ell, quad_degree)?;
    let n = t.cb.len();
    let m = spaces.ell + 1;
    let size = n + 3 * m;
    let mut sys = assemble_cells(mesh, spaces, |c| {
        let map = mesh.cell_map(c);
        let det = map.det.abs();
        let region = mesh.cells[c].region;
        let [ua, ub] = flow.cell_coefficients(c);
        let mut l = DMatrix::zeros(size, size);
        for q in 0..t.vol.len() {
            let uv = &t.u_tab.values[q];
            let d = eval_diffusion(model, Vec2::new(dot(&ua, uv), dot(&ub, uv)), region);
            let w = t.vol.weights[q] * det;
            let g = t.c_tab.grads(&map, q);
            for j in 0..n {
                let dg = d * g[j];
                for i in 0..n {
                    l[(i, j)] += w * g[i].dot(&dg);
                }
            }
        }
        let tau = beta_c / mesh.cell_diameter(c);
        for e in 0..3 {
            let fv = facet_view(mesh, c, e, &t.seg);
            let nrm = fv.normal;
            for (q, fp) in fv.points.iter().enumerate() {
                let d = eval_diffusion(model, flow.velocity(c, fp.xi), region);
                let (phi, rg) = t.cb.eval(fp.xi);
                let flux: Vec<f64> = rg.into_iter().map(|g| (d * map.push_gradient(g)).dot(&nrm)).collect();
                let psi = &t.fb_tab[q];
                let w = fp.weight;
                let pen = w * tau * nrm.dot(&(d * nrm));
                let jb = jump_basis(&phi, psi, e, size);
                for &(a, ja) in &jb {
                    for j in 0..n {
                        l[(a, j)] -= w * flux[j] * ja;
                        l[(j, a)] -= w * flux[j] * ja;
                    }
                    for &(b, jbv) in &jb {
                        l[(a, b)] += pen * ja * jbv;
                    }
                }
            }
        }
        Ok(l)
    })?;
    sys.symmetric = true;
    Ok(sys)
}

fn check_rule(flags: &InflowFlags, rule: &SegmentRule) -> Result<()> {
    if flags.n_points() != rule.len() {
        return Err(Error::Problem(format!(
            "inflow classification has {} points per facet, assembly rule has {}",
            flags.n_points(),
            rule.len()
        )));
    }
    Ok(())
}

/// Boundary facets with their cell, local facet index and outward normal.
fn boundary_incidences(mesh: &Mesh) -> impl Iterator<Item = (usize, usize, usize, Vec2)> + '_ {
    mesh.facets.iter().enumerate().filter(|(_, f)| f.is_boundary()).map(|(fi, f)| {
        let side = &f.sides[0];
        let e = mesh.cells[side.cell].facets.iter().position(|&x| x == fi).expect("incidence is consistent");
        (fi, side.cell, e, side.normal)
    })
}

/// Outflow through the open boundary: `<u.n cbar, wbar>` where the flow
/// leaves the domain.
pub fn assemble_open_boundary(
    mesh: &Mesh,
    spaces: &TransportSpaces,
    flags: &InflowFlags,
    quad_degree: usize,
) -> Result<SparseSystem> {
    let seg = quadrature_segment(quad_degree)?;
    check_rule(flags, &seg)?;
    let fb = SegmentBasis::new(spaces.ell);
    let m = spaces.ell + 1;
    let mut sys = SparseSystem::new(spaces.dim());
    for (f, c, e, _) in boundary_incidences(mesh) {
        let len = mesh.facet_length(f);
        let mut l = DMatrix::zeros(m, m);
        for (q, &tq) in seg.points.iter().enumerate() {
            if flags.is_inflow(c, e, q) {
                continue;
            }
            let w = seg.weights[q] * len * flags.normal_velocity(c, e, q);
            let psi = fb.values(tq);
            for i in 0..m {
                for j in 0..m {
                    l[(i, j)] += w * psi[i] * psi[j];
                }
            }
        }
        let refs = spaces.cbar.entity_refs(f, spaces.off_cbar());
        sys.add_local(&refs, &refs, &l);
    }
    Ok(sys)
}

/// Porosity-weighted cell mass `(phi c, w)_K`. Trace rows stay empty.
pub fn assemble_mass(
    mesh: &Mesh,
    spaces: &TransportSpaces,
    phi: &dyn Fn(crate::mesh::Region) -> f64,
) -> Result<SparseSystem> {
    let cb = ReferenceBasis::new(spaces.ell);
    let rule = quadrature_triangle(2 * spaces.ell)?;
    let tab = Tabulation::new(&cb, &rule);
    let n = cb.len();
    let mut sys = SparseSystem::new(spaces.dim());
    for c in 0..mesh.num_cells() {
        let ph = phi(mesh.cells[c].region);
        if !(ph > 0.0) {
            return Err(Error::Problem(format!("porosity {ph} in cell {c} must be positive")));
        }
        let det = mesh.cell_map(c).det.abs();
        let mut l = DMatrix::zeros(n, n);
        for q in 0..rule.len() {
            let v = &tab.values[q];
            let w = rule.weights[q] * det * ph;
            for i in 0..n {
                for j in 0..n {
                    l[(i, j)] += w * v[i] * v[j];
                }
            }
        }
        let refs = spaces.c.entity_refs(c, 0);
        sys.add_local(&refs, &refs, &l);
    }
    sys.symmetric = true;
    Ok(sys)
}

/// Load vector at time `t`: the source on cell rows, and on boundary trace
/// rows the inflow advective flux `-<u.n c_in, wbar>` plus the prescribed
/// diffusive flux `<q, wbar>`.
pub fn assemble_load(
    mesh: &Mesh,
    spaces: &TransportSpaces,
    problem: &TransportProblem,
    flags: &InflowFlags,
    k: usize,
    t: f64,
) -> Result<Vec<f64>> {
    let mut b = vec![0.0; spaces.dim()];
    let fc = &problem.forcing;
    if let Some(src) = &fc.source {
        let rule = quadrature_triangle(problem.source_quad_degree(k))?;
        let cb = ReferenceBasis::new(spaces.ell);
        let tab = Tabulation::new(&cb, &rule);
        let parts: Vec<Vec<f64>> = (0..mesh.num_cells())
            .into_par_iter()
            .map(|c| {
                let map = mesh.cell_map(c);
                let det = map.det.abs();
                let region = mesh.cells[c].region;
                let mut loc = vec![0.0; cb.len()];
                for (q, p) in rule.points.iter().enumerate() {
                    let val = src(map.to_physical(*p), region, t) * rule.weights[q] * det;
                    for (i, v) in tab.values[q].iter().enumerate() {
                        loc[i] += val * v;
                    }
                }
                loc
            })
            .collect();
        for (c, loc) in parts.into_iter().enumerate() {
            add_free(&mut b, &spaces.c.entity_refs(c, 0), &loc);
        }
    }
    if fc.inflow.is_some() || fc.diffusive_flux.is_some() {
        let seg = quadrature_segment(problem.quad_degree(k))?;
        check_rule(flags, &seg)?;
        let fb = SegmentBasis::new(spaces.ell);
        for (f, c, e, n) in boundary_incidences(mesh) {
            let len = mesh.facet_length(f);
            let refs = spaces.cbar.entity_refs(f, spaces.off_cbar());
            let mut loc = vec![0.0; refs.len()];
            for (q, &tq) in seg.points.iter().enumerate() {
                let x = mesh.facet_point(f, tq);
                let mut val = 0.0;
                if let (Some(cin), true) = (&fc.inflow, flags.is_inflow(c, e, q)) {
                    val -= flags.normal_velocity(c, e, q) * cin(x, n, t);
                }
                if let Some(qd) = &fc.diffusive_flux {
                    val += qd(x, n, t);
                }
                let w = seg.weights[q] * len * val;
                for (l, psi) in loc.iter_mut().zip(fb.values(tq)) {
                    *l += w * psi;
                }
            }
            add_free(&mut b, &refs, &loc);
        }
    }
    Ok(b)
}

fn add_free(b: &mut [f64], refs: &[DofRef], loc: &[f64]) {
    for (r, v) in refs.iter().zip(loc) {
        if let DofRef::Free(i) = *r {
            b[i] += v;
        }
    }
}

/// The assembled transport operators for a fixed velocity field.
#[derive(Clone, Debug)]
pub struct TransportOperators {
    pub spaces: TransportSpaces,
    pub mass: CsrMatrix,
    /// Full `B_h` including the open-boundary outflow term.
    pub operator: CsrMatrix,
    pub flags: InflowFlags,
    /// Flow velocity degree.
    pub k: usize,
    /// `1^T M`: the conserved quantity is `mass_weights . x = int phi c_h`.
    mass_weights: Vec<f64>,
    /// Outflow rate `<u.n cbar>` over the open boundary as `outflow_weights . x`.
    outflow_weights: Vec<f64>,
}

impl TransportOperators {
    pub fn new(mesh: &Mesh, flow: &FlowSolution, problem: &TransportProblem) -> Result<Self> {
        problem.validate()?;
        let spaces = TransportSpaces::new(mesh, problem.degree)?;
        let k = flow.k;
        let qd = problem.quad_degree(k);
        let seg = quadrature_segment(qd)?;
        let flags = classify_inflow(flow, mesh, &seg);
        let mut b = assemble_advection(mesh, flow, &spaces, &flags, qd)?;
        b.append(assemble_diffusion(mesh, flow, &spaces, &problem.diffusion, problem.beta_c(), qd)?);
        b.append(assemble_open_boundary(mesh, &spaces, &flags, qd)?);
        let (operator, _) = b.into_parts();
        let (mass, _) = assemble_mass(mesh, &spaces, &|r| problem.phi(r))?.into_parts();
        let mass_weights = mass.column_sums();
        let (open, _) = assemble_open_boundary(mesh, &spaces, &flags, qd)?.into_parts();
        let outflow_weights = open.column_sums();
        Ok(Self { spaces, mass, operator, flags, k, mass_weights, outflow_weights })
    }

    /// `int phi c_h`.
    pub fn total_mass(&self, x: &[f64]) -> f64 {
        dot(&self.mass_weights, x)
    }

    /// `sum_i |m_i x_i|`: the magnitude of the terms summed by
    /// [`Self::total_mass`], which bounds its round-off.
    pub fn gross_mass(&self, x: &[f64]) -> f64 {
        self.mass_weights.iter().zip(x).map(|(w, v)| (w * v).abs()).sum()
    }

    /// Magnitude of the terms summed by [`Self::outflow_rate`].
    pub fn gross_outflow(&self, x: &[f64]) -> f64 {
        self.outflow_weights.iter().zip(x).map(|(w, v)| (w * v).abs()).sum()
    }

    /// Rate at which material leaves through the outflow boundary.
    pub fn outflow_rate(&self, x: &[f64]) -> f64 {
        dot(&self.outflow_weights, x)
    }

    pub fn load(&self, mesh: &Mesh, problem: &TransportProblem, t: f64) -> Result<Vec<f64>> {
        assemble_load(mesh, &self.spaces, problem, &self.flags, self.k, t)
    }
}
