//! Assembly of the flow forms `a_h`, `b_h`, the load and the gauge row.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fespace::element::{facet_points, Tabulation};
use crate::fespace::{
    quadrature_segment, quadrature_triangle, ReferenceBasis, SegmentBasis, SegmentRule, TriangleRule,
};
use crate::mesh::{FacetKind, Mesh, Region};
use crate::sparse::{DofRef, SparseSystem};

use super::{FlowBoundary, FlowProblem, FlowSpaces, Gauge};

/// Shared quadrature and basis tables for one velocity degree.
pub(super) struct FlowTables {
    pub vol: TriangleRule,
    pub seg: SegmentRule,
    pub ub: ReferenceBasis,
    pub pb: ReferenceBasis,
    pub u_tab: Tabulation,
    pub p_tab: Tabulation,
    /// Facet basis values at the segment rule points.
    pub fb_tab: Vec<Vec<f64>>,
}

impl FlowTables {
    pub fn new(k: usize, quad_degree: usize) -> Result<Self> {
        let vol = quadrature_triangle(quad_degree)?;
        let seg = quadrature_segment(2 * k + 2)?;
        let ub = ReferenceBasis::new(k);
        let pb = ReferenceBasis::new(k - 1);
        let fb = SegmentBasis::new(k);
        let u_tab = Tabulation::new(&ub, &vol);
        let p_tab = Tabulation::new(&pb, &vol);
        let fb_tab = seg.points.iter().map(|&t| fb.values(t)).collect();
        Ok(Self { vol, seg, ub, pb, u_tab, p_tab, fb_tab })
    }
}

fn stokes_velocity_refs(mesh: &Mesh, spaces: &FlowSpaces, c: usize) -> Vec<DofRef> {
    let mut refs = spaces.u.entity_refs(c, 0);
    for &f in &mesh.cells[c].facets {
        refs.extend(spaces.ubar.entity_refs(f, spaces.off_ubar()));
    }
    refs
}

fn kappa_at(problem: &FlowProblem, x: crate::mesh::Vec2) -> Result<f64> {
    let kap = (problem.kappa)(x);
    if kap > 0.0 && kap.is_finite() {
        Ok(kap)
    } else {
        Err(Error::Problem(format!("permeability {kap} at ({:.6}, {:.6}) is not positive", x.x, x.y)))
    }
}

/// The velocity form: viscous, penalty and consistency terms on Stokes
/// cells, the Darcy resistance on Darcy cells, and the slip term on the
/// interface. The contribution is symmetric.
pub fn assemble_ah(mesh: &Mesh, spaces: &FlowSpaces, problem: &FlowProblem) -> Result<SparseSystem> {
    let k = spaces.k;
    if k == 0 {
        return Err(Error::Problem("velocity degree k must be at least 1".into()));
    }
    let t = FlowTables::new(k, problem.quad_degree(k))?;
    let dim = spaces.dim();
    let mu = problem.mu;
    let beta = problem.beta_f(k);
    let n = t.ub.len();
    let m = k + 1;

    let cells: Vec<SparseSystem> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| -> Result<SparseSystem> {
            let mut sys = SparseSystem::new(dim);
            let map = mesh.cell_map(c);
            let det = map.det.abs();
            match mesh.cells[c].region {
                Region::Darcy => {
                    let mut l = DMatrix::zeros(2 * n, 2 * n);
                    for (q, p) in t.vol.points.iter().enumerate() {
                        let w = t.vol.weights[q] * det / kappa_at(problem, map.to_physical(*p))?;
                        let v = &t.u_tab.values[q];
                        for i in 0..n {
                            for j in 0..n {
                                let s = w * v[i] * v[j];
                                l[(i, j)] += s;
                                l[(n + i, n + j)] += s;
                            }
                        }
                    }
                    let refs = spaces.u.entity_refs(c, 0);
                    sys.add_local(&refs, &refs, &l);
                }
                Region::Stokes => {
                    let size = 2 * n + 6 * m;
                    let mut l = DMatrix::zeros(size, size);
                    for q in 0..t.vol.len() {
                        let w = t.vol.weights[q] * det * mu;
                        let g = t.u_tab.grads(&map, q);
                        for i in 0..n {
                            for j in 0..n {
                                let gg = g[i].dot(&g[j]);
                                for cc in 0..2 {
                                    for d in 0..2 {
                                        let delta = if cc == d { gg } else { 0.0 };
                                        l[(cc * n + i, d * n + j)] += w * (delta + g[j][cc] * g[i][d]);
                                    }
                                }
                            }
                        }
                    }
                    let tau = 2.0 * beta * mu / mesh.cell_diameter(c);
                    // jump basis J_a = jv[a] e_{jc[a]}; traction S_a (zero on trace dofs)
                    let mut jc = vec![0usize; 2 * n + 2 * m];
                    let mut jv = vec![0.0; 2 * n + 2 * m];
                    let mut sv = vec![nalgebra::Vector2::zeros(); 2 * n + 2 * m];
                    for (e, &f) in mesh.cells[c].facets.iter().enumerate() {
                        let normal = mesh.facets[f].side_of(c).unwrap().normal;
                        let pts = facet_points(mesh, &map, f, &t.seg);
                        // local index of combined (cell, facet) vector -> cell-local index
                        let idx = |a: usize| {
                            if a < 2 * n {
                                a
                            } else {
                                2 * n + 2 * m * e + (a - 2 * n)
                            }
                        };
                        for (q, fp) in pts.iter().enumerate() {
                            let (phi, rg) = t.ub.eval(fp.xi);
                            let g: Vec<_> = rg.into_iter().map(|g| map.push_gradient(g)).collect();
                            let psi = &t.fb_tab[q];
                            for cc in 0..2 {
                                for i in 0..n {
                                    let a = cc * n + i;
                                    jc[a] = cc;
                                    jv[a] = phi[i];
                                    let dn = g[i].dot(&normal);
                                    let mut s = g[i] * normal[cc];
                                    s[cc] += dn;
                                    sv[a] = s * mu;
                                }
                                for j in 0..m {
                                    let a = 2 * n + cc * m + j;
                                    jc[a] = cc;
                                    jv[a] = -psi[j];
                                    sv[a] = nalgebra::Vector2::zeros();
                                }
                            }
                            let w = fp.weight;
                            for b in 0..2 * n + 2 * m {
                                for a in 0..2 * n + 2 * m {
                                    let mut v = -sv[a][jc[b]] * jv[b] - sv[b][jc[a]] * jv[a];
                                    if jc[a] == jc[b] {
                                        v += tau * jv[a] * jv[b];
                                    }
                                    l[(idx(b), idx(a))] += w * v;
                                }
                            }
                        }
                    }
                    let refs = stokes_velocity_refs(mesh, spaces, c);
                    sys.add_local(&refs, &refs, &l);
                }
            }
            Ok(sys)
        })
        .collect::<Result<_>>()?;
    let mut sys = SparseSystem::merge(dim, cells);

    for f in mesh.interface_facets() {
        let normal = mesh.facets[f].sides[0].normal;
        let proj = nalgebra::Matrix2::identity() - normal * normal.transpose();
        let len = mesh.facet_length(f);
        let mut l = DMatrix::zeros(2 * m, 2 * m);
        for (q, &tq) in t.seg.points.iter().enumerate() {
            let x = mesh.facet_point(f, tq);
            let w = t.seg.weights[q] * len * problem.alpha / kappa_at(problem, x)?.sqrt();
            let psi = &t.fb_tab[q];
            for cc in 0..2 {
                for d in 0..2 {
                    for i in 0..m {
                        for j in 0..m {
                            l[(cc * m + i, d * m + j)] += w * proj[(cc, d)] * psi[i] * psi[j];
                        }
                    }
                }
            }
        }
        let refs = spaces.ubar.entity_refs(f, spaces.off_ubar());
        sys.add_local(&refs, &refs, &l);
    }
    sys.symmetric = true;
    Ok(sys)
}

/// The pressure-velocity coupling, entered together with its transpose.
///
/// On Stokes cells the facet pressure pairs with `(v - vbar) . n`; the
/// `vbar` part cancels between neighbours on interior facets and is kept
/// on boundary and interface facets. On Darcy cells the facet pressure
/// pairs with `v . n`, plus `vbar . n` on the interface.
pub fn assemble_bh(mesh: &Mesh, spaces: &FlowSpaces) -> Result<SparseSystem> {
    let k = spaces.k;
    if spaces.p.degree + 1 != k || spaces.pbar_s.degree != k || spaces.pbar_d.degree != k {
        return Err(Error::Space("pressure degrees must be k - 1 (cells) and k (facets)".into()));
    }
    let t = FlowTables::new(k, 2 * k + 2)?;
    let dim = spaces.dim();
    let n = t.ub.len();
    let np = t.pb.len();
    let m = k + 1;

    let cells: Vec<SparseSystem> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| -> Result<SparseSystem> {
            let mut sys = SparseSystem::new(dim);
            let map = mesh.cell_map(c);
            let det = map.det.abs();
            let stokes = mesh.cells[c].region == Region::Stokes;
            let nv = if stokes { 2 * n + 6 * m } else { 2 * n };
            let mut l = DMatrix::zeros(np + 3 * m, nv);
            for q in 0..t.vol.len() {
                let w = t.vol.weights[q] * det;
                let g = t.u_tab.grads(&map, q);
                let psi = &t.p_tab.values[q];
                for a in 0..np {
                    for i in 0..n {
                        for cc in 0..2 {
                            l[(a, cc * n + i)] -= w * psi[a] * g[i][cc];
                        }
                    }
                }
            }
            for (e, &f) in mesh.cells[c].facets.iter().enumerate() {
                let normal = mesh.facets[f].side_of(c).unwrap().normal;
                let keep_trace = stokes && mesh.facets[f].kind != FacetKind::Interior;
                for (q, fp) in facet_points(mesh, &map, f, &t.seg).iter().enumerate() {
                    let phi = t.ub.values(fp.xi);
                    let chi = &t.fb_tab[q];
                    for j in 0..m {
                        let row = np + e * m + j;
                        for cc in 0..2 {
                            let wn = fp.weight * chi[j] * normal[cc];
                            for i in 0..n {
                                l[(row, cc * n + i)] += wn * phi[i];
                            }
                            if keep_trace {
                                for i in 0..m {
                                    l[(row, 2 * n + 2 * m * e + cc * m + i)] -= wn * chi[i];
                                }
                            }
                        }
                    }
                }
            }
            let (pbar, off) =
                if stokes { (&spaces.pbar_s, spaces.off_pbar_s()) } else { (&spaces.pbar_d, spaces.off_pbar_d()) };
            let mut qrefs = spaces.p.entity_refs(c, spaces.off_p());
            for &f in &mesh.cells[c].facets {
                qrefs.extend(pbar.entity_refs(f, off));
            }
            let vrefs = if stokes { stokes_velocity_refs(mesh, spaces, c) } else { spaces.u.entity_refs(c, 0) };
            sys.add_local_with_transpose(&qrefs, &vrefs, &l);
            Ok(sys)
        })
        .collect::<Result<_>>()?;
    let mut sys = SparseSystem::merge(dim, cells);

    for f in mesh.interface_facets() {
        let normal = mesh.facets[f].sides[0].normal;
        let len = mesh.facet_length(f);
        let mut l = DMatrix::zeros(m, 2 * m);
        for (q, &w) in t.seg.weights.iter().enumerate() {
            let chi = &t.fb_tab[q];
            for j in 0..m {
                for cc in 0..2 {
                    for i in 0..m {
                        l[(j, cc * m + i)] += w * len * chi[j] * normal[cc] * chi[i];
                    }
                }
            }
        }
        let qrefs = spaces.pbar_d.entity_refs(f, spaces.off_pbar_d());
        let vrefs = spaces.ubar.entity_refs(f, spaces.off_ubar());
        sys.add_local_with_transpose(&qrefs, &vrefs, &l);
    }
    sys.symmetric = true;
    Ok(sys)
}

/// Row and column of the mean-pressure multiplier (empty unless the
/// zero-mean gauge is active).
pub fn assemble_gauge(mesh: &Mesh, spaces: &FlowSpaces) -> Result<SparseSystem> {
    let mut sys = SparseSystem::new(spaces.dim());
    if !spaces.multiplier {
        return Ok(sys);
    }
    let pb = ReferenceBasis::new(spaces.p.degree);
    let rule = quadrature_triangle(2 * spaces.p.degree + 2)?;
    let mut ints = vec![0.0; pb.len()];
    for (p, &w) in rule.points.iter().zip(&rule.weights) {
        for (a, v) in pb.values(*p).into_iter().enumerate() {
            ints[a] += w * v;
        }
    }
    let lam = [DofRef::Free(spaces.off_multiplier())];
    for c in 0..mesh.num_cells() {
        let det = mesh.cell_map(c).det.abs();
        let l = DMatrix::from_fn(1, pb.len(), |_, a| ints[a] * det);
        sys.add_local_with_transpose(&lam, &spaces.p.entity_refs(c, spaces.off_p()), &l);
    }
    Ok(sys)
}

/// Load terms: Stokes body force, Darcy source and Darcy boundary normal
/// flux. Lifts of prescribed dofs are produced by the operator assemblies.
pub fn assemble_flow_rhs(mesh: &Mesh, spaces: &FlowSpaces, problem: &FlowProblem) -> Result<SparseSystem> {
    let k = spaces.k;
    let t = FlowTables::new(k, problem.quad_degree(k))?;
    let dim = spaces.dim();
    let n = t.ub.len();
    let np = t.pb.len();
    let mut sys = SparseSystem::new(dim);
    for c in 0..mesh.num_cells() {
        let map = mesh.cell_map(c);
        let det = map.det.abs();
        match mesh.cells[c].region {
            Region::Stokes => {
                let Some(fs) = &problem.f_s else { continue };
                let mut b = vec![0.0; 2 * n];
                for (q, p) in t.vol.points.iter().enumerate() {
                    let val = fs(map.to_physical(*p)) * (t.vol.weights[q] * det);
                    for i in 0..n {
                        b[i] += val.x * t.u_tab.values[q][i];
                        b[n + i] += val.y * t.u_tab.values[q][i];
                    }
                }
                sys.add_local_vector(&spaces.u.entity_refs(c, 0), &b);
            }
            Region::Darcy => {
                let Some(fd) = &problem.f_d else { continue };
                let mut b = vec![0.0; np];
                for (q, p) in t.vol.points.iter().enumerate() {
                    let val = fd(map.to_physical(*p)) * t.vol.weights[q] * det;
                    for a in 0..np {
                        b[a] += val * t.p_tab.values[q][a];
                    }
                }
                sys.add_local_vector(&spaces.p.entity_refs(c, spaces.off_p()), &b);
            }
        }
    }
    for f in 0..mesh.facets.len() {
        let FacetKind::Boundary(label) = mesh.facets[f].kind else {
            continue;
        };
        if let FlowBoundary::NormalFlux(g) = problem.boundary_for(label) {
            let len = mesh.facet_length(f);
            let mut b = vec![0.0; k + 1];
            for (q, &tq) in t.seg.points.iter().enumerate() {
                let val = g(mesh.facet_point(f, tq)) * t.seg.weights[q] * len;
                for (j, bj) in b.iter_mut().enumerate() {
                    *bj += val * t.fb_tab[q][j];
                }
            }
            sys.add_local_vector(&spaces.pbar_d.entity_refs(f, spaces.off_pbar_d()), &b);
        }
    }
    Ok(sys)
}

/// The assembled flow system together with the flux-balance correction
/// applied to it.
#[derive(Clone, Debug)]
pub struct FlowSystem {
    pub system: SparseSystem,
    /// Uniform normal-flux adjustment spread over flux-type boundaries so
    /// that the zero-mean gauged system is consistent (zero otherwise).
    pub flux_correction: f64,
}

/// Relative imbalance above which boundary data are reported as
/// incompatible with the sources rather than corrected.
const MAX_RELATIVE_IMBALANCE: f64 = 5e-2;

/// Assemble all flow contributions. Under the zero-mean gauge the sum of
/// the pressure-type equations must vanish; the residual imbalance left by
/// quadrature and interpolation of boundary data is removed by a uniform
/// normal-flux adjustment on flux-type boundaries.
pub fn assemble_flow_system(mesh: &Mesh, spaces: &FlowSpaces, problem: &FlowProblem) -> Result<FlowSystem> {
    let mut system = assemble_ah(mesh, spaces, problem)?;
    system.append(assemble_bh(mesh, spaces)?);
    system.append(assemble_gauge(mesh, spaces)?);
    system.append(assemble_flow_rhs(mesh, spaces, problem)?);
    system.symmetric = true;
    let mut flux_correction = 0.0;
    if problem.gauge == Gauge::ZeroMean {
        let rows = spaces.off_p()..spaces.off_multiplier();
        let (mut sum, mut scale) = (0.0, 0.0);
        for &(i, v) in &system.rhs_entries {
            if rows.contains(&i) {
                sum += v;
                scale += v.abs();
            }
        }
        if sum.abs() > MAX_RELATIVE_IMBALANCE * scale && sum.abs() > 1e-14 {
            return Err(Error::Incompatible(format!(
                "sources and boundary fluxes do not balance: net imbalance {sum:.3e} (data scale {scale:.3e})"
            )));
        }
        let seg = quadrature_segment(2 * spaces.k + 2)?;
        let fb = SegmentBasis::new(spaces.k);
        let mut ints = vec![0.0; fb.len()];
        for (&tq, &w) in seg.points.iter().zip(&seg.weights) {
            for (j, v) in fb.values(tq).into_iter().enumerate() {
                ints[j] += w * v;
            }
        }
        let flux_facets: Vec<(usize, bool)> = (0..mesh.facets.len())
            .filter_map(|f| match mesh.facets[f].kind {
                FacetKind::Boundary(l) if problem.boundary_for(l).is_flux_type() => {
                    Some((f, l.region() == Region::Stokes))
                }
                _ => None,
            })
            .collect();
        let total: f64 = flux_facets.iter().map(|&(f, _)| mesh.facet_length(f)).sum();
        if total > 0.0 && sum != 0.0 {
            flux_correction = -sum / total;
            for (f, stokes) in flux_facets {
                let (space, off) =
                    if stokes { (&spaces.pbar_s, spaces.off_pbar_s()) } else { (&spaces.pbar_d, spaces.off_pbar_d()) };
                let len = mesh.facet_length(f);
                let b: Vec<f64> = ints.iter().map(|v| flux_correction * v * len).collect();
                system.add_local_vector(&space.entity_refs(f, off), &b);
            }
        }
    }
    Ok(FlowSystem { system, flux_correction })
}
