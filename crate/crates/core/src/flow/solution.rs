//! Solving the flow system and checking its structural properties.

use crate::error::{Error, Result};
use crate::fespace::element::facet_points;
use crate::fespace::{l2_project_cell_with, quadrature_segment, quadrature_triangle, ReferenceBasis, SegmentBasis};
use crate::mesh::{FacetKind, Mesh, Region, Vec2};
use crate::sparse::{CondensedSolver, CsrMatrix};

use super::assemble::assemble_flow_system;
use super::{FlowProblem, FlowSpaces, Gauge};

/// Relative residual required of the sparse direct solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Discrete flow fields. Coefficient vectors are indexed by the dofs of
/// the corresponding maps in `spaces`, prescribed values included.
#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub k: usize,
    pub spaces: FlowSpaces,
    pub u: Vec<f64>,
    pub ubar: Vec<f64>,
    pub p: Vec<f64>,
    pub pbar_s: Vec<f64>,
    pub pbar_d: Vec<f64>,
    /// Mean-pressure multiplier; zero without the zero-mean gauge.
    pub lambda: f64,
    pub flux_correction: f64,
    /// `|A x - b| / |b|` of the final solve.
    pub relative_residual: f64,
    basis: ReferenceBasis,
}

impl FlowSolution {
    /// The zero solution on given spaces.
    pub fn zero(spaces: FlowSpaces) -> Self {
        let k = spaces.k;
        Self {
            k,
            u: vec![0.0; spaces.u.n_dofs()],
            ubar: vec![0.0; spaces.ubar.n_dofs()],
            p: vec![0.0; spaces.p.n_dofs()],
            pbar_s: vec![0.0; spaces.pbar_s.n_dofs()],
            pbar_d: vec![0.0; spaces.pbar_d.n_dofs()],
            lambda: 0.0,
            flux_correction: 0.0,
            relative_residual: 0.0,
            spaces,
            basis: ReferenceBasis::new(k),
        }
    }

    pub fn velocity_basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    /// Velocity coefficients of one cell, per component, in local node order.
    pub fn cell_coefficients(&self, cell: usize) -> [Vec<f64>; 2] {
        let nodes = self.spaces.u.nodes(cell).expect("velocity lives on all cells");
        [0, 1].map(|c| nodes.iter().map(|&n| self.u[self.spaces.u.dof(n, c)]).collect())
    }

    /// Cell velocity at reference coordinates `xi` of `cell`.
    pub fn velocity(&self, cell: usize, xi: [f64; 2]) -> Vec2 {
        let v = self.basis.values(xi);
        let [a, b] = self.cell_coefficients(cell);
        Vec2::new(dot(&a, &v), dot(&b, &v))
    }

    /// Cell velocity and its divergence at reference coordinates.
    pub fn velocity_and_divergence(&self, mesh: &Mesh, cell: usize, xi: [f64; 2]) -> (Vec2, f64) {
        let (v, g) = self.basis.eval(xi);
        let map = mesh.cell_map(cell);
        let [a, b] = self.cell_coefficients(cell);
        let mut div = 0.0;
        for i in 0..v.len() {
            let gi = map.push_gradient(g[i]);
            div += a[i] * gi.x + b[i] * gi.y;
        }
        (Vec2::new(dot(&a, &v), dot(&b, &v)), div)
    }

    /// Facet velocity on a Stokes-skeleton facet at parameter `t`.
    pub fn facet_velocity(&self, facet: usize, t: f64) -> Option<Vec2> {
        let nodes = self.spaces.ubar.nodes(facet)?;
        let psi = SegmentBasis::new(self.k).values(t);
        let mut out = Vec2::zeros();
        for (j, &n) in nodes.iter().enumerate() {
            out.x += psi[j] * self.ubar[self.spaces.ubar.dof(n, 0)];
            out.y += psi[j] * self.ubar[self.spaces.ubar.dof(n, 1)];
        }
        Some(out)
    }

    /// Cell pressure at reference coordinates of `cell`.
    pub fn pressure(&self, cell: usize, xi: [f64; 2]) -> f64 {
        let nodes = self.spaces.p.nodes(cell).expect("pressure lives on all cells");
        let v = ReferenceBasis::new(self.k - 1).values(xi);
        nodes.iter().zip(&v).map(|(&n, vi)| self.p[n] * vi).sum()
    }

    /// Largest absolute cell velocity coefficient.
    pub fn velocity_scale(&self) -> f64 {
        self.u.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn describe_configuration(mesh: &Mesh, problem: &FlowProblem) -> String {
    let labels: Vec<String> = crate::mesh::BoundaryLabel::ALL
        .iter()
        .filter(|&&l| mesh.has_label(l))
        .map(|&l| format!("{l:?}={:?}", problem.boundary_for(l)))
        .collect();
    format!("gauge {:?}, boundaries [{}]", problem.gauge, labels.join(", "))
}

/// Free cell-local (velocity, pressure) unknowns per cell; these are
/// eliminated before the global solve.
fn cell_blocks(mesh: &Mesh, s: &FlowSpaces) -> Vec<Vec<usize>> {
    (0..mesh.num_cells())
        .map(|c| {
            let mut idx = Vec::new();
            for (space, off) in [(&s.u, 0), (&s.p, s.off_p())] {
                if space.is_active(c) {
                    idx.extend(space.entity_dofs(c).into_iter().filter_map(|d| space.free_index(d)).map(|i| i + off));
                }
            }
            idx
        })
        .filter(|idx| !idx.is_empty())
        .collect()
}

/// Solve the bordered zero-mean system `[K c; c^T 0] [x; lambda] = [f; g]`.
///
/// `K` is symmetric with the constant pressure mode `z` (ones on p, pbar_s,
/// pbar_d) as its kernel, so `lambda = z.f / z.c`. One pressure unknown is
/// pinned to make `K` invertible and the mean constraint is restored by a
/// shift along `z`. This keeps the dense multiplier row out of the
/// factorization.
fn solve_zero_mean(mesh: &Mesh, s: &FlowSpaces, a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let m = s.off_multiplier();
    let pressure = s.off_p()..m;
    let mut c = vec![0.0; m];
    for (j, v) in a.row(m) {
        if j < m {
            c[j] = v;
        }
    }
    let zc: f64 = c[pressure.clone()].iter().sum();
    let zf: f64 = b[pressure.clone()].iter().sum();
    if zc == 0.0 {
        return Err(Error::Solver("zero-mean constraint does not see the pressure".into()));
    }
    let lambda = zf / zc;
    // pin a skeleton pressure so the pinned unknown stays outside the local blocks
    let pin = if s.off_pbar_s() < m { s.off_pbar_s() } else { s.off_p() };
    let mut t = Vec::with_capacity(a.nnz());
    for i in 0..m {
        if i == pin {
            t.push((i, i, 1.0));
            continue;
        }
        t.extend(a.row(i).filter(|&(j, _)| j < m && j != pin).map(|(j, v)| (i, j, v)));
    }
    let k = CsrMatrix::from_triplet_vec(m, m, t);
    let mut f: Vec<f64> = (0..m).map(|i| b[i] - lambda * c[i]).collect();
    f[pin] = 0.0;
    let mut blocks = cell_blocks(mesh, s);
    for blk in &mut blocks {
        blk.retain(|&i| i != pin);
    }
    blocks.retain(|blk| !blk.is_empty());
    let mut x = CondensedSolver::factor(k, blocks)?.solve(&f, SOLVE_TOLERANCE)?;
    let shift = (b[m] - dot(&c, &x)) / zc;
    for v in &mut x[pressure] {
        *v += shift;
    }
    x.push(lambda);
    Ok(x)
}

/// Assemble and solve the coupled flow problem with velocity degree `k`.
pub fn solve_flow(mesh: &Mesh, problem: &FlowProblem, k: usize) -> Result<FlowSolution> {
    let spaces = FlowSpaces::new(mesh, problem, k)?;
    let fs = assemble_flow_system(mesh, &spaces, problem)?;
    let config_err = |e: Error| Error::Solver(format!("{e}; configuration: {}", describe_configuration(mesh, problem)));
    let flux_correction = fs.flux_correction;
    let (a, b) = fs.system.into_parts();
    let x = if spaces.multiplier {
        solve_zero_mean(mesh, &spaces, &a, &b).map_err(config_err)?
    } else {
        CondensedSolver::factor(a.clone(), cell_blocks(mesh, &spaces))
            .and_then(|lu| lu.solve(&b, SOLVE_TOLERANCE))
            .map_err(config_err)?
    };
    let r: Vec<f64> = a.mul_vec(&x).iter().zip(&b).map(|(a, b)| a - b).collect();
    let bn = crate::sparse::norm2(&b);
    let rn = crate::sparse::norm2(&r);
    let relative_residual = if bn > 0.0 { rn / bn } else { rn };
    if rn > SOLVE_TOLERANCE * bn {
        return Err(config_err(Error::Solver(format!("residual {relative_residual:.3e} above tolerance"))));
    }

    let s = &spaces;
    let u = s.u.expand(&x[..s.off_ubar()]);
    let ubar = s.ubar.expand(&x[s.off_ubar()..s.off_p()]);
    let p = s.p.expand(&x[s.off_p()..s.off_pbar_s()]);
    let pbar_s = s.pbar_s.expand(&x[s.off_pbar_s()..s.off_pbar_d()]);
    let pbar_d = s.pbar_d.expand(&x[s.off_pbar_d()..s.off_multiplier()]);
    let lambda = if problem.gauge == Gauge::ZeroMean { x[s.off_multiplier()] } else { 0.0 };
    let mut sol = FlowSolution::zero(spaces);
    sol.u = u;
    sol.ubar = ubar;
    sol.p = p;
    sol.pbar_s = pbar_s;
    sol.pbar_d = pbar_d;
    sol.lambda = lambda;
    sol.flux_correction = flux_correction;
    sol.relative_residual = relative_residual;
    Ok(sol)
}

/// Largest `|div u_h + chi_d Pi_Q f_d|` over cells and quadrature points.
/// The projection uses the quadrature of the flow load.
pub fn check_divergence(sol: &FlowSolution, problem: &FlowProblem, mesh: &Mesh) -> Result<f64> {
    let qd = problem.quad_degree(sol.k);
    let proj = match &problem.f_d {
        Some(fd) => {
            let f = |x: Vec2, _| fd(x);
            let darcy_only = crate::fespace::build_cell_space(
                mesh,
                sol.k - 1,
                crate::fespace::Rank::Scalar,
                crate::fespace::Restriction::Region(Region::Darcy),
            )?;
            Some((l2_project_cell_with(mesh, &darcy_only, &f, qd)?, darcy_only))
        }
        None => None,
    };
    let rule = quadrature_triangle(qd)?;
    let pb = ReferenceBasis::new(sol.k - 1);
    let mut worst: f64 = 0.0;
    for c in 0..mesh.num_cells() {
        for p in &rule.points {
            let (_, div) = sol.velocity_and_divergence(mesh, c, *p);
            let src = match &proj {
                Some((coef, space)) => match space.nodes(c) {
                    Some(nodes) => nodes.iter().zip(pb.values(*p)).map(|(&n, v)| coef[n] * v).sum(),
                    None => 0.0,
                },
                None => 0.0,
            };
            worst = worst.max((div + src).abs());
        }
    }
    Ok(worst)
}

/// Largest normal-velocity jump across interior and interface facets, and
/// largest `|u_h . n - ubar_h . n|` on interface facets.
pub fn check_normal_jump(sol: &FlowSolution, mesh: &Mesh) -> Result<f64> {
    let seg = quadrature_segment(2 * sol.k + 2)?;
    let mut worst: f64 = 0.0;
    for (f, facet) in mesh.facets.iter().enumerate() {
        if facet.sides.len() != 2 {
            continue;
        }
        let n = facet.sides[0].normal;
        let mut traces = Vec::with_capacity(2);
        for side in &facet.sides {
            let map = mesh.cell_map(side.cell);
            let pts = facet_points(mesh, &map, f, &seg);
            traces.push(pts.iter().map(|fp| sol.velocity(side.cell, fp.xi).dot(&n)).collect::<Vec<_>>());
        }
        for q in 0..seg.points.len() {
            worst = worst.max((traces[0][q] - traces[1][q]).abs());
        }
        if facet.kind == FacetKind::Interface {
            for (q, &t) in seg.points.iter().enumerate() {
                let ub = sol.facet_velocity(f, t).expect("interface lies on the Stokes skeleton").dot(&n);
                worst = worst.max((traces[0][q] - ub).abs()).max((traces[1][q] - ub).abs());
            }
        }
    }
    Ok(worst)
}
