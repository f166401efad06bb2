//! Property checks shared by the integration tests and the acceptance
//! report. Each returns the measured quantity; callers apply tolerances.
#![allow(dead_code)]

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sdt_core::fespace::element::facet_points;
use sdt_core::fespace::{quadrature_segment, quadrature_triangle, ReferenceBasis, SegmentBasis};
use sdt_core::field::{scalar, vector};
use sdt_core::flow::{assemble_ah, solve_flow, FlowProblem, FlowSolution, FlowSpaces};
use sdt_core::sparse::CsrMatrix;
use sdt_core::transport::{
    assemble_advection, assemble_diffusion, classify_inflow, CrankNicolson, DiffusionModel, TransportSpaces,
};
use sdt_core::verify::ManufacturedCase;
use sdt_core::{build_structured_mesh, Diagonal, Mesh, MeshParams, Region, Vec2};

pub fn mesh(n: usize) -> Mesh {
    build_structured_mesh(&MeshParams::square(n, Diagonal::Crossed)).unwrap()
}

/// Closed boundaries everywhere, Darcy source with zero mean.
pub fn closed_flow(mesh: &Mesh, k: usize) -> (FlowProblem, FlowSolution) {
    let mut p = FlowProblem::new(1.0, 1.0, 1.0);
    p.f_d = Some(scalar(|x| x.x - 0.5));
    let s = solve_flow(mesh, &p, k).unwrap();
    (p, s)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn diffusion() -> DiffusionModel {
    DiffusionModel::ConstantMatrix(Matrix2::new(0.02, 0.005, 0.005, 0.01))
}

/// Cell and trace values of a coefficient vector at one facet point.
pub fn traces(spaces: &TransportSpaces, x: &[f64], cell: usize, facet: usize, xi: [f64; 2], t: f64) -> (f64, f64) {
    let cb = ReferenceBasis::new(spaces.ell);
    let fb = SegmentBasis::new(spaces.ell);
    let w: f64 = spaces.c.entity_dofs(cell).iter().zip(cb.values(xi)).map(|(&d, v)| x[d] * v).sum();
    let off = spaces.off_cbar();
    let wbar: f64 = spaces.cbar.entity_dofs(facet).iter().zip(fb.values(t)).map(|(&d, v)| x[off + d] * v).sum();
    (w, wbar)
}

/// Largest relative mismatch over `count` random vectors between
/// `B^a(w, w)` and `1/2 sum_K (div u_h, w^2)_K + 1/2 sum_K <|u_h . n|, (w - wbar)^2>_dK`.
pub fn advection_identity_mismatch(n: usize, k: usize, ell: usize, seed: u64, count: usize) -> f64 {
    let m = mesh(n);
    let (_, flow) = closed_flow(&m, k);
    let spaces = TransportSpaces::new(&m, ell).unwrap();
    let qd = k + 2 * ell + 2;
    let seg = quadrature_segment(qd).unwrap();
    let flags = classify_inflow(&flow, &m, &seg);
    let b = assemble_advection(&m, &flow, &spaces, &flags, qd).unwrap().matrix();
    let vol = quadrature_triangle(qd).unwrap();
    let cb = ReferenceBasis::new(ell);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let w = random_vector(&mut rng, spaces.dim());
        let lhs = b.bilinear(&w, &w);
        let mut rhs = 0.0;
        for c in 0..m.num_cells() {
            let map = m.cell_map(c);
            let dofs = spaces.c.entity_dofs(c);
            for (q, xi) in vol.points.iter().enumerate() {
                let (_, div) = flow.velocity_and_divergence(&m, c, *xi);
                let wv: f64 = dofs.iter().zip(cb.values(*xi)).map(|(&d, v)| w[d] * v).sum();
                rhs += 0.5 * vol.weights[q] * map.det.abs() * div * wv * wv;
            }
            for &f in &m.cells[c].facets {
                let nrm = m.facets[f].side_of(c).unwrap().normal;
                for fp in facet_points(&m, &map, f, &seg) {
                    let un = flow.velocity(c, fp.xi).dot(&nrm);
                    let (wc, wb) = traces(&spaces, &w, c, f, fp.xi, fp.t);
                    rhs += 0.5 * fp.weight * un.abs() * (wc - wb).powi(2);
                }
            }
        }
        worst = worst.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    worst
}

#[derive(Clone, Copy, Debug)]
pub struct DiffusionCheck {
    /// `max |B - B^T| / max |B|`.
    pub asymmetry: f64,
    /// `max |B 1| / max |B|`: constants lie in the kernel.
    pub constant_residual: f64,
    /// Smallest `B(w, w) / |w|^2` over the random vectors.
    pub min_rayleigh: f64,
}

pub fn diffusion_check(n: usize, ell: usize, model: &DiffusionModel, seed: u64, count: usize) -> DiffusionCheck {
    let m = mesh(n);
    let (_, flow) = closed_flow(&m, ell + 1);
    let spaces = TransportSpaces::new(&m, ell).unwrap();
    let beta = 6.0 * (ell * ell) as f64;
    let b = assemble_diffusion(&m, &flow, &spaces, model, beta, (ell + 1) + 2 * ell + 2).unwrap().matrix();
    let scale = b.max_abs();
    let ones = vec![1.0; spaces.dim()];
    let constant_residual = b.mul_vec(&ones).iter().fold(0.0f64, |a, v| a.max(v.abs())) / scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_rayleigh = f64::INFINITY;
    for _ in 0..count {
        let w = random_vector(&mut rng, spaces.dim());
        let nw: f64 = w.iter().map(|v| v * v).sum();
        min_rayleigh = min_rayleigh.min(b.bilinear(&w, &w) / nw);
    }
    DiffusionCheck { asymmetry: b.asymmetry() / scale, constant_residual, min_rayleigh }
}

/// `max |A - A^T| / max |A|` for the flow bilinear form `a_h` with
/// variable permeability.
pub fn flow_form_asymmetry(k: usize) -> f64 {
    let m = build_structured_mesh(&MeshParams::new(2, 2, Diagonal::Crossed)).unwrap();
    let mut p = FlowProblem::new(0.7, 1.0, 0.9);
    p.kappa = scalar(|x| 1.0 + x.x * x.x + 0.5 * x.y);
    p.f_s = Some(vector(|x| Vec2::new(x.y.sin(), x.x)));
    p.f_d = Some(scalar(|x| x.x - 0.5));
    let s = FlowSpaces::new(&m, &p, k).unwrap();
    let a = assemble_ah(&m, &s, &p).unwrap().matrix();
    a.asymmetry() / a.max_abs()
}

/// One Crank-Nicolson step of `x' = -lambda x` against the closed form.
pub fn crank_nicolson_scalar_error() -> f64 {
    let (lambda, dt) = (3.0, 0.1);
    let mass = CsrMatrix::from_triplets(1, 1, &[(0, 0, 1.0)]);
    let op = CsrMatrix::from_triplets(1, 1, &[(0, 0, lambda)]);
    let cn = CrankNicolson::from_matrices(&mass, &op, vec![vec![0]], dt).unwrap();
    let x = cn.step(&[2.0], &[0.0], &[0.0]).unwrap();
    let expected = 2.0 * (1.0 - lambda * dt / 2.0) / (1.0 + lambda * dt / 2.0);
    (x[0] - expected).abs()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Largest error of the triangle rules of degree `1..=max_degree` on the
/// monomials they claim to integrate, against `a! b! / (a + b + 2)!`.
pub fn quadrature_monomial_error(max_degree: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for d in 1..=max_degree {
        let rule = quadrature_triangle(d).unwrap();
        for a in 0..=d {
            for b in 0..=d - a {
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                    .sum();
                let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                worst = worst.max((q - exact).abs());
            }
        }
        let seg = quadrature_segment(d).unwrap();
        for a in 0..=d {
            let q: f64 = seg.points.iter().zip(&seg.weights).map(|(p, w)| w * p.powi(a as i32)).sum();
            worst = worst.max((q - 1.0 / (a + 1) as f64).abs());
        }
    }
    worst
}

/// Largest relative deviation of basis gradients from central differences
/// at random interior points, degrees 0 to 3.
pub fn basis_gradient_fd_error(seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..=3 {
        let b = ReferenceBasis::new(k);
        for _ in 0..count {
            let (x, y) = (rng.gen_range(0.05..0.9), rng.gen_range(0.05..0.9));
            let (x, y) = if x + y > 0.95 { (0.95 - y, 0.95 - x) } else { (x, y) };
            let (_, g) = b.eval([x, y]);
            for d in 0..2 {
                let (mut p, mut q) = ([x, y], [x, y]);
                p[d] += h;
                q[d] -= h;
                let (vp, vq) = (b.values(p), b.values(q));
                for i in 0..b.len() {
                    let fd = (vp[i] - vq[i]) / (2.0 * h);
                    worst = worst.max((fd - g[i][d]).abs() / g[i][d].abs().max(1.0));
                }
            }
        }
    }
    worst
}

/// Largest relative residual of the manufactured fields in the flow and
/// transport equations, with derivatives by central differences.
pub fn manufactured_pde_residual(seed: u64, count: usize) -> f64 {
    const H: f64 = 1e-4;
    let m = ManufacturedCase { mu: 1.3, kappa: 0.7, phi: 0.4, ..Default::default() };
    let ex = Vec2::new(1.0, 0.0);
    let ey = Vec2::new(0.0, 1.0);
    let d1 = |f: &dyn Fn(Vec2) -> f64, x: Vec2, dir: Vec2| (f(x + dir * H) - f(x - dir * H)) / (2.0 * H);
    let d2 = |f: &dyn Fn(Vec2) -> f64, x: Vec2, dir: Vec2| (f(x + dir * H) - 2.0 * f(x) + f(x - dir * H)) / (H * H);
    let rel = |a: f64, b: f64| (a - b).abs() / (1.0 + b.abs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        // Stokes momentum and incompressibility.
        let x = Vec2::new(rng.gen_range(0.05..0.95), rng.gen_range(0.55..0.95));
        let p = |y: Vec2| m.pressure(y, Region::Stokes);
        let f = m.stokes_source(x);
        let mut div = 0.0;
        for (c, dir) in [(0, ex), (1, ey)] {
            let uc = |y: Vec2| m.velocity(y, Region::Stokes)[c];
            let res = -m.mu * (d2(&uc, x, ex) + d2(&uc, x, ey)) + d1(&p, x, dir);
            worst = worst.max(rel(res, f[c]));
            div += d1(&uc, x, dir);
        }
        worst = worst.max(div.abs());

        // Darcy law and mass balance.
        let x = Vec2::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.45));
        let pd = |y: Vec2| m.pressure(y, Region::Darcy);
        let v = m.velocity(x, Region::Darcy);
        worst = worst.max(rel(v.x / m.kappa + d1(&pd, x, ex), 0.0));
        worst = worst.max(rel(v.y / m.kappa + d1(&pd, x, ey), 0.0));
        let div = d1(&|y| m.velocity(y, Region::Darcy).x, x, ex) + d1(&|y| m.velocity(y, Region::Darcy).y, x, ey);
        worst = worst.max(rel(-div, m.darcy_source(x)));

        // Advection-diffusion in either region.
        let region = if rng.gen_bool(0.5) { Region::Stokes } else { Region::Darcy };
        let y0 = if region == Region::Stokes { 0.55 } else { 0.05 };
        let x = Vec2::new(rng.gen_range(0.05..0.95), rng.gen_range(y0..y0 + 0.4));
        let t: f64 = rng.gen_range(0.0..1.0);
        let ct = (m.concentration(x, t + H) - m.concentration(x, t - H)) / (2.0 * H);
        let flux = |comp: usize| {
            move |y: Vec2| {
                let u = m.velocity(y, region);
                let g = m.concentration_gradient(y, t);
                let d = m.diffusion[comp];
                m.concentration(y, t) * u[comp] - (d[0] * g.x + d[1] * g.y)
            }
        };
        let div = d1(&flux(0), x, ex) + d1(&flux(1), x, ey);
        let phi = if region == Region::Darcy { m.phi } else { 1.0 };
        worst = worst.max(rel(phi * ct + div, m.transport_source(x, t, region)));
    }
    worst
}
