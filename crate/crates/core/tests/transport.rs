mod common;

use common::*;

use sdt_core::fespace::element::facet_points;
use sdt_core::fespace::quadrature_segment;
use sdt_core::field::{constant, scalar};
use sdt_core::flow::{solve_flow, FlowBoundary, FlowProblem, FlowSolution, FlowSpaces, Gauge};
use sdt_core::transport::{
    assemble_mass, classify_inflow, initial_state, run_transport, DiffusionModel, TransportProblem, TransportSpaces,
};
use sdt_core::{BoundaryLabel, Region, Vec2};

#[test]
fn advection_diagonal_identity() {
    for (k, ell) in [(2, 1), (3, 2)] {
        let worst = advection_identity_mismatch(4, k, ell, 7, 20);
        assert!(worst <= 1e-10, "k = {k}, ell = {ell}: mismatch {worst:e}");
    }
}

#[test]
fn inflow_flags_are_complementary_across_interior_facets() {
    let m = mesh(4);
    let (_, flow) = closed_flow(&m, 3);
    let seg = quadrature_segment(9).unwrap();
    let flags = classify_inflow(&flow, &m, &seg);
    let mut checked = 0;
    for (f, facet) in m.facets.iter().enumerate() {
        if facet.is_boundary() {
            continue;
        }
        let [a, b] = [&facet.sides[0], &facet.sides[1]];
        let ea = m.cells[a.cell].facets.iter().position(|&x| x == f).unwrap();
        let eb = m.cells[b.cell].facets.iter().position(|&x| x == f).unwrap();
        let pa = facet_points(&m, &m.cell_map(a.cell), f, &seg);
        let pb = facet_points(&m, &m.cell_map(b.cell), f, &seg);
        for q in 0..seg.len() {
            assert!((pa[q].x - pb[q].x).norm() < 1e-14, "facet points are shared");
            let (ua, ub) = (flags.normal_velocity(a.cell, ea, q), flags.normal_velocity(b.cell, eb, q));
            assert!((ua + ub).abs() < 1e-10 * flow.velocity_scale(), "normal flux is single-valued");
            if ua.abs() > flags.tol {
                assert_ne!(flags.is_inflow(a.cell, ea, q), flags.is_inflow(b.cell, eb, q));
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn diffusion_is_symmetric_and_positive() {
    for ell in [1, 2] {
        let r = diffusion_check(2, ell, &diffusion(), 11 + ell as u64, 100);
        assert!(r.asymmetry <= 1e-14, "{r:?}");
        assert!(r.constant_residual <= 1e-12, "{r:?}");
        assert!(r.min_rayleigh > 0.0, "{r:?}");
    }
}

#[test]
fn dispersion_diffusion_is_symmetric_and_positive() {
    let model = DiffusionModel::StokesDarcyDispersion { delta: 1e-3, phi: 0.4, d_m: 1e-3, d_l: 2e-2, d_t: 1e-3 };
    let r = diffusion_check(2, 1, &model, 3, 100);
    assert!(r.asymmetry <= 1e-14, "{r:?}");
    assert!(r.min_rayleigh > 0.0, "{r:?}");
}

#[test]
fn mass_integrates_porosity() {
    let m = mesh(2);
    let spaces = TransportSpaces::new(&m, 2).unwrap();
    let mass = assemble_mass(&m, &spaces, &|r| if r == Region::Darcy { 0.4 } else { 1.0 }).unwrap().matrix();
    let ones: Vec<f64> = (0..spaces.dim()).map(|i| if i < spaces.off_cbar() { 1.0 } else { 0.0 }).collect();
    // Unit square split in half: 0.5 * 1 + 0.5 * 0.4.
    assert!((mass.bilinear(&ones, &ones) - 0.7).abs() < 1e-14);
    assert!(mass.row(spaces.off_cbar()).next().is_none());
}

#[test]
fn crank_nicolson_scalar_oracle() {
    assert!(crank_nicolson_scalar_error() < 1e-14);
}

#[test]
fn flow_form_is_symmetric() {
    for k in [1, 2, 3] {
        assert!(flow_form_asymmetry(k) <= 1e-12);
    }
}

#[test]
fn manufactured_fields_solve_the_equations() {
    assert!(manufactured_pde_residual(5, 100) <= 1e-6);
}

#[test]
fn zero_velocity_keeps_constant_state() {
    let m = mesh(2);
    let fp = FlowProblem::new(1.0, 1.0, 1.0);
    let flow = FlowSolution::zero(FlowSpaces::new(&m, &fp, 2).unwrap());
    let problem = TransportProblem::new(1, diffusion(), constant(0.3));
    let mut max_change: f64 = 0.0;
    let mut prev: Option<Vec<f64>> = None;
    let run = run_transport(&m, &flow, &problem, 0.05, 0.01, &mut |s, _| {
        let x = s.to_vector();
        if let Some(p) = &prev {
            max_change = p.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(max_change, f64::max);
        }
        prev = Some(x);
        Ok(())
    })
    .unwrap();
    assert_eq!(run.records.len(), 6);
    assert!(max_change <= 1e-13, "state changed by {max_change:e}");
}

/// With `ell = k - 1` and the source `-f_d c` in the porous region, the
/// constant stays a solution of the discrete problem.
#[test]
fn constant_is_preserved_by_compatible_scheme() {
    let m = mesh(4);
    let k = 2;
    let (fp, flow) = closed_flow(&m, k);
    let c_tilde = 0.7;
    let mut problem = TransportProblem::new(k - 1, diffusion(), constant(c_tilde));
    problem.phi_darcy = 0.4;
    let fd = fp.f_d.clone().unwrap();
    problem.forcing.source = Some(std::sync::Arc::new(
        move |x: Vec2, r: Region, _t: f64| {
            if r == Region::Darcy {
                -fd(x) * c_tilde
            } else {
                0.0
            }
        },
    ));
    let mut worst: f64 = 0.0;
    let run = run_transport(&m, &flow, &problem, 0.1, 0.01, &mut |s, _| {
        let dev = s.c.iter().chain(&s.cbar).map(|v| (v - c_tilde).abs()).fold(0.0, f64::max);
        worst = worst.max(dev / c_tilde);
        Ok(())
    })
    .unwrap();
    assert!(worst <= 1e-12, "constant drifted by {worst:e}");
    assert!(run.max_relative_drift() <= 1e-9);
}

#[test]
fn initial_state_projects_constants_exactly() {
    let m = mesh(2);
    let spaces = TransportSpaces::new(&m, 2).unwrap();
    let problem = TransportProblem::new(2, diffusion(), constant(0.25));
    let s = initial_state(&m, &spaces, &problem).unwrap();
    assert!(s.c.iter().chain(&s.cbar).all(|v| (v - 0.25).abs() < 1e-14));
}

#[test]
fn conservation_holds_with_open_boundary() {
    let m = mesh(4);
    let inflow = sdt_core::field::vector(|x: Vec2| Vec2::new(4.0 * (x.y - 0.5) * (1.0 - x.y), 0.0));
    let mut fp = FlowProblem::new(1.0, 1.0, 1.0)
        .with_boundary(BoundaryLabel::StokesLeft, FlowBoundary::Velocity(inflow))
        .with_boundary(BoundaryLabel::StokesRight, FlowBoundary::ZeroStress)
        .with_boundary(BoundaryLabel::StokesTop, FlowBoundary::Slip)
        .with_boundary(BoundaryLabel::DarcyBottom, FlowBoundary::Pressure(constant(0.0)));
    fp.gauge = Gauge::PressureBc;
    let flow = solve_flow(&m, &fp, 2).unwrap();
    let mut problem = TransportProblem::new(1, diffusion(), scalar(|x| x.x * x.y));
    problem.forcing.inflow = Some(std::sync::Arc::new(|_, _, _| 0.2));
    let mut outflow_seen = false;
    let run = run_transport(&m, &flow, &problem, 0.05, 0.005, &mut |_, _| Ok(())).unwrap();
    let ops = &run.operators;
    outflow_seen |= ops.outflow_rate(&run.final_state.to_vector()).abs() > 0.0;
    assert!(outflow_seen);
    assert!(run.max_relative_drift() <= 1e-9, "drift {:e}", run.max_relative_drift());
    let mass_change = run.records.last().unwrap().mass - run.records[0].mass;
    assert!(mass_change.abs() > 1e-6, "boundary fluxes change the mass");
}
