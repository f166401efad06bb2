mod common;

use proptest::prelude::*;

use sdt_core::fespace::{l2_project_cell, l2_project_skeleton, quadrature_triangle};
use sdt_core::mesh::FacetKind;
use sdt_core::sparse::CsrMatrix;
use sdt_core::transport::TransportSpaces;
use sdt_core::verify::{RateTable, TimeStepRule};
use sdt_core::{build_structured_mesh, Diagonal, MeshParams, Region};

fn diagonal() -> impl Strategy<Value = Diagonal> {
    prop_oneof![Just(Diagonal::Right), Just(Diagonal::Crossed)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn structured_meshes_satisfy_the_mesh_invariants(nx in 1usize..7, half in 1usize..5, d in diagonal()) {
        let ny = 2 * half;
        let m = build_structured_mesh(&MeshParams::new(nx, ny, d)).unwrap();
        let per_square = if d == Diagonal::Right { 2 } else { 4 };
        prop_assert_eq!(m.num_cells(), per_square * nx * ny);
        for c in 0..m.num_cells() {
            prop_assert!(m.cell_map(c).det > 0.0, "counterclockwise cells");
            let above = m.cell_centroid(c).y > 0.5;
            prop_assert_eq!(m.cells[c].region == Region::Stokes, above);
        }
        prop_assert!((m.region_area(Region::Stokes) - 0.5).abs() < 1e-12);
        prop_assert!((m.region_area(Region::Darcy) - 0.5).abs() < 1e-12);
        let mut interface = 0;
        for (f, facet) in m.facets.iter().enumerate() {
            match facet.kind {
                FacetKind::Boundary(_) => prop_assert_eq!(facet.sides.len(), 1),
                FacetKind::Interior | FacetKind::Interface => {
                    prop_assert_eq!(facet.sides.len(), 2);
                    prop_assert!((facet.sides[0].normal + facet.sides[1].normal).norm() < 1e-14);
                }
            }
            if facet.kind == FacetKind::Interface {
                interface += 1;
                prop_assert_eq!(m.cells[facet.sides[0].cell].region, Region::Stokes);
                prop_assert_eq!(m.cells[facet.sides[1].cell].region, Region::Darcy);
                prop_assert!((m.facet_midpoint(f).y - 0.5).abs() < 1e-12);
                // Stokes-side normal points into the porous region.
                prop_assert!((facet.sides[0].normal.y + 1.0).abs() < 1e-14);
            }
            for side in &facet.sides {
                // Outward: the normal points away from the cell centroid.
                let out = m.facet_midpoint(f) - m.cell_centroid(side.cell);
                prop_assert!(out.dot(&side.normal) > 0.0);
                prop_assert!((side.normal.norm() - 1.0).abs() < 1e-14);
            }
        }
        prop_assert_eq!(interface, nx);
    }

    #[test]
    fn triangle_rules_integrate_monomials(d in 1usize..=20, a in 0usize..=20, b in 0usize..=20) {
        prop_assume!(a + b <= d);
        let rule = quadrature_triangle(d).unwrap();
        prop_assert!(rule.weights.iter().all(|&w| w > 0.0));
        let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
        let q: f64 = rule.points.iter().zip(&rule.weights).map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32)).sum();
        prop_assert!((q - fact(a) * fact(b) / fact(a + b + 2)).abs() < 1e-14);
    }

    #[test]
    fn rate_of_a_power_law_is_its_exponent(c in 1e-3f64..1e3, p in 0.5f64..5.0, n0 in 2usize..6) {
        let mut t = RateTable::new("e");
        for i in 0..4 {
            let h = 1.0 / (n0 << i) as f64;
            t.push(h, 0, c * h.powf(p)).unwrap();
        }
        for r in t.rates().into_iter().flatten() {
            prop_assert!((r - p).abs() < 1e-9);
        }
        prop_assert!(t.is_monotone());
    }

    #[test]
    fn time_step_rule_divides_the_final_time(h in 1e-3f64..0.5, t_final in 0.01f64..20.0) {
        let rule = TimeStepRule::default();
        let dt = rule.dt(h, t_final);
        prop_assert!(dt <= rule.cap * (1.0 + 1e-12) && dt <= rule.factor * h * h * (1.0 + 1e-12));
        let steps = t_final / dt;
        prop_assert!((steps - steps.round()).abs() < 1e-9 * steps.max(1.0));
    }

    #[test]
    fn csr_products_match_dense(entries in prop::collection::vec((0usize..5, 0usize..4, -10.0f64..10.0), 0..30),
                                x in prop::collection::vec(-1.0f64..1.0, 4)) {
        let a = CsrMatrix::from_triplets(5, 4, &entries);
        let mut dense = [[0.0; 4]; 5];
        for &(i, j, v) in &entries {
            dense[i][j] += v;
        }
        let y = a.mul_vec(&x);
        for i in 0..5 {
            let yi: f64 = (0..4).map(|j| dense[i][j] * x[j]).sum();
            prop_assert!((y[i] - yi).abs() < 1e-12);
            for j in 0..4 {
                prop_assert!((a.get(i, j) - dense[i][j]).abs() < 1e-12);
                prop_assert!((a.transpose().get(j, i) - dense[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projections_reproduce_polynomials_of_the_space_degree(
        ell in 1usize..=3, c0 in -1.0f64..1.0, c1 in -1.0f64..1.0, c2 in -1.0f64..1.0,
    ) {
        let m = common::mesh(2);
        let spaces = TransportSpaces::new(&m, ell).unwrap();
        // Total degree ell in (x, y).
        let f = move |x: sdt_core::Vec2| c0 + c1 * x.x.powi(ell as i32) + c2 * x.x * x.y.powi(ell as i32 - 1);
        let c = l2_project_cell(&m, &spaces.c, f).unwrap();
        let cbar = l2_project_skeleton(&m, &spaces.cbar, &|x, _| f(x)).unwrap();
        for (node, x) in spaces.c.node_coordinates(&m).into_iter().enumerate() {
            prop_assert!((c[spaces.c.dof(node, 0)] - f(x)).abs() < 1e-12);
        }
        for (node, x) in spaces.cbar.node_coordinates(&m).into_iter().enumerate() {
            prop_assert!((cbar[spaces.cbar.dof(node, 0)] - f(x)).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn diffusion_form_is_positive_for_random_seeds(seed in any::<u64>(), ell in 1usize..=2) {
        let r = common::diffusion_check(2, ell, &common::diffusion(), seed, 20);
        prop_assert!(r.asymmetry <= 1e-14);
        prop_assert!(r.constant_residual <= 1e-12);
        prop_assert!(r.min_rayleigh > 0.0);
    }

    #[test]
    fn advection_identity_for_random_seeds(seed in any::<u64>()) {
        prop_assert!(common::advection_identity_mismatch(2, 2, 1, seed, 5) <= 1e-10);
    }
}
