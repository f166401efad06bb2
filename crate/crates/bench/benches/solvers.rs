use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use sdt_bench::river_setup;
use sdt_core::build_structured_mesh;
use sdt_core::flow::solve_flow;
use sdt_core::transport::{initial_state, CrankNicolson, TransportOperators};

fn flow_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow_solve");
    g.sample_size(10);
    for n in [4, 8] {
        let (case, _, _) = river_setup(n, 3, 2);
        let mesh = build_structured_mesh(&case.mesh).unwrap();
        let problem = case.flow_problem();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_flow(&mesh, &problem, case.k).unwrap())
        });
    }
    g.finish();
}

fn transport_assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("transport_assembly");
    g.sample_size(10);
    for n in [4, 8] {
        let (case, mesh, flow) = river_setup(n, 3, 2);
        let problem = case.transport_problem();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| TransportOperators::new(&mesh, &flow, &problem).unwrap())
        });
    }
    g.finish();
}

fn crank_nicolson_step(c: &mut Criterion) {
    let mut g = c.benchmark_group("crank_nicolson_step");
    for n in [4, 8, 16] {
        let (case, mesh, flow) = river_setup(n, 3, 2);
        let problem = case.transport_problem();
        let ops = TransportOperators::new(&mesh, &flow, &problem).unwrap();
        let cn = CrankNicolson::new(&ops, &mesh, case.dt).unwrap();
        let x = initial_state(&mesh, &ops.spaces, &problem).unwrap().to_vector();
        let load = ops.load(&mesh, &problem, 0.0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| b.iter(|| cn.step(&x, &load, &load).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, flow_solve, transport_assembly, crank_nicolson_step);
criterion_main!(benches);
