use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morrey_lab::exponents::{ExponentExpr, ExponentField};
use morrey_lab::field::{LatticeField, ScalarField};
use morrey_lab::geometry::{DomainSpec, GridResolution, QuadratureGrid, RadialLadder, Region};
use morrey_lab::norms::luxemburg_norm;
use morrey_lab::operators::{OperatorContext, OperatorSettings};
use morrey_lab::Exec;
use std::hint::black_box;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn grid_build(c: &mut Criterion) {
    let dom = DomainSpec::unit_ball(2);
    let ladder = RadialLadder::for_domain(&dom, 18).unwrap();
    let mut g = c.benchmark_group("grid_build");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| QuadratureGrid::build(&dom, &ladder, GridResolution::fine(2), Region::Domain, exec).unwrap())
        });
    }
    g.finish();
}

fn luxemburg(c: &mut Criterion) {
    let dom = DomainSpec::unit_ball(2);
    let ladder = RadialLadder::for_domain(&dom, 18).unwrap();
    let p = ExponentField::lebesgue(ExponentExpr::RadialAffine { a: 2.0, b: 0.5 }, &dom).unwrap();
    let f = ScalarField::Lattice(LatticeField::random(&dom, 6, 1).unwrap());
    let mut g = c.benchmark_group("luxemburg");
    for (name, exec) in MODES {
        let grid = QuadratureGrid::build(&dom, &ladder, GridResolution::fine(2), Region::Domain, exec).unwrap();
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| luxemburg_norm(&grid, black_box(&f), &p).unwrap()));
    }
    g.finish();
}

fn maximal_on_grid(c: &mut Criterion) {
    let dom = DomainSpec::unit_ball(2);
    let ladder = RadialLadder::for_domain(&dom, 8).unwrap();
    let coarse = QuadratureGrid::build(&dom, &ladder, GridResolution::coarse(2), Region::Domain, Exec::Sequential).unwrap();
    let f = ScalarField::power(dom.x0(), -0.5);
    let mut g = c.benchmark_group("maximal_on_grid");
    g.sample_size(10);
    for (name, exec) in MODES {
        let ctx = OperatorContext::new(&dom, &ladder, OperatorSettings::default_for(2), exec).unwrap();
        let pf = ctx.prepare(&f);
        let nodes = coarse.nodes();
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| exec.map(nodes.len(), |i| ctx.maximal(&pf, &nodes[i].x).value))
        });
    }
    g.finish();
}

criterion_group!(benches, grid_build, luxemburg, maximal_on_grid);
criterion_main!(benches);
