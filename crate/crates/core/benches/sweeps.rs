//! Parallel-vs-sequential sweep benchmarks: the census-style workload of
//! integrating many independent orbits, and batched trap-margin sampling.
//! With the default `parallel` feature the fan-out path uses the worker
//! pool; the `*_seq` variants pin the sequential reference.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use aflow_core::exec;
use aflow_core::flows::{suspension_flow, Flow, FlowSystem, MapSystem};
use aflow_core::maps::{DaConfig, DaMap};
use aflow_core::orbit::integrate::Engine;

fn da_suspension() -> FlowSystem {
    let da = DaMap::new(DaConfig::standard_single()).unwrap();
    suspension_flow(&MapSystem::Da(da))
}

fn orbit_sweep(sys: &FlowSystem, n: usize, parallel: bool) -> f64 {
    let job = |i: usize| -> f64 {
        let mut rng = exec::job_rng(7, i);
        let start = sys.sample_point(&mut rng);
        let mut eng = Engine::new(sys, &start, 1e-3).unwrap();
        eng.collect_events = false;
        eng.advance(5.0).unwrap();
        eng.y[0]
    };
    let out = if parallel {
        exec::map_indexed(n, job)
    } else {
        exec::map_indexed_seq(n, job)
    };
    out.iter().sum()
}

fn bench_orbit_sweep(c: &mut Criterion) {
    let sys = da_suspension();
    let mut group = c.benchmark_group("orbit_sweep_64");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter_batched(|| (), |_| orbit_sweep(&sys, 64, true), BatchSize::SmallInput)
    });
    group.bench_function("sequential", |b| {
        b.iter_batched(|| (), |_| orbit_sweep(&sys, 64, false), BatchSize::SmallInput)
    });
    group.finish();
}

fn margin_sweep(sys: &FlowSystem, n: usize, parallel: bool) -> f64 {
    let job = |i: usize| -> f64 {
        let mut rng = exec::job_rng(11, i);
        let p = sys.sample_point(&mut rng);
        let mut f = aflow_core::Coords::zeros(p.chart.dim());
        sys.field(p.chart, &p.coords, &mut f).unwrap();
        f.norm()
    };
    let out = if parallel {
        exec::map_indexed(n, job)
    } else {
        exec::map_indexed_seq(n, job)
    };
    out.iter().sum()
}

fn bench_field_sweep(c: &mut Criterion) {
    let sys = da_suspension();
    let mut group = c.benchmark_group("field_sweep_100k");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter_batched(|| (), |_| margin_sweep(&sys, 100_000, true), BatchSize::SmallInput)
    });
    group.bench_function("sequential", |b| {
        b.iter_batched(
            || (),
            |_| margin_sweep(&sys, 100_000, false),
            BatchSize::SmallInput,
        )
    });
    group.finish();
}

criterion_group!(benches, bench_orbit_sweep, bench_field_sweep);
criterion_main!(benches);
