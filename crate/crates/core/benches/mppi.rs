use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use visnav_core::controller::{mppi_solve_with, CostContext, MppiConfig};
use visnav_core::exec::Execution;
use visnav_core::geometry::{CameraModel, GroundPoint, PixelPoint};

fn obstacle_ring() -> Vec<GroundPoint> {
    (0..256)
        .map(|i| {
            let a = i as f64 / 256.0 * std::f64::consts::TAU;
            GroundPoint::new(3.0 + 0.4 * a.cos(), 0.4 * a.sin())
        })
        .collect()
}

fn bench_mppi(c: &mut Criterion) {
    let cam = CameraModel::default();
    let obstacles = obstacle_ring();
    let ctx = CostContext { cam: &cam, subgoal: PixelPoint::new(170.0, 150.0), obstacles: &obstacles };
    let mut group = c.benchmark_group("mppi_solve");
    for samples in [128usize, 512, 2048] {
        let cfg = MppiConfig { num_samples: samples, ..Default::default() };
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, samples), &cfg, |b, cfg| {
                b.iter(|| mppi_solve_with(black_box(&ctx), cfg, None, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_mppi);
criterion_main!(benches);
