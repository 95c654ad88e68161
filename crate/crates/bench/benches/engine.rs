use clipcube::integrand::{plan_for_bound, J1Series};
use clipcube::moments::block_moments;
use clipcube::oracle::mc_volume;
use clipcube::volume::{t_of_k, ApproximationParams};
use clipcube::Sharpness;
use clipcube_bench::{first_family, shifted_ball};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn moments(c: &mut Criterion) {
    let mut group = c.benchmark_group("block_moments");
    group.sample_size(10);
    for n in [4usize, 16] {
        let fam = first_family(&shifted_ball(n));
        for p in [40usize, 160] {
            group.bench_with_input(BenchmarkId::new(format!("n{n}"), p), &p, |b, &p| {
                b.iter(|| block_moments(black_box(&fam), p, 0).unwrap())
            });
        }
    }
    group.finish();
}

fn series(c: &mut Criterion) {
    let fam = first_family(&shifted_ball(4));
    let plan = plan_for_bound(64.0, 1e-8).unwrap();
    let table = block_moments(&fam, 2 * plan.order, 0).unwrap();
    let j1 = J1Series::new(&table, &plan).unwrap();
    c.bench_function("j1_eval_t64", |b| b.iter(|| j1.eval(black_box(1.7))));
}

fn pipeline(c: &mut Criterion) {
    let problem = shifted_ball(4);
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    let params = ApproximationParams::new(Sharpness::new(2.0).unwrap(), 0.2, 1e-6);
    group.bench_function("t_of_k_n4_k2", |b| b.iter(|| t_of_k(&problem, &params).unwrap()));
    group.bench_function("mc_n4_1e5", |b| b.iter(|| mc_volume(&problem, 100_000, 1).unwrap()));
    group.finish();
}

criterion_group!(benches, moments, series, pipeline);
criterion_main!(benches);
