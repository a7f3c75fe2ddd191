//! Data-parallel kernels timed on the full rayon pool and on a one-thread
//! pool. Build with `--no-default-features` to time the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use phiribbon::dist::{dsbs, xor_triple};
use phiribbon::ribbon_mc::grid_sweep;
use phiribbon::{
    brute_min_objective, gram_matrix, phi_ribbon_membership, GridSpec, JointDist,
    LambdaPoint, PhiSpec, SearchOpts,
};

fn lp(v: &[f64]) -> LambdaPoint {
    LambdaPoint::new(v.to_vec()).unwrap()
}

/// Runs `f` on a pool of `threads` workers, or directly without the feature.
fn on_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

fn pools() -> Vec<(String, usize)> {
    let all = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mode = if phiribbon::par::is_parallel() { "rayon" } else { "sequential" };
    let mut v = vec![(format!("{mode}-1"), 1)];
    if all > 1 && phiribbon::par::is_parallel() {
        v.push((format!("{mode}-{all}"), all));
    }
    v
}

fn bench_oracle(c: &mut Criterion) {
    let d = JointDist::new(vec![2, 2], vec![0.4, 0.1, 0.2, 0.3]).unwrap();
    let sq = PhiSpec::square();
    let l = lp(&[0.7, 0.7]);
    let grid = GridSpec::new(25);
    let mut g = c.benchmark_group("brute_min_objective 4 atoms r25");
    for (name, n) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| on_pool(n, || brute_min_objective(&d, &sq, &l, &grid).unwrap()))
        });
    }
    g.finish();
}

fn bench_search(c: &mut Criterion) {
    let x = xor_triple();
    let phi = PhiSpec::binary_entropy();
    let l = lp(&[1.0, 1.0, 1.0]);
    let opts = SearchOpts::default();
    let mut g = c.benchmark_group("phi_ribbon_membership xor binent");
    g.sample_size(10);
    for (name, n) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| on_pool(n, || phi_ribbon_membership(&x, &phi, &l, &opts).unwrap()))
        });
    }
    g.finish();
}

fn bench_sweep(c: &mut Criterion) {
    let d = dsbs(0.5).unwrap();
    let gram = gram_matrix(&d);
    let mut g = c.benchmark_group("mc grid sweep 100x100");
    for (name, n) in pools() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                on_pool(n, || {
                    grid_sweep(2, 100, |l| {
                        let l = LambdaPoint { values: l.to_vec() };
                        phiribbon::ribbon_mc::mc_membership_gram(&d, &gram, &l).is_member()
                    })
                    .unwrap()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_oracle, bench_search, bench_sweep);
criterion_main!(benches);
