//! Hot paths under the build's execution mode.
//!
//! `cargo bench` measures the rayon build (all cores and a one-thread pool);
//! `cargo bench --no-default-features` measures the sequential build. Both
//! write to the same benchmark ids with a mode suffix so criterion reports
//! them side by side.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvghash_core::model::SimilarityKind;
use mvghash_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const SIZES: [usize; 2] = [500, 2000];

fn matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

fn graph(rng: &mut ChaCha8Rng, n: usize, degree: usize) -> SparseAdjacency {
    let edges: Vec<_> = (0..n * degree / 2)
        .map(|_| (rng.random_range(0..n), rng.random_range(0..n), 1.0))
        .collect();
    SparseAdjacency::from_entries(n, edges, false).symmetrized()
}

/// An execution mode available in this build.
struct Mode {
    name: &'static str,
    pool: Option<rayon::ThreadPool>,
}

impl Mode {
    fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }
}

fn modes() -> Vec<Mode> {
    if par::is_parallel() {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        vec![
            Mode { name: "rayon", pool: None },
            Mode { name: "rayon-1thread", pool: Some(pool) },
        ]
    } else {
        vec![Mode { name: "sequential", pool: None }]
    }
}

fn bench_knn(c: &mut Criterion) {
    let mut g = c.benchmark_group("knn");
    g.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in SIZES {
        let x = matrix(&mut rng, n, 64);
        for mode in modes() {
            g.bench_function(BenchmarkId::new(mode.name, n), |b| b.iter(|| mode.run(|| {
                black_box(build_knn(&x, 10).unwrap());
            })));
        }
    }
    g.finish();
}

fn bench_contrastive(c: &mut Criterion) {
    let mut g = c.benchmark_group("contrastive_loss_and_grad");
    g.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in SIZES {
        let u = matrix(&mut rng, n, 32);
        let nbrs = build_knn(&matrix(&mut rng, n, 16), 10).unwrap();
        for mode in modes() {
            g.bench_function(BenchmarkId::new(mode.name, n), |b| b.iter(|| mode.run(|| {
                black_box(
                    losses::contrastive_loss_and_grad(&u, &nbrs, 0.2, SimilarityKind::Cosine, GradientMode::Exact)
                        .unwrap(),
                );
            })));
        }
    }
    g.finish();
}

fn bench_smooth(c: &mut Criterion) {
    let mut g = c.benchmark_group("smooth");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in SIZES {
        let lap = NormalizedLaplacian::build(&graph(&mut rng, n, 20)).unwrap();
        let x = matrix(&mut rng, n, 128);
        for mode in modes() {
            g.bench_function(BenchmarkId::new(mode.name, n), |b| b.iter(|| mode.run(|| {
                black_box(smooth(&x, &lap, 0.5, 2).unwrap());
            })));
        }
    }
    g.finish();
}

fn bench_map(c: &mut Criterion) {
    let mut g = c.benchmark_group("map_at_all");
    g.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in SIZES {
        let codes = BinaryCodes::from_embedding(&matrix(&mut rng, n, 64));
        let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..5)).collect();
        for mode in modes() {
            g.bench_function(BenchmarkId::new(mode.name, n), |b| b.iter(|| mode.run(|| {
                black_box(map_at_all(&codes, &labels).unwrap());
            })));
        }
    }
    g.finish();
}

criterion_group!(benches, bench_knn, bench_contrastive, bench_smooth, bench_map);
criterion_main!(benches);
