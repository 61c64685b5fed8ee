use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sublinear_spectrum::hadamard::{conjugate, HadamardRotation};
use sublinear_spectrum::harness::{run_experiment_on, ExperimentConfig};
use sublinear_spectrum::matrix::{generate, generate_dense, MatrixKind};
use sublinear_spectrum::par;
use sublinear_spectrum::rng::rng_from_seed;
use sublinear_spectrum::uniform::{build_sampled_matrix, draw_uniform};

const MODES: [(&str, bool); 2] = [("parallel", false), ("sequential", true)];

fn bench_conjugate(c: &mut Criterion) {
    let mut g = c.benchmark_group("conjugate");
    g.sample_size(10);
    let a = generate_dense(MatrixKind::SignSymmetric, 512, 1).unwrap();
    let rot = HadamardRotation::random(512, &mut rng_from_seed(2));
    for (name, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new(name, 512), |b| {
            b.iter(|| conjugate(&a, &rot).unwrap())
        });
    }
    par::set_sequential(false);
    g.finish();
}

fn bench_sampled_matrix(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_sampled_matrix");
    let a = generate(MatrixKind::PlantedRankK { k: 4 }, 100_000, 3).unwrap();
    let draw = draw_uniform(a.n(), 600, &mut rng_from_seed(4));
    for (name, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new(name, draw.len()), |b| {
            b.iter(|| build_sampled_matrix(&a, &draw).unwrap())
        });
    }
    par::set_sequential(false);
    g.finish();
}

fn bench_trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("uniform_trials");
    g.sample_size(10);
    let cfg = ExperimentConfig::parse("kind=planted_rank_k\nn=100000\ntrials=32\n").unwrap();
    let a = cfg.load_matrix().unwrap();
    for (name, seq) in MODES {
        par::set_sequential(seq);
        g.bench_function(BenchmarkId::new(name, cfg.trials), |b| {
            b.iter(|| run_experiment_on(&cfg, &a).unwrap())
        });
    }
    par::set_sequential(false);
    g.finish();
}

criterion_group!(benches, bench_conjugate, bench_sampled_matrix, bench_trials);
criterion_main!(benches);
