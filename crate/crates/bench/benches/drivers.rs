//! Micro-benchmarks: E-step, M-step and full variant runs on small
//! instances of each model.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dhem_core::gmm::GmmModel;
use dhem_core::weibull::{aarset, WeibullModel};
use dhem_core::zip::{ZipModel, ZipParams};
use dhem_core::{annealed_posterior, run_variant, MixtureModel, ScheduleConfig, Variant};

fn zip_fixture(n: usize) -> ZipModel {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data: Vec<u64> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < 0.99 {
                0
            } else {
                rng.gen_range(1u64..5)
            }
        })
        .collect();
    ZipModel::new(&data, 0.5)
}

fn gmm_fixture(n: usize) -> GmmModel {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let data: Vec<DVector<f64>> = (0..n)
        .map(|i| {
            let c = (i % 3) as f64 * 2.5;
            DVector::from_fn(3, |_, _| rng.gen::<f64>() * 1.5 + c)
        })
        .collect();
    GmmModel::new(data, 3, 0.5)
}

fn bench_esteps(c: &mut Criterion) {
    let zip = zip_fixture(10_000);
    let zp = ZipParams { pi: 0.8, lambda: 0.7 };
    c.bench_function("zip_estep_n10000", |b| {
        b.iter(|| annealed_posterior(&zip, black_box(&zp), 0.7).unwrap())
    });

    let gmm = gmm_fixture(100);
    let gp = dhem_core::gmm::random_init(&gmm, &mut ChaCha8Rng::seed_from_u64(3), 100).unwrap();
    c.bench_function("gmm_estep_n100_k3", |b| {
        b.iter(|| annealed_posterior(&gmm, black_box(&gp), 0.7).unwrap())
    });

    let weib = WeibullModel::new(&aarset());
    let wp = weib.paper_init([0.5, 1.0, 2.0]);
    c.bench_function("weibull_estep_aarset", |b| {
        b.iter(|| annealed_posterior(&weib, black_box(&wp), 0.7).unwrap())
    });
}

fn bench_msteps(c: &mut Criterion) {
    let zip = zip_fixture(10_000);
    let zp = ZipParams { pi: 0.8, lambda: 0.7 };
    let resp = annealed_posterior(&zip, &zp, 1.0).unwrap();
    let grid = [1.0, 0.5, 0.25, 0.125, 0.0625];
    c.bench_function("zip_mstep_barrier", |b| {
        b.iter(|| zip.m_step(black_box(&zp), &resp, Some(0.5), &grid).unwrap())
    });

    let weib = WeibullModel::new(&aarset());
    let wp = weib.paper_init([0.5, 1.0, 2.0]);
    let wresp = annealed_posterior(&weib, &wp, 1.0).unwrap();
    c.bench_function("weibull_mstep_barrier", |b| {
        b.iter(|| weib.m_step(black_box(&wp), &wresp, Some(0.5), &grid).unwrap())
    });
}

fn bench_runs(c: &mut Criterion) {
    let zip = zip_fixture(2_000);
    let init = ZipParams { pi: 0.7, lambda: 1.0 };
    let mut config = ScheduleConfig::default();
    config.max_iter = 500;
    c.bench_function("zip_adaptive_run_n2000", |b| {
        b.iter(|| run_variant(&zip, Variant::AdaptiveDhem, black_box(init), &config).unwrap())
    });

    let weib = WeibullModel::new(&aarset());
    let wp = weib.paper_init([0.5, 1.0, 2.0]);
    c.bench_function("weibull_em_run_aarset", |b| {
        b.iter(|| run_variant(&weib, Variant::Em, black_box(wp.clone()), &config).unwrap())
    });
}

criterion_group!(benches, bench_esteps, bench_msteps, bench_runs);
criterion_main!(benches);
