//! Compares the rayon-backed sweeps against the sequential fallback on the
//! same inputs. Built with default features this benches both modes in one
//! run (the sequential mode is forced through the config); built with
//! `--no-default-features` only the sequential path exists.

use criterion::{criterion_group, criterion_main, Criterion};

use fairalloc::instances::{preset, random_instance, Flavor};
use fairalloc::model::Instance;
use fairalloc::oracle::{exists_complete, OracleConfig};
use fairalloc::{mms, Notion, OracleConfig as Cfg};

fn widened_obs1(m: usize) -> Instance {
    // same structure as the no-instance preset, more resources: the EF1-init
    // search scans all 2^m assignments without finding a witness
    Instance::new(vec![1, 10], vec![vec![3; m], vec![10; m]]).unwrap()
}

fn cfg(sequential: bool) -> Cfg {
    OracleConfig {
        max_assignments: 1 << 40,
        force_sequential: sequential,
    }
}

fn bench_oracle_exists(c: &mut Criterion) {
    let inst = widened_obs1(18);
    let mut group = c.benchmark_group("oracle_exists_full_scan");
    group.bench_function("sequential", |b| {
        b.iter(|| {
            let hit = exists_complete(&inst, Notion::Ef1Init, &cfg(true)).unwrap();
            assert!(hit.is_none());
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| {
            let hit = exists_complete(&inst, Notion::Ef1Init, &cfg(false)).unwrap();
            assert!(hit.is_none());
        })
    });
    group.finish();
}

fn bench_mms_exhaustive(c: &mut Criterion) {
    let inst = random_instance(7, 3, 10, 9, 20, Flavor::General).unwrap();
    let mut group = c.benchmark_group("mms_exhaustive");
    group.bench_function("sequential", |b| {
        b.iter(|| mms::compute_mms_exhaustive(&inst, 0, &cfg(true)).unwrap())
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| mms::compute_mms_exhaustive(&inst, 0, &cfg(false)).unwrap())
    });
    group.finish();
}

fn bench_identical_dp(c: &mut Criterion) {
    let inst = random_instance(3, 20, 50, 9, 40, Flavor::Identical).unwrap();
    c.bench_function("decide_ef_init_identical_n20_m50", |b| {
        b.iter(|| fairalloc::dp_identical::decide_ef_init_identical(&inst).unwrap())
    });
}

fn bench_round_robin(c: &mut Criterion) {
    let inst = preset("ex1").unwrap();
    c.bench_function("round_robin_ex1", |b| {
        b.iter(|| fairalloc::round_robin::run_round_robin(&inst).unwrap())
    });
}

criterion_group!(
    benches,
    bench_oracle_exists,
    bench_mms_exhaustive,
    bench_identical_dp,
    bench_round_robin
);
criterion_main!(benches);
