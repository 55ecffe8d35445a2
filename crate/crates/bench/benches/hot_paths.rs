use criterion::{black_box, criterion_group, criterion_main, Criterion};

use erw_core::backward::exact_kernel_row;
use erw_core::walk::walk_final_position;
use erw_core::{derive_seed, CookieEnvironment, TrialField};

fn bench_trial_field(c: &mut Criterion) {
    let env = CookieEnvironment::parse("0.9,0.8").unwrap();
    let field = TrialField::new(&env, 1).unwrap();

    c.bench_function("random_access_trial", |b| {
        let mut j = 1u64;
        b.iter(|| {
            j = j % 200 + 1;
            black_box(field.trial(black_box(17), j))
        })
    });

    c.bench_function("site_scan_1k_trials", |b| {
        b.iter(|| {
            let mut scan = field.site_scan(black_box(5));
            let mut acc = 0u32;
            for _ in 0..1000 {
                acc += scan.next_trial() as u32;
            }
            black_box(acc)
        })
    });

    c.bench_function("count_successes_k256", |b| {
        b.iter(|| {
            field
                .site_scan(black_box(9))
                .successes_before_kth_failure(black_box(256))
                .unwrap()
        })
    });
}

fn bench_walk(c: &mut Criterion) {
    let env = CookieEnvironment::parse("0.5").unwrap();
    c.bench_function("walk_10k_steps", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            let mut field = TrialField::new(&env, derive_seed(3, seed)).unwrap();
            black_box(walk_final_position(&mut field, 10_000))
        })
    });
}

fn bench_kernel(c: &mut Criterion) {
    let env = CookieEnvironment::parse("0.7,0.8,0.9").unwrap();
    c.bench_function("exact_kernel_row_k50", |b| {
        b.iter(|| black_box(exact_kernel_row(&env, black_box(50), 120)))
    });
}

criterion_group!(benches, bench_trial_field, bench_walk, bench_kernel);
criterion_main!(benches);
