use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nsbandit::env::{draw_reward, NoiseModel};
use nsbandit::estimators::{DiscountedStats, SaturatedStats, WindowStats, WindowedSaturatedStats};
use nsbandit::harness::{verify_sw_bound, BoundGrid};
use nsbandit::sim_rng;

const N: usize = 10_000;

fn heavy_rewards() -> Vec<(usize, f64)> {
    let noise = NoiseModel::TwoSidedPareto { shape: 0.4, scale: 0.23 };
    let mut rng = sim_rng(1, 0);
    (0..N).map(|i| (i % 3, draw_reward(noise, 0.1, &mut rng))).collect()
}

fn estimators(c: &mut Criterion) {
    let xs = heavy_rewards();
    c.bench_function("window_push_10k", |b| {
        b.iter(|| {
            let mut w = WindowStats::new(3, 203).unwrap();
            for &(k, x) in &xs {
                w.push(k, x).unwrap();
            }
            black_box(w.mean(0))
        })
    });
    c.bench_function("discounted_step_10k", |b| {
        b.iter(|| {
            let mut d = DiscountedStats::new(3, 0.995).unwrap();
            for &(k, x) in &xs {
                d.step(k, x);
            }
            black_box(d.mean(0))
        })
    });
    c.bench_function("saturated_push_10k", |b| {
        b.iter(|| {
            let mut s = SaturatedStats::new(3, 1.1, N as f64).unwrap();
            for &(k, x) in &xs {
                s.push(k, x).unwrap();
            }
            black_box(s.mean(0))
        })
    });
    c.bench_function("windowed_saturated_push_10k", |b| {
        b.iter(|| {
            let mut s = WindowedSaturatedStats::new(3, 203, 1.1, 203.0).unwrap();
            for &(k, x) in &xs {
                s.push(k, x).unwrap();
            }
            black_box(s.mean(0))
        })
    });
}

fn bound_check(c: &mut Criterion) {
    let grid = BoundGrid {
        trials: 2000,
        ..BoundGrid::default()
    };
    let mut group = c.benchmark_group("bounds");
    group.sample_size(10);
    group.bench_function("sw_2000_trials", |b| b.iter(|| black_box(verify_sw_bound(1.0, 3, 203, &grid).unwrap())));
    group.finish();
}

criterion_group!(benches, estimators, bound_check);
criterion_main!(benches);
