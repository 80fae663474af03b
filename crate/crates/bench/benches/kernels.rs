use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use masklab_bench::reference_masks;
use masklab_core::montecarlo::{estimate, EchoScenario};
use masklab_core::response::build_grid;
use masklab_core::{spectra, Constellation, ScenarioParams, SpectralSummary};
use std::hint::black_box;

fn autocorrelation(c: &mut Criterion) {
    let mut group = c.benchmark_group("autocorr");
    for (name, mask) in reference_masks() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mask, |b, m| {
            b.iter(|| spectra::autocorr(black_box(m)))
        });
    }
    group.finish();
}

fn summary(c: &mut Criterion) {
    let mut group = c.benchmark_group("spectral_summary");
    for (name, mask) in reference_masks() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mask, |b, m| {
            b.iter(|| SpectralSummary::new(black_box(m)))
        });
    }
    group.finish();
}

fn diagonal_grid(c: &mut Criterion) {
    let (_, mask) = reference_masks().remove(0);
    let p = ScenarioParams::new(mask, 50, 1.32).unwrap();
    let nu: Vec<usize> = (0..p.cpi_len()).collect();
    c.bench_function("build_grid/k=20,all_l,all_nu", |b| {
        let l: Vec<usize> = (1..63).collect();
        b.iter(|| build_grid(&p, &[20], black_box(&l), &nu).unwrap())
    });
}

fn monte_carlo(c: &mut Criterion) {
    let (_, mask) = reference_masks().remove(0);
    let scenario = EchoScenario::new(mask, 8, Constellation::qam16(), 20, 0, 3).unwrap();
    let mut group = c.benchmark_group("mc_estimate");
    group.sample_size(10);
    group.bench_function("singer6_M8_1000_trials", |b| b.iter(|| estimate(&scenario, 20, 1000, black_box(1)).unwrap()));
    group.finish();
}

criterion_group!(benches, autocorrelation, summary, diagonal_grid, monte_carlo);
criterion_main!(benches);
