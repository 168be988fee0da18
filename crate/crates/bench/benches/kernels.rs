use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use polylab::constructions::ding_wirth;
use polylab::multiscale::{decompose, per_scale_energy};
use polylab::potential::Potential;
use polylab::stats::{orlicz_norm, SampleSet};
use polylab::{minimize, MinimizeOptions, PotentialField, Span};

fn field_fill(c: &mut Criterion) {
    let f = PotentialField::new(1, 1024).unwrap();
    let mut out = vec![0.0; 4096];
    c.bench_function("fill_column_4096", |b| {
        let mut x = 1;
        b.iter(|| {
            f.fill_column(x, -2048 * 16, 16, &mut out);
            x = x % 1023 + 1;
            black_box(out[17])
        })
    });
    c.bench_function("value_at_point", |b| {
        let mut n = 0i64;
        b.iter(|| {
            n = (n + 7919) % 100_000;
            black_box(f.value_at(5, n - 50_000))
        })
    });
}

fn ground_state(c: &mut Criterion) {
    let mut g = c.benchmark_group("minimize");
    g.sample_size(10);
    for size in [64usize, 128, 256] {
        let f = PotentialField::new(3, size).unwrap();
        let opts = MinimizeOptions::default().with_grid(0.125);
        g.bench_with_input(BenchmarkId::from_parameter(size), &size, |b, &l| {
            b.iter(|| minimize(&f, Span::whole(l), 0.0, 0.0, &opts).unwrap().objective)
        });
    }
    g.finish();
}

fn analysis(c: &mut Criterion) {
    let f = PotentialField::new(4, 1024).unwrap();
    let gs = minimize(&f, Span::whole(1024), 0.0, 0.0, &MinimizeOptions::default().with_grid(0.5)).unwrap();
    c.bench_function("decompose_1024", |b| {
        b.iter(|| per_scale_energy(&decompose(&gs.config).unwrap(), 2.5).unwrap())
    });
    c.bench_function("ding_wirth_1024", |b| b.iter(|| ding_wirth(&f, 1024).unwrap().field_energy));
    let xs = SampleSet::new("bench", (0..10_000).map(|i| ((i * 7919) % 1000) as f64 / 300.0).collect()).unwrap();
    c.bench_function("orlicz_10k", |b| b.iter(|| orlicz_norm(&xs, 2.0).unwrap().nu_hat));
}

criterion_group!(benches, field_fill, ground_state, analysis);
criterion_main!(benches);
