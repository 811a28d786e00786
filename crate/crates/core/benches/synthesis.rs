use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spatial_captcha::evalkit::{random_baseline, Truths};
use spatial_captcha::manifest::shipped_manifests;
use spatial_captcha::par::Execution;
use spatial_captcha::pipeline::{synthesize_batch, BatchEntry, BatchOptions};

fn entries(count: usize) -> Vec<BatchEntry> {
    shipped_manifests()
        .into_iter()
        .map(|manifest| BatchEntry {
            manifest,
            count,
            mix: None,
        })
        .collect()
}

fn batch(c: &mut Criterion) {
    let mut g = c.benchmark_group("synthesize_batch");
    g.sample_size(10);
    let jobs = entries(8);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        g.bench_with_input(BenchmarkId::new(name, 56), &execution, |b, &execution| {
            let opts = BatchOptions {
                execution,
                created_at: Some(0),
                ..Default::default()
            };
            b.iter(|| synthesize_batch(&jobs, 1, opts).unwrap());
        });
    }
    g.finish();
}

fn baseline(c: &mut Criterion) {
    let data = synthesize_batch(&entries(30), 1, BatchOptions::default()).unwrap();
    let truths = Truths::from_instances(data.artifacts.iter().map(|a| &a.instance));
    let mut g = c.benchmark_group("random_baseline");
    g.sample_size(10);
    for (name, execution) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        g.bench_with_input(BenchmarkId::new(name, 100), &execution, |b, &execution| {
            b.iter(|| random_baseline(&truths, 3, 100, 7, execution).unwrap());
        });
    }
    g.finish();
}

criterion_group!(benches, batch, baseline);
criterion_main!(benches);
