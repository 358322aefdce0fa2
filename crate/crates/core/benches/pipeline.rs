use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use foulscan::fit::collect_components_with;
use foulscan::synthetic::{planted_dataset, throughput_pool, PlantedConfig};
use foulscan::{fit_bank_with, Execution, FitConfig, ReportBuilder, ReportConfig};
use std::hint::black_box;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn frame_scoring(c: &mut Criterion) {
    let (pool, hull, fouling) = throughput_pool(7, 64, 768, (16, 16), 5);
    let mut group = c.benchmark_group("frame_scoring");
    group.sample_size(10);
    group.throughput(Throughput::Elements(pool.len() as u64));
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, pool.len()), &pool, |b, pool| {
            b.iter(|| {
                let mut builder = ReportBuilder::new(&hull, &fouling, ReportConfig::default(), exec).unwrap();
                builder.push_batch(pool).unwrap();
                black_box(builder.finish(Some(10.0), 1).unwrap())
            })
        });
    }
    group.finish();
}

fn component_collection(c: &mut Criterion) {
    let ds = planted_dataset(&PlantedConfig::default());
    let mut group = c.benchmark_group("component_collection");
    group.throughput(Throughput::Elements(ds.set.len() as u64));
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| black_box(collect_components_with(&ds.set, 5, 50, exec).unwrap())));
    }
    group.finish();
}

fn bank_fitting(c: &mut Criterion) {
    let ds = planted_dataset(&PlantedConfig {
        positive_frames: 60,
        negative_frames: 60,
        ..Default::default()
    });
    let cfg = FitConfig {
        seeds: (0..4).collect(),
        ..FitConfig::default()
    };
    let mut group = c.benchmark_group("bank_fitting");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| black_box(fit_bank_with(&ds.set, &cfg, exec).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, frame_scoring, component_collection, bank_fitting);
criterion_main!(benches);
