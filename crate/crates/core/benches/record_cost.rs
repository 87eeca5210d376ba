//! Per-record cost of every sampler. Each algorithm is measured at two
//! stream lengths; flat per-element throughput across lengths is the
//! amortized-constant evidence, and criterion baselines catch
//! regressions (`cargo bench -- --save-baseline main`, later runs
//! compare against it).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use driftbench_core::generator::generate_stream;
use driftbench_core::samplers::SamplerSpec;
use driftbench_core::stream::{DistSpec, DriftSpec, StreamMetadata};

fn zipf_keys(n: u64) -> Vec<driftbench_core::Key> {
    let zipf = DistSpec::Zipf {
        exponent: 1.0,
        perm_seed: None,
    };
    let md = StreamMetadata::new(n, 10_000, 1, vec![DriftSpec::abrupt(1, zipf.clone(), zipf)]);
    generate_stream(md).unwrap().keys
}

fn specs() -> Vec<SamplerSpec> {
    let lossy = SamplerSpec::LossyCounting { epsilon: 1e-4 };
    vec![
        SamplerSpec::ExactCounting,
        lossy.clone(),
        SamplerSpec::SpaceSaving { capacity: 256 },
        SamplerSpec::StickySampling {
            support: 0.001,
            error: 0.0005,
            failure: 0.01,
        },
        SamplerSpec::Frequent {
            basic_window: 30_000,
            windows: 2,
            k: 600,
        },
        SamplerSpec::Landmark {
            inner: Box::new(lossy.clone()),
            window: 40_000,
        },
        SamplerSpec::TemporalSmoothed {
            inner: Box::new(lossy.clone()),
            threshold: 40_000,
            switch_threshold: 40_000,
        },
        SamplerSpec::CheckpointSmoothed {
            inner: Box::new(lossy),
            checkpoint_window: 40_000,
            check_threshold: 40_000,
            error_threshold: 0.2,
        },
    ]
}

fn bench_record(c: &mut Criterion) {
    let mut group = c.benchmark_group("record");
    group.sample_size(10);
    for n in [200_000u64, 1_000_000] {
        let keys = zipf_keys(n);
        group.throughput(Throughput::Elements(n));
        for spec in specs() {
            group.bench_with_input(BenchmarkId::new(spec.to_string(), n), &keys, |b, keys| {
                b.iter(|| {
                    let mut sampler = spec.build(7, None).unwrap();
                    for &key in keys {
                        sampler.record(key);
                    }
                    sampler.counter_count()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_record);
criterion_main!(benches);
