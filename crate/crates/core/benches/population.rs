use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lawbreaker_core::corpus::corpus_entry;
use lawbreaker_core::fuzz::random_genome;
use lawbreaker_core::sim::{driver_by_name, SimConfig, Simulator};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn population(c: &mut Criterion) {
    let e = corpus_entry("law38").unwrap().unwrap();
    let sim = Simulator::new(&SimConfig::default()).unwrap();
    let driver = driver_by_name("aggressive").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let jobs: Vec<_> = (0..20).map(|_| (random_genome(&e.template, &mut rng), rng.next_u64())).collect();

    let mut group = c.benchmark_group("population_of_20");
    group.sample_size(20);
    for (name, parallel) in [("sequential", false), ("parallel", true)] {
        group.bench_with_input(BenchmarkId::from_parameter(name), &parallel, |b, &parallel| {
            b.iter(|| black_box(sim.run_batch(&jobs, driver.as_ref(), parallel)))
        });
    }
    group.finish();
}

criterion_group!(benches, population);
criterion_main!(benches);
