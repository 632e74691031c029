//! Sequential against data-parallel Monte Carlo on the same draws.
//!
//! Both paths produce identical results; only the wall time differs.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use gibbs_core::gibbs::{extract_remainder, GibbsModel, Method, SnSampler};
use gibbs_core::parallel::{self, Execution};
use gibbs_core::species::builtin;

const DRAWS: usize = 4096;

fn remainders(c: &mut Criterion) {
    let model = GibbsModel::new(&builtin::forests(), 200).unwrap();
    let mut group = c.benchmark_group("remainder_draws");
    group.sample_size(10);
    group.throughput(Throughput::Elements(DRAWS as u64));
    for n in [20, 80] {
        let sampler = SnSampler::new(&model, n, Method::ExactRecursive).unwrap();
        let draw = |exec| {
            parallel::run(exec, 7, DRAWS, |_, rng| {
                let s = sampler.sample(rng)?;
                Ok(extract_remainder(&model, &s, rng)?.remainder_size)
            })
            .unwrap()
        };
        assert_eq!(draw(Execution::Sequential), draw(Execution::Parallel(None)));
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| b.iter(|| draw(Execution::Sequential)));
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| b.iter(|| draw(Execution::Parallel(None))));
    }
    group.finish();
}

criterion_group!(benches, remainders);
criterion_main!(benches);
