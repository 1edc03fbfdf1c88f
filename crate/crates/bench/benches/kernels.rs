use apar_core::kernels::{gen_matrix, mat_mul};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matMul");
    for n in [32i64, 64, 128] {
        let a = gen_matrix(1, n, n).unwrap();
        let b = gen_matrix(1001, n, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| mat_mul(black_box(&a), black_box(&b)).unwrap())
        });
    }
    group.finish();
}

fn generate(c: &mut Criterion) {
    c.bench_function("genMatrix 128x128", |b| b.iter(|| gen_matrix(black_box(7), 128, 128).unwrap()));
}

criterion_group!(benches, matmul, generate);
criterion_main!(benches);
