use apar_core::harness::bench_program;
use apar_core::net::{decode_frames, encode_frame, Message};
use apar_core::{compile, Matrix, TaskId, Value};
use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

fn compile_graph(c: &mut Criterion) {
    let src = bench_program(64, 8);
    c.bench_function("compile 64-task program", |b| b.iter(|| compile(black_box(&src), "main").unwrap()));
}

fn local_run(c: &mut Criterion) {
    let mut group = c.benchmark_group("local run, 16 tasks of 32x32");
    let compiled = compile(&bench_program(16, 32), "main").unwrap();
    for workers in [1usize, 2, 4] {
        group.bench_with_input(BenchmarkId::from_parameter(workers), &workers, |b, &w| {
            b.iter(|| compiled.run_local(w).unwrap())
        });
    }
    group.finish();
}

fn codec(c: &mut Criterion) {
    let msg =
        Message::Result { task_id: TaskId(3), value: Value::Matrix(Matrix::identity(128)), printed: String::new() };
    let frame = encode_frame(&msg).unwrap();
    c.bench_function("encode 128x128 result", |b| b.iter(|| encode_frame(black_box(&msg)).unwrap()));
    c.bench_function("decode 128x128 result", |b| b.iter(|| decode_frames(black_box(&frame)).unwrap()));
}

criterion_group!(benches, compile_graph, local_run, codec);
criterion_main!(benches);
