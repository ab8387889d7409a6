use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use rigidmd::parallel::pair_count;
use rigidmd::potentials::{Electrostatics, ForceField};
use rigidmd_bench::{dumbbells, lj_fluid};

fn lj_forces(c: &mut Criterion) {
    let mut group = c.benchmark_group("lj_forces");
    group.sample_size(10);
    for n in [256usize, 2048] {
        let (comp, state) = lj_fluid(n, 0.8);
        let ff = ForceField::new(&comp, 3.0, Electrostatics::Cutoff).unwrap();
        group.throughput(Throughput::Elements(pair_count(n) as u64));
        for workers in [1usize, 2, 4] {
            let mut s = state.clone();
            group.bench_with_input(BenchmarkId::new(format!("n{n}"), workers), &workers, |b, &w| {
                b.iter(|| ff.evaluate(&comp, &mut s, w).unwrap())
            });
        }
    }
    group.finish();
}

fn reaction_field(c: &mut Criterion) {
    let (comp, state) = dumbbells(500, 0.3);
    let ff = ForceField::new(&comp, 4.0, Electrostatics::ReactionField { epsilon_rf: 1e10 }).unwrap();
    let mut s = state;
    c.bench_function("dumbbell_reaction_field_n500", |b| b.iter(|| ff.evaluate(&comp, &mut s, 1).unwrap()));
}

criterion_group!(benches, lj_forces, reaction_field);
criterion_main!(benches);
