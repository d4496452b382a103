use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use snakeweaver::marginals::check_markov_conditions;
use snakeweaver::oracles::random::{random_density, rng};
use snakeweaver::{right_merge, Region, Vertex};
use snakeweaver_bench::row_markov;

fn region(cells: &[(i64, i64)]) -> Region {
    cells.iter().map(|&(x, y)| Vertex::new(x, y)).collect()
}

fn entropy(c: &mut Criterion) {
    let mut group = c.benchmark_group("entropy");
    for n in [4usize, 6, 8, 10] {
        let cells: Vec<(i64, i64)> = (0..n as i64).map(|x| (x, 0)).collect();
        let rho = random_density(region(&cells), 2, None, &mut rng(n as u64)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &rho, |b, rho| {
            b.iter(|| {
                let fresh = snakeweaver::DensityOperator::new(rho.region().clone(), 2, rho.matrix().clone()).unwrap();
                black_box(fresh.entropy())
            })
        });
    }
    group.finish();
}

fn merge(c: &mut Criterion) {
    let mut r = rng(7);
    let sigma = random_density(region(&[(0, 0), (1, 0), (2, 0)]), 2, None, &mut r).unwrap();
    let rho = random_density(region(&[(1, 0), (2, 0), (3, 0), (4, 0)]), 2, None, &mut r).unwrap();
    c.bench_function("right_merge 3+4 sites", |b| b.iter(|| right_merge(black_box(&sigma), black_box(&rho)).unwrap()));
}

fn markov(c: &mut Criterion) {
    let ms = row_markov(4, 4, 1);
    c.bench_function("check_markov_conditions 4x4", |b| b.iter(|| check_markov_conditions(black_box(&ms), 1e-8)));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = entropy, merge, markov
}
criterion_main!(benches);
