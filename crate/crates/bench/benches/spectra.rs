use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use lpspec::homogenize::verify_step_homogeneity;
use lpspec::ids::density_table;
use lpspec::{band_spectrum, construct, ConstructionOptions, PeriodicJacobi, PeriodicSequence};

fn operator(p: usize) -> PeriodicJacobi {
    // deterministic, well separated potential
    let b = (0..p).map(|n| (0.7 * n as f64).sin() + 0.1 * n as f64 / p as f64).collect();
    PeriodicJacobi::schrodinger(b).unwrap()
}

fn spectra(c: &mut Criterion) {
    let mut g = c.benchmark_group("band_spectrum");
    for p in [4, 16, 64] {
        let j = operator(p);
        g.bench_with_input(BenchmarkId::from_parameter(p), &j, |bch, j| {
            bch.iter(|| band_spectrum(black_box(j)).unwrap())
        });
    }
    g.finish();

    let j = operator(64);
    c.bench_function("discriminant/p64", |bch| {
        bch.iter(|| j.discriminant(black_box(0.3)))
    });

    c.bench_function("density_table/p16x50", |bch| {
        let j = operator(16);
        bch.iter(|| density_table(black_box(&j), 50).unwrap())
    });
}

fn construction(c: &mut Criterion) {
    let b0 = PeriodicSequence::new(vec![0.0]).unwrap();
    let a = PeriodicSequence::constant(1.0, 1).unwrap();
    let opts = ConstructionOptions::default();
    c.bench_function("construct/two_steps", |bch| {
        bch.iter(|| construct(&b0, &a, 0.5, 0.5, &[2, 2], 2, &opts).unwrap())
    });
    let run = construct(&b0, &a, 0.5, 0.5, &[2, 2], 2, &opts).unwrap();
    c.bench_function("homogeneity/step2", |bch| {
        bch.iter(|| verify_step_homogeneity(&run, 2, 32, 500).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = spectra, construction
}
criterion_main!(benches);
