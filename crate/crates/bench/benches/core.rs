use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use germlab_core::germ::{build_oracle, load_germ, sample_shell};
use germlab_core::metric::lne_scan;
use germlab_core::metric::lne::log_spaced_radii;
use germlab_core::metric::EpsPolicy;
use germlab_core::seatangle::{mc_volume, STParams};
use germlab_core::topology::link_betti;
use germlab_core::transport::{example_map, mcshane_extend};

fn bench_mc_volume(c: &mut Criterion) {
    let mut group = c.benchmark_group("mc_volume");
    group.sample_size(10);
    for name in ["line", "plane", "log_cone"] {
        let germ = load_germ(name).unwrap();
        let st = STParams::new(1.5, 1.0);
        group.bench_function(name, |b| {
            b.iter(|| mc_volume(black_box(&germ), &st, 0.05, 20_000, 9).unwrap())
        });
    }
    group.finish();
}

fn bench_oracle(c: &mut Criterion) {
    let germ = load_germ("parabola_pair").unwrap();
    let oracle = build_oracle(&germ, 1e-3, 1e-1, 4, 800, 21).unwrap();
    let queries: Vec<Vec<f64>> = (0..1000)
        .map(|i| {
            let t = i as f64 / 999.0;
            vec![0.002 + 0.09 * t, 0.03 * (17.0 * t).sin()]
        })
        .collect();
    c.bench_function("oracle_distance_1k", |b| {
        b.iter(|| {
            for q in &queries {
                let _ = black_box(oracle.distance(q));
            }
        })
    });
}

fn bench_link_betti(c: &mut Criterion) {
    let germ = load_germ("circle_cone").unwrap();
    c.bench_function("link_betti_circle_cone", |b| {
        b.iter(|| link_betti(black_box(&germ), 0.1, 300, 13).unwrap())
    });
}

fn bench_lne_scan(c: &mut Criterion) {
    let germ = load_germ("line").unwrap();
    let radii = log_spaced_radii(1e-3, 0.5, 5);
    let mut group = c.benchmark_group("lne_scan");
    group.sample_size(10);
    group.bench_function("line", |b| {
        b.iter(|| lne_scan(black_box(&germ), &radii, 12, EpsPolicy::default(), 42).unwrap())
    });
    group.finish();
}

fn bench_sample_shell(c: &mut Criterion) {
    let germ = load_germ("log_cone").unwrap();
    c.bench_function("sample_shell_log_cone_400", |b| {
        b.iter(|| sample_shell(black_box(&germ), 0.05, 400, 0.1, 7).unwrap())
    });
}

fn bench_mcshane(c: &mut Criterion) {
    let base: Vec<Vec<f64>> = (0..2000)
        .map(|k| vec![-0.15 + 0.3 * k as f64 / 1999.0])
        .collect();
    let values: Vec<f64> = base.iter().map(|x| example_map(x[0])).collect();
    let ext = mcshane_extend(&base, &values, 0.9, None).unwrap();
    c.bench_function("mcshane_eval_2000pt_base", |b| {
        b.iter_batched(
            || vec![0.042, -0.013],
            |p| black_box(ext.eval(&p)),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    bench_mc_volume,
    bench_oracle,
    bench_link_betti,
    bench_lne_scan,
    bench_sample_shell,
    bench_mcshane
);
criterion_main!(benches);
