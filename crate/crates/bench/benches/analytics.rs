use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use orbitcox_bench::{narrow_band, wide_band};
use orbitcox_core::analytics::{interference_laplace, nearest_distance_ccdf, outage_probability};
use orbitcox_core::{ChannelModel, EarthFrame, FadingLaw, QuadratureSpec};

fn ccdf(c: &mut Criterion) {
    let frame = EarthFrame::default();
    let quad = QuadratureSpec::default();
    let params = narrow_band();
    let mut g = c.benchmark_group("nearest_distance_ccdf");
    for d in [700.0, 1000.0, 1500.0] {
        g.bench_function(format!("d{d}"), |b| {
            b.iter(|| nearest_distance_ccdf(&params, &frame, black_box(d), &quad).unwrap())
        });
    }
    g.finish();
}

fn outage(c: &mut Criterion) {
    let frame = EarthFrame::default();
    let quad = QuadratureSpec::default();
    let params = wide_band();
    c.bench_function("outage_probability", |b| {
        b.iter(|| outage_probability(black_box(&params), &frame, &quad).unwrap())
    });
}

fn interference(c: &mut Criterion) {
    let frame = EarthFrame::default();
    let quad = QuadratureSpec::default();
    let params = narrow_band();
    let mut g = c.benchmark_group("interference_laplace");
    g.sample_size(20);
    for (name, fading) in [
        ("rayleigh", FadingLaw::Rayleigh { mean: 1.0 }),
        ("nakagami3", FadingLaw::default()),
    ] {
        let channel = ChannelModel {
            fading,
            ..ChannelModel::default()
        };
        g.bench_function(name, |b| {
            b.iter(|| interference_laplace(&params, &channel, &frame, black_box(1e4), &quad).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, ccdf, outage, interference);
criterion_main!(benches);
