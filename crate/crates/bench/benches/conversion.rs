use asar_core::rng::{stream, Purpose};
use asar_core::*;
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

fn conversion(c: &mut Criterion) {
    let cfg = AdcConfig::reference_defaults();
    let adc = Adc::new(&cfg, 1).unwrap();
    let vcm = cfg.comparator.v_cm;

    c.bench_function("convert_one_sample", |b| {
        b.iter_batched(
            || (stream(1, 0, Purpose::TrackHold), stream(1, 0, Purpose::Conversion)),
            |(mut th, mut rng)| adc.convert(black_box(vcm + 0.12), black_box(vcm - 0.12), (vcm, vcm), &mut th, &mut rng),
            BatchSize::SmallInput,
        )
    });

    let tone = gen_coherent_tone(4096, 101, 0.75, vcm, cfg.f_s).unwrap();
    c.bench_function("convert_waveform_4096", |b| {
        b.iter(|| adc.convert_waveform(black_box(&tone.v_p), black_box(&tone.v_n), 1))
    });

    let codes = adc.convert_waveform(&tone.v_p, &tone.v_n, 1).codes;
    c.bench_function("spectrum_metrics_4096", |b| {
        b.iter(|| {
            let s = spectrum(black_box(&codes), cfg.bits).unwrap();
            metrics(&s, 101, 860e-6, cfg.f_s)
        })
    });

    let mut g = c.benchmark_group("metastability");
    g.sample_size(10);
    g.bench_function("mc_1e6", |b| b.iter(|| metastability_mc(&cfg, 1_000_000, 1e-3, 1).unwrap()));
    g.finish();
}

criterion_group!(benches, conversion);
criterion_main!(benches);
