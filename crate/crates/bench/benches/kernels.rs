use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use refchoice_core::cml::{Cml, PairingPolicy};
use refchoice_core::gaussian::bvn_cdf;
use refchoice_core::modelspec::preset_params;
use refchoice_core::simulate::{simulate_dataset, SimConfig};
use refchoice_core::Model;
use std::hint::black_box;

fn phi2(c: &mut Criterion) {
    let mut g = c.benchmark_group("bvn_cdf");
    for rho in [0.3, 0.9, 0.999] {
        g.bench_with_input(BenchmarkId::from_parameter(rho), &rho, |b, &rho| {
            b.iter(|| bvn_cdf(black_box(-0.4), black_box(1.1), rho).unwrap())
        });
    }
    g.finish();
}

fn cml(c: &mut Criterion) {
    let mut g = c.benchmark_group("cml");
    g.sample_size(10);
    for name in ["model1", "model3"] {
        let model = Model::preset(name).unwrap();
        let truth = preset_params(name).unwrap();
        let cfg = SimConfig { n_respondents: 500, seed: 3, ..SimConfig::default() };
        let data = simulate_dataset(&model, &truth, &cfg).unwrap();
        let cml = Cml::new(&model, &data, PairingPolicy::Standard).unwrap();
        let x = model.pack(&model.dense(&truth).unwrap()).unwrap();
        g.bench_function(BenchmarkId::new("value", name), |b| b.iter(|| cml.value_at(black_box(&x)).unwrap()));
        g.bench_function(BenchmarkId::new("value_and_gradient", name), |b| {
            b.iter(|| cml.value_and_gradient_at(black_box(&x)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, phi2, cml);
criterion_main!(benches);
