use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qcyamabe::extremal::ubar_field;
use qcyamabe::quadrature::{integrate_biradial_with, integrate_mc, BiRadialIntegrand, McConfig, QuadConfig};
use qcyamabe::Exec;

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Auto), ("sequential", Exec::Sequential)];

fn monte_carlo(c: &mut Criterion) {
    let u = ubar_field();
    let mut group = c.benchmark_group("monte_carlo_ubar_power");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = McConfig {
            samples: 200_000,
            exec,
            ..McConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| integrate_mc(|p| Ok(u.value(p)?.powf(2.5)), cfg).unwrap().value)
        });
    }
    group.finish();
}

fn cubature(c: &mut Criterion) {
    let f = BiRadialIntegrand::new(20.0, 10.0, |r, rho| ((1.0 + r * r).powi(2) + rho * rho).powi(-5));
    let mut group = c.benchmark_group("biradial_cubature");
    for (name, exec) in MODES {
        let cfg = QuadConfig {
            tol: 1e-13,
            exec,
            ..QuadConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &cfg, |b, cfg| {
            b.iter(|| integrate_biradial_with(&f, cfg).unwrap().value)
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, cubature);
criterion_main!(benches);
