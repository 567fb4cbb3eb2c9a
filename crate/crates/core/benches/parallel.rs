use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use kobayashi_bounds::harness::{run_experiment, ExperimentConfig};
use kobayashi_bounds::par::{worker_count, Execution};
use kobayashi_bounds::shell::{log_grid, shell_scan, ScanParams};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn experiment(c: &mut Criterion) {
    let mut g = c.benchmark_group(format!("experiment/{}-workers", worker_count()));
    g.sample_size(10);
    for domain in ["ball:r=1", "ellipsoid:a=1,4"] {
        let cfg = ExperimentConfig {
            domain: domain.into(),
            samples: 500,
            stability: false,
            ..Default::default()
        };
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, domain), &cfg, |b, cfg| {
                b.iter(|| run_experiment(cfg, exec).unwrap())
            });
        }
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let mut g = c.benchmark_group(format!("shell-scan/{}-workers", worker_count()));
    g.sample_size(10);
    let p = ScanParams {
        eps: log_grid(1e-5, 1e-2, 4),
        eta: log_grid(1e-4, 1e-1, 4),
        beta: vec![0.0, 1e-2],
        perturbations: 4,
        ..Default::default()
    };
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| shell_scan(&p, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, experiment, scan);
criterion_main!(benches);
