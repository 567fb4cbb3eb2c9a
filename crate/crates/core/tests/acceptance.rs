//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line to stderr
//! (bypassing the test harness capture) and then asserts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use kobayashi_bounds::estimators::Estimator;
use kobayashi_bounds::harness::{fit_envelope, run_experiment, setup, ExperimentConfig, PairSampler};
use kobayashi_bounds::metrics::{integrate_metric, MetricKind, MetricModel, PsiSpec};
use kobayashi_bounds::par::{map_indexed, Execution};
use kobayashi_bounds::quantities::{quasi_symmetry_check, second_order_remainder, PairRecord};
use kobayashi_bounds::sampling::{log_uniform, sample_rng, unit_sphere_point};
use kobayashi_bounds::shell::{log_grid, shell_scan, ScanParams, ScanRow};
use kobayashi_bounds::{CxPoint, CxVector, DomainModel, LeviClass};

/// Coarse graph mesh for criterion 1; the fine mesh has four times as many
/// nodes. The library default of 2000 misses the runtime target on one core.
const SANDWICH_MESH: usize = 200;
const RUNTIME_TARGET_S: f64 = 300.0;
const PAIRS: usize = 10_000;
const SPC_DOMAINS: [&str; 3] = ["ball:r=1", "ellipsoid:a=1,4", "perturbed-ball:eps=0.1,k=3"];

fn report(n: usize, pass: bool, detail: &str) {
    let line = format!("{} criterion {n}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn verdict(n: usize, pass: bool, detail: String) {
    report(n, pass, &detail);
    assert!(pass, "criterion {n}: {detail}");
}

fn estimator(domain: &str) -> Estimator {
    let cfg = ExperimentConfig {
        domain: domain.into(),
        ..Default::default()
    };
    setup(&cfg).unwrap()
}

fn sampler(seed: u64, delta_max: f64) -> PairSampler {
    PairSampler {
        delta_min: 1e-4,
        delta_max,
        a_min: 1e-2,
        a_max: 1e2,
        seed,
    }
}

/// `count` sampled pairs with both depths at most `depth`.
fn pairs(est: &Estimator, s: &PairSampler, count: usize, depth: f64) -> Vec<(CxPoint, CxPoint, PairRecord)> {
    let mut out = Vec::with_capacity(count);
    let mut next = 0;
    while out.len() < count {
        let batch = map_indexed(Execution::Auto, count, |i| s.sample(&est.ctx, next + i).ok());
        next += count;
        for p in batch.into_iter().flatten() {
            if p.record.delta_z.max(p.record.delta_w) <= depth && out.len() < count {
                out.push((p.z, p.w, p.record));
            }
        }
        assert!(next <= 20 * count, "sampler yields too few pairs with depth ≤ {depth}");
    }
    out
}

fn point(v: &[f64]) -> CxPoint {
    CxVector::from_real_interleaved(v)
}

#[test]
fn criterion_01_ball_sandwich() {
    let cfg = ExperimentConfig {
        samples: 1000,
        stability: false,
        graph: true,
        mesh_nodes: SANDWICH_MESH,
        ..Default::default()
    };
    let start = Instant::now();
    let rep = run_experiment(&cfg, Execution::Auto).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let complete = rep
        .rows
        .iter()
        .filter(|r| r.exact.is_some() && r.halflog.is_some() && r.graph.is_some())
        .count();
    let worst = rep.envelope("graph_over_exact").map_or(f64::NAN, |e| e.max);
    let low = rep.envelope("halflog_over_exact").map_or(f64::NAN, |e| e.max);
    let pass = rep.violations.is_empty() && complete == 1000 && worst <= 1.1 && secs < RUNTIME_TARGET_S;
    verdict(
        1,
        pass,
        format!(
            "{complete}/1000 pairs, {} sandwich violations, max halflog/exact {low:.4}, max graph/exact {worst:.4} \
             (N = {SANDWICH_MESH}/{}), {secs:.1} s",
            rep.violations.len(),
            4 * SANDWICH_MESH
        ),
    );
}

#[test]
fn criterion_02_ball_theorem_envelope() {
    let cfg = ExperimentConfig {
        samples: PAIRS,
        stability: true,
        ..Default::default()
    };
    let rep = run_experiment(&cfg, Execution::Auto).unwrap();
    let e = rep.envelope("thm_ratio").unwrap();
    let pass = e.is_finite() && e.count == PAIRS && e.spread() < 100.0 && e.stable == Some(true);
    verdict(
        2,
        pass,
        format!(
            "(e^k - 1)/A over {} pairs: min {:.4} max {:.4} (max/min {:.2}), stable under doubling: {:?}",
            e.count,
            e.min,
            e.max,
            e.spread(),
            e.stable
        ),
    );
}

#[test]
fn criterion_03_quasi_symmetry() {
    let mut detail = Vec::new();
    let mut pass = true;
    for domain in ["ball:r=1", "ellipsoid:a=1,4"] {
        let est = estimator(domain);
        let set = pairs(&est, &sampler(3, 1e-2), PAIRS, 1e-2);
        let ratios = map_indexed(Execution::Auto, set.len(), |i| {
            let (z, w, rec) = &set[i];
            let swapped = est.record(w, z).unwrap();
            quasi_symmetry_check(rec, &swapped, &est.ctx.constants)
        });
        let bad = ratios.iter().filter(|s| !s.a_pass).count();
        let max = ratios.iter().map(|s| s.a_ratio).fold(0.0, f64::max);
        pass &= bad == 0 && ratios.iter().all(|s| s.a_threshold == 2.2);
        detail.push(format!("{domain}: {bad} violations, max A(w,z)/A(z,w) {max:.4}"));
    }
    verdict(3, pass, detail.join("; "));
}

#[test]
fn criterion_04_hr_below_h() {
    let mut detail = Vec::new();
    let mut pass = true;
    for domain in ["ball:r=1", "ellipsoid:a=1,4", "perturbed-ball:eps=0.1,k=3", "shell:R=4"] {
        let est = estimator(domain);
        let envelopes = matches!(domain, "ball:r=1" | "shell:R=4");
        let n = if envelopes { 2 * PAIRS } else { PAIRS };
        let set = pairs(&est, &sampler(4, 1e-1), n, f64::INFINITY);
        let bad = set.iter().filter(|(_, _, r)| !(r.h_r <= r.h)).count();
        pass &= bad == 0;
        let mut line = format!("{domain}: {bad}/{n} H^r > H");
        if envelopes {
            for (name, f) in [
                ("F/H^r", (|r: &PairRecord| r.f / r.h_r) as fn(&PairRecord) -> f64),
                ("H^r/F", |r: &PairRecord| r.h_r / r.f),
            ] {
                let mut half = fit_envelope(name, set[..PAIRS].iter().map(|p| f(&p.2))).unwrap();
                let full = fit_envelope(name, set.iter().map(|p| f(&p.2))).unwrap();
                let stable = half.check_refinement(&full);
                pass &= half.is_finite() && full.is_finite() && stable;
                line += &format!(", {name} in [{:.4}, {:.4}] stable {stable}", full.min, full.max);
            }
        }
        detail.push(line);
    }
    verdict(4, pass, detail.join("; "));
}

#[test]
fn criterion_05_second_order_remainder() {
    let d = DomainModel::unit_ball(2);
    let collar = d.collar;
    let reports = map_indexed(Execution::Auto, PAIRS, |i| {
        let mut rng = sample_rng(5, i as u64);
        loop {
            let depth = log_uniform(rng.random(), 1e-4, collar);
            let x: Vec<f64> = unit_sphere_point(&mut rng, 4)
                .iter()
                .map(|c| c * (1.0 - depth))
                .collect();
            let step = 0.1 * rng.random::<f64>();
            let y: Vec<f64> = x
                .iter()
                .zip(unit_sphere_point(&mut rng, 4))
                .map(|(a, u)| a + step * u)
                .collect();
            let (x, y) = (point(&x), point(&y));
            let dy = 1.0 - y.norm();
            if dy > 0.0 && dy <= collar {
                return (depth, second_order_remainder(&d, &x, &y).unwrap());
            }
        }
    });
    let bad: Vec<_> = reports.iter().filter(|(_, s)| s.remainder > 0.55 * s.base).collect();
    let shallowest = bad.iter().map(|(d, _)| *d).fold(f64::INFINITY, f64::min);
    let max = reports
        .iter()
        .map(|(_, s)| s.ratio)
        .filter(|r| r.is_finite())
        .fold(0.0, f64::max);
    let mut detail = format!("{} violations of 0.55 on {PAIRS} pairs, max ratio {max:.4}", bad.len());
    if !bad.is_empty() {
        detail += &format!(", shallowest violating depth {shallowest:.4}");
    }
    verdict(5, bad.is_empty(), detail);
}

#[test]
fn criterion_06_claim_caps() {
    let mut detail = Vec::new();
    let mut pass = true;
    for domain in SPC_DOMAINS {
        let est = estimator(domain);
        // The perturbed ball has no closed-form projection; fewer pairs keep
        // the run short.
        let n = if domain.starts_with("perturbed") { 2000 } else { PAIRS };
        let set = pairs(&est, &sampler(6, 1e-1), n, f64::INFINITY);
        // The estimator orders each pair deeper point first; regime and cap
        // come with the bound.
        let checks = map_indexed(Execution::Auto, set.len(), |i| {
            let (z, w, r) = &set[i];
            let b = match est.upper_bound_claim(z, w) {
                Ok(b) => b,
                Err(_) => return Some(('?', false, true)),
            };
            let case = b.path.as_ref().and_then(|p| p.case.clone()).unwrap_or_default();
            let cap = b.cap.unwrap_or(f64::NAN);
            match case.as_str() {
                "claim-a" => Some(('a', b.value <= 1.1 * cap, false)),
                "claim-b" if r.delta_z.max(r.delta_w) <= 1e-2 => Some(('b', b.value <= cap + 0.5, false)),
                _ => None,
            }
        });
        let count = |c: char| checks.iter().flatten().filter(|x| x.0 == c).count();
        let bad = |c: char| checks.iter().flatten().filter(|x| x.0 == c && !x.1).count();
        let errors = checks.iter().flatten().filter(|x| x.2).count();
        pass &= bad('a') == 0 && bad('b') == 0 && errors == 0 && count('a') > 0 && count('b') > 0;
        detail.push(format!(
            "{domain}: regime a {}/{} within 4.4A, regime b {}/{} within log A + 10.5 ({errors} construction errors)",
            count('a') - bad('a'),
            count('a'),
            count('b') - bad('b'),
            count('b')
        ));
    }
    verdict(6, pass, detail.join("; "));
}

fn scan(eps: usize, eta: usize, beta: &[f64], bounds: bool) -> Vec<ScanRow> {
    let p = ScanParams {
        outer: 4.0,
        eps: log_grid(1e-5, 1e-2, eps),
        eta: log_grid(1e-4, 1e-1, eta),
        beta: beta.to_vec(),
        curves: false,
        bounds,
        ..Default::default()
    };
    shell_scan(&p, Execution::Auto).unwrap()
}

fn betas(n: usize) -> Vec<f64> {
    let mut b = vec![0.0];
    b.extend(log_grid(1e-4, 3e-2, n - 1));
    b
}

#[test]
fn criterion_07_shell_upper_envelope() {
    let coarse = scan(6, 8, &betas(5), true);
    let fine = scan(11, 15, &betas(9), true);
    let ratio = |rows: &[ScanRow]| -> Vec<f64> {
        rows.iter()
            .map(|r| r.upper.map_or(f64::NAN, |u| u / r.report.h))
            .collect()
    };
    let mut env = fit_envelope("upper/H", ratio(&coarse)).unwrap();
    let refined = fit_envelope("upper/H", ratio(&fine)).unwrap();
    let stable = env.check_refinement(&refined);
    let below = |rows: &[ScanRow]| {
        rows.iter()
            .filter(|r| !matches!((r.f, r.upper), (Some(f), Some(u)) if f <= u))
            .count()
    };
    let (bad_c, bad_f) = (below(&coarse), below(&fine));
    let gates = fine.iter().filter(|r| r.report.gate).count();
    let pass = env.is_finite() && refined.is_finite() && stable && bad_c == 0 && bad_f == 0;
    verdict(
        7,
        pass,
        format!(
            "upper/H over {} cells in [{:.4}, {:.4}], over {} cells ({gates} in the gate) in [{:.4}, {:.4}], \
             stable {stable}; F > upper in {} cells",
            coarse.len(),
            env.min,
            env.max,
            fine.len(),
            refined.min,
            refined.max,
            bad_c + bad_f
        ),
    );
}

#[test]
fn criterion_08_gate_asymptotics() {
    let rows = scan(13, 14, &betas(8), false);
    let gate: Vec<f64> = rows.iter().filter(|r| r.report.gate).map(|r| r.report.ratio).collect();
    let e = fit_envelope("H/surrogate", gate).unwrap();
    let pass = rows.len() >= PAIRS && e.is_finite() && e.spread() < 100.0;
    verdict(
        8,
        pass,
        format!(
            "{} cells, {} in the gate, H/surrogate in [{:.4}, {:.4}] (max/min {:.3})",
            rows.len(),
            e.count,
            e.min,
            e.max,
            e.spread()
        ),
    );
}

#[test]
fn criterion_09_finsler_normal_segments() {
    let d = Arc::new(DomainModel::unit_ball(2));
    let psi = PsiSpec::power(1.0, 0.5).unwrap();
    let f = MetricModel::new(
        d.clone(),
        MetricKind::FinslerF {
            psi: psi.clone(),
            c: 1.0,
        },
    )
    .unwrap();
    let g = MetricModel::new(d.clone(), MetricKind::FinslerG { psi, c: 1.0 }).unwrap();
    let collar = d.collar;
    let segs = map_indexed(Execution::Auto, 100, |i| {
        let mut rng = sample_rng(9, i as u64);
        let q = unit_sphere_point(&mut rng, 4);
        let a = log_uniform(rng.random(), 1e-4, collar);
        let b = log_uniform(rng.random(), 1e-4, collar);
        let at = |t: f64| point(&q.iter().map(|c| c * (1.0 - t)).collect::<Vec<_>>());
        let value = integrate_metric(&f, &[at(a), at(b)]).unwrap().value;
        let log = 0.5 * (b / a).ln().abs();
        // ∫ (1 + √t)/(2t) + 1/√t dt along the normal.
        let closed = log + 3.0 * (b.sqrt() - a.sqrt()).abs();
        (value, log, closed)
    });
    let bad = segs.iter().filter(|(v, log, _)| *v > log + 1.0 + 1e-3).count();
    let oracle = segs.iter().map(|(v, _, c)| (v - c).abs() / c).fold(0.0, f64::max);
    let pointwise = map_indexed(Execution::Auto, PAIRS, |i| {
        let mut rng = sample_rng(90, i as u64);
        let depth = log_uniform(rng.random(), 1e-4, collar);
        let z: Vec<f64> = unit_sphere_point(&mut rng, 4)
            .iter()
            .map(|c| c * (1.0 - depth))
            .collect();
        let x: Vec<f64> = unit_sphere_point(&mut rng, 4)
            .iter()
            .map(|c| c * rng.random::<f64>())
            .collect();
        let (z, x) = (point(&z), point(&x));
        g.eval(&z, &x).unwrap() <= f.eval(&z, &x).unwrap()
    });
    let bad_g = pointwise.iter().filter(|ok| !**ok).count();
    let pass = bad == 0 && bad_g == 0 && oracle < 1e-6;
    verdict(
        9,
        pass,
        format!(
            "{bad}/100 segments above |log sqrt(d'/d)| + 1.001 (max rel. error vs closed form {oracle:.1e}); \
             {bad_g}/{PAIRS} samples with G > F"
        ),
    );
}

#[test]
fn criterion_10_levi_classification() {
    let cases: [(&str, [f64; 2], LeviClass); 3] = [
        ("ball:r=1", [1.0, 1.0], LeviClass::StronglyPseudoconvex),
        ("ellipsoid:a=1,4", [1.0, 4.0], LeviClass::StronglyPseudoconvex),
        ("shell:R=4", [1.0, 1.0], LeviClass::NonSemipositive),
    ];
    let mut detail = Vec::new();
    let mut pass = true;
    for (spec, axes, expected) in cases {
        let d = DomainModel::parse(spec).unwrap();
        let wrong = map_indexed(Execution::Auto, 100, |i| {
            let mut rng = sample_rng(10, i as u64);
            let u = unit_sphere_point(&mut rng, 4);
            let p: Vec<f64> = u.iter().enumerate().map(|(k, c)| c * axes[k / 2]).collect();
            d.levi_classify(&point(&p))
                .map(|r| r.classification != expected)
                .unwrap_or(true)
        })
        .into_iter()
        .filter(|w| *w)
        .count();
        pass &= wrong == 0;
        detail.push(format!("{spec}: {wrong}/100 misclassified"));
    }
    verdict(10, pass, detail.join("; "));
}
