use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::Arc;

use serde::Serialize;

use super::config::{ExperimentConfig, OutputFormat};
use super::envelope::{fit_envelope, EnvelopeReport};
use super::output::{fmt17, fmt_opt, write_csv, write_json_lines};
use super::sampler::PairSampler;
use crate::cx::{CxPoint, CxVector};
use crate::error::Result;
use crate::estimators::{Estimator, MeshParams};
use crate::geometry::{DomainKind, DomainModel, LeviClass};
use crate::metrics::ball_distance;
use crate::par::{map_indexed, Execution};
use crate::quantities::{quasi_symmetry_check, ClaimRegime, ConcaveRegime, PairContext};

/// Relative tolerance on the quadrature side of exact inequalities.
pub const QUADRATURE_TOL: f64 = 1e-6;
/// Pairs deeper than this are exempt from the quasi-symmetry check.
pub const SYMMETRY_DEPTH: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleRow {
    pub index: usize,
    pub z: String,
    pub w: String,
    pub delta_z: f64,
    pub delta_w: f64,
    pub a: f64,
    pub b: f64,
    pub a_hat: f64,
    pub a_p: f64,
    pub h: f64,
    pub h_r: f64,
    pub f: f64,
    pub claim: String,
    pub concave: String,
    pub a_swap: f64,
    pub h_swap: f64,
    /// Exact distance when the domain is a ball.
    pub exact: Option<f64>,
    pub upper: Option<f64>,
    pub upper_method: Option<String>,
    pub upper_cap: Option<f64>,
    pub model_upper: Option<f64>,
    pub halflog: Option<f64>,
    pub halflog_heuristic: bool,
    pub lower_f: Option<f64>,
    pub graph: Option<f64>,
    pub graph_coarse: Option<f64>,
    pub failures: Vec<String>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub check: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RegimeCounts {
    pub claim_a: usize,
    pub claim_b: usize,
    pub concave_a: usize,
    pub concave_b: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub domain: String,
    pub chi: f64,
    pub levi: LeviClass,
    pub rows: Vec<SampleRow>,
    pub envelopes: Vec<EnvelopeReport>,
    pub violations: Vec<Violation>,
    pub errors: Vec<(usize, String)>,
    pub regimes: RegimeCounts,
}

/// Default anchor: the boundary point nearest to `e_1`.
pub fn default_anchor(d: &DomainModel) -> Result<CxPoint> {
    snap_anchor(d, &CxVector::basis(d.dim, 0))
}

/// Boundary point nearest to `p`, or `p` itself when it already lies on the boundary.
pub fn snap_anchor(d: &DomainModel, p: &CxPoint) -> Result<CxPoint> {
    if d.value(p).abs() < 1e-12 {
        return Ok(p.clone());
    }
    Ok(d.project(p)?.foot)
}

/// Builds the domain, context and estimator described by `cfg`.
pub fn setup(cfg: &ExperimentConfig) -> Result<Estimator> {
    let mut d = DomainModel::parse(&cfg.domain)?;
    if let Some(c) = cfg.collar {
        d = d.with_collar(c);
    }
    let d = Arc::new(d);
    let anchor = match &cfg.anchor {
        Some(a) => snap_anchor(&d, a)?,
        None => default_anchor(&d)?,
    };
    let ctx = PairContext::new(d, anchor, cfg.constants.clone())?;
    let mesh = MeshParams {
        nodes: cfg.mesh_nodes,
        seed: cfg.seed,
        exec: Execution::Sequential,
        ..Default::default()
    };
    Ok(Estimator::new(ctx)?.with_mesh(mesh))
}

/// Exact distance on ball domains.
pub fn exact_distance(d: &DomainModel, z: &CxPoint, w: &CxPoint) -> Option<f64> {
    match d.kind {
        DomainKind::Ball { radius } => ball_distance(&(z * (1.0 / radius)), &(w * (1.0 / radius))).ok(),
        _ => None,
    }
}

fn evaluate(
    est: &Estimator,
    sampler: &PairSampler,
    cfg: &ExperimentConfig,
    index: usize,
) -> (SampleRow, Vec<Violation>) {
    let mut violations = Vec::new();
    let pair = match sampler.sample(&est.ctx, index) {
        Ok(p) => p,
        Err(e) => {
            let row = SampleRow {
                index,
                z: String::new(),
                w: String::new(),
                delta_z: f64::NAN,
                delta_w: f64::NAN,
                a: f64::NAN,
                b: f64::NAN,
                a_hat: f64::NAN,
                a_p: f64::NAN,
                h: f64::NAN,
                h_r: f64::NAN,
                f: f64::NAN,
                claim: String::new(),
                concave: String::new(),
                a_swap: f64::NAN,
                h_swap: f64::NAN,
                exact: None,
                upper: None,
                upper_method: None,
                upper_cap: None,
                model_upper: None,
                halflog: None,
                halflog_heuristic: false,
                lower_f: None,
                graph: None,
                graph_coarse: None,
                failures: Vec::new(),
                error: Some(e.to_string()),
            };
            return (row, violations);
        }
    };
    let (z, w, rec) = (&pair.z, &pair.w, &pair.record);
    let d = est.domain();
    let mut errors = Vec::new();
    let swapped = est.record(w, z);
    let (a_swap, h_swap) = match &swapped {
        Ok(r) => {
            let s = quasi_symmetry_check(rec, r, &est.ctx.constants);
            (s.a_ratio, s.h_ratio)
        }
        Err(e) => {
            errors.push(format!("swap: {e}"));
            (f64::NAN, f64::NAN)
        }
    };
    let exact = exact_distance(d, z, w);
    let upper = est
        .upper_bound_claim(z, w)
        .map_err(|e| errors.push(format!("upper: {e}")))
        .ok();
    let model_upper = if est.levi == LeviClass::NonSemipositive {
        est.upper_bound_model(z, w)
            .map_err(|e| errors.push(format!("model: {e}")))
            .ok()
    } else {
        None
    };
    let halflog = est
        .lower_bound_halflog(z, w)
        .map_err(|e| errors.push(format!("halflog: {e}")))
        .ok();
    let lower_f = est.lower_bound_f(z, w).map_err(|e| errors.push(format!("F: {e}"))).ok();
    let graph = if cfg.graph {
        est.upper_bound_graph(z, w)
            .map_err(|e| errors.push(format!("graph: {e}")))
            .ok()
    } else {
        None
    };

    let mut check = |name: &'static str, lhs: f64, rhs: f64, ok: bool| {
        if !ok {
            violations.push(Violation {
                index,
                check: name,
                lhs,
                rhs,
            });
        }
    };
    check("hr-le-h", rec.h_r, rec.h, rec.h_r <= rec.h * (1.0 + 1e-12));
    if let Some(k) = exact {
        if let Some(h) = &halflog {
            check(
                "ball-halflog",
                h.value,
                k,
                h.value <= k * (1.0 + QUADRATURE_TOL) + 1e-15,
            );
        }
        if let Some(u) = &upper {
            check("ball-upper", k, u.value, k <= u.value * (1.0 + QUADRATURE_TOL) + 1e-15);
        }
        if let Some(g) = &graph {
            check("ball-graph", k, g.value, k <= g.value * (1.0 + QUADRATURE_TOL) + 1e-15);
        }
    }
    if est.levi == LeviClass::StronglyPseudoconvex && rec.delta_z.max(rec.delta_w) <= SYMMETRY_DEPTH {
        let limit = 2.0 * (1.0 + est.ctx.constants.slack_a);
        check("quasi-symmetry", a_swap, limit, !(a_swap > limit));
    }

    let failures = violations.iter().map(|v| v.check.to_string()).collect();
    let row = SampleRow {
        index,
        z: z.to_string(),
        w: w.to_string(),
        delta_z: rec.delta_z,
        delta_w: rec.delta_w,
        a: rec.a,
        b: rec.b,
        a_hat: rec.a_hat,
        a_p: rec.a_p,
        h: rec.h,
        h_r: rec.h_r,
        f: rec.f,
        claim: if rec.claim == ClaimRegime::A { "a" } else { "b" }.into(),
        concave: if rec.concave == ConcaveRegime::A { "a" } else { "b" }.into(),
        a_swap,
        h_swap,
        exact,
        upper: upper.as_ref().map(|u| u.value),
        upper_method: upper.as_ref().map(|u| u.method.clone()),
        upper_cap: upper.as_ref().and_then(|u| u.cap),
        model_upper: model_upper.map(|u| u.value),
        halflog: halflog.as_ref().map(|h| h.value),
        halflog_heuristic: halflog.as_ref().is_some_and(|h| h.heuristic),
        lower_f: lower_f.map(|f| f.value),
        graph: graph.as_ref().map(|g| g.value),
        graph_coarse: graph.as_ref().and_then(|g| g.graph.as_ref().map(|r| r.coarse)),
        failures,
        error: (!errors.is_empty()).then(|| errors.join("; ")),
    };
    (row, violations)
}

/// Per-row statistics that get an envelope.
fn statistics(rows: &[SampleRow]) -> Vec<(&'static str, Vec<f64>)> {
    let ok: Vec<&SampleRow> = rows.iter().filter(|r| r.a.is_finite()).collect();
    let mut out: Vec<(&'static str, Vec<f64>)> = vec![
        ("a_swap", ok.iter().map(|r| r.a_swap).collect()),
        ("h_swap", ok.iter().map(|r| r.h_swap).collect()),
        (
            "f_over_hr",
            ok.iter().filter(|r| r.h_r > 0.0).map(|r| r.f / r.h_r).collect(),
        ),
        (
            "hr_over_f",
            ok.iter().filter(|r| r.f > 0.0).map(|r| r.h_r / r.f).collect(),
        ),
        (
            "upper_over_log1p_a",
            ok.iter().filter_map(|r| r.upper.map(|u| u / r.a.ln_1p())).collect(),
        ),
        (
            "lower_f_over_upper",
            ok.iter().filter_map(|r| Some(r.lower_f? / r.upper?)).collect(),
        ),
        (
            "model_upper_over_h",
            ok.iter().filter_map(|r| r.model_upper.map(|u| u / r.h)).collect(),
        ),
        (
            "thm_ratio",
            ok.iter().filter_map(|r| r.exact.map(|k| k.exp_m1() / r.a)).collect(),
        ),
        (
            "halflog_over_exact",
            ok.iter().filter_map(|r| Some(r.halflog? / r.exact?)).collect(),
        ),
        (
            "graph_over_exact",
            ok.iter().filter_map(|r| Some(r.graph? / r.exact?)).collect(),
        ),
    ];
    out.retain(|(_, v)| !v.is_empty());
    out
}

/// Runs the sampling experiment described by `cfg`.
pub fn run_experiment(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    cfg.validate()?;
    let est = setup(cfg)?;
    let sampler = PairSampler {
        delta_min: cfg.delta_min,
        delta_max: cfg.delta_max,
        a_min: cfg.a_min,
        a_max: cfg.a_max,
        seed: cfg.seed,
    };
    let total = if cfg.stability { 2 * cfg.samples } else { cfg.samples };
    let results = map_indexed(exec, total, |i| evaluate(&est, &sampler, cfg, i));
    let mut rows = Vec::with_capacity(total);
    let mut violations = Vec::new();
    for (row, v) in results {
        rows.push(row);
        violations.extend(v);
    }
    let errors: Vec<(usize, String)> = rows
        .iter()
        .filter_map(|r| r.error.clone().map(|e| (r.index, e)))
        .collect();
    let mut regimes = RegimeCounts::default();
    for r in rows.iter().filter(|r| r.a.is_finite()) {
        match r.claim.as_str() {
            "a" => regimes.claim_a += 1,
            _ => regimes.claim_b += 1,
        }
        match r.concave.as_str() {
            "a" => regimes.concave_a += 1,
            _ => regimes.concave_b += 1,
        }
    }
    let first = statistics(&rows[..cfg.samples]);
    let all = if cfg.stability { Some(statistics(&rows)) } else { None };
    let mut envelopes = Vec::new();
    for (name, values) in first {
        let mut env = fit_envelope(name, values)?;
        if let Some(all) = &all {
            if let Some((_, v)) = all.iter().find(|(n, _)| *n == name) {
                let doubled = fit_envelope(name, v.iter().copied())?;
                env.check_refinement(&doubled);
            }
        }
        envelopes.push(env);
    }
    Ok(ExperimentReport {
        domain: est.domain().spec(),
        chi: est.ctx.chi,
        levi: est.levi,
        rows,
        envelopes,
        violations,
        errors,
        regimes,
    })
}

const SAMPLE_HEADER: [&str; 28] = [
    "index",
    "z",
    "w",
    "delta_z",
    "delta_w",
    "a",
    "b",
    "a_hat",
    "a_p",
    "h",
    "h_r",
    "f",
    "claim",
    "concave",
    "a_swap",
    "h_swap",
    "exact",
    "upper",
    "upper_method",
    "upper_cap",
    "model_upper",
    "halflog",
    "halflog_heuristic",
    "lower_f",
    "graph",
    "graph_coarse",
    "failures",
    "error",
];

const ENVELOPE_HEADER: [&str; 11] = [
    "statistic",
    "count",
    "nonfinite",
    "min",
    "p01",
    "p50",
    "p99",
    "max",
    "stable",
    "status",
    "spread",
];

impl ExperimentReport {
    /// 0 when every exact inequality held, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.violations.is_empty())
    }

    pub fn envelope(&self, name: &str) -> Option<&EnvelopeReport> {
        self.envelopes.iter().find(|e| e.name == name)
    }

    pub fn write_samples<W: Write>(&self, out: W, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Json => write_json_lines(out, &self.rows),
            OutputFormat::Csv => {
                let rows: Vec<Vec<String>> = self
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.index.to_string(),
                            r.z.clone(),
                            r.w.clone(),
                            fmt17(r.delta_z),
                            fmt17(r.delta_w),
                            fmt17(r.a),
                            fmt17(r.b),
                            fmt17(r.a_hat),
                            fmt17(r.a_p),
                            fmt17(r.h),
                            fmt17(r.h_r),
                            fmt17(r.f),
                            r.claim.clone(),
                            r.concave.clone(),
                            fmt17(r.a_swap),
                            fmt17(r.h_swap),
                            fmt_opt(r.exact),
                            fmt_opt(r.upper),
                            r.upper_method.clone().unwrap_or_default(),
                            fmt_opt(r.upper_cap),
                            fmt_opt(r.model_upper),
                            fmt_opt(r.halflog),
                            r.halflog_heuristic.to_string(),
                            fmt_opt(r.lower_f),
                            fmt_opt(r.graph),
                            fmt_opt(r.graph_coarse),
                            r.failures.join(";"),
                            r.error.clone().unwrap_or_default(),
                        ]
                    })
                    .collect();
                write_csv(out, &SAMPLE_HEADER, &rows)
            }
        }
    }

    pub fn write_envelopes<W: Write>(&self, out: W, format: OutputFormat) -> Result<()> {
        match format {
            OutputFormat::Json => write_json_lines(out, &self.envelopes),
            OutputFormat::Csv => {
                let rows: Vec<Vec<String>> = self
                    .envelopes
                    .iter()
                    .map(|e| {
                        let status = match (e.is_finite(), e.stable) {
                            (false, _) => "WARN",
                            (true, Some(false)) => "WARN",
                            _ => "OK",
                        };
                        vec![
                            e.name.clone(),
                            e.count.to_string(),
                            e.nonfinite.to_string(),
                            fmt17(e.min),
                            fmt17(e.p01),
                            fmt17(e.p50),
                            fmt17(e.p99),
                            fmt17(e.max),
                            e.stable.map(|s| s.to_string()).unwrap_or_default(),
                            status.into(),
                            fmt17(e.spread()),
                        ]
                    })
                    .collect();
                write_csv(out, &ENVELOPE_HEADER, &rows)
            }
        }
    }

    /// Writes to the configured paths, or the samples to `fallback`.
    pub fn write_outputs<W: Write>(&self, cfg: &ExperimentConfig, fallback: W) -> Result<()> {
        match &cfg.output {
            Some(p) => self.write_samples(BufWriter::new(File::create(p)?), cfg.format)?,
            None => self.write_samples(fallback, cfg.format)?,
        }
        if let Some(p) = &cfg.envelopes {
            self.write_envelopes(BufWriter::new(File::create(p)?), cfg.format)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(domain: &str) -> ExperimentConfig {
        ExperimentConfig {
            domain: domain.into(),
            samples: 40,
            ..Default::default()
        }
    }

    #[test]
    fn ball_run_is_clean_and_deterministic() {
        let cfg = small("ball:r=1");
        let a = run_experiment(&cfg, Execution::Sequential).unwrap();
        assert_eq!(a.exit_code(), 0, "{:?}", a.violations);
        assert_eq!(a.rows.len(), 80);
        assert!(a.errors.is_empty(), "{:?}", a.errors);
        let b = run_experiment(&cfg, Execution::Auto).unwrap();
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_samples(&mut x, OutputFormat::Csv).unwrap();
        b.write_samples(&mut y, OutputFormat::Csv).unwrap();
        assert_eq!(x, y);
        let thm = a.envelope("thm_ratio").unwrap();
        assert!(thm.is_finite() && thm.min > 0.0);
    }

    #[test]
    fn shell_run_reports_model_bounds() {
        let mut cfg = small("shell:R=4");
        cfg.samples = 16;
        let r = run_experiment(&cfg, Execution::Sequential).unwrap();
        assert_eq!(r.levi, LeviClass::NonSemipositive);
        assert!(r.envelope("model_upper_over_h").is_some());
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn anchors_off_the_boundary_are_projected() {
        let d = DomainModel::parse("perturbed-ball:eps=0.1,k=3").unwrap();
        let e1 = CxVector::basis(2, 0);
        assert!(d.value(&e1).abs() > 1e-3);
        let a = snap_anchor(&d, &e1).unwrap();
        assert!(d.value(&a).abs() < 1e-10);
        assert_eq!(snap_anchor(&d, &a).unwrap(), a);
    }

    #[test]
    fn json_lines() {
        let mut cfg = small("ellipsoid:a=1,4");
        cfg.samples = 3;
        cfg.stability = false;
        let r = run_experiment(&cfg, Execution::Sequential).unwrap();
        let mut buf = Vec::new();
        r.write_samples(&mut buf, OutputFormat::Json).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        for l in text.lines() {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            assert!(v.get("a").is_some());
        }
    }
}
