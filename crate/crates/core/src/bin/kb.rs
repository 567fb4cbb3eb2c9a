use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use kobayashi_bounds::estimators::{Estimator, MeshParams};
use kobayashi_bounds::harness::{
    default_anchor, fmt17, fmt_opt, run_experiment, snap_anchor, write_csv, write_json_lines, ExperimentConfig,
    OutputFormat,
};
use kobayashi_bounds::par::{init_threads_from_env, Execution};
use kobayashi_bounds::quantities::{ModelConstants, PairContext};
use kobayashi_bounds::shell::{log_grid, shell_scan, ScanParams, DEFAULT_C0};
use kobayashi_bounds::{CxPoint, DomainModel, Error, Result};

#[derive(Parser)]
#[command(
    name = "kb",
    version,
    about = "Kobayashi distance bounds near the boundary of model domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Segment,
    Lift,
    Graph,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Levi form classification at a boundary point.
    Classify {
        #[arg(long)]
        domain: String,
        /// Boundary point, e.g. `1,0` or `0.6+0.8i,0`.
        #[arg(long)]
        point: CxPoint,
    },
    /// All pair quantities for `z`, `w`.
    Pair {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        anchor: Option<CxPoint>,
        #[arg(long)]
        z: CxPoint,
        #[arg(long)]
        w: CxPoint,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Upper and lower bounds for `k_D(z, w)` as JSON.
    Bounds {
        #[arg(long)]
        domain: String,
        #[arg(long)]
        anchor: Option<CxPoint>,
        #[arg(long)]
        z: CxPoint,
        #[arg(long)]
        w: CxPoint,
        #[arg(long, value_enum, default_value = "all")]
        method: Method,
        /// Coarse mesh size N of the graph search (the fine mesh has 4N).
        #[arg(long, default_value_t = 2000)]
        mesh: usize,
    },
    /// Sampling experiment from a key=value config file.
    Experiment {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra `key=value` settings applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        envelopes: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Run on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Scan the shell asymptotics over an (ε, η, β) grid.
    ShellScan {
        #[arg(long = "R", default_value_t = 4.0)]
        outer: f64,
        /// Comma list, or `lo:hi:n` for a log grid.
        #[arg(long, default_value = "1e-5:1e-2:4")]
        eps_grid: String,
        #[arg(long, default_value = "1e-4:1e-1:4")]
        eta_grid: String,
        #[arg(long, default_value = "0,1e-3,1e-2,3e-2")]
        beta_grid: String,
        #[arg(long, default_value_t = DEFAULT_C0)]
        c0: f64,
        /// Skip the curve-functional minimization.
        #[arg(long)]
        no_curves: bool,
        /// Skip the upper and lower bounds.
        #[arg(long)]
        no_bounds: bool,
        #[arg(long, default_value_t = 32)]
        perturbations: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("cannot parse grid `{s}`"));
    if let [lo, hi, n] = s.split(':').collect::<Vec<_>>()[..] {
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi >= lo && n >= 1) {
            return Err(bad());
        }
        return Ok(log_grid(lo, hi, n));
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn context(domain: &str, anchor: Option<CxPoint>) -> Result<PairContext> {
    let d = Arc::new(DomainModel::parse(domain)?);
    let anchor = match anchor {
        Some(a) => snap_anchor(&d, &a)?,
        None => default_anchor(&d)?,
    };
    PairContext::new(d, anchor, ModelConstants::default())
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, v)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    init_threads_from_env();
    match cli.command {
        Command::Classify { domain, point } => {
            let d = DomainModel::parse(&domain)?;
            let report = d.levi_classify(&point)?;
            print_json(&serde_json::to_value(&report)?)?;
        }
        Command::Pair {
            domain,
            anchor,
            z,
            w,
            format,
        } => {
            let ctx = context(&domain, anchor)?;
            let rec = ctx.pair(&z, &w)?;
            match format {
                Format::Json => write_json_lines(io::stdout().lock(), &[rec])?,
                Format::Csv => {
                    let header = [
                        "delta_z", "delta_w", "x_z_re", "x_z_im", "b", "a", "a_hat", "a_p", "h", "h_r", "f", "chi",
                        "claim", "concave",
                    ];
                    let row = vec![
                        fmt17(rec.delta_z),
                        fmt17(rec.delta_w),
                        fmt17(rec.x_z.re),
                        fmt17(rec.x_z.im),
                        fmt17(rec.b),
                        fmt17(rec.a),
                        fmt17(rec.a_hat),
                        fmt17(rec.a_p),
                        fmt17(rec.h),
                        fmt17(rec.h_r),
                        fmt17(rec.f),
                        fmt17(rec.chi),
                        format!("{:?}", rec.claim).to_lowercase(),
                        format!("{:?}", rec.concave).to_lowercase(),
                    ];
                    write_csv(io::stdout().lock(), &header, &[row])?;
                }
            }
        }
        Command::Bounds {
            domain,
            anchor,
            z,
            w,
            method,
            mesh,
        } => {
            let ctx = context(&domain, anchor)?;
            let est = Estimator::new(ctx)?.with_mesh(MeshParams {
                nodes: mesh,
                ..Default::default()
            });
            let mut results = Vec::new();
            let mut push = |name: &str, r: Result<kobayashi_bounds::estimators::BoundResult>| {
                results.push(match r {
                    Ok(b) => json!({ "name": name, "result": b }),
                    Err(e) => json!({ "name": name, "error": e.to_string() }),
                });
            };
            if matches!(method, Method::Segment | Method::All) {
                push("segment", est.upper_bound_segment(&z, &w));
            }
            if matches!(method, Method::Lift | Method::All) {
                push("lift", est.upper_bound_normal_lift(&z, &w));
            }
            if matches!(method, Method::Graph | Method::All) {
                push("graph", est.upper_bound_graph(&z, &w));
            }
            if method == Method::All {
                push("claim", est.upper_bound_claim(&z, &w));
                if est.levi == kobayashi_bounds::LeviClass::NonSemipositive {
                    push("model", est.upper_bound_model(&z, &w));
                }
                push("halflog", est.lower_bound_halflog(&z, &w));
                push("F", est.lower_bound_f(&z, &w));
            }
            let exact = kobayashi_bounds::harness::exact_distance(est.domain(), &z, &w);
            print_json(&json!({
                "domain": est.domain().spec(),
                "levi": est.levi,
                "chi": est.ctx.chi,
                "exact": exact,
                "bounds": results,
            }))?;
        }
        Command::Experiment {
            config,
            overrides,
            output,
            envelopes,
            format,
            sequential,
        } => {
            let mut cfg = match config {
                Some(p) => ExperimentConfig::from_file(&p)?,
                None => ExperimentConfig::default(),
            };
            for o in &overrides {
                let (k, v) = o
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidInput(format!("expected key=value, got `{o}`")))?;
                cfg.set(0, k.trim(), v.trim())?;
            }
            if output.is_some() {
                cfg.output = output;
            }
            if envelopes.is_some() {
                cfg.envelopes = envelopes;
            }
            if let Some(f) = format {
                cfg.format = f.into();
            }
            cfg.validate()?;
            let exec = if sequential {
                Execution::Sequential
            } else {
                Execution::Auto
            };
            let report = run_experiment(&cfg, exec)?;
            report.write_outputs(&cfg, io::stdout().lock())?;
            let mut err = io::stderr().lock();
            for e in &report.envelopes {
                let status = if !e.is_finite() || e.stable == Some(false) {
                    "WARN"
                } else {
                    "OK"
                };
                writeln!(
                    err,
                    "{status} {}: min {:.4e} p01 {:.4e} p50 {:.4e} p99 {:.4e} max {:.4e}",
                    e.name, e.min, e.p01, e.p50, e.p99, e.max
                )?;
            }
            for (i, e) in &report.errors {
                writeln!(err, "sample {i}: {e}")?;
            }
            for v in &report.violations {
                writeln!(err, "FAIL sample {}: {} ({} vs {})", v.index, v.check, v.lhs, v.rhs)?;
            }
            return Ok(ExitCode::from(report.exit_code() as u8));
        }
        Command::ShellScan {
            outer,
            eps_grid,
            eta_grid,
            beta_grid,
            c0,
            no_curves,
            no_bounds,
            perturbations,
            seed,
            output,
        } => {
            let params = ScanParams {
                outer,
                eps: parse_grid(&eps_grid)?,
                eta: parse_grid(&eta_grid)?,
                beta: parse_grid(&beta_grid)?,
                c0,
                curves: !no_curves,
                perturbations,
                bounds: !no_bounds,
                seed,
            };
            let rows = shell_scan(&params, Execution::Auto)?;
            let header = [
                "eps1",
                "eps2",
                "eta",
                "beta",
                "h",
                "h_r",
                "surrogate",
                "ratio",
                "gate",
                "tag_re",
                "tag_abs",
                "curve_min",
                "curve_over_h",
                "upper",
                "upper_method",
                "upper_over_h",
                "f",
                "error",
            ];
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let rep = &r.report;
                    vec![
                        fmt17(r.pair.eps1),
                        fmt17(r.pair.eps2),
                        fmt17(r.pair.eta),
                        fmt17(r.pair.beta),
                        fmt17(rep.h),
                        fmt17(rep.h_r),
                        fmt17(rep.surrogate),
                        fmt17(rep.ratio),
                        rep.gate.to_string(),
                        fmt17(rep.tag_re),
                        fmt17(rep.tag_abs),
                        fmt_opt(r.curve_min),
                        fmt_opt(r.curve_min.map(|c| c / rep.h)),
                        fmt_opt(r.upper),
                        r.upper_method.clone().unwrap_or_default(),
                        fmt_opt(r.upper.map(|u| u / rep.h)),
                        fmt_opt(r.f),
                        r.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            match output {
                Some(p) => write_csv(std::fs::File::create(p)?, &header, &body)?,
                None => write_csv(io::stdout().lock(), &header, &body)?,
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
