use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::cx::CxPoint;
use crate::error::{Error, Result};
use crate::quantities::ModelConstants;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format `{s}` (csv or json)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub domain: String,
    /// Boundary point the pairs cluster around; defaults to `e_1` scaled
    /// onto the boundary.
    pub anchor: Option<CxPoint>,
    /// Overrides the domain's default collar width.
    pub collar: Option<f64>,
    pub delta_min: f64,
    pub delta_max: f64,
    pub samples: usize,
    pub seed: u64,
    /// Target range of `A_D`, stratified by decade.
    pub a_min: f64,
    pub a_max: f64,
    pub constants: ModelConstants,
    /// Also compute graph upper bounds (slow).
    pub graph: bool,
    pub mesh_nodes: usize,
    /// Evaluate twice the samples and flag envelope drift.
    pub stability: bool,
    pub output: Option<PathBuf>,
    pub envelopes: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: "ball:r=1".into(),
            anchor: None,
            collar: None,
            delta_min: 1e-4,
            delta_max: 1e-1,
            samples: 1000,
            seed: 7,
            a_min: 1e-2,
            a_max: 1e2,
            constants: ModelConstants::default(),
            graph: false,
            mesh_nodes: 2000,
            stability: true,
            output: None,
            envelopes: None,
            format: OutputFormat::Csv,
        }
    }
}

fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| Error::ConfigParse {
        line,
        reason: format!("{key}: {e}"),
    })
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(Error::ConfigParse {
                    line,
                    reason: format!("expected key = value, got `{body}`"),
                });
            };
            cfg.set(line, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one key; `line` is used for error messages (0 for overrides).
    pub fn set(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let k = &mut self.constants;
        match key {
            "domain" => self.domain = value.to_string(),
            "anchor" => self.anchor = Some(parse(line, key, value)?),
            "collar" => self.collar = Some(parse(line, key, value)?),
            "delta_min" => self.delta_min = parse(line, key, value)?,
            "delta_max" => self.delta_max = parse(line, key, value)?,
            "samples" => self.samples = parse(line, key, value)?,
            "seed" => self.seed = parse(line, key, value)?,
            "a_min" => self.a_min = parse(line, key, value)?,
            "a_max" => self.a_max = parse(line, key, value)?,
            "graph" => self.graph = parse(line, key, value)?,
            "mesh_nodes" => self.mesh_nodes = parse(line, key, value)?,
            "stability" => self.stability = parse(line, key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            "envelopes" => self.envelopes = Some(PathBuf::from(value)),
            "format" => self.format = parse(line, key, value)?,
            "c_low" => k.c_low = parse(line, key, value)?,
            "dnt_c" => k.dnt_c = parse(line, key, value)?,
            "dnt_C" => k.dnt_upper = parse(line, key, value)?,
            "bb_C" => k.bb_c = parse(line, key, value)?,
            "thm_c" => k.thm_c = parse(line, key, value)?,
            "thm_C" => k.thm_upper = parse(line, key, value)?,
            "C0" => k.c0_smooth = parse(line, key, value)?,
            "c0" => k.shell_c0 = parse(line, key, value)?,
            "chi_eps" => k.chi_eps = parse(line, key, value)?,
            "slack_a" => k.slack_a = parse(line, key, value)?,
            "slack_h" => k.slack_h = parse(line, key, value)?,
            _ => {
                return Err(Error::ConfigParse {
                    line,
                    reason: format!("unknown key `{key}`"),
                });
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::ConfigParse {
                line: 0,
                reason: reason.into(),
            })
        };
        if self.samples == 0 {
            return bad("samples must be at least 1");
        }
        if !(self.delta_min > 0.0 && self.delta_min < self.delta_max) {
            return bad("need 0 < delta_min < delta_max");
        }
        if !(self.a_min > 0.0 && self.a_min < self.a_max) {
            return bad("need 0 < a_min < a_max");
        }
        if self.collar.is_some_and(|c| !(c > 0.0)) {
            return bad("collar must be positive");
        }
        if self.mesh_nodes < 8 {
            return bad("mesh_nodes must be at least 8");
        }
        let k = &self.constants;
        for (name, v) in [
            ("c_low", k.c_low),
            ("dnt_c", k.dnt_c),
            ("dnt_C", k.dnt_upper),
            ("bb_C", k.bb_c),
            ("thm_c", k.thm_c),
            ("thm_C", k.thm_upper),
            ("C0", k.c0_smooth),
            ("c0", k.shell_c0),
            ("chi_eps", k.chi_eps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::ConfigParse {
                    line: 0,
                    reason: format!("{name} must be positive"),
                });
            }
        }
        if !(k.slack_a >= 0.0 && k.slack_h >= 0.0) {
            return bad("slacks must be nonnegative");
        }
        Ok(())
    }
}
