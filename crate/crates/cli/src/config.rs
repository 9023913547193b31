//! Experiment configuration files.
//!
//! A file holds either one experiment as top-level keys or a batch as an
//! `[[experiments]]` array. Unset keys take per-experiment defaults; relative
//! output directories are resolved against the directory of the file.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use greedyq::distributions::from_spec;
use greedyq::Solver;
use serde::{Deserialize, Serialize};
use toml::Spanned;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[serde(rename = "greedy1d_uniform")]
    Greedy1dUniform,
    #[serde(rename = "greedy1d_normal")]
    Greedy1dNormal,
    #[serde(rename = "greedy_nd_normal2")]
    GreedyNdNormal2,
    VdcConstants,
    ConcatCompare,
    Mismatch,
    CubatureCompare,
    Diagnostics,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Greedy1dUniform,
        Experiment::Greedy1dNormal,
        Experiment::GreedyNdNormal2,
        Experiment::VdcConstants,
        Experiment::ConcatCompare,
        Experiment::Mismatch,
        Experiment::CubatureCompare,
        Experiment::Diagnostics,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Greedy1dUniform => "greedy1d_uniform",
            Experiment::Greedy1dNormal => "greedy1d_normal",
            Experiment::GreedyNdNormal2 => "greedy_nd_normal2",
            Experiment::VdcConstants => "vdc_constants",
            Experiment::ConcatCompare => "concat_compare",
            Experiment::Mismatch => "mismatch",
            Experiment::CubatureCompare => "cubature_compare",
            Experiment::Diagnostics => "diagnostics",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s)
    }

    pub fn names() -> String {
        Self::ALL.map(|e| e.as_str()).join(", ")
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Experiment::GreedyNdNormal2)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Test integrands of `cubature_compare`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    Cos,
    Square,
    Abs,
}

impl Integrand {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "cos" => Some(Integrand::Cos),
            "square" => Some(Integrand::Square),
            "abs" => Some(Integrand::Abs),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Integrand::Cos => x.cos(),
            Integrand::Square => x * x,
            Integrand::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExperiment {
    experiment: Spanned<String>,
    distribution: Option<String>,
    p: Option<f64>,
    q: Option<f64>,
    #[serde(alias = "N_max")]
    n_max: Option<usize>,
    solver: Option<String>,
    seed: Option<u64>,
    mc_per_level: Option<usize>,
    eval_samples: Option<usize>,
    start_rule: Option<String>,
    b: Option<f64>,
    function: Option<String>,
    base: Option<u64>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBatch {
    experiments: Vec<RawExperiment>,
}

/// A fully resolved experiment. Keys that do not apply to the experiment are
/// `None` and left out of the summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub distribution: String,
    pub p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    pub n_max: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_per_level: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub function: Option<Integrand>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<u64>,
    #[serde(skip)]
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub line: usize,
}

#[derive(Debug, PartialEq)]
pub enum ConfigError {
    /// Nothing to run.
    Empty,
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Empty => f.write_str("config defines no experiment"),
            ConfigError::Invalid(m) => f.write_str(m),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse(text: &str, base_dir: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    if table.is_empty() {
        return Err(ConfigError::Empty);
    }
    let raw = if table.contains_key("experiments") {
        toml::from_str::<RawBatch>(text).map_err(|e| ConfigError::Invalid(e.to_string()))?.experiments
    } else {
        vec![toml::from_str::<RawExperiment>(text).map_err(|e| ConfigError::Invalid(e.to_string()))?]
    };
    if raw.is_empty() {
        return Err(ConfigError::Empty);
    }
    let mut out = Vec::with_capacity(raw.len());
    for r in raw {
        let line = line_of(text, r.experiment.span().start);
        out.push(resolve(r, base_dir).map_err(|m| ConfigError::Invalid(format!("line {line}: {m}")))?.with_line(line));
    }
    let mut seen = BTreeSet::new();
    for c in &out {
        if !seen.insert(c.output_dir.clone()) {
            return Err(ConfigError::Invalid(format!(
                "line {}: output_dir `{}` is already used by another experiment; set `output_dir`",
                c.line,
                c.output_dir.display()
            )));
        }
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<Vec<ExperimentConfig>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Invalid(format!("cannot read `{}`: {e}", path.display())))?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parse(&text, base)
}

impl ExperimentConfig {
    fn with_line(mut self, line: usize) -> Self {
        self.line = line;
        self
    }

    pub fn solver(&self) -> Solver {
        self.solver.as_deref().map_or(Solver::Lloyd, |s| Solver::parse(s).expect("validated"))
    }
}

fn resolve(r: RawExperiment, base_dir: &Path) -> Result<ExperimentConfig, String> {
    use Experiment::*;
    let exp = Experiment::parse(r.experiment.get_ref()).ok_or_else(|| {
        format!("unknown experiment `{}`; available: {}", r.experiment.get_ref(), Experiment::names())
    })?;
    let default_dist = match exp {
        Greedy1dNormal | CubatureCompare | Diagnostics => "normal(0,1)",
        GreedyNdNormal2 => "normal_nd(2)",
        _ => "uniform01",
    };
    let default_n = match exp {
        Greedy1dUniform | Mismatch => 5000,
        Greedy1dNormal => 4001,
        GreedyNdNormal2 => 200,
        VdcConstants | ConcatCompare => 4096,
        CubatureCompare | Diagnostics => 1000,
    };
    let distribution = r.distribution.unwrap_or_else(|| default_dist.to_string());
    let law = from_spec(&distribution).map_err(|e| e.to_string())?;
    let p = r.p.unwrap_or(if exp == VdcConstants { 1.0 } else { 2.0 });
    let n_max = r.n_max.unwrap_or(default_n);
    if !(p > 0.0 && p.is_finite()) {
        return Err(format!("p must be positive, got {p}"));
    }
    if n_max == 0 {
        return Err("n_max must be at least 1".into());
    }

    let one_d = !matches!(exp, GreedyNdNormal2);
    if one_d && law.dim() != 1 {
        return Err(format!("{exp} needs a scalar distribution, got `{distribution}`"));
    }
    if matches!(exp, VdcConstants | ConcatCompare)
        && distribution.replace(' ', "") != "uniform01"
        && distribution.replace(' ', "") != "uniform(0,1)"
    {
        return Err(format!("{exp} is defined for uniform01 only"));
    }
    if matches!(exp, Greedy1dUniform | Greedy1dNormal | ConcatCompare | Mismatch | CubatureCompare | Diagnostics)
        && p != 2.0
    {
        return Err(format!("{exp} builds L^2 greedy sequences; p must be 2, got {p}"));
    }
    if exp == VdcConstants && n_max < 8 {
        return Err(format!("vdc_constants needs n_max >= 8, got {n_max}"));
    }

    let solver = match exp {
        Greedy1dUniform | Greedy1dNormal | ConcatCompare | Mismatch | CubatureCompare | Diagnostics => {
            Some(r.solver.clone().unwrap_or_else(|| "lloyd".into()))
        }
        GreedyNdNormal2 => Some(r.solver.clone().unwrap_or_else(|| "rlloyd".into())),
        _ => None,
    };
    if let Some(s) = &solver {
        let parsed = Solver::parse(s).map_err(|e| e.to_string())?;
        let stochastic = matches!(parsed, Solver::RandomizedLloyd | Solver::Clvq);
        if stochastic != exp.is_stochastic() {
            return Err(format!("solver `{s}` cannot be used by {exp}"));
        }
    } else if r.solver.is_some() {
        return Err(format!("{exp} takes no solver"));
    }

    let seed = if exp.is_stochastic() {
        Some(r.seed.ok_or_else(|| format!("{exp} is stochastic; `seed` is required"))?)
    } else {
        None
    };
    let (mc_per_level, eval_samples, start_rule) = if exp.is_stochastic() {
        let rule = r.start_rule.unwrap_or_else(|| "best_reduction".into());
        if !matches!(rule.as_str(), "best_reduction" | "farthest") {
            return Err(format!("unknown start_rule `{rule}` (best_reduction, farthest)"));
        }
        (Some(r.mc_per_level.unwrap_or(1000)), Some(r.eval_samples.unwrap_or(1_000_000)), Some(rule))
    } else {
        (None, None, None)
    };
    let q = match exp {
        Mismatch | Diagnostics => Some(r.q.unwrap_or(2.5)),
        _ => None,
    };
    if let Some(q) = q {
        if !(q > 0.0 && q.is_finite()) {
            return Err(format!("q must be positive, got {q}"));
        }
    }
    let b = if exp == Diagnostics { Some(r.b.unwrap_or(0.25)) } else { None };
    if let Some(b) = b {
        if !(b > 0.0 && b < 0.5) {
            return Err(format!("b must lie in (0, 1/2), got {b}"));
        }
    }
    let function = if exp == CubatureCompare {
        let f = r.function.clone().unwrap_or_else(|| "cos".into());
        Some(Integrand::parse(&f).ok_or_else(|| format!("unknown function `{f}` (cos, square, abs)"))?)
    } else {
        None
    };
    let base = if exp == VdcConstants { Some(r.base.unwrap_or(2)) } else { None };
    if base.is_some_and(|b| b < 2) {
        return Err("base must be at least 2".into());
    }

    let unused: Vec<&str> = [
        ("q", r.q.is_some() && q.is_none()),
        ("seed", r.seed.is_some() && seed.is_none()),
        ("mc_per_level", r.mc_per_level.is_some() && mc_per_level.is_none()),
        ("eval_samples", r.eval_samples.is_some() && eval_samples.is_none()),
        ("b", r.b.is_some() && b.is_none()),
        ("function", r.function.is_some() && function.is_none()),
        ("base", r.base.is_some() && base.is_none()),
    ]
    .into_iter()
    .filter_map(|(k, bad)| bad.then_some(k))
    .collect();
    if !unused.is_empty() {
        return Err(format!("{exp} does not use: {}", unused.join(", ")));
    }

    let output_dir = base_dir.join(r.output_dir.unwrap_or_else(|| Path::new("out").join(exp.as_str())));
    Ok(ExperimentConfig {
        experiment: exp,
        distribution,
        p,
        q,
        n_max,
        solver,
        seed,
        mc_per_level,
        eval_samples,
        start_rule,
        b,
        function,
        base,
        output_dir,
        line: 0,
    })
}

/// A commented config holding the defaults of `exp`.
pub fn template(exp: Experiment) -> String {
    let c = resolve(
        RawExperiment {
            experiment: Spanned::new(0..0, exp.as_str().to_string()),
            distribution: None,
            p: None,
            q: None,
            n_max: None,
            solver: None,
            seed: exp.is_stochastic().then_some(2024),
            mc_per_level: None,
            eval_samples: None,
            start_rule: None,
            b: None,
            function: None,
            base: None,
            output_dir: None,
        },
        Path::new(""),
    )
    .expect("defaults are valid");
    let mut s = format!("# greedyq experiment: {exp}\nexperiment = \"{exp}\"\n");
    s += &format!("distribution = \"{}\"\n", c.distribution);
    s += &format!("p = {:?}\n", c.p);
    if let Some(q) = c.q {
        s += &format!("q = {q:?}\n");
    }
    s += &format!("n_max = {}\n", c.n_max);
    if let Some(v) = &c.solver {
        s += &format!("solver = \"{v}\"\n");
    }
    if let Some(v) = c.seed {
        s += &format!("seed = {v}\n");
    }
    if let Some(v) = c.mc_per_level {
        s += &format!("# M(N) = mc_per_level * N\nmc_per_level = {v}\n");
    }
    if let Some(v) = c.eval_samples {
        s += &format!("eval_samples = {v}\n");
    }
    if let Some(v) = &c.start_rule {
        s += &format!("start_rule = \"{v}\"\n");
    }
    if let Some(v) = c.b {
        s += &format!("b = {v:?}\n");
    }
    if let Some(v) = c.function {
        s += &format!("function = \"{}\"\n", serde_json::to_value(v).unwrap().as_str().unwrap());
    }
    if let Some(v) = c.base {
        s += &format!("base = {v}\n");
    }
    s += &format!("output_dir = \"{}\"\n", c.output_dir.display());
    s
}
