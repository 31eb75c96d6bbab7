//! Experiment configuration: a flat key-value file, equivalent
//! command-line flags, and validation. Flags override file values.

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use std::fmt;
use std::path::{Path, PathBuf};

use polarmap::ofdm::{EstimatorKind, PilotSpacing};
use polarmap::polar::ScRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    BruteForce,
    SurrogateSelect,
    SurrogatePermute,
    LinkSim,
    SortedSim,
    Fig1Table,
}

impl ExperimentKind {
    pub fn as_key(&self) -> &'static str {
        match self {
            Self::BruteForce => "brute_force",
            Self::SurrogateSelect => "surrogate_select",
            Self::SurrogatePermute => "surrogate_permute",
            Self::LinkSim => "link_sim",
            Self::SortedSim => "sorted_sim",
            Self::Fig1Table => "fig1_table",
        }
    }

    fn from_key(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "brute_force" => Ok(Self::BruteForce),
            "surrogate_select" => Ok(Self::SurrogateSelect),
            "surrogate_permute" => Ok(Self::SurrogatePermute),
            "link_sim" => Ok(Self::LinkSim),
            "sorted_sim" => Ok(Self::SortedSim),
            "fig1_table" => Ok(Self::Fig1Table),
            other => bail!("unknown experiment kind `{other}`"),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_key())
    }
}

/// Partially specified configuration, as read from a file or flags.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub kind: Option<ExperimentKind>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub v: Option<usize>,
    pub p: Option<f64>,
    pub fd: Option<f64>,
    pub sigma_h_sq: Option<f64>,
    pub snr_db_list: Option<Vec<f64>>,
    pub frames: Option<u64>,
    pub frames_per_eval: Option<u64>,
    pub max_evals: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub estimator: Option<EstimatorKind>,
    pub selection: Option<Vec<usize>>,
    pub perm_file: Option<PathBuf>,
    pub rule: Option<ScRule>,
    pub pilot_spacing: Option<PilotSpacing>,
    pub out: Option<PathBuf>,
}

impl RawConfig {
    /// Reads a `key = value` file; `#` starts a comment, blank lines are
    /// skipped, unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            let key = key.trim();
            let value = value.trim();
            cfg.set(key, value)
                .with_context(|| format!("line {}: key `{key}`", lineno + 1))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "kind" => self.kind = Some(ExperimentKind::from_key(value)?),
            "n" => self.n = Some(value.parse()?),
            "k" => self.k = Some(value.parse()?),
            "v" => self.v = Some(value.parse()?),
            "p" => self.p = Some(value.parse()?),
            "fd" => self.fd = Some(value.parse()?),
            "sigma_h_sq" => self.sigma_h_sq = Some(value.parse()?),
            "snr_db_list" => self.snr_db_list = Some(parse_f64_list(value)?),
            "frames" => self.frames = Some(value.parse()?),
            "frames_per_eval" => self.frames_per_eval = Some(value.parse()?),
            "max_evals" => self.max_evals = Some(value.parse()?),
            "seed" => self.seed = Some(value.parse()?),
            "workers" => self.workers = Some(value.parse()?),
            "estimator" => self.estimator = Some(parse_estimator(value)?),
            "selection" => self.selection = Some(parse_usize_list(value)?),
            "perm_file" => self.perm_file = Some(PathBuf::from(value)),
            "rule" => self.rule = Some(parse_rule(value)?),
            "pilot_spacing" => self.pilot_spacing = Some(parse_spacing(value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Overlays `self` (flags) on top of `base` (file). Any field present
    /// in `self` wins.
    pub fn over(self, base: Self) -> Self {
        Self {
            kind: self.kind.or(base.kind),
            n: self.n.or(base.n),
            k: self.k.or(base.k),
            v: self.v.or(base.v),
            p: self.p.or(base.p),
            fd: self.fd.or(base.fd),
            sigma_h_sq: self.sigma_h_sq.or(base.sigma_h_sq),
            snr_db_list: self.snr_db_list.or(base.snr_db_list),
            frames: self.frames.or(base.frames),
            frames_per_eval: self.frames_per_eval.or(base.frames_per_eval),
            max_evals: self.max_evals.or(base.max_evals),
            seed: self.seed.or(base.seed),
            workers: self.workers.or(base.workers),
            estimator: self.estimator.or(base.estimator),
            selection: self.selection.or(base.selection),
            perm_file: self.perm_file.or(base.perm_file),
            rule: self.rule.or(base.rule),
            pilot_spacing: self.pilot_spacing.or(base.pilot_spacing),
            out: self.out.or(base.out),
        }
    }
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            if t.eq_ignore_ascii_case("inf") {
                Ok(f64::INFINITY)
            } else {
                t.parse::<f64>().map_err(|e| anyhow!("`{t}`: {e}"))
            }
        })
        .collect()
}

pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("`{t}`: {e}")))
        .collect()
}

pub fn parse_estimator(s: &str) -> Result<EstimatorKind> {
    match s.to_ascii_lowercase().as_str() {
        "perfect" => Ok(EstimatorKind::Perfect),
        "mmse" => Ok(EstimatorKind::Mmse),
        "linear_interp" | "linear-interp" | "linear" => Ok(EstimatorKind::LinearInterp),
        other => bail!("unknown estimator `{other}` (perfect|mmse|linear_interp)"),
    }
}

pub fn parse_rule(s: &str) -> Result<ScRule> {
    match s.to_ascii_lowercase().as_str() {
        "exact" => Ok(ScRule::Exact),
        "min_sum" | "min-sum" | "minsum" => Ok(ScRule::MinSum),
        other => bail!("unknown check-node rule `{other}` (exact|min_sum)"),
    }
}

pub fn parse_spacing(s: &str) -> Result<PilotSpacing> {
    match s.to_ascii_lowercase().as_str() {
        "verbatim" => Ok(PilotSpacing::Verbatim),
        "uniform" => Ok(PilotSpacing::Uniform),
        other => bail!("unknown pilot spacing `{other}` (verbatim|uniform)"),
    }
}

fn estimator_key(e: EstimatorKind) -> &'static str {
    match e {
        EstimatorKind::Perfect => "perfect",
        EstimatorKind::Mmse => "mmse",
        EstimatorKind::LinearInterp => "linear_interp",
    }
}

fn rule_key(r: ScRule) -> &'static str {
    match r {
        ScRule::Exact => "exact",
        ScRule::MinSum => "min_sum",
    }
}

fn spacing_key(s: PilotSpacing) -> &'static str {
    match s {
        PilotSpacing::Verbatim => "verbatim",
        PilotSpacing::Uniform => "uniform",
    }
}

/// Fully validated experiment description.
///
/// `selection` entries are stored 0-based; the 1-based paper convention
/// applies to files, flags and reports only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub n: usize,
    pub k: usize,
    pub v: Option<usize>,
    pub p: Option<f64>,
    pub fd: f64,
    pub sigma_h_sq: f64,
    pub snr_db_list: Vec<f64>,
    pub frames: u64,
    pub frames_per_eval: u64,
    pub max_evals: Option<u64>,
    pub seed: u64,
    pub workers: usize,
    #[serde(serialize_with = "ser_estimator")]
    pub estimator: EstimatorKind,
    pub selection: Option<Vec<usize>>,
    pub perm_file: Option<PathBuf>,
    #[serde(serialize_with = "ser_rule")]
    pub rule: ScRule,
    #[serde(serialize_with = "ser_spacing")]
    pub pilot_spacing: PilotSpacing,
    pub out: PathBuf,
}

fn ser_estimator<S: serde::Serializer>(e: &EstimatorKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(estimator_key(*e))
}

fn ser_rule<S: serde::Serializer>(r: &ScRule, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(rule_key(*r))
}

fn ser_spacing<S: serde::Serializer>(p: &PilotSpacing, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(spacing_key(*p))
}

impl ExperimentConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self> {
        let kind = raw.kind.ok_or_else(|| anyhow!("missing experiment kind"))?;
        let n = raw.n.ok_or_else(|| anyhow!("missing `n`"))?;
        let k = raw.k.ok_or_else(|| anyhow!("missing `k`"))?;
        let seed = raw
            .seed
            .ok_or_else(|| anyhow!("missing `seed` (wall-clock seeding is not supported)"))?;
        let out = raw.out.ok_or_else(|| anyhow!("missing `out` path"))?;

        if !n.is_power_of_two() || n < 2 || n > 1024 {
            bail!("n = {n} must be a power of two in 2..=1024");
        }
        if k == 0 || k > n {
            bail!("k = {k} must be in 1..={n}");
        }
        if let Some(v) = raw.v {
            if v > n {
                bail!("v = {v} exceeds n = {n}");
            }
        }
        if let Some(p) = raw.p {
            if !(0.0..=0.5).contains(&p) {
                bail!("p = {p} must lie in [0, 0.5]");
            }
        }
        let needs_v = matches!(
            kind,
            ExperimentKind::BruteForce | ExperimentKind::SurrogateSelect | ExperimentKind::LinkSim
        );
        if needs_v && raw.v.is_none() {
            bail!("experiment `{kind}` requires `v`");
        }
        let needs_p = matches!(
            kind,
            ExperimentKind::BruteForce
                | ExperimentKind::SurrogateSelect
                | ExperimentKind::Fig1Table
        );
        if needs_p && raw.p.is_none() {
            bail!("experiment `{kind}` requires `p`");
        }
        if matches!(
            kind,
            ExperimentKind::SurrogateSelect | ExperimentKind::SurrogatePermute
        ) && raw.max_evals.is_none()
        {
            bail!("experiment `{kind}` requires `max_evals`");
        }
        if kind == ExperimentKind::SortedSim && raw.perm_file.is_none() {
            bail!("experiment `sorted_sim` requires `perm_file`");
        }
        if let Some(sel) = &raw.selection {
            if sel.is_empty() || sel.iter().any(|&x| x == 0 || x > n) {
                bail!("selection entries are 1-based positions in 1..={n}");
            }
            let mut sorted = sel.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != sel.len() {
                bail!("selection entries must be distinct");
            }
            if let Some(v) = raw.v {
                if sel.len() != v {
                    bail!("selection has {} entries but v = {v}", sel.len());
                }
            }
        }
        let snr_db_list = raw
            .snr_db_list
            .unwrap_or_else(|| (0..=10).map(|i| 2.0 * i as f64).collect());
        if snr_db_list.is_empty() {
            bail!("snr_db_list must not be empty");
        }
        let frames = raw.frames.unwrap_or(match kind {
            ExperimentKind::BruteForce | ExperimentKind::Fig1Table => 1_000_000,
            _ => 100_000,
        });
        if frames == 0 {
            bail!("frames must be positive");
        }
        let frames_per_eval = raw.frames_per_eval.unwrap_or(10_000);
        if frames_per_eval == 0 {
            bail!("frames_per_eval must be positive");
        }
        let fd = raw.fd.unwrap_or(0.01);
        if fd < 0.0 || !fd.is_finite() {
            bail!("fd must be finite and non-negative");
        }
        let sigma_h_sq = raw.sigma_h_sq.unwrap_or(1.0);
        if !(sigma_h_sq > 0.0) {
            bail!("sigma_h_sq must be positive");
        }

        Ok(Self {
            kind,
            n,
            k,
            v: raw.v,
            p: raw.p,
            fd,
            sigma_h_sq,
            snr_db_list,
            frames,
            frames_per_eval,
            max_evals: raw.max_evals,
            seed,
            workers: raw.workers.unwrap_or(0),
            estimator: raw.estimator.unwrap_or(EstimatorKind::Mmse),
            selection: raw
                .selection
                .map(|sel| sel.into_iter().map(|x| x - 1).collect()),
            perm_file: raw.perm_file,
            rule: raw.rule.unwrap_or_default(),
            pilot_spacing: raw.pilot_spacing.unwrap_or_default(),
            out,
        })
    }

    /// Key-value form that [`RawConfig::from_file`] parses back to an
    /// equal config.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let mut push = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        push("kind", self.kind.as_key().to_string());
        push("n", self.n.to_string());
        push("k", self.k.to_string());
        if let Some(v) = self.v {
            push("v", v.to_string());
        }
        if let Some(p) = self.p {
            push("p", format!("{p}"));
        }
        push("fd", format!("{}", self.fd));
        push("sigma_h_sq", format!("{}", self.sigma_h_sq));
        push(
            "snr_db_list",
            self.snr_db_list
                .iter()
                .map(|x| {
                    if x.is_infinite() {
                        "inf".to_string()
                    } else {
                        format!("{x}")
                    }
                })
                .collect::<Vec<_>>()
                .join(","),
        );
        push("frames", self.frames.to_string());
        push("frames_per_eval", self.frames_per_eval.to_string());
        if let Some(m) = self.max_evals {
            push("max_evals", m.to_string());
        }
        push("seed", self.seed.to_string());
        push("workers", self.workers.to_string());
        push("estimator", estimator_key(self.estimator).to_string());
        if let Some(sel) = &self.selection {
            push(
                "selection",
                sel.iter()
                    .map(|x| (x + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        if let Some(p) = &self.perm_file {
            push("perm_file", p.display().to_string());
        }
        push("rule", rule_key(self.rule).to_string());
        push("pilot_spacing", spacing_key(self.pilot_spacing).to_string());
        push("out", self.out.display().to_string());
        s
    }
}
