//! Run configuration: a flat TOML document whose keys can each be overridden
//! by a command-line flag.

use std::path::{Path, PathBuf};

use clap::Args;
use cpsis::certificate::{DEFAULT_MAX_ITER, DEFAULT_TARGET_EPS};
use cpsis::{DegreeDistribution, EpidemicParams, IntegrationConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

fn default_gamma() -> f64 {
    1.0
}
fn default_t_max() -> f64 {
    100.0
}
fn default_rel_tol() -> f64 {
    1e-11
}
fn default_steps() -> usize {
    100
}
fn default_eps() -> f64 {
    DEFAULT_TARGET_EPS
}
fn default_max_iter() -> u64 {
    DEFAULT_MAX_ITER
}

/// One degree class in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegreeEntry {
    pub degree: u32,
    pub count: u64,
}

impl From<(u32, u64)> for DegreeEntry {
    fn from((degree, count): (u32, u64)) -> Self {
        Self { degree, count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub degrees: Vec<DegreeEntry>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Infected nodes per class at t = 0; 10% of each class when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_infected: Option<Vec<f64>>,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Defaults to `rel_tol · N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_max: Option<f64>,
    /// Number of sweep intervals; the grid has `steps + 1` points.
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: u64,
    #[serde(default)]
    pub allow_virtual: bool,
    #[serde(default)]
    pub verify: bool,
}

impl RunConfig {
    pub fn new(degrees: &[(u32, u64)]) -> Self {
        Self {
            degrees: degrees.iter().map(|&p| p.into()).collect(),
            gamma: default_gamma(),
            tau: None,
            initial_infected: None,
            t_max: default_t_max(),
            rel_tol: default_rel_tol(),
            abs_tol: None,
            tau_min: None,
            tau_max: None,
            steps: default_steps(),
            eps: default_eps(),
            max_iter: default_max_iter(),
            allow_virtual: false,
            verify: false,
        }
    }

    pub fn from_toml(text: &str, origin: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|source| CliError::ConfigParse {
            path: origin.to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn to_toml(&self) -> CliResult<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn dist(&self) -> CliResult<DegreeDistribution> {
        let pairs: Vec<(u32, u64)> = self.degrees.iter().map(|e| (e.degree, e.count)).collect();
        Ok(DegreeDistribution::new(&pairs)?)
    }

    pub fn tau(&self) -> CliResult<f64> {
        self.tau
            .ok_or_else(|| CliError::Validation("tau is required (set --tau or `tau` in the config)".into()))
    }

    pub fn params(&self) -> CliResult<EpidemicParams> {
        Ok(EpidemicParams::new(self.tau()?, self.gamma)?)
    }

    pub fn infected(&self, dist: &DegreeDistribution) -> Vec<f64> {
        match &self.initial_infected {
            Some(v) => v.clone(),
            None => dist.counts().map(|n| 0.1 * n).collect(),
        }
    }

    pub fn integration(&self, dist: &DegreeDistribution, params: EpidemicParams) -> CliResult<IntegrationConfig> {
        let cfg = IntegrationConfig::for_model(dist, params)
            .with_t_max(self.t_max)
            .with_tolerances(self.rel_tol, self.abs_tol.unwrap_or(self.rel_tol * dist.n_total()));
        cfg.validate()?;
        Ok(cfg)
    }

    /// The sweep grid `tau_min + i (tau_max − tau_min) / steps`.
    pub fn tau_grid(&self) -> CliResult<Vec<f64>> {
        let (lo, hi) = match (self.tau_min, self.tau_max) {
            (Some(lo), Some(hi)) => (lo, hi),
            _ => return Err(CliError::Validation("sweep needs tau_min and tau_max".into())),
        };
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(CliError::Validation(format!(
                "sweep needs 0 < tau_min < tau_max, got {lo} and {hi}"
            )));
        }
        if self.steps == 0 {
            return Err(CliError::Validation("steps must be at least 1".into()));
        }
        let n = self.steps;
        Ok((0..=n)
            .map(|i| {
                if i == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / n as f64
                }
            })
            .collect())
    }
}

/// Parses `2:850,3:100,4:50`.
pub fn parse_degrees(s: &str) -> CliResult<Vec<(u32, u64)>> {
    s.split(',')
        .map(str::trim)
        .map(|tok| {
            let bad = || CliError::Validation(format!("malformed degree token `{tok}`: expected degree:count"));
            let (k, n) = tok.split_once(':').ok_or_else(bad)?;
            Ok((
                k.trim().parse().map_err(|_| bad())?,
                n.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

/// Parses a comma-separated list of numbers.
pub fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("malformed {what} value `{}`", tok.trim())))
        })
        .collect()
}

/// Flags shared by every command.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Degree classes as `degree:count,…`, e.g. `2:850,3:100,4:50`.
    #[arg(long)]
    pub degrees: Option<String>,
    /// Recovery rate γ.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Infection rate τ.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the resolved config to this path before running.
    #[arg(long)]
    pub emit_config: Option<PathBuf>,
}

/// Integration flags.
#[derive(Debug, Clone, Default, Args)]
pub struct IntegrationArgs {
    /// Infected nodes per class at t = 0, comma-separated.
    #[arg(long)]
    pub initial_infected: Option<String>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
}

/// Every override a command line can carry.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub common: CommonArgs,
    pub integration: IntegrationArgs,
    pub tau_min: Option<f64>,
    pub tau_max: Option<f64>,
    pub steps: Option<usize>,
    pub eps: Option<f64>,
    pub max_iter: Option<u64>,
    pub allow_virtual: bool,
    pub verify: bool,
}

impl Overrides {
    /// Loads the config file if any and applies the flags on top.
    pub fn resolve(&self) -> CliResult<RunConfig> {
        let c = &self.common;
        let mut cfg = match &c.config {
            Some(path) => RunConfig::load(path)?,
            None => {
                let degrees = c
                    .degrees
                    .as_deref()
                    .ok_or_else(|| CliError::Validation("no degree distribution: pass --degrees or --config".into()))?;
                RunConfig::new(&parse_degrees(degrees)?)
            }
        };
        if let Some(d) = &c.degrees {
            cfg.degrees = parse_degrees(d)?.into_iter().map(DegreeEntry::from).collect();
        }
        if let Some(g) = c.gamma {
            cfg.gamma = g;
        }
        if c.tau.is_some() {
            cfg.tau = c.tau;
        }
        let i = &self.integration;
        if let Some(s) = &i.initial_infected {
            cfg.initial_infected = Some(parse_list(s, "initial_infected")?);
        }
        if let Some(t) = i.t_max {
            cfg.t_max = t;
        }
        if let Some(r) = i.rel_tol {
            cfg.rel_tol = r;
        }
        if i.abs_tol.is_some() {
            cfg.abs_tol = i.abs_tol;
        }
        if self.tau_min.is_some() {
            cfg.tau_min = self.tau_min;
        }
        if self.tau_max.is_some() {
            cfg.tau_max = self.tau_max;
        }
        if let Some(s) = self.steps {
            cfg.steps = s;
        }
        if let Some(e) = self.eps {
            cfg.eps = e;
        }
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        cfg.allow_virtual |= self.allow_virtual;
        cfg.verify |= self.verify;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degrees_token_parsing() {
        assert_eq!(
            parse_degrees("2:850, 3:100,4:50").unwrap(),
            vec![(2, 850), (3, 100), (4, 50)]
        );
        for bad in ["", "2", "2:", "a:3", "2:3:4", "2:-1", "2:850;3:100"] {
            assert!(matches!(parse_degrees(bad), Err(CliError::Validation(_))), "{bad}");
        }
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::new(&[(2, 850), (3, 100), (4, 50)]);
        cfg.tau = Some(0.1 + 0.2);
        cfg.initial_infected = Some(vec![90.0, 50.0, 10.0]);
        cfg.abs_tol = Some(1e-9);
        cfg.verify = true;
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text, "mem").unwrap(), cfg);
    }

    #[test]
    fn minimal_toml_uses_defaults() {
        let cfg = RunConfig::from_toml("degrees = [{ degree = 4, count = 1000 }]\ntau = 0.3\n", "mem").unwrap();
        assert_eq!(cfg.gamma, 1.0);
        assert_eq!(cfg.max_iter, DEFAULT_MAX_ITER);
        assert!(RunConfig::from_toml("degrees = [{ degree = 4, count = 1000 }]\ntua = 0.3\n", "mem").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "tau = 0.3\ngamma = 2.0\n\n[[degrees]]\ndegree = 4\ncount = 1000\n",
        )
        .unwrap();
        let o = Overrides {
            common: CommonArgs {
                config: Some(path),
                tau: Some(0.25),
                ..Default::default()
            },
            steps: Some(7),
            ..Default::default()
        };
        let cfg = o.resolve().unwrap();
        assert_eq!((cfg.tau, cfg.gamma, cfg.steps), (Some(0.25), 2.0, 7));
    }

    #[test]
    fn tau_grid_endpoints() {
        let mut cfg = RunConfig::new(&[(4, 10)]);
        cfg.tau_min = Some(0.1);
        cfg.tau_max = Some(0.7);
        cfg.steps = 3;
        let g = cfg.tau_grid().unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!((g[0], g[3]), (0.1, 0.7));
        cfg.tau_max = Some(0.05);
        assert!(cfg.tau_grid().is_err());
    }
}
