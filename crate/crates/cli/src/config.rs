//! Run configuration: a TOML file merged with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};

use nsbandit::env::Jump;
use nsbandit::harness::BoundGrid;
use nsbandit::{EnvKind, EnvironmentSpec, PolicyKind, PolicyParams};
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const DEFAULT_REPS: usize = 500;
pub const DEFAULT_THIN: usize = 100;
pub const DEFAULT_OUT: &str = "nsbandit-out";
pub const OUT_ENV_VAR: &str = "NSBANDIT_OUT";

/// Variation budget: a number, or the environment's measured variation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Value(f64),
    Measured,
}

impl std::str::FromStr for Budget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "measured" {
            return Ok(Budget::Measured);
        }
        s.parse()
            .map(Budget::Value)
            .map_err(|_| format!("budget must be a number or \"measured\", got '{s}'"))
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Value(v) => write!(f, "{v}"),
            Budget::Measured => f.write_str("measured"),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Budget::Value(v)),
            Raw::Int(v) => Ok(Budget::Value(v as f64)),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Budget::Value(v) => s.serialize_f64(*v),
            Budget::Measured => s.serialize_str("measured"),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct JumpSection {
    pub t: usize,
    pub arm: usize,
    pub level: f64,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub kind: Option<String>,
    pub arms: Option<usize>,
    pub horizon: Option<usize>,
    pub budget: Option<Budget>,
    /// Seed of the Brownian paths or of the switching sequence.
    pub seed: Option<u64>,
    pub levels: Option<Vec<f64>>,
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jumps: Vec<JumpSection>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: String,
    pub eta: Option<f64>,
    pub xi: Option<f64>,
    pub a: Option<f64>,
    pub zeta: Option<f64>,
    pub exp3_gamma: Option<f64>,
    pub exp3s_alpha: Option<f64>,
    pub rexp3_batch: Option<usize>,
    pub dts_gamma: Option<f64>,
    pub tau: Option<usize>,
    pub gamma: Option<f64>,
}

impl PolicySection {
    pub fn named(kind: &str) -> Self {
        Self {
            kind: kind.to_string(),
            ..Self::default()
        }
    }

    pub fn resolve(&self) -> Result<(PolicyKind, PolicyParams), CliError> {
        let kind: PolicyKind = self.kind.parse().map_err(|e| CliError::Usage(format!("policy.kind: {e}")))?;
        let mut p = PolicyParams::default();
        p.eta = self.eta.unwrap_or(p.eta);
        p.xi = self.xi.unwrap_or(p.xi);
        p.a = self.a.unwrap_or(p.a);
        p.zeta = self.zeta.unwrap_or(p.zeta);
        p.dts_gamma = self.dts_gamma.unwrap_or(p.dts_gamma);
        p.exp3_gamma = self.exp3_gamma;
        p.exp3s_alpha = self.exp3s_alpha;
        p.rexp3_batch = self.rexp3_batch;
        p.tau = self.tau;
        p.gamma = self.gamma;
        p.validate()
            .map_err(|e| CliError::Usage(format!("policy '{}': {e}", self.kind)))?;
        Ok((kind, p))
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub horizons: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub eta: Option<f64>,
    pub a: Option<f64>,
    pub zeta: Option<f64>,
    pub arms: Option<usize>,
    pub tau: Option<usize>,
    pub xs: Option<Vec<f64>>,
    pub ls: Option<Vec<usize>>,
    pub trials: Option<u64>,
}

/// Everything a subcommand needs. Fields left unset take documented
/// defaults in [`RunConfig::finish`].
#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    /// Output directory. Not part of the config hash.
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    /// Worker threads. Not part of the config hash: results do not depend on it.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
    /// Trace stride; `0` disables `trace.csv`.
    pub thin: Option<usize>,
    #[serde(default)]
    pub env: EnvSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default, rename = "policy")]
    pub policies: Vec<PolicySection>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub policies: Vec<String>,
    pub env: Option<String>,
    pub horizon: Option<usize>,
    pub arms: Option<usize>,
    pub budget: Option<Budget>,
    pub reps: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub thin: Option<usize>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Applies `o` on top of the file values, then fills defaults.
    pub fn merge(mut self, o: &Overrides) -> Self {
        if !o.policies.is_empty() {
            // Keep parameter sections from the file for policies named again.
            let file = std::mem::take(&mut self.policies);
            self.policies = o
                .policies
                .iter()
                .map(|name| {
                    file.iter()
                        .find(|p| &p.kind == name)
                        .cloned()
                        .unwrap_or_else(|| PolicySection::named(name))
                })
                .collect();
        }
        macro_rules! take {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = Some(v);
                }
            };
        }
        take!(self.env.kind, o.env);
        take!(self.env.horizon, o.horizon);
        take!(self.env.arms, o.arms);
        take!(self.env.budget, o.budget);
        take!(self.reps, o.reps);
        take!(self.seed, o.seed);
        take!(self.out, o.out);
        take!(self.workers, o.workers);
        take!(self.thin, o.thin);
        self
    }

    /// Fills every unset top-level value with its default.
    pub fn finish(mut self) -> Result<Self, CliError> {
        self.reps.get_or_insert(DEFAULT_REPS);
        self.seed.get_or_insert(0);
        self.workers.get_or_insert(1);
        self.thin.get_or_insert(DEFAULT_THIN);
        if self.out.is_none() {
            let dir = std::env::var_os(OUT_ENV_VAR).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from);
            self.out = Some(dir);
        }
        self.env.kind.get_or_insert_with(|| "sinusoidal-bernoulli".to_string());
        self.env.arms.get_or_insert(3);
        self.env.horizon.get_or_insert(5000);
        if self.reps == Some(0) {
            return Err(CliError::Usage("reps must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        // Admissibility is checked here, before any simulation starts.
        for p in &self.policies {
            p.resolve()?;
        }
        Ok(self)
    }

    pub fn reps(&self) -> usize {
        self.reps.unwrap_or(DEFAULT_REPS)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn out(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    /// Policies to run, falling back to `defaults` when none are configured.
    pub fn policy_list(&self, defaults: &[&str]) -> Result<Vec<(PolicyKind, PolicyParams)>, CliError> {
        if self.policies.is_empty() {
            return defaults.iter().map(|d| PolicySection::named(d).resolve()).collect();
        }
        self.policies.iter().map(PolicySection::resolve).collect()
    }

    /// SHA-256 of the canonical TOML form of this config.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// First line of every output file.
    pub fn preamble(&self) -> String {
        format!("config_sha256={} seed={}", self.hash(), self.seed())
    }

    pub fn env_kind(&self) -> Result<EnvKind, CliError> {
        let e = &self.env;
        let name = e.kind.as_deref().unwrap_or("sinusoidal-bernoulli");
        let seed = e.seed.unwrap_or(0);
        let need = |what: &str, v: &Option<Vec<f64>>| {
            v.clone()
                .ok_or_else(|| CliError::Usage(format!("env.{what} is required for env kind '{name}'")))
        };
        Ok(match name {
            "constant" => EnvKind::Constant {
                levels: need("levels", &e.levels)?,
            },
            "piecewise-jump" => EnvKind::PiecewiseJump {
                initial: need("initial", &e.initial)?,
                jumps: e
                    .jumps
                    .iter()
                    .map(|j| Jump {
                        t: j.t,
                        arm: j.arm,
                        level: j.level,
                    })
                    .collect(),
            },
            "brownian-bernoulli" => EnvKind::brownian_bernoulli(seed),
            "sinusoidal-bernoulli" => EnvKind::sinusoidal_bernoulli(),
            "sinusoidal-pareto" => EnvKind::sinusoidal_pareto(),
            "lower-bound-switching" => match e.budget {
                Some(Budget::Value(budget)) => EnvKind::LowerBoundSwitching { budget, seed },
                _ => {
                    return Err(CliError::Usage(
                        "env.budget must be a number for env kind 'lower-bound-switching'".into(),
                    ))
                }
            },
            other => return Err(CliError::Usage(format!("env.kind: unknown environment '{other}'"))),
        })
    }

    /// The configured environment, with a numeric budget attached as its
    /// declared budget.
    pub fn environment(&self) -> Result<EnvironmentSpec, CliError> {
        let kind = self.env_kind()?;
        let lower_bound = matches!(kind, EnvKind::LowerBoundSwitching { .. });
        let env = EnvironmentSpec::new(self.env.arms.unwrap_or(3), self.env.horizon.unwrap_or(5000), kind)?;
        match self.env.budget {
            Some(Budget::Value(b)) if !lower_bound => Ok(env.with_declared_budget(b)?),
            _ => Ok(env),
        }
    }

    pub fn bound_grid(&self) -> BoundGrid {
        let d = BoundGrid::default();
        BoundGrid {
            xs: self.bounds.xs.clone().unwrap_or(d.xs),
            ls: self.bounds.ls.clone().unwrap_or(d.ls),
            trials: self.bounds.trials.unwrap_or(d.trials),
            seed: self.seed(),
            workers: self.workers(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let cfg = RunConfig::parse(
            r#"
            reps = 20
            seed = 4
            thin = 10

            [env]
            kind = "constant"
            arms = 2
            horizon = 100
            levels = [0.6, 0.5]
            budget = "measured"

            [[policy]]
            kind = "sw-moss"
            eta = 0.8

            [[policy]]
            kind = "r-rmoss"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.reps, Some(20));
        assert_eq!(cfg.env.budget, Some(Budget::Measured));
        assert_eq!(cfg.policies.len(), 2);
        let (kind, params) = cfg.policies[0].resolve().unwrap();
        assert_eq!(kind, PolicyKind::SlidingWindowMoss);
        assert_eq!(params.eta, 0.8);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("repz = 3").is_err());
        assert!(RunConfig::parse("[env]\nhorizn = 3").is_err());
        assert!(RunConfig::parse("[[policy]]\nkind = \"moss\"\nbeta = 1").is_err());
    }

    #[test]
    fn defaults_and_precedence() {
        let cfg = RunConfig::parse("[env]\nhorizon = 100").unwrap();
        let merged = cfg
            .clone()
            .merge(&Overrides {
                horizon: Some(250),
                ..Overrides::default()
            })
            .finish()
            .unwrap();
        assert_eq!(merged.env.horizon, Some(250));
        assert_eq!(merged.reps(), 500);
        assert_eq!(cfg.merge(&Overrides::default()).finish().unwrap().env.horizon, Some(100));
    }

    #[test]
    fn policy_flags_keep_file_parameters() {
        let cfg = RunConfig::parse("[[policy]]\nkind = \"sw-moss\"\neta = 0.9\n[[policy]]\nkind = \"moss\"").unwrap();
        let merged = cfg.merge(&Overrides {
            policies: vec!["sw-moss".into(), "d-ucb".into()],
            ..Overrides::default()
        });
        let kinds: Vec<&str> = merged.policies.iter().map(|p| p.kind.as_str()).collect();
        assert_eq!(kinds, ["sw-moss", "d-ucb"]);
        assert_eq!(merged.policies[0].eta, Some(0.9));
    }

    #[test]
    fn inadmissible_zeta_names_the_condition() {
        let cfg = RunConfig::parse("[[policy]]\nkind = \"sw-rmoss\"\nzeta = 0.1\na = 1.1").unwrap();
        let err = cfg.finish().unwrap_err().to_string();
        assert!(err.contains("sw-rmoss") && err.contains("psi"), "{err}");
        assert!(err.contains("22.0000"), "{err}");
    }

    #[test]
    fn hash_ignores_output_location_and_workers() {
        let a = RunConfig::parse("reps = 3").unwrap().finish().unwrap();
        let mut b = a.clone();
        b.out = Some(PathBuf::from("elsewhere"));
        b.workers = Some(8);
        assert_eq!(a.hash(), b.hash());
        let mut c = a.clone();
        c.reps = Some(4);
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn budget_forms() {
        assert_eq!("measured".parse::<Budget>().unwrap(), Budget::Measured);
        assert_eq!("3".parse::<Budget>().unwrap(), Budget::Value(3.0));
        assert!("lots".parse::<Budget>().is_err());
        let cfg = RunConfig::parse("[env]\nbudget = 3").unwrap();
        assert_eq!(cfg.env.budget, Some(Budget::Value(3.0)));
    }
}
