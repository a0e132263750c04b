//! Plain-text `key = value` configuration shared by every front end.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Unknown keys are errors. Later assignments override earlier ones, so
//! command-line overrides are applied with [`RunConfig::set`] after the file.
//! [`RunConfig::echo`] renders the fully resolved configuration in the same
//! syntax, and parsing the echo reproduces the configuration.

use crate::arco::{ArcoParams, AssignmentRule, ExogKind, PropensityParams, SimConfig};
use crate::dataset::{fmt_f64, CsvOptions};
use crate::error::{Error, Result};
use crate::features::{FeatureSpec, OutcomeLag};
use crate::harness::{MethodConfigs, MethodId, Study};
use crate::oracle::{EnumMode, EnumSpec};
use crate::seed::SeedSpec;

/// Every documented key, in echo order.
pub const KEYS: &[&str] = &[
    "beta0",
    "betaX",
    "beta_co",
    "beta_Xco",
    "beta_ar",
    "beta_Xar",
    "beta_ex",
    "sigma_eps",
    "alpha0",
    "alpha_en",
    "alpha_ar",
    "alpha_ex",
    "pi1",
    "lag_center",
    "assignment",
    "m",
    "burn_in",
    "seed",
    "randomized",
    "randomized_pi",
    "exog",
    "r_min",
    "r_max",
    "stop_tol",
    "stop_window",
    "ci_level",
    "trim_lo",
    "trim_hi",
    "overlap",
    "stabilized",
    "n_trees",
    "mtry",
    "min_node_outcome",
    "min_node_propensity",
    "max_depth",
    "outcome_lag",
    "use_exposure_lag1",
    "exog_columns",
    "log10_y",
    "dichotomize_x",
    "H",
    "methods",
    "workers",
    "oracle_m",
    "oracle_mode",
    "oracle_m1",
    "oracle_pi",
    "y_init",
    "x_init",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Iid,
    Permutation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSettings {
    pub m: usize,
    pub mode: OracleMode,
    pub m1: usize,
    pub pi: f64,
    /// `None`: the noise-free first simulated outcome, `beta0`.
    pub y_init: Option<f64>,
    pub x_init: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub arco: ArcoParams,
    pub propensity: PropensityParams,
    pub sim: SimConfig,
    pub methods_cfg: MethodConfigs,
    pub csv: CsvOptions,
    pub h: usize,
    pub methods: Vec<MethodId>,
    pub workers: usize,
    pub oracle: OracleSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            arco: ArcoParams::benchmark(),
            propensity: PropensityParams::benchmark(),
            sim: SimConfig::default(),
            methods_cfg: MethodConfigs::default(),
            csv: CsvOptions::default(),
            h: 100,
            methods: MethodId::ALL.to_vec(),
            workers: 1,
            oracle: OracleSettings {
                m: 8,
                mode: OracleMode::Permutation,
                m1: 4,
                pi: 0.5,
                y_init: None,
                x_init: 0,
            },
        }
    }
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key} = `{value}`: expected {what}"))
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| bad(key, v, "a number"))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| bad(key, v, "a non-negative integer"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, v, "true or false")),
    }
}

fn split_list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty() && *s != "none").collect()
}

fn parse_f64_list(key: &str, v: &str) -> Result<Vec<f64>> {
    split_list(v).into_iter().map(|s| parse_f64(key, s)).collect()
}

fn opt_usize(key: &str, v: &str) -> Result<Option<usize>> {
    match v {
        "auto" | "none" => Ok(None),
        _ => parse_usize(key, v).map(Some),
    }
}

fn fmt_list(v: &[f64]) -> String {
    if v.is_empty() {
        "none".into()
    } else {
        v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",")
    }
}

fn fmt_opt(v: Option<usize>, none: &str) -> String {
    v.map_or_else(|| none.to_string(), |n| n.to_string())
}

impl RunConfig {
    /// Defaults for replication studies: forests of 100 trees.
    pub fn replication() -> Self {
        Self {
            methods_cfg: MethodConfigs::replication(),
            ..Self::default()
        }
    }

    /// Apply `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// Apply one override given as `key=value`.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let mc = &mut self.methods_cfg;
        match key {
            "beta0" => self.arco.beta0 = parse_f64(key, v)?,
            "betaX" => self.arco.beta_x = parse_f64(key, v)?,
            "beta_co" => self.arco.beta_co = parse_f64(key, v)?,
            "beta_Xco" => self.arco.beta_xco = parse_f64(key, v)?,
            "beta_ar" => self.arco.beta_ar = parse_f64(key, v)?,
            "beta_Xar" => self.arco.beta_xar = parse_f64(key, v)?,
            "beta_ex" => self.arco.beta_ex = parse_f64_list(key, v)?,
            "sigma_eps" => self.arco.sigma_eps = parse_f64(key, v)?,
            "alpha0" => self.propensity.alpha0 = parse_f64(key, v)?,
            "alpha_en" => self.propensity.alpha_en = parse_f64(key, v)?,
            "alpha_ar" => self.propensity.alpha_ar = parse_f64(key, v)?,
            "alpha_ex" => self.propensity.alpha_ex = parse_f64_list(key, v)?,
            "pi1" => self.propensity.pi1 = parse_f64(key, v)?,
            "lag_center" => self.propensity.lag_center = parse_f64(key, v)?,
            "assignment" => {
                self.propensity.assignment = match v {
                    "direct" => AssignmentRule::Direct,
                    "complement" => AssignmentRule::Complement,
                    _ => return Err(bad(key, v, "direct or complement")),
                }
            }
            "m" => self.sim.m_analysis = parse_usize(key, v)?,
            "burn_in" => self.sim.burn_in = parse_usize(key, v)?,
            "seed" => {
                let s = SeedSpec::new(v.parse::<u64>().map_err(|_| bad(key, v, "an unsigned 64-bit integer"))?);
                self.sim.seed = s;
                mc.motr.seed = s;
                mc.outcome_forest.seed = s;
                mc.propensity_forest.seed = s;
            }
            "randomized" => self.sim.randomized_mode = parse_bool(key, v)?,
            "randomized_pi" => self.sim.randomized_pi = parse_f64(key, v)?,
            "exog" => {
                self.sim.exog = split_list(v)
                    .into_iter()
                    .map(|s| match s {
                        "weekend" => Ok(ExogKind::Weekend),
                        _ => Err(bad(key, v, "a list of: weekend")),
                    })
                    .collect::<Result<_>>()?
            }
            "r_min" => mc.motr.r_min = parse_usize(key, v)?,
            "r_max" => mc.motr.r_max = parse_usize(key, v)?,
            "stop_tol" => mc.motr.stop_tol = parse_f64(key, v)?,
            "stop_window" => mc.motr.stop_window = parse_usize(key, v)?,
            "ci_level" => {
                let l = parse_f64(key, v)?;
                if !(l > 0.0 && l < 1.0) {
                    return Err(bad(key, v, "a level in (0, 1)"));
                }
                mc.ci_level = l;
                mc.motr.ci_level = l;
            }
            "trim_lo" => mc.pstn.trim_lo = parse_f64(key, v)?,
            "trim_hi" => mc.pstn.trim_hi = parse_f64(key, v)?,
            "overlap" => mc.pstn.use_overlap = parse_bool(key, v)?,
            "stabilized" => mc.pstn.use_stabilized = parse_bool(key, v)?,
            "n_trees" => {
                let n = parse_usize(key, v)?;
                if n == 0 {
                    return Err(bad(key, v, "a positive integer"));
                }
                mc.outcome_forest.n_trees = n;
                mc.propensity_forest.n_trees = n;
            }
            "mtry" => {
                let m = opt_usize(key, v)?;
                mc.outcome_forest.mtry = m;
                mc.propensity_forest.mtry = m;
            }
            "min_node_outcome" => mc.outcome_forest.min_node_size = opt_usize(key, v)?,
            "min_node_propensity" => mc.propensity_forest.min_node_size = opt_usize(key, v)?,
            "max_depth" => {
                let d = opt_usize(key, v)?;
                mc.outcome_forest.max_depth = d;
                mc.propensity_forest.max_depth = d;
            }
            "outcome_lag" => {
                let mode = match v {
                    "continuous" => OutcomeLag::ContinuousLag1,
                    "quartile" => OutcomeLag::QuartileLag1,
                    "none" => OutcomeLag::None,
                    _ => return Err(bad(key, v, "continuous, quartile or none")),
                };
                mc.outcome_features.outcome_lag_mode = mode;
                mc.propensity_features.outcome_lag_mode = mode;
            }
            "use_exposure_lag1" => {
                let b = parse_bool(key, v)?;
                mc.outcome_features.use_exposure_lag1 = b;
                mc.propensity_features.use_exposure_lag1 = b;
            }
            "exog_columns" => {
                let names: Vec<String> = split_list(v).into_iter().map(String::from).collect();
                mc.outcome_features.exog_names = names.clone();
                mc.propensity_features.exog_names = names;
            }
            "log10_y" => self.csv.log10_y = parse_bool(key, v)?,
            "dichotomize_x" => self.csv.dichotomize_x = parse_bool(key, v)?,
            "H" => self.h = parse_usize(key, v)?,
            "methods" => {
                let ms = split_list(v).into_iter().map(str::parse).collect::<Result<Vec<MethodId>>>()?;
                if ms.is_empty() {
                    return Err(bad(key, v, "at least one method"));
                }
                self.methods = ms;
            }
            "workers" => {
                let w = parse_usize(key, v)?;
                if w == 0 {
                    return Err(bad(key, v, "a positive integer"));
                }
                self.workers = w;
            }
            "oracle_m" => self.oracle.m = parse_usize(key, v)?,
            "oracle_mode" => {
                self.oracle.mode = match v {
                    "iid" => OracleMode::Iid,
                    "permutation" => OracleMode::Permutation,
                    _ => return Err(bad(key, v, "iid or permutation")),
                }
            }
            "oracle_m1" => self.oracle.m1 = parse_usize(key, v)?,
            "oracle_pi" => self.oracle.pi = parse_f64(key, v)?,
            "y_init" => {
                self.oracle.y_init = match v {
                    "auto" => None,
                    _ => Some(parse_f64(key, v)?),
                }
            }
            "x_init" => {
                self.oracle.x_init = match v {
                    "0" => 0,
                    "1" => 1,
                    _ => return Err(bad(key, v, "0 or 1")),
                }
            }
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let mc = &self.methods_cfg;
        let b = |x: bool| x.to_string();
        Some(match key {
            "beta0" => fmt_f64(self.arco.beta0),
            "betaX" => fmt_f64(self.arco.beta_x),
            "beta_co" => fmt_f64(self.arco.beta_co),
            "beta_Xco" => fmt_f64(self.arco.beta_xco),
            "beta_ar" => fmt_f64(self.arco.beta_ar),
            "beta_Xar" => fmt_f64(self.arco.beta_xar),
            "beta_ex" => fmt_list(&self.arco.beta_ex),
            "sigma_eps" => fmt_f64(self.arco.sigma_eps),
            "alpha0" => fmt_f64(self.propensity.alpha0),
            "alpha_en" => fmt_f64(self.propensity.alpha_en),
            "alpha_ar" => fmt_f64(self.propensity.alpha_ar),
            "alpha_ex" => fmt_list(&self.propensity.alpha_ex),
            "pi1" => fmt_f64(self.propensity.pi1),
            "lag_center" => fmt_f64(self.propensity.lag_center),
            "assignment" => match self.propensity.assignment {
                AssignmentRule::Direct => "direct".into(),
                AssignmentRule::Complement => "complement".into(),
            },
            "m" => self.sim.m_analysis.to_string(),
            "burn_in" => self.sim.burn_in.to_string(),
            "seed" => self.sim.seed.base_seed.to_string(),
            "randomized" => b(self.sim.randomized_mode),
            "randomized_pi" => fmt_f64(self.sim.randomized_pi),
            "exog" => {
                if self.sim.exog.is_empty() {
                    "none".into()
                } else {
                    self.sim.exog.iter().map(|e| e.name()).collect::<Vec<_>>().join(",")
                }
            }
            "r_min" => mc.motr.r_min.to_string(),
            "r_max" => mc.motr.r_max.to_string(),
            "stop_tol" => fmt_f64(mc.motr.stop_tol),
            "stop_window" => mc.motr.stop_window.to_string(),
            "ci_level" => fmt_f64(mc.ci_level),
            "trim_lo" => fmt_f64(mc.pstn.trim_lo),
            "trim_hi" => fmt_f64(mc.pstn.trim_hi),
            "overlap" => b(mc.pstn.use_overlap),
            "stabilized" => b(mc.pstn.use_stabilized),
            "n_trees" => mc.outcome_forest.n_trees.to_string(),
            "mtry" => fmt_opt(mc.outcome_forest.mtry, "auto"),
            "min_node_outcome" => fmt_opt(mc.outcome_forest.min_node_size, "auto"),
            "min_node_propensity" => fmt_opt(mc.propensity_forest.min_node_size, "auto"),
            "max_depth" => fmt_opt(mc.outcome_forest.max_depth, "none"),
            "outcome_lag" => match mc.outcome_features.outcome_lag_mode {
                OutcomeLag::ContinuousLag1 => "continuous".into(),
                OutcomeLag::QuartileLag1 => "quartile".into(),
                OutcomeLag::None => "none".into(),
            },
            "use_exposure_lag1" => b(mc.outcome_features.use_exposure_lag1),
            "exog_columns" => {
                let n = &mc.outcome_features.exog_names;
                if n.is_empty() {
                    "none".into()
                } else {
                    n.join(",")
                }
            }
            "log10_y" => b(self.csv.log10_y),
            "dichotomize_x" => b(self.csv.dichotomize_x),
            "H" => self.h.to_string(),
            "methods" => self.methods.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","),
            "workers" => self.workers.to_string(),
            "oracle_m" => self.oracle.m.to_string(),
            "oracle_mode" => match self.oracle.mode {
                OracleMode::Iid => "iid".into(),
                OracleMode::Permutation => "permutation".into(),
            },
            "oracle_m1" => self.oracle.m1.to_string(),
            "oracle_pi" => fmt_f64(self.oracle.pi),
            "y_init" => self.oracle.y_init.map_or_else(|| "auto".into(), fmt_f64),
            "x_init" => self.oracle.x_init.to_string(),
            _ => return None,
        })
    }

    /// The resolved configuration as `key = value` lines, in [`KEYS`] order.
    pub fn echo(&self) -> Vec<String> {
        KEYS.iter()
            .map(|k| format!("{k} = {}", self.get(k).expect("documented key")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.arco.validate()?;
        self.propensity.validate()?;
        self.sim.validate()?;
        self.methods_cfg.motr.validate()?;
        self.methods_cfg.pstn.validate()?;
        Ok(())
    }

    pub fn study(&self) -> Study {
        Study {
            h: self.h,
            arco: self.arco.clone(),
            propensity: self.propensity.clone(),
            sim: self.sim.clone(),
            methods: self.methods.clone(),
            configs: self.methods_cfg.clone(),
            seed: self.sim.seed,
            workers: self.workers,
        }
    }

    pub fn enum_spec(&self) -> EnumSpec {
        let o = &self.oracle;
        EnumSpec {
            m: o.m,
            mode: match o.mode {
                OracleMode::Iid => EnumMode::IidBernoulli { pi: o.pi },
                OracleMode::Permutation => EnumMode::Permutation { m1: o.m1 },
            },
            params: self.arco.clone(),
            exog: Vec::new(),
            y_init: o.y_init.unwrap_or(self.arco.beta0),
            x_init: o.x_init,
        }
    }

    pub fn outcome_features(&self) -> &FeatureSpec {
        &self.methods_cfg.outcome_features
    }
}

fn strip_prefix(e: &Error) -> String {
    let s = e.to_string();
    s.strip_prefix("config error: ").map(String::from).unwrap_or(s)
}
