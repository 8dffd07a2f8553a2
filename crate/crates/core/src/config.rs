//! Flat `key = value` configuration files.
//!
//! ```text
//! # benchmark
//! thread_counts = 1, 2, 4
//! trials = 5
//! per_node_work_units = 64
//! idle_power_w = 10
//! core_power_w = 5
//! seed = 7
//!
//! # labeling
//! p_min = 1.1
//! boundaries = 1.1, 1.3, inf
//! energy_limits = 0.9, 0.85
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::bench::{PowerModel, WorkConfig};
use crate::error::{Error, Result};
use crate::labeling::{CostModel, PetBucketConfig, DEFAULT_P_MIN};
use crate::learn::MnrHyperparams;

pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let key = k.trim().to_string();
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{key}`", n + 1)));
        }
    }
    Ok(out)
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| scalar(key, s))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub work: WorkConfig,
    pub power: PowerModel,
    pub buckets: PetBucketConfig,
    /// Greenup threshold for the energy-only cost model.
    pub e_min: f64,
    pub cost_model: CostModel,
    pub cv_folds: usize,
    pub seed: u64,
    pub mnr: MnrHyperparams,
    /// Minimum max-|R| for a feature to be used by the classifier.
    pub select_threshold: f64,
    /// Thread count the savings report compares against; the largest
    /// configured count when unset.
    pub default_threads: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            work: WorkConfig::default(),
            power: PowerModel::default(),
            buckets: PetBucketConfig::default(),
            e_min: DEFAULT_P_MIN,
            cost_model: CostModel::PerfEnergy,
            cv_folds: 10,
            seed: 0,
            mnr: MnrHyperparams::default(),
            select_threshold: 0.1,
            default_threads: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        let kv = parse_key_values(text)?;
        let mut p_min: Option<f64> = None;
        let mut boundaries: Option<Vec<f64>> = None;
        for (k, v) in &kv {
            match k.as_str() {
                "thread_counts" => c.work.thread_counts = list(k, v)?,
                "trials" => c.work.trials = scalar(k, v)?,
                "per_node_work_units" => c.work.work_units = scalar(k, v)?,
                "idle_power_w" => c.power.idle_power_w = scalar(k, v)?,
                "core_power_w" => c.power.core_power_w = scalar(k, v)?,
                "seed" => c.seed = scalar(k, v)?,
                "p_min" => p_min = Some(scalar(k, v)?),
                "boundaries" => boundaries = Some(list(k, v)?),
                "energy_limits" => c.buckets.energy_limits = list(k, v)?,
                "e_min" => c.e_min = scalar(k, v)?,
                "cost_model" => c.cost_model = v.parse()?,
                "cv_folds" => c.cv_folds = scalar(k, v)?,
                "l2" => c.mnr.l2 = scalar(k, v)?,
                "max_iterations" => c.mnr.max_iterations = scalar(k, v)?,
                "tolerance" => c.mnr.tolerance = scalar(k, v)?,
                "select_threshold" => c.select_threshold = scalar(k, v)?,
                "default_threads" => c.default_threads = Some(scalar(k, v)?),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        if let Some(b) = boundaries {
            c.buckets.boundaries = b;
        }
        if let Some(p) = p_min {
            if kv.contains_key("boundaries") {
                if c.buckets.boundaries.first() != Some(&p) {
                    return Err(Error::Config(format!(
                        "p_min {p} must equal the first bucket boundary"
                    )));
                }
            } else if let Some(first) = c.buckets.boundaries.first_mut() {
                *first = p;
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.work.validate()?;
        PowerModel::new(self.power.idle_power_w, self.power.core_power_w)?;
        self.buckets.validate()?;
        if self.cv_folds < 2 {
            return Err(Error::Config("cv_folds must be at least 2".into()));
        }
        if self.mnr.l2.is_nan() || self.mnr.l2 < 0.0 {
            return Err(Error::Config("l2 must be non-negative".into()));
        }
        if let Some(t) = self.default_threads {
            if !self.work.thread_counts.contains(&t) {
                return Err(Error::Config(format!(
                    "default_threads {t} is not one of the thread counts"
                )));
            }
        }
        Ok(())
    }

    pub fn default_threads(&self) -> usize {
        self.default_threads
            .unwrap_or_else(|| self.work.thread_counts.iter().copied().max().unwrap_or(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_constants() {
        let c = PipelineConfig::default();
        assert_eq!(c.work.thread_counts, vec![1, 2, 4]);
        assert_eq!(c.work.trials, 5);
        assert_eq!(c.buckets.p_min(), 1.1);
        assert_eq!(c.buckets.boundaries[1], 1.3);
        assert_eq!(c.buckets.energy_limits, vec![0.9, 0.85]);
        assert_eq!(c.cv_folds, 10);
        assert_eq!(c.cost_model, CostModel::PerfEnergy);
        assert_eq!(c.default_threads(), 4);
    }

    #[test]
    fn parses_file() {
        let c = PipelineConfig::from_text(
            "# comment\nthread_counts = 1, 2\ntrials: 3\nper_node_work_units=10\n\
             idle_power_w = 2.5\ncore_power_w = 1\nseed = 9\n\
             p_min = 1.2\nboundaries = 1.2, 2, inf\nenergy_limits = 0.8, 0.7\n\
             cost_model = perf # inline comment\n",
        )
        .unwrap();
        assert_eq!(c.work.thread_counts, vec![1, 2]);
        assert_eq!(c.work.trials, 3);
        assert_eq!(c.work.work_units, 10);
        assert_eq!(c.power.idle_power_w, 2.5);
        assert_eq!(c.seed, 9);
        assert_eq!(c.buckets.boundaries, vec![1.2, 2.0, f64::INFINITY]);
        assert_eq!(c.cost_model, CostModel::Perf);
        assert_eq!(c.default_threads(), 2);
    }

    #[test]
    fn p_min_alone_moves_first_boundary() {
        let c = PipelineConfig::from_text("p_min = 1.05").unwrap();
        assert_eq!(c.buckets.boundaries[0], 1.05);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "bogus = 1",
            "trials = many",
            "thread_counts = 2, 4",
            "p_min = 1.2\nboundaries = 1.1, 1.3, inf",
            "energy_limits = 0.9",
            "no equals sign",
            "seed = 1\nseed = 2",
            "cost_model = cheapest",
            "default_threads = 8",
        ] {
            assert!(PipelineConfig::from_text(text).is_err(), "{text}");
        }
    }
}
