//! Parallel traversal workloads and the benchmark driver that produces the
//! measurement dataset.

mod passes;
mod pool;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use passes::{
    layout_pass, layout_pass_traced, layout_pass_with, styling_checksum_sequential, styling_pass,
    styling_pass_traced, work_kernel, HeightRule, VisitLog,
};
pub use synth::{generate_tree, SyntheticTreeSpec};

use crate::dom::DomTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassKind {
    Styling,
    Layout,
}

impl fmt::Display for PassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PassKind::Styling => "styling",
            PassKind::Layout => "layout",
        })
    }
}

impl FromStr for PassKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "styling" => Ok(PassKind::Styling),
            "layout" => Ok(PassKind::Layout),
            other => Err(Error::Value(format!("unknown pass kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub page_id: String,
    pub pass_kind: PassKind,
    pub threads: usize,
    pub trial: usize,
    pub elapsed_ms: f64,
    pub checksum: u64,
    pub per_worker_busy_ms: Vec<f64>,
    /// Nodes whose result slot was finalized during the pass.
    pub visits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkConfig {
    pub thread_counts: Vec<usize>,
    pub trials: usize,
    pub work_units: u32,
}

impl Default for WorkConfig {
    fn default() -> Self {
        WorkConfig {
            thread_counts: vec![1, 2, 4],
            trials: 5,
            work_units: 64,
        }
    }
}

impl WorkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.thread_counts.contains(&0) {
            return Err(Error::Config("thread counts must be positive".into()));
        }
        if !self.thread_counts.contains(&1) {
            return Err(Error::Config("thread counts must include the serial baseline 1".into()));
        }
        let mut sorted = self.thread_counts.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.thread_counts.len() {
            return Err(Error::Config("thread counts must be distinct".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.work_units == 0 {
            return Err(Error::Config("per-node work units must be at least 1".into()));
        }
        Ok(())
    }
}

/// Linear power model used to estimate energy from timings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModel {
    pub idle_power_w: f64,
    pub core_power_w: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            idle_power_w: 10.0,
            core_power_w: 5.0,
        }
    }
}

impl PowerModel {
    pub fn new(idle_power_w: f64, core_power_w: f64) -> Result<Self> {
        if !(idle_power_w >= 0.0 && core_power_w >= 0.0) {
            return Err(Error::Config(format!(
                "power model needs non-negative watts, got idle={idle_power_w} core={core_power_w}"
            )));
        }
        Ok(PowerModel {
            idle_power_w,
            core_power_w,
        })
    }
}

/// `idle * elapsed + core * sum(busy)`, in joules.
pub fn estimate_energy(result: &TrialResult, model: &PowerModel) -> f64 {
    let elapsed_s = result.elapsed_ms / 1e3;
    let busy_s: f64 = result.per_worker_busy_ms.iter().sum::<f64>() / 1e3;
    model.idle_power_w * elapsed_s + model.core_power_w * busy_s
}

/// Runs every (thread count, trial) combination of both passes on one tree.
/// Results are in execution order: thread counts as configured, trials
/// ascending, styling before layout within a trial.
pub fn run_bench(page_id: &str, tree: &DomTree, config: &WorkConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.thread_counts.len() * config.trials * 2);
    for &threads in &config.thread_counts {
        for trial in 0..config.trials {
            for mut r in [
                styling_pass(tree, threads, config.work_units),
                layout_pass(tree, threads, config.work_units),
            ] {
                r.page_id = page_id.to_string();
                r.trial = trial;
                out.push(r);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(elapsed_ms: f64, busy: Vec<f64>) -> TrialResult {
        TrialResult {
            page_id: "p".into(),
            pass_kind: PassKind::Styling,
            threads: busy.len(),
            trial: 0,
            elapsed_ms,
            checksum: 0,
            per_worker_busy_ms: busy,
            visits: 0,
        }
    }

    #[test]
    fn energy_formula() {
        let m = PowerModel::new(10.0, 5.0).unwrap();
        assert_eq!(estimate_energy(&result(1000.0, vec![1000.0]), &m), 15.0);
        assert_eq!(estimate_energy(&result(250.0, vec![0.0, 0.0]), &m), 2.5);
        let one = estimate_energy(&result(100.0, vec![30.0, 40.0]), &PowerModel::new(0.0, 5.0).unwrap());
        let two = estimate_energy(&result(100.0, vec![60.0, 80.0]), &PowerModel::new(0.0, 5.0).unwrap());
        assert!((two - 2.0 * one).abs() < 1e-15);
    }

    #[test]
    fn negative_power_rejected() {
        assert!(PowerModel::new(-1.0, 1.0).is_err());
        assert!(PowerModel::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn work_config_validation() {
        assert!(WorkConfig::default().validate().is_ok());
        for bad in [
            WorkConfig { thread_counts: vec![2, 4], ..Default::default() },
            WorkConfig { thread_counts: vec![1, 2, 2], ..Default::default() },
            WorkConfig { thread_counts: vec![0, 1], ..Default::default() },
            WorkConfig { trials: 0, ..Default::default() },
            WorkConfig { work_units: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn bench_result_counts() {
        let tree = generate_tree(&SyntheticTreeSpec::wide(60, 1)).unwrap();
        let cfg = WorkConfig { thread_counts: vec![1, 2, 4], trials: 5, work_units: 1 };
        let rs = run_bench("w", &tree, &cfg).unwrap();
        assert_eq!(rs.iter().filter(|r| r.pass_kind == PassKind::Styling).count(), 15);
        assert_eq!(rs.iter().filter(|r| r.pass_kind == PassKind::Layout).count(), 15);
        for kind in [PassKind::Styling, PassKind::Layout] {
            let mut sums = rs.iter().filter(|r| r.pass_kind == kind).map(|r| r.checksum);
            let first = sums.next().unwrap();
            assert!(sums.all(|c| c == first));
        }

        let cfg = WorkConfig { thread_counts: vec![1], trials: 1, work_units: 1 };
        assert_eq!(run_bench("w", &tree, &cfg).unwrap().len(), 2);
    }

    #[test]
    fn pass_kind_parse() {
        assert_eq!("layout".parse::<PassKind>().unwrap(), PassKind::Layout);
        assert!("paint".parse::<PassKind>().is_err());
        assert_eq!(PassKind::Styling.to_string(), "styling");
    }
}
