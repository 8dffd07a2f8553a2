//! Cost models that turn a page's speedups and greenups into a nominal
//! thread-count label.
//!
//! * Performance: the thread count with the largest speedup, if that
//!   speedup clears `p_min`; otherwise serial.
//! * Energy: the same rule over greenups and `e_min`.
//! * Performance-energy: speedups above `p_min` are grouped into buckets
//!   `(P_j, P_{j+1}]`, each with a greenup floor `E_j`. Buckets are scanned
//!   from the fastest down, and within a bucket by descending speedup; the
//!   first configuration whose greenup exceeds its bucket's floor wins and
//!   ends the scan.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurements::{GreenupSet, SpeedupSet};

pub const SERIAL: usize = 1;

/// Default significance threshold for speedups (and greenups).
pub const DEFAULT_P_MIN: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    Perf,
    Energy,
    PerfEnergy,
}

impl fmt::Display for CostModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostModel::Perf => "perf",
            CostModel::Energy => "energy",
            CostModel::PerfEnergy => "perf_energy",
        })
    }
}

impl FromStr for CostModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "perf" => Ok(CostModel::Perf),
            "energy" => Ok(CostModel::Energy),
            "perf_energy" => Ok(CostModel::PerfEnergy),
            other => Err(Error::Config(format!(
                "unknown cost model `{other}` (expected perf, energy or perf_energy)"
            ))),
        }
    }
}

/// Performance-energy tuple for one parallel configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pet {
    pub threads: usize,
    pub speedup: f64,
    pub greenup: f64,
}

/// Builds PETs for every non-serial thread count present in both sets.
pub fn pets(speedups: &SpeedupSet, greenups: &GreenupSet) -> Vec<Pet> {
    speedups
        .entries
        .iter()
        .filter(|(&t, _)| t != SERIAL)
        .filter_map(|(&t, &p)| {
            greenups.get(t).map(|e| Pet {
                threads: t,
                speedup: p,
                greenup: e,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PetBucketConfig {
    /// `P_1 .. P_{M+1}`; `P_1` is `p_min` and the last may be infinite.
    pub boundaries: Vec<f64>,
    /// `E_1 .. E_M`, one greenup floor per bucket.
    pub energy_limits: Vec<f64>,
}

impl Default for PetBucketConfig {
    fn default() -> Self {
        PetBucketConfig {
            boundaries: vec![DEFAULT_P_MIN, 1.3, f64::INFINITY],
            energy_limits: vec![0.9, 0.85],
        }
    }
}

impl PetBucketConfig {
    pub fn new(boundaries: Vec<f64>, energy_limits: Vec<f64>) -> Result<Self> {
        let c = PetBucketConfig {
            boundaries,
            energy_limits,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn p_min(&self) -> f64 {
        self.boundaries[0]
    }

    pub fn buckets(&self) -> usize {
        self.energy_limits.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundaries.len() < 2 {
            return Err(Error::Config("need at least two bucket boundaries".into()));
        }
        if self.energy_limits.len() != self.boundaries.len() - 1 {
            return Err(Error::Config(format!(
                "{} boundaries need {} energy limits, got {}",
                self.boundaries.len(),
                self.boundaries.len() - 1,
                self.energy_limits.len()
            )));
        }
        if self.boundaries.iter().any(|b| b.is_nan()) || self.energy_limits.iter().any(|e| !e.is_finite()) {
            return Err(Error::Config("bucket values must be numbers".into()));
        }
        if !(self.p_min() > 1.0 && self.p_min().is_finite()) {
            return Err(Error::Config(format!("p_min must be > 1, got {}", self.p_min())));
        }
        if self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("bucket boundaries must be strictly ascending".into()));
        }
        Ok(())
    }

    /// Index of the bucket holding speedup `p`, for `p > p_min`. Speedups
    /// above the top boundary fall into the top bucket.
    pub fn bucket_of(&self, p: f64) -> Option<usize> {
        if p.is_nan() || p <= self.p_min() {
            return None;
        }
        let m = self.buckets();
        Some(
            (0..m)
                .find(|&j| p <= self.boundaries[j + 1])
                .unwrap_or(m - 1),
        )
    }
}

/// Largest ratio wins if it exceeds `threshold`; ties go to fewer threads.
fn max_ratio_label(entries: impl Iterator<Item = (usize, f64)>, threshold: f64) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for (t, r) in entries {
        best = match best {
            Some((bt, br)) if br > r || (br == r && bt < t) => Some((bt, br)),
            _ => Some((t, r)),
        };
    }
    match best {
        Some((t, r)) if r > threshold => t,
        _ => SERIAL,
    }
}

pub fn performance_label(speedups: &SpeedupSet, p_min: f64) -> usize {
    max_ratio_label(speedups.entries.iter().map(|(&t, &p)| (t, p)), p_min)
}

pub fn energy_label(greenups: &GreenupSet, e_min: f64) -> usize {
    max_ratio_label(greenups.entries.iter().map(|(&t, &e)| (t, e)), e_min)
}

pub fn performance_energy_label(pets: &[Pet], config: &PetBucketConfig) -> usize {
    let mut buckets: Vec<Vec<Pet>> = vec![Vec::new(); config.buckets()];
    for pet in pets.iter().filter(|p| p.threads != SERIAL) {
        if let Some(j) = config.bucket_of(pet.speedup) {
            buckets[j].push(*pet);
        }
    }
    for (j, bucket) in buckets.iter_mut().enumerate().rev() {
        bucket.sort_by(|a, b| {
            b.speedup
                .total_cmp(&a.speedup)
                .then(a.threads.cmp(&b.threads))
        });
        if let Some(pet) = bucket.iter().find(|p| p.greenup > config.energy_limits[j]) {
            return pet.threads;
        }
    }
    SERIAL
}

/// One row of the labels CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRow {
    pub page_id: String,
    pub label: usize,
    pub cost_model: CostModel,
}
