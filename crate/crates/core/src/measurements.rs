//! Trial ingestion, median/MAD aggregation, speedups and greenups.
//!
//! Raw measurements are long-format rows, one per (page, pass, threads,
//! trial). [`into_trials`] pairs the styling and layout rows of a trial,
//! [`aggregate`] reduces trials to per-(page, threads) medians, and
//! [`speedups`] / [`greenups`] divide the serial median by each
//! configuration's median.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::{estimate_energy, PassKind, PowerModel, TrialResult};
use crate::csvio::{self, Columns};
use crate::error::{Error, Result};

/// One row of the measurements CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRow {
    pub page_id: String,
    pub pass_kind: PassKind,
    pub threads: usize,
    pub trial: usize,
    pub elapsed_ms: f64,
    pub energy_j: Option<f64>,
}

impl MeasurementRow {
    pub fn from_trial(result: &TrialResult, power: Option<&PowerModel>) -> Self {
        MeasurementRow {
            page_id: result.page_id.clone(),
            pass_kind: result.pass_kind,
            threads: result.threads,
            trial: result.trial,
            elapsed_ms: result.elapsed_ms,
            energy_j: power.map(|m| estimate_energy(result, m)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialMeasurement {
    pub page_id: String,
    pub threads: usize,
    pub trial: usize,
    pub style_ms: f64,
    pub layout_ms: f64,
    pub energy_j: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedMeasurement {
    pub page_id: String,
    pub threads: usize,
    pub median_style_ms: f64,
    pub mad_style_ms: f64,
    pub median_layout_ms: f64,
    pub median_energy_j: Option<f64>,
}

/// Per-thread-count ratios against the serial run (`t -> serial / x_t`).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSet {
    pub page_id: String,
    pub entries: BTreeMap<usize, f64>,
}

pub type SpeedupSet = RatioSet;
pub type GreenupSet = RatioSet;

impl RatioSet {
    pub fn get(&self, threads: usize) -> Option<f64> {
        self.entries.get(&threads).copied()
    }
}

/// Sample median; the mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len().is_multiple_of(2) {
        (v[mid - 1] + v[mid]) / 2.0
    } else {
        v[mid]
    })
}

/// Median absolute deviation, `median(|x_i - median(x)|)`, unscaled.
pub fn mad(values: &[f64]) -> Option<f64> {
    let m = median(values)?;
    let dev: Vec<f64> = values.iter().map(|x| (x - m).abs()).collect();
    median(&dev)
}

fn check_non_negative(what: &str, v: f64, line: u64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::Value(format!("line {line}: {what} must be a non-negative number, got {v}")))
    }
}

fn field(rec: &csv::StringRecord, idx: usize, line: u64) -> Result<&str> {
    rec.get(idx)
        .map(str::trim)
        .ok_or_else(|| Error::Schema(format!("line {line}: row is missing fields")))
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str, line: u64) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Value(format!("line {line}: cannot parse {what} `{s}`")))
}

/// Reads measurement rows. Unknown columns are ignored; `energy_j` may be
/// absent or blank.
pub fn parse_measurements<R: Read>(input: R) -> Result<Vec<MeasurementRow>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .clone();
    let cols = Columns::new(headers);
    let page = cols.require("page_id")?;
    let pass = cols.require("pass_kind")?;
    let threads = cols.require("threads")?;
    let trial = cols.require("trial")?;
    let elapsed = cols.require("elapsed_ms")?;
    let energy = cols.optional("energy_j");

    let mut seen = std::collections::BTreeSet::new();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Schema(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = MeasurementRow {
            page_id: field(&rec, page, line)?.to_string(),
            pass_kind: field(&rec, pass, line)?.parse()?,
            threads: parse_num(field(&rec, threads, line)?, "threads", line)?,
            trial: parse_num(field(&rec, trial, line)?, "trial", line)?,
            elapsed_ms: check_non_negative(
                "elapsed_ms",
                parse_num(field(&rec, elapsed, line)?, "elapsed_ms", line)?,
                line,
            )?,
            energy_j: match energy.map(|i| rec.get(i).unwrap_or("").trim()) {
                None | Some("") => None,
                Some(s) => Some(check_non_negative("energy_j", parse_num(s, "energy_j", line)?, line)?),
            },
        };
        if row.threads == 0 {
            return Err(Error::Value(format!("line {line}: threads must be positive")));
        }
        let key = (row.page_id.clone(), row.pass_kind, row.threads, row.trial);
        if !seen.insert(key) {
            return Err(Error::Duplicate(format!(
                "page {} {} threads={} trial={}",
                row.page_id, row.pass_kind, row.threads, row.trial
            )));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a measurements CSV file; one record per data row.
pub fn ingest_csv(path: &Path) -> Result<Vec<MeasurementRow>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_measurements(file)
}

pub fn write_measurements_csv(path: &Path, rows: &[MeasurementRow]) -> Result<()> {
    csvio::write_records(path, rows)
}

/// Pairs the styling and layout rows of each (page, threads, trial).
/// Trial energy is the sum of whatever energy the two rows report.
pub fn into_trials(rows: &[MeasurementRow]) -> Result<Vec<TrialMeasurement>> {
    type Pair = (Option<f64>, Option<f64>, Option<f64>);
    let mut by_key: BTreeMap<(String, usize, usize), Pair> = BTreeMap::new();
    for r in rows {
        let slot = by_key
            .entry((r.page_id.clone(), r.threads, r.trial))
            .or_insert((None, None, None));
        match r.pass_kind {
            PassKind::Styling => slot.0 = Some(r.elapsed_ms),
            PassKind::Layout => slot.1 = Some(r.elapsed_ms),
        }
        if let Some(e) = r.energy_j {
            slot.2 = Some(slot.2.unwrap_or(0.0) + e);
        }
    }
    by_key
        .into_iter()
        .map(|((page_id, threads, trial), (style, layout, energy_j))| {
            let missing = |kind: &str| {
                Error::Schema(format!(
                    "page {page_id} threads={threads} trial={trial} has no {kind} row"
                ))
            };
            Ok(TrialMeasurement {
                style_ms: style.ok_or_else(|| missing("styling"))?,
                layout_ms: layout.ok_or_else(|| missing("layout"))?,
                page_id,
                threads,
                trial,
                energy_j,
            })
        })
        .collect()
}

/// One aggregate per (page, threads), ordered by page then thread count.
pub fn aggregate(trials: &[TrialMeasurement]) -> Result<Vec<AggregatedMeasurement>> {
    let mut groups: BTreeMap<(String, usize), Vec<&TrialMeasurement>> = BTreeMap::new();
    for t in trials {
        groups.entry((t.page_id.clone(), t.threads)).or_default().push(t);
    }
    groups
        .into_iter()
        .map(|((page_id, threads), group)| {
            let style: Vec<f64> = group.iter().map(|t| t.style_ms).collect();
            let layout: Vec<f64> = group.iter().map(|t| t.layout_ms).collect();
            let energy: Vec<f64> = group.iter().filter_map(|t| t.energy_j).collect();
            let empty = || Error::Aggregation(format!("page {page_id} threads={threads} has no trials"));
            Ok(AggregatedMeasurement {
                median_style_ms: median(&style).ok_or_else(empty)?,
                mad_style_ms: mad(&style).ok_or_else(empty)?,
                median_layout_ms: median(&layout).ok_or_else(empty)?,
                median_energy_j: median(&energy),
                page_id,
                threads,
            })
        })
        .collect()
}

/// Externally measured energy for a (page, threads) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub page_id: String,
    pub threads: usize,
    pub energy_j: f64,
}

pub fn read_energy_csv(path: &Path) -> Result<Vec<EnergyRow>> {
    let rows: Vec<EnergyRow> = csvio::read_records(path)?;
    for r in &rows {
        check_non_negative("energy_j", r.energy_j, 0)?;
    }
    Ok(rows)
}

/// Replaces the median energy of every aggregate that has an external reading.
pub fn merge_energy(aggs: &mut [AggregatedMeasurement], energy: &[EnergyRow]) {
    let by_key: BTreeMap<(&str, usize), f64> = energy
        .iter()
        .map(|e| ((e.page_id.as_str(), e.threads), e.energy_j))
        .collect();
    for a in aggs.iter_mut() {
        if let Some(&e) = by_key.get(&(a.page_id.as_str(), a.threads)) {
            a.median_energy_j = Some(e);
        }
    }
}

fn ratios(
    aggs: &[AggregatedMeasurement],
    what: &str,
    value: impl Fn(&AggregatedMeasurement) -> Option<f64>,
) -> Result<RatioSet> {
    let page_id = aggs
        .first()
        .map(|a| a.page_id.clone())
        .ok_or_else(|| Error::Aggregation("no aggregates for page".into()))?;
    let serial = aggs
        .iter()
        .find(|a| a.threads == 1)
        .ok_or_else(|| Error::MissingBaseline(page_id.clone()))?;
    let base = value(serial)
        .ok_or_else(|| Error::DegenerateMeasurement(format!("page {page_id} has no serial {what}")))?;
    if base <= 0.0 {
        return Err(Error::DegenerateMeasurement(format!(
            "page {page_id} serial {what} is {base}"
        )));
    }
    let mut entries = BTreeMap::new();
    for a in aggs {
        if a.page_id != page_id {
            return Err(Error::Aggregation(format!(
                "mixed pages {} and {} in one ratio set",
                page_id, a.page_id
            )));
        }
        let x = value(a).ok_or_else(|| {
            Error::DegenerateMeasurement(format!("page {page_id} threads={} has no {what}", a.threads))
        })?;
        if x <= 0.0 {
            return Err(Error::DegenerateMeasurement(format!(
                "page {page_id} threads={} {what} is {x}",
                a.threads
            )));
        }
        entries.insert(a.threads, if a.threads == 1 { 1.0 } else { base / x });
    }
    Ok(RatioSet { page_id, entries })
}

/// `p_t = x_serial / x_t` over median styling times of one page.
pub fn speedups(aggs: &[AggregatedMeasurement]) -> Result<SpeedupSet> {
    ratios(aggs, "styling time", |a| Some(a.median_style_ms))
}

/// `e_t = y_serial / y_t` over median energies of one page.
pub fn greenups(aggs: &[AggregatedMeasurement]) -> Result<GreenupSet> {
    ratios(aggs, "energy", |a| a.median_energy_j)
}

/// Splits aggregates into contiguous per-page slices (input must be sorted
/// by page, as [`aggregate`] returns it).
pub fn by_page(aggs: &[AggregatedMeasurement]) -> Vec<&[AggregatedMeasurement]> {
    aggs.chunk_by(|a, b| a.page_id == b.page_id).collect()
}

/// Dataset-level spread: for each thread count, the median of per-page MADs.
pub fn mad_summary(aggs: &[AggregatedMeasurement]) -> BTreeMap<usize, f64> {
    let mut per_threads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for a in aggs {
        per_threads.entry(a.threads).or_default().push(a.mad_style_ms);
    }
    per_threads
        .into_iter()
        .filter_map(|(t, v)| median(&v).map(|m| (t, m)))
        .collect()
}

pub fn write_aggregates_csv(path: &Path, aggs: &[AggregatedMeasurement]) -> Result<()> {
    csvio::write_records(path, aggs)
}

/// One row of the speedup/greenup CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub page_id: String,
    pub threads: usize,
    pub p_t: f64,
    pub e_t: Option<f64>,
}

pub fn ratio_rows(speedups: &[SpeedupSet], greenups: &[GreenupSet]) -> Vec<RatioRow> {
    let green: BTreeMap<&str, &GreenupSet> =
        greenups.iter().map(|g| (g.page_id.as_str(), g)).collect();
    speedups
        .iter()
        .flat_map(|s| {
            let g = green.get(s.page_id.as_str()).copied();
            s.entries.iter().map(move |(&threads, &p_t)| RatioRow {
                page_id: s.page_id.clone(),
                threads,
                p_t,
                e_t: g.and_then(|g| g.get(threads)),
            })
        })
        .collect()
}

/// Regroups ratio rows into per-page speedup and greenup sets. A page's
/// greenup set is present only if every row for it carries `e_t`.
pub fn ratio_sets(rows: &[RatioRow]) -> (Vec<SpeedupSet>, Vec<GreenupSet>) {
    let mut pages: BTreeMap<&str, Vec<&RatioRow>> = BTreeMap::new();
    for r in rows {
        pages.entry(r.page_id.as_str()).or_default().push(r);
    }
    let mut sp = Vec::new();
    let mut gr = Vec::new();
    for (page, rs) in pages {
        sp.push(RatioSet {
            page_id: page.to_string(),
            entries: rs.iter().map(|r| (r.threads, r.p_t)).collect(),
        });
        if rs.iter().all(|r| r.e_t.is_some()) {
            gr.push(RatioSet {
                page_id: page.to_string(),
                entries: rs.iter().map(|r| (r.threads, r.e_t.unwrap())).collect(),
            });
        }
    }
    (sp, gr)
}

pub fn write_ratios_csv(path: &Path, rows: &[RatioRow]) -> Result<()> {
    csvio::write_records(path, rows)
}

pub fn read_ratios_csv(path: &Path) -> Result<Vec<RatioRow>> {
    csvio::read_records(path)
}
