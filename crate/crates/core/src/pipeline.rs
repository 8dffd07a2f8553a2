//! End-to-end stages behind the command-line subcommands. Each stage reads
//! its inputs from files, writes CSV/JSON artifacts into an output
//! directory and returns what it wrote.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bench::{generate_tree, run_bench, SyntheticTreeSpec};
use crate::config::PipelineConfig;
use crate::csvio;
use crate::dom::{compute_features, parse_html, width_profile, DomTree, PageFeatures};
use crate::error::{Error, Result};
use crate::labeling::{
    energy_label, performance_energy_label, performance_label, pets, CostModel, LabelRow,
};
use crate::learn::{
    correlation_report, cross_validate, mnr_fit, mnr_predict, mnr_predict_proba, savings_report,
    select_features, CvReport, FeatureMatrix, MnrModel, SavingsRow,
};
use crate::measurements::{
    aggregate, by_page, greenups, ingest_csv, into_trials, mad_summary, merge_energy,
    ratio_rows, ratio_sets, read_energy_csv, read_ratios_csv, speedups, write_aggregates_csv,
    write_measurements_csv, write_ratios_csv, AggregatedMeasurement, GreenupSet, MeasurementRow,
    SpeedupSet,
};

pub const FEATURES_CSV: &str = "features.csv";
pub const WIDTH_PROFILE_CSV: &str = "width_profile.csv";
pub const FEATURE_ERRORS_CSV: &str = "features_errors.csv";
pub const MEASUREMENTS_CSV: &str = "measurements.csv";
pub const AGGREGATES_CSV: &str = "aggregates.csv";
pub const RATIOS_CSV: &str = "speedups.csv";
pub const LABELS_CSV: &str = "labels.csv";
pub const CORRELATIONS_CSV: &str = "correlations.csv";
pub const MODEL_JSON: &str = "model.json";
pub const CV_REPORT_CSV: &str = "cv_report.csv";
pub const CONFUSION_CSV: &str = "confusion.csv";
pub const SAVINGS_CSV: &str = "savings.csv";

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// HTML files directly inside `dir`, sorted by name.
pub fn html_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_html = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("html") || e.eq_ignore_ascii_case("htm"));
        if path.is_file() && is_html {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(Error::Input(format!("no .html files in {}", dir.display())));
    }
    Ok(files)
}

fn page_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn load_page(path: &Path) -> Result<DomTree> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes)
        .map_err(|e| Error::Input(format!("{}: not UTF-8 ({e})", path.display())))?;
    parse_html(&text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthRow {
    pub page_id: String,
    pub depth: usize,
    pub width: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageError {
    pub page_id: String,
    pub error: String,
}

#[derive(Debug)]
pub struct FeaturesOutput {
    pub features: Vec<PageFeatures>,
    pub errors: Vec<PageError>,
}

/// Parses every page in `pages_dir`. Pages that fail to parse are listed in
/// the errors sidecar instead of aborting the run.
pub fn cmd_features(pages_dir: &Path, out_dir: &Path) -> Result<FeaturesOutput> {
    let files = html_files(pages_dir)?;
    ensure_dir(out_dir)?;
    let mut features = Vec::new();
    let mut widths = Vec::new();
    let mut errors = Vec::new();
    for path in files {
        let id = page_id(&path);
        match load_page(&path) {
            Ok(tree) => {
                for (d, &w) in width_profile(&tree).widths.iter().enumerate() {
                    widths.push(WidthRow {
                        page_id: id.clone(),
                        depth: d + 1,
                        width: w,
                    });
                }
                features.push(compute_features(&tree, &id));
            }
            Err(e) => errors.push(PageError {
                page_id: id,
                error: e.to_string(),
            }),
        }
    }
    csvio::write_records(&out_dir.join(FEATURES_CSV), &features)?;
    csvio::write_records(&out_dir.join(WIDTH_PROFILE_CSV), &widths)?;
    csvio::write_records(&out_dir.join(FEATURE_ERRORS_CSV), &errors)?;
    Ok(FeaturesOutput { features, errors })
}

/// Writes `count` generated pages of varied shape into `dir`.
pub fn cmd_synth(dir: &Path, count: usize, min_nodes: usize, max_nodes: usize, seed: u64) -> Result<Vec<PathBuf>> {
    if count == 0 || min_nodes == 0 || min_nodes > max_nodes {
        return Err(Error::Config(format!(
            "need count >= 1 and 1 <= min_nodes <= max_nodes (got {count}, {min_nodes}, {max_nodes})"
        )));
    }
    ensure_dir(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = ((min_nodes as f64).ln(), (max_nodes as f64).ln());
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let size = rng.gen_range(lo..=hi).exp().round() as usize;
        let min_children = rng.gen_range(1..=4);
        let spec = SyntheticTreeSpec {
            target_node_count: size.clamp(min_nodes, max_nodes),
            min_children,
            max_children: min_children + rng.gen_range(0..=8),
            depth_bias: rng.gen_range(0.0..=1.0),
            seed: rng.gen(),
        };
        let tree = generate_tree(&spec)?;
        let path = dir.join(format!("synth_{i:04}.html"));
        std::fs::write(&path, tree.to_html()).map_err(|e| Error::io(&path, e))?;
        out.push(path);
    }
    Ok(out)
}

/// Benchmarks every page and writes the measurements CSV. Energy is
/// estimated with the configured power model unless `estimate_energy` is off.
pub fn cmd_bench(
    pages_dir: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
    estimate_energy: bool,
) -> Result<Vec<MeasurementRow>> {
    let mut pages = Vec::new();
    for path in html_files(pages_dir)? {
        match load_page(&path) {
            Ok(tree) => pages.push((page_id(&path), tree)),
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }
    bench_trees(&pages, out_dir, config, estimate_energy)
}

pub fn bench_trees(
    pages: &[(String, DomTree)],
    out_dir: &Path,
    config: &PipelineConfig,
    estimate_energy: bool,
) -> Result<Vec<MeasurementRow>> {
    config.work.validate()?;
    ensure_dir(out_dir)?;
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    let widest = config.work.thread_counts.iter().copied().max().unwrap_or(1);
    if widest > cpus {
        eprintln!(
            "warning: {cpus} CPU(s) available but benchmarking with up to {widest} threads; \
             parallel timings will be oversubscribed"
        );
    }
    let power = estimate_energy.then_some(&config.power);
    let mut rows = Vec::new();
    for (id, tree) in pages {
        for r in run_bench(id, tree, &config.work)? {
            rows.push(MeasurementRow::from_trial(&r, power));
        }
    }
    write_measurements_csv(&out_dir.join(MEASUREMENTS_CSV), &rows)?;
    Ok(rows)
}

/// Aggregates per page from a measurements file plus an optional energy file.
pub fn load_aggregates(measurements: &Path, energy: Option<&Path>) -> Result<Vec<AggregatedMeasurement>> {
    let rows = ingest_csv(measurements)?;
    let mut aggs = aggregate(&into_trials(&rows)?)?;
    if let Some(path) = energy {
        merge_energy(&mut aggs, &read_energy_csv(path)?);
    }
    Ok(aggs)
}

#[derive(Debug)]
pub struct LabelOutput {
    pub labels: Vec<LabelRow>,
    pub speedups: Vec<SpeedupSet>,
    pub greenups: Vec<GreenupSet>,
    /// Median of per-page styling MADs, by thread count.
    pub mad_summary: BTreeMap<usize, f64>,
}

pub fn label_pages(
    speedups: &[SpeedupSet],
    greenups: &[GreenupSet],
    config: &PipelineConfig,
    cost_model: CostModel,
) -> Result<Vec<LabelRow>> {
    let green: BTreeMap<&str, &GreenupSet> = greenups.iter().map(|g| (g.page_id.as_str(), g)).collect();
    speedups
        .iter()
        .map(|s| {
            let g = || {
                green.get(s.page_id.as_str()).copied().ok_or_else(|| {
                    Error::Input(format!(
                        "page {} has no energy data; the {cost_model} cost model needs greenups",
                        s.page_id
                    ))
                })
            };
            let label = match cost_model {
                CostModel::Perf => performance_label(s, config.buckets.p_min()),
                CostModel::Energy => energy_label(g()?, config.e_min),
                CostModel::PerfEnergy => performance_energy_label(&pets(s, g()?), &config.buckets),
            };
            Ok(LabelRow {
                page_id: s.page_id.clone(),
                label,
                cost_model,
            })
        })
        .collect()
}

pub fn cmd_label(
    measurements: &Path,
    energy: Option<&Path>,
    out_dir: &Path,
    config: &PipelineConfig,
    cost_model: CostModel,
) -> Result<LabelOutput> {
    ensure_dir(out_dir)?;
    let aggs = load_aggregates(measurements, energy)?;
    let mut sp = Vec::new();
    let mut gr = Vec::new();
    for page in by_page(&aggs) {
        sp.push(speedups(page)?);
        if page.iter().all(|a| a.median_energy_j.is_some()) {
            gr.push(greenups(page)?);
        }
    }
    let labels = label_pages(&sp, &gr, config, cost_model)?;

    write_aggregates_csv(&out_dir.join(AGGREGATES_CSV), &aggs)?;
    write_ratios_csv(&out_dir.join(RATIOS_CSV), &ratio_rows(&sp, &gr))?;
    csvio::write_records(&out_dir.join(LABELS_CSV), &labels)?;
    Ok(LabelOutput {
        labels,
        speedups: sp,
        greenups: gr,
        mad_summary: mad_summary(&aggs),
    })
}

pub fn read_features_csv(path: &Path) -> Result<Vec<PageFeatures>> {
    csvio::read_records(path)
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<LabelRow>> {
    csvio::read_records(path)
}

#[derive(Debug)]
pub struct TrainOutput {
    pub model: MnrModel,
    pub cv: CvReport,
    pub selected: Vec<String>,
}

#[derive(Serialize)]
struct CvRow {
    fold: String,
    test_rows: usize,
    accuracy: f64,
}

#[derive(Serialize)]
struct ConfusionRow {
    true_label: usize,
    predicted_label: usize,
    count: usize,
}

/// Correlation targets `p_t` and `e_t` for every parallel thread count.
fn correlation_targets(
    ids: &[String],
    ratios: &[crate::measurements::RatioRow],
) -> Result<Vec<(String, Vec<f64>)>> {
    let (sp, gr) = ratio_sets(ratios);
    let sp: BTreeMap<&str, &SpeedupSet> = sp.iter().map(|s| (s.page_id.as_str(), s)).collect();
    let gr: BTreeMap<&str, &GreenupSet> = gr.iter().map(|g| (g.page_id.as_str(), g)).collect();
    let mut threads: Vec<usize> = ratios.iter().map(|r| r.threads).filter(|&t| t != 1).collect();
    threads.sort_unstable();
    threads.dedup();

    let mut targets = Vec::new();
    for (prefix, sets) in [("p", &sp), ("e", &gr)] {
        for &t in &threads {
            let col: Option<Vec<f64>> = ids
                .iter()
                .map(|id| sets.get(id.as_str()).and_then(|s| s.get(t)))
                .collect();
            match col {
                Some(v) => targets.push((format!("{prefix}_{t}"), v)),
                None if prefix == "e" => {}
                None => {
                    return Err(Error::Input(format!("speedup p_{t} missing for some pages")))
                }
            }
        }
    }
    Ok(targets)
}

pub fn cmd_train(
    features: &Path,
    labels: &Path,
    ratios: Option<&Path>,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<TrainOutput> {
    ensure_dir(out_dir)?;
    let pages = read_features_csv(features)?;
    let label_map: BTreeMap<String, usize> = read_labels_csv(labels)?
        .into_iter()
        .map(|l| (l.page_id, l.label))
        .collect();
    let pages: Vec<PageFeatures> = pages
        .into_iter()
        .filter(|p| label_map.contains_key(&p.page_id))
        .collect();
    if pages.is_empty() {
        return Err(Error::Input("no page has both features and a label".into()));
    }
    let y: Vec<usize> = pages.iter().map(|p| label_map[&p.page_id]).collect();
    let full = FeatureMatrix::from_features(&pages);

    let mut selected: Vec<String> = full.column_names().to_vec();
    if let Some(path) = ratios {
        let targets = correlation_targets(full.ids(), &read_ratios_csv(path)?)?;
        let report = correlation_report(&full, &targets)?;
        csvio::write_records(&out_dir.join(CORRELATIONS_CSV), &report.rows())?;
        let chosen = select_features(&report, config.select_threshold);
        if chosen.is_empty() {
            eprintln!(
                "warning: no feature has |R| > {}; training on all features",
                config.select_threshold
            );
        } else {
            selected = chosen;
        }
    }
    let x = full.select(&selected)?;

    let cv = cross_validate(&x, &y, config.cv_folds, config.seed, &config.mnr)?;
    let model = mnr_fit(&x, &y, &config.mnr)?;
    if !model.converged {
        eprintln!(
            "warning: classifier stopped after {} iterations without reaching tolerance {}",
            model.iterations, config.mnr.tolerance
        );
    }
    model.save(&out_dir.join(MODEL_JSON))?;

    let mut cv_rows: Vec<CvRow> = cv
        .folds
        .iter()
        .enumerate()
        .map(|(i, f)| CvRow {
            fold: i.to_string(),
            test_rows: f.test_rows.len(),
            accuracy: f.accuracy,
        })
        .collect();
    cv_rows.push(CvRow { fold: "mean".into(), test_rows: x.len(), accuracy: cv.mean_accuracy });
    cv_rows.push(CvRow { fold: "max".into(), test_rows: x.len(), accuracy: cv.max_accuracy });
    csvio::write_records(&out_dir.join(CV_REPORT_CSV), &cv_rows)?;
    let confusion: Vec<ConfusionRow> = cv
        .confusion
        .iter()
        .map(|(&(t, p), &count)| ConfusionRow { true_label: t, predicted_label: p, count })
        .collect();
    csvio::write_records(&out_dir.join(CONFUSION_CSV), &confusion)?;

    Ok(TrainOutput { model, cv, selected })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub page_id: String,
    pub label: usize,
    /// `(thread count, probability)` in class order.
    pub probabilities: Vec<(usize, f64)>,
}

pub fn predict_features(model: &MnrModel, page: &PageFeatures) -> Result<Prediction> {
    let x = model.features_of(page)?;
    let probs = mnr_predict_proba(model, &x)?;
    Ok(Prediction {
        page_id: page.page_id.clone(),
        label: mnr_predict(model, &x)?,
        probabilities: model.classes.iter().copied().zip(probs).collect(),
    })
}

pub fn cmd_predict_html(model: &Path, html: &Path) -> Result<Prediction> {
    let model = MnrModel::load(model)?;
    let tree = load_page(html)?;
    predict_features(&model, &compute_features(&tree, &page_id(html)))
}

/// Predicts for rows of a features CSV; all rows, or just `page`.
pub fn cmd_predict_features(model: &Path, features: &Path, page: Option<&str>) -> Result<Vec<Prediction>> {
    let model = MnrModel::load(model)?;
    let rows: Vec<PageFeatures> = read_features_csv(features)?
        .into_iter()
        .filter(|p| page.is_none_or(|id| p.page_id == id))
        .collect();
    if let (Some(id), true) = (page, rows.is_empty()) {
        return Err(Error::Input(format!("page {id} not found in {}", features.display())));
    }
    rows.iter().map(|p| predict_features(&model, p)).collect()
}

/// Savings of the model's predictions against the default thread count,
/// with the labels file as the reference label per page.
pub fn cmd_report(
    measurements: &Path,
    energy: Option<&Path>,
    labels: &Path,
    features: &Path,
    model: &Path,
    out_dir: &Path,
    config: &PipelineConfig,
) -> Result<Vec<SavingsRow>> {
    ensure_dir(out_dir)?;
    let aggs = load_aggregates(measurements, energy)?;
    let ideal: BTreeMap<String, usize> = read_labels_csv(labels)?
        .into_iter()
        .map(|l| (l.page_id, l.label))
        .collect();
    let predictions = cmd_predict_features(model, features, None)?;
    let predicted: BTreeMap<String, usize> = predictions
        .into_iter()
        .filter(|p| ideal.contains_key(&p.page_id))
        .map(|p| (p.page_id, p.label))
        .collect();
    let rows = savings_report(&aggs, &predicted, &ideal, config.default_threads())?;
    csvio::write_records(&out_dir.join(SAVINGS_CSV), &rows)?;
    Ok(rows)
}
