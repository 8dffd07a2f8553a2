use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use pagepar::config::PipelineConfig;
use pagepar::labeling::CostModel;
use pagepar::pipeline;

#[derive(Parser)]
#[command(name = "pagepar", version, about = "Profile DOM parallelism and predict per-page thread counts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key-value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Extract structural features and width profiles from a directory of HTML pages.
    Features {
        pages: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Write generated pages of varied shape into a directory.
    Synth {
        dir: PathBuf,
        #[arg(long, default_value_t = 50)]
        count: usize,
        #[arg(long, default_value_t = 50)]
        min_nodes: usize,
        #[arg(long, default_value_t = 3000)]
        max_nodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the styling and layout traversal benchmark.
    Bench {
        /// Directory of HTML pages.
        pages: Option<PathBuf>,
        /// Benchmark this many in-memory generated trees instead of pages.
        #[arg(long, conflicts_with = "pages")]
        synthetic: Option<usize>,
        /// Comma-separated thread counts.
        #[arg(long, value_delimiter = ',')]
        threads: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        work_units: Option<u32>,
        /// Leave energy_j blank (to be supplied by an external energy CSV).
        #[arg(long)]
        no_energy: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Aggregate measurements and label each page with a thread count.
    Label {
        measurements: PathBuf,
        /// Per-(page, threads) energy CSV overriding estimated energy.
        #[arg(long)]
        energy: Option<PathBuf>,
        #[arg(long)]
        cost_model: Option<CostModel>,
        #[command(flatten)]
        common: Common,
    },
    /// Select features, cross-validate and fit the classifier.
    Train {
        features: PathBuf,
        labels: PathBuf,
        /// Speedup/greenup CSV used for correlation-based feature selection.
        #[arg(long)]
        speedups: Option<PathBuf>,
        #[arg(long)]
        folds: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Predict the thread count for one page.
    Predict {
        model: PathBuf,
        #[arg(long, conflicts_with = "features")]
        html: Option<PathBuf>,
        #[arg(long)]
        features: Option<PathBuf>,
        /// Page id to pick from the features CSV (all rows when omitted).
        #[arg(long, requires = "features")]
        page: Option<String>,
    },
    /// Compare predicted, default and best thread counts per page.
    Report {
        measurements: PathBuf,
        labels: PathBuf,
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        energy: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(common: &Common) -> anyhow::Result<PipelineConfig> {
    let mut c = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        c.seed = s;
    }
    Ok(c)
}

fn print_written(dir: &Path, files: &[&str]) {
    for f in files {
        println!("wrote {}", dir.join(f).display());
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Features { pages, common } => {
            let out = pipeline::cmd_features(&pages, &common.out)?;
            println!("{} pages, {} errors", out.features.len(), out.errors.len());
            print_written(
                &common.out,
                &[pipeline::FEATURES_CSV, pipeline::WIDTH_PROFILE_CSV, pipeline::FEATURE_ERRORS_CSV],
            );
        }
        Command::Synth { dir, count, min_nodes, max_nodes, seed } => {
            let files = pipeline::cmd_synth(&dir, count, min_nodes, max_nodes, seed)?;
            println!("wrote {} pages to {}", files.len(), dir.display());
        }
        Command::Bench { pages, synthetic, threads, trials, work_units, no_energy, common } => {
            let mut c = load_config(&common)?;
            if let Some(t) = threads {
                c.work.thread_counts = t;
            }
            if let Some(t) = trials {
                c.work.trials = t;
            }
            if let Some(w) = work_units {
                c.work.work_units = w;
            }
            c.validate()?;
            let rows = match (pages, synthetic) {
                (Some(dir), _) => pipeline::cmd_bench(&dir, &common.out, &c, !no_energy)?,
                (None, Some(n)) => {
                    let tmp = common.out.join("synthetic_pages");
                    pipeline::cmd_synth(&tmp, n, 50, 3000, c.seed)?;
                    pipeline::cmd_bench(&tmp, &common.out, &c, !no_energy)?
                }
                (None, None) => bail!("give a pages directory or --synthetic N"),
            };
            println!("{} measurements", rows.len());
            print_written(&common.out, &[pipeline::MEASUREMENTS_CSV]);
        }
        Command::Label { measurements, energy, cost_model, common } => {
            let c = load_config(&common)?;
            let model = cost_model.unwrap_or(c.cost_model);
            let out = pipeline::cmd_label(&measurements, energy.as_deref(), &common.out, &c, model)?;
            let mut counts = std::collections::BTreeMap::new();
            for l in &out.labels {
                *counts.entry(l.label).or_insert(0usize) += 1;
            }
            for (label, n) in counts {
                println!("label {label}: {n} pages");
            }
            for (t, m) in &out.mad_summary {
                println!("median styling MAD at {t} threads: {m:.3} ms");
            }
            print_written(
                &common.out,
                &[pipeline::AGGREGATES_CSV, pipeline::RATIOS_CSV, pipeline::LABELS_CSV],
            );
        }
        Command::Train { features, labels, speedups, folds, common } => {
            let mut c = load_config(&common)?;
            if let Some(k) = folds {
                c.cv_folds = k;
            }
            let out = pipeline::cmd_train(&features, &labels, speedups.as_deref(), &common.out, &c)?;
            println!("features: {}", out.selected.join(", "));
            println!(
                "{}-fold accuracy: mean {:.4}, max {:.4}",
                out.cv.k, out.cv.mean_accuracy, out.cv.max_accuracy
            );
            print_written(&common.out, &[pipeline::MODEL_JSON, pipeline::CV_REPORT_CSV, pipeline::CONFUSION_CSV]);
        }
        Command::Predict { model, html, features, page } => {
            let predictions = match (html, features) {
                (Some(h), _) => vec![pipeline::cmd_predict_html(&model, &h)?],
                (None, Some(f)) => pipeline::cmd_predict_features(&model, &f, page.as_deref())?,
                (None, None) => bail!("give --html <page> or --features <csv>"),
            };
            println!("page_id,label,probabilities");
            for p in predictions {
                let probs: Vec<String> =
                    p.probabilities.iter().map(|(t, v)| format!("{t}:{v:.6}")).collect();
                println!("{},{},{}", p.page_id, p.label, probs.join(" "));
            }
        }
        Command::Report { measurements, labels, model, features, energy, common } => {
            let c = load_config(&common)?;
            let rows = pipeline::cmd_report(
                &measurements,
                energy.as_deref(),
                &labels,
                &features,
                &model,
                &common.out,
                &c,
            )
            .context("building savings report")?;
            let n = rows.len().max(1) as f64;
            let mean_model = rows.iter().map(|r| r.model_normalized()).sum::<f64>() / n;
            let mean_default = rows.iter().map(|r| r.default_normalized()).sum::<f64>() / n;
            println!(
                "{} pages; mean time normalized to ideal: model {mean_model:.3}, default {mean_default:.3}",
                rows.len()
            );
            print_written(&common.out, &[pipeline::SAVINGS_CSV]);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
