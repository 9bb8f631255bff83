//! Command-line surface shared by the binary and the tests.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use genmetric_core::dataset::{save_dataset, LabeledDataset};
use genmetric_core::seed::derive_seed;
use genmetric_core::{seeded_rng, GeneratorSpec};

use crate::config::Experiment;
use crate::error::HarnessError;
use crate::{output, plot, run};

pub const OUT_DIR_ENV: &str = "GENMETRIC_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "genmetric", version, about = "Evaluate class-conditional generators by classification accuracy")]
pub struct Cli {
    /// Output directory; overrides the config's `out_dir`.
    #[arg(long, global = true, env = OUT_DIR_ENV)]
    pub out_dir: Option<PathBuf>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Real baseline, CAS and the enabled metrics; writes report.json, summary.csv, per_class.csv.
    Evaluate { config: PathBuf },
    /// One evaluation per grid value; writes sweep.csv, sweep.json, sweep.svg.
    Sweep { config: PathBuf },
    /// Classifier trained and tested on real data only; writes baseline.json, summary.csv.
    Baseline { config: PathBuf },
    /// Renders SVG charts from report.json, sweep.json, per_class.csv or sweep.csv.
    Plot { file: PathBuf },
    /// Writes a dataset of generator samples, round-robin over classes.
    Sample {
        /// Generator spec JSON file.
        generator: PathBuf,
        /// Number of samples.
        #[arg(long)]
        count: usize,
        /// Number of classes to label (default: all generator classes).
        #[arg(long)]
        classes: Option<usize>,
    },
}

fn load(config: &Path, cli: &Cli) -> Result<Experiment, HarnessError> {
    Experiment::load(config, cli.seed, cli.out_dir.clone())
}

fn sample(cli: &Cli, spec_path: &Path, count: usize, classes: Option<usize>) -> Result<PathBuf, HarnessError> {
    let text = std::fs::read_to_string(spec_path)
        .map_err(|e| HarnessError::Config(format!("reading {}: {e}", spec_path.display())))?;
    let spec: GeneratorSpec = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Config(format!("parsing {}: {e}", spec_path.display())))?;
    let gen = spec.build(None).map_err(|e| HarnessError::Config(e.to_string()))?;
    let k = classes.unwrap_or(gen.num_classes());
    if count == 0 || k == 0 || k > gen.num_classes() {
        return Err(HarnessError::Config(format!(
            "need count >= 1 and 1 <= classes <= {}",
            gen.num_classes()
        )));
    }
    let out_dir = cli
        .out_dir
        .clone()
        .ok_or_else(|| HarnessError::Config("sample needs --out-dir".into()))?;
    let mut rng = seeded_rng(derive_seed(cli.seed.unwrap_or(0), "sample", 0));
    let labels: Vec<u32> = (0..count).map(|i| (i % k) as u32).collect();
    let rows = labels
        .iter()
        .map(|&c| gen.sample(c as usize, &mut rng))
        .collect::<Result<Vec<_>, _>>()?;
    let name = spec_path.file_stem().map_or("samples".into(), |s| s.to_string_lossy().into_owned());
    let ds = LabeledDataset::from_rows(name, &rows, labels, k)?;
    save_dataset(&ds, &out_dir)?;
    Ok(out_dir)
}

/// Runs one command and returns the written paths.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>, HarnessError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(HarnessError::Config("--threads must be at least 1".into()));
        }
        // a pool may already exist when called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    match &cli.command {
        Command::Evaluate { config } => {
            let exp = load(config, cli)?;
            let report = run::evaluate(&exp)?;
            output::evaluation_outputs(&report)?.write(&exp.out_dir)
        }
        Command::Sweep { config } => {
            let exp = load(config, cli)?;
            if exp.config.sweep.is_none() {
                return Err(HarnessError::Config("config has no `sweep` section".into()));
            }
            let report = run::sweep(&exp)?;
            output::sweep_outputs(&report)?.write(&exp.out_dir)
        }
        Command::Baseline { config } => {
            let exp = load(config, cli)?;
            let report = run::baseline(&exp)?;
            output::baseline_outputs(&report)?.write(&exp.out_dir)
        }
        Command::Plot { file } => {
            let out_dir = match &cli.out_dir {
                Some(dir) => dir.clone(),
                None => file.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf),
            };
            plot::plot(file, &out_dir)
        }
        Command::Sample {
            generator,
            count,
            classes,
        } => sample(cli, generator, *count, *classes).map(|p| vec![p]),
    }
}
