//! Command-line front end. Every stage reads and writes artifacts in one output directory
//! and records a manifest of its inputs and outputs.

mod commands;
mod config;
pub mod stages;
mod workspace;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::*;
pub use config::{RunConfig, TextOptions};
pub use workspace::{sha256_file, ArtifactEntry, DirLock, InputEntry, Manifest, Workspace, LOCK_FILE};

use crate::dataset::ConstructionMode;
use crate::error::Result;
use crate::models::ModelKind;

#[derive(Debug, Parser)]
#[command(name = "reviewbomb", version, about = "Review-bombing corpus construction, classification and term ranking")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Review CSV (ingest, pipeline), records file (build-dataset), corpus file (train) or
    /// review text file (predict)
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// within_candidates or controls
    #[arg(long, global = true)]
    mode: Option<ConstructionMode>,
    #[arg(long, global = true)]
    max_features: Option<usize>,
    #[arg(long, global = true)]
    top_k: Option<usize>,
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Parse the review CSV into records
    Ingest,
    /// Detect languages, select candidate games and build the labeled corpus
    BuildDataset,
    /// Fit TF-IDF, grid-search the classifiers and evaluate on the holdout split
    Train,
    /// Rank terms by review-bombing relevance and export the wordcloud
    RankTerms,
    /// Export scatter, histogram and confusion-matrix tables
    ExportFigures,
    /// Classify each line of a text file
    Predict {
        #[arg(long, default_value = "mnb")]
        model: ModelKind,
    },
    /// Run every stage from ingest to export-figures
    Pipeline,
}

fn resolve(cli: Cli) -> Result<(Command, RunConfig)> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.out {
        cfg.out_dir = v;
    }
    if let Some(v) = cli.mode {
        cfg.corpus.construction_mode = v;
    }
    if let Some(v) = cli.max_features {
        cfg.max_features = v;
    }
    if let Some(v) = cli.top_k {
        cfg.top_k = v;
    }
    if let Some(v) = cli.stopwords {
        cfg.text.stopwords = Some(v);
    }
    if let Some(v) = cli.lexicon {
        cfg.lexicon = Some(v);
    }
    let input = cli.input;
    let command = match cli.command {
        Sub::Ingest | Sub::Pipeline => {
            if let Some(p) = input {
                cfg.input = Some(p);
            }
            if matches!(cli.command, Sub::Ingest) {
                Command::Ingest
            } else {
                Command::Pipeline
            }
        }
        Sub::BuildDataset => Command::BuildDataset { records: input },
        Sub::Train => Command::Train { corpus: input },
        Sub::RankTerms => Command::RankTerms,
        Sub::ExportFigures => Command::ExportFigures,
        Sub::Predict { model } => Command::Predict {
            input: input.ok_or_else(|| {
                crate::Error::InvalidArgument("predict needs --input with one review per line".into())
            })?,
            model,
        },
    };
    Ok((command, cfg))
}

/// Parses `args` (including the program name), runs the command and returns the process
/// exit code: 0 on success, 1 for usage, input or configuration errors, 2 for internal
/// invariant violations.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match resolve(cli).and_then(|(command, cfg)| run(&command, &cfg)) {
        Ok(m) => {
            log::info!("{}: {} artifacts written", m.command, m.artifacts.len());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
