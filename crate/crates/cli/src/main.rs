//! `accaudit`: measure how accessible every document of a corpus is to a
//! retrieval system.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub const INPUT: u8 = 2;
    pub const INTERNAL: u8 = 3;

    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: Self::INPUT,
            message: message.into(),
        }
    }
}

impl From<accaudit::Error> for CliError {
    fn from(e: accaudit::Error) -> Self {
        CliError {
            code: if e.is_internal() { Self::INTERNAL } else { Self::INPUT },
            message: e.to_string(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "accaudit", version, about = "Document accessibility audits over a corpus-derived query universe")]
struct Cli {
    /// key=value settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an index snapshot from a corpus.
    Index(IndexArgs),
    /// Generate the query universe TSV from a corpus.
    Queries(QueriesArgs),
    /// Compute per-document accessibility scores.
    Audit(Box<AuditArgs>),
    /// Summarize, group and compare audit results.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct CorpusArgs {
    /// Corpus path: a JSONL file or a directory of plain-text files.
    #[arg(long)]
    pub corpus: Option<String>,
    /// jsonl | plaintext-dir
    #[arg(long)]
    pub format: Option<String>,
    /// Stopword file, one token per line.
    #[arg(long)]
    pub stopwords: Option<String>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct UniverseArgs {
    /// Longest query in terms (1 or 2).
    #[arg(long = "max-len")]
    pub max_len: Option<String>,
    /// Minimum document frequency (pair count for bigrams).
    #[arg(long = "min-df")]
    pub min_df: Option<String>,
    /// uniform | cf-proportional | bigram-freq
    #[arg(long)]
    pub weighting: Option<String>,
    /// Keep only the highest-likelihood queries.
    #[arg(long = "max-queries")]
    pub max_queries: Option<String>,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Snapshot output path.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args, Debug)]
pub struct QueriesArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub universe: UniverseArgs,
    /// Universe TSV output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Index snapshot to use instead of rebuilding from the corpus.
    #[arg(long)]
    pub index: Option<String>,
    /// Universe TSV; generated from the corpus when omitted.
    #[arg(long)]
    pub universe: Option<String>,
    #[command(flatten)]
    pub generation: UniverseArgs,
    /// tfidf | bm25
    #[arg(long)]
    pub model: Option<String>,
    /// BM25 term-frequency saturation.
    #[arg(long)]
    pub k1: Option<String>,
    /// BM25 length normalization, in [0, 1].
    #[arg(long)]
    pub b: Option<String>,
    /// cumulative | gravity
    #[arg(long)]
    pub measure: Option<String>,
    /// Rank cutoff for the cumulative measure.
    #[arg(long)]
    pub c: Option<String>,
    /// Dampening exponent for the gravity measure.
    #[arg(long)]
    pub beta: Option<String>,
    /// Retrieval depth per query.
    #[arg(long)]
    pub depth: Option<String>,
    /// Worker threads (defaults to available cores).
    #[arg(long)]
    pub workers: Option<String>,
    /// Rescale likelihoods to sum to one (true | false).
    #[arg(long)]
    pub normalize: Option<String>,
    /// Directory for scores.csv and audit.json.
    #[arg(long = "out-dir")]
    pub out_dir: Option<String>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory written by `audit`.
    #[arg(long = "audit-dir")]
    pub audit_dir: Option<String>,
    /// JSON object mapping group label to a list of doc ids.
    #[arg(long)]
    pub groups: Option<String>,
    /// Second audit directory over the same corpus.
    #[arg(long)]
    pub compare: Option<String>,
    /// Output directory (defaults to the audit directory).
    #[arg(long = "out-dir")]
    pub out_dir: Option<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Index(args) => commands::index(args, &file),
        Command::Queries(args) => commands::queries(args, &file),
        Command::Audit(args) => commands::audit(*args, &file),
        Command::Report(args) => commands::report(args, &file),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
