//! `qud`: parse documents into QUD trees, measure and compare trees, convert
//! RST trees, aggregate human judgments and serve the mock backend.

mod commands;
mod error;
mod manifest;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qud_core::metrics::AttachmentConvention;

#[derive(Debug, Parser)]
#[command(name = "qud", version, about = "QUD dependency parsing toolkit")]
pub struct Cli {
    /// Seed for sampling; recorded in every run manifest even when unused.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse every article of a JSONL articles file into a QUD tree.
    Parse(ParseArgs),
    /// Mean tree statistics for one tree file.
    Stats(StatsArgs),
    /// Statistics for two tree files plus their attachment score.
    Compare(CompareArgs),
    /// Convert bracketed RST trees to dependency trees.
    Rst2dep(Rst2depArgs),
    /// Aggregate human judgments, reranker ranks or anchor predictions.
    Eval(EvalArgs),
    /// Render model inputs for one sentence, or a directory of golden files.
    Encode(EncodeArgs),
    /// Synthesize reranker negatives from gold questions.
    SynthNeg(SynthNegArgs),
    /// Serve the deterministic mock backend over HTTP.
    MockServe(MockServeArgs),
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Articles file (JSONL, one article per line).
    pub articles: PathBuf,
    /// Use the built-in deterministic mock backend.
    #[arg(long, conflicts_with = "backend_url")]
    pub mock: bool,
    /// Base URL of the model backend.
    #[arg(long, env = "QUD_BACKEND_URL")]
    pub backend_url: Option<String>,
    /// Candidate questions sampled per sentence.
    #[arg(long, default_value_t = 10)]
    pub num_samples: usize,
    /// Nucleus sampling threshold.
    #[arg(long, default_value_t = 0.9)]
    pub top_p: f64,
    /// Keep the first sample instead of reranking candidates.
    #[arg(long)]
    pub no_rerank: bool,
    /// Do not mask named entities in the generation input.
    #[arg(long)]
    pub no_mask: bool,
    /// System variant (full, -reranking, -ner); overrides --no-rerank and --no-mask.
    #[arg(long, allow_hyphen_values = true)]
    pub variant: Option<String>,
    /// What to do when a sentence fails: fast aborts, skip leaves it out.
    #[arg(long, value_enum, default_value_t = FailPolicyArg::Fast)]
    pub fail_policy: FailPolicyArg,
    /// Sentences processed concurrently.
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
    /// Per-request timeout for the HTTP backend, in seconds.
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    /// Retries on transport failures and timeouts.
    #[arg(long, default_value_t = 0)]
    pub retries: u32,
    /// Write per-sentence parse traces (JSONL) to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Output tree file (JSONL); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FailPolicyArg {
    Fast,
    Skip,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ConventionArg {
    /// Divide attachment matches by n - 1 (identical trees score 1).
    NonRoot,
    /// Divide attachment matches by the article length n.
    ArticleLength,
}

impl From<ConventionArg> for AttachmentConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::NonRoot => AttachmentConvention::NonRoot,
            ConventionArg::ArticleLength => AttachmentConvention::ArticleLength,
        }
    }
}

#[derive(Debug, Args)]
pub struct TreeInputArgs {
    /// Articles file; required when a tree input is a DCQA questions file,
    /// which is turned into one tree per annotator.
    #[arg(long)]
    pub articles: Option<PathBuf>,
    /// Aligned plain text instead of a tab-separated table.
    #[arg(long)]
    pub pretty: bool,
    /// Output table; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Tree file: QUD trees, dependency trees or DCQA questions (JSONL).
    pub trees: PathBuf,
    /// Row name; defaults to the file stem.
    #[arg(long)]
    pub name: Option<String>,
    #[command(flatten)]
    pub input: TreeInputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub first: PathBuf,
    pub second: PathBuf,
    /// Row names as FIRST,SECOND; default to the file stems.
    #[arg(long, value_delimiter = ',')]
    pub names: Option<Vec<String>>,
    /// Denominator of the attachment score.
    #[arg(long, value_enum, default_value_t = ConventionArg::NonRoot)]
    pub convention: ConventionArg,
    #[command(flatten)]
    pub input: TreeInputArgs,
}

#[derive(Debug, Args)]
pub struct Rst2depArgs {
    /// Bracketed RST tree file.
    pub file: PathBuf,
    /// Output dependency trees (JSONL); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EvalKind {
    /// Judgment records: Q1/Q2 tables and agreement.
    Judgments,
    /// `{gold_rank, num_options}` records: mean percentile rank.
    Rerank,
    /// Parsed QUD trees against gold anchors from a questions file.
    Anchors,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Input file (JSONL).
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = EvalKind::Judgments)]
    pub kind: EvalKind,
    /// Gold questions file, for --kind anchors.
    #[arg(long, required_if_eq("kind", "anchors"))]
    pub gold: Option<PathBuf>,
    /// System name for judgment records without one.
    #[arg(long, default_value = "system")]
    pub system: String,
    /// Aligned plain text instead of tab-separated tables.
    #[arg(long)]
    pub pretty: bool,
    /// Output report; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Articles file (JSONL).
    #[arg(required_unless_present = "cases")]
    pub articles: Option<PathBuf>,
    /// Article to encode.
    #[arg(long, required_unless_present = "cases")]
    pub article: Option<String>,
    /// Answer sentence index (1-based).
    #[arg(long, required_unless_present = "cases")]
    pub answer: Option<usize>,
    /// Anchor sentence index; renders the generation prompt when given.
    #[arg(long)]
    pub anchor: Option<usize>,
    /// Entity span TYPE:START-END over answer tokens (0-based, inclusive); repeatable.
    #[arg(long = "span", value_name = "TYPE:START-END")]
    pub spans: Vec<String>,
    /// Question to append to the generation prompt.
    #[arg(long)]
    pub question: Option<String>,
    /// Cases file (JSON array); renders `<name>.txt` for every case.
    #[arg(long, conflicts_with_all = ["articles", "article", "answer"], requires = "out_dir")]
    pub cases: Option<PathBuf>,
    /// Directory for rendered cases.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthNegArgs {
    /// Articles file (JSONL).
    pub articles: PathBuf,
    /// Gold questions file (JSONL).
    pub questions: PathBuf,
    /// Emit each gold example before its negatives.
    #[arg(long)]
    pub include_positive: bool,
    /// Output examples (JSONL); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MockServeArgs {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.category.exit_code() as u8)
        }
    }
}
