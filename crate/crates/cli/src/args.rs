use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tweetmine", version, about = "Rare-class tweet mining toolkit")]
pub struct Cli {
    /// TOML file with default values for any flag, top level or per command.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a raw dump into a JSONL corpus.
    Ingest(IngestArgs),
    /// Write the token stream of a corpus.
    Preprocess(InOut),
    /// Keep tweets in one language.
    LangFilter(LangFilterArgs),
    /// Drop repeated tweets.
    Dedup(InOut),
    /// Train skip-gram word vectors.
    TrainEmbeddings(TrainEmbeddingsArgs),
    /// Nearest words by cosine similarity.
    Similar(SimilarArgs),
    /// Dirichlet-process clustering of word vectors.
    Cluster(ClusterArgs),
    /// Topic models for a grid of topic counts.
    Lda(LdaArgs),
    /// Bootstrap a keyword lexicon from seed words.
    Lexicon(LexiconArgs),
    /// Repeated stratified cross-validation of one configuration.
    Cv(CvArgs),
    /// Fraction × feature set × classifier benchmark tables.
    Bench(BenchArgs),
    /// Serve the review API for a relabeling session.
    RelabelServe(ServeArgs),
    /// Relabeling session commands.
    Relabel {
        #[command(subcommand)]
        command: RelabelCommand,
    },
}

#[derive(Debug, Subcommand)]
pub enum RelabelCommand {
    /// Serve the review API for a relabeling session.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// `.csv` is sentiment140, anything else JSONL.
    Auto,
    Sentiment140,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct CorpusInput {
    /// Corpus file.
    #[arg(long, short, alias = "corpus")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Auto)]
    pub format: Format,
    /// Read at most this many rows.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InOut {
    #[command(flatten)]
    pub input: CorpusInput,
    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub io: InOut,
}

#[derive(Debug, Args)]
pub struct LangFilterArgs {
    #[command(flatten)]
    pub io: InOut,
    #[arg(long, default_value = "en")]
    pub lang: String,
    #[arg(long, default_value_t = 0.5)]
    pub min_score: f64,
    /// Extra language profiles (files in the ranked n-gram format).
    #[arg(long = "profile")]
    pub profiles: Vec<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct EmbeddingArgs {
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 5)]
    pub window: usize,
    #[arg(long, default_value_t = 5)]
    pub embedding_epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub min_count: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub subsample: f64,
    /// Threads for embedding training; more than one is not reproducible.
    #[arg(long, default_value_t = 1)]
    pub embedding_threads: usize,
}

#[derive(Debug, Args)]
pub struct TrainEmbeddingsArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long, short)]
    pub output: PathBuf,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimilarArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// One or more words; their vectors are averaged.
    #[arg(long, required = true, value_delimiter = ',')]
    pub query: Vec<String>,
    #[arg(long, short, default_value_t = 10)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Cluster this many medium-frequency words (the top 1% are skipped).
    #[arg(long, default_value_t = 1000)]
    pub words: usize,
    /// Cluster the words listed in this file instead, one per line.
    #[arg(long)]
    pub words_file: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub k_max: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LdaArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long, short, value_delimiter = ',', default_values_t = [5, 10, 15, 20, 25])]
    pub k: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    /// Document-topic prior; 50/K when absent.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    /// Words per topic in the report.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Writes `topics.tsv` and `annotations_k<K>.jsonl`.
    #[arg(long, default_value = "lda_out")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LexiconArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long, required = true, value_delimiter = ',')]
    pub seeds: Vec<String>,
    #[arg(long, default_value_t = 1)]
    pub rounds: usize,
    /// Candidates scoring at least this are accepted without asking.
    #[arg(long, default_value_t = 2.0)]
    pub threshold: f64,
    #[arg(long, default_value_t = 20)]
    pub top_k: usize,
    /// Ask on the terminal about each candidate.
    #[arg(long)]
    pub interactive: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct TrainerArgs {
    #[arg(long, default_value = "logistic")]
    pub classifier: String,
    #[arg(long, default_value_t = 1e-4)]
    pub lambda: f64,
    #[arg(long, default_value_t = 300)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    /// Weight classes inversely to their size.
    #[arg(long)]
    pub balanced: bool,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long, default_value = "ngrams:1,2")]
    pub features: String,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Workers for independent runs.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    /// Per-run TSV report; the aggregate goes to stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long, value_delimiter = ',', default_values_t = [0.001, 0.01, 0.1])]
    pub fractions: Vec<f64>,
    /// Repeat for several feature sets.
    #[arg(long = "features", default_values = ["mu", "mu-sigma", "nbsvm", "ngrams:1", "ngrams:1,2", "ngrams:1,2,3"])]
    pub features: Vec<String>,
    #[arg(long = "classifiers", value_delimiter = ',', default_values = ["logistic", "svm"])]
    pub classifiers: Vec<String>,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Matrix cells evaluated at once.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[arg(long, default_value = "bench_out")]
    pub output_dir: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub input: CorpusInput,
    #[arg(long, default_value = "ngrams:1,2")]
    pub features: String,
    #[command(flatten)]
    pub trainer: TrainerArgs,
    #[command(flatten)]
    pub embedding: EmbeddingArgs,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Session directory for the audit log and stats; resumed when present.
    #[arg(long, default_value = "relabel_session")]
    pub session: PathBuf,
    /// Static review UI bundle served at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Lexicon JSONL whose hits are shown with each tweet.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Fit a topic model with this many topics for annotations.
    #[arg(long)]
    pub topics: Option<usize>,
    /// Longest review queue per iteration.
    #[arg(long)]
    pub budget: Option<usize>,
    /// Also queue labeled positives the classifier rejects.
    #[arg(long)]
    pub false_negatives: bool,
    /// Wait for POST /api/retrain instead of building the first queue at start.
    #[arg(long)]
    pub no_initial_retrain: bool,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}
