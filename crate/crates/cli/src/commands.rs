use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::Path;

use tweetmine::bench::{run_bench, BenchConfig};
use tweetmine::classify::{cross_validate, Classifier, CvOptions, TrainerSpec};
use tweetmine::corpus::{
    dedup, ingest_jsonl, ingest_sentiment140, language_filter, write_jsonl, Corpus, IngestReport, LanguageIdentifier,
    LanguageProfile,
};
use tweetmine::embedding::{cluster_words, select_medium_frequency, train_on_corpus, DpgmmOptions, EmbeddingModel, SkipGramConfig};
use tweetmine::features::FeatureSpec;
use tweetmine::lexicon::{auto_accept, expand_round, match_tweets, score_candidates, AcceptedBy, Lexicon};
use tweetmine::relabel::{RelabelConfig, RelabelState, SessionStore};
use tweetmine::topics::{fit_lda, sweep_topic_counts, write_annotations, write_topic_report, LdaConfig};
use tweetmine_server::Service;

use crate::args::*;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn read_report(input: &CorpusInput) -> Result<IngestReport> {
    let csv = match input.format {
        Format::Sentiment140 => true,
        Format::Jsonl => false,
        Format::Auto => input.input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")),
    };
    let report = if csv {
        ingest_sentiment140(&input.input, input.limit)?
    } else {
        let mut r = ingest_jsonl(&input.input)?;
        if let Some(n) = input.limit {
            r.corpus = Corpus::from_tweets(r.corpus.into_tweets().into_iter().take(n))?;
        }
        r
    };
    if report.skipped > 0 {
        log::warn!("{}: skipped {} malformed rows", input.input.display(), report.skipped);
    }
    Ok(report)
}

/// Read and tokenize.
pub fn load_corpus(input: &CorpusInput) -> Result<Corpus> {
    Ok(read_report(input)?.corpus.preprocessed())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Box::new(BufWriter::new(File::create(p)?))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn features(spec: &str) -> Result<FeatureSpec> {
    spec.parse().map_err(|e: tweetmine::Error| CliError::Usage(e.to_string()))
}

fn classifier(name: &str) -> Result<Classifier> {
    name.parse().map_err(|e: tweetmine::Error| CliError::Usage(e.to_string()))
}

fn trainer(args: &TrainerArgs) -> Result<TrainerSpec> {
    Ok(TrainerSpec {
        l2_lambda: args.lambda,
        max_iters: args.max_iters,
        epochs: args.epochs,
        balanced: args.balanced,
        ..TrainerSpec::new(classifier(&args.classifier)?)
    })
}

fn skipgram(args: &EmbeddingArgs, seed: u64) -> SkipGramConfig {
    SkipGramConfig {
        dim: args.dim,
        window: args.window,
        epochs: args.embedding_epochs,
        min_count: args.min_count,
        subsample_t: args.subsample,
        threads: args.embedding_threads,
        seed,
        ..SkipGramConfig::default()
    }
}

fn write_corpus(corpus: &Corpus, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    write_jsonl(corpus, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn ingest(args: &IngestArgs) -> Result<()> {
    let r = read_report(&args.io.input)?;
    eprintln!("ingested {} tweets ({} skipped, {} neutral dropped)", r.corpus.len(), r.skipped, r.neutral);
    write_corpus(&r.corpus, args.io.output.as_deref())
}

pub fn preprocess(args: &InOut) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let mut out = output(args.output.as_deref())?;
    for t in corpus.tweets() {
        let label = t.label.is_labeled().then_some(t.label);
        let line = serde_json::json!({ "id": t.id, "tokens": t.tokens, "label": label });
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn lang_filter(args: &LangFilterArgs) -> Result<()> {
    let corpus = read_report(&args.io.input)?.corpus;
    let mut id = LanguageIdentifier::builtin();
    for p in &args.profiles {
        id.add_profile(LanguageProfile::parse(&fs::read_to_string(p)?)?);
    }
    if !id.profiles().iter().any(|p| p.lang_code() == args.lang) {
        return Err(CliError::Usage(format!("no language profile for {:?}", args.lang)));
    }
    let kept = language_filter(&corpus, &id, &args.lang, args.min_score);
    eprintln!("kept {} of {} tweets as {}", kept.len(), corpus.len(), args.lang);
    write_corpus(&kept, args.io.output.as_deref())
}

pub fn dedup_cmd(args: &InOut) -> Result<()> {
    let corpus = read_report(&args.input)?.corpus;
    let kept = dedup(&corpus);
    eprintln!("kept {} of {} tweets", kept.len(), corpus.len());
    write_corpus(&kept, args.output.as_deref())
}

pub fn train_embeddings(args: &TrainEmbeddingsArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let model = train_on_corpus(&corpus, &skipgram(&args.embedding, args.seed))?;
    eprintln!("{} words × {} dimensions", model.vocab.len(), model.dim);
    let mut out = output(Some(&args.output))?;
    model.save(&mut out)?;
    out.flush()?;
    Ok(())
}

fn load_model(path: &Path) -> Result<EmbeddingModel> {
    Ok(EmbeddingModel::load(BufReader::new(File::open(path)?))?)
}

pub fn similar(args: &SimilarArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let query: Vec<&str> = args.query.iter().map(String::as_str).collect();
    let mut out = output(None)?;
    for (word, cos) in model.most_similar(&query, args.k)? {
        writeln!(out, "{word}\t{cos:.4}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn cluster(args: &ClusterArgs) -> Result<()> {
    let model = load_model(&args.model)?;
    let words = match &args.words_file {
        Some(p) => fs::read_to_string(p)?
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect(),
        None => select_medium_frequency(&model.vocab, args.words),
    };
    let options = DpgmmOptions {
        k_max: args.k_max,
        max_iter: args.max_iter,
        seed: args.seed,
        ..DpgmmOptions::default()
    };
    let clusters = cluster_words(&model, &words, &options)?;
    let used = clusters.weights.iter().filter(|&&w| w > 0.05).count();
    eprintln!("{} words, {used} components with weight > 0.05", words.len());
    let mut out = output(args.output.as_deref())?;
    clusters.write_jsonl(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn lda(args: &LdaArgs) -> Result<()> {
    if args.k.is_empty() || args.k.contains(&0) {
        return Err(CliError::Usage("--k needs positive topic counts".into()));
    }
    let corpus = load_corpus(&args.input)?;
    let config = LdaConfig {
        alpha: args.alpha,
        beta: args.beta,
        sweeps: args.sweeps,
        seed: args.seed,
        ..LdaConfig::default()
    };
    let models = sweep_topic_counts(&corpus, &args.k, &config)?;
    fs::create_dir_all(&args.output_dir)?;
    let mut report = output(Some(&args.output_dir.join("topics.tsv")))?;
    write_topic_report(&models, args.top, &mut report)?;
    report.flush()?;
    for (k, model) in &models {
        let mut out = output(Some(&args.output_dir.join(format!("annotations_k{k}.jsonl"))))?;
        write_annotations(&model.annotate_corpus(&corpus)?, &mut out)?;
        out.flush()?;
    }
    eprintln!("wrote {} topic models to {}", models.len(), args.output_dir.display());
    Ok(())
}

fn ask(term: &str, score: f64, default_yes: bool) -> Result<bool> {
    let hint = if default_yes { "[Y/n]" } else { "[y/N]" };
    eprint!("{term} ({score:.2}) {hint} ");
    io::stderr().flush()?;
    let mut line = String::new();
    if io::stdin().lock().read_line(&mut line)? == 0 {
        return Ok(false);
    }
    Ok(match line.trim().to_lowercase().as_str() {
        "" => default_yes,
        a => a.starts_with('y'),
    })
}

pub fn lexicon(args: &LexiconArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let mut lex = Lexicon::from_seeds(args.seeds.iter().map(|s| s.to_lowercase()));
    for _ in 0..args.rounds {
        let matched = match_tweets(&corpus, &lex)?;
        if matched.is_empty() {
            eprintln!("no tweet matches the lexicon");
            break;
        }
        let candidates = score_candidates(&corpus, &matched, &lex, args.top_k)?;
        let (accepted, by) = if args.interactive {
            let mut keep = Vec::new();
            for c in &candidates {
                if ask(&c.term, c.score, c.score >= args.threshold)? {
                    keep.push(c.clone());
                }
            }
            (keep, AcceptedBy::Human)
        } else {
            (auto_accept(&candidates, args.threshold), AcceptedBy::Auto)
        };
        eprintln!(
            "round {}: {} matched tweets, {} candidates, {} accepted",
            lex.round() + 1,
            matched.len(),
            candidates.len(),
            accepted.len()
        );
        if accepted.is_empty() {
            break;
        }
        lex = expand_round(&lex, &accepted, by).0;
    }
    let mut out = output(args.output.as_deref())?;
    lex.write_jsonl(&mut out)?;
    out.flush()?;
    Ok(())
}

pub fn cv(args: &CvArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let spec = features(&args.features)?;
    let options = CvOptions {
        repetitions: args.repetitions,
        folds: args.folds,
        seed: args.seed,
        embedding: skipgram(&args.embedding, args.seed),
        dataset: args.input.input.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned()),
        threads: args.threads,
        ..CvOptions::default()
    };
    let report = cross_validate(&corpus, &spec, &trainer(&args.trainer)?, &options)?;
    if let Some(path) = &args.output {
        let mut out = output(Some(path))?;
        out.write_all(report.to_tsv().as_bytes())?;
        out.flush()?;
    }
    for (run, reason) in report.failed_reasons() {
        log::warn!("run {run} failed: {reason}");
    }
    let mut out = output(None)?;
    out.write_all(report.aggregate_tsv().as_bytes())?;
    out.flush()?;
    Ok(())
}

pub fn bench(args: &BenchArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let feature_specs = args.features.iter().map(|f| features(f)).collect::<Result<Vec<_>>>()?;
    let classifiers = args.classifiers.iter().map(|c| classifier(c)).collect::<Result<Vec<_>>>()?;
    let mut config = BenchConfig::new(args.fractions.clone(), feature_specs, classifiers);
    config.seed = args.seed;
    config.workers = args.workers;
    config.trainer = trainer(&args.trainer)?;
    config.cv = CvOptions {
        repetitions: args.repetitions,
        folds: args.folds,
        embedding: skipgram(&args.embedding, args.seed),
        dataset: args.input.input.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned()),
        ..CvOptions::default()
    };
    let report = run_bench(&corpus, &config).map_err(|e| match e {
        tweetmine::Error::InvalidInput(m) => CliError::Usage(m),
        e => e.into(),
    })?;
    report.write_to(&args.output_dir)?;
    let mut out = output(None)?;
    for t in [&report.fscore, &report.timing, &report.embedding] {
        writeln!(out, "{}", t.to_aligned())?;
    }
    out.flush()?;
    Ok(())
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let corpus = load_corpus(&args.input)?;
    let mut config = RelabelConfig::new(features(&args.features)?, trainer(&args.trainer)?);
    config.embedding = skipgram(&args.embedding, args.seed);
    config.review_budget = args.budget;
    config.include_false_negatives = args.false_negatives;
    config.seed = args.seed;
    let topics = match args.topics {
        Some(k) => Some(fit_lda(&corpus, &LdaConfig { k, seed: args.seed, ..LdaConfig::default() })?),
        None => None,
    };
    let lexicon = match &args.lexicon {
        Some(p) => Some(Lexicon::read_jsonl(BufReader::new(File::open(p)?))?),
        None => None,
    };
    let store = SessionStore::open(&args.session)?;
    let state = if store.audit_path().exists() || store.stats_path().exists() {
        eprintln!("resuming session in {}", args.session.display());
        RelabelState::resume(corpus, config, store)?
    } else {
        RelabelState::new(corpus, config)?.with_store(store)
    };
    let state = state.with_context(topics, lexicon);
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|e| CliError::Usage(format!("bad address: {e}")))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(async {
        let service = Service::new(state);
        if !args.no_initial_retrain {
            service.spawn_retrain();
        }
        eprintln!("serving on http://{addr}");
        tweetmine_server::serve(service, addr, args.ui_dir.clone()).await
    })?;
    Ok(())
}
