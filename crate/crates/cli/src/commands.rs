use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use accaudit::accessibility::{DEFAULT_BETA, DEFAULT_CUTOFF, DEFAULT_DEPTH};
use accaudit::analysis::{compare_groups, compare_runs};
use accaudit::output::{
    read_audit_dir, write_comparison_csv, write_json, write_lorenz_csv, write_scores_csv, AuditMetadata, Report,
    AUDIT_METADATA_FILE, COMPARISON_FILE, LORENZ_FILE, REPORT_FILE, SCORES_FILE,
};
use accaudit::query_universe::{write_universe, DEFAULT_MAX_QUERIES};
use accaudit::ranking::{DEFAULT_B, DEFAULT_K1};
use accaudit::{
    accumulate_scores, build_index, generate_universe, load_collection, load_universe, summarize, Collection,
    CorpusFormat, InvertedIndex, MeasureConfig, MeasureKind, ModelKind, QueryUniverse, RankingModel, Searcher,
    Tokenizer, UniverseConfig, Weighting, Workers,
};
use log::{info, warn};

use crate::config::{ConfigFile, Resolver};
use crate::{AuditArgs, CliError, CorpusArgs, IndexArgs, QueriesArgs, ReportArgs, UniverseArgs};

fn load_corpus(args: CorpusArgs, r: &mut Resolver) -> Result<Collection, CliError> {
    let path: PathBuf = r.required(args.corpus, "corpus")?;
    load_corpus_from(&path, args.format, args.stopwords, r)
}

fn load_corpus_from(
    path: &Path,
    format: Option<String>,
    stopwords: Option<String>,
    r: &mut Resolver,
) -> Result<Collection, CliError> {
    let default_format = if path.is_dir() { "plaintext-dir" } else { "jsonl" };
    let format: String = r.value(format, "format", default_format.to_owned())?;
    let format: CorpusFormat = format.parse()?;
    let tokenizer = match r.optional::<PathBuf>(stopwords, "stopwords")? {
        Some(p) => Tokenizer::from_stopword_file(&p)?,
        None => Tokenizer::new(),
    };
    let collection = load_collection(path, format, &tokenizer)?;
    info!(
        "loaded {} documents from {} ({} stopwords)",
        collection.len(),
        path.display(),
        tokenizer.stopword_count()
    );
    Ok(collection)
}

fn universe_config(args: UniverseArgs, r: &mut Resolver) -> Result<UniverseConfig, CliError> {
    let defaults = UniverseConfig::default();
    let config = UniverseConfig {
        max_len: r.value(args.max_len, "max-len", defaults.max_len)?,
        min_df: r.value(args.min_df, "min-df", defaults.min_df)?,
        weighting: r.value::<WeightingArg>(args.weighting, "weighting", WeightingArg(defaults.weighting))?.0,
        max_queries: r.value(args.max_queries, "max-queries", DEFAULT_MAX_QUERIES)?,
    };
    config.validate()?;
    Ok(config)
}

/// `Weighting` with `Display`/`FromStr` suited to the resolver.
struct WeightingArg(Weighting);

impl std::str::FromStr for WeightingArg {
    type Err = accaudit::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(WeightingArg)
    }
}

impl std::fmt::Display for WeightingArg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn finish<W: Write>(mut w: W, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn index(args: IndexArgs, file: &ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let collection = load_corpus(args.corpus, &mut r)?;
    let out: PathBuf = r.required(args.out, "out")?;
    let index = build_index(&collection);
    index.save(&out)?;
    println!("documents\t{}", index.num_docs());
    println!("vocabulary\t{}", index.vocabulary_size());
    println!("tokens\t{}", index.stats().total_length);
    println!("avg_doc_length\t{}", index.stats().avg_doc_length);
    println!("checksum\t{}", index.checksum());
    println!("snapshot\t{}", out.display());
    Ok(())
}

pub fn queries(args: QueriesArgs, file: &ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let collection = load_corpus(args.corpus, &mut r)?;
    let config = universe_config(args.universe, &mut r)?;
    let index = build_index(&collection);
    let universe = generate_universe(&collection, &index, &config)?;
    if universe.generation().is_some_and(|g| g.truncated) {
        warn!(
            "universe truncated to {} of {} candidate queries",
            universe.len(),
            universe.generation().map_or(0, |g| g.candidates)
        );
    }
    match r.optional::<PathBuf>(args.out, "out")? {
        Some(path) => {
            let mut w = create_file(&path)?;
            write_universe(&universe, &mut w).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            finish(w, &path)?;
            info!("wrote {} queries to {}", universe.len(), path.display());
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_universe(&universe, &mut lock).map_err(|e| CliError::input(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn resolve_model(args: &AuditArgs, r: &mut Resolver) -> Result<RankingModel, CliError> {
    let kind: String = r.value(args.model.clone(), "model", ModelKind::Bm25.to_string())?;
    let kind: ModelKind = kind.parse()?;
    let k1 = r.value(args.k1.clone(), "k1", DEFAULT_K1)?;
    let b = r.value(args.b.clone(), "b", DEFAULT_B)?;
    if kind == ModelKind::Tfidf {
        r.forget("k1");
        r.forget("b");
    }
    Ok(RankingModel::with_params(kind, k1, b)?)
}

fn resolve_measure(args: &AuditArgs, r: &mut Resolver) -> Result<MeasureConfig, CliError> {
    let kind: String = r.value(args.measure.clone(), "measure", MeasureKind::Gravity.to_string())?;
    let kind: MeasureKind = kind.parse()?;
    let depth = r.value(args.depth.clone(), "depth", DEFAULT_DEPTH)?;
    let explicit_c: Option<usize> = r.optional(args.c.clone(), "c")?;
    if let Some(c) = explicit_c {
        if c > depth {
            return Err(CliError::input(format!(
                "invalid configuration: cutoff c ({c}) exceeds retrieval depth ({depth})"
            )));
        }
    }
    let measure = match kind {
        MeasureKind::Cumulative => {
            r.forget("beta");
            MeasureConfig::cumulative(explicit_c.unwrap_or(DEFAULT_CUTOFF.min(depth)), depth)?
        }
        MeasureKind::Gravity => {
            r.forget("c");
            MeasureConfig::gravity(r.value(args.beta.clone(), "beta", DEFAULT_BETA)?, depth)?
        }
    };
    Ok(measure)
}

pub fn audit(args: AuditArgs, file: &ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let out_dir: PathBuf = r.required(args.out_dir.clone(), "out-dir")?;
    r.forget("out-dir");
    let model = resolve_model(&args, &mut r)?;
    let measure = resolve_measure(&args, &mut r)?;
    let workers = Workers::new(r.value(args.workers.clone(), "workers", Workers::available().get())?)?;
    r.forget("workers");
    let normalize: bool = r.value(args.normalize.clone(), "normalize", true)?;

    let corpus_path: Option<PathBuf> = r.optional(args.corpus.corpus.clone(), "corpus")?;
    let collection = match &corpus_path {
        Some(p) => Some(load_corpus_from(p, args.corpus.format.clone(), args.corpus.stopwords.clone(), &mut r)?),
        None => None,
    };
    let index = match (r.optional::<PathBuf>(args.index.clone(), "index")?, &collection) {
        (Some(snapshot), collection) => {
            let index = InvertedIndex::load(&snapshot)?;
            if let Some(c) = collection {
                if c.checksum() != index.checksum() {
                    return Err(accaudit::Error::ChecksumMismatch {
                        left: c.checksum().to_owned(),
                        right: index.checksum().to_owned(),
                    }
                    .into());
                }
            }
            info!("loaded index snapshot {} ({} documents)", snapshot.display(), index.num_docs());
            index
        }
        (None, Some(c)) => build_index(c),
        (None, None) => return Err(CliError::input("audit needs --corpus or --index")),
    };

    let universe: QueryUniverse = match r.optional::<PathBuf>(args.universe.clone(), "universe")? {
        Some(path) => load_universe(&path)?,
        None => {
            let collection = collection
                .as_ref()
                .ok_or_else(|| CliError::input("generating queries needs --corpus (or pass --universe)"))?;
            let config = universe_config(args.generation.clone(), &mut r)?;
            generate_universe(collection, &index, &config)?
        }
    };
    let likelihood_sum_raw = universe.likelihood_sum();
    let universe = if normalize {
        if likelihood_sum_raw == 0.0 {
            warn!("query likelihoods sum to zero; leaving them unnormalized");
        }
        universe.normalize()
    } else {
        universe
    };
    let out_of_vocabulary = universe
        .queries()
        .iter()
        .filter(|q| q.terms.iter().any(|t| index.term_id(t).is_none()))
        .count();
    if out_of_vocabulary > 0 {
        warn!("{out_of_vocabulary} queries contain terms absent from the index");
    }

    info!(
        "auditing {} documents with {} queries ({} model, {} measure, depth {}, {} workers)",
        index.num_docs(),
        universe.len(),
        model.kind,
        measure.measure.kind(),
        measure.depth,
        workers.get()
    );
    let searcher = Searcher::new(model, &index);
    let vector = accumulate_scores(&searcher, &universe, &measure, workers)?;

    fs::create_dir_all(&out_dir).map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;
    let scores_path = out_dir.join(SCORES_FILE);
    let mut w = create_file(&scores_path)?;
    write_scores_csv(&mut w, index.doc_ids(), &vector)?;
    finish(w, &scores_path)?;

    let metadata = AuditMetadata {
        measure,
        model,
        num_docs: index.num_docs(),
        universe_size: universe.len(),
        likelihood_sum_raw,
        normalized: universe.is_normalized(),
        truncated: universe.generation().map(|g| g.truncated),
        universe_generation: universe.generation().cloned(),
        corpus_checksum: index.checksum().to_owned(),
        effective_config: r.into_effective(),
    };
    let meta_path = out_dir.join(AUDIT_METADATA_FILE);
    let mut w = create_file(&meta_path)?;
    write_json(&mut w, &metadata)?;
    finish(w, &meta_path)?;
    info!("wrote {} and {}", scores_path.display(), meta_path.display());
    Ok(())
}

pub fn report(args: ReportArgs, file: &ConfigFile) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let audit_dir: PathBuf = r.required(args.audit_dir, "audit-dir")?;
    let out_dir: PathBuf = r.optional(args.out_dir, "out-dir")?.unwrap_or_else(|| audit_dir.clone());
    let (run, meta) = read_audit_dir(&audit_dir)?;

    let distribution = summarize(&run.scores)?;

    let groups = match r.optional::<PathBuf>(args.groups, "groups")? {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            let groups: BTreeMap<String, Vec<String>> = serde_json::from_str(&text)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            Some(compare_groups(&run, &groups)?)
        }
        None => None,
    };

    let comparison = match r.optional::<PathBuf>(args.compare, "compare")? {
        Some(other_dir) => {
            let (other, _) = read_audit_dir(&other_dir)?;
            Some(compare_runs(&run, &other)?)
        }
        None => None,
    };

    fs::create_dir_all(&out_dir).map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;
    let lorenz_path = out_dir.join(LORENZ_FILE);
    let mut w = create_file(&lorenz_path)?;
    write_lorenz_csv(&mut w, &distribution.lorenz)?;
    finish(w, &lorenz_path)?;

    if let Some(cmp) = &comparison {
        let path = out_dir.join(COMPARISON_FILE);
        let mut w = create_file(&path)?;
        write_comparison_csv(&mut w, cmp)?;
        finish(w, &path)?;
    }

    let report = Report {
        corpus_checksum: meta.corpus_checksum,
        measure: Some(meta.measure),
        model: Some(meta.model),
        distribution,
        groups,
        comparison,
    };
    let report_path = out_dir.join(REPORT_FILE);
    let mut w = create_file(&report_path)?;
    write_json(&mut w, &report)?;
    finish(w, &report_path)?;
    info!(
        "gini {:.4}, {} of {} documents never retrieved; wrote {}",
        report.distribution.gini,
        report.distribution.zero_count,
        report.distribution.count,
        report_path.display()
    );
    Ok(())
}
