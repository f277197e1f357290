//! Corpus-derived query universe and query likelihoods.
//!
//! No query log is assumed. The universe is enumerated from the corpus:
//! every unigram with enough document frequency and, optionally, every
//! adjacent token pair seen often enough. Each query carries a likelihood
//! used to weight its contribution to a document's accessibility.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, Collection};
use crate::error::{Error, Result};
use crate::index::{InvertedIndex, TermId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Weighting {
    /// Every query gets `1/|Q|`.
    Uniform,
    /// Proportional to collection frequency; bigrams use corpus pair counts.
    CfProportional,
    /// Frequency-proportional within each n-gram order, with unigrams and
    /// bigrams each receiving an equal share of the total mass.
    BigramFreq,
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Weighting::Uniform),
            "cf-proportional" | "cf" => Ok(Weighting::CfProportional),
            "bigram-freq" => Ok(Weighting::BigramFreq),
            other => Err(Error::Config(format!(
                "unknown weighting \"{other}\" (expected uniform, cf-proportional or bigram-freq)"
            ))),
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Uniform => "uniform",
            Weighting::CfProportional => "cf-proportional",
            Weighting::BigramFreq => "bigram-freq",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniverseConfig {
    pub max_len: usize,
    pub min_df: u64,
    pub weighting: Weighting,
    pub max_queries: usize,
}

pub const DEFAULT_MAX_QUERIES: usize = 100_000;

impl Default for UniverseConfig {
    fn default() -> Self {
        UniverseConfig {
            max_len: 2,
            min_df: 1,
            weighting: Weighting::CfProportional,
            max_queries: DEFAULT_MAX_QUERIES,
        }
    }
}

impl UniverseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.max_len) {
            return Err(Error::Config(format!("max-len must be 1 or 2, got {}", self.max_len)));
        }
        if self.min_df < 1 {
            return Err(Error::Config("min-df must be >= 1".into()));
        }
        if self.max_queries < 1 {
            return Err(Error::Config("max-queries must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub terms: Vec<String>,
    pub likelihood: f64,
}

impl Query {
    pub fn new<S: Into<String>>(terms: impl IntoIterator<Item = S>, likelihood: f64) -> Self {
        Query {
            terms: terms.into_iter().map(Into::into).collect(),
            likelihood,
        }
    }

    pub fn text(&self) -> String {
        self.terms.join(" ")
    }
}

/// How a generated universe came to be; written as a comment in the TSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationInfo {
    pub config: UniverseConfig,
    pub candidates: usize,
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryUniverse {
    queries: Vec<Query>,
    normalized: bool,
    generation: Option<GenerationInfo>,
}

const NORMALIZATION_TOLERANCE: f64 = 1e-9;

impl QueryUniverse {
    /// Validates non-empty terms, non-negative likelihoods and distinct term sequences.
    pub fn new(queries: Vec<Query>) -> Result<Self> {
        if queries.is_empty() {
            return Err(Error::EmptyUniverse);
        }
        let mut seen = HashSet::with_capacity(queries.len());
        for q in &queries {
            if q.terms.is_empty() {
                return Err(Error::Config("query with no terms".into()));
            }
            if !(q.likelihood.is_finite() && q.likelihood >= 0.0) {
                return Err(Error::Config(format!(
                    "query \"{}\" has invalid likelihood {}",
                    q.text(),
                    q.likelihood
                )));
            }
            if !seen.insert(q.terms.as_slice()) {
                return Err(Error::Config(format!("duplicate query \"{}\"", q.text())));
            }
        }
        let normalized = (sum_likelihood(&queries) - 1.0).abs() <= NORMALIZATION_TOLERANCE;
        Ok(QueryUniverse {
            queries,
            normalized,
            generation: None,
        })
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn generation(&self) -> Option<&GenerationInfo> {
        self.generation.as_ref()
    }

    pub fn likelihood_sum(&self) -> f64 {
        sum_likelihood(&self.queries)
    }

    /// Rescales likelihoods to sum to one. A universe with zero total mass
    /// is returned unchanged.
    pub fn normalize(mut self) -> Self {
        let sum = self.likelihood_sum();
        if sum > 0.0 {
            for q in &mut self.queries {
                q.likelihood /= sum;
            }
            self.normalized = (self.likelihood_sum() - 1.0).abs() <= NORMALIZATION_TOLERANCE;
        }
        self
    }

    /// Multiplies every likelihood by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        QueryUniverse::new(
            self.queries
                .iter()
                .map(|q| Query {
                    terms: q.terms.clone(),
                    likelihood: q.likelihood * factor,
                })
                .collect(),
        )
    }
}

fn sum_likelihood(queries: &[Query]) -> f64 {
    queries.iter().map(|q| q.likelihood).sum()
}

struct Candidate {
    terms: Vec<TermId>,
    weight: f64,
}

/// Enumerates the query universe from the corpus.
///
/// Candidates are ranked by weight (descending, ties by lexicographic term
/// order), truncated to `max_queries`, and normalized to sum to one.
pub fn generate_universe(
    collection: &Collection,
    index: &InvertedIndex,
    config: &UniverseConfig,
) -> Result<QueryUniverse> {
    config.validate()?;

    let mut unigrams: Vec<(Vec<TermId>, u64)> = Vec::new();
    for id in 0..index.vocabulary_size() as TermId {
        if index.df_by_id(id) as u64 >= config.min_df {
            unigrams.push((vec![id], index.cf_by_id(id)));
        }
    }

    let mut bigrams: Vec<(Vec<TermId>, u64)> = Vec::new();
    if config.max_len >= 2 {
        let mut pair_counts: HashMap<(TermId, TermId), u64> = HashMap::new();
        for doc in collection {
            let ids: Vec<TermId> = doc
                .tokens
                .iter()
                .map(|t| {
                    index
                        .term_id(t)
                        .ok_or_else(|| Error::Internal(format!("token \"{t}\" missing from index")))
                })
                .collect::<Result<_>>()?;
            for w in ids.windows(2) {
                *pair_counts.entry((w[0], w[1])).or_default() += 1;
            }
        }
        bigrams = pair_counts
            .into_iter()
            .filter(|&(_, count)| count >= config.min_df)
            .map(|((a, b), count)| (vec![a, b], count))
            .collect();
    }

    let order_total = |grams: &[(Vec<TermId>, u64)]| grams.iter().map(|g| g.1).sum::<u64>() as f64;
    let (uni_total, bi_total) = (order_total(&unigrams), order_total(&bigrams));
    let weight = |count: u64, order_total: f64| match config.weighting {
        Weighting::Uniform => 1.0,
        Weighting::CfProportional => count as f64,
        Weighting::BigramFreq => count as f64 / order_total,
    };
    let mut candidates: Vec<Candidate> = unigrams
        .into_iter()
        .map(|(terms, c)| Candidate {
            terms,
            weight: weight(c, uni_total),
        })
        .chain(bigrams.into_iter().map(|(terms, c)| Candidate {
            terms,
            weight: weight(c, bi_total),
        }))
        .collect();

    if candidates.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let num_candidates = candidates.len();

    // Term ids are assigned in lexicographic term order, so comparing id
    // sequences is the same as comparing the term sequences.
    candidates.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.terms.cmp(&b.terms)));
    candidates.truncate(config.max_queries);

    let total: f64 = candidates.iter().map(|c| c.weight).sum();
    let queries = candidates
        .into_iter()
        .map(|c| Query {
            terms: c.terms.iter().map(|&id| index.term(id).to_owned()).collect(),
            likelihood: c.weight / total,
        })
        .collect();

    let mut universe = QueryUniverse::new(queries)?;
    if !universe.normalized {
        return Err(Error::Internal(format!(
            "generated likelihoods sum to {}",
            universe.likelihood_sum()
        )));
    }
    universe.generation = Some(GenerationInfo {
        config: *config,
        candidates: num_candidates,
        truncated: num_candidates > config.max_queries,
    });
    Ok(universe)
}

const GENERATED_PREFIX: &str = "# generated";

/// Writes the universe as TSV: `term[ term...]<TAB>likelihood`.
///
/// Likelihoods use the shortest decimal text that parses back to the same
/// `f64`, so a save/load round trip is exact.
pub fn write_universe<W: Write>(universe: &QueryUniverse, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# query universe: {} queries", universe.len())?;
    if let Some(info) = &universe.generation {
        writeln!(
            w,
            "{GENERATED_PREFIX} max_len={} min_df={} weighting={} max_queries={} candidates={} truncated={}",
            info.config.max_len,
            info.config.min_df,
            info.config.weighting,
            info.config.max_queries,
            info.candidates,
            info.truncated
        )?;
    }
    for q in &universe.queries {
        writeln!(w, "{}\t{}", q.text(), q.likelihood)?;
    }
    Ok(())
}

pub fn save_universe(universe: &QueryUniverse, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_universe(universe, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_universe(path: &Path) -> Result<QueryUniverse> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_universe(&text, path)
}

/// Parses universe TSV. `origin` is only used in error messages.
pub fn parse_universe(text: &str, origin: &Path) -> Result<QueryUniverse> {
    let mut queries = Vec::new();
    let mut seen: HashMap<Vec<String>, usize> = HashMap::new();
    let mut generation = None;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix(GENERATED_PREFIX) {
            generation = parse_generation(rest);
            continue;
        }
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::malformed(origin, lineno, msg);
        let (text, likelihood) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected <terms>\\t<likelihood>".into()))?;
        let likelihood: f64 = likelihood
            .trim()
            .parse()
            .map_err(|_| bad(format!("unparseable likelihood \"{likelihood}\"")))?;
        if !(likelihood.is_finite() && likelihood >= 0.0) {
            return Err(bad(format!("likelihood must be a finite value >= 0, got {likelihood}")));
        }
        let terms: Vec<String> = text.split(' ').map(str::to_owned).collect();
        for t in &terms {
            if tokenize(t) != [t.as_str()] {
                return Err(bad(format!("\"{t}\" is not a normalized term")));
            }
        }
        if let Some(first) = seen.insert(terms.clone(), lineno) {
            return Err(bad(format!("duplicate query \"{text}\" (first on line {first})")));
        }
        queries.push(Query { terms, likelihood });
    }
    let mut universe = QueryUniverse::new(queries)?;
    universe.generation = generation;
    Ok(universe)
}

fn parse_generation(rest: &str) -> Option<GenerationInfo> {
    let fields: HashMap<&str, &str> = rest.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
    Some(GenerationInfo {
        config: UniverseConfig {
            max_len: fields.get("max_len")?.parse().ok()?,
            min_df: fields.get("min_df")?.parse().ok()?,
            weighting: fields.get("weighting")?.parse().ok()?,
            max_queries: fields.get("max_queries")?.parse().ok()?,
        },
        candidates: fields.get("candidates")?.parse().ok()?,
        truncated: fields.get("truncated")?.parse().ok()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;
    use crate::index::build_index;
    use crate::ranking::{retrieve_topk, RankingModel};

    fn two_docs() -> (Collection, InvertedIndex) {
        let c = Collection::from_texts([("d1", "cat sat"), ("d2", "cat cat mat")], &Tokenizer::new()).unwrap();
        let i = build_index(&c);
        (c, i)
    }

    fn config(max_len: usize, weighting: Weighting) -> UniverseConfig {
        UniverseConfig {
            max_len,
            min_df: 1,
            weighting,
            max_queries: DEFAULT_MAX_QUERIES,
        }
    }

    fn as_map(u: &QueryUniverse) -> HashMap<String, f64> {
        u.queries().iter().map(|q| (q.text(), q.likelihood)).collect()
    }

    #[test]
    fn uniform_unigrams() {
        let (c, i) = two_docs();
        let u = generate_universe(&c, &i, &config(1, Weighting::Uniform)).unwrap();
        let m = as_map(&u);
        assert_eq!(m.len(), 3);
        for t in ["cat", "sat", "mat"] {
            assert_eq!(m[t], 1.0 / 3.0);
        }
        assert!(u.is_normalized());
        assert!(!u.generation().unwrap().truncated);
    }

    #[test]
    fn cf_proportional_unigrams() {
        let (c, i) = two_docs();
        let u = generate_universe(&c, &i, &config(1, Weighting::CfProportional)).unwrap();
        let m = as_map(&u);
        assert_eq!(m["cat"], 3.0 / 5.0);
        assert_eq!(m["sat"], 1.0 / 5.0);
        assert_eq!(m["mat"], 1.0 / 5.0);
        // Highest likelihood first, ties lexicographic.
        let order: Vec<String> = u.queries().iter().map(Query::text).collect();
        assert_eq!(order, ["cat", "mat", "sat"]);
    }

    #[test]
    fn bigrams_from_adjacent_pairs() {
        let (c, i) = two_docs();
        let u = generate_universe(&c, &i, &config(2, Weighting::CfProportional)).unwrap();
        let m = as_map(&u);
        assert!(m.contains_key("cat sat"));
        assert!(m.contains_key("cat cat"));
        assert!(m.contains_key("cat mat"));
        assert!(!m.contains_key("sat cat"));
        // cf: cat 3, sat 1, mat 1; pairs: cat sat 1, cat cat 1, cat mat 1 => total 8.
        assert_eq!(m["cat"], 3.0 / 8.0);
        assert_eq!(m["cat sat"], 1.0 / 8.0);
        assert!((u.likelihood_sum() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn bigram_freq_splits_mass_between_orders() {
        let (c, i) = two_docs();
        let u = generate_universe(&c, &i, &config(2, Weighting::BigramFreq)).unwrap();
        let (uni, bi): (Vec<&Query>, Vec<&Query>) = u.queries().iter().partition(|q| q.terms.len() == 1);
        let mass = |qs: &[&Query]| qs.iter().map(|q| q.likelihood).sum::<f64>();
        assert!((mass(&uni) - 0.5).abs() < 1e-12);
        assert!((mass(&bi) - 0.5).abs() < 1e-12);
        assert!((as_map(&u)["cat"] - 0.5 * 3.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_keeps_highest_and_renormalizes() {
        let (c, i) = two_docs();
        let mut cfg = config(1, Weighting::CfProportional);
        cfg.max_queries = 2;
        let u = generate_universe(&c, &i, &cfg).unwrap();
        let m = as_map(&u);
        assert_eq!(m.len(), 2);
        assert_eq!(m["cat"], 3.0 / 4.0);
        assert_eq!(m["mat"], 1.0 / 4.0);
        assert!(u.generation().unwrap().truncated);
        assert_eq!(u.generation().unwrap().candidates, 3);
    }

    #[test]
    fn min_df_filters_and_empty_universe_errors() {
        let (c, i) = two_docs();
        let mut cfg = config(2, Weighting::Uniform);
        cfg.min_df = 2;
        let u = generate_universe(&c, &i, &cfg).unwrap();
        assert_eq!(u.queries().iter().map(Query::text).collect::<Vec<_>>(), ["cat"]);
        cfg.min_df = 3;
        assert!(matches!(generate_universe(&c, &i, &cfg), Err(Error::EmptyUniverse)));

        let empty = Collection::from_texts([("e", "  ")], &Tokenizer::new()).unwrap();
        let ei = build_index(&empty);
        assert!(matches!(
            generate_universe(&empty, &ei, &config(1, Weighting::Uniform)),
            Err(Error::EmptyUniverse)
        ));
    }

    #[test]
    fn invalid_configs() {
        let (c, i) = two_docs();
        let mut cfg = config(3, Weighting::Uniform);
        assert!(matches!(generate_universe(&c, &i, &cfg), Err(Error::Config(_))));
        cfg.max_len = 1;
        cfg.max_queries = 0;
        assert!(matches!(generate_universe(&c, &i, &cfg), Err(Error::Config(_))));
        cfg.max_queries = 5;
        cfg.min_df = 0;
        assert!(matches!(generate_universe(&c, &i, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn every_unigram_query_retrieves_something() {
        let c = Collection::from_texts(
            [("a", "the quick brown fox"), ("b", "jumps over the lazy dog"), ("c", "fox and dog")],
            &Tokenizer::new(),
        )
        .unwrap();
        let i = build_index(&c);
        let u = generate_universe(&c, &i, &config(2, Weighting::CfProportional)).unwrap();
        for model in [RankingModel::tfidf(), RankingModel::bm25()] {
            for q in u.queries() {
                assert!(!retrieve_topk(&model, &q.terms, &i, 1).is_empty(), "{}", q.text());
            }
        }
    }

    #[test]
    fn tsv_parsing_rules() {
        let p = Path::new("u.tsv");
        let u = parse_universe("# comment\ncat sat\t0.25\n", p).unwrap();
        assert_eq!(u.queries(), [Query::new(["cat", "sat"], 0.25)]);
        assert!(!u.is_normalized());

        let err = parse_universe("cat\t0.5\ncat\t-1\n", p).unwrap_err();
        assert!(matches!(err, Error::Malformed { line: 2, .. }));
        assert!(matches!(parse_universe("cat\tabc\n", p), Err(Error::Malformed { line: 1, .. })));
        assert!(matches!(parse_universe("cat 0.5\n", p), Err(Error::Malformed { line: 1, .. })));
        assert!(matches!(parse_universe("Cat\t0.5\n", p), Err(Error::Malformed { line: 1, .. })));
        assert!(matches!(parse_universe("cat\t0.5\ncat\t0.5\n", p), Err(Error::Malformed { line: 2, .. })));
        let err = parse_universe("", p).unwrap_err();
        assert_eq!(err.to_string(), "empty universe");
        assert!(matches!(parse_universe("# only comments\n", p), Err(Error::EmptyUniverse)));
    }

    #[test]
    fn generated_universe_file_round_trip_and_determinism() {
        let (c, i) = two_docs();
        let u = generate_universe(&c, &i, &config(2, Weighting::CfProportional)).unwrap();
        let mut first = Vec::new();
        write_universe(&u, &mut first).unwrap();
        let u2 = generate_universe(&c, &i, &config(2, Weighting::CfProportional)).unwrap();
        let mut second = Vec::new();
        write_universe(&u2, &mut second).unwrap();
        assert_eq!(first, second);

        let parsed = parse_universe(std::str::from_utf8(&first).unwrap(), Path::new("x")).unwrap();
        assert_eq!(parsed, u);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn save_load_is_identity(
                entries in prop::collection::btree_map("[a-z0-9]{1,6}( [a-z0-9]{1,6})?", 0.0f64..1e6, 1..20)
            ) {
                let queries: Vec<Query> = entries
                    .into_iter()
                    .map(|(text, l)| Query::new(text.split(' '), l))
                    .collect();
                let u = QueryUniverse::new(queries).unwrap();
                let mut buf = Vec::new();
                write_universe(&u, &mut buf).unwrap();
                let back = parse_universe(std::str::from_utf8(&buf).unwrap(), Path::new("p")).unwrap();
                prop_assert_eq!(back, u);
            }
        }
    }
}
