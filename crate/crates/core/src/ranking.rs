//! Ranking models that turn a query into the ranked list whose positions
//! define each document's distance for that query.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{DocOrdinal, InvertedIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tfidf,
    Bm25,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(ModelKind::Tfidf),
            "bm25" => Ok(ModelKind::Bm25),
            other => Err(Error::Config(format!("unknown model \"{other}\" (expected tfidf or bm25)"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Tfidf => "tfidf",
            ModelKind::Bm25 => "bm25",
        })
    }
}

pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

/// Scoring function plus its parameters. `k1` and `b` are ignored by tf-idf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingModel {
    pub kind: ModelKind,
    pub k1: f64,
    pub b: f64,
}

impl Default for RankingModel {
    fn default() -> Self {
        RankingModel::bm25()
    }
}

impl RankingModel {
    pub fn tfidf() -> Self {
        RankingModel {
            kind: ModelKind::Tfidf,
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }

    pub fn bm25() -> Self {
        RankingModel {
            kind: ModelKind::Bm25,
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }

    pub fn with_params(kind: ModelKind, k1: f64, b: f64) -> Result<Self> {
        let model = RankingModel { kind, k1, b };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Error::Config(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }

    fn idf(&self, num_docs: usize, df: usize) -> f64 {
        let n = num_docs as f64;
        let df = df as f64;
        match self.kind {
            ModelKind::Tfidf => (1.0 + n / df).ln(),
            ModelKind::Bm25 => (1.0 + (n - df + 0.5) / (df + 0.5)).ln(),
        }
    }

    /// BM25 length normaliser `k1 * (1 - b + b * len / avg_len)`.
    fn length_norm(&self, doc_len: u32, avg_len: f64) -> f64 {
        self.k1 * (1.0 - self.b + self.b * f64::from(doc_len) / avg_len)
    }

    fn term_score(&self, idf: f64, tf: u32, norm: f64) -> f64 {
        let tf = f64::from(tf);
        match self.kind {
            ModelKind::Tfidf => tf * idf,
            ModelKind::Bm25 => idf * (tf * (self.k1 + 1.0)) / (tf + norm),
        }
    }
}

/// Score of one document for a query. Repeated query terms count once per
/// occurrence. Returns 0 when the document matches no query term.
pub fn score(model: &RankingModel, terms: &[String], doc: DocOrdinal, index: &InvertedIndex) -> f64 {
    let n = index.num_docs();
    let norm = model.length_norm(index.doc_length(doc), index.stats().avg_doc_length);
    let mut total = 0.0;
    for term in terms {
        let list = index.postings(term);
        if let Ok(pos) = list.entries.binary_search_by_key(&doc, |p| p.doc) {
            let idf = model.idf(n, list.len());
            total += model.term_score(idf, list.entries[pos].tf, norm);
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc: DocOrdinal,
    pub score: f64,
}

/// Descending-score result list; ties go to the lower document ordinal.
/// Entry `i` has rank `i + 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    pub entries: Vec<RankedEntry>,
    pub depth: usize,
}

impl RankedList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(doc, rank)` pairs with 1-based ranks.
    pub fn ranks(&self) -> impl Iterator<Item = (DocOrdinal, usize)> + '_ {
        self.entries.iter().enumerate().map(|(i, e)| (e.doc, i + 1))
    }

    pub fn rank_of(&self, doc: DocOrdinal) -> Option<usize> {
        self.entries.iter().position(|e| e.doc == doc).map(|i| i + 1)
    }
}

fn by_rank(a: &RankedEntry, b: &RankedEntry) -> Ordering {
    b.score.total_cmp(&a.score).then(a.doc.cmp(&b.doc))
}

/// Anything that can produce a ranked list for a query. Accessibility is
/// computed against this seam, so alternative systems can be plugged in.
pub trait Ranker: Sync {
    /// Per-worker reusable buffers.
    type Scratch: Send;

    fn num_docs(&self) -> usize;

    fn new_scratch(&self) -> Self::Scratch;

    fn retrieve(&self, terms: &[String], depth: usize, scratch: &mut Self::Scratch) -> RankedList;

    /// The scoring model, when the ranker is one of the built-in ones.
    fn model(&self) -> Option<RankingModel> {
        None
    }
}

/// Term-at-a-time evaluator for a [`RankingModel`] over an [`InvertedIndex`].
#[derive(Debug)]
pub struct Searcher<'a> {
    model: RankingModel,
    index: &'a InvertedIndex,
    norms: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ScoreScratch {
    acc: Vec<f64>,
    matched: Vec<bool>,
    touched: Vec<DocOrdinal>,
}

impl<'a> Searcher<'a> {
    pub fn new(model: RankingModel, index: &'a InvertedIndex) -> Self {
        let avg = index.stats().avg_doc_length;
        let norms = (0..index.num_docs() as DocOrdinal)
            .map(|d| model.length_norm(index.doc_length(d), avg))
            .collect();
        Searcher { model, index, norms }
    }

    pub fn index(&self) -> &InvertedIndex {
        self.index
    }
}

impl Ranker for Searcher<'_> {
    type Scratch = ScoreScratch;

    fn num_docs(&self) -> usize {
        self.index.num_docs()
    }

    fn model(&self) -> Option<RankingModel> {
        Some(self.model)
    }

    fn new_scratch(&self) -> ScoreScratch {
        let n = self.index.num_docs();
        ScoreScratch {
            acc: vec![0.0; n],
            matched: vec![false; n],
            touched: Vec::new(),
        }
    }

    fn retrieve(&self, terms: &[String], depth: usize, scratch: &mut ScoreScratch) -> RankedList {
        let n = self.index.num_docs();
        for term in terms {
            let Some(id) = self.index.term_id(term) else {
                continue;
            };
            let list = self.index.postings_by_id(id);
            let idf = self.model.idf(n, list.len());
            for p in list.entries {
                let d = p.doc as usize;
                if !scratch.matched[d] {
                    scratch.matched[d] = true;
                    scratch.touched.push(p.doc);
                }
                scratch.acc[d] += self.model.term_score(idf, p.tf, self.norms[d]);
            }
        }

        let mut entries: Vec<RankedEntry> = scratch
            .touched
            .drain(..)
            .map(|doc| {
                let d = doc as usize;
                let score = scratch.acc[d];
                scratch.acc[d] = 0.0;
                scratch.matched[d] = false;
                RankedEntry { doc, score }
            })
            .collect();

        if depth == 0 {
            entries.clear();
        } else if entries.len() > depth {
            entries.select_nth_unstable_by(depth - 1, by_rank);
            entries.truncate(depth);
        }
        entries.sort_unstable_by(by_rank);
        RankedList { entries, depth }
    }
}

/// One-shot top-k retrieval.
pub fn retrieve_topk(model: &RankingModel, terms: &[String], index: &InvertedIndex, depth: usize) -> RankedList {
    let searcher = Searcher::new(*model, index);
    let mut scratch = searcher.new_scratch();
    searcher.retrieve(terms, depth, &mut scratch)
}
