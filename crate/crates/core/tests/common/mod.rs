//! Shared test fixtures: random corpora and a brute-force reference
//! implementation of the accessibility sum that works directly on raw token
//! lists, with no index, no scratch buffers and no top-k selection.

#![allow(dead_code)]

use std::collections::BTreeSet;

use accaudit::{Collection, Tokenizer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub enum OracleModel {
    Tfidf,
    Bm25 { k1: f64, b: f64 },
}

#[derive(Clone, Copy, Debug)]
pub enum OracleCost {
    Cutoff(usize),
    Power(f64),
}

impl OracleCost {
    pub fn apply(self, rank: usize) -> f64 {
        match self {
            OracleCost::Cutoff(c) => {
                if rank <= c {
                    1.0
                } else {
                    0.0
                }
            }
            OracleCost::Power(beta) => 1.0 / (rank as f64).powf(beta),
        }
    }
}

fn count(doc: &[String], term: &str) -> u32 {
    doc.iter().filter(|t| t.as_str() == term).count() as u32
}

/// Score of `doc` for `query` computed from scratch.
pub fn oracle_score(docs: &[Vec<String>], query: &[String], d: usize, model: OracleModel) -> Option<f64> {
    let n = docs.len() as f64;
    let total_len: usize = docs.iter().map(Vec::len).sum();
    let avg = total_len as f64 / docs.len() as f64;
    let len = docs[d].len() as f64;
    let mut score = 0.0;
    let mut matched = false;
    for term in query {
        let tf = count(&docs[d], term);
        if tf == 0 {
            continue;
        }
        matched = true;
        let df = docs.iter().filter(|doc| count(doc, term) > 0).count() as f64;
        let tf = f64::from(tf);
        score += match model {
            OracleModel::Tfidf => tf * (1.0 + n / df).ln(),
            OracleModel::Bm25 { k1, b } => {
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * len / avg))
            }
        };
    }
    matched.then_some(score)
}

/// Full ranking of matching documents by (score desc, ordinal asc), cut at `depth`.
pub fn oracle_ranking(docs: &[Vec<String>], query: &[String], model: OracleModel, depth: usize) -> Vec<usize> {
    let mut scored: Vec<(usize, f64)> = (0..docs.len())
        .filter_map(|d| oracle_score(docs, query, d, model).map(|s| (d, s)))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.into_iter().take(depth).map(|(d, _)| d).collect()
}

/// Triple loop: queries × ranked documents × cost.
pub fn oracle_access(
    docs: &[Vec<String>],
    queries: &[(Vec<String>, f64)],
    model: OracleModel,
    depth: usize,
    cost: OracleCost,
) -> Vec<f64> {
    let mut access = vec![0.0; docs.len()];
    for (terms, likelihood) in queries {
        let ranking = oracle_ranking(docs, terms, model, depth);
        for (i, &d) in ranking.iter().enumerate() {
            access[d] += likelihood * cost.apply(i + 1);
        }
    }
    access
}

/// Every distinct unigram and adjacent bigram in the raw token lists.
pub fn oracle_ngrams(docs: &[Vec<String>]) -> BTreeSet<Vec<String>> {
    let mut grams = BTreeSet::new();
    for doc in docs {
        for t in doc {
            grams.insert(vec![t.clone()]);
        }
        for w in doc.windows(2) {
            grams.insert(w.to_vec());
        }
    }
    grams
}

/// Independent reciprocal rank of `doc` in `ranking`.
pub fn reciprocal_rank(ranking: &[usize], doc: usize) -> f64 {
    for (i, &d) in ranking.iter().enumerate() {
        if d == doc {
            return 1.0 / (i + 1) as f64;
        }
    }
    0.0
}

/// Small corpus over a tiny vocabulary, so ties and repeated terms are common.
pub fn small_corpus(seed: u64, max_docs: usize) -> Collection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = ["ant", "bee", "cat", "dog", "eel", "fox", "gnu", "hen"];
    let n = rng.gen_range(2..=max_docs);
    let docs: Vec<(String, String)> = (0..n)
        .map(|i| {
            let len = rng.gen_range(0..9);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    let span = rng.gen_range(1..=vocab.len());
                    vocab[rng.gen_range(0..span)]
                })
                .collect();
            (format!("doc{i:02}"), words.join(" "))
        })
        .collect();
    Collection::from_texts(docs, &Tokenizer::new()).unwrap()
}

/// Larger synthetic corpus with a skewed term distribution.
pub fn synthetic_corpus(seed: u64, docs: usize, vocab: usize, min_len: usize, max_len: usize) -> Collection {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texts: Vec<(String, String)> = (0..docs)
        .map(|i| {
            let len = rng.gen_range(min_len..=max_len);
            let words: Vec<String> = (0..len)
                .map(|_| {
                    let u: f64 = rng.gen();
                    format!("t{}", (u * u * u * vocab as f64) as usize)
                })
                .collect();
            (format!("doc{i:05}"), words.join(" "))
        })
        .collect();
    Collection::from_texts(texts, &Tokenizer::new()).unwrap()
}

pub fn token_lists(c: &Collection) -> Vec<Vec<String>> {
    c.iter().map(|d| d.tokens.clone()).collect()
}
