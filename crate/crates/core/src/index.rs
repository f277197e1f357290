//! In-memory inverted index with the collection statistics used by the
//! ranking models.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Collection;
use crate::error::{Error, Result};

pub type TermId = u32;

/// Ordinal of a document in ingestion order.
pub type DocOrdinal = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Posting {
    pub doc: DocOrdinal,
    pub tf: u32,
}

/// Postings for a single term, sorted by document ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PostingList<'a> {
    pub term: &'a str,
    pub entries: &'a [Posting],
}

impl PostingList<'_> {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectionStats {
    pub num_docs: usize,
    pub total_length: u64,
    pub avg_doc_length: f64,
}

impl CollectionStats {
    fn new(num_docs: usize, total_length: u64) -> Self {
        let avg_doc_length = if num_docs == 0 {
            0.0
        } else {
            total_length as f64 / num_docs as f64
        };
        CollectionStats {
            num_docs,
            total_length,
            avg_doc_length,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InvertedIndex {
    terms: Vec<String>,
    vocab: HashMap<String, TermId>,
    postings: Vec<Vec<Posting>>,
    cf: Vec<u64>,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    stats: CollectionStats,
    checksum: String,
}

/// Builds the index. Term ids follow lexicographic term order so that two
/// builds over the same collection are identical.
pub fn build_index(collection: &Collection) -> InvertedIndex {
    let mut by_term: BTreeMap<&str, Vec<Posting>> = BTreeMap::new();
    let mut doc_lengths = Vec::with_capacity(collection.len());
    for (ordinal, doc) in collection.iter().enumerate() {
        let mut counts: HashMap<&str, u32> = HashMap::new();
        for t in &doc.tokens {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        for (term, tf) in counts {
            by_term.entry(term).or_default().push(Posting {
                doc: ordinal as DocOrdinal,
                tf,
            });
        }
        doc_lengths.push(doc.length() as u32);
    }

    let (terms, postings): (Vec<String>, Vec<Vec<Posting>>) = by_term
        .into_iter()
        .map(|(t, list)| (t.to_owned(), list))
        .unzip();
    InvertedIndex::from_parts(terms, postings, collection.doc_ids(), doc_lengths, collection.checksum().to_owned())
}

impl InvertedIndex {
    fn from_parts(
        terms: Vec<String>,
        postings: Vec<Vec<Posting>>,
        doc_ids: Vec<String>,
        doc_lengths: Vec<u32>,
        checksum: String,
    ) -> Self {
        let vocab = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TermId))
            .collect();
        let cf = postings
            .iter()
            .map(|list| list.iter().map(|p| u64::from(p.tf)).sum())
            .collect();
        let total_length = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let stats = CollectionStats::new(doc_ids.len(), total_length);
        InvertedIndex {
            terms,
            vocab,
            postings,
            cf,
            doc_ids,
            doc_lengths,
            stats,
            checksum,
        }
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn num_docs(&self) -> usize {
        self.stats.num_docs
    }

    pub fn vocabulary_size(&self) -> usize {
        self.terms.len()
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.vocab.get(term).copied()
    }

    pub fn term(&self, id: TermId) -> &str {
        &self.terms[id as usize]
    }

    /// Terms in id order (lexicographic).
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Postings for `term`; an unknown term yields an empty list.
    pub fn postings<'a>(&'a self, term: &'a str) -> PostingList<'a> {
        match self.term_id(term) {
            Some(id) => self.postings_by_id(id),
            None => PostingList { term, entries: &[] },
        }
    }

    pub fn postings_by_id(&self, id: TermId) -> PostingList<'_> {
        PostingList {
            term: &self.terms[id as usize],
            entries: &self.postings[id as usize],
        }
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings(term).len()
    }

    pub fn df_by_id(&self, id: TermId) -> usize {
        self.postings[id as usize].len()
    }

    pub fn cf(&self, term: &str) -> u64 {
        self.term_id(term).map_or(0, |id| self.cf[id as usize])
    }

    pub fn cf_by_id(&self, id: TermId) -> u64 {
        self.cf[id as usize]
    }

    pub fn doc_length(&self, doc: DocOrdinal) -> u32 {
        self.doc_lengths[doc as usize]
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_id(&self, doc: DocOrdinal) -> &str {
        &self.doc_ids[doc as usize]
    }

    /// Checksum of the collection this index was built from.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

const SNAPSHOT_FORMAT: &str = "accaudit-index";
const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    corpus_checksum: String,
    doc_ids: Vec<String>,
    doc_lengths: Vec<u32>,
    terms: Vec<String>,
    postings: Vec<Vec<(DocOrdinal, u32)>>,
}

impl InvertedIndex {
    /// Writes a versioned JSON snapshot. Loading it back yields an index
    /// with identical postings, statistics and doc table.
    pub fn save(&self, path: &Path) -> Result<()> {
        let snapshot = Snapshot {
            format: SNAPSHOT_FORMAT.to_owned(),
            version: SNAPSHOT_VERSION,
            corpus_checksum: self.checksum.clone(),
            doc_ids: self.doc_ids.clone(),
            doc_lengths: self.doc_lengths.clone(),
            terms: self.terms.clone(),
            postings: self
                .postings
                .iter()
                .map(|list| list.iter().map(|p| (p.doc, p.tf)).collect())
                .collect(),
        };
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, &snapshot)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let snapshot: Snapshot = serde_json::from_reader(BufReader::new(file))?;
        if snapshot.format != SNAPSHOT_FORMAT {
            return Err(Error::Snapshot(format!("format tag \"{}\"", snapshot.format)));
        }
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot(format!("version {}", snapshot.version)));
        }
        Self::from_snapshot(snapshot)
    }

    fn from_snapshot(s: Snapshot) -> Result<Self> {
        let n = s.doc_ids.len();
        if n == 0 {
            return Err(Error::EmptyCollection);
        }
        if s.doc_lengths.len() != n || s.terms.len() != s.postings.len() {
            return Err(Error::Snapshot("table lengths disagree".into()));
        }
        if s.terms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Snapshot("terms not strictly sorted".into()));
        }
        let mut seen = std::collections::HashSet::with_capacity(n);
        for id in &s.doc_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateDocId(id.clone()));
            }
        }
        let mut reconstructed = vec![0u64; n];
        let mut postings = Vec::with_capacity(s.postings.len());
        for (term, list) in s.terms.iter().zip(s.postings) {
            if list.is_empty() {
                return Err(Error::Snapshot(format!("term \"{term}\" has no postings")));
            }
            let mut prev: Option<DocOrdinal> = None;
            let mut entries = Vec::with_capacity(list.len());
            for (doc, tf) in list {
                if (doc as usize) >= n || tf == 0 || prev.is_some_and(|p| p >= doc) {
                    return Err(Error::Snapshot(format!("bad posting ({doc}, {tf}) for \"{term}\"")));
                }
                prev = Some(doc);
                reconstructed[doc as usize] += u64::from(tf);
                entries.push(Posting { doc, tf });
            }
            postings.push(entries);
        }
        if reconstructed
            .iter()
            .zip(&s.doc_lengths)
            .any(|(&r, &l)| r != u64::from(l))
        {
            return Err(Error::Snapshot("postings do not reconstruct document lengths".into()));
        }
        Ok(Self::from_parts(s.terms, postings, s.doc_ids, s.doc_lengths, s.corpus_checksum))
    }
}
