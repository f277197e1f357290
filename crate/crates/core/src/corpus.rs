//! Document ingestion and tokenization.
//!
//! A [`Collection`] is immutable once loaded. Iteration order is ingestion
//! order: file order for JSONL, lexicographic filename order for a directory.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// On-disk layout of a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One `{"id": .., "text": ..}` object per line.
    Jsonl,
    /// One document per regular file; the filename is the doc_id.
    PlaintextDir,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "plaintext-dir" | "dir" => Ok(CorpusFormat::PlaintextDir),
            other => Err(Error::Config(format!(
                "unknown corpus format \"{other}\" (expected jsonl or plaintext-dir)"
            ))),
        }
    }
}

/// Lowercasing, non-alphanumeric splitting tokenizer with an optional stoplist.
///
/// Underscore is a separator. No stemming is applied.
#[derive(Debug, Clone, Default)]
pub struct Tokenizer {
    stopwords: HashSet<String>,
}

impl Tokenizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let stopwords = words
            .into_iter()
            .flat_map(|w| tokenize(w.as_ref()))
            .collect();
        Tokenizer { stopwords }
    }

    /// Reads a UTF-8 stopword file with one token per line. Blank lines are skipped.
    pub fn from_stopword_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::with_stopwords(text.lines().map(str::trim).filter(|l| !l.is_empty())))
    }

    pub fn stopword_count(&self) -> usize {
        self.stopwords.len()
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut tokens = tokenize(text);
        if !self.stopwords.is_empty() {
            tokens.retain(|t| !self.stopwords.contains(t));
        }
        tokens
    }
}

/// Lowercases `text` and splits it on every non-alphanumeric character,
/// dropping empty fragments.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>, tokenizer: &Tokenizer) -> Self {
        let text = text.into();
        let tokens = tokenizer.tokenize(&text);
        Document {
            doc_id: doc_id.into(),
            text,
            tokens,
        }
    }

    pub fn length(&self) -> usize {
        self.tokens.len()
    }
}

#[derive(Debug, Clone)]
pub struct Collection {
    documents: Vec<Document>,
    doc_index: HashMap<String, usize>,
    checksum: String,
}

impl Collection {
    /// Builds a collection from already tokenized documents, rejecting
    /// duplicate ids and empty input.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCollection);
        }
        let mut doc_index = HashMap::with_capacity(documents.len());
        for (ordinal, doc) in documents.iter().enumerate() {
            if doc_index.insert(doc.doc_id.clone(), ordinal).is_some() {
                return Err(Error::DuplicateDocId(doc.doc_id.clone()));
            }
        }
        let checksum = corpus_checksum(documents.iter().map(|d| (d.doc_id.as_str(), d.tokens.as_slice())));
        Ok(Collection {
            documents,
            doc_index,
            checksum,
        })
    }

    /// Convenience for tests and small tools: `(id, text)` pairs tokenized with `tokenizer`.
    pub fn from_texts<I, A, B>(texts: I, tokenizer: &Tokenizer) -> Result<Self>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        Self::from_documents(
            texts
                .into_iter()
                .map(|(id, text)| Document::new(id, text, tokenizer))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.documents.iter()
    }

    pub fn get(&self, ordinal: usize) -> Option<&Document> {
        self.documents.get(ordinal)
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<usize> {
        self.doc_index.get(doc_id).copied()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.doc_id.clone()).collect()
    }

    /// SHA-256 over doc ids and token streams, in ingestion order.
    pub fn checksum(&self) -> &str {
        &self.checksum
    }
}

impl<'a> IntoIterator for &'a Collection {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.documents.iter()
    }
}

pub(crate) fn corpus_checksum<'a, I>(docs: I) -> String
where
    I: IntoIterator<Item = (&'a str, &'a [String])>,
{
    let mut hasher = Sha256::new();
    for (id, tokens) in docs {
        hasher.update(id.as_bytes());
        hasher.update([0x1f]);
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                hasher.update(b" ");
            }
            hasher.update(t.as_bytes());
        }
        hasher.update([0x1e]);
    }
    hex::encode(hasher.finalize())
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    text: String,
}

pub fn load_collection(path: &Path, format: CorpusFormat, tokenizer: &Tokenizer) -> Result<Collection> {
    let documents = match format {
        CorpusFormat::Jsonl => read_jsonl(path, tokenizer)?,
        CorpusFormat::PlaintextDir => read_dir(path, tokenizer)?,
    };
    Collection::from_documents(documents)
}

fn read_jsonl(path: &Path, tokenizer: &Tokenizer) -> Result<Vec<Document>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JsonRecord =
            serde_json::from_str(&line).map_err(|e| Error::malformed(path, lineno, e.to_string()))?;
        if record.id.is_empty() {
            return Err(Error::malformed(path, lineno, "empty doc_id"));
        }
        docs.push(Document::new(record.id, record.text, tokenizer));
    }
    Ok(docs)
}

fn read_dir(path: &Path, tokenizer: &Tokenizer) -> Result<Vec<Document>> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let entry = entry.map_err(|e| Error::io(path, e))?;
        let file_type = entry.file_type().map_err(|e| Error::io(entry.path(), e))?;
        if !file_type.is_file() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with('.') {
            continue;
        }
        entries.push((name, entry.path()));
    }
    entries.sort();
    entries
        .into_iter()
        .map(|(name, file)| {
            let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            Ok(Document::new(name, text, tokenizer))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn tokenize_rules() {
        assert_eq!(tokenize("The cat's mat!"), ["the", "cat", "s", "mat"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("A-B a_b"), ["a", "b", "a", "b"]);
        assert_eq!(tokenize("  x1 Y2\tz\n"), ["x1", "y2", "z"]);
    }

    #[test]
    fn stopwords_are_removed_after_normalization() {
        let tok = Tokenizer::with_stopwords(["The", "a"]);
        assert_eq!(tok.tokenize("The cat and A dog"), ["cat", "and", "dog"]);
    }

    #[test]
    fn jsonl_two_records() {
        let f = write_tmp("{\"id\":\"d1\",\"text\":\"Cat sat\"}\n{\"id\":\"d2\",\"text\":\"cat cat mat\"}\n");
        let c = load_collection(f.path(), CorpusFormat::Jsonl, &Tokenizer::new()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(0).unwrap().tokens, ["cat", "sat"]);
        assert_eq!(c.get(1).unwrap().length(), 3);
        assert_eq!(c.ordinal("d2"), Some(1));
    }

    #[test]
    fn empty_file_is_empty_collection() {
        let f = write_tmp("");
        let err = load_collection(f.path(), CorpusFormat::Jsonl, &Tokenizer::new()).unwrap_err();
        assert_eq!(err.to_string(), "empty collection");
    }

    #[test]
    fn duplicate_id_is_named() {
        let f = write_tmp("{\"id\":\"x\",\"text\":\"a\"}\n{\"id\":\"x\",\"text\":\"b\"}\n");
        let err = load_collection(f.path(), CorpusFormat::Jsonl, &Tokenizer::new()).unwrap_err();
        assert!(matches!(err, Error::DuplicateDocId(ref id) if id == "x"));
        assert!(err.to_string().contains("\"x\""));
    }

    #[test]
    fn malformed_record_reports_line() {
        let f = write_tmp("{\"id\":\"a\",\"text\":\"ok\"}\n\n{\"id\":3}\n");
        let err = load_collection(f.path(), CorpusFormat::Jsonl, &Tokenizer::new()).unwrap_err();
        match err {
            Error::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("{\"id\":\"\",\"text\":\"ok\"}\n");
        assert!(matches!(
            load_collection(f.path(), CorpusFormat::Jsonl, &Tokenizer::new()),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn directory_mode_sorts_by_filename() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("b.txt"), "Second doc").unwrap();
        fs::write(dir.path().join("a.txt"), "First").unwrap();
        fs::write(dir.path().join(".hidden"), "skip").unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        let c = load_collection(dir.path(), CorpusFormat::PlaintextDir, &Tokenizer::new()).unwrap();
        assert_eq!(c.doc_ids(), ["a.txt", "b.txt"]);
        assert_eq!(c.get(1).unwrap().tokens, ["second", "doc"]);
    }

    #[test]
    fn missing_path_is_io_error_naming_path() {
        let err = load_collection(Path::new("/nonexistent/corpus.jsonl"), CorpusFormat::Jsonl, &Tokenizer::new())
            .unwrap_err();
        assert!(err.to_string().contains("/nonexistent/corpus.jsonl"));
    }

    #[test]
    fn checksum_is_stable_and_content_sensitive() {
        let tok = Tokenizer::new();
        let a = Collection::from_texts([("d1", "cat sat"), ("d2", "cat cat mat")], &tok).unwrap();
        let b = Collection::from_texts([("d1", "Cat  sat"), ("d2", "cat cat mat")], &tok).unwrap();
        let c = Collection::from_texts([("d1", "cat sat"), ("d2", "cat mat")], &tok).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
        assert_eq!(a.checksum().len(), 64);
    }

    mod props {
        use super::super::tokenize;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn tokenize_is_idempotent(text in "\\PC{0,64}") {
                let once = tokenize(&text);
                let twice = tokenize(&once.join(" "));
                prop_assert_eq!(&once, &twice);
                for t in &once {
                    prop_assert!(!t.is_empty());
                    prop_assert!(!t.chars().any(char::is_whitespace));
                    prop_assert_eq!(t.to_lowercase(), t.clone());
                }
            }
        }
    }
}
