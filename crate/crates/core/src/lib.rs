//! Document accessibility auditing.
//!
//! Measures, for every document in a collection, how much opportunity a
//! retrieval system gives it to be retrieved: each query in a
//! corpus-derived universe contributes its likelihood times a rank-based
//! cost for every document it retrieves.
//!
//! Pipeline: [`corpus`] → [`index`] → [`query_universe`] →
//! [`accessibility`] (using a [`ranking`] model) → [`analysis`].

pub mod accessibility;
pub mod analysis;
pub mod corpus;
pub mod error;
pub mod index;
pub mod output;
pub mod query_universe;
pub mod ranking;

pub use accessibility::{accumulate_scores, AccessVector, Measure, MeasureConfig, MeasureKind, Workers};
pub use analysis::{compare_groups, compare_runs, summarize, DistributionReport, ScoredRun};
pub use corpus::{load_collection, tokenize, Collection, CorpusFormat, Document, Tokenizer};
pub use error::{Error, Result};
pub use index::{build_index, InvertedIndex};
pub use query_universe::{generate_universe, load_universe, save_universe, Query, QueryUniverse, UniverseConfig, Weighting};
pub use ranking::{retrieve_topk, ModelKind, RankedList, Ranker, RankingModel, Searcher};
