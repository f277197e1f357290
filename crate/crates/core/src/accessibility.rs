//! Document accessibility scores.
//!
//! For each document `d`:
//!
//! ```text
//! A(d) = Σ_{q ∈ Q} o_q · f(c_dq, θ)
//! ```
//!
//! where `o_q` is the query likelihood and `c_dq` is the 1-based rank of `d`
//! in the ranked list returned for `q`. Documents not in a query's top
//! `depth` results have no rank and contribute nothing for that query.
//!
//! Two cost functions are supported: a cumulative cutoff (`1` if the rank is
//! within `c`, else `0`) and a gravity decay (`1 / rank^β`).
//!
//! Queries are evaluated in parallel when the `parallel` feature is on, but
//! contributions are always folded in ascending query order so the result
//! is bit-identical for any worker count.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::DocOrdinal;
use crate::query_universe::QueryUniverse;
use crate::ranking::{RankedList, Ranker, RankingModel};

pub const DEFAULT_DEPTH: usize = 100;
pub const DEFAULT_CUTOFF: usize = 10;
pub const DEFAULT_BETA: f64 = 1.0;

/// Cumulative cost: `1` when `rank <= cutoff`, else `0`.
#[inline]
pub fn f_cumulative(rank: usize, cutoff: usize) -> f64 {
    if rank <= cutoff {
        1.0
    } else {
        0.0
    }
}

/// Gravity cost: `1 / rank^beta`. At `beta = 1` this is the reciprocal rank.
#[inline]
pub fn f_gravity(rank: usize, beta: f64) -> f64 {
    1.0 / (rank as f64).powf(beta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Measure {
    Cumulative { c: usize },
    Gravity { beta: f64 },
}

impl Measure {
    pub fn kind(&self) -> MeasureKind {
        match self {
            Measure::Cumulative { .. } => MeasureKind::Cumulative,
            Measure::Gravity { .. } => MeasureKind::Gravity,
        }
    }

    #[inline]
    pub fn cost(&self, rank: usize) -> f64 {
        match *self {
            Measure::Cumulative { c } => f_cumulative(rank, c),
            Measure::Gravity { beta } => f_gravity(rank, beta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Cumulative,
    Gravity,
}

impl FromStr for MeasureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cumulative" => Ok(MeasureKind::Cumulative),
            "gravity" => Ok(MeasureKind::Gravity),
            other => Err(Error::Config(format!(
                "unknown measure \"{other}\" (expected cumulative or gravity)"
            ))),
        }
    }
}

impl fmt::Display for MeasureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureKind::Cumulative => "cumulative",
            MeasureKind::Gravity => "gravity",
        })
    }
}

/// Cost function parameters plus the retrieval depth used to build each
/// ranked list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub measure: Measure,
    pub depth: usize,
}

impl MeasureConfig {
    pub fn cumulative(c: usize, depth: usize) -> Result<Self> {
        let m = MeasureConfig {
            measure: Measure::Cumulative { c },
            depth,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn gravity(beta: f64, depth: usize) -> Result<Self> {
        let m = MeasureConfig {
            measure: Measure::Gravity { beta },
            depth,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 {
            return Err(Error::Config("depth must be >= 1".into()));
        }
        match self.measure {
            Measure::Cumulative { c } => {
                if c < 1 {
                    return Err(Error::Config("cutoff c must be >= 1".into()));
                }
                if c > self.depth {
                    return Err(Error::Config(format!(
                        "cutoff c ({c}) exceeds retrieval depth ({})",
                        self.depth
                    )));
                }
            }
            Measure::Gravity { beta } => {
                if !(beta.is_finite() && beta >= 0.0) {
                    return Err(Error::Config(format!("beta must be a finite value >= 0, got {beta}")));
                }
            }
        }
        Ok(())
    }
}

/// Per-document accessibility scores, indexed by document ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessVector {
    pub scores: Vec<f64>,
    pub measure: MeasureConfig,
    pub universe_size: usize,
    pub model: Option<RankingModel>,
}

impl AccessVector {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.scores.iter().sum()
    }
}

/// Sparse contributions of a single query: `(doc, o_q · f(rank))`.
pub type Contributions = Vec<(DocOrdinal, f64)>;

/// Contribution of one ranked list to the accessibility of its documents.
pub fn query_contributions(list: &RankedList, likelihood: f64, measure: &Measure) -> Contributions {
    list.ranks()
        .map(|(doc, rank)| (doc, likelihood * measure.cost(rank)))
        .filter(|&(_, v)| v != 0.0)
        .collect()
}

/// How many worker threads evaluate queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(usize);

impl Workers {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("worker count must be >= 1".into()));
        }
        Ok(Workers(n))
    }

    pub fn single() -> Self {
        Workers(1)
    }

    pub fn available() -> Self {
        Workers(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

impl Default for Workers {
    fn default() -> Self {
        Workers::available()
    }
}

/// Queries per reduction batch; bounds the memory held by pending contributions.
const BATCH: usize = 4096;

/// Computes the accessibility of every document over `universe`.
///
/// Likelihoods are used as given; normalize the universe beforehand if a
/// probability distribution is wanted.
pub fn accumulate_scores<R: Ranker>(
    ranker: &R,
    universe: &QueryUniverse,
    measure: &MeasureConfig,
    workers: Workers,
) -> Result<AccessVector> {
    measure.validate()?;
    if universe.is_empty() {
        return Err(Error::EmptyUniverse);
    }
    let n = ranker.num_docs();
    let mut scores = vec![0.0f64; n];

    for_each_batch(ranker, universe, measure, workers, |batch| {
        for contributions in batch {
            for (doc, value) in contributions {
                scores[doc as usize] += value;
            }
        }
    })?;

    if let Some(bad) = scores.iter().position(|s| s.is_nan() || *s < 0.0) {
        return Err(Error::Internal(format!(
            "accessibility of document {bad} is {}",
            scores[bad]
        )));
    }

    Ok(AccessVector {
        scores,
        measure: *measure,
        universe_size: universe.len(),
        model: ranker.model(),
    })
}

/// Evaluates queries in batches of [`BATCH`], handing each batch's
/// per-query contributions (in query order) to `fold`.
fn for_each_batch<R, F>(
    ranker: &R,
    universe: &QueryUniverse,
    measure: &MeasureConfig,
    workers: Workers,
    mut fold: F,
) -> Result<()>
where
    R: Ranker,
    F: FnMut(Vec<Contributions>),
{
    let eval = |scratch: &mut R::Scratch, q: &crate::query_universe::Query| {
        let list = ranker.retrieve(&q.terms, measure.depth, scratch);
        query_contributions(&list, q.likelihood, &measure.measure)
    };

    #[cfg(feature = "parallel")]
    if workers.get() > 1 {
        use rayon::prelude::*;

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.get())
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
        for chunk in universe.queries().chunks(BATCH) {
            let batch: Vec<Contributions> = pool.install(|| {
                chunk
                    .par_iter()
                    .map_init(|| ranker.new_scratch(), |scratch, q| eval(scratch, q))
                    .collect()
            });
            fold(batch);
        }
        return Ok(());
    }

    #[cfg(not(feature = "parallel"))]
    if workers.get() > 1 {
        log::debug!("built without the parallel feature; evaluating sequentially");
    }

    let mut scratch = ranker.new_scratch();
    for chunk in universe.queries().chunks(BATCH) {
        fold(chunk.iter().map(|q| eval(&mut scratch, q)).collect());
    }
    Ok(())
}
