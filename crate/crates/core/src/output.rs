//! File formats written and read by the audit pipeline: scores CSV, audit
//! metadata JSON, report JSON, Lorenz CSV and run-comparison CSV.
//!
//! Nothing here records timestamps, so identical inputs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::accessibility::{AccessVector, MeasureConfig};
use crate::analysis::{DistributionReport, GroupComparison, RunComparison, ScoredRun};
use crate::error::{Error, Result};
use crate::query_universe::GenerationInfo;
use crate::ranking::RankingModel;

pub const SCORE_DIGITS: usize = 12;

/// Formats `x` with `digits` significant digits in the style of C's `%g`:
/// trailing zeros are dropped and exponent notation is used only for very
/// small or very large magnitudes.
pub fn format_significant(x: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn format_score(x: f64) -> String {
    format_significant(x, SCORE_DIGITS)
}

/// `doc_id,score` rows in ingestion order.
pub fn write_scores_csv<W: Write>(w: W, doc_ids: &[String], vector: &AccessVector) -> Result<()> {
    if doc_ids.len() != vector.len() {
        return Err(Error::Internal(format!(
            "{} doc ids for {} scores",
            doc_ids.len(),
            vector.len()
        )));
    }
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["doc_id", "score"])?;
    for (id, &s) in doc_ids.iter().zip(&vector.scores) {
        csv.write_record([id.as_str(), &format_score(s)])?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_scores_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<f64>)> {
    let mut csv = csv::Reader::from_reader(r);
    let headers = csv.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["doc_id", "score"] {
        return Err(Error::Config(format!("unexpected scores header {headers:?}")));
    }
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let score: f64 = record[1]
            .parse()
            .map_err(|_| Error::malformed("scores.csv", i + 2, format!("bad score \"{}\"", &record[1])))?;
        ids.push(record[0].to_owned());
        scores.push(score);
    }
    Ok((ids, scores))
}

/// Sidecar JSON describing how a scores file was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditMetadata {
    pub measure: MeasureConfig,
    pub model: RankingModel,
    pub num_docs: usize,
    pub universe_size: usize,
    /// Sum of likelihoods as supplied, before any normalization.
    pub likelihood_sum_raw: f64,
    pub normalized: bool,
    /// `None` when the universe came from a file without generation info.
    pub truncated: Option<bool>,
    pub universe_generation: Option<GenerationInfo>,
    pub corpus_checksum: String,
    /// Effective settings after merging flags, config file and defaults.
    pub effective_config: BTreeMap<String, String>,
}

pub fn write_json<T: Serialize, W: Write>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io("<json output>", e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Report written by the `report` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub corpus_checksum: String,
    pub measure: Option<MeasureConfig>,
    pub model: Option<RankingModel>,
    pub distribution: DistributionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<GroupComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<RunComparison>,
}

pub fn write_lorenz_csv<W: Write>(w: W, points: &[(f64, f64)]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["pop_share", "score_share"])?;
    for &(p, s) in points {
        csv.write_record([format_score(p), format_score(s)])?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_comparison_csv<W: Write>(w: W, comparison: &RunComparison) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["doc_id", "score_a", "score_b", "delta"])?;
    for r in &comparison.rows {
        csv.write_record([
            r.doc_id.as_str(),
            &format_score(r.score_a),
            &format_score(r.score_b),
            &format_score(r.delta),
        ])?;
    }
    csv.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads an audit output directory (`scores.csv` + `audit.json`).
pub fn read_audit_dir(dir: &Path) -> Result<(ScoredRun, AuditMetadata)> {
    let meta: AuditMetadata = read_json(&dir.join(AUDIT_METADATA_FILE))?;
    let scores_path = dir.join(SCORES_FILE);
    let file = fs::File::open(&scores_path).map_err(|e| Error::io(&scores_path, e))?;
    let (ids, scores) = read_scores_csv(file)?;
    let run = ScoredRun::new(ids, scores, meta.corpus_checksum.clone())?;
    Ok((run, meta))
}

pub const SCORES_FILE: &str = "scores.csv";
pub const AUDIT_METADATA_FILE: &str = "audit.json";
pub const REPORT_FILE: &str = "report.json";
pub const LORENZ_FILE: &str = "lorenz.csv";
pub const COMPARISON_FILE: &str = "compare.csv";
