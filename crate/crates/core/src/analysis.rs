//! Distribution summaries, inequality statistics and comparisons over
//! accessibility scores.
//!
//! The Gini coefficient and Lorenz curve are reporting conveniences layered
//! on top of the accessibility scores: 0 means every document is equally
//! accessible.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GINI_NOTE: &str = "inequality statistic over accessibility scores (reporting aid)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub count: usize,
    pub total: f64,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub std_dev: f64,
    pub quantiles: BTreeMap<String, f64>,
    pub gini: f64,
    pub gini_note: String,
    pub zero_count: usize,
    #[serde(skip)]
    pub lorenz: Vec<(f64, f64)>,
}

/// Linear-interpolation quantile of an ascending slice.
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Gini coefficient via the sorted rank-weighted formula, O(n log n).
///
/// Defined as 0 when every value is 0.
pub fn gini(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    gini_sorted(&sorted)
}

fn gini_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    if n == 0 || total <= 0.0 {
        return 0.0;
    }
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * (i + 1) as f64 - n as f64 - 1.0) * x)
        .sum();
    (weighted / (n as f64 * total)).clamp(0.0, 1.0)
}

/// Lorenz curve points `(population share, score share)` from `(0,0)` to `(1,1)`.
///
/// With zero total mass every score share is 0.
pub fn lorenz_curve(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    lorenz_sorted(&sorted)
}

fn lorenz_sorted(sorted: &[f64]) -> Vec<(f64, f64)> {
    let n = sorted.len();
    let total: f64 = sorted.iter().sum();
    let mut points = Vec::with_capacity(n + 1);
    points.push((0.0, 0.0));
    let mut running = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        running += x;
        let share = if total > 0.0 {
            if i + 1 == n {
                1.0
            } else {
                (running / total).min(1.0)
            }
        } else {
            0.0
        };
        points.push(((i + 1) as f64 / n as f64, share));
    }
    points
}

pub fn summarize(scores: &[f64]) -> Result<DistributionReport> {
    if scores.is_empty() {
        return Err(Error::Config("cannot summarize an empty score vector".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let total: f64 = sorted.iter().sum();
    let mean = total / n;
    let var = sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let quantiles = (1..=9)
        .map(|k| (format!("p{}", k * 10), quantile_sorted(&sorted, k as f64 / 10.0)))
        .collect();
    Ok(DistributionReport {
        count: sorted.len(),
        total,
        mean,
        median: quantile_sorted(&sorted, 0.5),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
        std_dev: var.sqrt(),
        quantiles,
        gini: gini_sorted(&sorted),
        gini_note: GINI_NOTE.to_owned(),
        zero_count: sorted.iter().filter(|&&x| x == 0.0).count(),
        lorenz: lorenz_sorted(&sorted),
    })
}

/// Scores for one audited run, keyed by document id in ingestion order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredRun {
    pub doc_ids: Vec<String>,
    pub scores: Vec<f64>,
    pub checksum: String,
}

impl ScoredRun {
    pub fn new(doc_ids: Vec<String>, scores: Vec<f64>, checksum: impl Into<String>) -> Result<Self> {
        if doc_ids.len() != scores.len() {
            return Err(Error::Internal(format!(
                "{} doc ids for {} scores",
                doc_ids.len(),
                scores.len()
            )));
        }
        Ok(ScoredRun {
            doc_ids,
            scores,
            checksum: checksum.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub label: String,
    pub size: usize,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanRatio {
    pub numerator: String,
    pub denominator: String,
    /// `None` when the denominator group has zero mean.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub groups: Vec<GroupStats>,
    pub mean_ratios: Vec<MeanRatio>,
}

/// Per-group mean/median and the ratio of means for every pair of groups
/// (labels in sorted order, earlier label as numerator).
pub fn compare_groups(run: &ScoredRun, groups: &BTreeMap<String, Vec<String>>) -> Result<GroupComparison> {
    let position: HashMap<&str, usize> = run
        .doc_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut owner: HashMap<&str, &str> = HashMap::new();
    let mut stats = Vec::with_capacity(groups.len());
    for (label, ids) in groups {
        if ids.is_empty() {
            return Err(Error::Config(format!("group \"{label}\" is empty")));
        }
        let mut values = Vec::with_capacity(ids.len());
        for id in ids {
            let &pos = position
                .get(id.as_str())
                .ok_or_else(|| Error::UnknownDocId(id.clone()))?;
            if let Some(first) = owner.insert(id.as_str(), label.as_str()) {
                return Err(Error::OverlappingGroups {
                    id: id.clone(),
                    first: first.to_owned(),
                    second: label.clone(),
                });
            }
            values.push(run.scores[pos]);
        }
        values.sort_by(f64::total_cmp);
        stats.push(GroupStats {
            label: label.clone(),
            size: values.len(),
            mean: values.iter().sum::<f64>() / values.len() as f64,
            median: quantile_sorted(&values, 0.5),
        });
    }
    let mut mean_ratios = Vec::new();
    for (i, a) in stats.iter().enumerate() {
        for b in &stats[i + 1..] {
            mean_ratios.push(MeanRatio {
                numerator: a.label.clone(),
                denominator: b.label.clone(),
                ratio: (b.mean != 0.0).then(|| a.mean / b.mean),
            });
        }
    }
    Ok(GroupComparison {
        groups: stats,
        mean_ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub doc_id: String,
    pub score_a: f64,
    pub score_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunComparison {
    #[serde(skip)]
    pub rows: Vec<DeltaRow>,
    pub documents: usize,
    pub changed: usize,
    pub mean_abs_delta: f64,
    /// Tie-adjusted Kendall tau; `None` when either run is constant.
    pub kendall_tau_b: Option<f64>,
}

/// Per-document deltas (`b - a`) and rank correlation between two runs
/// over the same corpus.
pub fn compare_runs(a: &ScoredRun, b: &ScoredRun) -> Result<RunComparison> {
    if a.checksum != b.checksum {
        return Err(Error::ChecksumMismatch {
            left: a.checksum.clone(),
            right: b.checksum.clone(),
        });
    }
    if a.doc_ids != b.doc_ids {
        return Err(Error::Internal("runs share a checksum but not a doc table".into()));
    }
    let rows: Vec<DeltaRow> = a
        .doc_ids
        .iter()
        .zip(a.scores.iter().zip(&b.scores))
        .map(|(id, (&x, &y))| DeltaRow {
            doc_id: id.clone(),
            score_a: x,
            score_b: y,
            delta: y - x,
        })
        .collect();
    let n = rows.len();
    let changed = rows.iter().filter(|r| r.delta != 0.0).count();
    let mean_abs_delta = if n == 0 {
        0.0
    } else {
        rows.iter().map(|r| r.delta.abs()).sum::<f64>() / n as f64
    };
    Ok(RunComparison {
        rows,
        documents: n,
        changed,
        mean_abs_delta,
        kendall_tau_b: kendall_tau_b(&a.scores, &b.scores),
    })
}

/// Number of pairs within runs of equal values in an ascending slice.
fn tied_pairs<T: PartialEq>(sorted: impl Iterator<Item = T>) -> u64 {
    let mut total = 0u64;
    let mut run = 0u64;
    let mut prev: Option<T> = None;
    for x in sorted {
        if prev.as_ref() == Some(&x) {
            run += 1;
        } else {
            total += run * run.saturating_sub(1) / 2;
            run = 1;
        }
        prev = Some(x);
    }
    total + run * run.saturating_sub(1) / 2
}

/// Counts inversions while merge-sorting `v` ascending.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Kendall's tau-b in O(n log n) (Knight's algorithm).
///
/// Returns `None` for fewer than two points or when either input is constant.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "kendall_tau_b needs equal-length inputs");
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let ties_x = tied_pairs(pairs.iter().map(|p| p.0.to_bits()));
    let ties_xy = tied_pairs(pairs.iter().map(|p| (p.0.to_bits(), p.1.to_bits())));

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(n);
    let swaps = merge_count(&mut ys, &mut buf);
    let ties_y = tied_pairs(ys.iter().map(|v| v.to_bits()));

    let denom = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    if denom == 0.0 {
        return None;
    }
    let numer = n0 as i128 - ties_x as i128 - ties_y as i128 + ties_xy as i128 - 2 * swaps as i128;
    Some((numer as f64 / denom).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct O(n²) mean-absolute-difference definition.
    fn gini_pairwise(x: &[f64]) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        if mean == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for a in x {
            for b in x {
                acc += (a - b).abs();
            }
        }
        acc / (2.0 * n * n * mean)
    }

    fn tau_b_pairwise(x: &[f64], y: &[f64]) -> Option<f64> {
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let sx = (x[i] - x[j]).signum() * (x[i] != x[j]) as i32 as f64;
                let sy = (y[i] - y[j]).signum() * (y[i] != y[j]) as i32 as f64;
                match (sx == 0.0, sy == 0.0) {
                    (true, true) => {}
                    (true, false) => tx += 1,
                    (false, true) => ty += 1,
                    (false, false) if sx == sy => c += 1,
                    _ => d += 1,
                }
            }
        }
        let denom = (((c + d + tx) * (c + d + ty)) as f64).sqrt();
        (denom > 0.0).then(|| (c - d) as f64 / denom)
    }

    fn run(ids: &[&str], scores: &[f64], checksum: &str) -> ScoredRun {
        ScoredRun::new(ids.iter().map(|s| s.to_string()).collect(), scores.to_vec(), checksum).unwrap()
    }

    #[test]
    fn gini_known_values() {
        assert_eq!(gini(&[0.0, 0.0, 0.0, 1.0]), 0.75);
        assert_eq!(gini_pairwise(&[0.0, 0.0, 0.0, 1.0]), 0.75);
        assert_eq!(gini(&[2.0, 2.0, 2.0]), 0.0);
        assert_eq!(gini(&[0.0, 0.0]), 0.0);
        assert_eq!(gini(&[5.0]), 0.0);
    }

    #[test]
    fn uniform_scores_summary() {
        let r = summarize(&[0.5; 8]).unwrap();
        assert_eq!(r.gini, 0.0);
        assert_eq!(r.zero_count, 0);
        assert_eq!(r.std_dev, 0.0);
        for (i, &(p, s)) in r.lorenz.iter().enumerate() {
            assert_eq!(p, i as f64 / 8.0);
            assert!((p - s).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_summary() {
        let r = summarize(&[0.0; 5]).unwrap();
        assert_eq!(r.gini, 0.0);
        assert_eq!(r.zero_count, 5);
        assert!(r.lorenz.iter().all(|&(_, s)| s == 0.0));
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn summary_statistics() {
        let r = summarize(&[4.0, 1.0, 3.0, 2.0, 0.0]).unwrap();
        assert_eq!(r.count, 5);
        assert_eq!(r.mean, 2.0);
        assert_eq!(r.median, 2.0);
        assert_eq!(r.min, 0.0);
        assert_eq!(r.max, 4.0);
        assert_eq!(r.std_dev, 2f64.sqrt());
        assert_eq!(r.quantiles["p10"], 0.4);
        assert_eq!(r.quantiles["p90"], 3.6);
        assert_eq!(r.quantiles.len(), 9);
        assert_eq!(r.zero_count, 1);
        assert_eq!(r.lorenz.first(), Some(&(0.0, 0.0)));
        assert_eq!(r.lorenz.last(), Some(&(1.0, 1.0)));
        assert!(r.lorenz.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
    }

    #[test]
    fn group_comparison() {
        let r = run(&["d1", "d2"], &[0.25, 1.0], "c");
        let mut groups = BTreeMap::new();
        groups.insert("A".to_string(), vec!["d2".to_string()]);
        groups.insert("B".to_string(), vec!["d1".to_string()]);
        let cmp = compare_groups(&r, &groups).unwrap();
        assert_eq!(cmp.mean_ratios[0].ratio, Some(4.0));
        assert_eq!(cmp.groups[0].size, 1);

        let r = run(&["a", "b", "c", "d"], &[1.0, 3.0, 3.0, 1.0], "c");
        let mut groups = BTreeMap::new();
        groups.insert("x".to_string(), vec!["a".to_string(), "b".to_string()]);
        groups.insert("y".to_string(), vec!["c".to_string(), "d".to_string()]);
        assert_eq!(compare_groups(&r, &groups).unwrap().mean_ratios[0].ratio, Some(1.0));
    }

    #[test]
    fn group_errors() {
        let r = run(&["a", "b"], &[1.0, 0.0], "c");
        let mut groups = BTreeMap::new();
        groups.insert("x".to_string(), vec!["a".to_string(), "zz".to_string()]);
        let err = compare_groups(&r, &groups).unwrap_err();
        assert!(err.to_string().contains("zz"));

        let mut groups = BTreeMap::new();
        groups.insert("x".to_string(), vec!["a".to_string()]);
        groups.insert("y".to_string(), vec!["a".to_string(), "b".to_string()]);
        assert!(matches!(compare_groups(&r, &groups), Err(Error::OverlappingGroups { .. })));

        let mut groups = BTreeMap::new();
        groups.insert("x".to_string(), vec![]);
        assert!(compare_groups(&r, &groups).is_err());

        let mut groups = BTreeMap::new();
        groups.insert("x".to_string(), vec!["a".to_string()]);
        groups.insert("y".to_string(), vec!["b".to_string()]);
        assert_eq!(compare_groups(&r, &groups).unwrap().mean_ratios[0].ratio, None);
    }

    #[test]
    fn run_comparison() {
        let a = run(&["a", "b", "c"], &[0.1, 0.5, 0.9], "k");
        let same = compare_runs(&a, &a).unwrap();
        assert!(same.rows.iter().all(|r| r.delta == 0.0));
        assert_eq!(same.kendall_tau_b, Some(1.0));
        assert_eq!(same.changed, 0);

        let rev = run(&["a", "b", "c"], &[0.9, 0.5, 0.1], "k");
        assert_eq!(compare_runs(&a, &rev).unwrap().kendall_tau_b, Some(-1.0));

        let other = run(&["a", "b", "c"], &[0.9, 0.5, 0.1], "other");
        assert!(matches!(compare_runs(&a, &other), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn tau_with_ties_matches_pairwise() {
        let x = [0.0, 0.0, 1.0, 2.0, 2.0, 3.0, 0.0];
        let y = [0.0, 1.0, 1.0, 0.0, 2.0, 3.0, 0.0];
        let fast = kendall_tau_b(&x, &y).unwrap();
        let slow = tau_b_pairwise(&x, &y).unwrap();
        assert!((fast - slow).abs() < 1e-12);
        assert_eq!(kendall_tau_b(&[1.0, 1.0], &[0.0, 2.0]), None);
        assert_eq!(kendall_tau_b(&[1.0], &[0.0]), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn scores() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..10.0, (0u8..4).prop_map(f64::from)], 1..200)
        }

        proptest! {
            #[test]
            fn gini_formulas_agree(x in scores()) {
                prop_assert!((gini(&x) - gini_pairwise(&x)).abs() <= 1e-9);
                let g = gini(&x);
                prop_assert!((0.0..=1.0).contains(&g));
            }

            #[test]
            fn summary_is_permutation_invariant(x in scores(), seed in any::<u64>()) {
                use rand::{seq::SliceRandom, SeedableRng};
                let mut shuffled = x.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let a = summarize(&x).unwrap();
                let b = summarize(&shuffled).unwrap();
                prop_assert_eq!(a.gini.to_bits(), b.gini.to_bits());
                prop_assert_eq!(a.median, b.median);
                prop_assert_eq!(a.quantiles, b.quantiles);
                prop_assert_eq!(a.lorenz, b.lorenz);
                prop_assert_eq!(a.zero_count, b.zero_count);
                prop_assert_eq!(a.min, b.min);
                prop_assert_eq!(a.max, b.max);
            }

            #[test]
            fn lorenz_is_monotone(x in scores()) {
                let l = lorenz_curve(&x);
                prop_assert_eq!(l[0], (0.0, 0.0));
                prop_assert!(l.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 <= w[1].1));
                if x.iter().sum::<f64>() > 0.0 {
                    prop_assert_eq!(*l.last().unwrap(), (1.0, 1.0));
                }
            }

            #[test]
            fn tau_matches_pairwise(pairs in prop::collection::vec(((0u8..5).prop_map(f64::from), (0u8..5).prop_map(f64::from)), 2..60)) {
                let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                match (kendall_tau_b(&x, &y), tau_b_pairwise(&x, &y)) {
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b),
                    (a, b) => prop_assert_eq!(a, b),
                }
            }

            #[test]
            fn tau_antisymmetric_under_reversal(
                xs in prop::collection::btree_set(0u32..10_000, 2..80),
                seed in any::<u64>(),
            ) {
                use rand::{seq::SliceRandom, SeedableRng};
                let x: Vec<f64> = xs.into_iter().map(f64::from).collect();
                let mut y = x.clone();
                y.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let reversed: Vec<f64> = y.iter().map(|v| -v).collect();
                let t = kendall_tau_b(&x, &y).unwrap();
                let r = kendall_tau_b(&x, &reversed).unwrap();
                prop_assert!((t + r).abs() < 1e-12, "{} vs {}", t, r);
                prop_assert_eq!(kendall_tau_b(&x, &x), Some(1.0));
                let desc: Vec<f64> = x.iter().map(|v| -v).collect();
                prop_assert_eq!(kendall_tau_b(&x, &desc), Some(-1.0));
            }
        }
    }
}
