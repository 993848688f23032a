//! Retrieval evaluation: per-topic AP / P@k / NDCG@k, MAP and GMAP
//! aggregation, TREC run parsing and the Wilcoxon signed-rank test for
//! paired system comparison.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::QrelSet;
use crate::{Error, Result};

/// Floor applied to per-topic AP inside the geometric mean.
pub const GMAP_EPSILON: f64 = 1e-5;

/// Grades at or above this count as relevant for binary metrics.
pub const RELEVANT_GRADE: u32 = 1;

/// Per-topic evaluation results.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicResult {
    pub topic_id: String,
    pub ap: f64,
    pub p_at_k: f64,
    pub ndcg_at_k: f64,
    /// Judged items retrieved for this topic.
    pub judged: usize,
}

/// Aggregated evaluation over all topics in the qrels.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_topic: Vec<TopicResult>,
    pub map: f64,
    pub gmap: f64,
    pub mean_p_at_k: f64,
    pub mean_ndcg_at_k: f64,
    pub k: usize,
    /// Mean wall time per query in milliseconds, when recorded.
    pub avg_time_per_query_ms: Option<f64>,
}

fn is_relevant(grade: Option<&u32>) -> bool {
    grade.map(|&g| g >= RELEVANT_GRADE).unwrap_or(false)
}

/// AP = mean of P@i over ranks i holding a relevant item, divided by
/// the number of relevant items in the qrels.
pub fn average_precision(ranked: &[String], qrels: &BTreeMap<String, u32>) -> f64 {
    let total_relevant = qrels.values().filter(|&&g| g >= RELEVANT_GRADE).count();
    if total_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, item) in ranked.iter().enumerate() {
        if is_relevant(qrels.get(item)) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

pub fn precision_at_k(ranked: &[String], qrels: &BTreeMap<String, u32>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranked
        .iter()
        .take(k)
        .filter(|item| is_relevant(qrels.get(*item)))
        .count();
    hits as f64 / k as f64
}

/// NDCG with gains 2^grade - 1 and discount 1/log2(rank + 1); the ideal
/// ranking comes from the qrels sorted by grade.
pub fn ndcg_at_k(ranked: &[String], qrels: &BTreeMap<String, u32>, k: usize) -> f64 {
    let gain = |grade: u32| (1u64 << grade.min(62)) as f64 - 1.0;
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, item)| {
            let g = qrels.get(item).copied().unwrap_or(0);
            gain(g) / ((i + 2) as f64).log2()
        })
        .sum();
    let mut ideal: Vec<u32> = qrels.values().copied().collect();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg: f64 = ideal
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / ((i + 2) as f64).log2())
        .sum();
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Evaluate a run against qrels. Every topic present in the qrels
/// counts; topics missing from the run score zero across the board.
pub fn aggregate(run: &BTreeMap<String, Vec<String>>, qrels: &QrelSet, k: usize) -> EvalReport {
    let empty = Vec::new();
    let mut per_topic = Vec::new();
    for topic_id in qrels.topics() {
        let judgments = qrels.for_topic(topic_id).expect("topic listed");
        let ranked = run.get(topic_id).unwrap_or(&empty);
        let judged = ranked.iter().filter(|i| judgments.contains_key(*i)).count();
        per_topic.push(TopicResult {
            topic_id: topic_id.to_string(),
            ap: average_precision(ranked, judgments),
            p_at_k: precision_at_k(ranked, judgments, k),
            ndcg_at_k: ndcg_at_k(ranked, judgments, k),
            judged,
        });
    }
    let n = per_topic.len().max(1) as f64;
    let map = per_topic.iter().map(|t| t.ap).sum::<f64>() / n;
    let gmap = (per_topic
        .iter()
        .map(|t| t.ap.max(GMAP_EPSILON).ln())
        .sum::<f64>()
        / n)
        .exp();
    let mean_p = per_topic.iter().map(|t| t.p_at_k).sum::<f64>() / n;
    let mean_ndcg = per_topic.iter().map(|t| t.ndcg_at_k).sum::<f64>() / n;
    EvalReport {
        per_topic,
        map,
        gmap: if qrels.is_empty() { 0.0 } else { gmap },
        mean_p_at_k: mean_p,
        mean_ndcg_at_k: mean_ndcg,
        k,
        avg_time_per_query_ms: None,
    }
}

/// Parse a TREC run file into item lists per topic, in rank order.
pub fn load_run(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<String>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut run: BTreeMap<String, Vec<(u64, String)>> = BTreeMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 6 {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("expected 6 run fields, found {}", fields.len()),
            });
        }
        let rank: u64 = fields[3].parse().map_err(|_| Error::MalformedLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: format!("unparseable rank {:?}", fields[3]),
        })?;
        run.entry(fields[0].to_string())
            .or_default()
            .push((rank, fields[2].to_string()));
    }
    Ok(run
        .into_iter()
        .map(|(topic, mut items)| {
            items.sort();
            (topic, items.into_iter().map(|(_, item)| item).collect())
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank test
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct WilcoxonResult {
    /// min(W+, W-), the smaller signed-rank sum.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Pairs remaining after zero differences are dropped.
    pub n_nonzero: usize,
    /// True when every difference was zero (p reported as 1).
    pub degenerate: bool,
}

/// Exact distribution is used for n <= this; the normal approximation
/// with continuity and tie corrections above.
const EXACT_LIMIT: usize = 25;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero
/// differences are dropped; tied absolute differences share average
/// ranks.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n_nonzero: 0,
            degenerate: true,
        });
    }

    // Average ranks over ties of |d|.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    let mut tie_correction = 0.0;
    while i < n {
        let mut j = i;
        while j < n && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg_rank;
        }
        let t = (j - i) as f64;
        tie_correction += t * t * t - t;
        i = j;
    }

    let w_plus: f64 = (0..n).filter(|&i| diffs[i] > 0.0).map(|i| ranks[i]).sum();
    let w_minus: f64 = (0..n).filter(|&i| diffs[i] < 0.0).map(|i| ranks[i]).sum();
    let statistic = w_plus.min(w_minus).max(0.0);

    let p_value = if n <= EXACT_LIMIT {
        exact_two_sided_p(&ranks, statistic)
    } else {
        let mean = n as f64 * (n + 1) as f64 / 4.0;
        let var = n as f64 * (n + 1) as f64 * (2 * n + 1) as f64 / 24.0 - tie_correction / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            // Continuity correction toward the mean; statistic <= mean
            // by construction.
            let z = (statistic - mean + 0.5) / var.sqrt();
            (2.0 * normal_cdf(z)).min(1.0)
        }
    };

    Ok(WilcoxonResult {
        statistic,
        p_value,
        n_nonzero: n,
        degenerate: false,
    })
}

/// Exact two-sided p: 2 * P(W <= statistic) under random signs, via a
/// count distribution over doubled ranks (ties make ranks half-integer).
fn exact_two_sided_p(ranks: &[f64], statistic: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let limit = (statistic * 2.0).round() as usize;
    let cumulative: f64 = counts.iter().take(limit.min(total) + 1).sum();
    let p = 2.0 * cumulative / 2.0f64.powi(ranks.len() as i32);
    p.min(1.0)
}

/// Standard normal CDF via an erf rational approximation
/// (Abramowitz & Stegun 7.1.26, |error| < 1.5e-7).
fn normal_cdf(z: f64) -> f64 {
    let x = z / std::f64::consts::SQRT_2;
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592 + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erf = sign * (1.0 - poly * (-x * x).exp());
    0.5 * (1.0 + erf)
}
