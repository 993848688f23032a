//! Keyword profiles: term co-occurrence graph + PageRank + ratio cutoff.
//!
//! Documents are reduced to the top fraction of their distinct terms,
//! ranked by PageRank over a sliding-window co-occurrence graph. POS
//! tagging, syntactic filtering and multi-word keyword collapse are
//! deliberately not applied.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Undirected term co-occurrence graph with per-pair counts.
#[derive(Debug, Clone)]
pub struct CooccurrenceGraph {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    /// Edge key is (min_idx, max_idx); no self-loops.
    edges: BTreeMap<(usize, usize), u32>,
}

impl CooccurrenceGraph {
    pub fn node_count(&self) -> usize {
        self.terms.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn count(&self, a: &str, b: &str) -> Option<u32> {
        let &ia = self.index.get(a)?;
        let &ib = self.index.get(b)?;
        if ia == ib {
            return None;
        }
        self.edges.get(&(ia.min(ib), ia.max(ib))).copied()
    }
}

/// Build the co-occurrence graph: every token pair at positional
/// distance < `window` contributes one count to its undirected edge.
pub fn build_cooccurrence_graph(tokens: &[String], window: usize) -> Result<CooccurrenceGraph> {
    if window < 2 {
        return Err(Error::InvalidParameter(format!(
            "co-occurrence window must be >= 2, got {window}"
        )));
    }
    let mut terms = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut ids = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let id = *index.entry(tok.clone()).or_insert_with(|| {
            terms.push(tok.clone());
            terms.len() - 1
        });
        ids.push(id);
    }
    let mut edges: BTreeMap<(usize, usize), u32> = BTreeMap::new();
    for i in 0..ids.len() {
        for j in (i + 1)..ids.len().min(i + window) {
            let (a, b) = (ids[i], ids[j]);
            if a == b {
                continue;
            }
            *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    Ok(CooccurrenceGraph { terms, index, edges })
}

/// PageRank hyperparameters. The user-facing parameters (window, ratio)
/// live on [`KeywordProfile`]; these are implementation knobs.
#[derive(Debug, Clone)]
pub struct PagerankConfig {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Treat co-occurrence counts as transition weights.
    pub weighted: bool,
}

impl Default for PagerankConfig {
    fn default() -> Self {
        PagerankConfig {
            damping: 0.85,
            tol: 1e-9,
            max_iter: 100,
            weighted: true,
        }
    }
}

/// Power iteration over the undirected co-occurrence graph. Dangling
/// (isolated) node mass is redistributed uniformly, so scores always sum
/// to 1 within tolerance.
pub fn pagerank(graph: &CooccurrenceGraph, config: &PagerankConfig) -> Result<Vec<f64>> {
    let n = graph.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if !(config.damping > 0.0 && config.damping < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must be in (0,1), got {}",
            config.damping
        )));
    }

    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(a, b), &count) in &graph.edges {
        let w = if config.weighted { count as f64 } else { 1.0 };
        adjacency[a].push((b, w));
        adjacency[b].push((a, w));
    }
    let out_weight: Vec<f64> = adjacency
        .iter()
        .map(|nbrs| nbrs.iter().map(|&(_, w)| w).sum())
        .collect();

    let teleport = (1.0 - config.damping) / n as f64;
    let mut scores = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..config.max_iter {
        let dangling: f64 = (0..n)
            .filter(|&i| out_weight[i] == 0.0)
            .map(|i| scores[i])
            .sum();
        let base = teleport + config.damping * dangling / n as f64;
        next.iter_mut().for_each(|x| *x = base);
        for i in 0..n {
            if out_weight[i] > 0.0 {
                let share = config.damping * scores[i] / out_weight[i];
                for &(j, w) in &adjacency[i] {
                    next[j] += share * w;
                }
            }
        }
        let delta: f64 = scores
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut scores, &mut next);
        if delta < config.tol {
            break;
        }
    }
    Ok(scores)
}

/// The keyword-based representation of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeywordProfile {
    pub doc_id: String,
    /// (term, PageRank score), descending by score, ties lexicographic.
    pub keywords: Vec<(String, f64)>,
    pub ratio: f64,
    pub window: usize,
    /// Term frequencies over the full preprocessed document (pre-cutoff).
    pub tf: BTreeMap<String, u32>,
}

impl KeywordProfile {
    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(|(t, _)| t.as_str())
    }
}

/// Number of keywords retained for `distinct` distinct terms: ceiling of
/// `ratio * distinct`, never below 1.
pub fn cutoff_len(distinct: usize, ratio: f64) -> usize {
    if distinct == 0 {
        return 0;
    }
    ((ratio * distinct as f64).ceil() as usize).clamp(1, distinct)
}

/// Extract a keyword profile with default PageRank settings.
pub fn extract_keywords(
    doc_id: &str,
    tokens: &[String],
    ratio: f64,
    window: usize,
) -> Result<KeywordProfile> {
    extract_keywords_with(doc_id, tokens, ratio, window, &PagerankConfig::default())
}

pub fn extract_keywords_with(
    doc_id: &str,
    tokens: &[String],
    ratio: f64,
    window: usize,
    config: &PagerankConfig,
) -> Result<KeywordProfile> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "keyword ratio must be in (0,1], got {ratio}"
        )));
    }
    let mut tf: BTreeMap<String, u32> = BTreeMap::new();
    for tok in tokens {
        *tf.entry(tok.clone()).or_insert(0) += 1;
    }
    if tokens.is_empty() {
        return Ok(KeywordProfile {
            doc_id: doc_id.to_string(),
            keywords: Vec::new(),
            ratio,
            window,
            tf,
        });
    }
    let graph = build_cooccurrence_graph(tokens, window)?;
    let scores = pagerank(&graph, config)?;
    let mut ranked: Vec<(String, f64)> = graph
        .terms
        .iter()
        .cloned()
        .zip(scores)
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(cutoff_len(graph.node_count(), ratio));
    Ok(KeywordProfile {
        doc_id: doc_id.to_string(),
        keywords: ranked,
        ratio,
        window,
        tf,
    })
}
