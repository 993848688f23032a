//! Hypergraph index construction from keyword profiles and entity
//! annotations, plus the optional synonym / context / TF-bin extensions.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;

use crate::corpus::{preprocess, Document};
use crate::hypergraph::{EdgeKind, EdgeSpec, Hypergraph, HypergraphBuilder, NodeKind};
use crate::keywords::{extract_keywords, KeywordProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Extension {
    Syns,
    Context,
    TfBins,
}

#[derive(Debug, Clone)]
pub struct IndexConfig {
    /// Keyword cutoff ratio.
    pub ratio: f64,
    /// Co-occurrence window for keyword extraction.
    pub window: usize,
    /// Index all distinct terms instead of the keyword profile.
    pub full_text: bool,
    pub extensions: BTreeSet<Extension>,
    /// Number of TF bins per document.
    pub tf_bins: usize,
    /// Neighbors per term for the context extension.
    pub context_k: usize,
    /// Minimum cosine similarity for a context neighbor.
    pub context_threshold: f64,
    /// Weight assigned to otherwise unweighted elements in weighted runs.
    pub default_weight: f64,
    /// Create term nodes for out-of-index synonyms of indexed terms.
    pub synonyms_add_new: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            ratio: 0.05,
            window: 4,
            full_text: false,
            extensions: BTreeSet::new(),
            tf_bins: 2,
            context_k: 5,
            context_threshold: 0.5,
            default_weight: 0.5,
            synonyms_add_new: true,
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio > 0.0 && self.ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "ratio must be in (0,1], got {}",
                self.ratio
            )));
        }
        if self.window < 2 {
            return Err(Error::InvalidParameter("window must be >= 2".into()));
        }
        if self.tf_bins < 2 {
            return Err(Error::InvalidParameter("tf_bins must be >= 2".into()));
        }
        Ok(())
    }

    pub fn effective_ratio(&self) -> f64 {
        if self.full_text {
            1.0
        } else {
            self.ratio
        }
    }
}

/// Counters reported after a build.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexReport {
    pub docs_indexed: usize,
    /// Documents with neither keywords nor mentions (no document edge).
    pub empty_documents: usize,
    /// One-keyword, zero-mention documents (degenerate document edges).
    pub degenerate_documents: usize,
    pub synonym_edges: usize,
    pub context_edges: usize,
    pub tf_bin_edges: usize,
    /// TF bins skipped for having fewer than two members.
    pub skipped_small_bins: usize,
    /// In-index terms with no embedding vector.
    pub terms_without_vectors: usize,
}

/// Compute keyword profiles for a batch of documents, in parallel,
/// preserving corpus order.
pub fn profile_documents(docs: &[Document], config: &IndexConfig) -> Result<Vec<KeywordProfile>> {
    config.validate()?;
    let ratio = config.effective_ratio();
    docs.par_iter()
        .map(|doc| extract_keywords(&doc.doc_id, &preprocess(&doc.text), ratio, config.window))
        .collect()
}

/// Insert one document into the graph: term nodes for its keywords,
/// entity nodes for its mentions, one document hyperedge over both, one
/// related-to hyperedge per subject link group, and one contained-in
/// hyperedge from the terms of each entity's name to the entity.
pub fn index_document(
    profile: &KeywordProfile,
    doc: &Document,
    builder: &mut HypergraphBuilder,
    report: &mut IndexReport,
) -> Result<()> {
    let mut members: Vec<u32> = profile
        .terms()
        .map(|t| builder.add_node(NodeKind::Term, t))
        .collect();
    let mut entities = Vec::new();
    for mention in &doc.mentions {
        entities.push(builder.add_node(NodeKind::Entity, &mention.entity_label));
    }
    members.extend(&entities);
    members.sort_unstable();
    members.dedup();

    if members.is_empty() {
        report.empty_documents += 1;
    } else {
        if members.len() == 1 && profile.keywords.len() == 1 && entities.is_empty() {
            report.degenerate_documents += 1;
        }
        builder.add_hyperedge(
            EdgeKind::Document,
            EdgeSpec::Undirected { members },
            None,
            Some(doc.doc_id.clone()),
        )?;
    }

    for link in &doc.links {
        let subject = builder.add_node(NodeKind::Entity, &link.subject);
        let objects: Vec<u32> = link
            .objects
            .iter()
            .map(|o| builder.add_node(NodeKind::Entity, o))
            .collect();
        builder.add_hyperedge(
            EdgeKind::RelatedTo,
            EdgeSpec::Directed { tail: vec![subject], head: objects },
            None,
            None,
        )?;
    }

    for mention in &doc.mentions {
        let entity = builder.add_node(NodeKind::Entity, &mention.entity_label);
        let name_terms: Vec<u32> = preprocess(&mention.entity_label)
            .iter()
            .map(|t| builder.add_node(NodeKind::Term, t))
            .collect();
        if !name_terms.is_empty() {
            builder.add_hyperedge(
                EdgeKind::ContainedIn,
                EdgeSpec::Directed { tail: name_terms, head: vec![entity] },
                None,
                None,
            )?;
        }
    }
    report.docs_indexed += 1;
    Ok(())
}

/// One synonym group per line, whitespace-separated terms.
pub fn load_synsets(path: impl AsRef<Path>) -> Result<Vec<Vec<String>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut synsets = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let terms: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
        if terms.len() >= 2 {
            synsets.push(terms);
        }
    }
    Ok(synsets)
}

/// `word v1 v2 ... vd` per line.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<f64>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut embeddings = BTreeMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let word = match fields.next() {
            Some(w) => w.to_lowercase(),
            None => continue,
        };
        let vector: std::result::Result<Vec<f64>, _> =
            fields.map(str::parse::<f64>).collect();
        let vector = vector.map_err(|_| Error::MalformedLine {
            path: path.to_path_buf(),
            line: idx + 1,
            message: "unparseable embedding component".into(),
        })?;
        if vector.is_empty() {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: idx + 1,
                message: "embedding without components".into(),
            });
        }
        embeddings.insert(word, vector);
    }
    Ok(embeddings)
}

/// Add one synonym hyperedge per synset with at least two indexed
/// terms. Out-of-index synonyms of indexed terms join the edge as new
/// term nodes when `synonyms_add_new` is set.
pub fn extend_synonyms(
    builder: &mut HypergraphBuilder,
    synsets: &[Vec<String>],
    add_new: bool,
    report: &mut IndexReport,
) -> Result<()> {
    for synset in synsets {
        let indexed: Vec<&String> = synset
            .iter()
            .filter(|t| builder.find_node(NodeKind::Term, t).is_some())
            .collect();
        if indexed.len() < 2 {
            continue;
        }
        let members: Vec<u32> = if add_new {
            synset
                .iter()
                .map(|t| builder.add_node(NodeKind::Term, t))
                .collect()
        } else {
            indexed
                .iter()
                .map(|t| builder.find_node(NodeKind::Term, t).unwrap())
                .collect()
        };
        let before = builder.edge_count();
        builder.add_hyperedge(EdgeKind::Synonym, EdgeSpec::Undirected { members }, None, None)?;
        if builder.edge_count() > before {
            report.synonym_edges += 1;
        }
    }
    Ok(())
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Group each embedded in-index term with its most cosine-similar
/// in-index terms above the threshold, one context hyperedge per
/// distinct member set.
pub fn extend_context(
    builder: &mut HypergraphBuilder,
    embeddings: &BTreeMap<String, Vec<f64>>,
    k: usize,
    threshold: f64,
    report: &mut IndexReport,
) -> Result<()> {
    // In-index terms that carry a vector, in deterministic term order.
    let mut indexed: Vec<(String, u32)> = Vec::new();
    for term in embeddings.keys() {
        if let Some(id) = builder.find_node(NodeKind::Term, term) {
            indexed.push((term.clone(), id));
        }
    }

    for (term, id) in &indexed {
        let vector = &embeddings[term];
        let mut sims: Vec<(f64, &str, u32)> = indexed
            .iter()
            .filter(|(other, _)| other != term)
            .map(|(other, oid)| (cosine(vector, &embeddings[other]), other.as_str(), *oid))
            .filter(|(sim, _, _)| *sim >= threshold)
            .collect();
        sims.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
        });
        sims.truncate(k);
        if sims.is_empty() {
            continue;
        }
        let mut members: Vec<u32> = sims.iter().map(|&(_, _, oid)| oid).collect();
        members.push(*id);
        let before = builder.edge_count();
        builder.add_hyperedge(EdgeKind::Context, EdgeSpec::Undirected { members }, None, None)?;
        if builder.edge_count() > before {
            report.context_edges += 1;
        }
    }
    Ok(())
}

/// Midpoint quantile over a sorted slice; reduces to the usual median
/// for p = 1/2.
fn quantile(sorted: &[u32], p: f64) -> f64 {
    let m = sorted.len();
    let pos = p * m as f64;
    let idx = pos.floor() as usize;
    if (pos - idx as f64).abs() < 1e-12 && idx >= 1 && idx < m {
        (sorted[idx - 1] as f64 + sorted[idx] as f64) / 2.0
    } else {
        sorted[idx.min(m - 1)] as f64
    }
}

/// Partition each document's retained keywords into `num_bins` by term
/// frequency (ties go to the upper bin) and add one weighted TF-bin
/// hyperedge per bin with at least two members. Bin weights grow with
/// frequency: bin `i` of `n` weighs `(i+1)/n`.
pub fn extend_tf_bins(
    builder: &mut HypergraphBuilder,
    profiles: &[KeywordProfile],
    num_bins: usize,
    report: &mut IndexReport,
) -> Result<()> {
    if num_bins < 2 {
        return Err(Error::InvalidParameter("tf_bins must be >= 2".into()));
    }
    for profile in profiles {
        let keywords: Vec<(&str, u32)> = profile
            .terms()
            .map(|t| (t, profile.tf.get(t).copied().unwrap_or(0)))
            .collect();
        if keywords.len() < 2 {
            if keywords.len() == 1 {
                report.skipped_small_bins += 1;
            }
            continue;
        }
        let mut sorted_tfs: Vec<u32> = keywords.iter().map(|&(_, tf)| tf).collect();
        sorted_tfs.sort_unstable();
        let thresholds: Vec<f64> = (1..num_bins)
            .map(|i| quantile(&sorted_tfs, i as f64 / num_bins as f64))
            .collect();
        let mut bins: Vec<Vec<u32>> = vec![Vec::new(); num_bins];
        for (term, tf) in &keywords {
            let bin = thresholds.iter().filter(|&&t| *tf as f64 >= t).count();
            let node = builder
                .find_node(NodeKind::Term, term)
                .ok_or_else(|| Error::InvalidParameter(format!("term {term:?} not indexed")))?;
            bins[bin].push(node);
        }
        for (i, members) in bins.into_iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            if members.len() < 2 {
                report.skipped_small_bins += 1;
                continue;
            }
            let weight = (i + 1) as f64 / num_bins as f64;
            builder.add_hyperedge(
                EdgeKind::TfBin,
                EdgeSpec::Undirected { members },
                Some(weight),
                Some(profile.doc_id.clone()),
            )?;
            report.tf_bin_edges += 1;
        }
    }
    Ok(())
}

/// Build a sealed index from documents: keyword profiles in parallel,
/// serial graph insertion, then the configured extensions.
pub fn build_index(
    docs: &[Document],
    config: &IndexConfig,
    synsets: Option<&[Vec<String>]>,
    embeddings: Option<&BTreeMap<String, Vec<f64>>>,
) -> Result<(Hypergraph, IndexReport)> {
    config.validate()?;
    let profiles = profile_documents(docs, config)?;
    let mut builder = HypergraphBuilder::new();
    let mut report = IndexReport::default();
    for (profile, doc) in profiles.iter().zip(docs) {
        index_document(profile, doc, &mut builder, &mut report)?;
    }
    for ext in &config.extensions {
        match ext {
            Extension::Syns => {
                let synsets = synsets.ok_or_else(|| {
                    Error::InvalidParameter("synonym extension enabled without a synset source".into())
                })?;
                extend_synonyms(&mut builder, synsets, config.synonyms_add_new, &mut report)?;
            }
            Extension::Context => {
                let embeddings = embeddings.ok_or_else(|| {
                    Error::InvalidParameter(
                        "context extension enabled without an embedding source".into(),
                    )
                })?;
                // Count distinct in-index terms lacking vectors.
                let vocab: HashSet<&str> = embeddings.keys().map(String::as_str).collect();
                let distinct: HashSet<&str> =
                    profiles.iter().flat_map(|p| p.terms()).collect();
                report.terms_without_vectors =
                    distinct.iter().filter(|t| !vocab.contains(*t)).count();
                extend_context(
                    &mut builder,
                    embeddings,
                    config.context_k,
                    config.context_threshold,
                    &mut report,
                )?;
            }
            Extension::TfBins => {
                extend_tf_bins(&mut builder, &profiles, config.tf_bins, &mut report)?;
            }
        }
    }
    Ok((builder.seal(), report))
}
