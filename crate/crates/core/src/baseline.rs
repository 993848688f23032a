//! Inverted-index baseline: TF-IDF and BM25 scoring over keyword
//! profiles, an entity index built from per-entity virtual documents,
//! and more-like-this entity list completion.
//!
//! Formulas are pinned so scores can be checked by hand:
//! TF-IDF `sum_q tf * ln(1 + N/df)`; BM25 with
//! `idf = ln(1 + (N - df + 0.5)/(df + 0.5))` and the Robertson term
//! `tf*(k1+1) / (tf + k1*(1 - b + b*dl/avgdl))`.

use std::collections::{BTreeMap, BTreeSet};

use crate::corpus::Document;
use crate::keywords::{extract_keywords, KeywordProfile};
use crate::ranking::{RankedList, TargetKind};
use crate::{corpus::preprocess, Error, Result};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
/// Query terms kept when building a more-like-this query.
pub const MLT_TOP_TERMS: usize = 25;

/// Term -> postings inverted index over keyword profiles. Item length
/// is the summed frequency of its indexed terms, so keyword and
/// full-text profiles both measure what the index actually holds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvertedIndex {
    /// term -> (item_id, tf), sorted by item_id.
    postings: BTreeMap<String, Vec<(String, u32)>>,
    doc_lengths: BTreeMap<String, u64>,
    total_length: u64,
}

impl InvertedIndex {
    pub fn num_items(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avgdl(&self) -> f64 {
        if self.doc_lengths.is_empty() {
            0.0
        } else {
            self.total_length as f64 / self.doc_lengths.len() as f64
        }
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map(Vec::len).unwrap_or(0)
    }

    pub fn postings(&self, term: &str) -> Option<&[(String, u32)]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn contains_item(&self, item_id: &str) -> bool {
        self.doc_lengths.contains_key(item_id)
    }

    pub fn doc_length(&self, item_id: &str) -> Option<u64> {
        self.doc_lengths.get(item_id).copied()
    }

    fn add_item(&mut self, item_id: &str, tfs: &BTreeMap<String, u32>) -> Result<()> {
        if self.doc_lengths.contains_key(item_id) {
            return Err(Error::InvalidParameter(format!(
                "duplicate index item {item_id:?}"
            )));
        }
        let mut length = 0u64;
        for (term, &tf) in tfs {
            if tf == 0 {
                continue;
            }
            self.postings
                .entry(term.clone())
                .or_default()
                .push((item_id.to_string(), tf));
            length += u64::from(tf);
        }
        self.doc_lengths.insert(item_id.to_string(), length);
        self.total_length += length;
        Ok(())
    }
}

/// Index keyword profiles: each profile contributes its kept keywords
/// with their full-document frequencies. Profiles are inserted in the
/// given order; postings stay sorted because builders feed items in
/// ascending id order — `add_item` itself only appends, so callers with
/// unsorted input should sort first.
pub fn build_document_index(profiles: &[KeywordProfile]) -> Result<InvertedIndex> {
    let mut ordered: Vec<&KeywordProfile> = profiles.iter().collect();
    ordered.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let mut index = InvertedIndex::default();
    for profile in ordered {
        let tfs: BTreeMap<String, u32> = profile
            .terms()
            .map(|t| (t.to_string(), profile.tf.get(t).copied().unwrap_or(1).max(1)))
            .collect();
        index.add_item(&profile.doc_id, &tfs)?;
    }
    Ok(index)
}

/// A per-entity pseudo-document: every corpus sentence mentioning the
/// entity, concatenated in corpus order, plus its keyword profile.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityVirtualDocument {
    pub entity_label: String,
    pub text: String,
    pub profile: KeywordProfile,
}

/// Entity index plus the virtual documents behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityIndex {
    pub index: InvertedIndex,
    pub virtual_docs: Vec<EntityVirtualDocument>,
    /// Mentioned entities whose surface never matched a sentence.
    pub excluded_entities: Vec<String>,
}

impl EntityIndex {
    pub fn profile(&self, entity_label: &str) -> Option<&KeywordProfile> {
        self.virtual_docs
            .iter()
            .find(|vd| vd.entity_label == entity_label)
            .map(|vd| &vd.profile)
    }
}

/// Split text into sentences: newlines always break; '.', '!' and '?'
/// break when followed by whitespace or end of text.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\n' {
            push_sentence(&mut sentences, &mut current);
        } else {
            current.push(c);
            if matches!(c, '.' | '!' | '?') {
                match chars.peek() {
                    None => push_sentence(&mut sentences, &mut current),
                    Some(next) if next.is_whitespace() => {
                        push_sentence(&mut sentences, &mut current)
                    }
                    _ => {}
                }
            }
        }
    }
    push_sentence(&mut sentences, &mut current);
    sentences
}

fn push_sentence(sentences: &mut Vec<String>, current: &mut String) {
    let trimmed = current.trim();
    if !trimmed.is_empty() {
        sentences.push(trimmed.to_string());
    }
    current.clear();
}

/// Build the entity index: one virtual document per mentioned entity,
/// from sentences containing the mention surface (the explicit surface
/// form when given, else the entity label), matched case-insensitively.
/// Entities whose surfaces never match any sentence are excluded and
/// listed in the result.
pub fn build_entity_index(docs: &[Document], ratio: f64, window: usize) -> Result<EntityIndex> {
    // entity -> surface forms, lowercased.
    let mut surfaces: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for doc in docs {
        for mention in &doc.mentions {
            let surface = mention
                .surface
                .as_deref()
                .unwrap_or(&mention.entity_label)
                .to_lowercase();
            surfaces
                .entry(mention.entity_label.clone())
                .or_default()
                .insert(surface);
        }
    }

    let mut texts: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for doc in docs {
        let mentioned: Vec<&str> = doc.mentions.iter().map(|m| m.entity_label.as_str()).collect();
        if mentioned.is_empty() {
            continue;
        }
        for sentence in split_sentences(&doc.text) {
            let lowered = sentence.to_lowercase();
            for &entity in &mentioned {
                let matches = surfaces[entity].iter().any(|s| lowered.contains(s.as_str()));
                if matches {
                    let entry = texts.entry(entity.to_string()).or_default();
                    // A sentence with several mentions of the same
                    // entity still appears once per occurrence in text
                    // order; duplicate labels in `mentions` do not
                    // duplicate sentences.
                    if entry.last().map(String::as_str) != Some(sentence.as_str()) {
                        entry.push(sentence.clone());
                    }
                }
            }
        }
    }

    let mut index = InvertedIndex::default();
    let mut virtual_docs = Vec::new();
    let mut excluded = Vec::new();
    for entity in surfaces.keys() {
        match texts.get(entity) {
            Some(sentences) => {
                let text = sentences.join(" ");
                let tokens = preprocess(&text);
                let profile = extract_keywords(entity, &tokens, ratio, window)?;
                let tfs: BTreeMap<String, u32> = profile
                    .terms()
                    .map(|t| (t.to_string(), profile.tf.get(t).copied().unwrap_or(1).max(1)))
                    .collect();
                index.add_item(entity, &tfs)?;
                virtual_docs.push(EntityVirtualDocument {
                    entity_label: entity.clone(),
                    text,
                    profile,
                });
            }
            None => excluded.push(entity.clone()),
        }
    }
    Ok(EntityIndex {
        index,
        virtual_docs,
        excluded_entities: excluded,
    })
}

fn ranked(topic_id: &str, target_kind: TargetKind, scores: BTreeMap<String, f64>) -> RankedList {
    let mut entries: Vec<(String, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    RankedList {
        topic_id: topic_id.to_string(),
        target_kind,
        entries,
    }
}

/// TF-IDF: per matching query term, `tf * ln(1 + N/df)`, summed.
/// Repeated query terms count repeatedly. Empty queries rank nothing.
pub fn score_tfidf(
    topic_id: &str,
    query: &[String],
    index: &InvertedIndex,
    target_kind: TargetKind,
) -> RankedList {
    let n = index.num_items() as f64;
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for term in query {
        if let Some(postings) = index.postings(term) {
            let idf = (1.0 + n / postings.len() as f64).ln();
            for (item, tf) in postings {
                *scores.entry(item.clone()).or_insert(0.0) += f64::from(*tf) * idf;
            }
        }
    }
    ranked(topic_id, target_kind, scores)
}

/// BM25 with `idf = ln(1 + (N - df + 0.5)/(df + 0.5))` and Robertson
/// length normalization.
pub fn score_bm25(
    topic_id: &str,
    query: &[String],
    index: &InvertedIndex,
    target_kind: TargetKind,
    k1: f64,
    b: f64,
) -> RankedList {
    let n = index.num_items() as f64;
    let avgdl = index.avgdl();
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for term in query {
        if let Some(postings) = index.postings(term) {
            let df = postings.len() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            for (item, tf) in postings {
                let tf = f64::from(*tf);
                let dl = index.doc_length(item).unwrap_or(0) as f64;
                let norm = k1 * (1.0 - b + b * dl / avgdl);
                *scores.entry(item.clone()).or_insert(0.0) += idf * tf * (k1 + 1.0) / (tf + norm);
            }
        }
    }
    ranked(topic_id, target_kind, scores)
}

/// More-like-this entity list completion: pool the input entities'
/// profile keywords (TF = 1 per distinct keyword, so term selection
/// reduces to an IDF sort), keep the `top_terms` highest-IDF terms,
/// score with BM25 over the entity index, and drop the inputs from the
/// result. Returns the ranking plus input entities missing from the
/// index; when none are indexed the ranking is empty.
pub fn more_like_this_completion(
    topic_id: &str,
    entity_set: &[String],
    entity_index: &EntityIndex,
    top_terms: usize,
) -> Result<(RankedList, Vec<String>)> {
    let (query, unresolved) = mlt_query(entity_set, entity_index, top_terms)?;
    if query.is_empty() {
        return Ok((RankedList::empty(topic_id, TargetKind::EntityNode), unresolved));
    }

    let mut list = score_bm25(
        topic_id,
        &query,
        &entity_index.index,
        TargetKind::EntityNode,
        BM25_K1,
        BM25_B,
    );
    let inputs: BTreeSet<&str> = entity_set.iter().map(String::as_str).collect();
    list.entries.retain(|(item, _)| !inputs.contains(item.as_str()));
    Ok((list, unresolved))
}

/// The more-like-this query: pooled distinct profile keywords of the
/// input entities, cut to the `top_terms` highest-IDF terms (IDF
/// descending, ties lexicographic). Also returns the input entities
/// missing from the index.
pub fn mlt_query(
    entity_set: &[String],
    entity_index: &EntityIndex,
    top_terms: usize,
) -> Result<(Vec<String>, Vec<String>)> {
    if entity_set.is_empty() {
        return Err(Error::InvalidParameter(
            "entity list completion requires at least one input entity".into(),
        ));
    }
    let mut pooled: BTreeSet<String> = BTreeSet::new();
    let mut unresolved = Vec::new();
    for entity in entity_set {
        match entity_index.profile(entity) {
            Some(profile) => pooled.extend(profile.terms().map(str::to_string)),
            None => unresolved.push(entity.clone()),
        }
    }
    let n = entity_index.index.num_items() as f64;
    let mut by_idf: Vec<(String, f64)> = pooled
        .into_iter()
        .map(|term| {
            let df = entity_index.index.df(&term).max(1) as f64;
            (term, (1.0 + n / df).ln())
        })
        .collect();
    // BTreeSet input keeps equal-IDF terms in lexicographic order.
    by_idf.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok((
        by_idf.into_iter().take(top_terms).map(|(t, _)| t).collect(),
        unresolved,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntityMention;

    fn profile(doc_id: &str, tfs: &[(&str, u32)]) -> KeywordProfile {
        KeywordProfile {
            doc_id: doc_id.to_string(),
            keywords: tfs.iter().map(|(t, _)| (t.to_string(), 1.0)).collect(),
            ratio: 1.0,
            window: 4,
            tf: tfs.iter().map(|(t, f)| (t.to_string(), *f)).collect(),
        }
    }

    /// The committed 3-document fixture behind the hand-worked oracle:
    ///   d1 = "apple banana apple", d2 = "banana cherry",
    ///   d3 = "cherry cherry cherry dates".
    /// N = 3, avgdl = 3, df(banana) = df(cherry) = 2.
    fn three_doc_index() -> InvertedIndex {
        build_document_index(&[
            profile("d1", &[("apple", 2), ("banana", 1)]),
            profile("d2", &[("banana", 1), ("cherry", 1)]),
            profile("d3", &[("cherry", 3), ("dates", 1)]),
        ])
        .unwrap()
    }

    fn query(terms: &[&str]) -> Vec<String> {
        terms.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn index_statistics_match_fixture() {
        let index = three_doc_index();
        assert_eq!(index.num_items(), 3);
        assert_eq!(index.avgdl(), 3.0);
        assert_eq!(index.df("banana"), 2);
        assert_eq!(index.df("apple"), 1);
        assert_eq!(index.df("missing"), 0);
        assert_eq!(index.doc_length("d3"), Some(4));
        assert_eq!(
            index.postings("cherry").unwrap(),
            &[("d2".to_string(), 1), ("d3".to_string(), 3)]
        );
    }

    #[test]
    fn tfidf_matches_hand_computation() {
        // Hand computation for query "banana cherry":
        //   idf = ln(1 + 3/2) = ln 2.5 for both terms.
        //   d1: 1*ln2.5          d2: 2*ln2.5          d3: 3*ln2.5
        let index = three_doc_index();
        let list = score_tfidf("t", &query(&["banana", "cherry"]), &index, TargetKind::DocumentEdge);
        let expected = [
            ("d3", 2.7488721956224653),
            ("d2", 1.8325814637483102),
            ("d1", 0.9162907318741551),
        ];
        assert_eq!(list.entries.len(), 3);
        for ((item, score), (want_item, want_score)) in list.entries.iter().zip(expected) {
            assert_eq!(item, want_item);
            assert!((score - want_score).abs() < 1e-6, "{item}: {score}");
        }
    }

    #[test]
    fn bm25_matches_hand_computation() {
        // Hand computation, k1 = 1.2, b = 0.75:
        //   idf = ln(1 + (3-2+0.5)/(2+0.5)) = ln 1.6
        //   norm(dl) = 1.2*(0.25 + 0.75*dl/3)
        //   d1: ln1.6 * 2.2/(1+1.2)               = 0.47000363
        //   d2: 2 * ln1.6 * 2.2/(1+0.9)           = 1.08842946
        //   d3: ln1.6 * 3*2.2/(3+1.5)             = 0.68933866
        let index = three_doc_index();
        let list = score_bm25(
            "t",
            &query(&["banana", "cherry"]),
            &index,
            TargetKind::DocumentEdge,
            BM25_K1,
            BM25_B,
        );
        let expected = [
            ("d2", 1.088429457200651),
            ("d3", 0.6893386562270789),
            ("d1", 0.47000362924573563),
        ];
        assert_eq!(list.entries.len(), 3);
        for ((item, score), (want_item, want_score)) in list.entries.iter().zip(expected) {
            assert_eq!(item, want_item);
            assert!((score - want_score).abs() < 1e-6, "{item}: {score}");
        }
    }

    #[test]
    fn absent_term_contributes_nothing_and_empty_query_ranks_nothing() {
        let index = three_doc_index();
        let with = score_tfidf("t", &query(&["banana"]), &index, TargetKind::DocumentEdge);
        let with_noise =
            score_tfidf("t", &query(&["banana", "zzz"]), &index, TargetKind::DocumentEdge);
        assert_eq!(with.entries, with_noise.entries);
        assert!(score_bm25("t", &[], &index, TargetKind::DocumentEdge, BM25_K1, BM25_B)
            .is_empty());
    }

    #[test]
    fn equal_stats_make_bm25_and_tfidf_agree_on_single_terms() {
        // All tf = 1 and equal lengths: both scores are monotone in idf,
        // so single-term queries rank identically.
        let index = build_document_index(&[
            profile("a", &[("rare", 1), ("pad", 1)]),
            profile("b", &[("common", 1), ("pad", 1)]),
            profile("c", &[("common", 1), ("pad", 1)]),
        ])
        .unwrap();
        for term in ["rare", "common", "pad"] {
            let t = score_tfidf("t", &query(&[term]), &index, TargetKind::DocumentEdge);
            let b = score_bm25("t", &query(&[term]), &index, TargetKind::DocumentEdge, BM25_K1, BM25_B);
            let order = |l: &RankedList| l.entries.iter().map(|(i, _)| i.clone()).collect::<Vec<_>>();
            assert_eq!(order(&t), order(&b));
        }
    }

    #[test]
    fn duplicate_item_rejected() {
        let p = profile("dup", &[("x", 1)]);
        assert!(build_document_index(&[p.clone(), p]).is_err());
    }

    #[test]
    fn sentence_splitting_rules() {
        let text = "First one. Second!  Third? Version 2.5 stays whole.\nFourth via newline";
        assert_eq!(
            split_sentences(text),
            vec![
                "First one.",
                "Second!",
                "Third?",
                "Version 2.5 stays whole.",
                "Fourth via newline",
            ]
        );
        assert!(split_sentences("  \n \n").is_empty());
    }

    fn doc(doc_id: &str, text: &str, mentions: &[(&str, Option<&str>)]) -> Document {
        Document {
            doc_id: doc_id.to_string(),
            title: None,
            text: text.to_string(),
            mentions: mentions
                .iter()
                .map(|(label, surface)| EntityMention {
                    entity_label: label.to_string(),
                    surface: surface.map(str::to_string),
                })
                .collect(),
            links: Vec::new(),
        }
    }

    #[test]
    fn virtual_documents_concatenate_mention_sentences_in_corpus_order() {
        let docs = vec![
            doc(
                "d1",
                "Solaris orbits quietly. Nothing here. Solaris shines again.",
                &[("Solaris", None)],
            ),
            doc(
                "d2",
                "The probe reached Solaris today. Unrelated closing line.",
                &[("Solaris", None), ("Probe", Some("the probe"))],
            ),
        ];
        let entity_index = build_entity_index(&docs, 1.0, 4).unwrap();
        assert!(entity_index.excluded_entities.is_empty());
        let solaris = entity_index
            .virtual_docs
            .iter()
            .find(|vd| vd.entity_label == "Solaris")
            .unwrap();
        assert_eq!(
            solaris.text,
            "Solaris orbits quietly. Solaris shines again. The probe reached Solaris today."
        );
        let probe = entity_index
            .virtual_docs
            .iter()
            .find(|vd| vd.entity_label == "Probe")
            .unwrap();
        assert_eq!(probe.text, "The probe reached Solaris today.");
        assert!(entity_index.index.contains_item("Solaris"));
        assert_eq!(entity_index.index.num_items(), 2);
    }

    #[test]
    fn unmatched_entity_excluded_and_counted() {
        let docs = vec![doc(
            "d1",
            "Plain sentence about nothing.",
            &[("Ghost", Some("phantom surface"))],
        )];
        let entity_index = build_entity_index(&docs, 1.0, 4).unwrap();
        assert_eq!(entity_index.excluded_entities, vec!["Ghost".to_string()]);
        assert_eq!(entity_index.index.num_items(), 0);
    }

    /// Six entities with planted vocabulary; checks the more-like-this
    /// query against an independent IDF sort and the input filter.
    #[test]
    fn more_like_this_selects_top_idf_terms_and_excludes_inputs() {
        // e1..e6 each have a virtual document; "shared" appears in all,
        // "half" in three, unique terms in one each.
        let mut docs = Vec::new();
        for i in 1..=6 {
            let half = if i <= 3 { " half" } else { "" };
            docs.push(doc(
                &format!("d{i}"),
                &format!("Entity{i} shared{half} unique{i} filler{i}."),
                &[(&format!("Entity{i}"), None)],
            ));
        }
        let entity_index = build_entity_index(&docs, 1.0, 4).unwrap();
        assert_eq!(entity_index.index.num_items(), 6);

        // Independent oracle: rank the pooled terms of e1's profile by
        // ln(1 + N/df) descending, ties lexicographic.
        let pooled: Vec<String> = entity_index
            .profile("Entity1")
            .unwrap()
            .terms()
            .map(str::to_string)
            .collect();
        let n = 6.0;
        let mut oracle: Vec<(String, f64)> = pooled
            .iter()
            .map(|t| (t.clone(), (1.0 + n / entity_index.index.df(t) as f64).ln()))
            .collect();
        oracle.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));

        // top_terms = 4 slices the oracle order: the three df = 1 terms
        // come first, "half" (df 3) is fourth, and the everywhere-term
        // "shared" misses the cut.
        let top4: Vec<String> = oracle.iter().take(4).map(|(t, _)| t.clone()).collect();
        assert!(top4.contains(&"half".to_string()));
        assert!(!top4.contains(&"shared".to_string()));

        let (list, unresolved) =
            more_like_this_completion("t", &["Entity1".to_string()], &entity_index, 4).unwrap();
        assert!(unresolved.is_empty());
        assert!(!list.entries.iter().any(|(item, _)| item == "Entity1"));
        // "half" is in the query (df 3), so Entity2 and Entity3 score.
        assert!(list.entries.iter().any(|(item, _)| item == "Entity2"));

        // With the full default width the query is every pooled term
        // (profile has <= 25 keywords), same as the oracle's whole list.
        let (wide, _) = more_like_this_completion(
            "t",
            &["Entity1".to_string()],
            &entity_index,
            MLT_TOP_TERMS,
        )
        .unwrap();
        assert!(!wide.entries.iter().any(|(item, _)| item == "Entity1"));
    }

    #[test]
    fn more_like_this_with_no_indexed_inputs_is_empty_and_flagged() {
        let docs = vec![doc("d1", "Alpha text here.", &[("Alpha", None)])];
        let entity_index = build_entity_index(&docs, 1.0, 4).unwrap();
        let (list, unresolved) =
            more_like_this_completion("t", &["Missing".to_string()], &entity_index, 25).unwrap();
        assert!(list.is_empty());
        assert_eq!(unresolved, vec!["Missing".to_string()]);
        assert!(more_like_this_completion("t", &[], &entity_index, 25).is_err());
    }

    #[test]
    fn adding_documents_never_decreases_df() {
        let first = build_document_index(&[profile("d1", &[("x", 1), ("y", 2)])]).unwrap();
        let second = build_document_index(&[
            profile("d1", &[("x", 1), ("y", 2)]),
            profile("d2", &[("y", 1), ("z", 1)]),
        ])
        .unwrap();
        for term in ["x", "y", "z"] {
            assert!(second.df(term) >= first.df(term));
        }
    }

    #[test]
    fn build_is_deterministic_regardless_of_profile_order() {
        let a = profile("a", &[("p", 1), ("q", 2)]);
        let b = profile("b", &[("q", 1)]);
        let forward = build_document_index(&[a.clone(), b.clone()]).unwrap();
        let backward = build_document_index(&[b, a]).unwrap();
        assert_eq!(forward, backward);
    }
}
