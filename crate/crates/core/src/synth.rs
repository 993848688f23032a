//! Deterministic synthetic collection generator for tests and demos.
//!
//! Every document carries a planted unique term and mentions two
//! entities from one entity group; group members are linked pairwise in
//! both directions. Topics for all four tasks come with qrels pointing
//! at the planted items, so end-to-end runs have known relevant
//! answers. Output is fully determined by the seed.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, EntityLink, EntityMention, Qrel, Topic, TopicKind};
use crate::{Error, Result};

/// Shared vocabulary size ("w0".."w39"); each word also gets an
/// embedding vector.
const VOCAB: usize = 40;
/// Embedding dimensionality.
const EMBED_DIM: usize = 8;
/// Number of vocabulary clusters for embeddings and synsets.
const CLUSTERS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub docs: usize,
    pub entities: usize,
    pub topics_per_task: usize,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.docs == 0 {
            return Err(Error::InvalidParameter("docs must be >= 1".into()));
        }
        if self.entities < 3 {
            return Err(Error::InvalidParameter(
                "entities must be >= 3 so list-completion topics have held-out answers".into(),
            ));
        }
        Ok(())
    }
}

/// Topics and qrels for one retrieval task.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TaskSet {
    pub topics: Vec<Topic>,
    pub qrels: Vec<Qrel>,
}

/// A generated collection: documents plus per-task topic sets, synonym
/// sets and word embeddings for exercising the index extensions.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCollection {
    pub documents: Vec<Document>,
    /// Keyed by task name: "docs", "entities", "ref", "elc".
    pub tasks: BTreeMap<String, TaskSet>,
    pub synsets: Vec<Vec<String>>,
    pub embeddings: Vec<(String, Vec<f64>)>,
}

pub const TASK_NAMES: [&str; 4] = ["docs", "entities", "ref", "elc"];

fn word(i: usize) -> String {
    format!("w{i}")
}

fn unique_term(doc: usize) -> String {
    format!("uniq{doc}")
}

fn entity_label(i: usize) -> String {
    format!("ent{i}")
}

fn group_size(entities: usize) -> usize {
    entities.min(5)
}

fn entity_groups(entities: usize) -> Vec<Vec<usize>> {
    let size = group_size(entities);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for e in 0..entities {
        if e % size == 0 {
            groups.push(Vec::new());
        }
        groups.last_mut().unwrap().push(e);
    }
    // Fold a trailing undersized group into its neighbour so every
    // group has at least 3 members (guaranteed by entities >= 3).
    if groups.len() > 1 && groups.last().unwrap().len() < 3 {
        let tail = groups.pop().unwrap();
        groups.last_mut().unwrap().extend(tail);
    }
    groups
}

pub fn generate(config: &SynthConfig) -> Result<SynthCollection> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let groups = entity_groups(config.entities);

    let mut documents = Vec::with_capacity(config.docs);
    // doc index -> (entity index a, entity index b)
    let mut doc_entities = Vec::with_capacity(config.docs);
    for d in 0..config.docs {
        let group = &groups[d % groups.len()];
        let mut pair = group.clone();
        pair.shuffle(&mut rng);
        let (a, b) = (pair[0], pair[1]);
        doc_entities.push((a, b));

        let uniq = unique_term(d);
        let pick = |rng: &mut ChaCha8Rng| word(rng.gen_range(0..VOCAB));
        let text = format!(
            "{uniq} {} {} {} {uniq}. {ea} works beside {eb} near {uniq} {}. {} {} {uniq} {} {}.",
            pick(&mut rng),
            pick(&mut rng),
            pick(&mut rng),
            pick(&mut rng),
            pick(&mut rng),
            pick(&mut rng),
            pick(&mut rng),
            pick(&mut rng),
            ea = entity_label(a),
            eb = entity_label(b),
        );
        documents.push(Document {
            doc_id: format!("doc{d:05}"),
            title: None,
            text,
            mentions: vec![
                EntityMention { entity_label: entity_label(a), surface: None },
                EntityMention { entity_label: entity_label(b), surface: None },
            ],
            links: vec![
                EntityLink { subject: entity_label(a), objects: vec![entity_label(b)] },
                EntityLink { subject: entity_label(b), objects: vec![entity_label(a)] },
            ],
        });
    }

    let mut tasks: BTreeMap<String, TaskSet> = BTreeMap::new();
    let pick_docs = |rng: &mut ChaCha8Rng, count: usize| -> Vec<usize> {
        rand::seq::index::sample(rng, config.docs, count.min(config.docs)).into_vec()
    };

    // Ad hoc document retrieval: the planted unique term finds its doc.
    let mut docs_task = TaskSet::default();
    for (i, d) in pick_docs(&mut rng, config.topics_per_task).into_iter().enumerate() {
        let topic_id = format!("docs-{i:04}");
        docs_task.topics.push(Topic {
            topic_id: topic_id.clone(),
            kind: TopicKind::Keyword,
            keyword_query: Some(format!("{} {}", unique_term(d), word(d % VOCAB))),
            entities: Vec::new(),
        });
        docs_task.qrels.push(Qrel {
            topic_id,
            item_id: documents[d].doc_id.clone(),
            grade: 1,
        });
    }
    tasks.insert("docs".into(), docs_task);

    // Ad hoc entity retrieval: the unique term finds the entities
    // mentioned alongside it.
    let mut entities_task = TaskSet::default();
    for (i, d) in pick_docs(&mut rng, config.topics_per_task).into_iter().enumerate() {
        let topic_id = format!("entities-{i:04}");
        entities_task.topics.push(Topic {
            topic_id: topic_id.clone(),
            kind: TopicKind::Keyword,
            keyword_query: Some(unique_term(d)),
            entities: Vec::new(),
        });
        let (a, b) = doc_entities[d];
        for e in [a, b] {
            entities_task.qrels.push(Qrel {
                topic_id: topic_id.clone(),
                item_id: entity_label(e),
                grade: 1,
            });
        }
    }
    tasks.insert("entities".into(), entities_task);

    // Related entity finding: group partners are the answers.
    let mut ref_task = TaskSet::default();
    for i in 0..config.topics_per_task {
        let group = &groups[rng.gen_range(0..groups.len())];
        let e = group[rng.gen_range(0..group.len())];
        let topic_id = format!("ref-{i:04}");
        ref_task.topics.push(Topic {
            topic_id: topic_id.clone(),
            kind: TopicKind::Entity,
            keyword_query: None,
            entities: vec![entity_label(e)],
        });
        for &other in group.iter().filter(|&&o| o != e) {
            ref_task.qrels.push(Qrel {
                topic_id: topic_id.clone(),
                item_id: entity_label(other),
                grade: 1,
            });
        }
    }
    tasks.insert("ref".into(), ref_task);

    // Entity list completion: two group members in, the rest out.
    let mut elc_task = TaskSet::default();
    for i in 0..config.topics_per_task {
        let group = &groups[rng.gen_range(0..groups.len())];
        let mut members = group.clone();
        members.shuffle(&mut rng);
        let inputs = &members[..2];
        let held_out = &members[2..];
        let topic_id = format!("elc-{i:04}");
        elc_task.topics.push(Topic {
            topic_id: topic_id.clone(),
            kind: TopicKind::EntitySet,
            keyword_query: None,
            entities: inputs.iter().map(|&e| entity_label(e)).collect(),
        });
        for &e in held_out {
            elc_task.qrels.push(Qrel {
                topic_id: topic_id.clone(),
                item_id: entity_label(e),
                grade: 1,
            });
        }
    }
    tasks.insert("elc".into(), elc_task);

    // Synsets: one per cluster, grouping three neighbouring words.
    let synsets: Vec<Vec<String>> = (0..CLUSTERS)
        .map(|c| {
            let base = c * (VOCAB / CLUSTERS);
            (0..3).map(|j| word(base + j)).collect()
        })
        .collect();

    // Embeddings: cluster centroid plus small noise, so words in a
    // cluster are mutual nearest neighbours by cosine.
    let mut embeddings = Vec::with_capacity(VOCAB);
    let centroids: Vec<Vec<f64>> = (0..CLUSTERS)
        .map(|_| (0..EMBED_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    for i in 0..VOCAB {
        let centroid = &centroids[i / (VOCAB / CLUSTERS)];
        let vector: Vec<f64> = centroid
            .iter()
            .map(|v| v + rng.gen_range(-0.05..0.05))
            .collect();
        embeddings.push((word(i), vector));
    }

    Ok(SynthCollection {
        documents,
        tasks,
        synsets,
        embeddings,
    })
}

/// One synset per line, terms whitespace-separated.
pub fn write_synsets(path: impl AsRef<Path>, synsets: &[Vec<String>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for synset in synsets {
        writeln!(out, "{}", synset.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// `word v1 v2 ...` per line, full precision.
pub fn write_embeddings(path: impl AsRef<Path>, embeddings: &[(String, Vec<f64>)]) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for (word, vector) in embeddings {
        let values: Vec<String> = vector.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{word} {}", values.join(" ")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig { docs: 30, entities: 10, topics_per_task: 5, seed: 7 }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthConfig { seed: 8, ..small() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn every_task_present_with_planted_qrels() {
        let coll = generate(&small()).unwrap();
        for task in TASK_NAMES {
            let set = &coll.tasks[task];
            assert_eq!(set.topics.len(), 5, "{task}");
            assert!(!set.qrels.is_empty(), "{task}");
            for qrel in &set.qrels {
                assert!(set.topics.iter().any(|t| t.topic_id == qrel.topic_id));
            }
        }
    }

    #[test]
    fn documents_carry_planted_terms_mentions_and_reciprocal_links() {
        let coll = generate(&small()).unwrap();
        for (d, doc) in coll.documents.iter().enumerate() {
            assert!(doc.text.contains(&unique_term(d)));
            assert_eq!(doc.mentions.len(), 2);
            for mention in &doc.mentions {
                // Label appears literally, so entity-index surface
                // matching works.
                assert!(doc.text.contains(&mention.entity_label));
            }
            assert_eq!(doc.links.len(), 2);
            assert_eq!(doc.links[0].subject, doc.mentions[0].entity_label);
            assert_eq!(doc.links[1].objects, vec![doc.mentions[0].entity_label.clone()]);
        }
    }

    #[test]
    fn docs_task_queries_name_their_relevant_document() {
        let coll = generate(&small()).unwrap();
        let set = &coll.tasks["docs"];
        for topic in &set.topics {
            let qrel = set.qrels.iter().find(|q| q.topic_id == topic.topic_id).unwrap();
            let doc = coll.documents.iter().find(|d| d.doc_id == qrel.item_id).unwrap();
            let planted = topic
                .keyword_query
                .as_ref()
                .unwrap()
                .split_whitespace()
                .next()
                .unwrap()
                .to_string();
            assert!(doc.text.contains(&planted));
        }
    }

    #[test]
    fn elc_topics_never_list_inputs_as_answers() {
        let coll = generate(&small()).unwrap();
        let set = &coll.tasks["elc"];
        for topic in &set.topics {
            assert_eq!(topic.entities.len(), 2);
            for qrel in set.qrels.iter().filter(|q| q.topic_id == topic.topic_id) {
                assert!(!topic.entities.contains(&qrel.item_id));
            }
        }
    }

    #[test]
    fn synsets_and_embeddings_cover_shared_vocabulary() {
        let coll = generate(&small()).unwrap();
        assert_eq!(coll.embeddings.len(), VOCAB);
        assert_eq!(coll.synsets.len(), CLUSTERS);
        for synset in &coll.synsets {
            assert!(synset.len() >= 2);
            for term in synset {
                assert!(coll.embeddings.iter().any(|(w, _)| w == term));
            }
        }
    }

    #[test]
    fn tiny_entity_counts_rejected_or_folded() {
        assert!(generate(&SynthConfig { entities: 2, ..small() }).is_err());
        // 7 entities: groups of 5 and 2 would strand a pair; the tail
        // folds into the first group instead.
        let coll = generate(&SynthConfig { entities: 7, ..small() }).unwrap();
        assert!(coll.tasks["elc"].qrels.iter().all(|q| !q.item_id.is_empty()));
    }
}
