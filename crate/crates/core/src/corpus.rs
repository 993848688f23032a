//! Corpus loading and text preprocessing.
//!
//! The corpus is line-delimited JSON: one document per line with keys
//! `doc_id`, `title?`, `text`, `mentions[]` and `links[]`. Topics use the
//! same one-record-per-line convention; qrels follow the TREC
//! `topic_id Q0 item_id grade` format.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One corpus unit: raw text plus pre-annotated entity mentions and
/// outgoing entity links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mentions: Vec<EntityMention>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<EntityLink>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub entity_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<String>,
}

/// Subject-grouped entity relation: one subject linking to a set of
/// object entities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLink {
    pub subject: String,
    pub objects: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopicKind {
    Keyword,
    Entity,
    EntitySet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: String,
    pub kind: TopicKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword_query: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub entities: Vec<String>,
}

impl Topic {
    fn validate(&self, path: &Path, line: usize) -> Result<()> {
        let err = |msg: &str| Error::MalformedLine {
            path: path.to_path_buf(),
            line,
            message: msg.to_string(),
        };
        if self.topic_id.is_empty() {
            return Err(err("empty topic_id"));
        }
        match self.kind {
            TopicKind::Keyword => {
                if self.keyword_query.as_deref().unwrap_or("").is_empty() {
                    return Err(err("keyword topic without keyword_query"));
                }
                if !self.entities.is_empty() {
                    return Err(err("keyword topic must not carry entities"));
                }
            }
            TopicKind::Entity => {
                if self.keyword_query.is_some() {
                    return Err(err("entity topic must not carry keyword_query"));
                }
                if self.entities.len() != 1 {
                    return Err(err("entity topic requires exactly one entity"));
                }
            }
            TopicKind::EntitySet => {
                if self.keyword_query.is_some() {
                    return Err(err("entity_set topic must not carry keyword_query"));
                }
                if self.entities.is_empty() {
                    return Err(err("entity_set topic requires at least one entity"));
                }
            }
        }
        Ok(())
    }
}

/// One relevance judgment: graded relevance of an item for a topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Qrel {
    pub topic_id: String,
    pub item_id: String,
    pub grade: u32,
}

/// Judgments grouped by topic for lookup during evaluation.
#[derive(Debug, Clone, Default)]
pub struct QrelSet {
    by_topic: BTreeMap<String, BTreeMap<String, u32>>,
}

impl QrelSet {
    pub fn from_qrels(qrels: impl IntoIterator<Item = Qrel>) -> Self {
        let mut by_topic: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        for q in qrels {
            by_topic.entry(q.topic_id).or_default().insert(q.item_id, q.grade);
        }
        QrelSet { by_topic }
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.by_topic.keys().map(String::as_str)
    }

    pub fn for_topic(&self, topic_id: &str) -> Option<&BTreeMap<String, u32>> {
        self.by_topic.get(topic_id)
    }

    pub fn len(&self) -> usize {
        self.by_topic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_topic.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Preprocessing
// ---------------------------------------------------------------------------

/// Tokenization knobs. The defaults match the indexes shipped with the
/// project: lowercase, split on non-alphanumeric, drop stopwords and
/// single-character tokens.
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub remove_stopwords: bool,
    /// Tokens of length <= this are dropped (0 keeps everything).
    pub min_token_len: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            remove_stopwords: true,
            min_token_len: 2,
        }
    }
}

fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        include_str!("../assets/stopwords.txt")
            .lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .collect()
    })
}

/// Lowercase, split on non-alphanumeric boundaries, drop stopwords and
/// short tokens. Order is preserved and duplicates are kept.
pub fn preprocess(text: &str) -> Vec<String> {
    preprocess_with(text, &PreprocessOptions::default())
}

pub fn preprocess_with(text: &str, opts: &PreprocessOptions) -> Vec<String> {
    let lowered = text.to_lowercase();
    lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| t.chars().count() >= opts.min_token_len.max(1))
        .filter(|t| !opts.remove_stopwords || !stopwords().contains(t))
        .map(str::to_string)
        .collect()
}

// ---------------------------------------------------------------------------
// Corpus i/o
// ---------------------------------------------------------------------------

/// Streaming corpus reader. Malformed lines surface as recoverable
/// errors so the caller can count and continue; duplicate doc ids are
/// fatal and stop the stream.
pub struct CorpusReader {
    path: PathBuf,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
    seen: HashSet<String>,
    fused: bool,
}

impl CorpusReader {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        Ok(CorpusReader {
            path,
            lines: BufReader::new(file).lines(),
            line_no: 0,
            seen: HashSet::new(),
            fused: false,
        })
    }

    fn parse_line(&mut self, line: &str) -> Result<Option<Document>> {
        if line.trim().is_empty() {
            return Ok(None);
        }
        let doc: Document =
            serde_json::from_str(line).map_err(|e| Error::MalformedLine {
                path: self.path.clone(),
                line: self.line_no,
                message: e.to_string(),
            })?;
        if doc.doc_id.is_empty() {
            return Err(Error::MalformedLine {
                path: self.path.clone(),
                line: self.line_no,
                message: "empty doc_id".into(),
            });
        }
        for m in &doc.mentions {
            if m.entity_label.is_empty() {
                return Err(Error::MalformedLine {
                    path: self.path.clone(),
                    line: self.line_no,
                    message: "mention with empty entity_label".into(),
                });
            }
        }
        for l in &doc.links {
            if l.objects.is_empty() {
                return Err(Error::MalformedLine {
                    path: self.path.clone(),
                    line: self.line_no,
                    message: format!("link {:?} with empty objects", l.subject),
                });
            }
            if l.objects.contains(&l.subject) {
                return Err(Error::MalformedLine {
                    path: self.path.clone(),
                    line: self.line_no,
                    message: format!("link subject {:?} appears in its own objects", l.subject),
                });
            }
        }
        if !self.seen.insert(doc.doc_id.clone()) {
            self.fused = true;
            return Err(Error::DuplicateDocId {
                path: self.path.clone(),
                line: self.line_no,
                doc_id: doc.doc_id,
            });
        }
        Ok(Some(doc))
    }
}

impl Iterator for CorpusReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.fused {
            return None;
        }
        loop {
            let line = match self.lines.next() {
                None => return None,
                Some(Err(e)) => {
                    self.fused = true;
                    return Some(Err(Error::io(&self.path, e)));
                }
                Some(Ok(line)) => line,
            };
            self.line_no += 1;
            match self.parse_line(&line) {
                Ok(Some(doc)) => return Some(Ok(doc)),
                Ok(None) => continue,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

/// Open a corpus file for streaming.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<CorpusReader> {
    CorpusReader::open(path)
}

/// Collect a corpus, treating malformed lines as fatal. Convenience for
/// tests and small fixtures.
pub fn load_corpus_strict(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    load_corpus(path)?.collect()
}

/// Write documents in the line-delimited corpus format.
pub fn save_corpus<'a>(
    path: impl AsRef<Path>,
    docs: impl IntoIterator<Item = &'a Document>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for doc in docs {
        serde_json::to_writer(&mut out, doc)
            .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Load topics; any malformed line is fatal.
pub fn load_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut topics = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let topic: Topic = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        topic.validate(path, line_no)?;
        topics.push(topic);
    }
    Ok(topics)
}

/// Write topics in the line-delimited topics format.
pub fn save_topics<'a>(
    path: impl AsRef<Path>,
    topics: impl IntoIterator<Item = &'a Topic>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for t in topics {
        serde_json::to_writer(&mut out, t)
            .map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Load TREC-format qrels (`topic_id Q0 item_id grade`); malformed lines
/// are fatal so judgments are never silently dropped.
pub fn load_qrels(path: impl AsRef<Path>) -> Result<Vec<Qrel>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut qrels = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            message: msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", fields.len())));
        }
        let grade: i64 = fields[3]
            .parse()
            .map_err(|_| err(format!("unparseable grade {:?}", fields[3])))?;
        if grade < 0 {
            return Err(err(format!("negative grade {grade}")));
        }
        let key = (fields[0].to_string(), fields[2].to_string());
        if !seen.insert(key.clone()) {
            return Err(err(format!(
                "duplicate judgment for topic {:?} item {:?}",
                key.0, key.1
            )));
        }
        qrels.push(Qrel {
            topic_id: key.0,
            item_id: key.1,
            grade: grade as u32,
        });
    }
    Ok(qrels)
}

/// Write qrels in TREC format.
pub fn save_qrels<'a>(
    path: impl AsRef<Path>,
    qrels: impl IntoIterator<Item = &'a Qrel>,
) -> Result<()> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    for q in qrels {
        writeln!(out, "{} Q0 {} {}", q.topic_id, q.item_id, q.grade)
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
