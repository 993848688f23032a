//! Mixed hypergraph index: typed nodes, typed directed/undirected
//! hyperedges, incidence lookups and single-file persistence.
//!
//! Construction goes through [`HypergraphBuilder`]; [`HypergraphBuilder::seal`]
//! consumes the builder and produces an immutable [`Hypergraph`], so
//! post-seal mutation is rejected at compile time. The sealed graph is
//! `Send + Sync` and may be shared across threads.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

pub const INDEX_MAGIC: &[u8; 4] = b"HGIX";
pub const INDEX_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Term,
    Entity,
}

impl NodeKind {
    pub const ALL: [NodeKind; 2] = [NodeKind::Term, NodeKind::Entity];

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Term => "term",
            NodeKind::Entity => "entity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Document,
    RelatedTo,
    ContainedIn,
    Synonym,
    Context,
    TfBin,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 6] = [
        EdgeKind::Document,
        EdgeKind::RelatedTo,
        EdgeKind::ContainedIn,
        EdgeKind::Synonym,
        EdgeKind::Context,
        EdgeKind::TfBin,
    ];

    /// Directedness is fixed per kind.
    pub fn is_directed(self) -> bool {
        matches!(self, EdgeKind::RelatedTo | EdgeKind::ContainedIn)
    }

    pub fn name(self) -> &'static str {
        match self {
            EdgeKind::Document => "document",
            EdgeKind::RelatedTo => "related_to",
            EdgeKind::ContainedIn => "contained_in",
            EdgeKind::Synonym => "synonym",
            EdgeKind::Context => "context",
            EdgeKind::TfBin => "tf_bin",
        }
    }

    fn from_u8(v: u8) -> Option<EdgeKind> {
        EdgeKind::ALL.get(v as usize).copied()
    }
}

/// Node and head/tail/member sets of one hyperedge. Sets are stored
/// sorted ascending and deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperedge {
    pub kind: EdgeKind,
    /// Directed edges only.
    pub tail: Vec<u32>,
    /// Directed edges only.
    pub head: Vec<u32>,
    /// Undirected edges only.
    pub members: Vec<u32>,
    pub weight: Option<f64>,
    pub doc_id: Option<String>,
}

impl Hyperedge {
    /// All nodes touched by this edge, ascending, deduplicated.
    pub fn nodes(&self) -> Vec<u32> {
        if self.kind.is_directed() {
            let mut all: Vec<u32> = self.tail.iter().chain(&self.head).copied().collect();
            all.sort_unstable();
            all.dedup();
            all
        } else {
            self.members.clone()
        }
    }
}

/// Specification for a new hyperedge, consumed by the builder.
#[derive(Debug, Clone)]
pub enum EdgeSpec {
    Directed { tail: Vec<u32>, head: Vec<u32> },
    Undirected { members: Vec<u32> },
}

/// Node and hyperedge counts by kind.
#[derive(Debug, Clone, PartialEq, Eq, Default, serde::Serialize)]
pub struct GraphStats {
    pub nodes_by_kind: BTreeMap<&'static str, usize>,
    pub edges_by_kind: BTreeMap<&'static str, usize>,
    pub total_nodes: usize,
    pub total_edges: usize,
    /// Single-member document edges (one-keyword documents with no mentions).
    pub degenerate_document_edges: usize,
}

#[derive(Debug, Default)]
pub struct HypergraphBuilder {
    node_kinds: Vec<NodeKind>,
    node_labels: Vec<String>,
    node_index: HashMap<(NodeKind, String), u32>,
    edges: Vec<Hyperedge>,
    // Set semantics for relation-like kinds: identical (kind, sets)
    // edges collapse onto the first edge id.
    dedup: HashMap<(EdgeKind, Vec<u32>, Vec<u32>), u32>,
}

impl HypergraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Idempotent: adding an existing (kind, label) returns its id.
    pub fn add_node(&mut self, kind: NodeKind, label: &str) -> u32 {
        if let Some(&id) = self.node_index.get(&(kind, label.to_string())) {
            return id;
        }
        let id = self.node_kinds.len() as u32;
        self.node_kinds.push(kind);
        self.node_labels.push(label.to_string());
        self.node_index.insert((kind, label.to_string()), id);
        id
    }

    pub fn find_node(&self, kind: NodeKind, label: &str) -> Option<u32> {
        self.node_index.get(&(kind, label.to_string())).copied()
    }

    pub fn node_count(&self) -> usize {
        self.node_kinds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    fn check_nodes(&self, ids: &[u32]) -> Result<()> {
        for &id in ids {
            if id as usize >= self.node_kinds.len() {
                return Err(Error::UnknownNode(id));
            }
        }
        Ok(())
    }

    pub fn add_hyperedge(
        &mut self,
        kind: EdgeKind,
        spec: EdgeSpec,
        weight: Option<f64>,
        doc_id: Option<String>,
    ) -> Result<u32> {
        if let Some(w) = weight {
            if !(w > 0.0 && w <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "edge weight must be in (0,1], got {w}"
                )));
            }
        }
        let edge = match (kind.is_directed(), spec) {
            (true, EdgeSpec::Directed { mut tail, mut head }) => {
                tail.sort_unstable();
                tail.dedup();
                head.sort_unstable();
                head.dedup();
                if tail.is_empty() || head.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "directed {} edge requires non-empty tail and head",
                        kind.name()
                    )));
                }
                self.check_nodes(&tail)?;
                self.check_nodes(&head)?;
                Hyperedge { kind, tail, head, members: Vec::new(), weight, doc_id }
            }
            (false, EdgeSpec::Undirected { mut members }) => {
                members.sort_unstable();
                members.dedup();
                let min = if kind == EdgeKind::Document { 1 } else { 2 };
                if members.len() < min {
                    return Err(Error::InvalidParameter(format!(
                        "undirected {} edge requires >= {min} members",
                        kind.name()
                    )));
                }
                self.check_nodes(&members)?;
                Hyperedge { kind, tail: Vec::new(), head: Vec::new(), members, weight, doc_id }
            }
            (directed, _) => {
                return Err(Error::InvalidParameter(format!(
                    "{} edges are {}",
                    kind.name(),
                    if directed { "directed" } else { "undirected" }
                )));
            }
        };

        let dedup_key = match kind {
            EdgeKind::RelatedTo | EdgeKind::ContainedIn => {
                Some((kind, edge.tail.clone(), edge.head.clone()))
            }
            EdgeKind::Synonym | EdgeKind::Context => {
                Some((kind, edge.members.clone(), Vec::new()))
            }
            EdgeKind::Document | EdgeKind::TfBin => None,
        };
        if let Some(key) = &dedup_key {
            if let Some(&existing) = self.dedup.get(key) {
                return Ok(existing);
            }
        }
        let id = self.edges.len() as u32;
        self.edges.push(edge);
        if let Some(key) = dedup_key {
            self.dedup.insert(key, id);
        }
        Ok(id)
    }

    /// Finalize into an immutable graph with incidence indexes.
    pub fn seal(self) -> Hypergraph {
        let n = self.node_kinds.len();
        let mut member_of = vec![Vec::new(); n];
        let mut tail_of = vec![Vec::new(); n];
        let mut head_of = vec![Vec::new(); n];
        for (eid, edge) in self.edges.iter().enumerate() {
            let eid = eid as u32;
            for &v in &edge.members {
                member_of[v as usize].push(eid);
            }
            for &v in &edge.tail {
                tail_of[v as usize].push(eid);
            }
            for &v in &edge.head {
                head_of[v as usize].push(eid);
            }
        }
        Hypergraph {
            node_kinds: self.node_kinds,
            node_labels: self.node_labels,
            node_index: self.node_index,
            edges: self.edges,
            member_of,
            tail_of,
            head_of,
        }
    }
}

/// Which incidence relation to query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncidenceRole {
    /// Every edge touching the node, in any role.
    Any,
    /// Directed edges with the node in the tail.
    AsTail,
    /// Directed edges with the node in the tail, plus undirected edges
    /// containing the node. The candidate set of a direction-respecting
    /// walk step.
    AsMemberOrTail,
}

/// Sealed, immutable hypergraph.
#[derive(Debug)]
pub struct Hypergraph {
    node_kinds: Vec<NodeKind>,
    node_labels: Vec<String>,
    node_index: HashMap<(NodeKind, String), u32>,
    edges: Vec<Hyperedge>,
    member_of: Vec<Vec<u32>>,
    tail_of: Vec<Vec<u32>>,
    head_of: Vec<Vec<u32>>,
}

impl Hypergraph {
    pub fn node_count(&self) -> usize {
        self.node_kinds.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_kind(&self, id: u32) -> NodeKind {
        self.node_kinds[id as usize]
    }

    pub fn node_label(&self, id: u32) -> &str {
        &self.node_labels[id as usize]
    }

    pub fn find_node(&self, kind: NodeKind, label: &str) -> Option<u32> {
        self.node_index.get(&(kind, label.to_string())).copied()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = u32> + '_ {
        0..self.node_kinds.len() as u32
    }

    pub fn edge(&self, id: u32) -> &Hyperedge {
        &self.edges[id as usize]
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = u32> + '_ {
        0..self.edges.len() as u32
    }

    /// Undirected edges containing the node, ascending edge id.
    pub fn member_edges(&self, node: u32) -> &[u32] {
        &self.member_of[node as usize]
    }

    /// Directed edges with the node in the tail, ascending edge id.
    pub fn tail_edges(&self, node: u32) -> &[u32] {
        &self.tail_of[node as usize]
    }

    /// Directed edges with the node in the head, ascending edge id.
    pub fn head_edges(&self, node: u32) -> &[u32] {
        &self.head_of[node as usize]
    }

    /// Incident edge ids for the node under the given role, ascending,
    /// deduplicated.
    pub fn incident_edges(&self, node: u32, role: IncidenceRole) -> Result<Vec<u32>> {
        if node as usize >= self.node_kinds.len() {
            return Err(Error::UnknownNode(node));
        }
        let mut out: Vec<u32> = match role {
            IncidenceRole::Any => self
                .member_edges(node)
                .iter()
                .chain(self.tail_edges(node))
                .chain(self.head_edges(node))
                .copied()
                .collect(),
            IncidenceRole::AsTail => self.tail_edges(node).to_vec(),
            IncidenceRole::AsMemberOrTail => self
                .member_edges(node)
                .iter()
                .chain(self.tail_edges(node))
                .copied()
                .collect(),
        };
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn stats(&self) -> GraphStats {
        let mut stats = GraphStats::default();
        for kind in NodeKind::ALL {
            stats.nodes_by_kind.insert(kind.name(), 0);
        }
        for kind in EdgeKind::ALL {
            stats.edges_by_kind.insert(kind.name(), 0);
        }
        for kind in &self.node_kinds {
            *stats.nodes_by_kind.get_mut(kind.name()).unwrap() += 1;
        }
        for edge in &self.edges {
            *stats.edges_by_kind.get_mut(edge.kind.name()).unwrap() += 1;
            if edge.kind == EdgeKind::Document && edge.members.len() == 1 {
                stats.degenerate_document_edges += 1;
            }
        }
        stats.total_nodes = self.node_kinds.len();
        stats.total_edges = self.edges.len();
        stats
    }

    // -- persistence ------------------------------------------------------

    fn write_payload(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(INDEX_MAGIC);
        out.write_u32::<LittleEndian>(INDEX_VERSION).unwrap();
        out.write_u64::<LittleEndian>(self.node_kinds.len() as u64).unwrap();
        for (kind, label) in self.node_kinds.iter().zip(&self.node_labels) {
            out.write_u8(match kind {
                NodeKind::Term => 0,
                NodeKind::Entity => 1,
            })
            .unwrap();
            out.write_u32::<LittleEndian>(label.len() as u32).unwrap();
            out.extend_from_slice(label.as_bytes());
        }
        out.write_u64::<LittleEndian>(self.edges.len() as u64).unwrap();
        for edge in &self.edges {
            out.write_u8(
                EdgeKind::ALL.iter().position(|&k| k == edge.kind).unwrap() as u8,
            )
            .unwrap();
            let mut flags = 0u8;
            if edge.weight.is_some() {
                flags |= 1;
            }
            if edge.doc_id.is_some() {
                flags |= 2;
            }
            out.write_u8(flags).unwrap();
            if let Some(w) = edge.weight {
                out.write_f64::<LittleEndian>(w).unwrap();
            }
            if let Some(doc_id) = &edge.doc_id {
                out.write_u32::<LittleEndian>(doc_id.len() as u32).unwrap();
                out.extend_from_slice(doc_id.as_bytes());
            }
            let write_set = |out: &mut Vec<u8>, set: &[u32]| {
                out.write_u32::<LittleEndian>(set.len() as u32).unwrap();
                for &v in set {
                    out.write_u32::<LittleEndian>(v).unwrap();
                }
            };
            if edge.kind.is_directed() {
                write_set(out, &edge.tail);
                write_set(out, &edge.head);
            } else {
                write_set(out, &edge.members);
            }
        }
    }

    /// Serialize to the versioned, checksummed single-file format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut payload = Vec::new();
        self.write_payload(&mut payload);
        let digest = Sha256::digest(&payload);
        payload.extend_from_slice(&digest);
        payload
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Hypergraph> {
        if bytes.len() < INDEX_MAGIC.len() + 4 + 32 {
            return Err(Error::IndexFormat("file too short".into()));
        }
        let (payload, checksum) = bytes.split_at(bytes.len() - 32);
        let digest = Sha256::digest(payload);
        if digest.as_slice() != checksum {
            return Err(Error::IndexFormat("checksum mismatch".into()));
        }
        let mut cur = std::io::Cursor::new(payload);
        let mut magic = [0u8; 4];
        cur.read_exact(&mut magic)
            .map_err(|_| Error::IndexFormat("truncated header".into()))?;
        if &magic != INDEX_MAGIC {
            return Err(Error::IndexFormat("bad magic".into()));
        }
        let version = cur
            .read_u32::<LittleEndian>()
            .map_err(|_| Error::IndexFormat("truncated header".into()))?;
        if version != INDEX_VERSION {
            return Err(Error::IndexFormat(format!(
                "unsupported format version {version} (expected {INDEX_VERSION})"
            )));
        }
        let trunc = |_| Error::IndexFormat("truncated payload".into());
        let read_string = |cur: &mut std::io::Cursor<&[u8]>| -> Result<String> {
            let len = cur.read_u32::<LittleEndian>().map_err(trunc)? as usize;
            let mut buf = vec![0u8; len];
            cur.read_exact(&mut buf).map_err(trunc)?;
            String::from_utf8(buf).map_err(|_| Error::IndexFormat("invalid utf-8 label".into()))
        };
        let read_set = |cur: &mut std::io::Cursor<&[u8]>| -> Result<Vec<u32>> {
            let len = cur.read_u32::<LittleEndian>().map_err(trunc)? as usize;
            let mut set = Vec::with_capacity(len);
            for _ in 0..len {
                set.push(cur.read_u32::<LittleEndian>().map_err(trunc)?);
            }
            Ok(set)
        };

        let node_count = cur.read_u64::<LittleEndian>().map_err(trunc)? as usize;
        let mut builder = HypergraphBuilder::new();
        for _ in 0..node_count {
            let kind = match cur.read_u8().map_err(trunc)? {
                0 => NodeKind::Term,
                1 => NodeKind::Entity,
                other => {
                    return Err(Error::IndexFormat(format!("unknown node kind {other}")));
                }
            };
            let label = read_string(&mut cur)?;
            builder.add_node(kind, &label);
        }
        let edge_count = cur.read_u64::<LittleEndian>().map_err(trunc)? as usize;
        for _ in 0..edge_count {
            let kind = EdgeKind::from_u8(cur.read_u8().map_err(trunc)?)
                .ok_or_else(|| Error::IndexFormat("unknown edge kind".into()))?;
            let flags = cur.read_u8().map_err(trunc)?;
            let weight = if flags & 1 != 0 {
                Some(cur.read_f64::<LittleEndian>().map_err(trunc)?)
            } else {
                None
            };
            let doc_id = if flags & 2 != 0 {
                Some(read_string(&mut cur)?)
            } else {
                None
            };
            let spec = if kind.is_directed() {
                let tail = read_set(&mut cur)?;
                let head = read_set(&mut cur)?;
                EdgeSpec::Directed { tail, head }
            } else {
                EdgeSpec::Undirected { members: read_set(&mut cur)? }
            };
            builder.add_hyperedge(kind, spec, weight, doc_id)?;
        }
        if (cur.position() as usize) != payload.len() {
            return Err(Error::IndexFormat("trailing bytes in payload".into()));
        }
        Ok(builder.seal())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Hypergraph> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Hypergraph::from_bytes(&bytes)
    }
}
