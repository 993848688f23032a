//! The universal ranking function: repeated fixed-length random walks
//! from query seed nodes, ranking documents or entities by visit counts.
//!
//! One step picks an incident hyperedge (uniformly, or proportionally to
//! edge weight in weighted mode) and then a destination node uniformly
//! within the chosen edge. In directed mode only undirected edges and
//! directed edges with the current node in the tail are candidates;
//! with direction ignored, directed edges are also traversable backward
//! from head to tail. A walk ends early at a dead end.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::preprocess;
use crate::hypergraph::{EdgeKind, Hypergraph, NodeKind};
use crate::{Error, Result};

/// Weight assumed for unweighted nodes and hyperedges in weighted mode.
pub const DEFAULT_WEIGHT: f64 = 0.5;

/// Walks per (seed, rng substream) work unit. Fixed so that counter
/// merges are identical for any worker count.
const WALK_BLOCK: u32 = 1024;

/// Random walk score parameters.
#[derive(Debug, Clone)]
pub struct RwsParams {
    /// Length of the random walk (number of steps).
    pub walk_length: usize,
    /// Repeated walks per seed node.
    pub repeats: u32,
    /// Expand term seeds to adjacent entity nodes.
    pub expansion: bool,
    /// Respect hyperedge direction.
    pub directed: bool,
    /// Pick edges proportionally to their weight.
    pub weighted: bool,
    /// Node fatigue; only 0 is supported.
    pub node_fatigue: u32,
    /// Edge fatigue; only 0 is supported.
    pub edge_fatigue: u32,
    pub rng_seed: u64,
}

impl Default for RwsParams {
    fn default() -> Self {
        RwsParams {
            walk_length: 2,
            repeats: 10_000,
            expansion: false,
            directed: true,
            weighted: false,
            node_fatigue: 0,
            edge_fatigue: 0,
            rng_seed: 0,
        }
    }
}

impl RwsParams {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length < 1 {
            return Err(Error::InvalidParameter("walk_length must be >= 1".into()));
        }
        if self.repeats < 1 {
            return Err(Error::InvalidParameter("repeats must be >= 1".into()));
        }
        if self.node_fatigue != 0 || self.edge_fatigue != 0 {
            return Err(Error::Unsupported(
                "nonzero node/edge fatigue is not supported".into(),
            ));
        }
        Ok(())
    }
}

/// What the ranked list contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    /// Documents, ranked by their document-hyperedge visits.
    DocumentEdge,
    EntityNode,
    TermNode,
}

/// Ordered (item id, score) pairs for one topic. Scores are
/// non-increasing; ties break by ascending item id.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    pub topic_id: String,
    pub target_kind: TargetKind,
    pub entries: Vec<(String, f64)>,
}

impl RankedList {
    pub fn empty(topic_id: &str, target_kind: TargetKind) -> Self {
        RankedList {
            topic_id: topic_id.to_string(),
            target_kind,
            entries: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Write TREC run lines: `topic_id Q0 item_id rank score tag`.
    pub fn write_trec(&self, out: &mut impl Write, tag: &str) -> std::io::Result<()> {
        for (rank, (item, score)) in self.entries.iter().enumerate() {
            writeln!(out, "{} Q0 {} {} {:.8} {}", self.topic_id, item, rank + 1, score, tag)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Seeds
// ---------------------------------------------------------------------------

/// Map query terms to term nodes; with expansion, replace them by the
/// union of entity nodes sharing a hyperedge with any matched term.
pub fn seeds_from_keyword_query(
    query: &str,
    graph: &Hypergraph,
    expansion: bool,
) -> Vec<u32> {
    let mut seeds: Vec<u32> = preprocess(query)
        .iter()
        .filter_map(|t| graph.find_node(NodeKind::Term, t))
        .collect();
    seeds.sort_unstable();
    seeds.dedup();
    if !expansion {
        return seeds;
    }
    let mut expanded = Vec::new();
    for &term in &seeds {
        for &eid in graph.member_edges(term) {
            expanded.extend(
                graph
                    .edge(eid)
                    .members
                    .iter()
                    .copied()
                    .filter(|&v| graph.node_kind(v) == NodeKind::Entity),
            );
        }
        for &eid in graph.tail_edges(term).iter().chain(graph.head_edges(term)) {
            let edge = graph.edge(eid);
            expanded.extend(
                edge.tail
                    .iter()
                    .chain(&edge.head)
                    .copied()
                    .filter(|&v| graph.node_kind(v) == NodeKind::Entity),
            );
        }
    }
    expanded.sort_unstable();
    expanded.dedup();
    expanded
}

/// Resolve entity labels to entity nodes. Returns (seeds, unresolved).
pub fn seeds_from_entities(entities: &[String], graph: &Hypergraph) -> (Vec<u32>, Vec<String>) {
    let mut seeds = Vec::new();
    let mut unresolved = Vec::new();
    for label in entities {
        match graph.find_node(NodeKind::Entity, label) {
            Some(id) => seeds.push(id),
            None => unresolved.push(label.clone()),
        }
    }
    seeds.sort_unstable();
    seeds.dedup();
    (seeds, unresolved)
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Traversal {
    /// Undirected edge: destination uniform over members minus current.
    Within,
    /// Directed edge entered from the tail: destination uniform over head.
    Forward,
    /// Directed edge entered from the head (direction ignored):
    /// destination uniform over tail.
    Backward,
}

fn candidates(current: u32, graph: &Hypergraph, directed: bool) -> Vec<(u32, Traversal)> {
    let mut out = Vec::new();
    for &eid in graph.member_edges(current) {
        if graph.edge(eid).members.len() >= 2 {
            out.push((eid, Traversal::Within));
        }
    }
    for &eid in graph.tail_edges(current) {
        out.push((eid, Traversal::Forward));
    }
    if !directed {
        for &eid in graph.head_edges(current) {
            out.push((eid, Traversal::Backward));
        }
    }
    out
}

fn pick_destination(
    current: u32,
    edge_id: u32,
    traversal: Traversal,
    graph: &Hypergraph,
    rng: &mut impl Rng,
) -> u32 {
    let edge = graph.edge(edge_id);
    match traversal {
        Traversal::Forward => edge.head[rng.gen_range(0..edge.head.len())],
        Traversal::Backward => edge.tail[rng.gen_range(0..edge.tail.len())],
        Traversal::Within => {
            // Uniform over members \ {current}; members are sorted and
            // contain current exactly once.
            let pos = edge.members.binary_search(&current).expect("member edge");
            let k = rng.gen_range(0..edge.members.len() - 1);
            let idx = if k >= pos { k + 1 } else { k };
            edge.members[idx]
        }
    }
}

/// One walk step from `current`; `None` at a dead end.
pub fn walk_step(
    current: u32,
    graph: &Hypergraph,
    params: &RwsParams,
    rng: &mut impl Rng,
) -> Option<(u32, u32)> {
    let cands = candidates(current, graph, params.directed);
    if cands.is_empty() {
        return None;
    }
    let (edge_id, traversal) = if params.weighted {
        let weights: Vec<f64> = cands
            .iter()
            .map(|&(e, _)| graph.edge(e).weight.unwrap_or(DEFAULT_WEIGHT))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut draw = rng.gen::<f64>() * total;
        let mut chosen = cands.len() - 1;
        for (i, w) in weights.iter().enumerate() {
            draw -= w;
            if draw < 0.0 {
                chosen = i;
                break;
            }
        }
        cands[chosen]
    } else {
        cands[rng.gen_range(0..cands.len())]
    };
    let dest = pick_destination(current, edge_id, traversal, graph, rng);
    Some((edge_id, dest))
}

// ---------------------------------------------------------------------------
// Random walk score
// ---------------------------------------------------------------------------

#[derive(Clone)]
struct VisitCounters {
    nodes: Vec<u64>,
    edges: Vec<u64>,
}

impl VisitCounters {
    fn new(graph: &Hypergraph) -> Self {
        VisitCounters {
            nodes: vec![0; graph.node_count()],
            edges: vec![0; graph.edge_count()],
        }
    }

    fn merge(mut self, other: VisitCounters) -> Self {
        for (a, b) in self.nodes.iter_mut().zip(&other.nodes) {
            *a += b;
        }
        for (a, b) in self.edges.iter_mut().zip(&other.edges) {
            *a += b;
        }
        self
    }
}

fn block_rng(master_seed: u64, seed_node: u32, block: u32) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master_seed.to_le_bytes());
    seed[8..12].copy_from_slice(&seed_node.to_le_bytes());
    seed[12..16].copy_from_slice(&block.to_le_bytes());
    seed[16..24].copy_from_slice(&0x9e3779b97f4a7c15u64.to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

fn run_walks(graph: &Hypergraph, seeds: &[u32], params: &RwsParams) -> VisitCounters {
    // (seed, block) units each own an independent RNG substream, so the
    // merged counters are identical for serial and parallel execution.
    let blocks_per_seed = (params.repeats + WALK_BLOCK - 1) / WALK_BLOCK;
    let units: Vec<(u32, u32)> = seeds
        .iter()
        .flat_map(|&s| (0..blocks_per_seed).map(move |b| (s, b)))
        .collect();
    units
        .into_par_iter()
        .fold(
            || VisitCounters::new(graph),
            |mut counters, (seed_node, block)| {
                let mut rng = block_rng(params.rng_seed, seed_node, block);
                let walks = WALK_BLOCK.min(params.repeats - block * WALK_BLOCK);
                for _ in 0..walks {
                    let mut current = seed_node;
                    for _ in 0..params.walk_length {
                        match walk_step(current, graph, params, &mut rng) {
                            Some((edge, node)) => {
                                counters.edges[edge as usize] += 1;
                                counters.nodes[node as usize] += 1;
                                current = node;
                            }
                            None => break,
                        }
                    }
                }
                counters
            },
        )
        .reduce(|| VisitCounters::new(graph), VisitCounters::merge)
}

/// Rank items of `target_kind` by normalized visit counts accumulated
/// over `repeats` walks of up to `walk_length` steps from every seed.
/// Seed placement itself is not a visit; items never visited are
/// excluded. Deterministic given `rng_seed`, independent of seed order
/// and worker count.
pub fn random_walk_score(
    topic_id: &str,
    seeds: &[u32],
    graph: &Hypergraph,
    params: &RwsParams,
    target_kind: TargetKind,
) -> Result<RankedList> {
    params.validate()?;
    let mut seeds: Vec<u32> = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    if seeds.is_empty() {
        return Ok(RankedList::empty(topic_id, target_kind));
    }
    for &s in &seeds {
        if s as usize >= graph.node_count() {
            return Err(Error::UnknownNode(s));
        }
    }

    let counters = run_walks(graph, &seeds, params);

    let mut visits: BTreeMap<String, u64> = BTreeMap::new();
    match target_kind {
        TargetKind::DocumentEdge => {
            for eid in graph.edge_ids() {
                let edge = graph.edge(eid);
                if edge.kind == EdgeKind::Document && counters.edges[eid as usize] > 0 {
                    if let Some(doc_id) = &edge.doc_id {
                        *visits.entry(doc_id.clone()).or_insert(0) +=
                            counters.edges[eid as usize];
                    }
                }
            }
        }
        TargetKind::EntityNode | TargetKind::TermNode => {
            let want = if target_kind == TargetKind::EntityNode {
                NodeKind::Entity
            } else {
                NodeKind::Term
            };
            for v in graph.node_ids() {
                if graph.node_kind(v) == want && counters.nodes[v as usize] > 0 {
                    *visits.entry(graph.node_label(v).to_string()).or_insert(0) +=
                        counters.nodes[v as usize];
                }
            }
        }
    }
    Ok(ranked_from_visits(topic_id, target_kind, visits))
}

fn ranked_from_visits(
    topic_id: &str,
    target_kind: TargetKind,
    visits: BTreeMap<String, u64>,
) -> RankedList {
    let total: u64 = visits.values().sum();
    let mut entries: Vec<(String, f64)> = visits
        .into_iter()
        .map(|(item, count)| (item, count as f64 / total as f64))
        .collect();
    entries.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    RankedList {
        topic_id: topic_id.to_string(),
        target_kind,
        entries,
    }
}

// ---------------------------------------------------------------------------
// Task wrappers
// ---------------------------------------------------------------------------

/// Query-side entry points mapping each search task onto the random
/// walk score: keyword queries rank documents or entities, entity
/// queries rank other entities.
pub struct Searcher<'g> {
    graph: &'g Hypergraph,
    params: RwsParams,
}

impl<'g> Searcher<'g> {
    pub fn new(graph: &'g Hypergraph, params: RwsParams) -> Self {
        Searcher { graph, params }
    }

    pub fn params(&self) -> &RwsParams {
        &self.params
    }

    /// Keyword query -> document ranking.
    pub fn ad_hoc_document_retrieval(&self, topic_id: &str, query: &str) -> Result<RankedList> {
        let seeds = seeds_from_keyword_query(query, self.graph, self.params.expansion);
        random_walk_score(topic_id, &seeds, self.graph, &self.params, TargetKind::DocumentEdge)
    }

    /// Keyword query -> entity ranking.
    pub fn ad_hoc_entity_retrieval(&self, topic_id: &str, query: &str) -> Result<RankedList> {
        let seeds = seeds_from_keyword_query(query, self.graph, self.params.expansion);
        random_walk_score(topic_id, &seeds, self.graph, &self.params, TargetKind::EntityNode)
    }

    /// One example entity -> similar entities. Identical to entity list
    /// completion with a single-element input set.
    pub fn related_entity_finding(&self, topic_id: &str, entity: &str) -> Result<RankedList> {
        self.entity_list_completion(topic_id, std::slice::from_ref(&entity.to_string()))
    }

    /// A set of example entities -> similar entities, never echoing the
    /// input entities back.
    pub fn entity_list_completion(
        &self,
        topic_id: &str,
        entities: &[String],
    ) -> Result<RankedList> {
        if entities.is_empty() {
            return Err(Error::InvalidParameter(
                "entity list completion requires at least one input entity".into(),
            ));
        }
        let (seeds, _unresolved) = seeds_from_entities(entities, self.graph);
        let mut list = random_walk_score(
            topic_id,
            &seeds,
            self.graph,
            &self.params,
            TargetKind::EntityNode,
        )?;
        list.entries.retain(|(label, _)| !entities.iter().any(|e| e == label));
        // Renormalize after removing the inputs.
        let total: f64 = list.entries.iter().map(|(_, s)| s).sum();
        if total > 0.0 {
            for entry in &mut list.entries {
                entry.1 /= total;
            }
        }
        Ok(list)
    }
}

/// Run `random_walk_score` inside a dedicated thread pool. `threads = 0`
/// uses the rayon default. Output is identical for every thread count.
pub fn random_walk_score_with_threads(
    topic_id: &str,
    seeds: &[u32],
    graph: &Hypergraph,
    params: &RwsParams,
    target_kind: TargetKind,
    threads: usize,
) -> Result<RankedList> {
    if threads == 0 {
        return random_walk_score(topic_id, seeds, graph, params, target_kind);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| random_walk_score(topic_id, seeds, graph, params, target_kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::{EdgeSpec, HypergraphBuilder};
    use rand::SeedableRng;

    fn doc_edge(b: &mut HypergraphBuilder, members: Vec<u32>, doc: &str) -> u32 {
        b.add_hyperedge(EdgeKind::Document, EdgeSpec::Undirected { members }, None, Some(doc.into()))
            .unwrap()
    }

    #[test]
    fn single_option_step_is_deterministic() {
        let mut b = HypergraphBuilder::new();
        let t = b.add_node(NodeKind::Term, "t");
        let e = b.add_node(NodeKind::Entity, "E");
        let eid = doc_edge(&mut b, vec![t, e], "d1");
        let g = b.seal();
        let params = RwsParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            assert_eq!(walk_step(t, &g, &params, &mut rng), Some((eid, e)));
        }
    }

    #[test]
    fn head_only_node_is_dead_end_when_directed() {
        let mut b = HypergraphBuilder::new();
        let e1 = b.add_node(NodeKind::Entity, "E1");
        let e2 = b.add_node(NodeKind::Entity, "E2");
        b.add_hyperedge(
            EdgeKind::RelatedTo,
            EdgeSpec::Directed { tail: vec![e1], head: vec![e2] },
            None,
            None,
        )
        .unwrap();
        let g = b.seal();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let directed = RwsParams::default();
        assert_eq!(walk_step(e2, &g, &directed, &mut rng), None);
        // Ignoring direction, the edge is traversable backward.
        let undirected = RwsParams { directed: false, ..Default::default() };
        assert_eq!(walk_step(e2, &g, &undirected, &mut rng), Some((0, e1)));
    }

    #[test]
    fn singleton_document_edge_is_not_a_candidate() {
        let mut b = HypergraphBuilder::new();
        let t = b.add_node(NodeKind::Term, "t");
        doc_edge(&mut b, vec![t], "d1");
        let g = b.seal();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(walk_step(t, &g, &RwsParams::default(), &mut rng), None);
    }

    #[test]
    fn weighted_step_frequencies_match_exact_probabilities() {
        // From x: edge A {x,y} w=0.8; edge B {x,y,z} unweighted (0.5);
        // edge C x->w w=0.2. Weighted, directed.
        // P(edge A)=0.8/1.5, P(B)=0.5/1.5, P(C)=0.2/1.5.
        // P(y) = 0.8/1.5 + 0.5/1.5 * 0.5 = 0.7
        // P(z) = 0.5/1.5 * 0.5 = 1/6
        // P(w) = 0.2/1.5 = 2/15
        let mut b = HypergraphBuilder::new();
        let x = b.add_node(NodeKind::Term, "x");
        let y = b.add_node(NodeKind::Term, "y");
        let z = b.add_node(NodeKind::Term, "z");
        let w = b.add_node(NodeKind::Entity, "W");
        b.add_hyperedge(EdgeKind::Synonym, EdgeSpec::Undirected { members: vec![x, y] }, Some(0.8), None)
            .unwrap();
        doc_edge(&mut b, vec![x, y, z], "d1");
        b.add_hyperedge(
            EdgeKind::ContainedIn,
            EdgeSpec::Directed { tail: vec![x], head: vec![w] },
            Some(0.2),
            None,
        )
        .unwrap();
        let g = b.seal();
        let params = RwsParams { weighted: true, ..Default::default() };
        let trials = 100_000u32;
        let mut counts = std::collections::HashMap::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..trials {
            let (_, dest) = walk_step(x, &g, &params, &mut rng).unwrap();
            *counts.entry(dest).or_insert(0u32) += 1;
        }
        let freq = |n: u32| counts.get(&n).copied().unwrap_or(0) as f64 / trials as f64;
        assert!((freq(y) - 0.7).abs() < 0.01, "y: {}", freq(y));
        assert!((freq(z) - 1.0 / 6.0).abs() < 0.01, "z: {}", freq(z));
        assert!((freq(w) - 2.0 / 15.0).abs() < 0.01, "w: {}", freq(w));
    }

    #[test]
    fn only_reachable_entity_scores_one() {
        let mut b = HypergraphBuilder::new();
        let t = b.add_node(NodeKind::Term, "t");
        let e = b.add_node(NodeKind::Entity, "E");
        doc_edge(&mut b, vec![t, e], "d1");
        let g = b.seal();
        let list = random_walk_score("q1", &[t], &g, &RwsParams::default(), TargetKind::EntityNode)
            .unwrap();
        assert_eq!(list.entries.len(), 1);
        assert_eq!(list.entries[0].0, "E");
        assert!((list.entries[0].1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_seeds_give_empty_list() {
        let g = HypergraphBuilder::new().seal();
        let list =
            random_walk_score("q1", &[], &g, &RwsParams::default(), TargetKind::EntityNode).unwrap();
        assert!(list.is_empty());
    }

    #[test]
    fn nonzero_fatigue_rejected() {
        let g = HypergraphBuilder::new().seal();
        let params = RwsParams { node_fatigue: 1, ..Default::default() };
        assert!(matches!(
            random_walk_score("q", &[], &g, &params, TargetKind::EntityNode),
            Err(Error::Unsupported(_))
        ));
        let params = RwsParams { edge_fatigue: 2, ..Default::default() };
        assert!(params.validate().is_err());
    }

    fn fixture_graph() -> Hypergraph {
        let mut b = HypergraphBuilder::new();
        let t1 = b.add_node(NodeKind::Term, "alpha");
        let t2 = b.add_node(NodeKind::Term, "beta");
        let e1 = b.add_node(NodeKind::Entity, "E1");
        let e2 = b.add_node(NodeKind::Entity, "E2");
        let e3 = b.add_node(NodeKind::Entity, "E3");
        doc_edge(&mut b, vec![t1, t2, e1], "d1");
        doc_edge(&mut b, vec![t2, e2], "d2");
        b.add_hyperedge(
            EdgeKind::RelatedTo,
            EdgeSpec::Directed { tail: vec![e1], head: vec![e2, e3] },
            None,
            None,
        )
        .unwrap();
        b.add_hyperedge(
            EdgeKind::ContainedIn,
            EdgeSpec::Directed { tail: vec![t1], head: vec![e1] },
            None,
            None,
        )
        .unwrap();
        b.seal()
    }

    #[test]
    fn deterministic_and_seed_order_invariant() {
        let g = fixture_graph();
        let params = RwsParams { repeats: 3000, rng_seed: 42, ..Default::default() };
        let a = random_walk_score("q", &[0, 1], &g, &params, TargetKind::EntityNode).unwrap();
        let b = random_walk_score("q", &[1, 0], &g, &params, TargetKind::EntityNode).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let g = fixture_graph();
        let params = RwsParams { repeats: 5000, rng_seed: 9, ..Default::default() };
        let serial =
            random_walk_score_with_threads("q", &[0, 1], &g, &params, TargetKind::DocumentEdge, 1)
                .unwrap();
        let parallel =
            random_walk_score_with_threads("q", &[0, 1], &g, &params, TargetKind::DocumentEdge, 8)
                .unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn scores_sum_to_one_and_are_sorted() {
        let g = fixture_graph();
        let params = RwsParams { repeats: 2000, ..Default::default() };
        let list = random_walk_score("q", &[0, 1], &g, &params, TargetKind::EntityNode).unwrap();
        assert!(!list.is_empty());
        let total: f64 = list.entries.iter().map(|(_, s)| s).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for pair in list.entries.windows(2) {
            assert!(pair[0].1 >= pair[1].1);
            if pair[0].1 == pair[1].1 {
                assert!(pair[0].0 < pair[1].0);
            }
        }
    }

    #[test]
    fn unreachable_items_never_appear() {
        let mut b = HypergraphBuilder::new();
        let t = b.add_node(NodeKind::Term, "t");
        let e = b.add_node(NodeKind::Entity, "E");
        b.add_node(NodeKind::Entity, "Isolated");
        doc_edge(&mut b, vec![t, e], "d1");
        let g = b.seal();
        let list = random_walk_score("q", &[t], &g, &RwsParams::default(), TargetKind::EntityNode)
            .unwrap();
        assert!(list.entries.iter().all(|(label, _)| label != "Isolated"));
    }

    #[test]
    fn expansion_reaches_adjacent_entities() {
        let g = fixture_graph();
        let seeds = seeds_from_keyword_query("alpha", &g, true);
        let e1 = g.find_node(NodeKind::Entity, "E1").unwrap();
        assert!(seeds.contains(&e1));
        assert!(seeds.iter().all(|&s| g.node_kind(s) == NodeKind::Entity));
    }

    #[test]
    fn keyword_seeds_without_matches_are_empty() {
        let g = fixture_graph();
        assert!(seeds_from_keyword_query("zzz qqq", &g, false).is_empty());
    }

    #[test]
    fn entity_seeds_report_unresolved() {
        let g = fixture_graph();
        let (seeds, unresolved) =
            seeds_from_entities(&["E1".into(), "Nope".into()], &g);
        assert_eq!(seeds.len(), 1);
        assert_eq!(unresolved, vec!["Nope".to_string()]);
    }

    #[test]
    fn completion_equals_related_entity_finding_and_filters_inputs() {
        let g = fixture_graph();
        let params = RwsParams { repeats: 3000, rng_seed: 5, ..Default::default() };
        let searcher = Searcher::new(&g, params);
        let ref_list = searcher.related_entity_finding("q", "E1").unwrap();
        let elc_list = searcher.entity_list_completion("q", &["E1".to_string()]).unwrap();
        assert_eq!(ref_list, elc_list);
        assert!(ref_list.entries.iter().all(|(label, _)| label != "E1"));
        // The RelatedTo co-grouped entities are reachable.
        assert!(!ref_list.is_empty());
    }

    #[test]
    fn convergence_with_more_repeats() {
        let g = fixture_graph();
        let l1 = |a: &RankedList, b: &RankedList| -> f64 {
            let mut map: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
            for (k, v) in &a.entries {
                map.entry(k).or_default().0 = *v;
            }
            for (k, v) in &b.entries {
                map.entry(k).or_default().1 = *v;
            }
            map.values().map(|(x, y)| (x - y).abs()).sum()
        };
        let run = |r: u32, seed: u64| {
            let params = RwsParams { repeats: r, rng_seed: seed, ..Default::default() };
            random_walk_score("q", &[0, 1], &g, &params, TargetKind::EntityNode).unwrap()
        };
        // Distance between independent runs shrinks as r grows,
        // averaged over a few seeds to keep the test stable.
        let mut small = 0.0;
        let mut large = 0.0;
        for seed in 0..5 {
            small += l1(&run(200, seed), &run(200, seed + 100));
            large += l1(&run(20_000, seed), &run(20_000, seed + 100));
        }
        assert!(large < small, "large {large} small {small}");
    }
}
