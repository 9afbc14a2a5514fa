use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};

use super::item::{EntityKind, NewsItem};
use crate::error::{Error, Result};

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum NodeId {
    Doc(String),
    Ent(String),
}

impl NodeId {
    /// `doc:<id>` / `ent:<canonical id>`.
    pub fn key(&self) -> String {
        match self {
            NodeId::Doc(id) => format!("doc:{id}"),
            NodeId::Ent(id) => format!("ent:{id}"),
        }
    }

    pub fn from_key(key: &str) -> Option<NodeId> {
        if let Some(rest) = key.strip_prefix("doc:") {
            Some(NodeId::Doc(rest.to_string()))
        } else {
            key.strip_prefix("ent:").map(|rest| NodeId::Ent(rest.to_string()))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityInfo {
    pub surface: String,
    pub kind: EntityKind,
}

/// Doc–entity mention graph with weighted entity co-occurrence edges.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeGraph {
    /// doc id → mentioned entity ids.
    doc_mentions: BTreeMap<String, BTreeSet<String>>,
    /// entity id → docs mentioning it.
    entity_docs: BTreeMap<String, BTreeSet<String>>,
    entities: BTreeMap<String, EntityInfo>,
    /// `(a, b)` with `a < b` → number of docs mentioning both.
    cooccurrence: BTreeMap<(String, String), u32>,
}

pub fn build_graph(items: &[NewsItem]) -> Result<KnowledgeGraph> {
    let mut g = KnowledgeGraph::default();
    for item in items {
        let entities = item.entities.as_ref().ok_or_else(|| Error::UnannotatedItem(item.id.clone()))?;
        let ids: BTreeSet<String> = entities.iter().map(|e| e.canonical_id.clone()).collect();
        for e in entities {
            g.entities.entry(e.canonical_id.clone()).or_insert_with(|| EntityInfo { surface: e.surface.clone(), kind: e.kind });
            g.entity_docs.entry(e.canonical_id.clone()).or_default().insert(item.id.clone());
        }
        let mentions = g.doc_mentions.entry(item.id.clone()).or_default();
        let fresh: Vec<String> = ids.difference(mentions).cloned().collect();
        let existing: Vec<String> = mentions.iter().cloned().collect();
        mentions.extend(fresh.iter().cloned());
        // Only count pairs new to this doc so duplicate ids never double count.
        let mut pairs = BTreeSet::new();
        for (i, a) in fresh.iter().enumerate() {
            for b in fresh[i + 1..].iter().chain(existing.iter()) {
                let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
                pairs.insert(key);
            }
        }
        for key in pairs {
            *g.cooccurrence.entry(key).or_insert(0) += 1;
        }
    }
    Ok(g)
}

impl KnowledgeGraph {
    pub fn doc_count(&self) -> usize {
        self.doc_mentions.len()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn has_entity(&self, id: &str) -> bool {
        self.entities.contains_key(id)
    }

    pub fn has_doc(&self, id: &str) -> bool {
        self.doc_mentions.contains_key(id)
    }

    pub fn entity(&self, id: &str) -> Option<&EntityInfo> {
        self.entities.get(id)
    }

    pub fn mentions(&self, doc: &str) -> impl Iterator<Item = &String> {
        self.doc_mentions.get(doc).into_iter().flatten()
    }

    pub fn docs_of(&self, entity: &str) -> impl Iterator<Item = &String> {
        self.entity_docs.get(entity).into_iter().flatten()
    }

    /// Every `(doc, entity)` mention edge.
    pub fn mention_edges(&self) -> BTreeSet<(String, String)> {
        self.doc_mentions
            .iter()
            .flat_map(|(d, es)| es.iter().map(move |e| (d.clone(), e.clone())))
            .collect()
    }

    /// Co-occurrence weight, symmetric in its arguments; 0 when absent or
    /// when `a == b`.
    pub fn cooccurrence(&self, a: &str, b: &str) -> u32 {
        if a == b {
            return 0;
        }
        let key = if a < b { (a.to_string(), b.to_string()) } else { (b.to_string(), a.to_string()) };
        self.cooccurrence.get(&key).copied().unwrap_or(0)
    }

    pub fn cooccurrence_edges(&self) -> impl Iterator<Item = (&(String, String), &u32)> {
        self.cooccurrence.iter()
    }

    /// Degree of a doc node divided by the largest doc degree.
    pub fn doc_degree_norm(&self, doc: &str) -> f64 {
        let max = self.doc_mentions.values().map(BTreeSet::len).max().unwrap_or(0);
        if max == 0 {
            return 0.0;
        }
        self.doc_mentions.get(doc).map_or(0, BTreeSet::len) as f64 / max as f64
    }

    /// Breadth-first closure over `Ent → Doc → Ent` hops, up to `depth`
    /// entity hops from `seeds`.
    pub fn expand(&self, seeds: &BTreeSet<String>, depth: usize) -> Result<Subgraph> {
        for s in seeds {
            if !self.entities.contains_key(s) {
                return Err(Error::UnknownSeed(s.clone()));
            }
        }
        let mut entities = seeds.clone();
        let mut docs = BTreeSet::new();
        let mut frontier: Vec<String> = seeds.iter().cloned().collect();
        for _ in 0..depth {
            let mut next = Vec::new();
            for e in &frontier {
                for d in self.docs_of(e) {
                    docs.insert(d.clone());
                    for e2 in self.mentions(d) {
                        if entities.insert(e2.clone()) {
                            next.push(e2.clone());
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        let edges = docs
            .iter()
            .flat_map(|d| self.mentions(d).filter(|e| entities.contains(*e)).map(move |e| (d.clone(), e.clone())))
            .collect();
        Ok(Subgraph { entities, docs, edges })
    }

    /// Shortest `Doc → Ent (→ Doc → Ent)*` path from `doc` to any entity in
    /// `targets`, using at most `max_entity_hops` entity nodes.
    pub fn evidence_path(&self, doc: &str, targets: &BTreeSet<String>, max_entity_hops: usize) -> Option<Vec<NodeId>> {
        if !self.has_doc(doc) || max_entity_hops == 0 {
            return None;
        }
        let start = NodeId::Doc(doc.to_string());
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut seen: BTreeSet<NodeId> = BTreeSet::from([start.clone()]);
        let mut queue = VecDeque::from([(start.clone(), 0usize)]);
        while let Some((node, hops)) = queue.pop_front() {
            if let NodeId::Ent(e) = &node {
                if targets.contains(e) {
                    let mut path = vec![node.clone()];
                    let mut cur = node;
                    while let Some(p) = parent.get(&cur) {
                        path.push(p.clone());
                        cur = p.clone();
                    }
                    path.reverse();
                    return Some(path);
                }
            }
            let neighbours: Vec<NodeId> = match &node {
                NodeId::Doc(d) if hops < max_entity_hops => self.mentions(d).map(|e| NodeId::Ent(e.clone())).collect(),
                NodeId::Ent(e) => self.docs_of(e).map(|d| NodeId::Doc(d.clone())).collect(),
                _ => Vec::new(),
            };
            let next_hops = if matches!(node, NodeId::Doc(_)) { hops + 1 } else { hops };
            for n in neighbours {
                if seen.insert(n.clone()) {
                    parent.insert(n.clone(), node.clone());
                    queue.push_back((n, next_hops));
                }
            }
        }
        None
    }

    /// Checks that consecutive nodes of `path` are joined by mention edges.
    pub fn path_exists(&self, path: &[NodeId]) -> bool {
        path.windows(2).all(|w| match (&w[0], &w[1]) {
            (NodeId::Doc(d), NodeId::Ent(e)) | (NodeId::Ent(e), NodeId::Doc(d)) => {
                self.doc_mentions.get(d).is_some_and(|s| s.contains(e))
            }
            _ => false,
        })
    }

    pub fn to_snapshot(&self) -> GraphSnapshot {
        let mut nodes = Vec::new();
        for d in self.doc_mentions.keys() {
            nodes.push(SnapshotNode { id: NodeId::Doc(d.clone()).key(), kind: None, label: d.clone() });
        }
        for (id, info) in &self.entities {
            nodes.push(SnapshotNode { id: NodeId::Ent(id.clone()).key(), kind: Some(info.kind), label: info.surface.clone() });
        }
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        for (d, e) in self.mention_edges() {
            edges.push(SnapshotEdge { source: NodeId::Doc(d).key(), target: NodeId::Ent(e).key(), relation: EdgeRelation::Mentions });
            weights.push(1);
        }
        for ((a, b), w) in &self.cooccurrence {
            edges.push(SnapshotEdge {
                source: NodeId::Ent(a.clone()).key(),
                target: NodeId::Ent(b.clone()).key(),
                relation: EdgeRelation::CoOccurs,
            });
            weights.push(*w);
        }
        GraphSnapshot { schema_version: GRAPH_SCHEMA_VERSION, nodes, edges, weights }
    }

    pub fn from_snapshot(snapshot: &GraphSnapshot) -> Result<Self> {
        if snapshot.schema_version != GRAPH_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported graph schema_version {}", snapshot.schema_version)));
        }
        if snapshot.edges.len() != snapshot.weights.len() {
            return Err(Error::LengthMismatch { left: snapshot.edges.len(), right: snapshot.weights.len() });
        }
        let mut g = KnowledgeGraph::default();
        for n in &snapshot.nodes {
            match (NodeId::from_key(&n.id), n.kind) {
                (Some(NodeId::Doc(d)), _) => {
                    g.doc_mentions.entry(d).or_default();
                }
                (Some(NodeId::Ent(e)), Some(kind)) => {
                    g.entities.insert(e, EntityInfo { surface: n.label.clone(), kind });
                }
                _ => return Err(Error::InvalidArgument(format!("bad snapshot node '{}'", n.id))),
            }
        }
        for (edge, w) in snapshot.edges.iter().zip(&snapshot.weights) {
            match (NodeId::from_key(&edge.source), NodeId::from_key(&edge.target), edge.relation) {
                (Some(NodeId::Doc(d)), Some(NodeId::Ent(e)), EdgeRelation::Mentions) => {
                    g.doc_mentions.entry(d.clone()).or_default().insert(e.clone());
                    g.entity_docs.entry(e).or_default().insert(d);
                }
                (Some(NodeId::Ent(a)), Some(NodeId::Ent(b)), EdgeRelation::CoOccurs) if a != b => {
                    let key = if a < b { (a, b) } else { (b, a) };
                    g.cooccurrence.insert(key, *w);
                }
                _ => return Err(Error::InvalidArgument(format!("bad snapshot edge {} -> {}", edge.source, edge.target))),
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Subgraph {
    pub entities: BTreeSet<String>,
    pub docs: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
}

impl Subgraph {
    pub fn is_subset_of(&self, other: &Subgraph) -> bool {
        self.entities.is_subset(&other.entities) && self.docs.is_subset(&other.docs) && self.edges.is_subset(&other.edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeRelation {
    Mentions,
    CoOccurs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotNode {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<EntityKind>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotEdge {
    pub source: String,
    pub target: String,
    pub relation: EdgeRelation,
}

/// JSON persistence form; `weights[i]` belongs to `edges[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub schema_version: u32,
    pub nodes: Vec<SnapshotNode>,
    pub edges: Vec<SnapshotEdge>,
    pub weights: Vec<u32>,
}

/// Holder for the current immutable graph. Readers clone the `Arc` and keep a
/// consistent view while a rebuild swaps in a new one.
#[derive(Debug, Default)]
pub struct GraphCell {
    current: RwLock<Arc<KnowledgeGraph>>,
}

impl GraphCell {
    pub fn new(graph: KnowledgeGraph) -> Self {
        GraphCell { current: RwLock::new(Arc::new(graph)) }
    }

    pub fn snapshot(&self) -> Arc<KnowledgeGraph> {
        self.current.read().clone()
    }

    pub fn replace(&self, graph: KnowledgeGraph) {
        *self.current.write() = Arc::new(graph);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::news::item::Entity;

    pub(crate) fn doc(id: &str, ents: &[&str]) -> NewsItem {
        NewsItem {
            id: id.into(),
            headline: id.into(),
            body: String::new(),
            time: 0,
            source: "s".into(),
            url: None,
            tokens_mentioned: Default::default(),
            sentiment: None,
            sentiment_score: None,
            entities: Some(ents.iter().map(|e| Entity::new(*e, EntityKind::Org)).collect()),
        }
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_doc_two_entities() {
        let g = build_graph(&[doc("d1", &["a", "b"])]).unwrap();
        assert_eq!(g.mention_edges().len(), 2);
        assert_eq!(g.cooccurrence_edges().count(), 1);
        assert_eq!(g.cooccurrence("a", "b"), 1);
        assert_eq!(g.cooccurrence("b", "a"), 1);
        assert_eq!(g.cooccurrence("a", "a"), 0);
    }

    #[test]
    fn shared_pair_weight_two() {
        let g = build_graph(&[doc("d1", &["a", "b"]), doc("d2", &["b", "a", "c"])]).unwrap();
        assert_eq!(g.cooccurrence("a", "b"), 2);
        assert_eq!(g.cooccurrence("a", "c"), 1);
    }

    #[test]
    fn unannotated_rejected() {
        let mut d = doc("d1", &[]);
        d.entities = None;
        assert!(matches!(build_graph(&[d]), Err(Error::UnannotatedItem(id)) if id == "d1"));
    }

    #[test]
    fn chain_expansion() {
        let g = build_graph(&[doc("d1", &["a", "b"]), doc("d2", &["b", "c"])]).unwrap();
        let k0 = g.expand(&set(&["a"]), 0).unwrap();
        assert_eq!(k0.entities, set(&["a"]));
        assert!(k0.docs.is_empty() && k0.edges.is_empty());
        let k1 = g.expand(&set(&["a"]), 1).unwrap();
        assert_eq!(k1.entities, set(&["a", "b"]));
        assert_eq!(k1.docs, set(&["d1"]));
        assert_eq!(k1.edges.len(), 2);
        let k5 = g.expand(&set(&["a"]), 5).unwrap();
        assert_eq!(k5.entities, set(&["a", "b", "c"]));
        assert_eq!(k5.docs, set(&["d1", "d2"]));
        assert!(matches!(g.expand(&set(&["zz"]), 1), Err(Error::UnknownSeed(_))));
    }

    #[test]
    fn evidence_paths() {
        let g = build_graph(&[doc("d1", &["a", "b"]), doc("d2", &["b", "c"]), doc("d3", &["c", "x"])]).unwrap();
        let p = g.evidence_path("d1", &set(&["a"]), 2).unwrap();
        assert_eq!(p, vec![NodeId::Doc("d1".into()), NodeId::Ent("a".into())]);
        let p = g.evidence_path("d1", &set(&["c"]), 2).unwrap();
        assert_eq!(p.len(), 4);
        assert!(g.path_exists(&p));
        assert!(g.evidence_path("d1", &set(&["x"]), 2).is_none());
        assert!(g.evidence_path("d1", &set(&["x"]), 3).is_some());
    }

    #[test]
    fn snapshot_round_trip_and_cell() {
        let g = build_graph(&[doc("d1", &["a", "b"]), doc("d2", &["b", "c"])]).unwrap();
        let snap = g.to_snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        assert!(json.contains("\"schema_version\":1"));
        let back = KnowledgeGraph::from_snapshot(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, g);

        let cell = GraphCell::new(g.clone());
        let before = cell.snapshot();
        cell.replace(KnowledgeGraph::default());
        assert_eq!(before.doc_count(), 2);
        assert_eq!(cell.snapshot().doc_count(), 0);
    }
}
