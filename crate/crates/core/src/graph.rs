//! The index read as a bipartite chemical–protein graph: summary statistics
//! and SimRank same-type similarity.
//!
//! SimRank is computed per connected component (cross-component scores are
//! identically zero) and, inside a component, per etype block: in a
//! bipartite graph started from the identity, chemical–protein pairs never
//! acquire a score, so only the chem×chem and prot×prot blocks are stored.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, OnceLock};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::EntityType;
use crate::index::{InvertedIndex, SimilarTable};
use crate::normalization::ClassId;
use crate::parallel::{map_range, map_slice, Execution};

/// Default number of similar entities listed for a query.
pub const DEFAULT_SIMILAR_K: usize = 5;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("edge {a} -- {b} joins two {etype} nodes")]
    NotBipartite { a: ClassId, b: ClassId, etype: EntityType },
    #[error("edge references undeclared node {0}")]
    UndeclaredNode(ClassId),
    #[error("node {0} declared twice")]
    DuplicateNode(ClassId),
    #[error("class {0} is not a node of the graph")]
    UnknownClass(ClassId),
    #[error("invalid SimRank parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GraphNode {
    pub class_id: ClassId,
    pub etype: EntityType,
    /// Display name, also the tie-break key for similar-entity ordering.
    pub label: String,
}

impl GraphNode {
    pub fn new(class_id: ClassId, etype: EntityType, label: impl Into<String>) -> Self {
        GraphNode { class_id, etype, label: label.into() }
    }
}

#[derive(Debug, Clone)]
struct Component {
    chem: Vec<usize>,
    prot: Vec<usize>,
    edges: usize,
}

impl Component {
    fn len(&self) -> usize {
        self.chem.len() + self.prot.len()
    }

    fn block(&self, etype: EntityType) -> &[usize] {
        match etype {
            EntityType::Chemical => &self.chem,
            EntityType::Protein => &self.prot,
        }
    }
}

/// Immutable bipartite graph. Nodes are kept sorted by class id; components
/// are numbered in order of their smallest member.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    nodes: Vec<GraphNode>,
    position: HashMap<ClassId, usize>,
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
    components: Vec<Component>,
    component_of: Vec<usize>,
    // position of each node inside its component's same-type block
    block_pos: Vec<usize>,
}

impl BipartiteGraph {
    /// One node per class occurring in a relation key, one edge per key.
    pub fn from_index(index: &InvertedIndex) -> Result<Self, GraphError> {
        let ids: BTreeSet<ClassId> = index.keys().flat_map(|k| [k.chem_class_id, k.prot_class_id]).collect();
        let nodes = ids
            .into_iter()
            .map(|id| {
                let class = index.class(id).ok_or(GraphError::UnknownClass(id))?;
                Ok(GraphNode::new(id, class.etype, class.canonical.clone()))
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        Self::from_edges(nodes, index.keys().map(|k| (k.chem_class_id, k.prot_class_id)))
    }

    /// Builds from explicit nodes and undirected edges. Repeated edges are
    /// merged; same-type edges (self-loops included) are rejected.
    pub fn from_edges(mut nodes: Vec<GraphNode>, edges: impl IntoIterator<Item = (ClassId, ClassId)>) -> Result<Self, GraphError> {
        nodes.sort_by_key(|n| n.class_id);
        if let Some(w) = nodes.windows(2).find(|w| w[0].class_id == w[1].class_id) {
            return Err(GraphError::DuplicateNode(w[0].class_id));
        }
        let position: HashMap<ClassId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.class_id, i)).collect();
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nodes.len()];
        for (a, b) in edges {
            let ia = *position.get(&a).ok_or(GraphError::UndeclaredNode(a))?;
            let ib = *position.get(&b).ok_or(GraphError::UndeclaredNode(b))?;
            if nodes[ia].etype == nodes[ib].etype {
                return Err(GraphError::NotBipartite { a, b, etype: nodes[ia].etype });
            }
            adj[ia].insert(ib);
            adj[ib].insert(ia);
        }
        let adjacency: Vec<Vec<usize>> = adj.into_iter().map(|s| s.into_iter().collect()).collect();
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;

        let n = nodes.len();
        let mut component_of = vec![usize::MAX; n];
        let mut block_pos = vec![0; n];
        let mut components = Vec::new();
        for start in 0..n {
            if component_of[start] != usize::MAX {
                continue;
            }
            let id = components.len();
            let mut members = vec![start];
            component_of[start] = id;
            let mut head = 0;
            while head < members.len() {
                let u = members[head];
                head += 1;
                for &v in &adjacency[u] {
                    if component_of[v] == usize::MAX {
                        component_of[v] = id;
                        members.push(v);
                    }
                }
            }
            members.sort_unstable();
            let (chem, prot): (Vec<usize>, Vec<usize>) = members.iter().partition(|&&u| nodes[u].etype == EntityType::Chemical);
            for block in [&chem, &prot] {
                for (p, &u) in block.iter().enumerate() {
                    block_pos[u] = p;
                }
            }
            let edges = members.iter().map(|&u| adjacency[u].len()).sum::<usize>() / 2;
            components.push(Component { chem, prot, edges });
        }
        Ok(BipartiteGraph { nodes, position, adjacency, edge_count, components, component_of, block_pos })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn node(&self, id: ClassId) -> Option<&GraphNode> {
        self.position.get(&id).map(|&i| &self.nodes[i])
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.position.contains_key(&id)
    }

    pub fn degree(&self, id: ClassId) -> usize {
        self.position.get(&id).map_or(0, |&i| self.adjacency[i].len())
    }

    /// Neighbors in ascending class id order.
    pub fn neighbors(&self, id: ClassId) -> impl Iterator<Item = ClassId> + '_ {
        let list = self.position.get(&id).map_or(&[][..], |&i| self.adjacency[i].as_slice());
        list.iter().map(|&j| self.nodes[j].class_id)
    }

    /// Every edge once, as (smaller id, larger id).
    pub fn edges(&self) -> impl Iterator<Item = (ClassId, ClassId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(move |(i, list)| {
            list.iter().filter(move |&&j| j > i).map(move |&j| (self.nodes[i].class_id, self.nodes[j].class_id))
        })
    }

    /// Component number of a node; components are numbered by smallest member.
    pub fn component_of(&self, id: ClassId) -> Option<usize> {
        self.position.get(&id).map(|&i| self.component_of[i])
    }

    fn eccentricity(&self, source: usize) -> usize {
        let mut dist = vec![usize::MAX; self.nodes.len()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        let mut far = 0;
        while let Some(u) = queue.pop_front() {
            far = far.max(dist[u]);
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        far
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_chemical: usize,
    pub n_protein: usize,
    pub n_edges: usize,
    pub n_components: usize,
    pub largest_component_nodes: usize,
    pub largest_component_edges: usize,
    pub largest_component_diameter: usize,
}

impl GraphStats {
    /// (row name, value) pairs in summary-table order.
    pub fn rows(&self) -> [(&'static str, usize); 8] {
        [
            ("# Nodes (Entities)", self.n_nodes),
            ("# Chemical Nodes", self.n_chemical),
            ("# Protein Nodes", self.n_protein),
            ("# Edges (Relations)", self.n_edges),
            ("# Connected Components", self.n_components),
            ("# Nodes in the Largest Component", self.largest_component_nodes),
            ("# Edges in the Largest Component", self.largest_component_edges),
            ("# Diameter of the Largest Component", self.largest_component_diameter),
        ]
    }
}

/// Summary statistics. The diameter is exact: one BFS per node of the
/// largest component, O(V·E) in that component.
pub fn graph_stats(g: &BipartiteGraph, exec: Execution) -> GraphStats {
    let n_chemical = g.nodes.iter().filter(|n| n.etype == EntityType::Chemical).count();
    let mut stats = GraphStats {
        n_nodes: g.node_count(),
        n_chemical,
        n_protein: g.node_count() - n_chemical,
        n_edges: g.edge_count(),
        n_components: g.component_count(),
        ..GraphStats::default()
    };
    // components are numbered by smallest member, so the first maximum wins ties
    let largest = g.components.iter().enumerate().rev().max_by_key(|(_, c)| c.len()).map(|(_, c)| c);
    if let Some(c) = largest {
        stats.largest_component_nodes = c.len();
        stats.largest_component_edges = c.edges;
        let members: Vec<usize> = c.chem.iter().chain(&c.prot).copied().collect();
        stats.largest_component_diameter = map_slice(exec, &members, |&u| g.eccentricity(u)).into_iter().max().unwrap_or(0);
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimRankParams {
    pub decay: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SimRankParams {
    fn default() -> Self {
        SimRankParams { decay: 0.8, max_iterations: 20, tolerance: 1e-4 }
    }
}

impl SimRankParams {
    pub fn validate(&self) -> Result<(), GraphError> {
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(GraphError::InvalidParams(format!("decay must lie in (0, 1), got {}", self.decay)));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(GraphError::InvalidParams(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        Ok(())
    }
}

/// Dense symmetric score block over one etype of one component.
#[derive(Debug, Clone, PartialEq)]
struct Block {
    n: usize,
    s: Vec<f64>,
}

impl Block {
    fn identity(n: usize) -> Self {
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            s[i * n + i] = 1.0;
        }
        Block { n, s }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.s[i * self.n + j]
    }

    fn max_change(&self, other: &Block) -> f64 {
        self.s.iter().zip(&other.s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// SimRank of one connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentScores {
    chem: Block,
    prot: Block,
    pub iterations: usize,
    pub converged: bool,
}

impl ComponentScores {
    fn block(&self, etype: EntityType) -> &Block {
        match etype {
            EntityType::Chemical => &self.chem,
            EntityType::Protein => &self.prot,
        }
    }
}

// One Jacobi step for the block whose neighbors live in `other`:
// s'(a,b) = C / (|N(a)||N(b)|) · Σ_{u∈N(a)} Σ_{v∈N(b)} other(u,v).
fn simrank_step(nbrs: &[Vec<usize>], other: &Block, decay: f64) -> Block {
    let (n, m) = (nbrs.len(), other.n);
    // partial[a][v] = Σ_{u∈N(a)} other(u, v)
    let mut partial = vec![0.0; n * m];
    for (a, na) in nbrs.iter().enumerate() {
        let row = &mut partial[a * m..(a + 1) * m];
        for &u in na {
            for (slot, x) in row.iter_mut().zip(&other.s[u * m..(u + 1) * m]) {
                *slot += x;
            }
        }
    }
    let mut next = Block::identity(n);
    for a in 0..n {
        for b in a + 1..n {
            let (na, nb) = (&nbrs[a], &nbrs[b]);
            if na.is_empty() || nb.is_empty() {
                continue;
            }
            let sum: f64 = nb.iter().map(|&v| partial[a * m + v]).sum();
            let s = decay * sum / (na.len() * nb.len()) as f64;
            next.s[a * n + b] = s;
            next.s[b * n + a] = s;
        }
    }
    next
}

fn simrank_component(g: &BipartiteGraph, c: &Component, params: &SimRankParams) -> ComponentScores {
    let local = |block: &[usize]| -> Vec<Vec<usize>> { block.iter().map(|&u| g.adjacency[u].iter().map(|&v| g.block_pos[v]).collect()).collect() };
    let (chem_nbrs, prot_nbrs) = (local(&c.chem), local(&c.prot));
    let mut scores = ComponentScores { chem: Block::identity(c.chem.len()), prot: Block::identity(c.prot.len()), iterations: 0, converged: false };
    for k in 1..=params.max_iterations {
        let chem = simrank_step(&chem_nbrs, &scores.prot, params.decay);
        let prot = simrank_step(&prot_nbrs, &scores.chem, params.decay);
        let delta = chem.max_change(&scores.chem).max(prot.max_change(&scores.prot));
        scores.chem = chem;
        scores.prot = prot;
        scores.iterations = k;
        if delta < params.tolerance {
            scores.converged = true;
            break;
        }
    }
    scores
}

/// Lazily computed, memoized SimRank over a shared graph. Each component is
/// computed at most once, on first use; concurrent readers of a component
/// being computed wait for the single writer.
#[derive(Debug)]
pub struct SimRankCache {
    graph: Arc<BipartiteGraph>,
    params: SimRankParams,
    slots: Vec<OnceLock<ComponentScores>>,
}

impl SimRankCache {
    pub fn new(graph: Arc<BipartiteGraph>, params: SimRankParams) -> Result<Self, GraphError> {
        params.validate()?;
        let slots = (0..graph.component_count()).map(|_| OnceLock::new()).collect();
        Ok(SimRankCache { graph, params, slots })
    }

    pub fn graph(&self) -> &BipartiteGraph {
        &self.graph
    }

    pub fn params(&self) -> SimRankParams {
        self.params
    }

    pub fn component(&self, index: usize) -> &ComponentScores {
        self.slots[index].get_or_init(|| simrank_component(&self.graph, &self.graph.components[index], &self.params))
    }

    /// Number of components computed so far.
    pub fn computed(&self) -> usize {
        self.slots.iter().filter(|s| s.get().is_some()).count()
    }

    /// Forces every component, distinct components in parallel.
    pub fn compute_all(&self, exec: Execution) {
        map_range(exec, self.slots.len(), |i| {
            self.component(i);
        });
    }

    pub fn score(&self, a: ClassId, b: ClassId) -> Result<f64, GraphError> {
        let g = &self.graph;
        let ia = *g.position.get(&a).ok_or(GraphError::UnknownClass(a))?;
        let ib = *g.position.get(&b).ok_or(GraphError::UnknownClass(b))?;
        if ia == ib {
            return Ok(1.0);
        }
        if g.component_of[ia] != g.component_of[ib] || g.nodes[ia].etype != g.nodes[ib].etype {
            return Ok(0.0);
        }
        Ok(self.component(g.component_of[ia]).block(g.nodes[ia].etype).get(g.block_pos[ia], g.block_pos[ib]))
    }

    /// Up to `k` same-type nodes with positive score, best first, ties by
    /// label then class id. The query node itself is excluded.
    pub fn top_similar(&self, id: ClassId, k: usize) -> Result<Vec<(ClassId, f64)>, GraphError> {
        let g = &self.graph;
        let i = *g.position.get(&id).ok_or(GraphError::UnknownClass(id))?;
        let etype = g.nodes[i].etype;
        let comp = g.component_of[i];
        let block = self.component(comp).block(etype);
        let p = g.block_pos[i];
        let mut hits: Vec<(usize, f64)> = g.components[comp]
            .block(etype)
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != p)
            .map(|(q, &u)| (u, block.get(p, q)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        // Scores that agree to 1e-12 are ties; iteration order can perturb
        // mathematically equal scores in the last bits.
        hits.sort_by(|&(u, s), &(v, t)| {
            quantize(t)
                .cmp(&quantize(s))
                .then_with(|| g.nodes[u].label.cmp(&g.nodes[v].label))
                .then(g.nodes[u].class_id.cmp(&g.nodes[v].class_id))
        });
        hits.truncate(k);
        Ok(hits.into_iter().map(|(u, s)| (g.nodes[u].class_id, s)).collect())
    }

    /// Computes every list up front for storage in the index.
    pub fn precompute(&self, k: usize, exec: Execution) -> SimilarTable {
        self.compute_all(exec);
        let lists = self
            .graph
            .nodes
            .iter()
            .map(|n| (n.class_id, self.top_similar(n.class_id, k).expect("node of own graph")))
            .collect();
        SimilarTable { decay: self.params.decay, max_iterations: self.params.max_iterations, tolerance: self.params.tolerance, k, lists }
    }
}

fn quantize(s: f64) -> i64 {
    (s * 1e12).round() as i64
}

/// Fully computed SimRank over a graph.
#[derive(Debug)]
pub struct SimRankScores {
    cache: SimRankCache,
}

impl SimRankScores {
    pub fn cache(&self) -> &SimRankCache {
        &self.cache
    }

    pub fn score(&self, a: ClassId, b: ClassId) -> Result<f64, GraphError> {
        self.cache.score(a, b)
    }

    pub fn top_similar(&self, id: ClassId, k: usize) -> Result<Vec<(ClassId, f64)>, GraphError> {
        self.cache.top_similar(id, k)
    }

    /// Largest iteration count over components.
    pub fn iterations(&self) -> usize {
        (0..self.cache.slots.len()).map(|i| self.cache.component(i).iterations).max().unwrap_or(0)
    }

    /// True when every component met the tolerance.
    pub fn converged(&self) -> bool {
        (0..self.cache.slots.len()).all(|i| self.cache.component(i).converged)
    }

    /// Dense matrix in node order (ascending class id).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let ids: Vec<ClassId> = self.cache.graph.nodes.iter().map(|n| n.class_id).collect();
        ids.iter().map(|&a| ids.iter().map(|&b| self.score(a, b).expect("own node")).collect()).collect()
    }
}

pub fn simrank(graph: Arc<BipartiteGraph>, params: SimRankParams, exec: Execution) -> Result<SimRankScores, GraphError> {
    let cache = SimRankCache::new(graph, params)?;
    cache.compute_all(exec);
    Ok(SimRankScores { cache })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use EntityType::{Chemical as C, Protein as P};

    fn graph(nodes: &[(ClassId, EntityType, &str)], edges: &[(ClassId, ClassId)]) -> BipartiteGraph {
        let nodes = nodes.iter().map(|&(id, t, l)| GraphNode::new(id, t, l)).collect();
        BipartiteGraph::from_edges(nodes, edges.iter().copied()).unwrap()
    }

    #[test]
    fn construction_examples() {
        let g = graph(&[(0, C, "c1"), (1, C, "c2"), (2, P, "p1")], &[(0, 2), (1, 2), (2, 0)]);
        assert_eq!((g.node_count(), g.edge_count()), (3, 2));
        assert_eq!(g.neighbors(2).collect::<Vec<_>>(), vec![0, 1]);
        let empty = BipartiteGraph::from_edges(vec![], []).unwrap();
        assert_eq!(graph_stats(&empty, Execution::Sequential), GraphStats::default());
    }

    #[test]
    fn same_type_edges_rejected() {
        let nodes = vec![GraphNode::new(0, C, "a"), GraphNode::new(1, C, "b")];
        assert!(matches!(BipartiteGraph::from_edges(nodes.clone(), [(0, 1)]), Err(GraphError::NotBipartite { .. })));
        assert!(matches!(BipartiteGraph::from_edges(nodes.clone(), [(0, 0)]), Err(GraphError::NotBipartite { .. })));
        assert!(matches!(BipartiteGraph::from_edges(nodes, [(0, 9)]), Err(GraphError::UndeclaredNode(9))));
    }

    #[test]
    fn stats_examples() {
        let path = graph(&[(0, C, "c1"), (1, C, "c2"), (2, P, "p1")], &[(0, 2), (1, 2)]);
        let s = graph_stats(&path, Execution::Parallel);
        assert_eq!((s.n_components, s.largest_component_nodes, s.largest_component_edges, s.largest_component_diameter), (1, 3, 2, 2));

        let two = graph(&[(0, C, "c1"), (1, C, "c2"), (2, P, "p1"), (3, P, "p2")], &[(0, 2), (1, 3)]);
        let s = graph_stats(&two, Execution::Sequential);
        assert_eq!((s.n_components, s.largest_component_nodes, s.largest_component_diameter), (2, 2, 1));
        assert_eq!(s.n_nodes, s.n_chemical + s.n_protein);

        let lone = graph(&[(0, C, "c1")], &[]);
        assert_eq!(graph_stats(&lone, Execution::Sequential).largest_component_diameter, 0);
    }

    #[test]
    fn largest_component_tie_goes_to_smallest_member() {
        let g = graph(&[(5, C, "a"), (6, P, "b"), (1, C, "c"), (9, P, "d")], &[(5, 6), (1, 9)]);
        assert_eq!(g.component_of(1), Some(0));
        assert_eq!(graph_stats(&g, Execution::Sequential).largest_component_edges, 1);
    }

    #[test]
    fn shared_neighbor_scores_decay() {
        let g = Arc::new(graph(&[(0, C, "c1"), (1, C, "c2"), (2, P, "p1")], &[(0, 2), (1, 2)]));
        let s = simrank(g, SimRankParams::default(), Execution::Sequential).unwrap();
        assert_eq!(s.score(0, 1).unwrap(), 0.8);
        assert_eq!(s.score(0, 0).unwrap(), 1.0);
        assert_eq!(s.score(0, 2).unwrap(), 0.0);
        assert!(s.converged());
    }

    #[test]
    fn top_similar_examples() {
        let g = Arc::new(graph(
            &[(0, C, "zeta"), (1, C, "beta"), (2, C, "alpha"), (3, P, "p1"), (4, C, "lonely"), (5, P, "p2")],
            &[(0, 3), (1, 3), (2, 3), (4, 5)],
        ));
        let cache = SimRankCache::new(g, SimRankParams::default()).unwrap();
        assert_eq!(cache.computed(), 0);
        assert_eq!(cache.top_similar(0, DEFAULT_SIMILAR_K).unwrap(), vec![(2, 0.8), (1, 0.8)]);
        assert_eq!(cache.computed(), 1);
        assert_eq!(cache.top_similar(0, 1).unwrap().len(), 1);
        assert!(cache.top_similar(4, 5).unwrap().is_empty());
        assert!(cache.top_similar(3, 5).unwrap().is_empty());
        assert_eq!(cache.score(0, 4).unwrap(), 0.0);
        assert!(matches!(cache.top_similar(42, 5), Err(GraphError::UnknownClass(42))));
    }

    #[test]
    fn params_validated() {
        let g = Arc::new(BipartiteGraph::from_edges(vec![], []).unwrap());
        for bad in [SimRankParams { decay: 1.0, ..Default::default() }, SimRankParams { tolerance: 0.0, ..Default::default() }] {
            assert!(SimRankCache::new(g.clone(), bad).is_err());
        }
    }

    // Independent oracles over a plain adjacency matrix.

    fn dense_simrank(adj: &[Vec<bool>], c: f64, iterations: usize) -> Vec<Vec<f64>> {
        let n = adj.len();
        let nbrs: Vec<Vec<usize>> = adj.iter().map(|r| (0..n).filter(|&j| r[j]).collect()).collect();
        let mut s: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        for _ in 0..iterations {
            let mut t = s.clone();
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    if nbrs[a].is_empty() || nbrs[b].is_empty() {
                        t[a][b] = 0.0;
                        continue;
                    }
                    let mut sum = 0.0;
                    for &u in &nbrs[a] {
                        for &v in &nbrs[b] {
                            sum += s[u][v];
                        }
                    }
                    t[a][b] = c * sum / (nbrs[a].len() * nbrs[b].len()) as f64;
                }
            }
            s = t;
        }
        s
    }

    fn union_find_components(n: usize, edges: &[(usize, usize)]) -> usize {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for &(a, b) in edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            parent[ra] = rb;
        }
        (0..n).filter(|&x| find(&mut parent, x) == x).count()
    }

    fn floyd_warshall_diameter_of(n: usize, edges: &[(usize, usize)], members: &[usize]) -> usize {
        let inf = usize::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0;
        }
        for &(a, b) in edges {
            d[a][b] = 1;
            d[b][a] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        members.iter().flat_map(|&i| members.iter().map(move |&j| (i, j))).map(|(i, j)| d[i][j]).max().unwrap_or(0)
    }

    fn random_bipartite(max_nodes: usize) -> impl Strategy<Value = (Vec<EntityType>, Vec<(usize, usize)>)> {
        (1..=max_nodes)
            .prop_flat_map(|n| (proptest::collection::vec(any::<bool>(), n), proptest::collection::vec(any::<bool>(), n * n)))
            .prop_map(|(types, mask)| {
                let n = types.len();
                let types: Vec<EntityType> = types.into_iter().map(|b| if b { C } else { P }).collect();
                let edges = (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| types[i] != types[j] && mask[i * n + j])
                    .collect();
                (types, edges)
            })
    }

    fn build(types: &[EntityType], edges: &[(usize, usize)]) -> BipartiteGraph {
        let nodes = types.iter().enumerate().map(|(i, &t)| GraphNode::new(i as ClassId, t, format!("n{i:02}"))).collect();
        BipartiteGraph::from_edges(nodes, edges.iter().map(|&(a, b)| (a as ClassId, b as ClassId))).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn simrank_matches_dense_oracle((types, edges) in random_bipartite(12), c in 0.1f64..0.95) {
            let n = types.len();
            let g = Arc::new(build(&types, &edges));
            // a tolerance below any representable change runs every component
            // until it is exactly stationary or hits the cap
            let params = SimRankParams { decay: c, max_iterations: 15, tolerance: f64::MIN_POSITIVE };
            let s = simrank(g, params, Execution::Parallel).unwrap();
            let mut adj = vec![vec![false; n]; n];
            for &(a, b) in &edges {
                adj[a][b] = true;
                adj[b][a] = true;
            }
            let oracle = dense_simrank(&adj, c, params.max_iterations);
            let dense = s.to_dense();
            for a in 0..n {
                for b in 0..n {
                    prop_assert!((dense[a][b] - oracle[a][b]).abs() <= 1e-6, "({a},{b}) {} vs {}", dense[a][b], oracle[a][b]);
                    prop_assert!((0.0..=1.0).contains(&dense[a][b]));
                    prop_assert_eq!(dense[a][b], dense[b][a]);
                    if types[a] != types[b] {
                        prop_assert_eq!(oracle[a][b], 0.0);
                    }
                }
                prop_assert_eq!(dense[a][a], 1.0);
            }
        }

        #[test]
        fn stats_match_oracles((types, edges) in random_bipartite(50)) {
            let n = types.len();
            let g = build(&types, &edges);
            let seq = graph_stats(&g, Execution::Sequential);
            prop_assert_eq!(seq, graph_stats(&g, Execution::Parallel));
            prop_assert_eq!(seq.n_components, union_find_components(n, &edges));
            prop_assert_eq!(seq.n_edges, edges.len());
            let largest = g.components.iter().enumerate().rev().max_by_key(|(_, c)| c.len()).unwrap().1;
            let members: Vec<usize> = largest.chem.iter().chain(&largest.prot).copied().collect();
            prop_assert_eq!(seq.largest_component_diameter, floyd_warshall_diameter_of(n, &edges, &members));
            if seq.largest_component_nodes >= 2 {
                prop_assert!(seq.largest_component_diameter >= 1);
            }
        }
    }
}
