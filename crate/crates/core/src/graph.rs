//! Immutable out-adjacency graph and the transition semantics shared by the
//! exact solver and the random walkers.
//!
//! Node ids are dense and 0-based. Out-edge lists are stored in CSR form,
//! sorted and duplicate-free. Row `v` of the transition matrix is uniform over
//! the *effective* neighbors of `v`, which depend on the [`WalkConfig`]:
//! the edge filter may drop same-host links, and an empty neighbor list is
//! replaced according to the dangling policy.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// What a walk does at a node whose effective neighbor list is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DanglingPolicy {
    #[default]
    SelfLoop,
    JumpToSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeFilter {
    #[default]
    All,
    /// Follow only links whose destination has a different host than the
    /// current node.
    CrossHostOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Per-step continuation probability `c`.
    pub damping: f64,
    pub seed: NodeId,
    #[serde(default)]
    pub dangling: DanglingPolicy,
    #[serde(default)]
    pub edge_filter: EdgeFilter,
}

impl WalkConfig {
    pub fn new(damping: f64, seed: NodeId) -> Self {
        WalkConfig {
            damping,
            seed,
            dangling: DanglingPolicy::SelfLoop,
            edge_filter: EdgeFilter::All,
        }
    }

    pub fn with_dangling(mut self, dangling: DanglingPolicy) -> Self {
        self.dangling = dangling;
        self
    }

    pub fn with_edge_filter(mut self, edge_filter: EdgeFilter) -> Self {
        self.edge_filter = edge_filter;
        self
    }

    pub fn with_seed(mut self, seed: NodeId) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self, g: &Graph) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::invalid(format!(
                "damping must lie in (0, 1), got {}",
                self.damping
            )));
        }
        if self.seed >= g.node_count() {
            return Err(Error::invalid(format!(
                "seed node {} out of range for graph with {} nodes",
                self.seed,
                g.node_count()
            )));
        }
        if self.edge_filter == EdgeFilter::CrossHostOnly && g.hosts.is_none() {
            return Err(Error::invalid(
                "cross-host edge filter requires host labels on the graph",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Hosts {
    host_of: Vec<u32>,
    names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    hosts: Option<Hosts>,
}

impl Graph {
    /// Builds a graph from an edge iterator. `node_count` is widened to cover
    /// every id that appears. Duplicate edges collapse; self-loops are kept.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        let mut edges: Vec<(NodeId, NodeId)> = edges.into_iter().collect();
        let n = edges
            .iter()
            .map(|&(s, d)| s.max(d) + 1)
            .max()
            .unwrap_or(0)
            .max(node_count);
        edges.sort_unstable();
        edges.dedup();

        let mut offsets = vec![0usize; n + 1];
        for &(s, _) in &edges {
            offsets[s + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = edges.into_iter().map(|(_, d)| d).collect();
        Graph {
            offsets,
            targets,
            hosts: None,
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_edges(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn out_degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        (0..self.node_count()).flat_map(move |v| self.out_edges(v).iter().map(move |&d| (v, d)))
    }

    /// Attaches one host string per node.
    pub fn with_hosts<S: AsRef<str>>(mut self, hosts: &[S]) -> Result<Self> {
        if hosts.len() != self.node_count() {
            return Err(Error::invalid(format!(
                "expected {} host labels, got {}",
                self.node_count(),
                hosts.len()
            )));
        }
        let mut index: HashMap<&str, u32> = HashMap::new();
        let mut names = Vec::new();
        let mut host_of = Vec::with_capacity(hosts.len());
        for h in hosts {
            let h = h.as_ref();
            let id = *index.entry(h).or_insert_with(|| {
                names.push(h.to_string());
                (names.len() - 1) as u32
            });
            host_of.push(id);
        }
        self.hosts = Some(Hosts { host_of, names });
        Ok(self)
    }

    pub fn has_hosts(&self) -> bool {
        self.hosts.is_some()
    }

    pub fn host(&self, v: NodeId) -> Option<&str> {
        self.hosts
            .as_ref()
            .map(|h| h.names[h.host_of[v] as usize].as_str())
    }

    fn same_host(&self, a: NodeId, b: NodeId) -> bool {
        match &self.hosts {
            Some(h) => h.host_of[a] == h.host_of[b],
            None => false,
        }
    }

    /// Neighbors a walk at `v` moves to uniformly, after the edge filter and
    /// the dangling policy are applied. Never empty.
    pub fn effective_out_neighbors(&self, v: NodeId, cfg: &WalkConfig) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = match cfg.edge_filter {
            EdgeFilter::All => self.out_edges(v).to_vec(),
            EdgeFilter::CrossHostOnly => self
                .out_edges(v)
                .iter()
                .copied()
                .filter(|&d| !self.same_host(v, d))
                .collect(),
        };
        if out.is_empty() {
            out.push(match cfg.dangling {
                DanglingPolicy::SelfLoop => v,
                DanglingPolicy::JumpToSeed => cfg.seed,
            });
        }
        out
    }

    /// Row `v` of the transition matrix as `(destination, probability)`.
    pub fn transition_row(&self, v: NodeId, cfg: &WalkConfig) -> Vec<(NodeId, f64)> {
        let nbrs = self.effective_out_neighbors(v, cfg);
        let w = 1.0 / nbrs.len() as f64;
        nbrs.into_iter().map(|d| (d, w)).collect()
    }

    /// Writes the edges in the same TSV format [`load_edge_list`] reads.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (s, d) in self.edges() {
            writeln!(w, "{s}\t{d}")?;
        }
        Ok(())
    }
}

/// Effective transition structure for one [`WalkConfig`], precomputed in CSR
/// form so walkers and the iterative solver index rows directly.
#[derive(Debug, Clone)]
pub struct Transitions {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    seed: NodeId,
    damping: f64,
}

impl Transitions {
    pub fn new(g: &Graph, cfg: &WalkConfig) -> Result<Self> {
        cfg.validate(g)?;
        let n = g.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(g.edge_count());
        offsets.push(0);
        for v in 0..n {
            targets.extend(g.effective_out_neighbors(v, cfg));
            offsets.push(targets.len());
        }
        Ok(Transitions {
            offsets,
            targets,
            seed: cfg.seed,
            damping: cfg.damping,
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn seed(&self) -> NodeId {
        self.seed
    }

    pub fn damping(&self) -> f64 {
        self.damping
    }
}

/// Parses a TSV edge list: one `src<TAB>dst` pair per line, `#` comments and
/// blank lines ignored.
pub fn parse_edge_list<R: BufRead>(reader: R, n_hint: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (Some(a), Some(b), None) = (toks.next(), toks.next(), toks.next()) else {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `src<TAB>dst`, got {line:?}"),
            });
        };
        let parse = |t: &str| {
            t.parse::<NodeId>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("invalid node id {t:?}"),
            })
        };
        edges.push((parse(a)?, parse(b)?));
    }
    if edges.is_empty() {
        return Err(Error::EmptyInput("edge list contains no edges".into()));
    }
    Ok(Graph::from_edges(n_hint.unwrap_or(0), edges))
}

pub fn load_edge_list(path: impl AsRef<Path>, n_hint: Option<usize>) -> Result<Graph> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(BufReader::new(f), n_hint)
}

/// Reads a `node_id<TAB>value` sidecar file (hosts or labels).
pub fn load_node_map(path: impl AsRef<Path>) -> Result<BTreeMap<NodeId, String>> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = BTreeMap::new();
    for (idx, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, value) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: idx + 1,
            msg: "expected `node_id<TAB>value`".into(),
        })?;
        let id = id.trim().parse::<NodeId>().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("invalid node id {id:?}"),
        })?;
        out.insert(id, value.trim().to_string());
    }
    Ok(out)
}

/// Attaches hosts from a sidecar map. Nodes without an entry get a private
/// host of their own, so every link touching them counts as cross-host.
pub fn attach_hosts(g: Graph, hosts: &BTreeMap<NodeId, String>) -> Result<Graph> {
    if let Some((&id, _)) = hosts.iter().next_back() {
        if id >= g.node_count() {
            return Err(Error::invalid(format!(
                "host entry for node {id} but graph has {} nodes",
                g.node_count()
            )));
        }
    }
    let labels: Vec<String> = (0..g.node_count())
        .map(|v| match hosts.get(&v) {
            Some(h) => h.clone(),
            None => format!("\u{0}unhosted:{v}"),
        })
        .collect();
    g.with_hosts(&labels)
}
