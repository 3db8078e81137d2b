//! Person-name disambiguation: related pages from cross-host Personalized
//! PageRank, link-structure merging, and content clustering of voted term
//! profiles.

mod cluster;
mod text;

pub use cluster::{content_cluster, structure_cluster, Clustering, Merge, MergeKind};
pub use text::{
    cosine, profile_from_weights, reweight_profile, reweighted_tf, term_frequencies, tokenize,
    PageProfile, PROFILE_TERMS,
};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{attach_hosts, EdgeFilter, Graph, NodeId, WalkConfig};
use crate::mc::{self, derive_seed, WalkMethod};
use crate::topk::{TopKKind, TopKReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPage {
    pub id: NodeId,
    pub host: String,
    pub text_tokens: Vec<String>,
    pub is_person_page: bool,
    pub outlinks: Vec<NodeId>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PageRecord {
    id: NodeId,
    host: String,
    text: String,
    #[serde(default)]
    person: bool,
    #[serde(default)]
    outlinks: Vec<NodeId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub pages: BTreeMap<NodeId, CorpusPage>,
}

impl Corpus {
    /// Reads one JSON object per line; blank lines are skipped. An empty
    /// input gives an empty corpus.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self> {
        let mut pages = BTreeMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PageRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: i + 1,
                msg: e.to_string(),
            })?;
            let page = CorpusPage {
                id: rec.id,
                host: rec.host,
                text_tokens: tokenize(&rec.text),
                is_person_page: rec.person,
                outlinks: rec.outlinks,
            };
            if pages.insert(page.id, page).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate page id {}", rec.id),
                });
            }
        }
        Ok(Corpus { pages })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(BufReader::new(f))
    }

    pub fn person_pages(&self) -> impl Iterator<Item = &CorpusPage> {
        self.pages.values().filter(|p| p.is_person_page)
    }

    /// Link graph over page ids with hosts attached. Link targets outside
    /// the corpus become nodes on private hosts.
    pub fn graph(&self) -> Result<Graph> {
        let n = self
            .pages
            .values()
            .flat_map(|p| std::iter::once(p.id).chain(p.outlinks.iter().copied()))
            .max()
            .map_or(0, |m| m + 1);
        let edges = self
            .pages
            .values()
            .flat_map(|p| p.outlinks.iter().map(move |&d| (p.id, d)));
        let hosts: BTreeMap<NodeId, String> =
            self.pages.values().map(|p| (p.id, p.host.clone())).collect();
        attach_hosts(Graph::from_edges(n, edges), &hosts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambigConfig {
    /// Related pages kept per person page.
    pub k: usize,
    pub damping: f64,
    /// End Point walks per person page.
    pub m: u64,
    pub rng_seed: u64,
    /// Shared related pages needed to merge two person pages.
    pub min_overlap: usize,
    /// Average-linkage cosine level at which content merging stops.
    pub threshold: f64,
}

impl Default for DisambigConfig {
    fn default() -> Self {
        DisambigConfig {
            k: 8,
            damping: 0.2,
            m: 10_000,
            rng_seed: 0,
            min_overlap: 1,
            threshold: 0.2,
        }
    }
}

/// Top-k basket of End Point estimates from `page` over cross-host links,
/// with the page itself removed. Shorter than `k` when fewer pages are hit.
pub fn related_pages(
    g: &Graph,
    page: NodeId,
    k: usize,
    c: f64,
    m: u64,
    rng_seed: u64,
) -> Result<TopKReport> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let cfg = WalkConfig::new(c, page).with_edge_filter(EdgeFilter::CrossHostOnly);
    let outcome = mc::run(g, &cfg, WalkMethod::EndPoint, m, rng_seed)?;
    let est = mc::estimate(&outcome, &cfg);
    Ok(TopKReport::from_scores(
        est.pi_hat
            .iter()
            .filter(|(&j, _)| j != page)
            .map(|(&j, &p)| (j, p)),
        k,
        TopKKind::Basket,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub pages: Vec<NodeId>,
    /// Heaviest terms of the summed member profiles.
    pub top_terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisambiguationResult {
    pub clusters: Vec<Vec<NodeId>>,
    pub summaries: Vec<ClusterSummary>,
    pub merges: Vec<Merge>,
    pub related: BTreeMap<NodeId, Vec<NodeId>>,
    pub warnings: Vec<String>,
}

const SUMMARY_TERMS: usize = 10;

/// Runs the whole pipeline over the person pages of `corpus`. Related pages
/// of person page `p` are estimated with stream seed
/// `derive_seed(cfg.rng_seed, p)`.
pub fn disambiguate(corpus: &Corpus, cfg: &DisambigConfig) -> Result<DisambiguationResult> {
    let persons: Vec<&CorpusPage> = corpus.person_pages().collect();
    if persons.is_empty() {
        return Ok(DisambiguationResult {
            clusters: Vec::new(),
            summaries: Vec::new(),
            merges: Vec::new(),
            related: BTreeMap::new(),
            warnings: vec!["corpus has no person pages".into()],
        });
    }
    let g = corpus.graph()?;
    let related: BTreeMap<NodeId, Vec<NodeId>> = persons
        .par_iter()
        .map(|p| {
            let seed = derive_seed(cfg.rng_seed, p.id as u64);
            let top = related_pages(&g, p.id, cfg.k, cfg.damping, cfg.m, seed)?;
            Ok((p.id, top.ids))
        })
        .collect::<Result<_>>()?;

    let mut warnings = Vec::new();
    let profiles: BTreeMap<NodeId, PageProfile> = persons
        .iter()
        .map(|p| {
            let mut ids = related[&p.id].clone();
            ids.sort_unstable();
            let pages: Vec<&CorpusPage> =
                ids.iter().filter_map(|id| corpus.pages.get(id)).collect();
            (p.id, reweight_profile(p, &pages))
        })
        .collect();
    for (id, prof) in &profiles {
        if prof.is_empty() {
            warnings.push(format!("person page {id} has no usable terms; its profile is empty"));
        }
    }

    let base = structure_cluster(&related, cfg.min_overlap)?;
    let clustering = content_cluster(&base, &profiles, cfg.threshold)?;
    let summaries = clustering
        .clusters
        .iter()
        .map(|members| {
            let mut sum: BTreeMap<String, f64> = BTreeMap::new();
            for m in members {
                for (t, w) in &profiles[m].terms {
                    *sum.entry(t.clone()).or_insert(0.0) += w;
                }
            }
            let mut top = profile_from_weights(members[0], &sum).terms;
            top.truncate(SUMMARY_TERMS);
            ClusterSummary {
                pages: members.clone(),
                top_terms: top.into_iter().map(|(t, _)| t).collect(),
            }
        })
        .collect();
    Ok(DisambiguationResult {
        clusters: clustering.clusters,
        summaries,
        merges: clustering.merges,
        related,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const CORPUS: &str = r#"
{"id": 0, "host": "a.org", "text": "Jim plays hockey", "person": true, "outlinks": [1, 2]}
{"id": 1, "host": "a.org", "text": "team roster", "outlinks": [0]}
{"id": 2, "host": "b.org", "text": "hockey league", "outlinks": [0]}
"#;

    #[test]
    fn parse_corpus() {
        let c = Corpus::parse(CORPUS.as_bytes()).unwrap();
        assert_eq!(c.pages.len(), 3);
        assert!(c.pages[&0].is_person_page);
        assert!(!c.pages[&1].is_person_page);
        assert_eq!(c.pages[&0].text_tokens, vec!["jim", "plays", "hockey"]);
        let g = c.graph().unwrap();
        assert_eq!(g.host(2), Some("b.org"));
    }

    #[test]
    fn parse_errors_carry_line() {
        let missing_host = "{\"id\": 0, \"text\": \"x\"}\n";
        assert!(matches!(
            Corpus::parse(missing_host.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
        let dup = "{\"id\": 0, \"host\": \"h\", \"text\": \"x\"}\n{\"id\": 0, \"host\": \"h\", \"text\": \"y\"}\n";
        assert!(matches!(Corpus::parse(dup.as_bytes()), Err(Error::Parse { line: 2, .. })));
        let empty = Corpus::parse("\n".as_bytes()).unwrap();
        let out = disambiguate(&empty, &DisambigConfig::default()).unwrap();
        assert!(out.clusters.is_empty());
    }

    #[test]
    fn same_host_links_are_ignored() {
        let c = Corpus::parse(CORPUS.as_bytes()).unwrap();
        let g = c.graph().unwrap();
        let top = related_pages(&g, 0, 8, 0.5, 2000, 3).unwrap();
        assert_eq!(top.ids, vec![2]);
        assert!(top.is_truncated());
    }

    #[test]
    fn isolated_page_has_no_related_pages() {
        let g = Graph::from_edges(2, [(0, 1)]).with_hosts(&["h", "h"]).unwrap();
        let top = related_pages(&g, 0, 8, 0.2, 500, 1).unwrap();
        assert!(top.is_empty());
    }
}
