//! Link-structure merging and average-linkage content clustering.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::text::{cosine, PageProfile};
use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Slack when comparing a linkage value with the threshold.
const THRESHOLD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeKind {
    Structure,
    Content,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub kind: MergeKind,
    /// Smallest member of each of the two merged clusters.
    pub left: NodeId,
    pub right: NodeId,
    /// Average-linkage similarity at which a content merge happened.
    pub similarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Sorted member lists, ordered by smallest member.
    pub clusters: Vec<Vec<NodeId>>,
    pub merges: Vec<Merge>,
}

impl Clustering {
    pub fn singletons(pages: impl IntoIterator<Item = NodeId>) -> Self {
        let mut clusters: Vec<Vec<NodeId>> = pages.into_iter().map(|p| vec![p]).collect();
        clusters.sort();
        clusters.dedup();
        Clustering {
            clusters,
            merges: Vec::new(),
        }
    }

    pub fn cluster_of(&self, page: NodeId) -> Option<usize> {
        self.clusters.iter().position(|c| c.binary_search(&page).is_ok())
    }

    fn normalize(&mut self) {
        self.clusters.iter_mut().for_each(|c| c.sort_unstable());
        self.clusters.sort();
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Links the larger root under the smaller; false if already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Merges person pages that share at least `min_overlap` related pages,
/// closed under transitivity.
pub fn structure_cluster(
    related: &BTreeMap<NodeId, Vec<NodeId>>,
    min_overlap: usize,
) -> Result<Clustering> {
    if min_overlap == 0 {
        return Err(Error::invalid("min_overlap must be at least 1"));
    }
    let pages: Vec<NodeId> = related.keys().copied().collect();
    let mut holders: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (idx, rel) in related.values().enumerate() {
        let mut rel = rel.clone();
        rel.sort_unstable();
        rel.dedup();
        for r in rel {
            holders.entry(r).or_default().push(idx);
        }
    }
    let mut shared: HashMap<(usize, usize), usize> = HashMap::new();
    for idxs in holders.values() {
        for (x, &a) in idxs.iter().enumerate() {
            for &b in &idxs[x + 1..] {
                *shared.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = shared
        .into_iter()
        .filter(|&(_, n)| n >= min_overlap)
        .map(|(p, _)| p)
        .collect();
    pairs.sort_unstable();

    let mut uf = UnionFind::new(pages.len());
    let mut merges = Vec::new();
    for (a, b) in pairs {
        let (ra, rb) = (uf.find(a), uf.find(b));
        if uf.union(a, b) {
            // roots are the smallest index, hence smallest id, of each side
            merges.push(Merge {
                kind: MergeKind::Structure,
                left: pages[ra.min(rb)],
                right: pages[ra.max(rb)],
                similarity: None,
            });
        }
    }
    let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for (idx, &p) in pages.iter().enumerate() {
        groups.entry(uf.find(idx)).or_default().push(p);
    }
    let mut out = Clustering {
        clusters: groups.into_values().collect(),
        merges,
    };
    out.normalize();
    Ok(out)
}

/// Average-linkage agglomerative clustering on profile cosine similarity,
/// starting from `base` and merging while the best pair's linkage is at
/// least `threshold`. Ties go to the pair with the smallest member ids.
pub fn content_cluster(
    base: &Clustering,
    profiles: &BTreeMap<NodeId, PageProfile>,
    threshold: f64,
) -> Result<Clustering> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold must lie in [0, 1], got {threshold}")));
    }
    let mut clusters = base.clusters.clone();
    clusters.iter_mut().for_each(|c| c.sort_unstable());
    clusters.sort();
    let mut merges = base.merges.clone();
    let empty = PageProfile {
        page: 0,
        terms: Vec::new(),
    };
    let profile = |p: NodeId| profiles.get(&p).unwrap_or(&empty);

    // sum of pairwise cosines between clusters a and b
    let n = clusters.len();
    let mut sums = vec![vec![0.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let s: f64 = clusters[a]
                .iter()
                .flat_map(|&x| clusters[b].iter().map(move |&y| (x, y)))
                .map(|(x, y)| cosine(profile(x), profile(y)))
                .sum();
            sums[a][b] = s;
            sums[b][a] = s;
        }
    }
    let mut alive: Vec<bool> = vec![true; n];
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in (0..n).filter(|&a| alive[a]) {
            for b in (a + 1..n).filter(|&b| alive[b]) {
                let avg = sums[a][b] / (clusters[a].len() * clusters[b].len()) as f64;
                let better = match best {
                    None => true,
                    Some((v, ba, bb)) => {
                        avg > v || (avg == v && (clusters[a][0], clusters[b][0]) < (clusters[ba][0], clusters[bb][0]))
                    }
                };
                if better {
                    best = Some((avg, a, b));
                }
            }
        }
        let Some((avg, a, b)) = best else { break };
        if avg < threshold - THRESHOLD_TOL {
            break;
        }
        let (lo, hi) = if clusters[a][0] < clusters[b][0] { (a, b) } else { (b, a) };
        merges.push(Merge {
            kind: MergeKind::Content,
            left: clusters[lo][0],
            right: clusters[hi][0],
            similarity: Some(avg),
        });
        let moved = std::mem::take(&mut clusters[hi]);
        clusters[lo].extend(moved);
        clusters[lo].sort_unstable();
        alive[hi] = false;
        for c in (0..n).filter(|&c| alive[c] && c != lo) {
            let s = sums[lo][c] + sums[hi][c];
            sums[lo][c] = s;
            sums[c][lo] = s;
        }
    }
    let mut out = Clustering {
        clusters: clusters.into_iter().filter(|c| !c.is_empty()).collect(),
        merges,
    };
    out.normalize();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn related(entries: &[(NodeId, &[NodeId])]) -> BTreeMap<NodeId, Vec<NodeId>> {
        entries.iter().map(|(p, r)| (*p, r.to_vec())).collect()
    }

    fn profile(page: NodeId, terms: &[(&str, f64)]) -> PageProfile {
        PageProfile {
            page,
            terms: terms.iter().map(|(t, w)| (t.to_string(), *w)).collect(),
        }
    }

    #[test]
    fn shared_related_page_merges() {
        let c = structure_cluster(&related(&[(1, &[10]), (2, &[10]), (3, &[11])]), 1).unwrap();
        assert_eq!(c.clusters, vec![vec![1, 2], vec![3]]);
        assert_eq!(c.merges.len(), 1);
        assert_eq!(c.merges[0].kind, MergeKind::Structure);
    }

    #[test]
    fn disjoint_sets_stay_apart() {
        let c = structure_cluster(&related(&[(1, &[10]), (2, &[11]), (3, &[])]), 1).unwrap();
        assert_eq!(c.clusters, vec![vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn transitive_closure() {
        let c = structure_cluster(&related(&[(1, &[10]), (2, &[10, 11]), (3, &[11])]), 1).unwrap();
        assert_eq!(c.clusters, vec![vec![1, 2, 3]]);
    }

    #[test]
    fn overlap_threshold() {
        let rel = related(&[(1, &[10, 11]), (2, &[10, 11]), (3, &[11, 12])]);
        let c = structure_cluster(&rel, 2).unwrap();
        assert_eq!(c.clusters, vec![vec![1, 2], vec![3]]);
        assert!(structure_cluster(&rel, 0).is_err());
    }

    #[test]
    fn content_examples() {
        let base = Clustering::singletons([1, 2, 3]);
        let profiles = BTreeMap::from([
            (1, profile(1, &[("x", 1.0)])),
            (2, profile(2, &[("x", 1.0)])),
            (3, profile(3, &[("y", 1.0)])),
        ]);
        let c = content_cluster(&base, &profiles, 0.5).unwrap();
        assert_eq!(c.clusters, vec![vec![1, 2], vec![3]]);
        assert_eq!(c.merges[0].similarity, Some(1.0));
        let c = content_cluster(&base, &profiles, 1.0).unwrap();
        assert_eq!(c.clusters, vec![vec![1, 2], vec![3]]);
        let c = content_cluster(&base, &profiles, 0.0).unwrap();
        assert_eq!(c.clusters, vec![vec![1, 2, 3]]);
        assert!(content_cluster(&base, &profiles, 1.5).is_err());
    }

    #[test]
    fn content_starts_from_structure() {
        let base = structure_cluster(&related(&[(1, &[9]), (2, &[9]), (3, &[8])]), 1).unwrap();
        let profiles = BTreeMap::from([
            (1, profile(1, &[("x", 1.0)])),
            (2, profile(2, &[("y", 1.0)])),
            (3, profile(3, &[("x", 1.0)])),
        ]);
        // linkage({1,2},{3}) = (1 + 0) / 2
        let c = content_cluster(&base, &profiles, 0.6).unwrap();
        assert_eq!(c.clusters, vec![vec![1, 2], vec![3]]);
        let c = content_cluster(&base, &profiles, 0.5).unwrap();
        assert_eq!(c.clusters, vec![vec![1, 2, 3]]);
        assert_eq!(c.merges.len(), 2);
    }

    #[test]
    fn ties_go_to_smallest_ids() {
        let base = Clustering::singletons([4, 1, 2, 3]);
        let p = |id| (id, profile(id, &[("x", 1.0)]));
        let profiles = BTreeMap::from([p(1), p(2), p(3), p(4)]);
        let c = content_cluster(&base, &profiles, 0.99).unwrap();
        let first = &c.merges[0];
        assert_eq!((first.left, first.right), (1, 2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn structure_is_order_invariant(
                sets in proptest::collection::vec(proptest::collection::vec(100usize..110, 0..3), 1..8),
                shift in 0usize..8
            ) {
                let rel: BTreeMap<NodeId, Vec<NodeId>> =
                    sets.iter().cloned().enumerate().collect();
                let mut reordered: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
                let n = sets.len();
                for i in 0..n {
                    let j = (i + shift) % n;
                    let mut r = sets[j].clone();
                    r.reverse();
                    reordered.insert(j, r);
                }
                prop_assert_eq!(
                    structure_cluster(&rel, 1).unwrap().clusters,
                    structure_cluster(&reordered, 1).unwrap().clusters
                );
            }

            #[test]
            fn content_refines_and_heights_fall(
                weights in proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, 4), 2..9),
                threshold in 0.0f64..1.0
            ) {
                let terms = ["a", "b", "c", "d"];
                let profiles: BTreeMap<NodeId, PageProfile> = weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| {
                        let t: Vec<(&str, f64)> = terms.iter().copied().zip(w.iter().copied()).collect();
                        (i, profile(i, &t))
                    })
                    .collect();
                let rel: BTreeMap<NodeId, Vec<NodeId>> =
                    (0..weights.len()).map(|i| (i, vec![100 + i / 2])).collect();
                let base = structure_cluster(&rel, 1).unwrap();
                let c = content_cluster(&base, &profiles, threshold).unwrap();
                for cl in &base.clusters {
                    let owner = c.cluster_of(cl[0]).unwrap();
                    prop_assert!(cl.iter().all(|&p| c.cluster_of(p) == Some(owner)));
                }
                let heights: Vec<f64> = c.merges.iter().filter_map(|m| m.similarity).collect();
                prop_assert!(heights.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            }
        }
    }
}
