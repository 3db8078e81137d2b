//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use pprtopk_core::disambig::Corpus;
use pprtopk_core::{Graph, WalkConfig};

/// Ten nodes, no dangling nodes. At c = 0.85 from seed 0 the exact order is
/// 0, 1, 2, 3, 7, 4, 6, 8, 9, 5 with clear gaps after ranks 1 to 4.
pub fn fixture10() -> Graph {
    let adj: [&[usize]; 10] = [
        &[1, 2, 3],
        &[0, 2, 4],
        &[0, 1, 5],
        &[6, 7],
        &[1, 8],
        &[2, 9],
        &[3, 7],
        &[8, 0],
        &[9, 4],
        &[0, 6],
    ];
    Graph::from_edges(
        10,
        adj.iter()
            .enumerate()
            .flat_map(|(s, ds)| ds.iter().map(move |&d| (s, d))),
    )
}

pub fn fixture_cfg() -> WalkConfig {
    WalkConfig::new(0.85, 0)
}

/// Hub 0 with leaves 1..=3; each leaf links back to the hub and to five
/// private tail nodes, which link back to the hub. The top-4 basket is
/// {0, 1, 2, 3} and leaves outweigh tail nodes by a factor 6 / c.
pub fn star() -> Graph {
    let mut edges = Vec::new();
    let mut next = 4;
    for leaf in 1..=3 {
        edges.push((0, leaf));
        edges.push((leaf, 0));
        for _ in 0..5 {
            edges.push((leaf, next));
            edges.push((next, 0));
            next += 1;
        }
    }
    Graph::from_edges(next, edges)
}

/// Random graph with `n` nodes; roughly one node in ten is dangling.
pub fn random_graph(n: usize, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for s in 0..n {
        if rng.random_bool(0.1) {
            continue;
        }
        let deg = rng.random_range(1..=6.min(n));
        for _ in 0..deg {
            edges.push((s, rng.random_range(0..n)));
        }
    }
    Graph::from_edges(n, edges)
}

pub fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// PPR by a dense LU solve of `(I - cP)^T x = (1 - c) e_s`.
pub fn dense_ppr(g: &Graph, cfg: &WalkConfig) -> Vec<f64> {
    let n = g.node_count();
    let c = cfg.damping;
    let mut a = DMatrix::<f64>::identity(n, n);
    for v in 0..n {
        for (d, p) in g.transition_row(v, cfg) {
            // transposed: row d, column v
            a[(d, v)] -= c * p;
        }
    }
    let mut b = DVector::<f64>::zeros(n);
    b[cfg.seed] = 1.0 - c;
    let x = a.lu().solve(&b).expect("I - cP is nonsingular for c < 1");
    x.iter().copied().collect()
}

/// Two communities on disjoint hosts. Person pages 0, 1 (left) both link to
/// left topic pages 2, 3; person pages 4, 5 (right) link to right topic
/// pages 6, 7. Topic pages link to each other across hosts.
pub const TWO_PERSON_CORPUS: &str = r#"{"id": 0, "host": "pa.example", "text": "Jim Jackson hockey defenceman Flyers rookie season", "person": true, "outlinks": [2, 3]}
{"id": 1, "host": "pb.example", "text": "Jackson hockey career goals assists Flyers", "person": true, "outlinks": [2, 3]}
{"id": 2, "host": "hockey-db.example", "text": "hockey statistics goals assists seasons", "outlinks": [3]}
{"id": 3, "host": "flyers.example", "text": "Flyers hockey roster defenceman", "outlinks": [2]}
{"id": 4, "host": "pc.example", "text": "Jim Jackson journalist radio broadcaster news", "person": true, "outlinks": [6, 7]}
{"id": 5, "host": "pd.example", "text": "Jackson broadcaster sports radio show host", "person": true, "outlinks": [6, 7]}
{"id": 6, "host": "radio.example", "text": "radio station broadcaster schedule", "outlinks": [7]}
{"id": 7, "host": "news.example", "text": "news radio journalist interviews", "outlinks": [6]}
"#;

pub fn two_person_corpus() -> Corpus {
    Corpus::parse(TWO_PERSON_CORPUS.as_bytes()).expect("fixture corpus parses")
}
