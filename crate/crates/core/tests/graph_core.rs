use std::io::Write;

use pprtopk_core::graph::attach_hosts;
use pprtopk_core::{load_edge_list, load_node_map, EdgeFilter, Error, WalkConfig};

#[test]
fn edge_list_file_round_trip() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "# tiny graph\n0 1\n1 2\n\n2 0\n0 1").unwrap();
    let g = load_edge_list(f.path(), Some(5)).unwrap();
    assert_eq!(g.node_count(), 5);
    assert_eq!(g.edge_count(), 3);

    let mut out = Vec::new();
    g.write_edge_list(&mut out).unwrap();
    let again = pprtopk_core::parse_edge_list(out.as_slice(), Some(5)).unwrap();
    assert_eq!(again, g);
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(load_edge_list("/nonexistent/graph.tsv", None), Err(Error::Io { .. })));
}

#[test]
fn host_map_enables_cross_host_filter() {
    let mut edges = tempfile::NamedTempFile::new().unwrap();
    writeln!(edges, "0 1\n0 2\n1 0").unwrap();
    let mut hosts = tempfile::NamedTempFile::new().unwrap();
    writeln!(hosts, "0\ta.org\n1\ta.org\n2\tb.org").unwrap();
    let g = load_edge_list(edges.path(), None).unwrap();
    let cfg = WalkConfig::new(0.5, 0).with_edge_filter(EdgeFilter::CrossHostOnly);
    assert!(cfg.validate(&g).is_err());
    let g = attach_hosts(g, &load_node_map(hosts.path()).unwrap()).unwrap();
    assert_eq!(g.effective_out_neighbors(0, &cfg), vec![2]);
    // no cross-host link left at 1: self loop
    assert_eq!(g.effective_out_neighbors(1, &cfg), vec![1]);
}
