//! Monte Carlo estimation of top-k Personalized PageRank lists and baskets,
//! with exact ground truth and analytical error bounds.

pub mod bounds;
pub mod disambig;
pub mod error;
pub mod exact;
pub mod graph;
pub mod mc;
pub mod special;
pub mod topk;

pub use error::{Error, Result};
pub use exact::{resolvent_entry, solve_ppr, top_k, PprVector, ResolventEntry, DEFAULT_TOL};
pub use graph::{
    load_edge_list, load_node_map, parse_edge_list, DanglingPolicy, EdgeFilter, Graph, NodeId,
    WalkConfig,
};
pub use mc::{
    derive_seed, estimate, run, run_adaptive, run_complete_path, run_end_point, AdaptiveOutcome,
    AdaptiveParams, MCEstimate, WalkMethod, WalkOutcome,
};
pub use topk::{
    compare_baskets, convergence_curve, satisfies_relaxation, write_curve_csv, BasketComparison,
    CurveRow, TopKKind, TopKReport,
};
