//! `pprtopk`: exact and Monte Carlo Personalized PageRank, error bounds,
//! convergence experiments and name disambiguation from the command line.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use pprtopk_core::bounds::{self, JStar, OrderMode, PairwiseModel};
use pprtopk_core::disambig::{self, Corpus, DisambigConfig};
use pprtopk_core::graph::attach_hosts;
use pprtopk_core::{
    exact, mc, topk, AdaptiveParams, DanglingPolicy, EdgeFilter, Graph, WalkConfig, WalkMethod,
};

use output::{print_json, OutDir};

#[derive(Parser, Debug)]
#[command(name = "pprtopk", version, about = "Top-k Personalized PageRank by Monte Carlo")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "PPRTOPK_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve PPR exactly and report the top-k list.
    Exact(ExactArgs),
    /// Estimate PPR with random walks.
    Mc(McArgs),
    /// Analytical variances, misranking bounds and detection probabilities.
    #[command(subcommand)]
    Bounds(BoundsCommand),
    /// Correctly detected top-k members against the number of walks.
    Experiment(ExperimentArgs),
    /// Cluster the person pages of a JSON-lines corpus.
    Disambig(DisambigArgs),
}

#[derive(Args, Debug, Serialize)]
struct GraphArgs {
    /// Edge list: one `src dst` pair per line, `#` starts a comment.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Node count, if larger than the largest id + 1.
    #[arg(long)]
    nodes: Option<usize>,
    /// Node-to-host map (`id host` per line), needed for --cross-host-only.
    #[arg(long)]
    hosts: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: usize,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, value_enum, default_value_t = Dangling::SelfLoop)]
    dangling: Dangling,
    /// Follow only links between different hosts.
    #[arg(long)]
    cross_host_only: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Dangling {
    SelfLoop,
    JumpToSeed,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    #[value(alias = "endpoint")]
    EndPoint,
    #[value(alias = "completepath")]
    CompletePath,
}

impl From<Method> for WalkMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::EndPoint => WalkMethod::EndPoint,
            Method::CompletePath => WalkMethod::CompletePath,
        }
    }
}

impl GraphArgs {
    fn load(&self) -> Result<(Graph, WalkConfig)> {
        let path = self
            .graph
            .as_ref()
            .ok_or_else(|| usage("--graph is required for this command"))?;
        let mut g = pprtopk_core::load_edge_list(path, self.nodes)?;
        if let Some(h) = &self.hosts {
            g = attach_hosts(g, &pprtopk_core::load_node_map(h)?)?;
        }
        let cfg = WalkConfig::new(self.damping, self.seed)
            .with_dangling(match self.dangling {
                Dangling::SelfLoop => DanglingPolicy::SelfLoop,
                Dangling::JumpToSeed => DanglingPolicy::JumpToSeed,
            })
            .with_edge_filter(if self.cross_host_only {
                EdgeFilter::CrossHostOnly
            } else {
                EdgeFilter::All
            });
        cfg.validate(&g)?;
        Ok((g, cfg))
    }

    /// Exact PPR values sorted in descending order.
    fn sorted_pi(&self) -> Result<Vec<f64>> {
        let (g, cfg) = self.load()?;
        Ok(exact::solve_ppr(&g, &cfg, exact::DEFAULT_TOL, None)?.sorted_desc())
    }
}

#[derive(Args, Debug, Serialize)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = exact::DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct McArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_enum, default_value_t = Method::EndPoint)]
    method: Method,
    /// Number of walks (fixed-m mode).
    #[arg(long, conflicts_with = "adaptive", required_unless_present = "adaptive")]
    m: Option<u64>,
    /// Stop once the top-k leads the rest by --gap-d hits.
    #[arg(long)]
    adaptive: bool,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    gap_d: u64,
    #[arg(long, default_value_t = 100)]
    batch: u64,
    #[arg(long, default_value_t = 1_000_000)]
    cap: u64,
    #[arg(long, default_value_t = 0)]
    rng: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// Standard deviation of one node's estimate.
    Variance(VarianceArgs),
    /// Entry of the Complete Path covariance matrix.
    Covariance(CovarianceArgs),
    /// Probability that two End Point counts are misranked.
    Pairwise(PairwiseArgs),
    /// Bonferroni bound on a wrong top-k basket.
    Basket(BasketArgs),
    /// Bonferroni bound on a wrong top-k list.
    List(ListArgs),
    /// CDF of an order statistic of the end-point ranks.
    OrderStats(OrderArgs),
    /// Probability that a node is hit at least r times.
    Hit(HitArgs),
    /// Expected tail nodes with at least y Poisson visits.
    Mu(MuArgs),
    /// Expected number of correctly found basket members (Poissonized).
    Em1(Em1Args),
    /// Sufficient number of walks for a relaxed top-k basket.
    RecommendM(RecommendArgs),
}

#[derive(Args, Debug, Serialize)]
struct BoundsOut {
    /// Directory for bound.json and manifest.json (default: print to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct VarianceArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    node: usize,
    #[arg(long, value_enum, default_value_t = Method::EndPoint)]
    method: Method,
    #[arg(long)]
    m: Option<u64>,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(Args, Debug, Serialize)]
struct CovarianceArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long)]
    i: usize,
    #[arg(long)]
    j: usize,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Model {
    Exact,
    Clt,
}

impl From<Model> for PairwiseModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Exact => PairwiseModel::Exact,
            Model::Clt => PairwiseModel::Clt,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct PairwiseArgs {
    #[arg(long)]
    pi_i: f64,
    #[arg(long)]
    pi_j: f64,
    #[arg(long)]
    m: u64,
    #[arg(long, value_enum, default_value_t = Model::Clt)]
    model: Model,
    #[command(flatten)]
    out: BoundsOut,
}

/// Probabilities given on the command line, or exact PPR of a graph.
#[derive(Args, Debug, Serialize)]
struct PiArgs {
    /// Comma-separated probabilities in descending order.
    #[arg(long, value_delimiter = ',', conflicts_with = "graph")]
    pi: Option<Vec<f64>>,
    #[command(flatten)]
    graph: GraphArgs,
}

impl PiArgs {
    fn sorted(&self) -> Result<Vec<f64>> {
        match &self.pi {
            Some(p) => Ok(p.clone()),
            None => self.graph.sorted_pi(),
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct BasketArgs {
    #[command(flatten)]
    pi: PiArgs,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: u64,
    /// Split rank `auto` or a 1-based rank in k+1..=n.
    #[arg(long, default_value = "auto")]
    j_star: String,
    /// Sum all pairwise terms instead of splitting the tail.
    #[arg(long)]
    plain: bool,
    /// Pairwise model for --plain.
    #[arg(long, value_enum, default_value_t = Model::Clt)]
    model: Model,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(Args, Debug, Serialize)]
struct ListArgs {
    #[command(flatten)]
    pi: PiArgs,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: u64,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mode {
    Sum,
    Beta,
}

#[derive(Args, Debug, Serialize)]
struct OrderArgs {
    /// P{X <= k}, the total probability of the top k.
    #[arg(long)]
    p_head: f64,
    #[arg(long)]
    s: u64,
    #[arg(long)]
    m: u64,
    #[arg(long, value_enum, default_value_t = Mode::Sum)]
    mode: Mode,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(Args, Debug, Serialize)]
struct HitArgs {
    #[arg(long)]
    pi_j: f64,
    #[arg(long)]
    r: u64,
    #[arg(long)]
    m: u64,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(Args, Debug, Serialize)]
struct MuArgs {
    /// Comma-separated tail probabilities.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pi_tail: Vec<f64>,
    /// Poisson mean number of walks.
    #[arg(long)]
    m: f64,
    #[arg(long)]
    y: u64,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(Args, Debug, Serialize)]
struct Em1Args {
    #[command(flatten)]
    pi: PiArgs,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    m: f64,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(Args, Debug, Serialize)]
struct RecommendArgs {
    #[arg(long)]
    a: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    pi_next: f64,
    /// Tail probabilities for the recheck (default: worst case).
    #[arg(long, value_delimiter = ',')]
    tail: Option<Vec<f64>>,
    #[command(flatten)]
    out: BoundsOut,
}

#[derive(Args, Debug, Serialize)]
struct ExperimentArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Comma-separated walk counts.
    #[arg(long, value_delimiter = ',', required = true)]
    m_grid: Vec<u64>,
    #[arg(long, default_value_t = 20)]
    repeats: usize,
    #[arg(long, value_enum, default_value_t = Method::EndPoint)]
    method: Method,
    #[arg(long, default_value_t = 0)]
    rng: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct DisambigArgs {
    /// JSON-lines corpus: {"id","host","text","person","outlinks"} per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 8)]
    related_k: usize,
    #[arg(long, default_value_t = 0.2)]
    damping: f64,
    #[arg(long, default_value_t = 10_000)]
    m: u64,
    #[arg(long, default_value_t = 0.2)]
    threshold: f64,
    #[arg(long, default_value_t = 1)]
    min_overlap: usize,
    #[arg(long, default_value_t = 0)]
    rng: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Marks an error as caused by the invocation (exit code 2).
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<pprtopk_core::Error>() {
            return if e.is_usage() { 2 } else { 1 };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let started = Instant::now();
    match cli.command {
        Command::Exact(a) => cmd_exact(a, started),
        Command::Mc(a) => cmd_mc(a, started),
        Command::Bounds(b) => cmd_bounds(b, started),
        Command::Experiment(a) => cmd_experiment(a, started),
        Command::Disambig(a) => cmd_disambig(a, started),
    }
}

fn cmd_exact(a: ExactArgs, started: Instant) -> Result<()> {
    let (g, cfg) = a.graph.load()?;
    let pi = exact::solve_ppr(&g, &cfg, a.tol, a.max_iters)?;
    let top = exact::top_k(&pi, a.k)?;
    let out = OutDir::create(&a.out)?;
    out.write_with("ppr.tsv", |w| pi.write_tsv(w))?;
    out.write_json("topk.json", &top)?;
    out.write_manifest("exact", &a, json!({ "seed_node": cfg.seed }), started)
}

fn cmd_mc(a: McArgs, started: Instant) -> Result<()> {
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let (g, cfg) = a.graph.load()?;
    let method = WalkMethod::from(a.method);
    let out = OutDir::create(&a.out)?;
    let outcome = if a.adaptive {
        let params = AdaptiveParams {
            k: a.k,
            gap_d: a.gap_d,
            batch: a.batch,
            m_cap: a.cap,
        };
        let res = mc::run_adaptive(&g, &cfg, method, params, a.rng)?;
        out.write_json(
            "adaptive.json",
            &json!({
                "stopped_at_m": res.stopped_at_m,
                "cap_reached": res.cap_reached,
                "params": params,
            }),
        )?;
        res.outcome
    } else {
        let m = a.m.ok_or_else(|| usage("either --m or --adaptive is required"))?;
        mc::run(&g, &cfg, method, m, a.rng)?
    };
    let est = mc::estimate(&outcome, &cfg);
    out.write_json("outcome.json", &outcome)?;
    out.write_json("estimate.json", &est)?;
    out.write_json("topk.json", &est.top_k(a.k))?;
    out.write_manifest(
        "mc",
        &a,
        json!({ "seed_node": cfg.seed, "rng_seed": a.rng }),
        started,
    )
}

fn emit<T: Serialize>(
    name: &str,
    out: &BoundsOut,
    params: &impl Serialize,
    value: &T,
    started: Instant,
) -> Result<()> {
    match &out.out {
        None => print_json(value),
        Some(dir) => {
            let out = OutDir::create(dir)?;
            out.write_json("bound.json", value)?;
            out.write_manifest(&format!("bounds {name}"), params, json!({}), started)
        }
    }
}

fn parse_j_star(s: &str) -> Result<JStar> {
    if s == "auto" {
        return Ok(JStar::Auto);
    }
    s.parse()
        .map(JStar::Fixed)
        .map_err(|_| usage(format!("--j-star must be `auto` or a rank, got `{s}`")))
}

fn cmd_bounds(cmd: BoundsCommand, started: Instant) -> Result<()> {
    match cmd {
        BoundsCommand::Variance(a) => {
            let (g, cfg) = a.graph.load()?;
            let r = bounds::variance_report(&g, &cfg, a.node, a.method.into(), a.m)?;
            emit("variance", &a.out, &a, &r, started)
        }
        BoundsCommand::Covariance(a) => {
            let (g, cfg) = a.graph.load()?;
            let r = bounds::covariance_entry(&g, &cfg, a.i, a.j)?;
            emit("covariance", &a.out, &a, &r, started)
        }
        BoundsCommand::Pairwise(a) => {
            let p = match a.model {
                Model::Exact => bounds::pairwise_misrank_exact(a.pi_i, a.pi_j, a.m)?,
                Model::Clt => bounds::pairwise_misrank_multinomial_clt(a.pi_i, a.pi_j, a.m)?,
            };
            let kind = match a.model {
                Model::Exact => bounds::BoundKind::PairwiseExactMultinomial,
                Model::Clt => bounds::BoundKind::PairwiseClt,
            };
            let r = bounds::MisrankBound {
                kind,
                value: p,
                unclipped: p,
                k: None,
                m: a.m,
                j_star: None,
            };
            emit("pairwise", &a.out, &a, &r, started)
        }
        BoundsCommand::Basket(a) => {
            let pi = a.pi.sorted()?;
            let r = if a.plain {
                bounds::bonferroni_basket_bound(&pi, a.k, a.m, a.model.into())?
            } else {
                bounds::basket_misrank_bound(&pi, a.k, a.m, parse_j_star(&a.j_star)?)?
            };
            emit("basket", &a.out, &a, &r, started)
        }
        BoundsCommand::List(a) => {
            let pi = a.pi.sorted()?;
            let r = bounds::list_misrank_bound(&pi, a.k, a.m)?;
            emit("list", &a.out, &a, &r, started)
        }
        BoundsCommand::OrderStats(a) => {
            let mode = match a.mode {
                Mode::Sum => OrderMode::Sum,
                Mode::Beta => OrderMode::Beta,
            };
            let p = bounds::order_statistic_cdf(a.p_head, a.s, a.m, mode)?;
            let r = json!({ "p_head": a.p_head, "s": a.s, "m": a.m, "mode": mode, "p_order": p });
            emit("order-stats", &a.out, &a, &r, started)
        }
        BoundsCommand::Hit(a) => {
            let p = bounds::hit_probability(a.pi_j, a.r, a.m)?;
            let r = json!({ "pi_j": a.pi_j, "r": a.r, "m": a.m, "p_hit": p });
            emit("hit", &a.out, &a, &r, started)
        }
        BoundsCommand::Mu(a) => {
            let mu = bounds::poisson_mu(&a.pi_tail, a.m, a.y)?;
            let r = json!({ "m": a.m, "y": a.y, "mu_y": mu });
            emit("mu", &a.out, &a, &r, started)
        }
        BoundsCommand::Em1(a) => {
            let pi = a.pi.sorted()?;
            let e = bounds::expected_m1(&pi, a.k, a.m)?;
            let r = json!({ "m": a.m, "k": a.k, "e_m1": e });
            emit("em1", &a.out, &a, &r, started)
        }
        BoundsCommand::RecommendM(a) => {
            let r = bounds::recommended_m(a.a, a.epsilon, a.alpha, a.k, a.pi_next, a.tail.as_deref())?;
            emit("recommend-m", &a.out, &a, &r, started)
        }
    }
}

fn cmd_experiment(a: ExperimentArgs, started: Instant) -> Result<()> {
    let (g, cfg) = a.graph.load()?;
    if a.m_grid.is_empty() {
        bail!(usage("--m-grid needs at least one value"));
    }
    let rows = topk::convergence_curve(&g, &cfg, a.method.into(), a.k, &a.m_grid, a.repeats, a.rng)?;
    let out = OutDir::create(&a.out)?;
    out.write_with("curve.csv", |w| topk::write_curve_csv(&rows, w))?;
    out.write_manifest(
        "experiment",
        &a,
        json!({ "seed_node": cfg.seed, "rng_seed": a.rng }),
        started,
    )
}

fn cmd_disambig(a: DisambigArgs, started: Instant) -> Result<()> {
    let corpus = Corpus::load(&a.corpus)?;
    let cfg = DisambigConfig {
        k: a.related_k,
        damping: a.damping,
        m: a.m,
        rng_seed: a.rng,
        min_overlap: a.min_overlap,
        threshold: a.threshold,
    };
    let result = disambig::disambiguate(&corpus, &cfg)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let out = OutDir::create(&a.out)?;
    out.write_json("clusters.json", &result)?;
    out.write_manifest("disambig", &a, json!({ "rng_seed": a.rng }), started)
}
