use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "matchlab",
    version,
    about = "Online bipartite matching: Ranking, Balance, adversaries and exact counts"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "MATCHLAB_THREADS")]
    #[serde(skip)]
    pub threads: Option<usize>,

    /// Force exact rational arithmetic for fractional algorithms.
    #[arg(long, global = true, conflicts_with = "float")]
    pub exact: bool,

    /// Force binary64 arithmetic for fractional algorithms.
    #[arg(long, global = true)]
    pub float: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Counting tables: the d(n,i) triangle, a(n), or n!, d(n), a(n) side by side.
    Tables(TablesArgs),
    /// Exact expected Ranking size a(n)/n! on MonotoneG(n) and its error term.
    Rho(RhoArgs),
    /// Ranking: exact enumeration or Monte Carlo.
    #[command(subcommand)]
    Ranking(RankingCmd),
    /// Balance: water-filling runs, closed form, averaging process.
    #[command(subcommand)]
    Balance(BalanceCmd),
    /// Price-based analysis of Ranking.
    #[command(subcommand)]
    Pricing(PricingCmd),
    /// Adaptive adversary against a deterministic greedy algorithm.
    Adversary(AdversaryArgs),
    /// Run the verification battery; exits nonzero on any failure.
    Verify(VerifyArgs),
    /// Export graph fixtures.
    #[command(subcommand)]
    Graph(GraphCmd),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TableKind {
    /// d(n, i), 1 <= i <= n.
    D,
    /// a(n) with its row a(n, 1..n).
    A,
    /// n!, d(n), a(n).
    Sequences,
}

#[derive(Debug, Args, Serialize)]
pub struct TablesArgs {
    #[arg(value_enum)]
    pub kind: TableKind,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RhoArgs {
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    /// Number of trials.
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct GraphSource {
    /// MonotoneG size (ignored with --graph).
    #[arg(long, required_unless_present = "graph")]
    pub n: Option<usize>,
    /// Graph fixture: {"n": K, "adjacency": [[1-based neighbors], ...]}.
    #[arg(long)]
    pub graph: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankingCmd {
    /// Enumerate all n! rankings of MonotoneG(n) (n <= 10).
    Exact {
        #[arg(long)]
        n: usize,
    },
    /// Monte Carlo estimate on MonotoneG(n) or a fixture graph.
    Mc {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        mc: McArgs,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalanceCmd {
    /// Run Balance and validate the fractional matching.
    Run {
        #[command(flatten)]
        source: GraphSource,
        /// Include every water-filling step.
        #[arg(long)]
        trace: bool,
    },
    /// Closed-form size on MonotoneG(n).
    ClosedForm {
        #[arg(long)]
        n: usize,
    },
    /// Averaging process on a graph with its perfect matching on the diagonal.
    Averaging {
        #[command(flatten)]
        source: GraphSource,
        /// Relabel by a maximum matching and strip backward edges first.
        #[arg(long)]
        normalize: bool,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PricingCmd {
    /// Per-item revenue plus utility estimates and the mean price.
    Mc {
        #[command(flatten)]
        source: GraphSource,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Slackness against removal of the last item on MonotoneG(n).
    Slackness {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Buyer j's utility with its own item removed vs. the last item removed.
    Removal {
        #[arg(long)]
        n: usize,
        /// 1-based buyer index.
        #[arg(long)]
        j: usize,
        #[command(flatten)]
        mc: McArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Lowest,
    Highest,
    LowestDegree,
    RankingFixedPi,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lowest => "lowest",
            Algorithm::Highest => "highest",
            Algorithm::LowestDegree => "lowest-degree",
            Algorithm::RankingFixedPi => "ranking-fixed-pi",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct AdversaryArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = Algorithm::Lowest)]
    pub alg: Algorithm,
    /// Seed for the permutation of ranking-fixed-pi.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    /// Largest n for exact enumerations; smaller values also shrink the
    /// Monte Carlo instances.
    #[arg(long, default_value_t = 10)]
    pub n_max: usize,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// d(n, i) triangle fixture replacing the computed one: {"rows": [["1"], ["1","2"], ...]}.
    #[arg(long)]
    pub triangle: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphCmd {
    /// MonotoneG(n).
    Monotone {
        #[arg(long)]
        n: usize,
    },
    /// A draw from the hidden-permutation distribution; includes tau.
    Dn {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}
