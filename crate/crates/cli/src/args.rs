use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use leadrig::Rule;

#[derive(Debug, Parser)]
#[command(name = "leadrig", version, about = "Exact robustness of leaderboard aggregation rules to targeted training")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimum number of tasks each target must train on to reach the top.
    Robustness(RobustnessArgs),
    /// Medians, threshold fractions, bootstrap intervals and ECDF points per rule.
    Summary(SummaryArgs),
    /// Paired Wilcoxon comparisons of robustness between rules.
    Compare(CompareArgs),
    /// Minimum-cost shift bribery for one target under Borda.
    Bribery(BriberyArgs),
    /// Cross-check the closed forms against exhaustive search on random instances.
    OracleCheck(OracleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Score file (long or wide CSV, or JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Keep only the best-mean model of each namespace.
    #[arg(long)]
    pub dedup_namespaces: bool,
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated rules: mean, median, winrate, majority, borda.
    #[arg(long, value_delimiter = ',', default_value = "mean,median,winrate,majority", value_parser = parse_rule)]
    pub rules: Vec<Rule>,
    /// Target model id, or ALL.
    #[arg(long, default_value = "ALL")]
    pub target: String,
    /// CSV of per-task gain caps with header `task,cap`; default lifts scores to 1.
    #[arg(long)]
    pub caps: Option<PathBuf>,
    /// Largest task count the exhaustive oracle accepts.
    #[arg(long, default_value_t = leadrig::robustness::DEFAULT_ORACLE_LIMIT)]
    pub oracle_limit: usize,
    /// Node budget of the covering search, per target.
    #[arg(long, default_value_t = leadrig::covering::DEFAULT_NODE_BUDGET)]
    pub node_budget: u64,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Report path; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub report_format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Summarize a saved JSON robustness report instead of a score file.
    #[arg(long, conflicts_with = "input")]
    pub results: Option<PathBuf>,
    /// Bootstrap seed.
    #[arg(long)]
    pub seed: u64,
    /// Bootstrap resamples.
    #[arg(long, default_value_t = 10_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub resamples: u64,
    /// Thresholds K for the fraction of targets with k <= K.
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    pub k_thresholds: Vec<usize>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Compare rules from a saved JSON robustness report.
    #[arg(long, conflicts_with = "input")]
    pub results: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BriberyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Preferred candidate (the target model).
    #[arg(long)]
    pub target: String,
    /// CSV of per-task voter prices with header `task,cost`; unit prices when omitted.
    #[arg(long)]
    pub costs: Option<PathBuf>,
    #[arg(long)]
    pub budget: f64,
    /// Largest voter count the exhaustive search accepts.
    #[arg(long, default_value_t = leadrig::bribery::DEFAULT_VOTER_LIMIT)]
    pub oracle_limit: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Number of random instances.
    #[arg(long, default_value_t = 200)]
    pub instances: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub max_models: usize,
    #[arg(long, default_value_t = 12)]
    pub max_tasks: usize,
    /// Largest task count the exhaustive oracle accepts.
    #[arg(long, default_value_t = leadrig::robustness::DEFAULT_ORACLE_LIMIT)]
    pub oracle_limit: usize,
    /// Every n-th instance uses random restricted caps for mean, median and win rate.
    #[arg(long, default_value_t = 4)]
    pub restricted_every: usize,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_rule(s: &str) -> Result<Rule, String> {
    s.parse().map_err(|e: leadrig::Error| e.to_string())
}
