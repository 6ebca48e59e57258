//! Report types and their JSON/CSV writers.

use serde::{Deserialize, Serialize};

use leadrig::ingest::PreprocessReport;
use leadrig::robustness::{Deficit, Robustness, RobustnessResult};
use leadrig::stats::{BootstrapSummary, PairedTestResult};
use leadrig::Rule;

/// One target under one rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessRow {
    pub target: String,
    pub rule: Rule,
    pub k: Robustness,
    /// `k / m`, absent when infeasible.
    pub k_fraction: Option<f64>,
    pub normalized: Option<f64>,
    pub witness: Vec<String>,
    pub deficit: Option<Deficit>,
    pub lower_bound: Option<Robustness>,
    pub feasible: bool,
}

impl RobustnessRow {
    pub fn new(r: RobustnessResult, m: usize) -> Self {
        RobustnessRow {
            k_fraction: r.k.finite().map(|k| k as f64 / m as f64),
            feasible: r.k.is_finite(),
            target: r.target,
            rule: r.rule,
            k: r.k,
            normalized: r.normalized,
            witness: r.witness,
            deficit: r.deficit,
            lower_bound: r.lower_bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub n: usize,
    pub m: usize,
    /// `score-to-1`, or the caps file path.
    pub caps: String,
    /// Rules the caps file applies to; majority always uses score-to-1.
    pub caps_rules: Vec<Rule>,
    pub rules: Vec<Rule>,
    pub preprocessing: Option<PreprocessReport>,
    pub rows: Vec<RobustnessRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fraction {
    pub k: usize,
    pub fraction: f64,
    pub ci: BootstrapSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub rule: Rule,
    pub targets: usize,
    pub infeasible: usize,
    /// Median `k`; absent when infeasible targets push it to infinity.
    pub median_k: Option<f64>,
    /// Median `k` as a percentage of `m`.
    pub median_k_pct: Option<f64>,
    pub median_k_ci: BootstrapSummary,
    pub fractions: Vec<Fraction>,
    pub median_normalized: Option<f64>,
    /// Targets with a defined normalized value.
    pub normalized_count: usize,
    /// Spearman correlation between mean score and normalized robustness.
    pub spearman_mean_vs_normalized: Option<f64>,
    /// ECDF of finite `k` values, as `(k, F(k))` steps.
    pub ecdf: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondorcetReport {
    /// Model beating every other model on more tasks than it loses, after tie-breaking.
    pub strict_winner: Option<String>,
    /// Models weakly beating every other model on at least half the tasks.
    pub weak_winners: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryReport {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub resamples: usize,
    pub methods: String,
    pub condorcet: Option<CondorcetReport>,
    pub rules: Vec<RuleSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub m: usize,
    pub methods: String,
    pub pairs: Vec<PairedTestResult>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("UTF-8 ids")
}

pub fn robustness_csv(report: &RobustnessReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["target", "rule", "k", "k_fraction", "normalized", "witness", "deficit", "lower_bound", "feasible"])
        .expect("in-memory CSV");
    for r in &report.rows {
        w.write_record([
            r.target.clone(),
            r.rule.to_string(),
            r.k.to_string(),
            opt(r.k_fraction),
            opt(r.normalized),
            r.witness.join(";"),
            opt(r.deficit.as_ref().map(Deficit::value)),
            r.lower_bound.map_or_else(String::new, |b| b.to_string()),
            r.feasible.to_string(),
        ])
        .expect("in-memory CSV");
    }
    finish(w)
}

pub fn summary_csv(report: &SummaryReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rule", "statistic", "threshold", "value", "lower", "upper"]).expect("in-memory CSV");
    let mut row = |rule: Rule, stat: &str, threshold: String, value: Option<f64>, ci: Option<&BootstrapSummary>| {
        w.write_record([
            rule.to_string(),
            stat.to_string(),
            threshold,
            opt(value),
            opt(ci.map(|c| c.lower)),
            opt(ci.map(|c| c.upper)),
        ])
        .expect("in-memory CSV");
    };
    for s in &report.rules {
        row(s.rule, "median_k", String::new(), s.median_k, Some(&s.median_k_ci));
        row(s.rule, "median_k_pct", String::new(), s.median_k_pct, None);
        for f in &s.fractions {
            row(s.rule, "fraction_le", f.k.to_string(), Some(f.fraction), Some(&f.ci));
        }
        row(s.rule, "median_normalized", String::new(), s.median_normalized, None);
        row(s.rule, "spearman_mean_vs_normalized", String::new(), s.spearman_mean_vs_normalized, None);
        for &(x, f) in &s.ecdf {
            row(s.rule, "ecdf", x.to_string(), Some(f), None);
        }
    }
    finish(w)
}

pub fn compare_csv(report: &CompareReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "first",
        "second",
        "n",
        "excluded",
        "median_difference",
        "median_difference_pp",
        "p_value",
        "p_adjusted",
        "degenerate",
    ])
    .expect("in-memory CSV");
    for p in &report.pairs {
        w.write_record([
            p.first.clone(),
            p.second.clone(),
            p.n.to_string(),
            p.excluded.to_string(),
            opt(p.median_difference),
            opt(p.median_difference_pp),
            p.p_value.to_string(),
            p.p_adjusted.to_string(),
            p.degenerate.to_string(),
        ])
        .expect("in-memory CSV");
    }
    finish(w)
}
