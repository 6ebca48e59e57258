use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use leadrig::aggregation::{condorcet_winner, mean_values, weak_condorcet_winners};
use leadrig::bribery::{bst_to_bribery, min_cost_shift_bribery, BriberyOutcome};
use leadrig::ingest::{self, best_per_namespace, build_matrix, extract_namespace, parse_scores, Format, PreprocessReport};
use leadrig::random::{restricted_caps, rounded_matrix};
use leadrig::robustness::{all_targets, brute_force_k, CapsPolicy, Config, Prepared, Robustness};
use leadrig::stats::{self, bootstrap_ci, ecdf, paired_rule_comparison, spearman_rho};
use leadrig::{BranchAndBound, GainCaps, Rule, ScoreMatrix, TieBreakPolicy};

use crate::args::{
    AnalysisArgs, BriberyArgs, CompareArgs, InputArgs, InputFormat, OracleArgs, ReportFormat, RobustnessArgs,
    SummaryArgs,
};
use crate::report::{
    compare_csv, robustness_csv, summary_csv, CompareReport, CondorcetReport, Fraction, RobustnessReport,
    RobustnessRow, RuleSummary, SummaryReport,
};
use crate::CliError;

/// Input matrix after parsing, preprocessing and optional deduplication.
pub fn load_matrix(args: &InputArgs) -> Result<(ScoreMatrix, PreprocessReport), CliError> {
    let path = args
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))?;
    let format = match args.format {
        Some(InputFormat::Csv) => Format::Csv,
        Some(InputFormat::Json) => Format::Json,
        None => Format::from_path(path),
    };
    let (matrix, mut report) = build_matrix(&parse_scores(path, format)?)?;
    if !args.dedup_namespaces {
        return Ok((matrix, report));
    }
    let deduped = best_per_namespace(&matrix);
    for id in matrix.model_ids() {
        if deduped.model_index(id).is_err() {
            report.dropped_models.push(id.clone());
        }
    }
    report.dropped_models.sort();
    report.n = deduped.n();
    Ok((deduped, report))
}

/// Per-task values from a `task,<column>` CSV, in matrix task order.
fn read_task_values(path: &Path, column: &str, matrix: &ScoreMatrix) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let headers = rdr.headers().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    if names != ["task", column] {
        return Err(CliError::Usage(format!("{}: expected header `task,{column}`", path.display())));
    }
    let mut values: BTreeMap<String, f64> = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::Usage(format!("{} line {line}: {e}", path.display())))?;
        let v: f64 = row[1]
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{} line {line}: {:?} is not a number", path.display(), &row[1])))?;
        if values.insert(row[0].trim().to_string(), v).is_some() {
            return Err(CliError::Usage(format!("{} line {line}: duplicate task {:?}", path.display(), &row[0])));
        }
    }
    matrix
        .task_ids()
        .iter()
        .map(|t| {
            values
                .get(t)
                .copied()
                .ok_or_else(|| CliError::Usage(format!("{}: no {column} for task {t:?}", path.display())))
        })
        .collect()
}

fn config(a: &AnalysisArgs) -> Config {
    Config {
        solver: BranchAndBound { node_budget: a.node_budget },
        tie_break: TieBreakPolicy::default(),
        oracle_limit: a.oracle_limit,
    }
}

/// Robustness rows, target-major, rules in the order given.
pub fn analyze(a: &AnalysisArgs) -> Result<RobustnessReport, CliError> {
    let (matrix, pre) = load_matrix(&a.input)?;
    analyze_matrix(a, &matrix, pre)
}

fn analyze_matrix(a: &AnalysisArgs, matrix: &ScoreMatrix, pre: PreprocessReport) -> Result<RobustnessReport, CliError> {
    if a.rules.is_empty() {
        return Err(CliError::Usage("--rules must name at least one rule".into()));
    }
    let cfg = config(a);
    let file_caps = a.caps.as_deref().map(|p| read_task_values(p, "cap", matrix)).transpose()?;
    let policy_for = |rule: Rule| match (&file_caps, rule) {
        (Some(c), r) if r != Rule::Majority => CapsPolicy::PerTask(c.clone()),
        _ => CapsPolicy::ScoreToOne,
    };
    let mut per_rule = Vec::with_capacity(a.rules.len());
    for &rule in &a.rules {
        let policy = policy_for(rule);
        let results = if a.target.eq_ignore_ascii_case("ALL") {
            all_targets(matrix, rule, &policy, &cfg)?
        } else {
            let t = matrix.model_index(&a.target)?;
            vec![Prepared::new(matrix).robustness(t, rule, &policy.caps_for(matrix, t)?, &cfg)?]
        };
        per_rule.push(results);
    }
    let targets = per_rule[0].len();
    let mut rows = Vec::with_capacity(targets * a.rules.len());
    for t in 0..targets {
        for results in &per_rule {
            rows.push(RobustnessRow::new(results[t].clone(), matrix.m()));
        }
    }
    Ok(RobustnessReport {
        n: matrix.n(),
        m: matrix.m(),
        caps: a.caps.as_ref().map_or_else(|| "score-to-1".to_string(), |p| p.display().to_string()),
        caps_rules: if file_caps.is_some() {
            a.rules.iter().copied().filter(|&r| r != Rule::Majority).collect()
        } else {
            Vec::new()
        },
        rules: a.rules.clone(),
        preprocessing: Some(pre),
        rows,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

pub fn cmd_robustness(args: &RobustnessArgs) -> Result<String, CliError> {
    let report = analyze(&args.analysis)?;
    Ok(match args.output.report_format {
        ReportFormat::Json => to_json(&report),
        ReportFormat::Csv => robustness_csv(&report),
    })
}

fn load_results(path: &Path) -> Result<RobustnessReport, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: not a robustness report: {e}", path.display())))
}

/// Results either from a saved report or computed from scratch, plus the
/// matrix when one was loaded.
fn results(a: &AnalysisArgs, saved: Option<&Path>) -> Result<(RobustnessReport, Option<ScoreMatrix>), CliError> {
    match saved {
        Some(p) => Ok((load_results(p)?, None)),
        None => {
            let (matrix, pre) = load_matrix(&a.input)?;
            Ok((analyze_matrix(a, &matrix, pre)?, Some(matrix)))
        }
    }
}

fn rows_for(report: &RobustnessReport, rule: Rule) -> Vec<&RobustnessRow> {
    report.rows.iter().filter(|r| r.rule == rule).collect()
}

fn median_of(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    stats::quantile_sorted(values, 0.5)
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn summarize(
    report: &RobustnessReport,
    matrix: Option<&ScoreMatrix>,
    seed: u64,
    resamples: usize,
    thresholds: &[usize],
) -> Result<SummaryReport, CliError> {
    let m = report.m;
    let mut rules = Vec::new();
    for &rule in &report.rules {
        let rows = rows_for(report, rule);
        if rows.is_empty() {
            continue;
        }
        let k: Vec<f64> = rows.iter().map(|r| r.k.as_f64()).collect();
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (r, &v) in rows.iter().zip(&k) {
            groups.entry(extract_namespace(&r.target)).or_default().push(v);
        }
        let median_k = median_of(&mut k.clone());
        let median_k_ci = bootstrap_ci("median_k", &groups, |v| median_of(&mut v.to_vec()), resamples, seed)?;
        let mut fractions = Vec::new();
        for &limit in thresholds {
            let stat = |v: &[f64]| v.iter().filter(|&&x| x <= limit as f64).count() as f64 / v.len() as f64;
            let ci = bootstrap_ci(&format!("fraction_k_le_{limit}"), &groups, stat, resamples, seed)?;
            fractions.push(Fraction { k: limit, fraction: stat(&k), ci });
        }
        let normalized: Vec<(usize, f64)> = rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.normalized.map(|v| (i, v)))
            .collect();
        let median_normalized = (!normalized.is_empty())
            .then(|| median_of(&mut normalized.iter().map(|p| p.1).collect::<Vec<_>>()));
        let spearman = match matrix {
            Some(mx) if normalized.len() >= 2 => {
                let means = mean_values(mx);
                let x: Vec<f64> = normalized
                    .iter()
                    .map(|&(i, _)| mx.model_index(&rows[i].target).map(|t| means[t]))
                    .collect::<Result<_, _>>()?;
                let y: Vec<f64> = normalized.iter().map(|p| p.1).collect();
                spearman_rho(&x, &y)?
            }
            _ => None,
        };
        let finite_k: Vec<f64> = k.iter().copied().filter(|x| x.is_finite()).collect();
        rules.push(RuleSummary {
            rule,
            targets: rows.len(),
            infeasible: k.len() - finite_k.len(),
            median_k: finite(median_k),
            median_k_pct: finite(median_k).map(|x| 100.0 * x / m as f64),
            median_k_ci,
            fractions,
            median_normalized,
            normalized_count: normalized.len(),
            spearman_mean_vs_normalized: spearman,
            ecdf: if finite_k.is_empty() { Vec::new() } else { ecdf(&finite_k)? },
        });
    }
    let condorcet = match matrix {
        Some(mx) => Some(CondorcetReport {
            strict_winner: condorcet_winner(mx, &TieBreakPolicy::default())?,
            weak_winners: weak_condorcet_winners(mx),
        }),
        None => None,
    };
    Ok(SummaryReport {
        n: report.n,
        m,
        seed,
        resamples,
        methods: stats::METHODS.to_string(),
        condorcet,
        rules,
    })
}

pub fn cmd_summary(args: &SummaryArgs) -> Result<String, CliError> {
    let (report, matrix) = results(&args.analysis, args.results.as_deref())?;
    let summary = summarize(&report, matrix.as_ref(), args.seed, args.resamples as usize, &args.k_thresholds)?;
    Ok(match args.output.report_format {
        ReportFormat::Json => to_json(&summary),
        ReportFormat::Csv => summary_csv(&summary),
    })
}

pub fn compare(report: &RobustnessReport) -> Result<CompareReport, CliError> {
    if report.rules.len() < 2 {
        return Err(CliError::Usage("comparison needs at least two rules".into()));
    }
    let names: Vec<String> = report.rules.iter().map(|r| r.to_string()).collect();
    let first = rows_for(report, report.rules[0]);
    let mut values = Vec::new();
    for &rule in &report.rules {
        let rows = rows_for(report, rule);
        if rows.len() != first.len() || rows.iter().zip(&first).any(|(a, b)| a.target != b.target) {
            return Err(CliError::Usage(format!("rule {rule} covers different targets")));
        }
        values.push(rows.iter().map(|r| r.k.finite()).collect());
    }
    Ok(CompareReport {
        m: report.m,
        methods: stats::METHODS.to_string(),
        pairs: paired_rule_comparison(&names, &values, report.m)?,
    })
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String, CliError> {
    let (report, _) = results(&args.analysis, args.results.as_deref())?;
    let cmp = compare(&report)?;
    Ok(match args.output.report_format {
        ReportFormat::Json => to_json(&cmp),
        ReportFormat::Csv => compare_csv(&cmp),
    })
}

#[derive(Debug, Serialize)]
struct BriberyReport {
    candidates: Vec<String>,
    /// One strict ranking per task, best first.
    votes: BTreeMap<String, Vec<String>>,
    preferred: String,
    costs: BTreeMap<String, f64>,
    budget: f64,
    cost: f64,
    bribed: Vec<String>,
    feasible: bool,
}

pub fn cmd_bribery(args: &BriberyArgs) -> Result<String, CliError> {
    let (matrix, _) = load_matrix(&args.input)?;
    let costs = match &args.costs {
        Some(p) => read_task_values(p, "cost", &matrix)?,
        None => vec![1.0; matrix.m()],
    };
    let inst = bst_to_bribery(&matrix, &args.target, costs, args.budget, &TieBreakPolicy::default())?;
    let BriberyOutcome { cost, bribed, within_budget } = min_cost_shift_bribery(&inst, args.oracle_limit)?;
    let tasks = matrix.task_ids();
    let report = BriberyReport {
        candidates: inst.profile.candidates().to_vec(),
        votes: (0..tasks.len())
            .map(|j| (tasks[j].clone(), inst.profile.vote_names(j).into_iter().map(String::from).collect()))
            .collect(),
        preferred: inst.preferred.clone(),
        costs: tasks.iter().cloned().zip(inst.costs.iter().copied()).collect(),
        budget: inst.budget,
        cost,
        bribed: bribed.iter().map(|&j| tasks[j].clone()).collect(),
        feasible: within_budget,
    };
    Ok(to_json(&report))
}

#[derive(Debug, Default, Serialize)]
pub struct RuleAgreement {
    pub checked: usize,
    pub agreed: usize,
}

/// Everything needed to replay a disagreement.
#[derive(Debug, Serialize)]
pub struct Mismatch {
    pub instance: usize,
    pub rule: Rule,
    pub target: String,
    /// The matrix in the JSON input format.
    pub scores: serde_json::Value,
    pub caps: Vec<f64>,
    pub closed_form: Robustness,
    pub oracle: Robustness,
}

#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub instances: usize,
    pub seed: u64,
    pub max_models: usize,
    pub max_tasks: usize,
    pub agreement: BTreeMap<Rule, RuleAgreement>,
    pub mismatches: Vec<Mismatch>,
}

/// Seeded instance stream checked against exhaustive search. Instance `i`
/// draws from its own ChaCha8 stream, so any prefix of the run is stable.
pub fn oracle_check(args: &OracleArgs) -> Result<OracleReport, CliError> {
    if args.max_tasks > args.oracle_limit {
        return Err(CliError::Usage(format!(
            "--max-tasks {} exceeds the oracle limit {}",
            args.max_tasks, args.oracle_limit
        )));
    }
    if args.max_models == 0 || args.max_tasks == 0 {
        return Err(CliError::Usage("--max-models and --max-tasks must be positive".into()));
    }
    let mut report = OracleReport {
        instances: args.instances,
        seed: args.seed,
        max_models: args.max_models,
        max_tasks: args.max_tasks,
        agreement: BTreeMap::new(),
        mismatches: Vec::new(),
    };
    let cfg = Config { oracle_limit: args.oracle_limit, ..Config::default() };
    for i in 0..args.instances {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        rng.set_stream(i as u64);
        let n = rng.gen_range(1..=args.max_models);
        let m = rng.gen_range(1..=args.max_tasks);
        let mx = rounded_matrix(&mut rng, n, m);
        let t = rng.gen_range(0..n);
        let restricted = args.restricted_every > 0 && i % args.restricted_every == args.restricted_every - 1;
        let (caps, rules): (GainCaps, &[Rule]) = if restricted {
            (restricted_caps(&mut rng, &mx, t), &[Rule::Mean, Rule::Median, Rule::WinRate])
        } else {
            (GainCaps::to_one(&mx, t), &Rule::ROBUSTNESS)
        };
        let prep = Prepared::new(&mx);
        let id = &mx.model_ids()[t];
        for &rule in rules {
            let fast = prep.robustness(t, rule, &caps, &cfg)?.k;
            let slow = brute_force_k(&mx, id, &caps, rule, &cfg.tie_break, args.oracle_limit)?.k;
            let entry = report.agreement.entry(rule).or_default();
            entry.checked += 1;
            if fast == slow {
                entry.agreed += 1;
            } else {
                report.mismatches.push(Mismatch {
                    instance: i,
                    rule,
                    target: id.clone(),
                    scores: ingest::to_json_value(&mx),
                    caps: caps.caps().to_vec(),
                    closed_form: fast,
                    oracle: slow,
                });
            }
        }
    }
    Ok(report)
}

pub fn cmd_oracle_check(args: &OracleArgs) -> Result<(String, usize), CliError> {
    let report = oracle_check(args)?;
    Ok((to_json(&report), report.mismatches.len()))
}
