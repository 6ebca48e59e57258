//! Leaderboard operators: arithmetic mean, upper median, mean win rate,
//! pairwise majority and Borda count.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{by_score_then_rank, strict_order, ScoreMatrix, TieBreakPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Mean,
    Median,
    #[serde(rename = "winrate")]
    WinRate,
    Majority,
    Borda,
}

impl Rule {
    /// The rules with closed-form or covering-program robustness.
    pub const ROBUSTNESS: [Rule; 4] = [Rule::Mean, Rule::Median, Rule::WinRate, Rule::Majority];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Mean => "mean",
            Rule::Median => "median",
            Rule::WinRate => "winrate",
            Rule::Majority => "majority",
            Rule::Borda => "borda",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mean" => Ok(Rule::Mean),
            "median" => Ok(Rule::Median),
            "winrate" | "win_rate" | "win-rate" => Ok(Rule::WinRate),
            "majority" => Ok(Rule::Majority),
            "borda" => Ok(Rule::Borda),
            other => Err(Error::input(format!("unknown rule {other:?}"))),
        }
    }
}

/// Sum of a row in task order. Shared by every mean comparison so that
/// aggregate values are computed the same way everywhere.
#[inline]
pub(crate) fn row_sum(row: &[f64]) -> f64 {
    row.iter().sum()
}

pub fn mean_values(matrix: &ScoreMatrix) -> Vec<f64> {
    let m = matrix.m() as f64;
    matrix.rows().map(|r| row_sum(r) / m).collect()
}

/// Index `h - 1` of the sorted row with `h = floor(m/2) + 1`.
#[inline]
pub(crate) fn upper_median_position(m: usize) -> usize {
    m / 2
}

/// The `h`-th smallest value, `h = floor(m/2) + 1`. Never averages.
pub fn upper_median(row: &[f64]) -> f64 {
    let mut v = row.to_vec();
    v.sort_by(f64::total_cmp);
    v[upper_median_position(v.len())]
}

pub fn median_values(matrix: &ScoreMatrix) -> Vec<f64> {
    matrix.rows().map(upper_median).collect()
}

/// Per-task sorted columns, for counting how many models a score weakly beats.
pub(crate) struct SortedColumns {
    cols: Vec<Vec<f64>>,
}

impl SortedColumns {
    pub(crate) fn new(matrix: &ScoreMatrix) -> Self {
        let cols = (0..matrix.m())
            .map(|j| {
                let mut c: Vec<f64> = matrix.column(j).collect();
                c.sort_by(f64::total_cmp);
                c
            })
            .collect();
        SortedColumns { cols }
    }

    /// Number of original scores on `task` that are `<= x`.
    #[inline]
    pub(crate) fn count_le(&self, task: usize, x: f64) -> usize {
        self.cols[task].partition_point(|&v| v <= x)
    }
}

/// Win counts `n * w_D(A)` as integers, row-major `n x m`. Each count
/// includes the self-comparison.
pub(crate) fn win_count_matrix(matrix: &ScoreMatrix, cols: &SortedColumns) -> Vec<u32> {
    let (n, m) = (matrix.n(), matrix.m());
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            out.push(cols.count_le(j, matrix.score(i, j)) as u32);
        }
    }
    out
}

/// Per-task and mean win rates.
#[derive(Clone, Debug, PartialEq)]
pub struct WinRates {
    n: usize,
    m: usize,
    counts: Vec<u32>,
    /// Mean win rate `w(A)` per model.
    pub mean: Vec<f64>,
}

impl WinRates {
    /// `w_D(A)` for model `model` on task `task`.
    pub fn task_rate(&self, model: usize, task: usize) -> f64 {
        self.counts[model * self.m + task] as f64 / self.n as f64
    }

    /// `n * m * w(A)` as an exact integer.
    pub fn total_count(&self, model: usize) -> u64 {
        self.counts[model * self.m..(model + 1) * self.m].iter().map(|&c| c as u64).sum()
    }
}

pub fn win_rates(matrix: &ScoreMatrix) -> WinRates {
    let cols = SortedColumns::new(matrix);
    let counts = win_count_matrix(matrix, &cols);
    let (n, m) = (matrix.n(), matrix.m());
    let mean = counts
        .chunks_exact(m)
        .map(|r| r.iter().map(|&c| c as f64 / n as f64).sum::<f64>() / m as f64)
        .collect();
    WinRates { n, m, counts, mean }
}

/// Weak pairwise majority counts `M(A, A')`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MajorityMatrix {
    n: usize,
    counts: Vec<u32>,
    /// `ceil(m / 2)`.
    pub threshold: usize,
}

impl MajorityMatrix {
    pub fn count(&self, a: usize, b: usize) -> usize {
        self.counts[a * self.n + b] as usize
    }

    /// `a` weakly beats `b` on at least `threshold` tasks.
    pub fn weakly_beats(&self, a: usize, b: usize) -> bool {
        self.count(a, b) >= self.threshold
    }

    /// Models that weakly beat every other model.
    pub fn weak_condorcet_winners(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&a| (0..self.n).all(|b| a == b || self.weakly_beats(a, b)))
            .collect()
    }
}

pub fn majority_threshold(m: usize) -> usize {
    m.div_ceil(2)
}

pub fn majority_matrix(matrix: &ScoreMatrix) -> MajorityMatrix {
    let n = matrix.n();
    let mut counts = vec![0u32; n * n];
    for row_a in 0..n {
        for row_b in 0..n {
            let ra = matrix.row(row_a);
            let rb = matrix.row(row_b);
            counts[row_a * n + row_b] = ra.iter().zip(rb).filter(|(x, y)| x >= y).count() as u32;
        }
    }
    MajorityMatrix { n, counts, threshold: majority_threshold(matrix.m()) }
}

/// Strict per-task positions: `pos[j * n + i]` is model `i`'s 0-based place on task `j`.
pub(crate) fn strict_positions(matrix: &ScoreMatrix, ranks: &[usize]) -> Vec<usize> {
    let n = matrix.n();
    let mut pos = vec![0; n * matrix.m()];
    for j in 0..matrix.m() {
        for (p, i) in strict_order(matrix, j, ranks).into_iter().enumerate() {
            pos[j * n + i] = p;
        }
    }
    pos
}

/// Borda score per model: place `p` on a task earns `n - 1 - p` points.
pub fn borda_scores(matrix: &ScoreMatrix, policy: &TieBreakPolicy) -> Result<Vec<u64>> {
    let ranks = policy.ranks(matrix.model_ids())?;
    let n = matrix.n();
    let pos = strict_positions(matrix, &ranks);
    let mut scores = vec![0u64; n];
    for j in 0..matrix.m() {
        for (i, s) in scores.iter_mut().enumerate() {
            *s += (n - 1 - pos[j * n + i]) as u64;
        }
    }
    Ok(scores)
}

/// Strict Condorcet winner over tie-broken rankings: beats every other model
/// on strictly more tasks than it loses.
pub fn condorcet_winner(matrix: &ScoreMatrix, policy: &TieBreakPolicy) -> Result<Option<String>> {
    let ranks = policy.ranks(matrix.model_ids())?;
    let n = matrix.n();
    let pos = strict_positions(matrix, &ranks);
    let m = matrix.m();
    // tasks on which a is placed above b
    let above = |a: usize, b: usize| (0..m).filter(|&j| pos[j * n + a] < pos[j * n + b]).count();
    let beats = |a: usize, b: usize| 2 * above(a, b) > m;

    // the only possible winner survives a single elimination pass
    let mut champion = 0;
    for challenger in 1..n {
        if !beats(champion, challenger) {
            champion = challenger;
        }
    }
    let ok = (0..n).all(|b| b == champion || beats(champion, b));
    Ok(ok.then(|| matrix.model_ids()[champion].clone()))
}

/// Models that are weak Condorcet winners: `M(A, A') >= ceil(m/2)` for all `A'`.
pub fn weak_condorcet_winners(matrix: &ScoreMatrix) -> Vec<String> {
    majority_matrix(matrix)
        .weak_condorcet_winners()
        .into_iter()
        .map(|i| matrix.model_ids()[i].clone())
        .collect()
}

/// An aggregate ordering of models, best first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub rule: Rule,
    pub order: Vec<String>,
    /// Aggregate value of `order[i]`. `None` for [`Rule::Majority`], which
    /// only yields a relation.
    pub values: Option<Vec<f64>>,
}

pub fn leaderboard(matrix: &ScoreMatrix, rule: Rule, policy: &TieBreakPolicy) -> Result<Leaderboard> {
    let ranks = policy.ranks(matrix.model_ids())?;
    let n = matrix.n();
    let (keys, values): (Vec<f64>, Option<Vec<f64>>) = match rule {
        Rule::Mean => {
            let v = mean_values(matrix);
            (v.clone(), Some(v))
        }
        Rule::Median => {
            let v = median_values(matrix);
            (v.clone(), Some(v))
        }
        Rule::WinRate => {
            let w = win_rates(matrix);
            // order by the exact integer totals; values are the float rates
            ((0..n).map(|i| w.total_count(i) as f64).collect(), Some(w.mean))
        }
        Rule::Borda => {
            let b: Vec<f64> = borda_scores(matrix, policy)?.into_iter().map(|x| x as f64).collect();
            (b.clone(), Some(b))
        }
        Rule::Majority => {
            let mm = majority_matrix(matrix);
            let copeland = (0..n)
                .map(|a| (0..n).filter(|&b| b != a && mm.weakly_beats(a, b)).count() as f64)
                .collect();
            (copeland, None)
        }
    };
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| by_score_then_rank(keys[a], keys[b], ranks[a], ranks[b]));
    Ok(Leaderboard {
        rule,
        order: idx.iter().map(|&i| matrix.model_ids()[i].clone()).collect(),
        values: values.map(|v| idx.iter().map(|&i| v[i]).collect()),
    })
}
