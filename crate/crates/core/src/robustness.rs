//! Instance-level robustness: the minimum number of tasks a target model must
//! be trained on to become a top element of the leaderboard.
//!
//! * Mean: sort the gain caps in decreasing order and take the shortest
//!   prefix whose sum covers `m * Δ_mean`.
//! * Median: count the tasks on which the target can be pushed from below
//!   the best competing upper median `τ` to at least `τ`.
//! * Mean win rate: a binary covering program over tasks, one constraint
//!   per competitor, with the pairwise gains `q_D(A)` as weights.
//! * Pairwise majority: a unit-weight covering program over the tasks each
//!   competitor strictly wins, assuming training tops the task ranking.
//!
//! Win-rate quantities are handled as exact integers: `n * q_D(A)` and
//! `n * m * Δ_win` are whole numbers, so the covering programs built here
//! carry integer-valued weights and thresholds.
//!
//! "Top element" is weak throughout: the target's aggregate must be at
//! least that of every competitor before any tie-breaking.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::aggregation::{
    self, majority_threshold, row_sum, upper_median, upper_median_position, Rule, SortedColumns,
};
use crate::covering::{self, meets, BranchAndBound, CoveringProgram};
use crate::error::{Error, Result};
use crate::matrix::{train_on, GainCaps, ScoreMatrix, TieBreakPolicy};

/// Default cap on `m` for the exhaustive oracle.
pub const DEFAULT_ORACLE_LIMIT: usize = 20;

/// A robustness value: a number of tasks, or no training set works.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Robustness {
    Finite(usize),
    Infeasible,
}

impl Robustness {
    pub fn finite(self) -> Option<usize> {
        match self {
            Robustness::Finite(k) => Some(k),
            Robustness::Infeasible => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Robustness::Finite(_))
    }

    /// As a float, with `+inf` for infeasible.
    pub fn as_f64(self) -> f64 {
        self.finite().map_or(f64::INFINITY, |k| k as f64)
    }
}

impl From<Option<usize>> for Robustness {
    fn from(k: Option<usize>) -> Self {
        k.map_or(Robustness::Infeasible, Robustness::Finite)
    }
}

impl fmt::Display for Robustness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Robustness::Finite(k) => write!(f, "{k}"),
            Robustness::Infeasible => f.write_str("inf"),
        }
    }
}

// JSON form: a plain integer, or the string "inf".
impl Serialize for Robustness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Robustness::Finite(k) => s.serialize_u64(*k as u64),
            Robustness::Infeasible => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Robustness {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(k) => Ok(Robustness::Finite(k as usize)),
            Raw::Str(s) if s == "inf" => Ok(Robustness::Infeasible),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("bad robustness value {s:?}"))),
        }
    }
}

/// The deficit the training has to close, per rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Deficit {
    /// `Δ_mean`, in score units.
    Mean { delta: f64 },
    /// `Δ_median` with threshold `τ` (absent without competitors), `N_τ`, `C_τ`.
    Median {
        delta: usize,
        tau: Option<f64>,
        n_tau: usize,
        c_tau: usize,
    },
    /// Largest `Δ_win` over competitors, who attains it, and how many
    /// competitors have a positive deficit.
    #[serde(rename = "winrate")]
    WinRate {
        max_delta: f64,
        binding: Option<String>,
        positive: usize,
    },
    /// Largest `Δ_maj` over competitors, likewise.
    Majority {
        max_delta: usize,
        binding: Option<String>,
        positive: usize,
    },
}

impl Deficit {
    /// Scalar summary for tabular reports.
    pub fn value(&self) -> f64 {
        match self {
            Deficit::Mean { delta } => *delta,
            Deficit::Median { delta, .. } => *delta as f64,
            Deficit::WinRate { max_delta, .. } => *max_delta,
            Deficit::Majority { max_delta, .. } => *max_delta as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessResult {
    pub rule: Rule,
    pub target: String,
    pub k: Robustness,
    /// A minimizing task set, empty when `k` is 0 or infeasible.
    pub witness: Vec<String>,
    /// Absent for oracle results.
    pub deficit: Option<Deficit>,
    /// `k` over the rule's reference value, when defined.
    pub normalized: Option<f64>,
    /// Largest pairwise robustness, for the covering-program rules.
    pub lower_bound: Option<Robustness>,
}

/// Per-matrix quantities shared by every target.
pub struct Prepared<'a> {
    matrix: &'a ScoreMatrix,
    sums: Vec<f64>,
    medians: Vec<f64>,
    cols: SortedColumns,
    /// `n * m * w(A)` per model.
    win_totals: Vec<u64>,
}

impl<'a> Prepared<'a> {
    pub fn new(matrix: &'a ScoreMatrix) -> Self {
        let cols = SortedColumns::new(matrix);
        let counts = aggregation::win_count_matrix(matrix, &cols);
        let win_totals = counts.chunks_exact(matrix.m()).map(|r| r.iter().map(|&c| c as u64).sum()).collect();
        Prepared {
            matrix,
            sums: matrix.rows().map(row_sum).collect(),
            medians: matrix.rows().map(upper_median).collect(),
            cols,
            win_totals,
        }
    }

    pub fn matrix(&self) -> &'a ScoreMatrix {
        self.matrix
    }

    fn competitors(&self, target: usize) -> impl Iterator<Item = usize> {
        (0..self.matrix.n()).filter(move |&a| a != target)
    }

    fn task_names(&self, tasks: &[usize]) -> Vec<String> {
        tasks.iter().map(|&j| self.matrix.task_ids()[j].clone()).collect()
    }

    /// `m * Δ_mean`, as a difference of row sums; may be negative before clamping.
    fn mean_gap(&self, target: usize) -> f64 {
        let best = self.competitors(target).map(|a| self.sums[a]).fold(f64::NEG_INFINITY, f64::max);
        if best.is_finite() {
            best - self.sums[target]
        } else {
            0.0
        }
    }

    fn mean(&self, target: usize, caps: &GainCaps) -> RobustnessResult {
        let m = self.matrix.m();
        let gap = self.mean_gap(target).max(0.0);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| caps.caps()[b].total_cmp(&caps.caps()[a]).then(a.cmp(&b)));
        let mut acc = 0.0;
        let mut k = if meets(0.0, gap) { Some(0) } else { None };
        if k.is_none() {
            for (i, &j) in order.iter().enumerate() {
                acc += caps.caps()[j];
                if meets(acc, gap) {
                    k = Some(i + 1);
                    break;
                }
            }
        }
        let witness = k.map_or_else(Vec::new, |k| self.task_names(&order[..k]));
        let mut out = self.result(Rule::Mean, target, k.into(), witness);
        out.deficit = Some(Deficit::Mean { delta: gap / m as f64 });
        out.normalized = k.and_then(|k| self.mean_normalized(target, k));
        out
    }

    fn mean_normalized(&self, target: usize, k: usize) -> Option<f64> {
        if k == 0 {
            return Some(0.0);
        }
        let m = self.matrix.m() as f64;
        let room = m - self.sums[target];
        if room <= 0.0 {
            return None;
        }
        let denom = ceil_tol(self.mean_gap(target) * m / room).min(m);
        (denom > 0.0).then(|| k as f64 / denom)
    }

    fn tau(&self, target: usize) -> Option<f64> {
        self.competitors(target).map(|a| self.medians[a]).reduce(f64::max)
    }

    fn median(&self, target: usize, caps: &GainCaps) -> RobustnessResult {
        let m = self.matrix.m();
        let Some(tau) = self.tau(target) else {
            let mut out = self.result(Rule::Median, target, Robustness::Finite(0), vec![]);
            out.deficit = Some(Deficit::Median { delta: 0, tau: None, n_tau: m, c_tau: 0 });
            out.normalized = Some(0.0);
            return out;
        };
        let row = self.matrix.row(target);
        let n_tau = row.iter().filter(|&&s| s >= tau).count();
        let mut crossable: Vec<usize> = (0..m)
            .filter(|&j| row[j] < tau && tau <= caps.trained(self.matrix, target, j))
            .collect();
        crossable.sort_by(|&a, &b| caps.caps()[b].total_cmp(&caps.caps()[a]).then(a.cmp(&b)));
        let need = m - upper_median_position(m);
        let delta = need.saturating_sub(n_tau);
        let c_tau = crossable.len();
        let k = (c_tau >= delta).then_some(delta);
        let witness = k.map_or_else(Vec::new, |k| self.task_names(&crossable[..k]));
        let mut out = self.result(Rule::Median, target, k.into(), witness);
        out.deficit = Some(Deficit::Median { delta, tau: Some(tau), n_tau, c_tau });
        out.normalized = k.and_then(|k| match (k, c_tau) {
            (0, _) => Some(0.0),
            (_, 0) => None,
            (k, c) => Some(k as f64 / c as f64),
        });
        out
    }

    /// `n * q_D(A)` for every model `A` (row of zeros for the target).
    fn gain_counts(&self, target: usize, caps: &GainCaps) -> Vec<Vec<u32>> {
        let (n, m) = (self.matrix.n(), self.matrix.m());
        let before: Vec<f64> = self.matrix.row(target).to_vec();
        let after: Vec<f64> = (0..m).map(|j| caps.trained(self.matrix, target, j)).collect();
        // models newly weakly beaten by the target on each task
        let lift: Vec<u32> = (0..m)
            .map(|j| (self.cols.count_le(j, after[j]) - self.cols.count_le(j, before[j])) as u32)
            .collect();
        let mut out = vec![vec![0u32; m]; n];
        for a in self.competitors(target) {
            let row = self.matrix.row(a);
            for j in 0..m {
                // the competitor stops weakly beating the target
                let lost = (before[j] <= row[j] && row[j] < after[j]) as u32;
                out[a][j] = lift[j] + lost;
            }
        }
        out
    }

    /// `n * m * d_win(A)`, positive when `A` is ahead of the target.
    fn win_gap(&self, target: usize, competitor: usize) -> i64 {
        self.win_totals[competitor] as i64 - self.win_totals[target] as i64
    }

    fn win_pairwise(&self, target: usize, competitor: usize, caps: &GainCaps) -> RobustnessResult {
        let gains = &self.gain_counts(target, caps)[competitor];
        let gap = self.win_gap(target, competitor).max(0) as u64;
        let m = self.matrix.m();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| gains[b].cmp(&gains[a]).then(a.cmp(&b)));
        let mut acc = 0u64;
        let mut k = (gap == 0).then_some(0);
        if k.is_none() {
            for (i, &j) in order.iter().enumerate() {
                acc += gains[j] as u64;
                if acc >= gap {
                    k = Some(i + 1);
                    break;
                }
            }
        }
        let witness = k.map_or_else(Vec::new, |k| self.task_names(&order[..k]));
        let mut out = self.result(Rule::WinRate, target, k.into(), witness);
        out.deficit = Some(Deficit::WinRate {
            max_delta: self.win_delta(gap),
            binding: (gap > 0).then(|| self.matrix.model_ids()[competitor].clone()),
            positive: (gap > 0) as usize,
        });
        out
    }

    fn win_delta(&self, gap: u64) -> f64 {
        gap as f64 / (self.matrix.n() * self.matrix.m()) as f64
    }

    fn win_program(&self, target: usize, caps: &GainCaps) -> (CoveringProgram, Vec<Vec<u32>>) {
        let gains = self.gain_counts(target, caps);
        let mut names = Vec::new();
        let mut weights = Vec::new();
        let mut thresholds = Vec::new();
        // competitors already weakly behind contribute only zero thresholds
        for a in self.competitors(target) {
            let gap = self.win_gap(target, a);
            if gap > 0 {
                names.push(self.matrix.model_ids()[a].clone());
                weights.push(gains[a].iter().map(|&g| g as f64).collect());
                thresholds.push(gap as f64);
            }
        }
        let program = CoveringProgram::new(self.matrix.task_ids().to_vec(), names, weights, thresholds)
            .expect("gain counts and gaps are nonnegative");
        (program, gains)
    }

    fn win_global(&self, target: usize, caps: &GainCaps, solver: &BranchAndBound) -> Result<RobustnessResult> {
        let (program, gains) = self.win_program(target, caps);
        let witness = solver.solve(&program)?;
        let k = witness.as_ref().map(Vec::len);
        let mut out = self.result(Rule::WinRate, target, k.into(), self.task_names(&witness.unwrap_or_default()));
        out.lower_bound = Some(covering::pairwise_lower_bound(&program).into());

        // binding competitor: largest gap, first in model order
        let mut binding: Option<(usize, i64)> = None;
        for a in self.competitors(target) {
            let gap = self.win_gap(target, a);
            if gap > 0 && binding.is_none_or(|(_, g)| gap > g) {
                binding = Some((a, gap));
            }
        }
        out.deficit = Some(Deficit::WinRate {
            max_delta: self.win_delta(binding.map_or(0, |(_, g)| g as u64)),
            binding: binding.map(|(a, _)| self.matrix.model_ids()[a].clone()),
            positive: program.constraints().len(),
        });
        out.normalized = k.and_then(|k| {
            if k == 0 {
                return Some(0.0);
            }
            let (a, gap) = binding?;
            let total: u64 = gains[a].iter().map(|&g| g as u64).sum();
            if total == 0 {
                return None;
            }
            let m = self.matrix.m() as u64;
            // ceil(m * Δ_win / (Σ_D q_D(A) / m)) in exact integer units
            let denom = (gap as u64 * m).div_ceil(total).min(m);
            Some(k as f64 / denom as f64)
        });
        Ok(out)
    }

    fn require_topping(&self, target: usize, caps: &GainCaps) -> Result<()> {
        if caps.tops_every_task(self.matrix, target) {
            Ok(())
        } else {
            Err(Error::input(format!(
                "pairwise majority robustness needs gain caps that make {:?} top-ranked on every trained task",
                self.matrix.model_ids()[target]
            )))
        }
    }

    /// Tasks on which `competitor` strictly beats the target.
    fn losses(&self, target: usize, competitor: usize) -> Vec<usize> {
        let (t, a) = (self.matrix.row(target), self.matrix.row(competitor));
        (0..self.matrix.m()).filter(|&j| a[j] > t[j]).collect()
    }

    fn maj_delta(&self, losses: usize) -> usize {
        let m = self.matrix.m();
        majority_threshold(m).saturating_sub(m - losses)
    }

    fn maj_pairwise(&self, target: usize, competitor: usize, caps: &GainCaps) -> Result<RobustnessResult> {
        self.require_topping(target, caps)?;
        let lost = self.losses(target, competitor);
        let delta = self.maj_delta(lost.len());
        let mut out = self.result(Rule::Majority, target, Robustness::Finite(delta), self.task_names(&lost[..delta]));
        out.deficit = Some(Deficit::Majority {
            max_delta: delta,
            binding: (delta > 0).then(|| self.matrix.model_ids()[competitor].clone()),
            positive: (delta > 0) as usize,
        });
        Ok(out)
    }

    fn maj_global(&self, target: usize, caps: &GainCaps, solver: &BranchAndBound) -> Result<RobustnessResult> {
        self.require_topping(target, caps)?;
        let m = self.matrix.m();
        let mut names = Vec::new();
        let mut weights = Vec::new();
        let mut thresholds = Vec::new();
        let mut binding: Option<(usize, usize)> = None;
        let mut contested = vec![false; m];
        for a in self.competitors(target) {
            let lost = self.losses(target, a);
            let delta = self.maj_delta(lost.len());
            if delta == 0 {
                continue;
            }
            if binding.is_none_or(|(_, d)| delta > d) {
                binding = Some((a, delta));
            }
            let mut row = vec![0.0; m];
            for &j in &lost {
                row[j] = 1.0;
                contested[j] = true;
            }
            names.push(self.matrix.model_ids()[a].clone());
            weights.push(row);
            thresholds.push(delta as f64);
        }
        let program = CoveringProgram::new(self.matrix.task_ids().to_vec(), names, weights, thresholds)
            .expect("unit weights and nonnegative deficits");
        let witness = solver
            .solve(&program)?
            .expect("training on every task meets every majority constraint");
        let k = witness.len();
        let mut out = self.result(Rule::Majority, target, Robustness::Finite(k), self.task_names(&witness));
        out.lower_bound = Some(Robustness::Finite(binding.map_or(0, |(_, d)| d)));
        out.deficit = Some(Deficit::Majority {
            max_delta: binding.map_or(0, |(_, d)| d),
            binding: binding.map(|(a, _)| self.matrix.model_ids()[a].clone()),
            positive: program.constraints().len(),
        });
        let denom = contested.iter().filter(|&&c| c).count();
        out.normalized = match (k, denom) {
            (0, _) => Some(0.0),
            (_, 0) => None,
            (k, d) => Some(k as f64 / d as f64),
        };
        Ok(out)
    }

    fn result(&self, rule: Rule, target: usize, k: Robustness, witness: Vec<String>) -> RobustnessResult {
        RobustnessResult {
            rule,
            target: self.matrix.model_ids()[target].clone(),
            k,
            witness: if k == Robustness::Finite(0) { Vec::new() } else { witness },
            deficit: None,
            normalized: None,
            lower_bound: None,
        }
    }

    /// Robustness of `target` under `rule`. Borda has no closed form and is
    /// answered by the exhaustive oracle.
    pub fn robustness(&self, target: usize, rule: Rule, caps: &GainCaps, config: &Config) -> Result<RobustnessResult> {
        caps.validate(self.matrix, target)?;
        match rule {
            Rule::Mean => Ok(self.mean(target, caps)),
            Rule::Median => Ok(self.median(target, caps)),
            Rule::WinRate => self.win_global(target, caps, &config.solver),
            Rule::Majority => self.maj_global(target, caps, &config.solver),
            Rule::Borda => {
                let mut out = brute_force_index(self.matrix, target, caps, rule, &config.tie_break, config.oracle_limit)?;
                if out.k == Robustness::Finite(0) {
                    out.normalized = Some(0.0);
                }
                Ok(out)
            }
        }
    }
}

/// `ceil(x)` that ignores float noise just above an integer.
fn ceil_tol(x: f64) -> f64 {
    (x - 1e-9).ceil()
}

/// Settings shared by every robustness computation.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub solver: BranchAndBound,
    pub tie_break: TieBreakPolicy,
    /// Largest `m` the exhaustive oracle accepts.
    pub oracle_limit: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            solver: BranchAndBound::default(),
            tie_break: TieBreakPolicy::default(),
            oracle_limit: DEFAULT_ORACLE_LIMIT,
        }
    }
}

/// How gain caps are chosen for each target.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum CapsPolicy {
    /// Training lifts the target to exactly 1.
    #[default]
    ScoreToOne,
    /// Per-task caps shared by all targets, clipped to each target's room.
    PerTask(Vec<f64>),
}

impl CapsPolicy {
    pub fn caps_for(&self, matrix: &ScoreMatrix, target: usize) -> Result<GainCaps> {
        match self {
            CapsPolicy::ScoreToOne => Ok(GainCaps::to_one(matrix, target)),
            CapsPolicy::PerTask(caps) => GainCaps::clipped(matrix, target, caps),
        }
    }
}

pub fn k_mean(matrix: &ScoreMatrix, target: &str, caps: &GainCaps) -> Result<RobustnessResult> {
    let t = matrix.model_index(target)?;
    caps.validate(matrix, t)?;
    Ok(Prepared::new(matrix).mean(t, caps))
}

pub fn k_median(matrix: &ScoreMatrix, target: &str, caps: &GainCaps) -> Result<RobustnessResult> {
    let t = matrix.model_index(target)?;
    caps.validate(matrix, t)?;
    Ok(Prepared::new(matrix).median(t, caps))
}

/// Pairwise gains `q_D(A)` in win-rate units, indexed `[model][task]`;
/// the target's own row is all zeros.
pub fn pairwise_gains(matrix: &ScoreMatrix, target: &str, caps: &GainCaps) -> Result<Vec<Vec<f64>>> {
    let t = matrix.model_index(target)?;
    caps.validate(matrix, t)?;
    let n = matrix.n() as f64;
    Ok(Prepared::new(matrix)
        .gain_counts(t, caps)
        .into_iter()
        .map(|r| r.into_iter().map(|g| g as f64 / n).collect())
        .collect())
}

pub fn k_win_pairwise(matrix: &ScoreMatrix, target: &str, competitor: &str, caps: &GainCaps) -> Result<RobustnessResult> {
    let (t, a) = (matrix.model_index(target)?, matrix.model_index(competitor)?);
    if t == a {
        return Err(Error::input("competitor must differ from the target"));
    }
    caps.validate(matrix, t)?;
    Ok(Prepared::new(matrix).win_pairwise(t, a, caps))
}

pub fn k_win_global(matrix: &ScoreMatrix, target: &str, caps: &GainCaps, solver: &BranchAndBound) -> Result<RobustnessResult> {
    let t = matrix.model_index(target)?;
    caps.validate(matrix, t)?;
    Prepared::new(matrix).win_global(t, caps, solver)
}

/// The covering program behind [`k_win_global`], restricted to competitors
/// with a positive deficit.
pub fn win_covering_program(matrix: &ScoreMatrix, target: &str, caps: &GainCaps) -> Result<CoveringProgram> {
    let t = matrix.model_index(target)?;
    caps.validate(matrix, t)?;
    Ok(Prepared::new(matrix).win_program(t, caps).0)
}

pub fn k_maj_pairwise(matrix: &ScoreMatrix, target: &str, competitor: &str, caps: &GainCaps) -> Result<RobustnessResult> {
    let (t, a) = (matrix.model_index(target)?, matrix.model_index(competitor)?);
    if t == a {
        return Err(Error::input("competitor must differ from the target"));
    }
    caps.validate(matrix, t)?;
    Prepared::new(matrix).maj_pairwise(t, a, caps)
}

/// Pairwise majority robustness under score-to-1 training.
pub fn k_maj_global(matrix: &ScoreMatrix, target: &str, solver: &BranchAndBound) -> Result<RobustnessResult> {
    let t = matrix.model_index(target)?;
    Prepared::new(matrix).maj_global(t, &GainCaps::to_one(matrix, t), solver)
}

/// Same as [`k_maj_global`] with explicit caps, which must make the target
/// top-ranked on every task it trains on.
pub fn k_maj_global_with_caps(matrix: &ScoreMatrix, target: &str, caps: &GainCaps, solver: &BranchAndBound) -> Result<RobustnessResult> {
    let t = matrix.model_index(target)?;
    caps.validate(matrix, t)?;
    Prepared::new(matrix).maj_global(t, caps, solver)
}

/// Normalized robustness of an already computed result.
pub fn normalized(result: &RobustnessResult, matrix: &ScoreMatrix, caps: &GainCaps) -> Result<Option<f64>> {
    let Robustness::Finite(k) = result.k else {
        return Err(Error::input("normalized robustness is undefined for an infeasible result"));
    };
    if k == 0 {
        return Ok(Some(0.0));
    }
    let t = matrix.model_index(&result.target)?;
    caps.validate(matrix, t)?;
    let prep = Prepared::new(matrix);
    let fresh = match result.rule {
        Rule::Mean => return Ok(prep.mean_normalized(t, k)),
        Rule::Median => prep.median(t, caps),
        Rule::WinRate => prep.win_global(t, caps, &BranchAndBound::default())?,
        Rule::Majority => prep.maj_global(t, caps, &BranchAndBound::default())?,
        Rule::Borda => return Ok(None),
    };
    // the reference value does not depend on k; rescale to the given k
    Ok(fresh.normalized.zip(fresh.k.finite()).map(|(v, k0)| {
        if k0 == 0 {
            0.0
        } else {
            v / k0 as f64 * k as f64
        }
    }))
}

/// Weak top check on a (trained) matrix, computed from the public operators.
pub fn is_top(matrix: &ScoreMatrix, target: usize, rule: Rule, policy: &TieBreakPolicy) -> Result<bool> {
    let n = matrix.n();
    Ok(match rule {
        Rule::Mean => {
            let v = aggregation::mean_values(matrix);
            let m = matrix.m() as f64;
            (0..n).all(|a| meets(v[target] * m, v[a] * m))
        }
        Rule::Median => {
            let v = aggregation::median_values(matrix);
            (0..n).all(|a| v[target] >= v[a])
        }
        Rule::WinRate => {
            let w = aggregation::win_rates(matrix);
            (0..n).all(|a| w.total_count(target) >= w.total_count(a))
        }
        Rule::Majority => {
            let mm = aggregation::majority_matrix(matrix);
            (0..n).all(|a| a == target || mm.weakly_beats(target, a))
        }
        Rule::Borda => {
            let b = aggregation::borda_scores(matrix, policy)?;
            (0..n).all(|a| b[target] >= b[a])
        }
    })
}

/// Lexicographic `k`-subsets of `0..m`.
pub(crate) fn for_each_subset(m: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if f(&idx) {
            return true;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] < m - k + i) else {
            return false;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exhaustive robustness: tries every task subset by increasing size and
/// returns the first one after which the target is a top element.
pub fn brute_force_k(
    matrix: &ScoreMatrix,
    target: &str,
    caps: &GainCaps,
    rule: Rule,
    policy: &TieBreakPolicy,
    limit: usize,
) -> Result<RobustnessResult> {
    let t = matrix.model_index(target)?;
    caps.validate(matrix, t)?;
    brute_force_index(matrix, t, caps, rule, policy, limit)
}

fn brute_force_index(
    matrix: &ScoreMatrix,
    target: usize,
    caps: &GainCaps,
    rule: Rule,
    policy: &TieBreakPolicy,
    limit: usize,
) -> Result<RobustnessResult> {
    let m = matrix.m();
    if m > limit {
        return Err(Error::LimitExceeded { what: "task count", size: m, limit });
    }
    let mut found: Option<Vec<usize>> = None;
    let mut failure = None;
    for k in 0..=m {
        let hit = for_each_subset(m, k, |s| match is_top(&train_on(matrix, target, s, caps), target, rule, policy) {
            Ok(true) => {
                found = Some(s.to_vec());
                true
            }
            Ok(false) => false,
            Err(e) => {
                failure = Some(e);
                true
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if hit {
            break;
        }
    }
    let k: Robustness = found.as_ref().map(Vec::len).into();
    Ok(RobustnessResult {
        rule,
        target: matrix.model_ids()[target].clone(),
        k,
        witness: found
            .unwrap_or_default()
            .iter()
            .map(|&j| matrix.task_ids()[j].clone())
            .collect(),
        deficit: None,
        normalized: None,
        lower_bound: None,
    })
}

/// Robustness of every model as the target, in model order.
pub fn all_targets(matrix: &ScoreMatrix, rule: Rule, caps: &CapsPolicy, config: &Config) -> Result<Vec<RobustnessResult>> {
    let prep = Prepared::new(matrix);
    (0..matrix.n())
        .into_par_iter()
        .map(|t| prep.robustness(t, rule, &caps.caps_for(matrix, t)?, config))
        .collect()
}
