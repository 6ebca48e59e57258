//! Score matrix, tie-breaking, gain caps and the training transformation.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::extract_namespace;

/// A complete `n x m` matrix of scores in `[0, 1]`, models by tasks.
///
/// Immutable once built; every transformation returns a fresh matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    model_ids: Vec<String>,
    task_ids: Vec<String>,
    namespaces: Vec<String>,
    /// Row-major, `scores[i * m + j]` is model `i` on task `j`.
    scores: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(model_ids: Vec<String>, task_ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if model_ids.is_empty() || task_ids.is_empty() {
            return Err(Error::input("score matrix needs at least one model and one task"));
        }
        check_unique(&model_ids, "model")?;
        check_unique(&task_ids, "task")?;
        if rows.len() != model_ids.len() {
            return Err(Error::input(format!(
                "{} score rows for {} models",
                rows.len(),
                model_ids.len()
            )));
        }
        let m = task_ids.len();
        let mut scores = Vec::with_capacity(model_ids.len() * m);
        for (id, row) in model_ids.iter().zip(rows) {
            if row.len() != m {
                return Err(Error::input(format!(
                    "model {id:?} has {} scores, expected {m}",
                    row.len()
                )));
            }
            for (j, &s) in row.iter().enumerate() {
                if !s.is_finite() || !(0.0..=1.0).contains(&s) {
                    return Err(Error::input(format!(
                        "score {s} for model {id:?} on task {:?} is outside [0, 1]",
                        task_ids[j]
                    )));
                }
            }
            scores.extend(row);
        }
        let namespaces = model_ids.iter().map(|id| extract_namespace(id)).collect();
        Ok(ScoreMatrix { model_ids, task_ids, namespaces, scores })
    }

    /// Convenience constructor with generated ids `m0, m1, ...` and `t0, t1, ...`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let models = (0..n).map(|i| format!("m{i}")).collect();
        let tasks = (0..m).map(|j| format!("t{j}")).collect();
        Self::new(models, tasks, rows)
    }

    pub fn n(&self) -> usize {
        self.model_ids.len()
    }

    pub fn m(&self) -> usize {
        self.task_ids.len()
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn task_ids(&self) -> &[String] {
        &self.task_ids
    }

    pub fn namespaces(&self) -> &[String] {
        &self.namespaces
    }

    #[inline]
    pub fn score(&self, model: usize, task: usize) -> f64 {
        self.scores[model * self.m() + task]
    }

    #[inline]
    pub fn row(&self, model: usize) -> &[f64] {
        let m = self.m();
        &self.scores[model * m..(model + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.scores.chunks_exact(self.m())
    }

    pub fn column(&self, task: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[task])
    }

    pub fn model_index(&self, id: &str) -> Result<usize> {
        self.model_ids
            .iter()
            .position(|m| m == id)
            .ok_or_else(|| Error::input(format!("unknown model {id:?}")))
    }

    pub fn task_index(&self, id: &str) -> Result<usize> {
        self.task_ids
            .iter()
            .position(|t| t == id)
            .ok_or_else(|| Error::input(format!("unknown task {id:?}")))
    }

    /// Copy of the matrix with one model's row replaced. The row must already
    /// satisfy the score invariants.
    pub(crate) fn with_row(&self, model: usize, row: &[f64]) -> ScoreMatrix {
        let mut out = self.clone();
        let m = self.m();
        out.scores[model * m..(model + 1) * m].copy_from_slice(row);
        out
    }

    /// Sub-matrix keeping the given models, in the given order.
    pub fn select_models(&self, models: &[usize]) -> ScoreMatrix {
        let mut scores = Vec::with_capacity(models.len() * self.m());
        for &i in models {
            scores.extend_from_slice(self.row(i));
        }
        ScoreMatrix {
            model_ids: models.iter().map(|&i| self.model_ids[i].clone()).collect(),
            task_ids: self.task_ids.clone(),
            namespaces: models.iter().map(|&i| self.namespaces[i].clone()).collect(),
            scores,
        }
    }
}

fn check_unique(ids: &[String], kind: &str) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if id.is_empty() {
            return Err(Error::input(format!("empty {kind} id")));
        }
        if !seen.insert(id.as_str()) {
            return Err(Error::input(format!("duplicate {kind} id {id:?}")));
        }
    }
    Ok(())
}

/// Deterministic rule turning weak per-task preferences into strict ones.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TieBreakPolicy {
    /// Ascending byte-wise order of identifiers: `"m1" < "m10" < "m2"`.
    #[default]
    Lexicographic,
    /// Explicit order, earlier ids win ties. Must mention every id it is
    /// applied to; extra ids are ignored.
    Explicit(Vec<String>),
}

impl TieBreakPolicy {
    /// Position of each id in the total order; lower wins ties.
    pub fn ranks(&self, ids: &[String]) -> Result<Vec<usize>> {
        match self {
            TieBreakPolicy::Lexicographic => {
                let mut idx: Vec<usize> = (0..ids.len()).collect();
                idx.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
                let mut ranks = vec![0; ids.len()];
                for (pos, i) in idx.into_iter().enumerate() {
                    ranks[i] = pos;
                }
                Ok(ranks)
            }
            TieBreakPolicy::Explicit(order) => {
                let mut pos = HashMap::with_capacity(order.len());
                for (p, id) in order.iter().enumerate() {
                    if pos.insert(id.as_str(), p).is_some() {
                        return Err(Error::input(format!("tie-break order repeats {id:?}")));
                    }
                }
                ids.iter()
                    .map(|id| {
                        pos.get(id.as_str())
                            .copied()
                            .ok_or_else(|| Error::input(format!("tie-break order is missing {id:?}")))
                    })
                    .collect()
            }
        }
    }
}

/// Strict ranking of models on one task, best first, as model indices.
pub(crate) fn strict_order(matrix: &ScoreMatrix, task: usize, ranks: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..matrix.n()).collect();
    order.sort_by(|&a, &b| by_score_then_rank(matrix.score(a, task), matrix.score(b, task), ranks[a], ranks[b]));
    order
}

/// Descending score, exact float comparison; ties resolved by rank.
pub(crate) fn by_score_then_rank(sa: f64, sb: f64, ra: usize, rb: usize) -> Ordering {
    sb.partial_cmp(&sa).unwrap_or(Ordering::Equal).then(ra.cmp(&rb))
}

/// Models sorted by descending score on `task`, ties broken by `policy`.
pub fn induced_strict_ranking(matrix: &ScoreMatrix, task: &str, policy: &TieBreakPolicy) -> Result<Vec<String>> {
    let j = matrix.task_index(task)?;
    let ranks = policy.ranks(matrix.model_ids())?;
    Ok(strict_order(matrix, j, &ranks)
        .into_iter()
        .map(|i| matrix.model_ids()[i].clone())
        .collect())
}

/// Per-task maximal gains `G_D` available to one target.
#[derive(Clone, Debug, PartialEq)]
pub struct GainCaps {
    caps: Vec<f64>,
}

impl GainCaps {
    /// Validated caps for `target`: every `G_D` must lie in `[0, 1 - score]`.
    pub fn new(matrix: &ScoreMatrix, target: usize, caps: Vec<f64>) -> Result<Self> {
        let caps = GainCaps { caps };
        caps.validate(matrix, target)?;
        Ok(caps)
    }

    /// Caps that lift the target to exactly 1 on every task.
    pub fn to_one(matrix: &ScoreMatrix, target: usize) -> Self {
        GainCaps { caps: matrix.row(target).iter().map(|s| 1.0 - s).collect() }
    }

    /// Caps given per task, clipped to the room the target has left.
    pub fn clipped(matrix: &ScoreMatrix, target: usize, caps: &[f64]) -> Result<Self> {
        if caps.len() != matrix.m() {
            return Err(Error::input(format!("{} caps for {} tasks", caps.len(), matrix.m())));
        }
        let mut out = Vec::with_capacity(caps.len());
        for (&g, &s) in caps.iter().zip(matrix.row(target)) {
            if !g.is_finite() || g < 0.0 {
                return Err(Error::input(format!("gain cap {g} must be finite and nonnegative")));
            }
            out.push(g.min(1.0 - s));
        }
        Ok(GainCaps { caps: out })
    }

    pub fn caps(&self) -> &[f64] {
        &self.caps
    }

    pub fn validate(&self, matrix: &ScoreMatrix, target: usize) -> Result<()> {
        if target >= matrix.n() {
            return Err(Error::input(format!("target index {target} out of range")));
        }
        if self.caps.len() != matrix.m() {
            return Err(Error::input(format!("{} caps for {} tasks", self.caps.len(), matrix.m())));
        }
        for (j, (&g, &s)) in self.caps.iter().zip(matrix.row(target)).enumerate() {
            if !g.is_finite() || g < 0.0 || g > 1.0 - s {
                return Err(Error::input(format!(
                    "gain cap {g} on task {:?} outside [0, {}]",
                    matrix.task_ids()[j],
                    1.0 - s
                )));
            }
        }
        Ok(())
    }

    /// Post-training score of the target on `task` when trained there.
    #[inline]
    pub fn trained(&self, matrix: &ScoreMatrix, target: usize, task: usize) -> f64 {
        trained_score(matrix.score(target, task), self.caps[task])
    }

    /// True when training on any task makes the target weakly best on it.
    pub fn tops_every_task(&self, matrix: &ScoreMatrix, target: usize) -> bool {
        (0..matrix.m()).all(|j| {
            let t = self.trained(matrix, target, j);
            matrix.column(j).all(|s| t >= s)
        })
    }
}

/// `s + g`, snapped to exactly 1 when the gain uses all remaining room.
#[inline]
pub fn trained_score(score: f64, gain: f64) -> f64 {
    if gain == 1.0 - score {
        1.0
    } else {
        (score + gain).min(1.0)
    }
}

/// Caps `G_D = 1 - score` that realize score-to-1 training.
pub fn default_caps(matrix: &ScoreMatrix, target: &str) -> Result<GainCaps> {
    Ok(GainCaps::to_one(matrix, matrix.model_index(target)?))
}

/// Who is trained, on which tasks, and how far.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingScenario {
    pub target: String,
    pub selected: BTreeSet<String>,
    pub caps: GainCaps,
}

/// Scores after training the target on the selected tasks with maximal gains.
pub fn apply_training(matrix: &ScoreMatrix, scenario: &TrainingScenario) -> Result<ScoreMatrix> {
    let target = matrix.model_index(&scenario.target)?;
    scenario.caps.validate(matrix, target)?;
    let selected = scenario
        .selected
        .iter()
        .map(|t| matrix.task_index(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(train_on(matrix, target, &selected, &scenario.caps))
}

/// Index-level training used by the search routines. Caps must be valid.
pub(crate) fn train_on(matrix: &ScoreMatrix, target: usize, tasks: &[usize], caps: &GainCaps) -> ScoreMatrix {
    let mut row = matrix.row(target).to_vec();
    for &j in tasks {
        row[j] = caps.trained(matrix, target, j);
    }
    matrix.with_row(target, &row)
}
