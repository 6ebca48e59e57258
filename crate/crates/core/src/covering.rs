//! Exact minimum-cardinality binary covering.
//!
//! A [`CoveringProgram`] asks for the smallest set of items `S` such that,
//! for every constraint `c`, `sum_{i in S} w(c, i) >= t(c)`. Weights and
//! thresholds are nonnegative. The problem contains set cover, so the exact
//! solver is a depth-first branch-and-bound:
//!
//! * constraints implied by another constraint are dropped up front;
//! * items are visited in order of decreasing total relative weight,
//!   including an item before excluding it;
//! * the incumbent starts from [`greedy_cover`];
//! * a node at depth `d` is pruned when some constraint cannot be met by the
//!   remaining items, or when some constraint needs at least
//!   `incumbent - d` of them (counting its heaviest remaining weights).
//!
//! The search is exhaustive apart from these admissible prunings, so the
//! answer is a true minimum. A node budget turns pathological instances
//! into an error instead of a silent approximation.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Relative tolerance on threshold satisfaction.
pub const TOLERANCE: f64 = 1e-9;

/// Default number of node expansions before [`Error::BudgetExhausted`].
pub const DEFAULT_NODE_BUDGET: u64 = 100_000_000;

#[inline]
fn slack(threshold: f64) -> f64 {
    TOLERANCE * threshold.abs().max(1.0)
}

/// `covered` meets `threshold` up to the relative tolerance.
#[inline]
pub fn meets(covered: f64, threshold: f64) -> bool {
    covered >= threshold - slack(threshold)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoveringProgram {
    items: Vec<String>,
    constraints: Vec<String>,
    /// `weights[c][i]`.
    weights: Vec<Vec<f64>>,
    thresholds: Vec<f64>,
}

impl CoveringProgram {
    pub fn new(
        items: Vec<String>,
        constraints: Vec<String>,
        weights: Vec<Vec<f64>>,
        thresholds: Vec<f64>,
    ) -> Result<Self> {
        if weights.len() != constraints.len() || thresholds.len() != constraints.len() {
            return Err(Error::input("covering program: one weight row and threshold per constraint"));
        }
        for (c, row) in weights.iter().enumerate() {
            if row.len() != items.len() {
                return Err(Error::input(format!(
                    "covering program: constraint {:?} has {} weights for {} items",
                    constraints[c],
                    row.len(),
                    items.len()
                )));
            }
            if let Some(w) = row.iter().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(Error::input(format!("covering program: invalid weight {w}")));
            }
        }
        if let Some(t) = thresholds.iter().find(|t| !t.is_finite() || **t < 0.0) {
            return Err(Error::input(format!("covering program: invalid threshold {t}")));
        }
        Ok(CoveringProgram { items, constraints, weights, thresholds })
    }

    /// Program with items and constraints named by their index.
    pub fn unnamed(weights: Vec<Vec<f64>>, thresholds: Vec<f64>) -> Result<Self> {
        let n_items = weights.first().map_or(0, Vec::len);
        let items = (0..n_items).map(|i| i.to_string()).collect();
        let constraints = (0..thresholds.len()).map(|c| c.to_string()).collect();
        Self::new(items, constraints, weights, thresholds)
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn constraints(&self) -> &[String] {
        &self.constraints
    }

    pub fn weight(&self, constraint: usize, item: usize) -> f64 {
        self.weights[constraint][item]
    }

    pub fn threshold(&self, constraint: usize) -> f64 {
        self.thresholds[constraint]
    }

    /// Every constraint is met by `selected`.
    pub fn is_satisfied(&self, selected: &[usize]) -> bool {
        self.weights
            .iter()
            .zip(&self.thresholds)
            .all(|(row, &t)| meets(selected.iter().map(|&i| row[i]).sum(), t))
    }

    /// Constraints that the empty selection leaves unmet.
    fn active(&self) -> Vec<usize> {
        (0..self.constraints.len()).filter(|&c| !meets(0.0, self.thresholds[c])).collect()
    }

    /// Minimum items needed for constraint `c` alone, `None` if unreachable.
    pub fn single_constraint_minimum(&self, c: usize) -> Option<usize> {
        let mut w = self.weights[c].clone();
        w.sort_by(|a, b| b.total_cmp(a));
        prefix_cover(&w, self.thresholds[c])
    }
}

/// Length of the shortest prefix of `sorted_desc` whose sum meets `threshold`.
pub(crate) fn prefix_cover(sorted_desc: &[f64], threshold: f64) -> Option<usize> {
    let mut acc = 0.0;
    if meets(acc, threshold) {
        return Some(0);
    }
    for (k, w) in sorted_desc.iter().enumerate() {
        acc += w;
        if meets(acc, threshold) {
            return Some(k + 1);
        }
    }
    None
}

/// Largest single-constraint minimum; a lower bound on the exact optimum.
/// `None` when some constraint cannot be met even by all items.
pub fn pairwise_lower_bound(program: &CoveringProgram) -> Option<usize> {
    let mut best = 0;
    for c in 0..program.constraints.len() {
        best = best.max(program.single_constraint_minimum(c)?);
    }
    Some(best)
}

/// Greedy cover: repeatedly take the item with the largest total reduction
/// of residual deficits, lowest index on ties. Returns the selected items in
/// pick order, or `None` if the program is infeasible.
pub fn greedy_cover(program: &CoveringProgram) -> Option<Vec<usize>> {
    let mut residual: Vec<f64> = program.thresholds.clone();
    let mut taken = vec![false; program.items.len()];
    let mut picked = Vec::new();
    loop {
        let open: Vec<usize> = (0..residual.len())
            .filter(|&c| !meets(program.thresholds[c] - residual[c], program.thresholds[c]))
            .collect();
        if open.is_empty() {
            return Some(picked);
        }
        let mut best: Option<(usize, f64)> = None;
        for i in (0..program.items.len()).filter(|&i| !taken[i]) {
            let gain: f64 = open.iter().map(|&c| program.weights[c][i].min(residual[c])).sum();
            if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let (i, _) = best?;
        taken[i] = true;
        picked.push(i);
        for (r, w) in residual.iter_mut().zip(&program.weights) {
            *r -= w[i];
        }
    }
}

/// Exact solver configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BranchAndBound {
    pub node_budget: u64,
}

impl Default for BranchAndBound {
    fn default() -> Self {
        BranchAndBound { node_budget: DEFAULT_NODE_BUDGET }
    }
}

/// Solve with the default node budget.
pub fn solve_exact(program: &CoveringProgram) -> Result<Option<Vec<usize>>> {
    BranchAndBound::default().solve(program)
}

impl BranchAndBound {
    /// A minimum-cardinality feasible item set (ascending item indices), or
    /// `None` if selecting every item still violates a constraint.
    pub fn solve(&self, program: &CoveringProgram) -> Result<Option<Vec<usize>>> {
        let active = program.active();
        if active.is_empty() {
            return Ok(Some(Vec::new()));
        }
        let all: Vec<usize> = (0..program.items.len()).collect();
        if !program.is_satisfied(&all) {
            return Ok(None);
        }

        let active = reduce_constraints(program, active);

        // items useless for every active constraint never enter a minimum cover;
        // the rest are visited by decreasing relative contribution
        let score = |i: usize| -> f64 {
            active.iter().map(|&c| (program.weights[c][i] / program.thresholds[c]).min(1.0)).sum()
        };
        let mut order: Vec<usize> = all.into_iter().filter(|&i| score(i) > 0.0).collect();
        order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));

        let len = order.len();
        let weights: Vec<Vec<f64>> = active
            .iter()
            .map(|&c| order.iter().map(|&i| program.weights[c][i]).collect())
            .collect();
        let mut suffix_sum = vec![vec![0.0; len + 1]; active.len()];
        for (a, row) in weights.iter().enumerate() {
            for p in (0..len).rev() {
                suffix_sum[a][p] = suffix_sum[a][p + 1] + row[p];
            }
        }
        let by_weight = weights
            .iter()
            .map(|row| {
                let mut ps: Vec<usize> = (0..len).filter(|&p| row[p] > 0.0).collect();
                ps.sort_by(|&x, &y| row[y].total_cmp(&row[x]).then(x.cmp(&y)));
                ps
            })
            .collect();
        let slacks: Vec<f64> = active.iter().map(|&c| slack(program.thresholds[c])).collect();

        let incumbent = greedy_cover(program).expect("full selection is feasible");
        let mut search = Search {
            weights,
            by_weight,
            suffix_sum,
            slacks,
            levels: vec![vec![0.0; active.len()]; len + 1],
            chosen: Vec::with_capacity(len),
            best: None,
            best_len: incumbent.len(),
            nodes: 0,
            budget: self.node_budget,
        };
        search.levels[0] = active.iter().map(|&c| program.thresholds[c]).collect();
        search.dfs(0)?;

        let mut witness = match search.best {
            Some(positions) => positions.into_iter().map(|p| order[p]).collect(),
            None => incumbent,
        };
        witness.sort_unstable();
        Ok(Some(witness))
    }
}

/// Drops constraints implied by another one: same or smaller weights on
/// every item and a threshold at least as large. Exact duplicates of a
/// weight row collapse to the largest threshold first.
fn reduce_constraints(program: &CoveringProgram, active: Vec<usize>) -> Vec<usize> {
    let mut by_row: HashMap<Vec<u64>, usize> = HashMap::new();
    for &c in &active {
        let key: Vec<u64> = program.weights[c].iter().map(|w| w.to_bits()).collect();
        let slot = by_row.entry(key).or_insert(c);
        if program.thresholds[c] > program.thresholds[*slot] {
            *slot = c;
        }
    }
    let mut unique: Vec<usize> = by_row.into_values().collect();
    // strongest first so that dominated rows meet their dominator early
    unique.sort_by(|&a, &b| program.thresholds[b].total_cmp(&program.thresholds[a]).then(a.cmp(&b)));
    if unique.len() > DOMINANCE_LIMIT {
        unique.sort_unstable();
        return unique;
    }
    let implies = |strong: usize, weak: usize| {
        program.thresholds[strong] >= program.thresholds[weak]
            && program.weights[strong].iter().zip(&program.weights[weak]).all(|(s, w)| s <= w)
    };
    let mut kept: Vec<usize> = Vec::new();
    for &c in &unique {
        if !kept.iter().any(|&k| implies(k, c)) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept
}

/// Above this many distinct constraint rows the quadratic dominance pass is skipped.
const DOMINANCE_LIMIT: usize = 3000;

struct Search {
    /// `weights[a][p]`: active constraint `a`, item at search position `p`.
    weights: Vec<Vec<f64>>,
    /// Positions with positive weight for each constraint, heaviest first.
    by_weight: Vec<Vec<usize>>,
    suffix_sum: Vec<Vec<f64>>,
    slacks: Vec<f64>,
    /// Residual deficits at each search depth position.
    levels: Vec<Vec<f64>>,
    chosen: Vec<usize>,
    best: Option<Vec<usize>>,
    best_len: usize,
    nodes: u64,
    budget: u64,
}

impl Search {
    /// Items from `pos` onward that constraint `a` needs at least, or `None`
    /// when that exceeds `limit`.
    fn needed(&self, a: usize, pos: usize, residual: f64, limit: usize) -> Option<usize> {
        let target = residual - self.slacks[a];
        let mut acc = 0.0;
        let mut count = 0;
        for &p in &self.by_weight[a] {
            if p < pos {
                continue;
            }
            if count == limit {
                return None;
            }
            acc += self.weights[a][p];
            count += 1;
            if acc >= target {
                return Some(count);
            }
        }
        None
    }

    fn dfs(&mut self, pos: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExhausted(self.budget));
        }
        let depth = self.chosen.len();
        let residual = &self.levels[pos];

        let open: Vec<usize> = (0..residual.len()).filter(|&a| residual[a] > self.slacks[a]).collect();
        if open.is_empty() {
            if depth < self.best_len {
                self.best_len = depth;
                self.best = Some(self.chosen.clone());
            }
            return Ok(());
        }
        // a strictly better cover has at most `limit` more items
        let Some(limit) = self.best_len.checked_sub(depth + 1) else {
            return Ok(());
        };
        for &a in &open {
            if self.suffix_sum[a][pos] < residual[a] - self.slacks[a] {
                return Ok(());
            }
        }
        for &a in &open {
            if self.needed(a, pos, self.levels[pos][a], limit).is_none() {
                return Ok(());
            }
        }

        // include the item at `pos`, unless it helps no open constraint
        if open.iter().any(|&a| self.weights[a][pos] > 0.0) {
            let (head, tail) = self.levels.split_at_mut(pos + 1);
            for (a, next) in tail[0].iter_mut().enumerate() {
                *next = head[pos][a] - self.weights[a][pos];
            }
            self.chosen.push(pos);
            self.dfs(pos + 1)?;
            self.chosen.pop();
        }

        // exclude it
        let (head, tail) = self.levels.split_at_mut(pos + 1);
        tail[0].copy_from_slice(&head[pos]);
        self.dfs(pos + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exhaustive oracle: smallest satisfying subset by increasing size.
    fn brute(p: &CoveringProgram) -> Option<usize> {
        let n = p.items().len();
        (0..=n).find(|&k| combos(n, k).iter().any(|s| p.is_satisfied(s)))
    }

    fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
        (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
            .collect()
    }

    fn set_cover() -> CoveringProgram {
        // item supports {1,2},{2,3},{1,3} over constraints 1..3
        CoveringProgram::unnamed(
            vec![vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]],
            vec![1.0, 1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn zero_thresholds() {
        let p = CoveringProgram::unnamed(vec![vec![1.0, 2.0]], vec![0.0]).unwrap();
        assert_eq!(solve_exact(&p).unwrap(), Some(vec![]));
        assert_eq!(greedy_cover(&p), Some(vec![]));
        assert_eq!(pairwise_lower_bound(&p), Some(0));
    }

    #[test]
    fn classic_set_cover() {
        let p = set_cover();
        assert_eq!(brute(&p), Some(2));
        let w = solve_exact(&p).unwrap().unwrap();
        assert_eq!(w.len(), 2);
        assert!(p.is_satisfied(&w));
        let g = greedy_cover(&p).unwrap();
        assert!(g.len() == 2 || g.len() == 3);
    }

    #[test]
    fn single_weighted_constraint() {
        let p = CoveringProgram::unnamed(vec![vec![3.0, 2.0, 2.0]], vec![5.0]).unwrap();
        assert_eq!(brute(&p), Some(2));
        assert_eq!(solve_exact(&p).unwrap(), Some(vec![0, 1]));
        assert_eq!(pairwise_lower_bound(&p), Some(2));
    }

    #[test]
    fn dominant_item() {
        let p = CoveringProgram::unnamed(
            vec![vec![0.1, 5.0, 0.2], vec![0.3, 5.0, 0.0], vec![0.0, 5.0, 0.1]],
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        assert_eq!(greedy_cover(&p), Some(vec![1]));
        assert_eq!(solve_exact(&p).unwrap(), Some(vec![1]));
    }

    #[test]
    fn disjoint_supports_gap() {
        let p = CoveringProgram::unnamed(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 1.0]).unwrap();
        assert_eq!(pairwise_lower_bound(&p), Some(1));
        assert_eq!(brute(&p), Some(2));
        assert_eq!(solve_exact(&p).unwrap().unwrap().len(), 2);
    }

    #[test]
    fn infeasible() {
        let p = CoveringProgram::unnamed(vec![vec![1.0, 1.0], vec![0.0, 0.5]], vec![1.0, 1.0]).unwrap();
        assert_eq!(solve_exact(&p).unwrap(), None);
        assert_eq!(greedy_cover(&p), None);
        assert_eq!(pairwise_lower_bound(&p), None);
    }

    #[test]
    fn rejects_negative_values() {
        assert!(CoveringProgram::unnamed(vec![vec![-1.0]], vec![1.0]).is_err());
        assert!(CoveringProgram::unnamed(vec![vec![1.0]], vec![-1.0]).is_err());
        assert!(CoveringProgram::unnamed(vec![vec![f64::NAN]], vec![1.0]).is_err());
        assert!(CoveringProgram::unnamed(vec![vec![1.0]], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn tolerance_absorbs_summation_error() {
        let p = CoveringProgram::unnamed(vec![vec![0.1, 0.2]], vec![0.3]).unwrap();
        assert_eq!(solve_exact(&p).unwrap().map(|w| w.len()), Some(2));
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let p = set_cover();
        let r = BranchAndBound { node_budget: 1 }.solve(&p);
        assert!(matches!(r, Err(Error::BudgetExhausted(1))));
    }

    #[test]
    fn deterministic_witness() {
        let p = set_cover();
        assert_eq!(solve_exact(&p).unwrap(), solve_exact(&p.clone()).unwrap());
    }
}
