//! Reference implementations written straight from the definitions, with no
//! shared code paths beyond `ScoreMatrix` accessors and `trained_score`.

#![allow(dead_code)]

use leadrig::matrix::trained_score;
use leadrig::{Rule, ScoreMatrix};

pub type Table = Vec<Vec<f64>>;

pub fn table(mx: &ScoreMatrix) -> Table {
    mx.rows().map(|r| r.to_vec()).collect()
}

/// Weak top under `rule`, recomputed naively.
pub fn naive_top(s: &Table, t: usize, rule: Rule) -> bool {
    let n = s.len();
    let m = s[0].len();
    match rule {
        Rule::Mean => {
            let sum = |i: usize| s[i].iter().sum::<f64>();
            (0..n).all(|a| sum(t) >= sum(a) - 1e-9 * sum(a).abs().max(1.0))
        }
        Rule::Median => {
            let med = |i: usize| {
                let mut r = s[i].clone();
                r.sort_by(|a, b| a.partial_cmp(b).unwrap());
                r[m / 2]
            };
            (0..n).all(|a| med(t) >= med(a))
        }
        Rule::WinRate => {
            // integer win counts, self included
            let w = |i: usize| -> usize {
                (0..m).map(|d| (0..n).filter(|&b| s[b][d] <= s[i][d]).count()).sum()
            };
            (0..n).all(|a| w(t) >= w(a))
        }
        Rule::Majority => {
            let need = m.div_ceil(2);
            (0..n).all(|a| a == t || (0..m).filter(|&d| s[t][d] >= s[a][d]).count() >= need)
        }
        Rule::Borda => {
            // positions in the strict ranking, ties broken by model index
            let score = |i: usize| -> usize {
                (0..m)
                    .map(|d| {
                        (0..n)
                            .filter(|&b| s[b][d] < s[i][d] || (s[b][d] == s[i][d] && b > i))
                            .count()
                    })
                    .sum()
            };
            (0..n).all(|a| score(t) >= score(a))
        }
    }
}

pub fn trained(s: &Table, t: usize, caps: &[f64], subset: &[usize]) -> Table {
    let mut out = s.clone();
    for &d in subset {
        out[t][d] = trained_score(s[t][d], caps[d]);
    }
    out
}

/// Smallest training set size, or `None` when even all tasks fail.
pub fn naive_k(s: &Table, t: usize, caps: &[f64], rule: Rule) -> Option<usize> {
    let m = s[0].len();
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << m) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let subset: Vec<usize> = (0..m).filter(|d| mask >> d & 1 == 1).collect();
        if naive_top(&trained(s, t, caps, &subset), t, rule) {
            best = Some(size);
        }
    }
    best
}

/// Pairwise win-rate robustness from the definition: smallest set after
/// which the target's mean win rate is at least the competitor's.
pub fn naive_k_win_pairwise(s: &Table, t: usize, a: usize, caps: &[f64]) -> Option<usize> {
    let n = s.len();
    let m = s[0].len();
    let w = |x: &Table, i: usize| -> usize { (0..m).map(|d| (0..n).filter(|&b| x[b][d] <= x[i][d]).count()).sum() };
    let mut best: Option<usize> = None;
    for mask in 0u32..(1 << m) {
        let size = mask.count_ones() as usize;
        if best.is_some_and(|b| size >= b) {
            continue;
        }
        let subset: Vec<usize> = (0..m).filter(|d| mask >> d & 1 == 1).collect();
        let x = trained(s, t, caps, &subset);
        if w(&x, t) >= w(&x, a) {
            best = Some(size);
        }
    }
    best
}
