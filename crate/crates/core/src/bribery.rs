//! Shift bribery with all-or-nothing prices under the Borda rule.
//!
//! Tasks play the role of voters: each task's strict ranking of models is a
//! vote. Paying a voter's price moves the preferred candidate to the top of
//! that vote and leaves the other candidates in order, which is exactly
//! what training the target on that task does to the task ranking.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{strict_order, GainCaps, ScoreMatrix, TieBreakPolicy};
use crate::robustness::for_each_subset;

/// Default cap on the number of voters for exhaustive search.
pub const DEFAULT_VOTER_LIMIT: usize = 20;

/// Strict rankings over candidates, best first, stored as candidate indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Profile {
    candidates: Vec<String>,
    votes: Vec<Vec<usize>>,
}

impl Profile {
    pub fn new(candidates: Vec<String>, votes: Vec<Vec<usize>>) -> Result<Self> {
        if candidates.is_empty() || votes.is_empty() {
            return Err(Error::input("a profile needs at least one candidate and one vote"));
        }
        let c = candidates.len();
        for (v, vote) in votes.iter().enumerate() {
            let mut seen = vec![false; c];
            if vote.len() != c || vote.iter().any(|&x| x >= c || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::input(format!("vote {v} is not a permutation of the candidates")));
            }
        }
        Ok(Profile { candidates, votes })
    }

    /// Profile from votes written as candidate ids.
    pub fn from_names(candidates: &[&str], votes: &[&[&str]]) -> Result<Self> {
        let index = |name: &str| {
            candidates
                .iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::input(format!("unknown candidate {name:?}")))
        };
        let votes = votes
            .iter()
            .map(|v| v.iter().map(|c| index(c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Profile::new(candidates.iter().map(|s| s.to_string()).collect(), votes)
    }

    pub fn candidates(&self) -> &[String] {
        &self.candidates
    }

    pub fn votes(&self) -> &[Vec<usize>] {
        &self.votes
    }

    pub fn candidate_index(&self, id: &str) -> Result<usize> {
        self.candidates
            .iter()
            .position(|c| c == id)
            .ok_or_else(|| Error::input(format!("unknown candidate {id:?}")))
    }

    /// A vote spelled out as candidate ids.
    pub fn vote_names(&self, voter: usize) -> Vec<&str> {
        self.votes[voter].iter().map(|&c| self.candidates[c].as_str()).collect()
    }

    /// Borda scores: `c - 1 - position` per vote, summed.
    pub fn borda_scores(&self) -> Vec<u64> {
        let c = self.candidates.len();
        let mut out = vec![0u64; c];
        for vote in &self.votes {
            for (pos, &x) in vote.iter().enumerate() {
                out[x] += (c - 1 - pos) as u64;
            }
        }
        out
    }

    /// True when `candidate` has the highest Borda score, ties allowed.
    pub fn is_weak_borda_winner(&self, candidate: usize) -> bool {
        let s = self.borda_scores();
        s.iter().all(|&x| s[candidate] >= x)
    }
}

/// Move `candidate` to the top of one vote, keeping the others in order.
pub fn shift_to_top(profile: &Profile, voter: usize, candidate: &str) -> Result<Profile> {
    if voter >= profile.votes.len() {
        return Err(Error::input(format!("voter {voter} out of range")));
    }
    let p = profile.candidate_index(candidate)?;
    let mut out = profile.clone();
    shift_in_place(&mut out.votes[voter], p);
    Ok(out)
}

fn shift_in_place(vote: &mut [usize], p: usize) {
    let pos = vote.iter().position(|&x| x == p).expect("votes are permutations");
    vote[..=pos].rotate_right(1);
}

/// Borda winner with ties broken by `policy` over candidate ids.
pub fn borda_winner(profile: &Profile, policy: &TieBreakPolicy) -> Result<String> {
    let ranks = policy.ranks(&profile.candidates)?;
    let scores = profile.borda_scores();
    let best = (0..profile.candidates.len())
        .max_by(|&a, &b| scores[a].cmp(&scores[b]).then(ranks[b].cmp(&ranks[a])))
        .expect("at least one candidate");
    Ok(profile.candidates[best].clone())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BriberyInstance {
    pub profile: Profile,
    pub preferred: String,
    /// Price of each voter, positive.
    pub costs: Vec<f64>,
    pub budget: f64,
}

impl BriberyInstance {
    pub fn new(profile: Profile, preferred: &str, costs: Vec<f64>, budget: f64) -> Result<Self> {
        profile.candidate_index(preferred)?;
        if costs.len() != profile.votes.len() {
            return Err(Error::input(format!("{} costs for {} voters", costs.len(), profile.votes.len())));
        }
        if let Some(c) = costs.iter().find(|c| !c.is_finite() || **c <= 0.0) {
            return Err(Error::input(format!("voter cost {c} must be positive")));
        }
        if !budget.is_finite() || budget < 0.0 {
            return Err(Error::input(format!("budget {budget} must be nonnegative")));
        }
        Ok(BriberyInstance { profile, preferred: preferred.to_string(), costs, budget })
    }

    /// Unit prices for every voter.
    pub fn uniform(profile: Profile, preferred: &str, budget: f64) -> Result<Self> {
        let costs = vec![1.0; profile.votes.len()];
        Self::new(profile, preferred, costs, budget)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BriberyOutcome {
    /// Cheapest total price that makes the preferred candidate a weak Borda winner.
    pub cost: f64,
    /// Bribed voter indices, ascending.
    pub bribed: Vec<usize>,
    pub within_budget: bool,
}

/// Exhaustive minimum-cost shift bribery. Among equally cheap voter sets
/// the smaller, then lexicographically first, is returned. Bribing every
/// voter always succeeds, so an outcome always exists.
pub fn min_cost_shift_bribery(instance: &BriberyInstance, limit: usize) -> Result<BriberyOutcome> {
    let v = instance.profile.votes.len();
    if v > limit {
        return Err(Error::LimitExceeded { what: "voter count", size: v, limit });
    }
    let p = instance.profile.candidate_index(&instance.preferred)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for k in 0..=v {
        for_each_subset(v, k, |s| {
            let cost: f64 = s.iter().map(|&i| instance.costs[i]).sum();
            if best.as_ref().is_some_and(|(c, _)| cost >= *c) {
                return false;
            }
            let mut bribed = instance.profile.clone();
            for &i in s {
                shift_in_place(&mut bribed.votes[i], p);
            }
            if bribed.is_weak_borda_winner(p) {
                best = Some((cost, s.to_vec()));
            }
            false
        });
    }
    let (cost, bribed) = best.expect("bribing every voter puts the preferred candidate on top");
    Ok(BriberyOutcome { cost, within_budget: cost <= instance.budget, bribed })
}

/// The bribery instance matching a training problem: one vote per task,
/// the task's strict ranking under `policy`.
///
/// Requires score-to-1 training (or any caps with the same effect), so that
/// training on a task puts the target strictly first in that task's ranking.
pub fn bst_to_bribery(
    matrix: &ScoreMatrix,
    target: &str,
    costs: Vec<f64>,
    budget: f64,
    policy: &TieBreakPolicy,
) -> Result<BriberyInstance> {
    let t = matrix.model_index(target)?;
    let ranks = policy.ranks(matrix.model_ids())?;
    let caps = GainCaps::to_one(matrix, t);
    for j in 0..matrix.m() {
        let lifted = caps.trained(matrix, t, j);
        let blocked = (0..matrix.n())
            .any(|a| a != t && (matrix.score(a, j) > lifted || (matrix.score(a, j) == lifted && ranks[a] < ranks[t])));
        if blocked {
            return Err(Error::input(format!(
                "training {target:?} on task {:?} would not put it strictly first, so the task is not a shift-to-top vote",
                matrix.task_ids()[j]
            )));
        }
    }
    let votes = (0..matrix.m()).map(|j| strict_order(matrix, j, &ranks)).collect();
    let profile = Profile::new(matrix.model_ids().to_vec(), votes)?;
    BriberyInstance::new(profile, target, costs, budget)
}
