mod common;

use common::{naive_top, table, trained};
use leadrig::aggregation::{leaderboard, majority_matrix, weak_condorcet_winners, win_rates};
use leadrig::random::{distinct_matrix, restricted_caps, rounded_matrix};
use leadrig::robustness::{all_targets, is_top, CapsPolicy, Config, Robustness};
use leadrig::{GainCaps, Rule, ScoreMatrix, TieBreakPolicy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn matrix_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = ScoreMatrix> {
    (1..=max_n, 1..=max_m)
        .prop_flat_map(|(n, m)| proptest::collection::vec(proptest::collection::vec(0u32..=100, m), n))
        .prop_map(|rows| {
            ScoreMatrix::from_rows(rows.into_iter().map(|r| r.into_iter().map(|c| c as f64 / 100.0).collect()).collect())
                .unwrap()
        })
}

fn ks(mx: &ScoreMatrix, rule: Rule, caps: &CapsPolicy) -> Vec<Robustness> {
    all_targets(mx, rule, caps, &Config::default()).unwrap().into_iter().map(|r| r.k).collect()
}

fn squared(mx: &ScoreMatrix) -> ScoreMatrix {
    let rows = mx.rows().map(|r| r.iter().map(|x| x * x).collect()).collect();
    ScoreMatrix::new(mx.model_ids().to_vec(), mx.task_ids().to_vec(), rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Win rate, majority and median depend only on the order of scores; a
    /// strictly increasing map fixing 1 keeps every robustness value.
    #[test]
    fn ordinal_rules_ignore_monotone_rescaling(mx in matrix_strategy(5, 7)) {
        let sq = squared(&mx);
        for rule in [Rule::Median, Rule::WinRate, Rule::Majority] {
            prop_assert_eq!(ks(&mx, rule, &CapsPolicy::ScoreToOne), ks(&sq, rule, &CapsPolicy::ScoreToOne));
        }
    }

    /// Every witness has size k and makes the target a top element.
    #[test]
    fn witnesses_are_valid(mx in matrix_strategy(6, 8)) {
        for rule in Rule::ROBUSTNESS {
            for r in all_targets(&mx, rule, &CapsPolicy::ScoreToOne, &Config::default()).unwrap() {
                let t = mx.model_index(&r.target).unwrap();
                match r.k {
                    Robustness::Finite(k) => {
                        prop_assert_eq!(r.witness.len(), k);
                        let idx: Vec<usize> = r.witness.iter().map(|w| mx.task_index(w).unwrap()).collect();
                        let after = trained(&table(&mx), t, GainCaps::to_one(&mx, t).caps(), &idx);
                        prop_assert!(naive_top(&after, t, rule), "{} witness {:?} fails", rule, r.witness);
                    }
                    Robustness::Infeasible => prop_assert!(r.witness.is_empty()),
                }
            }
        }
    }

    /// Raising caps never makes robustness worse.
    #[test]
    fn larger_caps_never_hurt(mx in matrix_strategy(5, 7), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = rng.gen_range(0..mx.n());
        let small = restricted_caps(&mut rng, &mx, t);
        let room: Vec<f64> = mx.row(t).iter().map(|s| 1.0 - s).collect();
        let mid: Vec<f64> = small.caps().iter().zip(&room).map(|(g, r)| (g + (r - g) * 0.5).min(*r)).collect();
        let mid = GainCaps::new(&mx, t, mid).unwrap();
        let full = GainCaps::to_one(&mx, t);
        let cfg = Config::default();
        let prep = leadrig::robustness::Prepared::new(&mx);
        for rule in [Rule::Mean, Rule::Median, Rule::WinRate] {
            let a = prep.robustness(t, rule, &small, &cfg).unwrap().k;
            let b = prep.robustness(t, rule, &mid, &cfg).unwrap().k;
            let c = prep.robustness(t, rule, &full, &cfg).unwrap().k;
            prop_assert!(a >= b && b >= c, "{}: {:?} {:?} {:?}", rule, a, b, c);
        }
    }

    /// Majority robustness is always finite and at most m; it is zero
    /// exactly for weak Condorcet winners.
    #[test]
    fn majority_finite_and_bounded(mx in matrix_strategy(6, 9)) {
        let winners = weak_condorcet_winners(&mx);
        for r in all_targets(&mx, Rule::Majority, &CapsPolicy::ScoreToOne, &Config::default()).unwrap() {
            let k = r.k.finite().expect("majority robustness is finite");
            prop_assert!(k <= mx.m());
            prop_assert_eq!(k == 0, winners.contains(&r.target));
        }
    }

    /// The covering lower bound never exceeds the exact value.
    #[test]
    fn lower_bounds_hold(mx in matrix_strategy(6, 9)) {
        for rule in [Rule::WinRate, Rule::Majority] {
            for r in all_targets(&mx, rule, &CapsPolicy::ScoreToOne, &Config::default()).unwrap() {
                prop_assert!(r.lower_bound.unwrap() <= r.k);
            }
        }
    }

    /// A target already on top needs nothing, and the converse.
    #[test]
    fn zero_iff_already_top(mx in matrix_strategy(5, 6)) {
        for rule in Rule::ROBUSTNESS {
            for (t, r) in all_targets(&mx, rule, &CapsPolicy::ScoreToOne, &Config::default()).unwrap().iter().enumerate() {
                let top = is_top(&mx, t, rule, &TieBreakPolicy::default()).unwrap();
                prop_assert_eq!(r.k == Robustness::Finite(0), top);
            }
        }
    }

    /// Normalized values, when defined, lie in [0, 1].
    #[test]
    fn normalized_in_unit_interval(mx in matrix_strategy(6, 9)) {
        for rule in Rule::ROBUSTNESS {
            for r in all_targets(&mx, rule, &CapsPolicy::ScoreToOne, &Config::default()).unwrap() {
                if let Some(v) = r.normalized {
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&v), "{} normalized {}", rule, v);
                }
            }
        }
    }
}

#[test]
fn borda_and_win_rate_orders_agree_on_strict_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let policy = TieBreakPolicy::default();
    for _ in 0..200 {
        let n = rng.gen_range(2..=8);
        let m = rng.gen_range(1..=10);
        let mx = distinct_matrix(&mut rng, n, m);
        let borda = leaderboard(&mx, Rule::Borda, &policy).unwrap();
        let win = leaderboard(&mx, Rule::WinRate, &policy).unwrap();
        assert_eq!(borda.order, win.order, "{mx:?}");
    }
}

#[test]
fn win_rates_are_bounded() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let (n, m) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let mx = rounded_matrix(&mut rng, n, m);
        let w = win_rates(&mx);
        let n = mx.n() as f64;
        for v in &w.mean {
            assert!((1.0 / n - 1e-12..=1.0 + 1e-12).contains(v));
        }
        let mm = majority_matrix(&mx);
        for a in 0..mx.n() {
            assert_eq!(mm.count(a, a), mx.m());
        }
    }
}
