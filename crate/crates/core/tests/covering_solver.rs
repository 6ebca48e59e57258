use leadrig::covering::{greedy_cover, pairwise_lower_bound, solve_exact};
use leadrig::{BranchAndBound, CoveringProgram};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum cover size by enumerating all item subsets.
fn brute(p: &CoveringProgram) -> Option<usize> {
    let n = p.items().len();
    (0u32..(1 << n))
        .filter(|mask| {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            p.is_satisfied(&s)
        })
        .map(|mask| mask.count_ones() as usize)
        .min()
}

fn random_program(rng: &mut impl Rng, items: usize, constraints: usize, integral: bool) -> CoveringProgram {
    let weights: Vec<Vec<f64>> = (0..constraints)
        .map(|_| {
            (0..items)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        0.0
                    } else if integral {
                        rng.gen_range(0..=4) as f64
                    } else {
                        rng.gen_range(0.0..1.0)
                    }
                })
                .collect()
        })
        .collect();
    let thresholds = weights
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            // occasionally above the total to exercise infeasibility
            let frac = rng.gen_range(0.0..1.15);
            if integral {
                (total * frac).round()
            } else {
                total * frac
            }
        })
        .collect();
    CoveringProgram::unnamed(weights, thresholds).unwrap()
}

#[test]
fn exact_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(314);
    for i in 0..400 {
        let items = rng.gen_range(1..=15);
        let constraints = rng.gen_range(1..=6);
        let p = random_program(&mut rng, items, constraints, i % 2 == 0);
        let expected = brute(&p);
        let got = solve_exact(&p).unwrap();
        assert_eq!(got.as_ref().map(Vec::len), expected, "{p:?}");
        if let Some(w) = got {
            assert!(p.is_satisfied(&w));
            assert!(w.windows(2).all(|x| x[0] < x[1]));
        }
        if let Some(lb) = pairwise_lower_bound(&p) {
            assert!(expected.is_none_or(|k| lb <= k));
        } else {
            assert_eq!(expected, None);
        }
        if let (Some(g), Some(k)) = (greedy_cover(&p), expected) {
            assert!(g.len() >= k);
            assert!(p.is_satisfied(&g));
        }
    }
}

#[test]
fn tiny_budget_reports_exhaustion() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut saw_error = false;
    for _ in 0..50 {
        let p = random_program(&mut rng, 14, 5, true);
        match (BranchAndBound { node_budget: 3 }).solve(&p) {
            Ok(w) => assert_eq!(w.map(|w| w.len()), brute(&p)),
            Err(leadrig::Error::BudgetExhausted(_)) => saw_error = true,
            Err(e) => panic!("{e}"),
        }
    }
    assert!(saw_error);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn solver_matches_enumeration(
        rows in (1usize..=12, 1usize..=5).prop_flat_map(|(items, cons)| {
            proptest::collection::vec((proptest::collection::vec(0u8..=3, items), 0u8..=12), cons)
        })
    ) {
        let weights: Vec<Vec<f64>> = rows.iter().map(|(w, _)| w.iter().map(|&x| x as f64).collect()).collect();
        let thresholds: Vec<f64> = rows.iter().map(|(_, t)| *t as f64).collect();
        let p = CoveringProgram::unnamed(weights, thresholds).unwrap();
        let got = solve_exact(&p).unwrap().map(|w| w.len());
        prop_assert_eq!(got, brute(&p));
    }
}
