//! Seeded random instances for self-checks and tests.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::matrix::{GainCaps, ScoreMatrix};

fn hundredths(c: u32) -> f64 {
    c as f64 / 100.0
}

/// Scores drawn uniformly from `{0.00, 0.01, ..., 1.00}`.
pub fn rounded_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> ScoreMatrix {
    let rows = (0..n)
        .map(|_| (0..m).map(|_| hundredths(rng.gen_range(0..=100))).collect())
        .collect();
    ScoreMatrix::from_rows(rows).expect("generated scores are valid")
}

/// Scores distinct within every column and below 1, so every task ranking
/// is strict and score-to-1 training puts the target strictly first.
pub fn distinct_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> ScoreMatrix {
    assert!(n <= 100, "at most 100 distinct hundredths below 1");
    let pool: Vec<u32> = (0..100).collect();
    let mut rows = vec![vec![0.0; m]; n];
    #[allow(clippy::needless_range_loop)]
    for j in 0..m {
        for (row, &c) in rows.iter_mut().zip(pool.choose_multiple(rng, n)) {
            row[j] = hundredths(c);
        }
    }
    ScoreMatrix::from_rows(rows).expect("generated scores are valid")
}

/// Per-task caps in hundredths, each at most the target's remaining room.
pub fn restricted_caps<R: Rng + ?Sized>(rng: &mut R, matrix: &ScoreMatrix, target: usize) -> GainCaps {
    let caps = matrix
        .row(target)
        .iter()
        .map(|&s| {
            let room = 1.0 - s;
            let top = (room * 100.0).round() as u32;
            hundredths(rng.gen_range(0..=top)).min(room)
        })
        .collect();
    GainCaps::new(matrix, target, caps).expect("caps within room")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_respect_their_contracts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mx = distinct_matrix(&mut rng, 5, 7);
            for j in 0..7 {
                let mut col: Vec<f64> = mx.column(j).collect();
                assert!(col.iter().all(|&s| s < 1.0));
                col.sort_by(f64::total_cmp);
                col.dedup();
                assert_eq!(col.len(), 5);
            }
            let mx = rounded_matrix(&mut rng, 4, 3);
            let caps = restricted_caps(&mut rng, &mx, 1);
            caps.validate(&mx, 1).unwrap();
        }
    }

    #[test]
    fn same_seed_same_stream() {
        let a = rounded_matrix(&mut ChaCha8Rng::seed_from_u64(9), 3, 4);
        let b = rounded_matrix(&mut ChaCha8Rng::seed_from_u64(9), 3, 4);
        assert_eq!(a, b);
    }
}
