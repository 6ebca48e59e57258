//! Summary statistics for robustness values across many targets: ECDF,
//! namespace bootstrap, Wilcoxon signed-rank with Holm correction, Spearman
//! correlation and paired rule comparisons.
//!
//! Method choices, reported alongside results in [`METHODS`]:
//!
//! * Wilcoxon drops zero differences, gives tied magnitudes average ranks,
//!   uses the tie-corrected variance, a 0.5 continuity correction and a
//!   two-sided normal approximation.
//! * Bootstrap intervals are plain percentile intervals (linear
//!   interpolation between order statistics).
//! * Resample `b` draws from ChaCha8 seeded with the user seed and stream
//!   `b`, so results do not depend on thread scheduling or platform.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const METHODS: &str = "wilcoxon: zeros dropped, average ranks, tie-corrected variance, continuity 0.5, two-sided normal; \
bootstrap: percentile interval with linear interpolation, namespaces resampled with replacement, ChaCha8 stream per resample";

/// Step points `(x, F(x))` of the empirical CDF, one per distinct value.
pub fn ecdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::input("ECDF of an empty sample"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::input("ECDF input contains NaN"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => out.push((x, f)),
        }
    }
    out.last_mut().expect("nonempty").1 = 1.0;
    Ok(out)
}

/// Linear-interpolation quantile (type 7) of a sorted sample.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    let (a, b) = (sorted[lo], sorted[hi]);
    if lo == hi || a == b {
        a
    } else {
        a + (h - lo as f64) * (b - a)
    }
}

/// Median with the midpoint of the two middle values for even sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(quantile_sorted(&v, 0.5))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub statistic: String,
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub resamples: usize,
    pub seed: u64,
}

/// Percentile bootstrap over namespaces: each resample draws as many
/// namespaces as there are, with replacement, and pools their values.
pub fn bootstrap_ci<F>(
    name: &str,
    groups: &BTreeMap<String, Vec<f64>>,
    statistic: F,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if groups.is_empty() {
        return Err(Error::input("bootstrap needs at least one group"));
    }
    if resamples == 0 {
        return Err(Error::input("bootstrap needs at least one resample"));
    }
    let groups: Vec<&Vec<f64>> = groups.values().collect();
    let pooled: Vec<f64> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    let point = statistic(&pooled);
    let g = groups.len();
    let mut stats: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut sample = Vec::with_capacity(pooled.len());
            for _ in 0..g {
                sample.extend_from_slice(groups[rng.gen_range(0..g)]);
            }
            statistic(&sample)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    Ok(BootstrapSummary {
        statistic: name.to_string(),
        point,
        lower: quantile_sorted(&stats, 0.025),
        upper: quantile_sorted(&stats, 0.975),
        resamples,
        seed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    /// Sum of ranks of positive differences.
    pub w_plus: f64,
    /// Differences left after dropping zeros.
    pub n: usize,
    /// Every difference was zero; `p_value` is 1.
    pub degenerate: bool,
}

/// Average ranks (1-based) of `values`, ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on `x - y`.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult> {
    if x.len() != y.len() {
        return Err(Error::input(format!("paired samples of lengths {} and {}", x.len(), y.len())));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("paired differences must be finite"));
    }
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult { p_value: 1.0, w_plus: 0.0, n: 0, degenerate: true });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    // tie correction: sum of t^3 - t over groups of equal |d|
    let mut sorted = abs.clone();
    sorted.sort_by(f64::total_cmp);
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        ties += t * t * t - t;
        i += j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - ties / 48.0;
    if var <= 0.0 {
        return Ok(WilcoxonResult { p_value: 1.0, w_plus, n, degenerate: true });
    }
    let dev = ((w_plus - mean).abs() - 0.5).max(0.0);
    let z = dev / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * (1.0 - normal.cdf(z))).min(1.0);
    Ok(WilcoxonResult { p_value: p, w_plus, n, degenerate: false })
}

/// Holm step-down adjustment, returned in input order.
pub fn holm_adjust(pvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(p) = pvals.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::input(format!("p-value {p} outside [0, 1]")));
    }
    let m = pvals.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; m];
    let mut running: f64 = 0.0;
    for (j, &i) in idx.iter().enumerate() {
        running = running.max(((m - j) as f64 * pvals[i]).min(1.0));
        out[i] = running;
    }
    Ok(out)
}

/// Spearman's rho with average ranks; `None` when either side is constant.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::input("Spearman correlation needs two equal-length samples of size at least 2"));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::input("Spearman input contains NaN"));
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub first: String,
    pub second: String,
    /// Median of `k_first - k_second` over targets finite under both.
    pub median_difference: Option<f64>,
    /// The same in percentage points of `m`.
    pub median_difference_pp: Option<f64>,
    pub p_value: f64,
    pub p_adjusted: f64,
    /// Targets used.
    pub n: usize,
    /// Targets dropped because either value was infeasible.
    pub excluded: usize,
    /// Fewer than two usable targets, or no nonzero difference.
    pub degenerate: bool,
}

/// Paired comparisons of robustness values between every pair of rules, in
/// the order the rules are given. `values[r][i]` is rule `r` on target `i`,
/// `None` when infeasible.
pub fn paired_rule_comparison(
    rules: &[String],
    values: &[Vec<Option<usize>>],
    m: usize,
) -> Result<Vec<PairedTestResult>> {
    if rules.len() != values.len() {
        return Err(Error::input("one value column per rule"));
    }
    if let Some(v) = values.iter().find(|v| v.len() != values[0].len()) {
        return Err(Error::input(format!("rule columns of lengths {} and {}", values[0].len(), v.len())));
    }
    let mut out = Vec::new();
    for a in 0..rules.len() {
        for b in a + 1..rules.len() {
            let (mut xs, mut ys) = (Vec::new(), Vec::new());
            let mut excluded = 0;
            for (x, y) in values[a].iter().zip(&values[b]) {
                match (x, y) {
                    (Some(x), Some(y)) => {
                        xs.push(*x as f64);
                        ys.push(*y as f64);
                    }
                    _ => excluded += 1,
                }
            }
            let diffs: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x - y).collect();
            let med = median(&diffs);
            let test = wilcoxon_signed_rank(&xs, &ys)?;
            out.push(PairedTestResult {
                first: rules[a].clone(),
                second: rules[b].clone(),
                median_difference: med,
                median_difference_pp: med.filter(|_| m > 0).map(|d| 100.0 * d / m as f64),
                p_value: test.p_value,
                p_adjusted: test.p_value,
                n: xs.len(),
                excluded,
                degenerate: xs.len() < 2 || test.degenerate,
            });
        }
    }
    let raw: Vec<f64> = out.iter().map(|r| r.p_value).collect();
    for (r, adj) in out.iter_mut().zip(holm_adjust(&raw)?) {
        r.p_adjusted = adj;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_examples() {
        assert_eq!(ecdf(&[1.0, 2.0, 2.0, 5.0]).unwrap(), vec![(1.0, 0.25), (2.0, 0.75), (5.0, 1.0)]);
        assert_eq!(ecdf(&[3.0]).unwrap(), vec![(3.0, 1.0)]);
        assert_eq!(ecdf(&[4.0; 7]).unwrap(), vec![(4.0, 1.0)]);
        assert!(ecdf(&[]).is_err());
        assert_eq!(ecdf(&[1.0, f64::INFINITY]).unwrap(), vec![(1.0, 0.5), (f64::INFINITY, 1.0)]);
    }

    #[test]
    fn holm_examples() {
        let adj = holm_adjust(&[0.01, 0.04, 0.03]).unwrap();
        for (a, e) in adj.iter().zip([0.03, 0.06, 0.06]) {
            assert!((a - e).abs() < 1e-15, "{adj:?}");
        }
        assert_eq!(holm_adjust(&[0.2]).unwrap(), vec![0.2]);
        assert_eq!(holm_adjust(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert!(holm_adjust(&[1.5]).is_err());
        assert!(holm_adjust(&[-0.1]).is_err());
    }

    #[test]
    fn spearman_examples() {
        let r = spearman_rho(&[1.0, 2.0, 3.0], &[2.0, 1.0, 3.0]).unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-12);
        assert_eq!(spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
        assert_eq!(spearman_rho(&[1.0, 5.0, 9.0], &[1.0, 5.0, 9.0]).unwrap(), Some(1.0));
        assert_eq!(spearman_rho(&[1.0, 1.0], &[1.0, 2.0]).unwrap(), None);
        assert!(spearman_rho(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn wilcoxon_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let r = wilcoxon_signed_rank(&x, &[0.0; 6]).unwrap();
        assert_eq!(r.w_plus, 21.0);
        // z = (21 - 10.5 - 0.5) / sqrt(22.75)
        let z: f64 = 10.0 / 22.75f64.sqrt();
        let expected = 2.0 * (1.0 - Normal::new(0.0, 1.0).unwrap().cdf(z));
        assert!((r.p_value - expected).abs() < 1e-12);
        assert!((r.p_value - 0.036).abs() < 0.005, "{}", r.p_value);

        let same = wilcoxon_signed_rank(&x, &x).unwrap();
        assert!(same.degenerate);
        assert_eq!(same.p_value, 1.0);

        let sym = wilcoxon_signed_rank(&[1.0, -1.0], &[0.0, 0.0]).unwrap();
        assert!(sym.p_value >= 0.99);
        assert!(wilcoxon_signed_rank(&[1.0], &[]).is_err());
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn bootstrap_examples() {
        let one: BTreeMap<String, Vec<f64>> = [("a".to_string(), vec![1.0, 2.0, 6.0])].into();
        let s = bootstrap_ci("mean", &one, mean, 200, 7).unwrap();
        assert_eq!((s.lower, s.point, s.upper), (3.0, 3.0, 3.0));

        let two: BTreeMap<String, Vec<f64>> = [("a".to_string(), vec![0.0]), ("b".to_string(), vec![1.0])].into();
        let c = bootstrap_ci("const", &two, |_| 7.0, 100, 1).unwrap();
        assert_eq!((c.lower, c.upper), (7.0, 7.0));

        let s = bootstrap_ci("mean", &two, mean, 10_000, 42).unwrap();
        assert_eq!(s.point, 0.5);
        assert_eq!((s.lower, s.upper), (0.0, 1.0));

        assert!(bootstrap_ci("mean", &BTreeMap::new(), mean, 10, 1).is_err());
        assert!(bootstrap_ci("mean", &two, mean, 0, 1).is_err());
    }

    #[test]
    fn bootstrap_is_reproducible() {
        let g: BTreeMap<String, Vec<f64>> = (0..5).map(|i| (format!("n{i}"), vec![i as f64, (i * i) as f64])).collect();
        let a = bootstrap_ci("mean", &g, mean, 500, 9).unwrap();
        let b = bootstrap_ci("mean", &g, mean, 500, 9).unwrap();
        assert_eq!(a.lower.to_bits(), b.lower.to_bits());
        assert_eq!(a.upper.to_bits(), b.upper.to_bits());
    }

    #[test]
    fn paired_examples() {
        let names: Vec<String> = ["x", "y"].iter().map(|s| s.to_string()).collect();
        let same = vec![vec![Some(1), Some(2), Some(3)]; 2];
        let r = paired_rule_comparison(&names, &same, 10).unwrap();
        assert_eq!(r[0].median_difference, Some(0.0));
        assert!(r[0].degenerate);

        let offset = vec![vec![Some(2), Some(3), Some(4), None], vec![Some(1), Some(2), Some(3), Some(0)]];
        let r = paired_rule_comparison(&names, &offset, 10).unwrap();
        assert_eq!(r[0].median_difference, Some(1.0));
        assert_eq!(r[0].median_difference_pp, Some(10.0));
        assert_eq!(r[0].excluded, 1);
        assert_eq!(r[0].n, 3);

        let four: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let vals = vec![
            vec![Some(1), Some(5), Some(2)],
            vec![Some(3), Some(1), Some(2)],
            vec![Some(0), Some(0), Some(9)],
            vec![Some(4), Some(4), Some(4)],
        ];
        let r = paired_rule_comparison(&four, &vals, 3).unwrap();
        assert_eq!(r.len(), 6);
        assert!(r.iter().all(|p| p.p_adjusted >= p.p_value && p.p_adjusted <= 1.0));
    }
}
