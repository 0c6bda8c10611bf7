//! One-sample and two-sample t-tests, the Wilcoxon rank-sum test, the OLS
//! slope test and significance marks. All tests are two-sided.

pub mod dist;

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::{Error, Result};
use dist::{normal_two_sided, student_t_two_sided};

/// Smallest p-value reported.
pub const P_FLOOR: f64 = 1e-300;

/// Largest total sample size for which the rank-sum p-value is computed exactly.
pub const RANK_SUM_EXACT_MAX: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    /// t for the t-tests and the slope test, z for the rank-sum test.
    pub statistic: f64,
    pub p_value: f64,
    /// Sample mean, mean difference, rank sum of the first group or slope.
    pub estimate: f64,
    pub n: usize,
    pub n2: Option<usize>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn all_equal(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

pub fn one_sample_t(samples: &[f64], mu0: f64) -> Result<TestResult> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::domain(format!("t-test needs n >= 2, got {n}")));
    }
    if all_equal(samples) {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let m = mean(samples);
    let var = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = (m - mu0) / (var / n as f64).sqrt();
    Ok(TestResult {
        statistic: t,
        p_value: student_t_two_sided(t, (n - 1) as f64).max(P_FLOOR),
        estimate: m,
        n,
        n2: None,
    })
}

/// Pooled-variance two-sample t-test of `mean(b) - mean(a) = 0`.
pub fn two_sample_t(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 || n1 + n2 < 3 {
        return Err(Error::domain(format!(
            "two-sample t-test needs nonempty groups with n1 + n2 >= 3, got ({n1}, {n2})"
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let ss = a.iter().map(|x| (x - ma).powi(2)).sum::<f64>()
        + b.iter().map(|x| (x - mb).powi(2)).sum::<f64>();
    let df = (n1 + n2 - 2) as f64;
    let se = (ss / df * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
    let diff = mb - ma;
    if se == 0.0 {
        return Err(Error::Degenerate("both groups have zero variance".into()));
    }
    let t = diff / se;
    Ok(TestResult {
        statistic: t,
        p_value: student_t_two_sided(t, df).max(P_FLOOR),
        estimate: diff,
        n: n1,
        n2: Some(n2),
    })
}

/// Midranks of the pooled sample (1-based), plus the tie-size list.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..pooled.len()).collect();
    idx.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && pooled[idx[end]] == pooled[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

struct RankSumParts {
    w: f64,
    mean: f64,
    sd: f64,
    ranks: Vec<f64>,
    n1: usize,
    n2: usize,
}

fn rank_sum_parts(a: &[f64], b: &[f64]) -> Result<RankSumParts> {
    let (n1, n2) = (a.len(), b.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::domain("rank-sum test needs two nonempty groups"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::domain("rank-sum test got NaN"));
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let n = (n1 + n2) as f64;
    let w: f64 = ranks[..n1].iter().sum();
    let mean = n1 as f64 * (n + 1.0) / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = if n > 1.0 {
        n1 as f64 * n2 as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    Ok(RankSumParts {
        w,
        mean,
        sd: var.max(0.0).sqrt(),
        ranks,
        n1,
        n2,
    })
}

/// Wilcoxon rank-sum test; exact for `n1 + n2 <= 12`, normal approximation otherwise.
pub fn rank_sum(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.len() + b.len() <= RANK_SUM_EXACT_MAX {
        rank_sum_exact(a, b)
    } else {
        rank_sum_normal(a, b)
    }
}

/// Exact null distribution of the rank sum by enumerating every choice of
/// `n1` positions, counted with a subset-sum table over doubled midranks.
pub fn rank_sum_exact(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let parts = rank_sum_parts(a, b)?;
    if parts.n1 + parts.n2 > 40 {
        return Err(Error::domain("exact rank-sum limited to 40 observations"));
    }
    // Doubled midranks are integers.
    let doubled: Vec<usize> = parts.ranks.iter().map(|r| (2.0 * r) as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let k = parts.n1;
    // table[j][s] = number of j-subsets with doubled sum s
    let mut table = vec![vec![0u128; max_sum + 1]; k + 1];
    table[0][0] = 1;
    for &r in &doubled {
        for j in (1..=k).rev() {
            for s in (r..=max_sum).rev() {
                let add = table[j - 1][s - r];
                if add != 0 {
                    table[j][s] += add;
                }
            }
        }
    }
    let total: u128 = table[k].iter().sum();
    let mean2 = (2.0 * parts.mean).round() as i64;
    let dev_obs = ((2.0 * parts.w).round() as i64 - mean2).abs();
    let extreme: u128 = table[k]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - mean2).abs() >= dev_obs)
        .map(|(_, c)| *c)
        .sum();
    let p = extreme as f64 / total as f64;
    let z = if parts.sd > 0.0 {
        (parts.w - parts.mean) / parts.sd
    } else {
        0.0
    };
    Ok(TestResult {
        statistic: z,
        p_value: p,
        estimate: parts.w,
        n: parts.n1,
        n2: Some(parts.n2),
    })
}

/// Normal approximation with tie and continuity corrections.
pub fn rank_sum_normal(a: &[f64], b: &[f64]) -> Result<TestResult> {
    let parts = rank_sum_parts(a, b)?;
    let dev = parts.w - parts.mean;
    let z = if parts.sd > 0.0 && dev.abs() > 0.5 {
        dev.signum() * (dev.abs() - 0.5) / parts.sd
    } else {
        0.0
    };
    Ok(TestResult {
        statistic: z,
        p_value: normal_two_sided(z).max(P_FLOOR),
        estimate: parts.w,
        n: parts.n1,
        n2: Some(parts.n2),
    })
}

/// Least-squares slope of `y` on `x` with a t-test for slope = 0 (n - 2 df).
pub fn ols_slope(x: &[f64], y: &[f64]) -> Result<TestResult> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::domain(format!("x has {n} values, y has {}", y.len())));
    }
    if n < 3 {
        return Err(Error::domain(format!("slope test needs n >= 3, got {n}")));
    }
    if all_equal(x) {
        return Err(Error::domain("x is constant"));
    }
    if all_equal(y) {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            estimate: 0.0,
            n,
            n2: None,
        });
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let se = (rss / (n - 2) as f64 / sxx).sqrt();
    let (t, p) = if se == 0.0 {
        if slope == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::MAX.copysign(slope), P_FLOOR)
        }
    } else {
        let t = slope / se;
        (t, student_t_two_sided(t, (n - 2) as f64).max(P_FLOOR))
    };
    Ok(TestResult {
        statistic: t,
        p_value: p,
        estimate: slope,
        n,
        n2: None,
    })
}

/// Significance mark for thresholds p < 0.2, 0.1, 0.05, 0.01.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SignificanceMark {
    #[serde(rename = "")]
    None,
    #[serde(rename = "·")]
    Dot,
    #[serde(rename = "*")]
    One,
    #[serde(rename = "**")]
    Two,
    #[serde(rename = "***")]
    Three,
}

impl SignificanceMark {
    pub fn as_str(self) -> &'static str {
        match self {
            SignificanceMark::None => "",
            SignificanceMark::Dot => "·",
            SignificanceMark::One => "*",
            SignificanceMark::Two => "**",
            SignificanceMark::Three => "***",
        }
    }
}

impl fmt::Display for SignificanceMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn stars(p: f64) -> Result<SignificanceMark> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p-value {p} outside [0, 1]")));
    }
    Ok(if p < 0.01 {
        SignificanceMark::Three
    } else if p < 0.05 {
        SignificanceMark::Two
    } else if p < 0.1 {
        SignificanceMark::One
    } else if p < 0.2 {
        SignificanceMark::Dot
    } else {
        SignificanceMark::None
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_sample_examples() {
        let r = one_sample_t(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.0).unwrap();
        assert!((r.statistic - 4.242_640_687_119_285).abs() < 1e-12);
        assert!((r.p_value - 0.0132).abs() < 1e-4, "{}", r.p_value);
        let r = one_sample_t(&[-1.0, 1.0, -1.0, 1.0], 0.0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(matches!(
            one_sample_t(&[0.1, 0.1, 0.1], 0.0),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(one_sample_t(&[1.0], 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn two_sample_identical_groups() {
        let a = [1.0, 2.0, 4.0, 7.0];
        let r = two_sample_t(&a, &a).unwrap();
        assert_eq!(r.estimate, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn two_sample_reference() {
        // groups (1,2,3) vs (4,5,6): pooled sd 1, t = 3 / sqrt(2/3)
        let r = two_sample_t(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((r.statistic - 3.674_234_614_174_767).abs() < 1e-12);
        assert!((r.p_value - 0.021_311_641_128_756_5).abs() < 1e-9, "{}", r.p_value);
    }

    #[test]
    fn rank_sum_examples() {
        let r = rank_sum(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.estimate, 3.0);

        let a: Vec<f64> = (0..20).map(|i| (i * 7 % 13) as f64).collect();
        let r = rank_sum(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!(r.p_value >= 0.99);

        let b: Vec<f64> = (0..15).map(|i| (i * 5 % 11) as f64 + 0.5).collect();
        let ab = rank_sum(&a, &b).unwrap();
        let ba = rank_sum(&b, &a).unwrap();
        assert_eq!(ab.p_value, ba.p_value);
        assert_eq!(ab.statistic, -ba.statistic);
        assert!(rank_sum(&[], &[1.0]).is_err());
    }

    #[test]
    fn rank_sum_with_ties_exact() {
        // a = (1,1), b = (1,2): pooled midranks (2,2,2,4); all 6 pairs give W in {4,4,4,6,6,6}
        let r = rank_sum_exact(&[1.0, 1.0], &[1.0, 2.0]).unwrap();
        assert_eq!(r.estimate, 4.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ols_examples() {
        let r = ols_slope(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((r.estimate - 2.0).abs() < 1e-12);
        assert!(r.p_value <= 1e-10);
        assert!(r.p_value >= P_FLOOR);
        let r = ols_slope(&[1.0, 2.0, 3.0, 4.0], &[0.3; 4]).unwrap();
        assert_eq!((r.estimate, r.p_value), (0.0, 1.0));
        assert!(ols_slope(&[1.0; 3], &[1.0, 2.0, 3.0]).is_err());
        assert!(ols_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ols_reference() {
        // x = 1..5, y = (2, 4, 5, 4, 5): slope 0.6, se = sqrt(2.4/3/10)
        let r = ols_slope(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]).unwrap();
        assert!((r.estimate - 0.6).abs() < 1e-12);
        let t = 0.6 / (0.08f64).sqrt();
        assert!((r.statistic - t).abs() < 1e-12);
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(0.03).unwrap(), SignificanceMark::Two);
        assert_eq!(stars(0.005).unwrap(), SignificanceMark::Three);
        assert_eq!(stars(0.2).unwrap(), SignificanceMark::None);
        assert_eq!(stars(0.1).unwrap(), SignificanceMark::Dot);
        assert_eq!(stars(0.0999).unwrap(), SignificanceMark::One);
        assert!(stars(1.5).is_err());
        assert!(stars(-0.1).is_err());
    }

    proptest! {
        #[test]
        fn t_shift_invariance(xs in proptest::collection::vec(-10.0f64..10.0, 3..30), c in -100.0f64..100.0) {
            prop_assume!(!all_equal(&xs));
            let base = one_sample_t(&xs, 0.5).unwrap();
            let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
            let moved = one_sample_t(&shifted, 0.5 + c).unwrap();
            prop_assert!((base.statistic - moved.statistic).abs() <= 1e-12 * base.statistic.abs().max(1.0) * 1e2);
            prop_assert!((base.p_value - moved.p_value).abs() <= 1e-10);
        }

        #[test]
        fn rank_sum_monotone_invariance(
            a in proptest::collection::vec(-5.0f64..5.0, 1..12),
            b in proptest::collection::vec(-5.0f64..5.0, 1..12),
        ) {
            let f = |v: &f64| v.exp() * 3.0 + 1.0;
            let ta: Vec<f64> = a.iter().map(f).collect();
            let tb: Vec<f64> = b.iter().map(f).collect();
            let r0 = rank_sum(&a, &b).unwrap();
            let r1 = rank_sum(&ta, &tb).unwrap();
            prop_assert_eq!(r0.p_value, r1.p_value);
        }

        #[test]
        fn rank_sum_paths_agree(
            a in proptest::collection::hash_set(0u32..10_000, 12),
        ) {
            let pooled: Vec<f64> = a.into_iter().map(f64::from).collect();
            let (x, y) = pooled.split_at(6);
            let exact = rank_sum_exact(x, y).unwrap();
            let approx = rank_sum_normal(x, y).unwrap();
            prop_assert!((exact.p_value - approx.p_value).abs() <= 0.02,
                "exact {} approx {}", exact.p_value, approx.p_value);
        }
    }
}
