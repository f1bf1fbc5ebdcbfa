//! Welch's unequal-variance t-test and the Wilcoxon signed-rank test.
//!
//! Both tests are two-sided. The Wilcoxon test is exact for up to
//! [`EXACT_MAX_N`] nonzero differences; the null distribution is counted by
//! dynamic programming over doubled rank sums, which gives the same counts as
//! enumerating all 2^n sign assignments.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Welch,
    WilcoxonExact,
    WilcoxonNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: Method,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1.0))
}

/// Two-sided Welch t-test. `None` when either sample has fewer than two
/// values or both samples have zero variance.
pub fn welch_t(a: &[f64], b: &[f64]) -> Option<TestResult> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2.is_nan() || se2 <= 0.0 {
        return None;
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Some(TestResult {
        statistic: t,
        p_value: p,
        n_effective: a.len() + b.len(),
        method: Method::Welch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonOptions {
    /// Largest n for which the exact null distribution is used.
    pub exact_max_n: usize,
    /// Apply the 0.5 continuity correction on the normal path.
    pub continuity_correction: bool,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        WilcoxonOptions {
            exact_max_n: EXACT_MAX_N,
            continuity_correction: true,
        }
    }
}

/// Two-sided Wilcoxon signed-rank test of zero median with default options.
pub fn wilcoxon_signed_rank(deltas: &[f64]) -> TestResult {
    wilcoxon_with(deltas, WilcoxonOptions::default())
}

/// Averaged ranks of `|d|` for the nonzero deltas, doubled so they are
/// integers, together with the sign of each delta.
pub fn doubled_signed_ranks(deltas: &[f64]) -> Vec<(u64, bool)> {
    let mut nz: Vec<f64> = deltas.iter().copied().filter(|d| *d != 0.0).collect();
    nz.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    let mut out = Vec::with_capacity(nz.len());
    let mut i = 0;
    while i < nz.len() {
        let mut j = i;
        while j + 1 < nz.len() && nz[j + 1].abs() == nz[i].abs() {
            j += 1;
        }
        // ranks i+1..=j+1 averaged, doubled
        let doubled = (i + 1 + j + 1) as u64;
        for d in &nz[i..=j] {
            out.push((doubled, *d > 0.0));
        }
        i = j + 1;
    }
    out
}

pub fn wilcoxon_with(deltas: &[f64], opts: WilcoxonOptions) -> TestResult {
    let ranks = doubled_signed_ranks(deltas);
    let n = ranks.len();
    if n == 0 {
        return TestResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective: 0,
            method: Method::WilcoxonExact,
        };
    }
    let w2: u64 = ranks.iter().filter(|(_, pos)| *pos).map(|(r, _)| r).sum();
    let statistic = w2 as f64 / 2.0;
    if n <= opts.exact_max_n {
        let doubled: Vec<u64> = ranks.iter().map(|(r, _)| *r).collect();
        TestResult {
            statistic,
            p_value: exact_p(&doubled, w2),
            n_effective: n,
            method: Method::WilcoxonExact,
        }
    } else {
        TestResult {
            statistic,
            p_value: normal_p(&ranks, statistic, opts.continuity_correction),
            n_effective: n,
            method: Method::WilcoxonNormal,
        }
    }
}

/// P(|W2 − T2/2| ≥ |w2 − T2/2|) under random signs, where W2 is the doubled
/// positive rank sum and T2 the doubled total.
fn exact_p(doubled: &[u64], w2: u64) -> f64 {
    let total: u64 = doubled.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in doubled {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    // compare 2·W2 against T2 in integers
    let dev = (2 * w2 as i64 - total as i64).abs();
    let extreme: u64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| (2 * *s as i64 - total as i64).abs() >= dev)
        .map(|(_, c)| c)
        .sum();
    let p = extreme as f64 / 2f64.powi(doubled.len() as i32);
    p.min(1.0)
}

fn normal_p(ranks: &[(u64, bool)], w: f64, continuity: bool) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < ranks.len() {
        let mut j = i;
        while j + 1 < ranks.len() && ranks[j + 1].0 == ranks[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var.is_nan() || var <= 0.0 {
        return 1.0;
    }
    let correction = if continuity { 0.5 } else { 0.0 };
    let z = ((w - mean).abs() - correction).max(0.0) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.sf(z)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welch_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = welch_t(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn welch_shifted_samples() {
        let r = welch_t(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((r.statistic + 1.0).abs() < 1e-12);
        assert!((r.p_value - 0.3465935).abs() < 1e-6);
    }

    #[test]
    fn welch_near_degenerate_separation() {
        let r = welch_t(&[0.0; 4], &[10.0, 10.0, 10.0, 10.0001]).unwrap();
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn welch_not_applicable() {
        assert!(welch_t(&[1.0], &[1.0, 2.0]).is_none());
        assert!(welch_t(&[1.0, 1.0], &[2.0, 2.0]).is_none());
    }

    #[test]
    fn wilcoxon_examples() {
        let r = wilcoxon_signed_rank(&[0.0, 0.0, 0.0]);
        assert_eq!((r.p_value, r.n_effective), (1.0, 0));
        let r = wilcoxon_signed_rank(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(r.statistic, 15.0);
        assert_eq!(r.p_value, 0.0625);
        let r = wilcoxon_signed_rank(&[-1.5, 1.5, -2.0, 2.0]);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn averaged_ranks() {
        let ranks = doubled_signed_ranks(&[0.0, -2.0, 1.0, 2.0, 3.0]);
        assert_eq!(ranks, vec![(2, true), (5, false), (5, true), (8, true)]);
    }

    #[test]
    fn normal_path_selected_above_cutoff() {
        let deltas: Vec<f64> = (1..=30).map(f64::from).collect();
        let r = wilcoxon_signed_rank(&deltas);
        assert_eq!(r.method, Method::WilcoxonNormal);
        assert!(r.p_value < 1e-5);
    }
}
