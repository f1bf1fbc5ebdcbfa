//! Significance-test references: sign enumeration and a scipy table.

use qreform::stattests::{welch_t, wilcoxon_signed_rank, wilcoxon_with, Method, WilcoxonOptions};
use qreform::synthgen::Rng;

/// Two-sided exact p-value by visiting all 2^n sign assignments.
pub fn enumerate_p(deltas: &[f64]) -> f64 {
    let nz: Vec<f64> = deltas.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    if n == 0 {
        return 1.0;
    }
    // averaged ranks of |d|
    let ranks: Vec<f64> = nz
        .iter()
        .map(|d| {
            let below = nz.iter().filter(|x| x.abs() < d.abs()).count() as f64;
            let equal = nz.iter().filter(|x| x.abs() == d.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let observed: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let dev = (observed - total / 2.0).abs();
    let mut extreme = 0u64;
    for mask in 0u32..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        if (w - total / 2.0).abs() >= dev - 1e-9 {
            extreme += 1;
        }
    }
    extreme as f64 / f64::from(1u32 << n)
}

/// Random samples with n cycling through 1..=12, small integer magnitudes
/// so that ties and zeros occur. Returns the largest p-value gap.
pub fn exact_vs_enumeration(seed: u64, cases: usize) -> Result<f64, String> {
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for case in 0..cases {
        let n = 1 + case % 12;
        let deltas: Vec<f64> = (0..n)
            .map(|_| {
                let magnitude = rng.below(6) as f64 * 0.5;
                if rng.bernoulli(0.5) { magnitude } else { -magnitude }
            })
            .collect();
        let r = wilcoxon_signed_rank(&deltas);
        let expected = enumerate_p(&deltas);
        let gap = (r.p_value - expected).abs();
        if gap >= 1e-12 {
            return Err(format!("{deltas:?}: {} vs {expected}", r.p_value));
        }
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// Exact and normal-approximation paths for 20 <= n <= 25.
pub fn exact_vs_normal(seed: u64, cases: usize) -> Result<f64, String> {
    let mut rng = Rng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = 20 + rng.below(6);
        let shift = rng.next_f64() - 0.5;
        let deltas: Vec<f64> = (0..n).map(|_| rng.next_f64() * 2.0 - 1.0 + shift).collect();
        let exact = wilcoxon_signed_rank(&deltas);
        let normal = wilcoxon_with(&deltas, WilcoxonOptions { exact_max_n: 0, continuity_correction: true });
        if exact.method != Method::WilcoxonExact || normal.method != Method::WilcoxonNormal {
            return Err(format!("n = {n}: unexpected methods {:?} / {:?}", exact.method, normal.method));
        }
        worst = worst.max((exact.p_value - normal.p_value).abs());
    }
    if worst < 0.02 { Ok(worst) } else { Err(format!("paths differ by {worst}")) }
}

pub struct WelchRow {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub t: f64,
    pub p: f64,
}

/// Reference values computed with scipy.stats.ttest_ind(equal_var=False).
pub fn welch_reference() -> Vec<WelchRow> {
    let parse = |s: &str| s.split(',').map(|x| x.parse().unwrap()).collect::<Vec<f64>>();
    include_str!("../fixtures/welch_reference.tsv")
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|line| {
            let f: Vec<&str> = line.split('\t').collect();
            WelchRow {
                a: parse(f[0]),
                b: parse(f[1]),
                t: f[2].parse().unwrap(),
                p: f[4].parse().unwrap(),
            }
        })
        .collect()
}

/// p within `tol` of the reference, t to 1e-6 relative, and exact swap
/// symmetry. Returns the rows checked and the largest p gap.
pub fn welch_against_reference(tol: f64) -> Result<(usize, f64), String> {
    let rows = welch_reference();
    let mut worst = 0.0f64;
    for row in &rows {
        let r = welch_t(&row.a, &row.b).ok_or_else(|| format!("no result for {:?} / {:?}", row.a, row.b))?;
        let gap = (r.p_value - row.p).abs();
        if gap >= tol {
            return Err(format!("p {} vs {}", r.p_value, row.p));
        }
        if (r.statistic - row.t).abs() > 1e-6 * row.t.abs().max(1.0) {
            return Err(format!("t {} vs {}", r.statistic, row.t));
        }
        let swapped = welch_t(&row.b, &row.a).unwrap();
        if swapped.p_value != r.p_value || swapped.statistic != -r.statistic {
            return Err("swapping the samples changed the result".into());
        }
        worst = worst.max(gap);
    }
    Ok((rows.len(), worst))
}
