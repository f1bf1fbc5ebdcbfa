//! Brute-force NDCG, NERR and AP.
//!
//! The ideal ranking is found by trying every permutation of the judged pool
//! rather than sorting, and each rank's contribution is recomputed from
//! scratch.

use qreform::ireval::{average_precision, ndcg_at_k, nerr_at_k};
use qreform::synthgen::Rng;

pub fn permutations(items: &[u8]) -> Vec<Vec<u8>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn gain(g: u8) -> f64 {
    f64::from((1u32 << g) - 1)
}

fn dcg_oracle(grades: &[u8], k: usize) -> f64 {
    let mut total = 0.0;
    for r in 1..=grades.len().min(k) {
        total += gain(grades[r - 1]) / ((r + 1) as f64).log2();
    }
    total
}

fn err_oracle(grades: &[u8], k: usize) -> f64 {
    let mut total = 0.0;
    for r in 1..=grades.len().min(k) {
        let mut continue_prob = 1.0;
        for g in &grades[..r - 1] {
            continue_prob *= 1.0 - gain(*g) / 16.0;
        }
        total += continue_prob * (gain(grades[r - 1]) / 16.0) / r as f64;
    }
    total
}

fn best_over_permutations(pool: &[u8], score: impl Fn(&[u8]) -> f64) -> f64 {
    permutations(pool).iter().map(|p| score(p)).fold(0.0, f64::max)
}

pub fn ndcg_oracle(grades: &[u8], pool: &[u8], k: usize) -> f64 {
    let ideal = best_over_permutations(pool, |p| dcg_oracle(p, k));
    if ideal == 0.0 { 0.0 } else { (dcg_oracle(grades, k) / ideal).min(1.0) }
}

pub fn nerr_oracle(grades: &[u8], pool: &[u8], k: usize) -> f64 {
    let ideal = best_over_permutations(pool, |p| err_oracle(p, k));
    if ideal == 0.0 { 0.0 } else { (err_oracle(grades, k) / ideal).min(1.0) }
}

pub fn ap_oracle(grades: &[u8], relevant: usize) -> f64 {
    if relevant == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    for r in 1..=grades.len() {
        if grades[r - 1] > 0 {
            let hits = grades[..r].iter().filter(|g| **g > 0).count();
            total += hits as f64 / r as f64;
        }
    }
    (total / relevant as f64).min(1.0)
}

/// Exact agreement of all three metrics on one ranking.
pub fn check(ranking: &[u8], pool: &[u8], k: usize) -> Result<(), String> {
    let relevant = pool.iter().filter(|g| **g > 0).count();
    let pairs = [
        ("ndcg", ndcg_at_k(ranking, pool, k), ndcg_oracle(ranking, pool, k)),
        ("nerr", nerr_at_k(ranking, pool, k), nerr_oracle(ranking, pool, k)),
        ("ap", average_precision(ranking, relevant), ap_oracle(ranking, relevant)),
    ];
    for (name, got, want) in pairs {
        if got != want {
            return Err(format!("{name} {ranking:?} pool {pool:?} @{k}: {got} vs {want}"));
        }
    }
    Ok(())
}

/// Every ranking of every judged list of length 3 over grades 0..=4 at
/// several cutoffs. Returns the number of rankings checked.
pub fn length_three_enumeration() -> Result<usize, String> {
    let mut cases = 0;
    for a in 0..=4u8 {
        for b in 0..=4u8 {
            for c in 0..=4u8 {
                let pool = [a, b, c];
                let mut sorted = pool;
                sorted.sort_unstable_by(|x, y| y.cmp(x));
                for ranking in permutations(&pool) {
                    for k in [1, 2, 3, 10] {
                        check(&ranking, &pool, k)?;
                        if ndcg_at_k(&ranking, &pool, k) > ndcg_at_k(&sorted, &pool, k)
                            || nerr_at_k(&ranking, &pool, k) > nerr_at_k(&sorted, &pool, k)
                        {
                            return Err(format!("{ranking:?} beats the ideal ordering @{k}"));
                        }
                    }
                    cases += 1;
                }
                if pool.iter().any(|g| *g > 0)
                    && (ndcg_at_k(&sorted, &pool, 10) != 1.0 || nerr_at_k(&sorted, &pool, 10) != 1.0)
                {
                    return Err(format!("ideal ordering of {pool:?} does not score 1"));
                }
            }
        }
    }
    Ok(cases)
}

/// Random judged pools of up to four documents; the ranking is a random
/// subset of the pool in random order, checked in every permutation.
pub fn random_pools(seed: u64, n: usize) -> Result<usize, String> {
    let mut rng = Rng::new(seed);
    let mut checked = 0;
    for _ in 0..n {
        let len = 1 + rng.below(4);
        let pool: Vec<u8> = (0..len).map(|_| rng.below(5) as u8).collect();
        let mut order: Vec<u8> = pool.clone();
        for i in (1..order.len()).rev() {
            order.swap(i, rng.below(i + 1));
        }
        order.truncate(1 + rng.below(len));
        let k = 1 + rng.below(5);
        for p in permutations(&order) {
            check(&p, &pool, k)?;
            checked += 1;
        }
    }
    Ok(checked)
}

/// AP on random binary lists of length up to 8.
pub fn ap_binary_lists(seed: u64, n: usize) -> Result<usize, String> {
    let mut rng = Rng::new(seed);
    for _ in 0..n {
        let len = rng.below(9);
        let grades: Vec<u8> = (0..len).map(|_| u8::from(rng.bernoulli(0.4))).collect();
        let relevant = grades.iter().filter(|g| **g > 0).count() + rng.below(3);
        let (got, want) = (average_precision(&grades, relevant), ap_oracle(&grades, relevant));
        if got != want {
            return Err(format!("ap {grades:?} / {relevant}: {got} vs {want}"));
        }
    }
    Ok(n)
}
