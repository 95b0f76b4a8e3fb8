//! Reference implementations shared by the integration tests. None of these
//! touch the library; they are deliberately naive.

#![allow(dead_code)]

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;

/// Greedy `p`-AP-free sequence by trial: a candidate `x` is rejected when
/// some earlier term `y` gives `x - d, ..., x - (p-1)d` all present.
pub fn brute_force_greedy(p: usize, n: usize) -> Vec<u64> {
    let mut terms: Vec<u64> = Vec::new();
    let mut present: HashSet<u64> = HashSet::new();
    let mut x = 1u64;
    while terms.len() < n {
        let blocked = terms.iter().any(|&y| {
            let d = x - y;
            (1..p as u64).all(|k| k * d < x && present.contains(&(x - k * d)))
        });
        if !blocked {
            terms.push(x);
            present.insert(x);
        }
        x += 1;
    }
    terms
}

/// `1 +` (binary digits of `n - 1` read in base 3).
pub fn base_three_term(n: u64) -> u64 {
    let mut m = n - 1;
    let (mut value, mut place) = (0u64, 1u64);
    while m > 0 {
        value += (m & 1) * place;
        m >>= 1;
        place *= 3;
    }
    value + 1
}

/// Whether `set` contains a `p`-term progression, by trying every start and
/// every difference.
pub fn has_ap(set: &[u64], p: usize) -> bool {
    let present: HashSet<u64> = set.iter().copied().collect();
    let max = set.iter().copied().max().unwrap_or(0);
    set.iter().any(|&a| {
        (1..=max)
            .take_while(|d| a + (p as u64 - 1) * d <= max)
            .any(|d| (0..p as u64).all(|k| present.contains(&(a + k * d))))
    })
}

pub fn reciprocal_sum(set: &[u64]) -> BigRational {
    set.iter().fold(BigRational::from_integer(BigInt::from(0)), |acc, &x| {
        acc + BigRational::new(BigInt::from(1), BigInt::from(x))
    })
}

/// Maximum of `μ` over `p`-AP-free subsets of `[1, n]` by plain
/// enumeration, lexicographically smallest set on ties.
pub fn best_subset(n: u64, p: usize) -> (Vec<u64>, BigRational) {
    let mut best: (Vec<u64>, BigRational) = (Vec::new(), BigRational::from_integer(BigInt::from(0)));
    for mask in 0u64..(1 << n) {
        let set: Vec<u64> = (1..=n).filter(|k| mask >> (k - 1) & 1 == 1).collect();
        if has_ap(&set, p) {
            continue;
        }
        let mu = reciprocal_sum(&set);
        if mu > best.1 || (mu == best.1 && set < best.0) {
            best = (set, mu);
        }
    }
    best
}
