//! Exact maximization of μ over progression-free subsets of `[1, N]`.
//!
//! Both methods compare reciprocal sums exactly by scaling every `1/k` to
//! the integer weight `L/k` with `L = lcm(1, ..., N)`; two subsets compare
//! the same way under the weights as under their rational sums.
//!
//! Ties in μ are broken toward the lexicographically smallest sorted
//! element list.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::generate_up_to;
use crate::measure::{mu, ReciprocalSum};
use crate::progression::validate_p;
use crate::set::IntegerSet;

pub const MAX_EXHAUSTIVE_N: u64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Exhaustive,
    BranchAndBound,
}

impl fmt::Display for SearchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchMethod::Exhaustive => "exhaustive",
            SearchMethod::BranchAndBound => "branch_and_bound",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub n: u64,
    pub p: usize,
    pub best_set: IntegerSet,
    pub best_mu: ReciprocalSum,
    pub nodes_explored: u64,
    pub method: SearchMethod,
    pub proven_optimal: bool,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    /// Split the exhaustive enumeration across the rayon pool. The result is
    /// identical to the sequential run.
    pub parallel: bool,
}

/// `L = lcm(1..=n)` and the weights `L/k`, if `n·L` fits in a `u128`.
fn scaled_weights(n: u64) -> Option<(u128, Vec<u128>)> {
    let mut l: u128 = 1;
    for k in 1..=n as u128 {
        l = l.checked_mul(k / l.gcd(&k))?;
    }
    l.checked_mul(n.max(1) as u128)?;
    Some((l, (1..=n as u128).map(|k| l / k).collect()))
}

/// Largest `N` for which branch and bound can run: elements fit a `u128`
/// mask and `N·lcm(1..N)` fits a `u128`.
pub fn max_branch_and_bound_n() -> u64 {
    (1..=127).take_while(|&n| scaled_weights(n).is_some()).last().unwrap_or(0)
}

/// Is the sorted list of `a` lexicographically below that of `b`?
fn lex_less(a: u128, b: u128) -> bool {
    let diff = a ^ b;
    if diff == 0 {
        return false;
    }
    let x = diff.trailing_zeros();
    let above = if x >= 127 { 0 } else { !0u128 << (x + 1) };
    if a >> x & 1 == 1 {
        // b lacks x: b is smaller only if it stops here
        b & above != 0
    } else {
        a & above == 0
    }
}

/// Bit `k - 1` stands for the integer `k`.
fn mask_to_set(mask: u128) -> IntegerSet {
    IntegerSet::from_sorted_unchecked((0..128u64).filter(|&b| mask >> b & 1 == 1).map(|b| b + 1).collect())
}

fn set_to_mask(set: &IntegerSet) -> u128 {
    set.iter().fold(0u128, |m, e| m | 1 << (e - 1))
}

fn weight_of(mask: u128, weights: &[u128]) -> u128 {
    let mut m = mask;
    let mut w = 0;
    while m != 0 {
        w += weights[m.trailing_zeros() as usize];
        m &= m - 1;
    }
    w
}

fn better(a: (u128, u128), b: (u128, u128)) -> bool {
    // (weight, mask)
    match a.0.cmp(&b.0) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => lex_less(a.1, b.1),
    }
}

pub fn max_mu_subset(n: u64, p: usize, method: SearchMethod) -> Result<SearchResult> {
    max_mu_subset_with(n, p, method, SearchOptions::default())
}

pub fn max_mu_subset_with(n: u64, p: usize, method: SearchMethod, opts: SearchOptions) -> Result<SearchResult> {
    validate_p(p)?;
    if n == 0 {
        return Err(Error::InvalidCount);
    }
    let (mask, weight, l, nodes) = match method {
        SearchMethod::Exhaustive => {
            if n > MAX_EXHAUSTIVE_N {
                return Err(Error::TooLargeForExhaustive { n, max: MAX_EXHAUSTIVE_N });
            }
            let (l, weights) = scaled_weights(n).expect("lcm(1..25) fits");
            let (mask, weight) = exhaustive(n, p, &weights, opts.parallel);
            (mask, weight, l, 1u64 << n)
        }
        SearchMethod::BranchAndBound => {
            let max = max_branch_and_bound_n();
            let (l, weights) = match scaled_weights(n) {
                Some(w) if n <= max => w,
                _ => return Err(Error::TooLargeForBranchAndBound { n, max }),
            };
            let greedy = generate_up_to(p, n)?;
            let mut bnb = BranchAndBound::new(n, p, weights, set_to_mask(&greedy));
            bnb.explore(1, 0, 0);
            (bnb.best_mask, bnb.best_weight, l, bnb.nodes)
        }
    };
    let best_mu = BigRational::new(BigInt::from(weight), BigInt::from(l));
    Ok(SearchResult {
        n,
        p,
        best_set: mask_to_set(mask),
        best_mu: ReciprocalSum::from_exact(best_mu),
        nodes_explored: nodes,
        method,
        proven_optimal: true,
    })
}

/// Every `p`-term progression inside `[1, n]` as a bit mask.
fn progression_masks(n: u64, p: usize) -> Vec<u128> {
    let span = p as u64 - 1;
    let mut out = Vec::new();
    for d in 1..=n.saturating_sub(1) / span.max(1) {
        for start in 1..=n.saturating_sub(span * d) {
            out.push((0..p as u64).fold(0u128, |m, k| m | 1 << (start + k * d - 1)));
        }
    }
    out
}

/// Enumerates all `2^n` subsets.
fn exhaustive(n: u64, p: usize, weights: &[u128], parallel: bool) -> (u128, u128) {
    let aps = progression_masks(n, p);
    let scan = |range: std::ops::Range<u64>| {
        let mut best = (0u128, 0u128);
        for m in range {
            let mask = m as u128;
            if aps.iter().any(|&ap| ap & !mask == 0) {
                continue;
            }
            let cand = (weight_of(mask, weights), mask);
            if better(cand, best) {
                best = cand;
            }
        }
        best
    };
    let total = 1u64 << n;
    let (w, m) = if parallel && n > 12 {
        let chunk = 1u64 << 12;
        (0..total / chunk)
            .into_par_iter()
            .map(|c| scan(c * chunk..(c + 1) * chunk))
            .reduce(|| (0, 0), |a, b| if better(b, a) { b } else { a })
    } else {
        scan(0..total)
    };
    (m, w)
}

struct BranchAndBound {
    n: u64,
    p: usize,
    weights: Vec<u128>,
    /// `suffix[k]` = total weight of `k..=n` (1-based `k`).
    suffix: Vec<u128>,
    best_mask: u128,
    best_weight: u128,
    /// The incumbent was reached by the search itself (not the seed), so any
    /// later leaf of equal weight is lexicographically larger.
    best_from_search: bool,
    nodes: u64,
}

impl BranchAndBound {
    fn new(n: u64, p: usize, weights: Vec<u128>, seed: u128) -> Self {
        let mut suffix = vec![0u128; n as usize + 2];
        for k in (1..=n as usize).rev() {
            suffix[k] = suffix[k + 1] + weights[k - 1];
        }
        let best_weight = weight_of(seed, &weights);
        BranchAndBound { n, p, weights, suffix, best_mask: seed, best_weight, best_from_search: false, nodes: 0 }
    }

    fn creates_ap(&self, mask: u128, x: u64) -> bool {
        let steps = self.p as u64 - 1;
        (1..=(x - 1) / steps).any(|d| (1..=steps).all(|k| mask >> (x - k * d - 1) & 1 == 1))
    }

    /// Decides `x..=n` given the choices so far (`mask`, total `weight`).
    fn explore(&mut self, x: u64, mask: u128, weight: u128) {
        self.nodes += 1;
        let bound = weight + self.suffix[x as usize];
        if bound < self.best_weight || (bound == self.best_weight && self.best_from_search) {
            return;
        }
        if x > self.n {
            if weight > self.best_weight || (weight == self.best_weight && !lex_less(self.best_mask, mask)) {
                self.best_weight = weight;
                self.best_mask = mask;
                self.best_from_search = true;
            }
            return;
        }
        if !self.creates_ap(mask, x) {
            self.explore(x + 1, mask | 1 << (x - 1), weight + self.weights[x as usize - 1]);
        }
        self.explore(x + 1, mask, weight);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GreedyComparison {
    pub n: u64,
    pub p: usize,
    pub greedy_set: IntegerSet,
    pub greedy_mu: ReciprocalSum,
    pub optimal: SearchResult,
    /// `μ(optimal) - μ(greedy)`, never negative.
    pub difference: ReciprocalSum,
    pub greedy_is_optimal: bool,
}

/// Greedy terms up to `N` against the exact optimum over `[1, N]`.
pub fn greedy_vs_optimal(n: u64, p: usize) -> Result<GreedyComparison> {
    let optimal = max_mu_subset(n, p, SearchMethod::BranchAndBound)?;
    let greedy_set = generate_up_to(p, n)?;
    let greedy_mu = mu(&greedy_set);
    let difference = optimal.best_mu.exact()? - greedy_mu.exact()?;
    Ok(GreedyComparison {
        n,
        p,
        greedy_is_optimal: greedy_set == optimal.best_set,
        greedy_set,
        greedy_mu,
        optimal,
        difference: ReciprocalSum::from_exact(difference),
    })
}
