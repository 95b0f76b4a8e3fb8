//! Finite constructions on progression-free sets.
//!
//! * The amplifier `B = A ⊔ 2N·E` (with `N = max A`): joining a scaled copy
//!   of a progression-free set `E` far enough above `A` keeps the union
//!   progression-free and adds `μ(E)/2N` to the reciprocal sum.
//! * The bootstrap chain `A_0 ⊂ A_1 ⊂ ...` repeating the amplifier, which
//!   halts as soon as no amplifier fits in the term budget.
//! * The four-way interval partition of a set lying above `2M` into classes
//!   `R_j = R ∩ ⋃_i [(j+1)·3^i·M, (j+2)·3^i·M)`, the pigeonhole choice of
//!   a heavy class, and its join with a base set bounded by `M`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::GreedyGenerator;
use crate::measure::{self, harmonic_ceiling, mu, HarmonicCeiling, ReciprocalSum, DEFAULT_EXACT_CAP};
use crate::progression::{find_ap_witness, validate_p};
use crate::set::IntegerSet;

/// `{c·e : e ∈ set}`.
pub fn scale_set(set: &IntegerSet, c: u64) -> Result<IntegerSet> {
    set.affine(c, 0)
}

fn require_ap_free(set: &IntegerSet, p: usize, which: &'static str) -> Result<()> {
    match find_ap_witness(set, p)? {
        Some(witness) => Err(Error::NotApFree { which, witness }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplifyReport {
    pub base: IntegerSet,
    pub amplifier: IntegerSet,
    /// `2·max(base)`.
    pub scale: u64,
    pub result: IntegerSet,
    pub mu_base: ReciprocalSum,
    pub mu_amplifier: ReciprocalSum,
    pub mu_result: ReciprocalSum,
}

/// Builds `B = A ⊔ 2N·E` and re-verifies that it is progression-free.
pub fn amplify(base: &IntegerSet, amplifier: &IntegerSet, p: usize) -> Result<AmplifyReport> {
    validate_p(p)?;
    if base.is_empty() || amplifier.is_empty() {
        return Err(Error::PreconditionViolated("base and amplifier must be nonempty".into()));
    }
    require_ap_free(base, p, "base")?;
    require_ap_free(amplifier, p, "amplifier")?;

    let n = base.max();
    let scale = 2 * n;
    let mu_amplifier = measure::mu_exact(amplifier, DEFAULT_EXACT_CAP)?;
    if mu_amplifier < BigRational::from_integer(BigInt::from(scale)) {
        return Err(Error::AmplifierTooSmall {
            mu_amplifier: mu_amplifier.to_f64().unwrap_or(f64::NAN),
            required: scale,
        });
    }

    let scaled = scale_set(amplifier, scale)?;
    debug_assert!(scaled.min().is_some_and(|m| m > n));
    let result = base.union(&scaled);
    if let Some(witness) = find_ap_witness(&result, p)? {
        return Err(Error::ClaimViolated { claim: format!("amplified set {result}"), witness });
    }

    let mu_base = mu(base);
    let mu_result = mu(&result);
    Ok(AmplifyReport {
        base: base.clone(),
        amplifier: amplifier.clone(),
        scale,
        result,
        mu_base,
        mu_amplifier: ReciprocalSum::from_exact(mu_amplifier),
        mu_result,
    })
}

/// Why no amplifier was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Infeasibility {
    /// `2N` exceeds `H_budget`, so no subset of `[1, budget]` can work.
    HarmonicCeiling { ceiling: HarmonicCeiling },
    /// Every greedy term up to the budget was used and the sum stayed short.
    GreedyExhausted { terms: usize, mu_approx: f64 },
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::HarmonicCeiling { ceiling } => write!(
                f,
                "harmonic ceiling H_{} <= {:.6} is below the requirement",
                ceiling.budget, ceiling.upper_bound
            ),
            Infeasibility::GreedyExhausted { terms, mu_approx } => {
                write!(f, "all {terms} greedy terms within budget sum to only {mu_approx:.6}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AmplifierSearch {
    Found(IntegerSet),
    Infeasible(Infeasibility),
}

/// Shortest greedy prefix `E` of the `p`-sequence with `μ(E) >= 2N` and
/// `max(E) <= budget`.
pub fn find_amplifier(p: usize, n: u64, budget: u64) -> Result<AmplifierSearch> {
    validate_p(p)?;
    if n == 0 {
        return Err(Error::PreconditionViolated("N must be positive".into()));
    }
    let required = 2 * n;
    let ceiling = harmonic_ceiling(budget);
    if required as f64 > ceiling.upper_bound {
        return Ok(AmplifierSearch::Infeasible(Infeasibility::HarmonicCeiling { ceiling }));
    }

    let target = BigRational::from_integer(BigInt::from(required));
    let threshold = required as f64 * (1.0 - 1e-9);
    let mut g = GreedyGenerator::bounded(p, budget)?;
    let mut approx = 0.0f64;
    loop {
        if g.peek_next() > budget {
            break;
        }
        let term = g.next_term()?;
        approx += 1.0 / term as f64;
        if approx >= threshold {
            let terms = g.terms();
            let confirmed = match measure::mu_exact(&terms, DEFAULT_EXACT_CAP) {
                Ok(exact) => exact >= target,
                Err(_) => approx >= required as f64 * (1.0 + 1e-9),
            };
            if confirmed {
                return Ok(AmplifierSearch::Found(terms));
            }
        }
    }
    Ok(AmplifierSearch::Infeasible(Infeasibility::GreedyExhausted { terms: g.len(), mu_approx: approx }))
}

/// Halting record of a bootstrap run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetExhausted {
    /// 1-based step that could not be completed.
    pub step: usize,
    /// The `2N` the missing amplifier would have had to reach.
    pub required: u64,
    pub cause: Infeasibility,
}

#[derive(Debug, Clone, Serialize)]
pub struct Bootstrap {
    pub p: usize,
    pub budget: u64,
    pub initial: IntegerSet,
    pub mu_initial: ReciprocalSum,
    pub steps: Vec<AmplifyReport>,
    pub halted: Option<BudgetExhausted>,
}

impl Bootstrap {
    /// `A_0, A_1, ...` as far as the run got.
    pub fn chain(&self) -> Vec<&IntegerSet> {
        std::iter::once(&self.initial).chain(self.steps.iter().map(|s| &s.result)).collect()
    }

    pub fn last(&self) -> &IntegerSet {
        self.steps.last().map_or(&self.initial, |s| &s.result)
    }
}

/// Applies [`find_amplifier`] and [`amplify`] up to `steps` times starting
/// from `A_0 = {1}`.
pub fn bootstrap(p: usize, steps: usize, budget: u64) -> Result<Bootstrap> {
    validate_p(p)?;
    let initial = IntegerSet::new(vec![1])?;
    let mut run = Bootstrap { p, budget, mu_initial: mu(&initial), initial, steps: Vec::new(), halted: None };
    for step in 1..=steps {
        let current = run.last().clone();
        let n = current.max();
        match find_amplifier(p, n, budget)? {
            AmplifierSearch::Found(e) => run.steps.push(amplify(&current, &e, p)?),
            AmplifierSearch::Infeasible(cause) => {
                run.halted = Some(BudgetExhausted { step, required: 2 * n, cause });
                break;
            }
        }
    }
    Ok(run)
}

/// Coordinates of the block `[(j+1)·3^i·M, (j+2)·3^i·M)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct BlockIndex {
    pub j: u8,
    pub i: u32,
}

impl BlockIndex {
    /// The half-open interval `[lo, hi)` this block covers for `m`.
    pub fn interval(&self, m: u64) -> (u128, u128) {
        let unit = 3u128.pow(self.i) * m as u128;
        ((self.j as u128 + 1) * unit, (self.j as u128 + 2) * unit)
    }
}

/// The block containing `x >= 2M`. Block group `i` covers
/// `[2·3^i·M, 2·3^(i+1)·M)` and splits into `j = 1..=4`.
pub fn block_index(x: u64, m: u64) -> Result<BlockIndex> {
    if m == 0 {
        return Err(Error::PreconditionViolated("M must be positive".into()));
    }
    let floor = 2 * m as u128;
    if (x as u128) < floor {
        return Err(Error::BelowRange { x, floor: floor as u64 });
    }
    let x = x as u128;
    let mut unit = m as u128;
    let mut i = 0u32;
    while 6 * unit <= x {
        unit *= 3;
        i += 1;
    }
    let j = (x / unit - 1) as u8;
    debug_assert!((1..=4).contains(&j));
    Ok(BlockIndex { j, i })
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionResult {
    pub m: u64,
    /// `R_1..R_4`, stored at indices `0..4`.
    pub parts: [IntegerSet; 4],
    pub block_map: Vec<(u64, BlockIndex)>,
}

impl PartitionResult {
    pub fn part(&self, j: u8) -> &IntegerSet {
        &self.parts[j as usize - 1]
    }

    pub fn reassemble(&self) -> IntegerSet {
        self.parts.iter().fold(IntegerSet::empty(), |acc, p| acc.union(p))
    }
}

/// Splits `r` (all elements `>= 2M`) into the four interval classes.
pub fn partition_r(r: &IntegerSet, m: u64) -> Result<PartitionResult> {
    let mut parts: [Vec<u64>; 4] = Default::default();
    let mut block_map = Vec::with_capacity(r.len());
    for x in r.iter() {
        let b = block_index(x, m)?;
        parts[b.j as usize - 1].push(x);
        block_map.push((x, b));
    }
    Ok(PartitionResult { m, parts: parts.map(IntegerSet::from_sorted_unchecked), block_map })
}

#[derive(Debug, Clone, Serialize)]
pub struct PigeonholeChoice {
    pub j: u8,
    pub part: IntegerSet,
    pub mu_part: ReciprocalSum,
    pub mu_total: ReciprocalSum,
    /// μ of each class, `R_1..R_4`.
    pub mu_parts: [ReciprocalSum; 4],
}

/// The class of maximal reciprocal sum (smallest `j` on ties); its sum is at
/// least a quarter of `μ(R)`.
pub fn pigeonhole_part(r: &IntegerSet, m: u64) -> Result<PigeonholeChoice> {
    let partition = partition_r(r, m)?;
    let mut sums = Vec::with_capacity(4);
    for part in &partition.parts {
        sums.push(measure::mu_exact(part, DEFAULT_EXACT_CAP)?);
    }
    let mut best = 0;
    for k in 1..4 {
        if sums[k] > sums[best] {
            best = k;
        }
    }
    let mu_parts: Vec<ReciprocalSum> = sums.iter().cloned().map(ReciprocalSum::from_exact).collect();
    let total: BigRational = sums.into_iter().sum();
    let part = partition.parts[best].clone();
    Ok(PigeonholeChoice {
        j: best as u8 + 1,
        part,
        mu_part: mu_parts[best].clone(),
        mu_total: ReciprocalSum::from_exact(total),
        mu_parts: mu_parts.try_into().expect("four parts"),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct JoinReport {
    pub j: u8,
    pub result: IntegerSet,
    pub mu_result: ReciprocalSum,
}

/// `A1 ⊔ R_j` for the pigeonhole class `j`, verified progression-free.
///
/// Requires `max(A1) <= M`, `min(R) >= 2M`, and `A1` and the selected
/// class progression-free (a progression-free `R` guarantees the latter).
pub fn join_lemma(a1: &IntegerSet, r: &IntegerSet, m: u64, p: usize) -> Result<JoinReport> {
    validate_p(p)?;
    if m == 0 {
        return Err(Error::PreconditionViolated("M must be positive".into()));
    }
    if a1.max() > m {
        return Err(Error::PreconditionViolated(format!("max(A1) = {} exceeds M = {m}", a1.max())));
    }
    if let Some(lo) = r.min().filter(|&lo| lo < 2 * m) {
        return Err(Error::PreconditionViolated(format!("min(R) = {lo} is below 2M = {}", 2 * m)));
    }
    if let Some(w) = find_ap_witness(a1, p)? {
        return Err(Error::PreconditionViolated(format!("A1 contains a progression ({w})")));
    }
    let choice = pigeonhole_part(r, m)?;
    // only the selected class enters the join
    if let Some(w) = find_ap_witness(&choice.part, p)? {
        return Err(Error::PreconditionViolated(format!("class R_{} contains a progression ({w})", choice.j)));
    }
    let result = a1.union(&choice.part);
    if let Some(witness) = find_ap_witness(&result, p)? {
        return Err(Error::ClaimViolated { claim: format!("A1 joined with class R_{} (M = {m})", choice.j), witness });
    }
    Ok(JoinReport { j: choice.j, mu_result: mu(&result), result })
}
