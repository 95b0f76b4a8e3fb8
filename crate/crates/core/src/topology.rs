//! Finite-horizon versions of the product topology on subsets of ℕ.
//!
//! A set is identified with its indicator sequence `δ_A(1), δ_A(2), ...`,
//! and `A_n → A` means every finite prefix of the indicators eventually
//! agrees. Nothing here is infinite: every set is either an explicit finite
//! set (known at every position) or a set known only on `[1, horizon]`, and
//! every verdict is tied to the horizon it was computed at.

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greedy::{generate, generate_up_to};
use crate::measure::{format_rational, reciprocal};
use crate::progression::{find_ap_witness, validate_p, ApWitness};
use crate::set::IntegerSet;

/// How a possibly infinite set is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorSpec {
    /// The greedy progression-free sequence for `p`.
    Greedy { p: usize },
}

impl GeneratorSpec {
    /// Materializes the generated set on `[1, horizon]`.
    pub fn describe(&self, horizon: u64) -> Result<DescribedSet> {
        match *self {
            GeneratorSpec::Greedy { p } => {
                let known = if horizon == 0 { IntegerSet::empty() } else { generate_up_to(p, horizon)? };
                Ok(DescribedSet { known, horizon: Some(horizon) })
            }
        }
    }
}

/// A set known exactly on `[1, horizon]`, or everywhere when `horizon` is
/// `None` (an explicit finite set).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescribedSet {
    known: IntegerSet,
    horizon: Option<u64>,
}

impl DescribedSet {
    pub fn finite(set: IntegerSet) -> Self {
        DescribedSet { known: set, horizon: None }
    }

    /// `set` is taken as the true set's restriction to `[1, horizon]`.
    pub fn truncated(set: &IntegerSet, horizon: u64) -> Self {
        DescribedSet { known: set.truncate_at(horizon), horizon: Some(horizon) }
    }

    pub fn known(&self) -> &IntegerSet {
        &self.known
    }

    pub fn horizon(&self) -> Option<u64> {
        self.horizon
    }

    fn require(&self, k: u64) -> Result<()> {
        match self.horizon {
            Some(h) if h < k => Err(Error::HorizonExceeded { horizon: h, requested: k }),
            _ => Ok(()),
        }
    }

    /// The set restricted to `[1, k]`.
    pub fn up_to(&self, k: u64) -> Result<IntegerSet> {
        self.require(k)?;
        Ok(self.known.truncate_at(k))
    }
}

impl From<IntegerSet> for DescribedSet {
    fn from(set: IntegerSet) -> Self {
        DescribedSet::finite(set)
    }
}

/// First `k` indicator bits `δ(1), ..., δ(k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndicatorPrefix {
    bits: Vec<bool>,
}

impl IndicatorPrefix {
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn horizon(&self) -> u64 {
        self.bits.len() as u64
    }

    /// The set `{n <= k : δ(n) = 1}`.
    pub fn to_set(&self) -> IntegerSet {
        IntegerSet::from_sorted_unchecked(
            self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64 + 1).collect(),
        )
    }
}

impl fmt::Display for IndicatorPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn indicator(set: &DescribedSet, k: u64) -> Result<IndicatorPrefix> {
    if k == 0 {
        return Err(Error::PreconditionViolated("indicator horizon must be at least 1".into()));
    }
    set.require(k)?;
    Ok(IndicatorPrefix { bits: (1..=k).map(|n| set.known.contains(n)).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Agreement {
    DisagreeAt(u64),
    AgreeThroughHorizon,
}

/// Smallest `n <= horizon` in exactly one of the two sets.
pub fn first_disagreement(a: &DescribedSet, b: &DescribedSet, horizon: u64) -> Result<Agreement> {
    let a = a.up_to(horizon)?;
    let b = b.up_to(horizon)?;
    let first =
        a.iter().zip(b.iter()).find(|(x, y)| x != y).map(|(x, y)| x.min(y)).or_else(|| match a.len().cmp(&b.len()) {
            std::cmp::Ordering::Less => b.as_slice().get(a.len()).copied(),
            std::cmp::Ordering::Greater => a.as_slice().get(b.len()).copied(),
            std::cmp::Ordering::Equal => None,
        });
    Ok(first.map_or(Agreement::AgreeThroughHorizon, Agreement::DisagreeAt))
}

/// `2^-n` for the first disagreement `n`, 0 when the sets agree through the
/// horizon. Diagnostic only.
pub fn prefix_distance(a: &DescribedSet, b: &DescribedSet, horizon: u64) -> Result<f64> {
    Ok(match first_disagreement(a, b, horizon)? {
        Agreement::DisagreeAt(n) => 0.5f64.powi(n.min(i32::MAX as u64) as i32),
        Agreement::AgreeThroughHorizon => 0.0,
    })
}

/// A finite sequence `A_1, ..., A_len` of described sets.
#[derive(Debug, Clone, Default)]
pub struct SetSequence {
    members: Vec<DescribedSet>,
}

impl SetSequence {
    pub fn new(members: Vec<DescribedSet>) -> Self {
        SetSequence { members }
    }

    /// `A_n = A ∩ [1, n]` for `n = 1..=len`.
    pub fn truncations(a: &IntegerSet, len: u64) -> Self {
        SetSequence::new((1..=len).map(|n| DescribedSet::finite(a.truncate_at(n))).collect())
    }

    /// `A_n` = the first `n` greedy terms, `n = 1..=len`.
    pub fn greedy_prefixes(p: usize, len: usize) -> Result<Self> {
        if len == 0 {
            return Ok(SetSequence::default());
        }
        let full = generate(p, len)?;
        Ok(SetSequence::new((1..=len).map(|n| DescribedSet::finite(full.prefix(n))).collect()))
    }

    /// The same set repeated `len` times.
    pub fn constant(a: &DescribedSet, len: usize) -> Self {
        SetSequence::new(vec![a.clone(); len])
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// 1-based access.
    pub fn member(&self, n: usize) -> Option<&DescribedSet> {
        n.checked_sub(1).and_then(|i| self.members.get(i))
    }

    pub fn members(&self) -> &[DescribedSet] {
        &self.members
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    /// Every member from index `n_k` (1-based) on agrees on `[1, k]`.
    Converged {
        n_k: usize,
    },
    NotConvergedAtHorizon,
}

/// Smallest `N_k` such that every member `A_n`, `N_k <= n <= len`, agrees
/// with `a` on `[1, k]`.
pub fn convergence_index(seq: &SetSequence, a: &DescribedSet, k: u64) -> Result<Convergence> {
    let target = a.up_to(k)?;
    for member in &seq.members {
        member.require(k)?;
    }
    let mut n_k = None;
    for (i, member) in seq.members.iter().enumerate().rev() {
        if member.known.truncate_at(k) != target {
            break;
        }
        n_k = Some(i + 1);
    }
    Ok(n_k.map_or(Convergence::NotConvergedAtHorizon, |n_k| Convergence::Converged { n_k }))
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosednessVerdict {
    pub window: u64,
    pub n_k: usize,
    pub witness: Option<ApWitness>,
    pub passed: bool,
}

/// Checks that a limit of progression-free sets is progression-free on
/// `[1, window]`. A witness in the limit means the harness is broken.
pub fn closedness_check(seq: &SetSequence, a: &DescribedSet, p: usize, window: u64) -> Result<ClosednessVerdict> {
    validate_p(p)?;
    for (i, member) in seq.members.iter().enumerate() {
        if let Some(w) = find_ap_witness(&member.known, p)? {
            return Err(Error::PreconditionViolated(format!("member {} contains a progression ({w})", i + 1)));
        }
    }
    let n_k = match convergence_index(seq, a, window)? {
        Convergence::Converged { n_k } => n_k,
        Convergence::NotConvergedAtHorizon => return Err(Error::NotConvergedAtHorizon { k: window }),
    };
    let witness = find_ap_witness(&a.up_to(window)?, p)?;
    Ok(ClosednessVerdict { window, n_k, passed: witness.is_none(), witness })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub horizon: u64,
    #[serde(serialize_with = "ser_rational")]
    pub epsilon: BigRational,
    /// Number of leading elements of the limit shared by the tail members.
    pub n0: usize,
    /// `a_{n0}`, the prefix length on which members must agree (0 if `n0 = 0`).
    pub cut: u64,
    /// First member index from which the agreement holds.
    pub big_n0: usize,
    #[serde(serialize_with = "ser_rational")]
    pub limit_tail: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub max_member_tail: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub max_deviation: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub two_tail_bound: BigRational,
    pub members_checked: usize,
    /// `max_deviation < epsilon`.
    pub within_epsilon: bool,
    /// `max_deviation <= limit_tail + max_member_tail`.
    pub bound_holds: bool,
}

fn ser_rational<S: serde::Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

/// `suffix[i]` = Σ of reciprocals of `elements[i..]`; `suffix[len] = 0`.
fn suffix_sums(elements: &[u64]) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); elements.len() + 1];
    for i in (0..elements.len()).rev() {
        out[i] = &out[i + 1] + reciprocal(elements[i]);
    }
    out
}

/// Replays the continuity argument for `μ` on a finite sequence.
///
/// All sets are cut to `[1, horizon]`. The cut point `n0` is the least one
/// for which the limit's tail beyond its first `n0` elements is below
/// `ε/2` and so is the tail of every member that agrees with the limit up
/// to `a_{n0}`. Every such member then satisfies
/// `|μ(A_n) - μ(A)| <= tail(A_n) + tail(A) < ε`, and both the deviation and
/// the two-tail bound are reported in exact arithmetic.
pub fn continuity_check(
    seq: &SetSequence,
    a: &DescribedSet,
    epsilon: &BigRational,
    horizon: u64,
) -> Result<ContinuityReport> {
    if *epsilon <= BigRational::zero() {
        return Err(Error::PreconditionViolated("epsilon must be positive".into()));
    }
    if seq.is_empty() {
        return Err(Error::PreconditionViolated("sequence is empty".into()));
    }
    let limit = a.up_to(horizon)?;
    let members: Vec<IntegerSet> = seq.members.iter().map(|m| m.up_to(horizon)).collect::<Result<_>>()?;
    let half = epsilon / BigRational::from_integer(2.into());

    let limit_suffix = suffix_sums(limit.as_slice());
    let member_suffix: Vec<Vec<BigRational>> = members.iter().map(|m| suffix_sums(m.as_slice())).collect();

    for n0 in 0..=limit.len() {
        if limit_suffix[n0] >= half {
            continue;
        }
        let cut = if n0 == 0 { 0 } else { limit.as_slice()[n0 - 1] };
        let target = limit.truncate_at(cut);
        let big_n0 = match members.iter().rposition(|m| m.truncate_at(cut) != target) {
            None => 1,
            Some(i) if i + 1 == members.len() => return Err(Error::NotConvergedAtHorizon { k: cut }),
            Some(i) => i + 2,
        };
        let tails = &member_suffix[big_n0 - 1..];
        // members from big_n0 on share the limit's first n0 elements
        let max_member_tail = tails.iter().map(|s| s[n0].clone()).max().unwrap_or_else(BigRational::zero);
        if max_member_tail >= half {
            continue;
        }
        let max_deviation =
            tails.iter().map(|s| (&s[n0] - &limit_suffix[n0]).abs()).max().unwrap_or_else(BigRational::zero);
        let two_tail_bound = &limit_suffix[n0] + &max_member_tail;
        return Ok(ContinuityReport {
            horizon,
            epsilon: epsilon.clone(),
            n0,
            cut,
            big_n0,
            within_epsilon: max_deviation < *epsilon,
            bound_holds: max_deviation <= two_tail_bound,
            limit_tail: limit_suffix[n0].clone(),
            max_member_tail,
            max_deviation,
            two_tail_bound,
            members_checked: tails.len(),
        });
    }
    Err(Error::TailNotSmall { half_epsilon: num_traits::ToPrimitive::to_f64(&half).unwrap_or(f64::NAN) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u64]) -> IntegerSet {
        IntegerSet::new(v.to_vec()).unwrap()
    }

    fn fin(v: &[u64]) -> DescribedSet {
        DescribedSet::finite(set(v))
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn indicator_examples() {
        assert_eq!(indicator(&fin(&[1, 2, 4]), 5).unwrap().to_string(), "11010");
        assert_eq!(indicator(&fin(&[]), 3).unwrap().to_string(), "000");
        let g = GeneratorSpec::Greedy { p: 3 }.describe(14).unwrap();
        assert_eq!(indicator(&g, 14).unwrap().to_string(), "11011000011011");
        assert_eq!(indicator(&g, 15), Err(Error::HorizonExceeded { horizon: 14, requested: 15 }));
        assert!(indicator(&g, 0).is_err());
    }

    #[test]
    fn indicator_round_trip() {
        let s = set(&[3, 5, 8, 13, 21]);
        for k in 1..25 {
            let bits = indicator(&DescribedSet::finite(s.clone()), k).unwrap();
            assert_eq!(bits.horizon(), k);
            assert_eq!(bits.to_set(), s.truncate_at(k));
        }
    }

    #[test]
    fn disagreement_examples() {
        assert_eq!(first_disagreement(&fin(&[1, 2]), &fin(&[1, 3]), 10).unwrap(), Agreement::DisagreeAt(2));
        assert_eq!(first_disagreement(&fin(&[1, 2]), &fin(&[1, 2]), 10).unwrap(), Agreement::AgreeThroughHorizon);
        assert_eq!(first_disagreement(&fin(&[1, 2, 4, 5]), &fin(&[1, 2, 4, 6]), 10).unwrap(), Agreement::DisagreeAt(5));
        assert_eq!(first_disagreement(&fin(&[1, 2]), &fin(&[1, 2, 9]), 10).unwrap(), Agreement::DisagreeAt(9));
        assert_eq!(first_disagreement(&fin(&[1, 2]), &fin(&[1, 2, 9]), 8).unwrap(), Agreement::AgreeThroughHorizon);
        let short = DescribedSet::truncated(&set(&[1, 2]), 5);
        assert!(matches!(first_disagreement(&short, &fin(&[1]), 6), Err(Error::HorizonExceeded { .. })));
        assert_eq!(prefix_distance(&fin(&[1, 2]), &fin(&[1, 3]), 10).unwrap(), 0.25);
    }

    #[test]
    fn convergence_examples() {
        let a = generate(3, 100).unwrap();
        let da = DescribedSet::finite(a.clone());
        let seq = SetSequence::truncations(&a, a.max());
        assert_eq!(convergence_index(&seq, &da, 5).unwrap(), Convergence::Converged { n_k: 5 });

        let seq = SetSequence::constant(&da, 7);
        assert_eq!(convergence_index(&seq, &da, 40).unwrap(), Convergence::Converged { n_k: 1 });

        let seq = SetSequence::greedy_prefixes(3, 100).unwrap();
        assert_eq!(convergence_index(&seq, &da, 14).unwrap(), Convergence::Converged { n_k: 8 });

        let seq = SetSequence::truncations(&a, 10);
        assert_eq!(convergence_index(&seq, &da, 14).unwrap(), Convergence::NotConvergedAtHorizon);
    }

    #[test]
    fn closedness_examples() {
        let a = DescribedSet::finite(generate(3, 50).unwrap());
        let seq = SetSequence::greedy_prefixes(3, 50).unwrap();
        let v = closedness_check(&seq, &a, 3, 30).unwrap();
        assert!(v.passed);
        assert_eq!(v.witness, None);

        let c = fin(&[1, 2, 4]);
        assert!(closedness_check(&SetSequence::constant(&c, 4), &c, 3, 5).unwrap().passed);

        let bad = SetSequence::new(vec![fin(&[1, 2, 4]), fin(&[1, 2, 3, 7])]);
        assert!(matches!(closedness_check(&bad, &c, 3, 5), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn closedness_reports_non_convergence() {
        let a = fin(&[1, 2, 4]);
        let seq = SetSequence::new(vec![fin(&[1, 2, 4]), fin(&[1, 2, 5])]);
        assert_eq!(closedness_check(&seq, &a, 3, 5).unwrap_err(), Error::NotConvergedAtHorizon { k: 5 });
    }

    #[test]
    fn continuity_truncations() {
        let a = generate(3, 100).unwrap();
        let seq = SetSequence::truncations(&a, a.max());
        let rep = continuity_check(&seq, &DescribedSet::finite(a.clone()), &q(1, 10), a.max()).unwrap();
        assert!(rep.within_epsilon);
        assert!(rep.bound_holds);
        assert!(rep.max_deviation < q(1, 10));
        assert!(rep.limit_tail < q(1, 20));
    }

    #[test]
    fn continuity_constant_sequence() {
        let a = fin(&[1, 2, 4, 5, 10]);
        let rep = continuity_check(&SetSequence::constant(&a, 3), &a, &q(1, 1000), 100).unwrap();
        assert_eq!(rep.max_deviation, q(0, 1));
        assert_eq!(rep.n0, 5);
    }

    #[test]
    fn continuity_far_perturbations() {
        // A_n = A ∪ {max(A) + n}: agrees with A below max(A) + n
        let a = generate(3, 40).unwrap();
        let members: Vec<DescribedSet> =
            (1..=400u64).map(|n| DescribedSet::finite(a.union(&set(&[a.max() + n])))).collect();
        let horizon = a.max() + 400;
        let eps = q(1, 10);
        let rep =
            continuity_check(&SetSequence::new(members), &DescribedSet::finite(a.clone()), &eps, horizon).unwrap();
        assert!(rep.bound_holds);
        assert!(rep.within_epsilon);
        // each deviation is exactly 1/(max + n); the largest one checked
        assert_eq!(rep.max_deviation, reciprocal(a.max() + rep.big_n0 as u64));
    }

    #[test]
    fn continuity_errors() {
        let a = fin(&[1, 2]);
        let seq = SetSequence::new(vec![fin(&[1, 2]), fin(&[1, 3])]);
        assert!(matches!(continuity_check(&seq, &a, &q(1, 10), 5), Err(Error::NotConvergedAtHorizon { .. })));
        assert!(continuity_check(&seq, &a, &q(0, 1), 5).is_err());
        // member tails never drop below ε/2: the members keep a heavy element
        let seq = SetSequence::constant(&fin(&[1, 2, 3]), 3);
        assert!(matches!(continuity_check(&seq, &fin(&[1]), &q(1, 10), 5), Err(Error::TailNotSmall { .. })));
    }
}
