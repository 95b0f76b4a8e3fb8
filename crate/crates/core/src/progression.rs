//! Detection of p-term arithmetic progressions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::IntegerSet;

/// A concrete progression `start, start + diff, ..., start + (length-1)·diff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ApWitness {
    pub start: u64,
    pub diff: u64,
    pub length: usize,
}

impl ApWitness {
    pub fn terms(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.length as u64).map(move |i| self.start + i * self.diff)
    }

    /// True when every term is a member of `set`.
    pub fn holds_in(&self, set: &IntegerSet) -> bool {
        self.diff >= 1 && self.start >= 1 && self.terms().all(|t| set.contains(t))
    }
}

impl fmt::Display for ApWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "start={}, diff={}, length={}", self.start, self.diff, self.length)
    }
}

pub fn validate_p(p: usize) -> Result<()> {
    if p < 3 {
        Err(Error::InvalidP(p))
    } else {
        Ok(())
    }
}

/// Searches `set` for a `p`-term progression.
///
/// Every (first term, difference) pair realized by two members is tried and
/// the remaining `p - 2` terms are probed in the bitmap. Pairs are visited
/// in order of increasing start, then increasing difference, so the witness
/// returned is the one with the smallest start and, among those, the
/// smallest difference.
pub fn find_ap_witness(set: &IntegerSet, p: usize) -> Result<Option<ApWitness>> {
    validate_p(p)?;
    let elems = set.as_slice();
    let max = set.max();
    let span = (p - 1) as u64;
    for (i, &start) in elems.iter().enumerate() {
        for &second in &elems[i + 1..] {
            let diff = second - start;
            // diff only grows along the inner loop
            if start + span * diff > max {
                break;
            }
            if (2..p as u64).all(|k| set.contains(start + k * diff)) {
                return Ok(Some(ApWitness { start, diff, length: p }));
            }
        }
    }
    Ok(None)
}

pub fn is_ap_free(set: &IntegerSet, p: usize) -> Result<bool> {
    Ok(find_ap_witness(set, p)?.is_none())
}

/// Does appending `x` (larger than every member) to the progression-free
/// set `set` create a `p`-term progression?
///
/// Since `x` would be the maximum, any new progression ends at `x`, so only
/// differences `d <= (x-1)/(p-1)` need probing.
pub fn extension_creates_ap(set: &IntegerSet, x: u64, p: usize) -> Result<bool> {
    validate_p(p)?;
    if x <= set.max() {
        return Err(Error::NotAnExtension { x, max: set.max() });
    }
    if let Some(w) = find_ap_witness(set, p)? {
        return Err(Error::PreconditionViolated(format!("base set is not progression-free ({w})")));
    }
    Ok(extension_creates_ap_unchecked(set, x, p))
}

/// [`extension_creates_ap`] without validating its preconditions. The
/// caller guarantees `p >= 3`, `x > set.max()` and that `set` is
/// progression-free.
pub fn extension_creates_ap_unchecked(set: &IntegerSet, x: u64, p: usize) -> bool {
    let steps = (p - 1) as u64;
    let max_d = (x - 1) / steps;
    (1..=max_d).any(|d| (1..=steps).all(|k| set.contains(x - k * d)))
}

/// Does inserting `x` (at any position) into `set` create a `p`-term
/// progression through `x`?
///
/// A progression through `x` with difference `d` has a member at `x ± d`,
/// so only differences to existing members are tried; for each, the run of
/// members through `x` is measured in both directions.
pub fn insertion_creates_ap(set: &IntegerSet, x: u64, p: usize) -> Result<bool> {
    validate_p(p)?;
    if set.contains(x) {
        return Err(Error::PreconditionViolated(format!("{x} is already a member")));
    }
    let need = p as u64 - 1;
    for y in set.iter() {
        let d = y.abs_diff(x);
        // each difference is seen from both sides; handle it from the lower one
        if y > x && x >= d && set.contains(x - d) {
            continue;
        }
        let mut run = 0u64;
        let mut t = x;
        while t > d && run < need && set.contains(t - d) {
            t -= d;
            run += 1;
        }
        let mut t = x;
        while run < need && set.contains(t + d) {
            t += d;
            run += 1;
        }
        if run >= need {
            return Ok(true);
        }
    }
    Ok(false)
}
