//! Finite sets of positive integers stored as a sorted list plus a
//! membership bitmap.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest element any [`IntegerSet`] may hold. Every set carries a bitmap
/// over `[1, max]`, so this caps a single bitmap at 512 MiB. Larger values
/// are rejected with [`Error::Overflow`].
pub const MAX_ELEMENT: u64 = 1 << 32;

pub(crate) fn check_element(value: u128) -> Result<u64> {
    if value == 0 {
        return Err(Error::NonPositive);
    }
    if value > MAX_ELEMENT as u128 {
        return Err(Error::Overflow { value, max: MAX_ELEMENT });
    }
    Ok(value as u64)
}

/// Growable bit vector indexed by `u64`. Reads past the end are `false`.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct Bitmap {
    words: Vec<u64>,
}

impl Bitmap {
    fn words_for(bits: u64) -> usize {
        (bits / 64 + 1) as usize
    }

    #[inline]
    pub fn get(&self, n: u64) -> bool {
        match self.words.get((n >> 6) as usize) {
            Some(w) => (w >> (n & 63)) & 1 == 1,
            None => false,
        }
    }

    /// Sets bit `n`, doubling the backing storage when needed.
    #[inline]
    pub fn set(&mut self, n: u64) {
        let idx = (n >> 6) as usize;
        if idx >= self.words.len() {
            self.grow_to(idx + 1);
        }
        self.words[idx] |= 1 << (n & 63);
    }

    #[cold]
    fn grow_to(&mut self, words: usize) {
        let target = words.max(self.words.len() * 2);
        self.words.resize(target, 0);
    }

    /// Ensures bits `0..=n` are backed without further allocation.
    pub fn reserve_bits(&mut self, n: u64) {
        let words = Self::words_for(n);
        if words > self.words.len() {
            self.words.resize(words, 0);
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn capacity_bits(&self) -> u64 {
        self.words.len() as u64 * 64
    }
}

impl fmt::Debug for Bitmap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Bitmap({} bits, {} set)", self.capacity_bits(), self.count_ones())
    }
}

/// A finite, strictly increasing set of positive integers.
///
/// Membership queries go through the bitmap and cost O(1); iteration goes
/// through the sorted element list. Values are immutable once built.
#[derive(Clone)]
pub struct IntegerSet {
    elements: Vec<u64>,
    bitmap: Bitmap,
}

impl IntegerSet {
    pub fn empty() -> Self {
        IntegerSet { elements: Vec::new(), bitmap: Bitmap::default() }
    }

    /// Builds a set from a strictly increasing list of positive integers.
    pub fn new(elements: Vec<u64>) -> Result<Self> {
        let mut prev = 0u64;
        for &e in &elements {
            check_element(e as u128)?;
            if e <= prev {
                return Err(Error::NotIncreasing { prev, next: e });
            }
            prev = e;
        }
        Ok(Self::from_sorted_unchecked(elements))
    }

    /// Builds a set from arbitrary positive integers, sorting and
    /// dropping duplicates.
    pub fn from_unsorted<I: IntoIterator<Item = u64>>(iter: I) -> Result<Self> {
        let mut elements: Vec<u64> = iter.into_iter().collect();
        elements.sort_unstable();
        elements.dedup();
        Self::new(elements)
    }

    pub(crate) fn from_sorted_unchecked(elements: Vec<u64>) -> Self {
        let mut bitmap = Bitmap::default();
        if let Some(&max) = elements.last() {
            bitmap.reserve_bits(max);
        }
        for &e in &elements {
            bitmap.set(e);
        }
        IntegerSet { elements, bitmap }
    }

    /// `{1, ..., n}`.
    pub fn interval(n: u64) -> Result<Self> {
        if n > 0 {
            check_element(n as u128)?;
        }
        Ok(Self::from_sorted_unchecked((1..=n).collect()))
    }

    #[inline]
    pub fn contains(&self, n: u64) -> bool {
        self.bitmap.get(n)
    }

    /// Largest element, 0 for the empty set.
    pub fn max(&self) -> u64 {
        self.elements.last().copied().unwrap_or(0)
    }

    pub fn min(&self) -> Option<u64> {
        self.elements.first().copied()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.elements
    }

    pub fn iter(&self) -> impl DoubleEndedIterator<Item = u64> + ExactSizeIterator + '_ {
        self.elements.iter().copied()
    }

    pub fn bitmap(&self) -> &Bitmap {
        &self.bitmap
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.elements
    }

    /// The first `n` elements (all of them if `n >= len`).
    pub fn prefix(&self, n: usize) -> IntegerSet {
        let n = n.min(self.len());
        Self::from_sorted_unchecked(self.elements[..n].to_vec())
    }

    /// `self ∩ [1, limit]`.
    pub fn truncate_at(&self, limit: u64) -> IntegerSet {
        let end = self.elements.partition_point(|&e| e <= limit);
        self.prefix(end)
    }

    pub fn union(&self, other: &IntegerSet) -> IntegerSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.elements, &other.elements);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push(a[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Self::from_sorted_unchecked(out)
    }

    pub fn is_disjoint(&self, other: &IntegerSet) -> bool {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.iter().all(|e| !large.contains(e))
    }

    pub fn is_subset(&self, other: &IntegerSet) -> bool {
        self.iter().all(|e| other.contains(e))
    }

    /// Returns `self ∪ {x}` for `x` larger than every element.
    pub fn with_max(&self, x: u64) -> Result<IntegerSet> {
        check_element(x as u128)?;
        if x <= self.max() {
            return Err(Error::NotAnExtension { x, max: self.max() });
        }
        let mut elements = self.elements.clone();
        elements.push(x);
        Ok(Self::from_sorted_unchecked(elements))
    }

    /// `{c·s + b : s ∈ self}`.
    pub fn affine(&self, c: u64, b: u64) -> Result<IntegerSet> {
        if c == 0 {
            return Err(Error::PreconditionViolated("scale factor must be at least 1".into()));
        }
        let mut out = Vec::with_capacity(self.len());
        for s in self.iter() {
            out.push(check_element(s as u128 * c as u128 + b as u128)?);
        }
        Ok(Self::from_sorted_unchecked(out))
    }
}

impl PartialEq for IntegerSet {
    fn eq(&self, other: &Self) -> bool {
        self.elements == other.elements
    }
}

impl Eq for IntegerSet {}

impl fmt::Debug for IntegerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.elements.iter()).finish()
    }
}

impl fmt::Display for IntegerSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "}}")
    }
}

impl Default for IntegerSet {
    fn default() -> Self {
        Self::empty()
    }
}

impl TryFrom<Vec<u64>> for IntegerSet {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl<const N: usize> TryFrom<[u64; N]> for IntegerSet {
    type Error = Error;

    fn try_from(v: [u64; N]) -> Result<Self> {
        Self::new(v.to_vec())
    }
}

impl Serialize for IntegerSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.elements.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntegerSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u64>::deserialize(deserializer)?;
        IntegerSet::new(v).map_err(serde::de::Error::custom)
    }
}
