//! The greedy progression-free sequence: `a_1 = 1`, and each next term is
//! the least integer above the previous one that keeps the set free of
//! `p`-term progressions.
//!
//! Candidates are not tested one by one. Instead the generator keeps a
//! sieve of *forbidden* values: when a term `a` is appended, every
//! progression of `p - 1` members ending at `a` with difference `d` makes
//! `a + d` forbidden. A value is forbidden exactly when it would complete a
//! `p`-term progression, so the next term is the first unmarked value above
//! the cursor. Appending the n-th term costs O(n) probes.

use std::io;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::progression::validate_p;
use crate::seqfile::{format_sequence, parse_sequence};
use crate::set::{check_element, Bitmap, IntegerSet};

#[derive(Debug, Clone)]
pub struct GreedyGenerator {
    p: usize,
    terms: Vec<u64>,
    members: Bitmap,
    forbidden: Bitmap,
    /// Values above this bound are never requested, so they need no marks.
    mark_limit: u64,
}

impl GreedyGenerator {
    pub fn new(p: usize) -> Result<Self> {
        validate_p(p)?;
        Ok(GreedyGenerator {
            p,
            terms: Vec::new(),
            members: Bitmap::default(),
            forbidden: Bitmap::default(),
            mark_limit: u64::MAX,
        })
    }

    /// A generator that will never be asked for terms above `limit`, so
    /// the sieve skips marks beyond it.
    pub fn bounded(p: usize, limit: u64) -> Result<Self> {
        let mut g = Self::new(p)?;
        g.mark_limit = limit;
        Ok(g)
    }

    /// Rebuilds a generator from a stored prefix, replaying the sieve and
    /// checking that every stored term is exactly the greedy choice.
    pub fn resume(p: usize, prefix: &IntegerSet) -> Result<Self> {
        let mut g = Self::new(p)?;
        if let Some(max) = prefix.iter().last() {
            g.members.reserve_bits(max);
            g.forbidden.reserve_bits(2 * max);
        }
        for (i, t) in prefix.iter().enumerate() {
            let expected = g.first_admissible();
            if t != expected {
                return Err(Error::PreconditionViolated(format!(
                    "stored term {} is {t}, greedy choice is {expected}",
                    i + 1
                )));
            }
            g.push(t);
        }
        Ok(g)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Last emitted term, 0 before the first.
    pub fn cursor(&self) -> u64 {
        self.terms.last().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> IntegerSet {
        IntegerSet::from_sorted_unchecked(self.terms.clone())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.terms
    }

    /// Bits allocated for the membership bitmap and the sieve together.
    pub fn allocated_bits(&self) -> u64 {
        self.members.capacity_bits() + self.forbidden.capacity_bits()
    }

    /// Emits and records the next term.
    pub fn next_term(&mut self) -> Result<u64> {
        let x = self.first_admissible();
        check_element(x as u128)?;
        self.push(x);
        Ok(x)
    }

    /// The term [`next_term`](Self::next_term) would emit, without
    /// emitting it.
    pub fn peek_next(&self) -> u64 {
        self.first_admissible()
    }

    fn first_admissible(&self) -> u64 {
        let mut x = self.cursor() + 1;
        while self.forbidden.get(x) {
            x += 1;
        }
        x
    }

    fn push(&mut self, a: u64) {
        self.terms.push(a);
        self.members.set(a);
        let earlier = &self.terms[..self.terms.len() - 1];
        if earlier.is_empty() {
            return;
        }
        // every mark a + d lies in (a, 2a)
        self.forbidden.reserve_bits((2 * a).min(self.mark_limit));
        if self.p == 3 {
            // marks are 2a - b; skip those beyond the limit
            let lo = (2 * a).saturating_sub(self.mark_limit);
            let from = earlier.partition_point(|&b| b < lo);
            for &b in &earlier[from..] {
                self.forbidden.set(2 * a - b);
            }
            return;
        }
        let inner = self.p as u64 - 2;
        for &b in earlier.iter().rev() {
            let d = a - b;
            // the progression needs a - (p-2)·d >= 1; d grows as b falls
            if inner * d >= a {
                break;
            }
            if a + d > self.mark_limit {
                continue;
            }
            if (2..=inner).all(|k| self.members.get(a - k * d)) {
                self.forbidden.set(a + d);
            }
        }
    }
}

impl Iterator for GreedyGenerator {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        self.next_term().ok()
    }
}

/// The first `n` terms of the greedy sequence.
pub fn generate(p: usize, n: usize) -> Result<IntegerSet> {
    validate_p(p)?;
    if n == 0 {
        return Err(Error::InvalidCount);
    }
    let mut g = GreedyGenerator::new(p)?;
    g.terms.reserve(n);
    for _ in 0..n {
        g.next_term()?;
    }
    Ok(g.terms())
}

/// All greedy terms not exceeding `limit`.
pub fn generate_up_to(p: usize, limit: u64) -> Result<IntegerSet> {
    validate_p(p)?;
    if limit == 0 {
        return Err(Error::InvalidCount);
    }
    check_element(limit as u128)?;
    let mut g = GreedyGenerator::bounded(p, limit)?;
    while g.first_admissible() <= limit {
        g.next_term()?;
    }
    Ok(g.terms())
}

/// On-disk store of greedy prefixes, one `S_<p>.txt` file per `p`.
#[derive(Debug, Clone)]
pub struct GreedyCache {
    dir: PathBuf,
}

impl GreedyCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        GreedyCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, p: usize) -> PathBuf {
        self.dir.join(format!("S_{p}.txt"))
    }

    /// Stored prefix for `p`, if any. Files that fail to parse or whose
    /// `p=` header disagrees are reported as invalid data.
    pub fn load(&self, p: usize) -> io::Result<Option<IntegerSet>> {
        let path = self.path(p);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e),
        };
        let file = parse_sequence(&text)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))?;
        if file.p.is_some_and(|fp| fp != p) {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                format!("{}: header p={} does not match {p}", path.display(), file.p.unwrap_or(0)),
            ));
        }
        Ok(Some(file.set))
    }

    pub fn store(&self, p: usize, terms: &IntegerSet) -> io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        let text = format_sequence(terms, Some(p), Some("greedy progression-free sequence"));
        let tmp = self.dir.join(format!(".S_{p}.txt.tmp"));
        std::fs::write(&tmp, text)?;
        std::fs::rename(tmp, self.path(p))
    }

    /// The first `n` greedy terms, reusing and extending the stored prefix.
    /// A stored prefix is re-verified before use; a corrupt one is an error.
    pub fn generate(&self, p: usize, n: usize) -> io::Result<Result<IntegerSet>> {
        if let Err(e) = validate_p(p) {
            return Ok(Err(e));
        }
        if n == 0 {
            return Ok(Err(Error::InvalidCount));
        }
        let stored = self.load(p)?.unwrap_or_default();
        if stored.len() >= n {
            return Ok(match GreedyGenerator::resume(p, &stored.prefix(n)) {
                Ok(g) => Ok(g.terms()),
                Err(e) => Err(e),
            });
        }
        let mut g = match GreedyGenerator::resume(p, &stored) {
            Ok(g) => g,
            Err(e) => return Ok(Err(e)),
        };
        while g.len() < n {
            if let Err(e) = g.next_term() {
                return Ok(Err(e));
            }
        }
        let terms = g.terms();
        self.store(p, &terms)?;
        Ok(Ok(terms))
    }
}
