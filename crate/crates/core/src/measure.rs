//! Reciprocal sums `μ(A) = Σ_{a∈A} 1/a`, exact and approximate.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::progression::validate_p;
use crate::set::IntegerSet;

/// Sets larger than this get only a float approximation by default; the
/// reduced denominator grows roughly like the lcm of the elements.
pub const DEFAULT_EXACT_CAP: usize = 10_000;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// An exact reciprocal sum (when within the exactness cap) together with a
/// compensated float approximation and a bound on its rounding error.
#[derive(Debug, Clone, PartialEq)]
pub struct ReciprocalSum {
    exact: Option<BigRational>,
    approx: f64,
    error_bound: f64,
    count: usize,
    cap: usize,
}

impl ReciprocalSum {
    pub fn zero() -> Self {
        ReciprocalSum { exact: Some(BigRational::zero()), approx: 0.0, error_bound: 0.0, count: 0, cap: usize::MAX }
    }

    pub fn from_exact(exact: BigRational) -> Self {
        let approx = exact.to_f64().unwrap_or(f64::INFINITY);
        ReciprocalSum {
            error_bound: approx.abs() * UNIT_ROUNDOFF,
            exact: Some(exact),
            approx,
            count: 0,
            cap: usize::MAX,
        }
    }

    /// The exact value, or [`Error::ExactnessBudgetExceeded`] when it was
    /// not computed.
    pub fn exact(&self) -> Result<&BigRational> {
        self.exact.as_ref().ok_or(Error::ExactnessBudgetExceeded { len: self.count, cap: self.cap })
    }

    pub fn exact_opt(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn approx(&self) -> f64 {
        self.approx
    }

    /// Upper bound on `|approx - true value|`.
    pub fn error_bound(&self) -> f64 {
        self.error_bound
    }

    pub fn exact_string(&self) -> Option<String> {
        self.exact.as_ref().map(format_rational)
    }
}

impl Serialize for ReciprocalSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("ReciprocalSum", 3)?;
        st.serialize_field("exact", &self.exact_string())?;
        st.serialize_field("approx", &self.approx)?;
        st.serialize_field("error_bound", &self.error_bound)?;
        st.end()
    }
}

/// `num/den` with a positive denominator, always with the slash.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `n/d`, an integer, or a plain decimal such as `0.125`, exactly.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim().parse::<BigInt>().ok()?, d.trim().parse::<BigInt>().ok()?),
        None => match s.split_once('.') {
            Some((int, frac)) if !frac.is_empty() && frac.bytes().all(|b| b.is_ascii_digit()) => {
                let digits =
                    if int.is_empty() || int == "-" { format!("{int}0{frac}") } else { format!("{int}{frac}") };
                (digits.parse::<BigInt>().ok()?, num_traits::pow(BigInt::from(10), frac.len()))
            }
            Some(_) => return None,
            None => (s.parse::<BigInt>().ok()?, BigInt::from(1)),
        },
    };
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

pub fn reciprocal(n: u64) -> BigRational {
    BigRational::new(BigInt::from(1), BigInt::from(n))
}

/// Exact `Σ 1/e` by pairwise (tree) reduction. Each addition normalizes,
/// and rational addition is associative, so the split points do not affect
/// the result; large halves are summed on the rayon pool.
pub fn exact_reciprocal_sum(elements: &[u64]) -> BigRational {
    match elements.len() {
        0 => BigRational::zero(),
        1 => reciprocal(elements[0]),
        n => {
            let (lo, hi) = elements.split_at(n / 2);
            let (a, b) = if n > 2048 {
                rayon::join(|| exact_reciprocal_sum(lo), || exact_reciprocal_sum(hi))
            } else {
                (exact_reciprocal_sum(lo), exact_reciprocal_sum(hi))
            };
            a + b
        }
    }
}

/// Neumaier's error-recycling summation. Returns the sum and the sum of
/// absolute values.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> (f64, f64) {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut abs = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
        abs += v.abs();
    }
    (sum + comp, abs)
}

/// `μ` of every prefix `a_1..a_n`, `n = 1..=len`, by one running
/// compensated sum. Meant for μ-versus-n tables.
pub fn running_mu(set: &IntegerSet) -> Vec<f64> {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    set.iter()
        .map(|e| {
            let v = 1.0 / e as f64;
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
            sum + comp
        })
        .collect()
}

fn approx_reciprocal_sum(elements: &[u64]) -> (f64, f64) {
    // smallest terms first
    let (sum, abs) = compensated_sum(elements.iter().rev().map(|&e| 1.0 / e as f64));
    let n = elements.len() as f64;
    // one rounding per reciprocal, plus the compensated-summation bound
    let bound = 2.0 * UNIT_ROUNDOFF * sum.abs() + 2.0 * n * UNIT_ROUNDOFF * UNIT_ROUNDOFF * abs;
    (sum, bound)
}

fn measure_slice(elements: &[u64], cap: usize) -> ReciprocalSum {
    let (approx, error_bound) = approx_reciprocal_sum(elements);
    let exact = (elements.len() <= cap).then(|| exact_reciprocal_sum(elements));
    ReciprocalSum { exact, approx, error_bound, count: elements.len(), cap }
}

/// μ(S) with the default exactness cap.
pub fn mu(set: &IntegerSet) -> ReciprocalSum {
    mu_with_cap(set, DEFAULT_EXACT_CAP)
}

/// μ(S); the exact value is omitted when `|S| > cap`.
pub fn mu_with_cap(set: &IntegerSet, cap: usize) -> ReciprocalSum {
    measure_slice(set.as_slice(), cap)
}

/// μ(S) where the exact value is mandatory.
pub fn mu_exact(set: &IntegerSet, cap: usize) -> Result<BigRational> {
    if set.len() > cap {
        return Err(Error::ExactnessBudgetExceeded { len: set.len(), cap });
    }
    Ok(exact_reciprocal_sum(set.as_slice()))
}

/// μ of the elements at 1-based positions `from_index..`.
pub fn mu_tail(set: &IntegerSet, from_index: usize) -> Result<ReciprocalSum> {
    if from_index == 0 || from_index > set.len() + 1 {
        return Err(Error::IndexOutOfRange { index: from_index, max: set.len() + 1 });
    }
    Ok(measure_slice(&set.as_slice()[from_index - 1..], DEFAULT_EXACT_CAP))
}

/// μ of the first `count` elements.
pub fn mu_prefix(set: &IntegerSet, count: usize) -> Result<ReciprocalSum> {
    if count > set.len() {
        return Err(Error::IndexOutOfRange { index: count, max: set.len() });
    }
    Ok(measure_slice(&set.as_slice()[..count], DEFAULT_EXACT_CAP))
}

/// `p·ln p`, the reference level for greedy reciprocal sums. Natural log.
pub fn gerver_reference(p: usize) -> Result<f64> {
    validate_p(p)?;
    let p = p as f64;
    Ok(p * p.ln())
}

/// `H_B = Σ_{k<=B} 1/k`, which bounds μ of every subset of `[1, B]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicCeiling {
    pub budget: u64,
    pub estimate: f64,
    /// Certified: `H_B <= upper_bound`.
    pub upper_bound: f64,
}

const DIRECT_HARMONIC_LIMIT: u64 = 1 << 16;

pub fn harmonic_ceiling(budget: u64) -> HarmonicCeiling {
    if budget == 0 {
        return HarmonicCeiling { budget, estimate: 0.0, upper_bound: 0.0 };
    }
    if budget <= DIRECT_HARMONIC_LIMIT {
        let (sum, abs) = compensated_sum((1..=budget).rev().map(|k| 1.0 / k as f64));
        let slack = 4.0 * UNIT_ROUNDOFF * abs + f64::MIN_POSITIVE;
        return HarmonicCeiling { budget, estimate: sum, upper_bound: sum + slack };
    }
    let b = budget as f64;
    let base = b.ln() + EULER_GAMMA;
    // H_n < ln n + γ + 1/(2n) for every n >= 1
    let upper = base + 1.0 / (2.0 * b);
    HarmonicCeiling { budget, estimate: upper - 1.0 / (12.0 * b * b), upper_bound: upper + 1e-12 * upper }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greedy::generate;
    use num_traits::ToPrimitive;

    fn set(v: &[u64]) -> IntegerSet {
        IntegerSet::new(v.to_vec()).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu(&set(&[1, 2, 4])).exact().unwrap(), &q(7, 4));
        assert_eq!(mu(&IntegerSet::empty()).exact().unwrap(), &q(0, 1));
        assert_eq!(mu(&set(&[2, 4, 8, 10, 20])).exact().unwrap(), &q(41, 40));
        assert_eq!(mu(&set(&[1, 2, 4])).exact_string().unwrap(), "7/4");
        assert_eq!(mu(&IntegerSet::empty()).exact_string().unwrap(), "0/1");
    }

    #[test]
    fn tail_examples() {
        let s = set(&[1, 2, 4]);
        assert_eq!(mu_tail(&s, 2).unwrap().exact().unwrap(), &q(3, 4));
        assert_eq!(mu_tail(&s, 4).unwrap().exact().unwrap(), &q(0, 1));
        assert_eq!(mu_tail(&s, 1).unwrap().exact().unwrap(), &q(7, 4));
        assert_eq!(mu_tail(&s, 0), Err(Error::IndexOutOfRange { index: 0, max: 4 }));
        assert_eq!(mu_tail(&s, 5), Err(Error::IndexOutOfRange { index: 5, max: 4 }));

        let g = set(&[1, 2, 4, 5, 10, 11, 13, 14]);
        let expected = q(1, 10) + q(1, 11) + q(1, 13) + q(1, 14);
        assert_eq!(mu_tail(&g, 5).unwrap().exact().unwrap(), &expected);
        let whole = mu(&g).exact().unwrap().clone();
        assert_eq!(mu_prefix(&g, 4).unwrap().exact().unwrap() + &expected, whole);
    }

    #[test]
    fn json_shape() {
        let v = serde_json::to_value(mu(&set(&[1, 2, 4]))).unwrap();
        assert_eq!(v["exact"], "7/4");
        assert_eq!(v["approx"], 1.75);
        let capped = serde_json::to_value(mu_with_cap(&set(&[1, 2, 4]), 2)).unwrap();
        assert!(capped["exact"].is_null());
    }

    #[test]
    fn running_mu_matches_prefixes() {
        let s = generate(3, 300).unwrap();
        let table = running_mu(&s);
        assert_eq!(table.len(), 300);
        for n in [1, 2, 3, 50, 300] {
            let exact = mu(&s.prefix(n)).exact().unwrap().to_f64().unwrap();
            assert!((table[n - 1] - exact).abs() <= 1e-15 * exact, "n = {n}");
        }
        assert!(running_mu(&IntegerSet::empty()).is_empty());
    }

    #[test]
    fn cap_drops_exact_value() {
        let s = set(&[1, 2, 3]);
        let m = mu_with_cap(&s, 2);
        assert!(!m.is_exact());
        assert!(matches!(m.exact(), Err(Error::ExactnessBudgetExceeded { .. })));
        assert!((m.approx() - 11.0 / 6.0).abs() < 1e-15);
        assert_eq!(mu_exact(&s, 2), Err(Error::ExactnessBudgetExceeded { len: 3, cap: 2 }));
    }

    #[test]
    fn reference_values() {
        assert!((gerver_reference(3).unwrap() - 3.295_836_866_004_329).abs() < 1e-12);
        assert!((gerver_reference(4).unwrap() - 5.545_177_444_479_562).abs() < 1e-12);
        assert_eq!(gerver_reference(2), Err(Error::InvalidP(2)));
    }

    #[test]
    fn harmonic_ceiling_bounds() {
        assert_eq!(harmonic_ceiling(1).estimate, 1.0);
        let h4 = harmonic_ceiling(4);
        assert!((h4.estimate - 25.0 / 12.0).abs() < 1e-15);
        assert!(h4.upper_bound >= 25.0 / 12.0);
        // the asymptotic branch agrees with direct summation near the switch
        let direct = harmonic_ceiling(DIRECT_HARMONIC_LIMIT);
        let next = harmonic_ceiling(DIRECT_HARMONIC_LIMIT + 1);
        let step = 1.0 / (DIRECT_HARMONIC_LIMIT + 1) as f64;
        assert!((next.estimate - direct.estimate - step).abs() < 1e-12);
        assert!(next.upper_bound >= direct.estimate + step);
        let big = harmonic_ceiling(10_000_000);
        assert!(big.upper_bound < 16.7 && big.upper_bound > 16.69);
    }

    #[test]
    fn rational_text() {
        assert_eq!(parse_rational("81/40"), Some(q(81, 40)));
        assert_eq!(parse_rational("2"), Some(q(2, 1)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("0.1"), Some(q(1, 10)));
        assert_eq!(parse_rational("-0.5"), Some(q(-1, 2)));
        assert_eq!(parse_rational(".25"), Some(q(1, 4)));
        assert_eq!(parse_rational("1.5"), Some(q(3, 2)));
        assert_eq!(parse_rational("1."), None);
        assert_eq!(parse_rational("1e-3"), None);
        assert_eq!(format_rational(&q(6, 4)), "3/2");
    }

    #[test]
    fn approx_within_bound() {
        let s = IntegerSet::interval(3000).unwrap();
        let m = mu(&s);
        let exact = m.exact().unwrap().to_f64().unwrap();
        assert!((m.approx() - exact).abs() <= m.error_bound() + exact * f64::EPSILON);
    }
}
