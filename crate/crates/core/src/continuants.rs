//! Continued-fraction arithmetic on finite digit words.
//!
//! Convergents follow the recursion `q_{n+1} = a_{n+1} q_n + q_{n-1}` with the
//! initial values `p_{-1} = 1, q_{-1} = 0, p_0 = 0, q_0 = 1`. Every convergent
//! carries the exact integers together with `ln q_n`, accumulated in floating
//! point one digit at a time so that it stays finite long after `q_n` itself
//! would overflow an `f64`.
//!
//! For a word of length `n` the derivative of `T^n` on the cylinder is
//! `(-1)^n / (x q_{n-1} - p_{n-1})^2`, so `|(T^n)'|` is comparable to `q_n^2`
//! on the whole cylinder. All pressure sums in this crate rely on that.

use std::ops::RangeInclusive;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable that overrides the default enumeration node cap.
pub const BUDGET_ENV: &str = "CFDIM_NODE_BUDGET";

/// Finite sequence of partial quotients `(a_1, ..., a_n)`, all `>= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct DigitWord(Vec<u64>);

impl DigitWord {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if let Some(position) = digits.iter().position(|&d| d == 0) {
            return Err(Error::InvalidDigit { position, digit: 0 });
        }
        Ok(Self(digits))
    }

    /// Builds a word from signed input, rejecting anything below 1.
    pub fn from_signed(digits: &[i64]) -> Result<Self> {
        digits
            .iter()
            .enumerate()
            .map(|(position, &digit)| {
                if digit >= 1 {
                    Ok(digit as u64)
                } else {
                    Err(Error::InvalidDigit { position, digit })
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn digits(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &DigitWord) -> DigitWord {
        let mut digits = self.0.clone();
        digits.extend_from_slice(&other.0);
        DigitWord(digits)
    }
}

impl std::fmt::Display for DigitWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("[")?;
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{d}")?;
        }
        f.write_str("]")
    }
}

/// Exact convergent `p_n / q_n` of a word, plus `q_{n-1}`, `p_{n-1}` and `ln q_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Convergent {
    pub p: BigUint,
    pub q: BigUint,
    pub p_prev: BigUint,
    pub q_prev: BigUint,
    pub log_q: f64,
}

impl Convergent {
    /// Convergent of the empty word.
    pub fn initial() -> Self {
        Self {
            p: BigUint::zero(),
            q: BigUint::one(),
            p_prev: BigUint::one(),
            q_prev: BigUint::zero(),
            log_q: 0.0,
        }
    }

    /// Appends one digit. `log_q` is advanced through the ratio `q_{n-1}/q_n`
    /// rather than recomputed from the big integer.
    pub fn push(&self, digit: u64) -> Self {
        let a = BigUint::from(digit);
        let q = &a * &self.q + &self.q_prev;
        let p = &a * &self.p + &self.p_prev;
        let ratio = ratio_f64(&self.q_prev, &self.q);
        Self {
            log_q: self.log_q + (digit as f64 + ratio).ln(),
            p,
            q,
            p_prev: self.p.clone(),
            q_prev: self.q.clone(),
        }
    }

    pub fn bits(&self) -> u64 {
        self.q.bits()
    }
}

fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    match (num.to_f64(), den.to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = den.bits().saturating_sub(60);
            let n = (num >> shift).to_f64().unwrap_or(0.0);
            let d = (den >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// Exact continuants of `word`.
pub fn continuants(word: &DigitWord) -> Convergent {
    word.digits()
        .iter()
        .fold(Convergent::initial(), |c, &d| c.push(d))
}

/// Interval `I_n(word)` with exact rational endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderInterval {
    pub left: BigRational,
    pub right: BigRational,
    pub left_closed: bool,
    pub right_closed: bool,
}

impl CylinderInterval {
    pub fn length(&self) -> BigRational {
        &self.right - &self.left
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        let above = if self.left_closed { *x >= self.left } else { *x > self.left };
        let below = if self.right_closed { *x <= self.right } else { *x < self.right };
        above && below
    }
}

pub(crate) fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// `I_n = [p/q, (p+p')/(q+q'))` for even `n`, `((p+p')/(q+q'), p/q]` for odd `n`.
pub fn cylinder_interval(word: &DigitWord) -> CylinderInterval {
    if word.is_empty() {
        return CylinderInterval {
            left: BigRational::zero(),
            right: BigRational::one(),
            left_closed: true,
            right_closed: false,
        };
    }
    let c = continuants(word);
    interval_from_convergent(&c, word.len())
}

pub(crate) fn interval_from_convergent(c: &Convergent, n: usize) -> CylinderInterval {
    let near = ratio(&c.p, &c.q);
    let far = ratio(&(&c.p + &c.p_prev), &(&c.q + &c.q_prev));
    if n % 2 == 0 {
        CylinderInterval { left: near, right: far, left_closed: true, right_closed: false }
    } else {
        CylinderInterval { left: far, right: near, left_closed: false, right_closed: true }
    }
}

/// Node cap for exhaustive enumerations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    max_nodes: Option<u64>,
}

impl Budget {
    pub const DEFAULT_NODES: u64 = 2_000_000_000;

    pub fn nodes(max_nodes: u64) -> Self {
        Self { max_nodes: Some(max_nodes) }
    }

    /// Streaming mode: no cap.
    pub fn unlimited() -> Self {
        Self { max_nodes: None }
    }

    /// Default cap, overridden by `CFDIM_NODE_BUDGET` when set to an integer.
    pub fn from_env() -> Self {
        std::env::var(BUDGET_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Self::nodes)
            .unwrap_or_default()
    }

    pub fn check(&self, required: f64) -> Result<()> {
        match self.max_nodes {
            Some(budget) if required > budget as f64 => {
                Err(Error::BudgetExceeded { required, budget })
            }
            _ => Ok(()),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Self::nodes(Self::DEFAULT_NODES)
    }
}

/// Number of leaves `M^n` as a float (may exceed `u64`).
pub fn word_count(alphabet_max: u64, depth: usize) -> f64 {
    (alphabet_max as f64).powi(depth as i32)
}

fn check_shape(alphabet_max: u64, depth: usize) -> Result<()> {
    if alphabet_max == 0 {
        return Err(Error::InvalidParameter("alphabet bound M must be >= 1".into()));
    }
    if depth == 0 {
        return Err(Error::InvalidParameter("depth n must be >= 1".into()));
    }
    Ok(())
}

/// Visits all `M^n` words over `{1..M}` in lexicographic order with exact
/// convergents, depth first.
pub fn enumerate_cylinders<F>(alphabet_max: u64, depth: usize, budget: Budget, visitor: F) -> Result<()>
where
    F: FnMut(&[u64], &Convergent),
{
    enumerate_cylinders_leading(alphabet_max, depth, 1..=alphabet_max, budget, visitor)
}

/// Same as [`enumerate_cylinders`] restricted to words whose first digit lies in
/// `leading`; disjoint ranges partition the traversal.
pub fn enumerate_cylinders_leading<F>(
    alphabet_max: u64,
    depth: usize,
    leading: RangeInclusive<u64>,
    budget: Budget,
    mut visitor: F,
) -> Result<()>
where
    F: FnMut(&[u64], &Convergent),
{
    check_shape(alphabet_max, depth)?;
    budget.check(word_count(alphabet_max, depth))?;
    let mut word = Vec::with_capacity(depth);
    let root = Convergent::initial();
    for a in leading.filter(|a| (1..=alphabet_max).contains(a)) {
        word.push(a);
        let c = root.push(a);
        walk_exact(alphabet_max, depth, &mut word, &c, &mut visitor);
        word.pop();
    }
    Ok(())
}

fn walk_exact<F>(m: u64, depth: usize, word: &mut Vec<u64>, c: &Convergent, visitor: &mut F)
where
    F: FnMut(&[u64], &Convergent),
{
    if word.len() == depth {
        visitor(word, c);
        return;
    }
    for a in 1..=m {
        word.push(a);
        let next = c.push(a);
        walk_exact(m, depth, word, &next, visitor);
        word.pop();
    }
}

/// Floating-point continuant state: `ln q_n` and `q_{n-1}/q_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogContinuant {
    pub log_q: f64,
    pub ratio: f64,
}

impl LogContinuant {
    pub const ROOT: LogContinuant = LogContinuant { log_q: 0.0, ratio: 0.0 };

    #[inline]
    pub fn push(self, digit: u64) -> Self {
        let x = digit as f64 + self.ratio;
        Self { log_q: self.log_q + x.ln(), ratio: 1.0 / x }
    }

    /// `ln(q_n + y q_{n-1})`, i.e. half of `ln |(T^n)'|` at the point with
    /// `T^n x = y` inside the cylinder.
    #[inline]
    pub fn log_q_anchored(self, y: f64) -> f64 {
        self.log_q + (1.0 + y * self.ratio).ln()
    }
}

/// Depth-first fold over the `M^n` words with first digit in `leading`,
/// carrying only [`LogContinuant`] state. The leaf callback sees the state of
/// the full word.
pub fn fold_log_cylinders<A, F>(
    alphabet_max: u64,
    depth: usize,
    leading: RangeInclusive<u64>,
    budget: Budget,
    init: A,
    mut leaf: F,
) -> Result<A>
where
    F: FnMut(A, LogContinuant) -> A,
{
    check_shape(alphabet_max, depth)?;
    budget.check(word_count(alphabet_max, depth))?;
    let mut acc = init;
    for a in leading.filter(|a| (1..=alphabet_max).contains(a)) {
        acc = walk_log(alphabet_max, depth - 1, LogContinuant::ROOT.push(a), acc, &mut leaf);
    }
    Ok(acc)
}

fn walk_log<A, F>(m: u64, remaining: usize, state: LogContinuant, acc: A, leaf: &mut F) -> A
where
    F: FnMut(A, LogContinuant) -> A,
{
    if remaining == 0 {
        return leaf(acc, state);
    }
    let mut acc = acc;
    for a in 1..=m {
        acc = walk_log(m, remaining - 1, state.push(a), acc, leaf);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn w(d: &[u64]) -> DigitWord {
        DigitWord::new(d.to_vec()).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn continuants_of_small_words() {
        let c = continuants(&w(&[1, 1, 1]));
        assert_eq!((c.p.to_u64(), c.q.to_u64(), c.q_prev.to_u64()), (Some(2), Some(3), Some(2)));
        let c = continuants(&w(&[2, 2, 2]));
        assert_eq!((c.p.to_u64(), c.q.to_u64(), c.q_prev.to_u64()), (Some(5), Some(12), Some(5)));
        let c = continuants(&DigitWord::empty());
        assert_eq!((c.p.to_u64(), c.q.to_u64(), c.q_prev.to_u64()), (Some(0), Some(1), Some(0)));
    }

    #[test]
    fn zero_and_negative_digits_rejected() {
        assert_eq!(
            DigitWord::new(vec![1, 0, 2]),
            Err(Error::InvalidDigit { position: 1, digit: 0 })
        );
        assert_eq!(
            DigitWord::from_signed(&[3, -1]),
            Err(Error::InvalidDigit { position: 1, digit: -1 })
        );
    }

    #[test]
    fn single_digit_intervals() {
        let i1 = cylinder_interval(&w(&[1]));
        assert_eq!((i1.left.clone(), i1.right.clone()), (rat(1, 2), rat(1, 1)));
        assert!(!i1.left_closed && i1.right_closed);
        assert_eq!(i1.length(), rat(1, 2));

        let i2 = cylinder_interval(&w(&[2]));
        assert_eq!((i2.left.clone(), i2.right.clone()), (rat(1, 3), rat(1, 2)));
        assert_eq!(i2.length(), rat(1, 6));
    }

    #[test]
    fn empty_word_is_unit_interval() {
        let i = cylinder_interval(&DigitWord::empty());
        assert_eq!((i.left, i.right), (rat(0, 1), rat(1, 1)));
        assert!(i.left_closed && !i.right_closed);
    }

    #[test]
    fn length_of_111_cylinder() {
        // q_3 = 3, q_2 = 2 by direct recursion
        assert_eq!(cylinder_interval(&w(&[1, 1, 1])).length(), rat(1, 15));
    }

    #[test]
    fn even_length_interval_closed_on_left() {
        let i = cylinder_interval(&w(&[1, 2]));
        // p/q = 2/3, (p+p')/(q+q') = 3/4
        assert_eq!((i.left.clone(), i.right.clone()), (rat(2, 3), rat(3, 4)));
        assert!(i.left_closed && !i.right_closed);
        assert!(i.contains(&rat(2, 3)));
        assert!(!i.contains(&rat(3, 4)));
    }

    #[test]
    fn enumerates_lexicographically() {
        let mut seen = Vec::new();
        enumerate_cylinders(2, 2, Budget::default(), |word, c| {
            seen.push((word.to_vec(), c.q.to_u64().unwrap()));
        })
        .unwrap();
        assert_eq!(
            seen,
            vec![(vec![1, 1], 2), (vec![1, 2], 3), (vec![2, 1], 3), (vec![2, 2], 5)]
        );

        let mut words = Vec::new();
        enumerate_cylinders(3, 3, Budget::default(), |word, _| words.push(word.to_vec())).unwrap();
        assert_eq!(words.len(), 27);
        assert_eq!(words.first().unwrap(), &vec![1, 1, 1]);
        assert_eq!(words.last().unwrap(), &vec![3, 3, 3]);
        assert!(words.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn first_level_lengths_telescope() {
        let mut total = BigRational::zero();
        enumerate_cylinders(1000, 1, Budget::default(), |_, c| {
            total += interval_from_convergent(c, 1).length();
        })
        .unwrap();
        assert_eq!(total, BigRational::one() - rat(1, 1001));
    }

    #[test]
    fn budget_guard_refuses_large_enumerations() {
        let err = enumerate_cylinders(10, 12, Budget::nodes(1_000_000), |_, _| {}).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 1_000_000, .. }));
        assert!(fold_log_cylinders(10, 12, 1..=10, Budget::nodes(10), 0u64, |n, _| n + 1).is_err());
    }

    #[test]
    fn leading_digit_partition_covers_everything() {
        let whole = fold_log_cylinders(4, 5, 1..=4, Budget::default(), 0u64, |n, _| n + 1).unwrap();
        let parts: u64 = [1..=1, 2..=3, 4..=4]
            .into_iter()
            .map(|r| fold_log_cylinders(4, 5, r, Budget::default(), 0u64, |n, _| n + 1).unwrap())
            .sum();
        assert_eq!(whole, 1024);
        assert_eq!(parts, whole);
    }

    #[test]
    fn log_state_tracks_exact_continuants() {
        let word = [3u64, 1, 4, 1, 5, 9, 2, 6];
        let exact = continuants(&w(&word));
        let fast = word.iter().fold(LogContinuant::ROOT, |s, &d| s.push(d));
        let q = exact.q.to_f64().unwrap();
        assert!((fast.log_q - q.ln()).abs() < 1e-13);
        assert!((fast.ratio - exact.q_prev.to_f64().unwrap() / q).abs() < 1e-15);
    }

    #[test]
    fn log_q_survives_past_f64_range() {
        // 700 digits of 9 push q_n far beyond f64::MAX
        let word = w(&vec![9; 700]);
        let c = continuants(&word);
        assert!(c.q.to_f64().map_or(true, |v| v.is_infinite()));
        let bits = c.q.bits();
        let top = (&c.q >> (bits - 64)).to_f64().unwrap();
        let exact_log = top.ln() + (bits - 64) as f64 * std::f64::consts::LN_2;
        assert!(((c.log_q - exact_log) / exact_log).abs() < 1e-12);
    }
}
