//! Closed-form pieces of the applications: the iterated `f_m`, `θ_m`,
//! equalizing growth profiles, the weighted `f_{t0,t1}`, the three-case
//! classifier for `F^m_{B1,B2}` and the doubly exponential value `1/(1+b)`.

use num_bigint::BigUint;
use num_rational::Ratio;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::dimension::{g_b1b2, solve_family, DimensionResult, Family, SolveOptions};
use crate::error::{Error, Result};

/// `(A_0..A_{m-1}, c_0..c_{m-1})` with `β_{-1} = 1`, `β_i = A_0 ⋯ A_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProfile {
    pub a: Vec<f64>,
    pub c: Vec<f64>,
}

impl GrowthProfile {
    pub fn new(a: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != c.len() {
            return Err(Error::InvalidParameter(format!(
                "profile needs m >= 1 bases and as many constants (got {} and {})",
                a.len(),
                c.len()
            )));
        }
        if let Some(x) = a.iter().find(|x| !(**x > 1.0 && x.is_finite())) {
            return Err(Error::InvalidParameter(format!("growth base {x} must be a finite number > 1")));
        }
        if let Some(x) = c.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter(format!("constant {x} must be a finite number > 0")));
        }
        Ok(Self { a, c })
    }

    /// Profile with all `c_i = 1`.
    pub fn with_unit_constants(a: Vec<f64>) -> Result<Self> {
        let c = vec![1.0; a.len()];
        Self::new(a, c)
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    /// `log β_i` for `i >= -1`.
    pub fn log_beta(&self, i: isize) -> f64 {
        self.a.iter().take((i + 1).max(0) as usize).map(|x| x.ln()).sum()
    }

    pub fn beta(&self, i: isize) -> f64 {
        self.log_beta(i).exp()
    }
}

/// `f_1 = s`, `f_{k+1} = s f_k / (1 - s + f_k)`.
pub fn f_m_iter(m: usize, s: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be >= 1".into()));
    }
    let mut f = s;
    for _ in 1..m {
        let denom = 1.0 - s + f;
        if denom == 0.0 {
            return Err(Error::Pole("1 - s + f_k"));
        }
        f = s * f / denom;
    }
    Ok(f)
}

/// `Σ_{j<k} x^{k-1-j} y^j`, so that `x^k - y^k = (x - y) S_k(x, y)`.
fn geometric_sum(k: usize, x: f64, y: f64) -> f64 {
    (0..k).map(|j| x.powi((k - 1 - j) as i32) * y.powi(j as i32)).sum()
}

/// `θ_m(t) = (t^m - t(1-t)^{m-1}) / (t^m - (1-t)^m)`, evaluated with the common
/// factor `2t - 1` cancelled so that `t = 1/2` needs no special case.
pub fn theta_m(t: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::InvalidParameter("θ_m needs m >= 2".into()));
    }
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Regime(format!("θ_m needs t in (0, 1], got {t}")));
    }
    let u = 1.0 - t;
    Ok(t * geometric_sum(m - 1, t, u) / geometric_sum(m, t, u))
}

/// Dimension `t_B^(m)` of the product family `-f_m(s) log B`.
pub fn t_bm(b: f64, m: usize, opts: &SolveOptions) -> Result<DimensionResult> {
    solve_family(&Family::Product { b, m }, opts)
}

/// `A_i = B^{t^{m-1-i}(1-t)^i / S_m(t, 1-t)}`: the profile with `∏ A_i = B`
/// whose `d_i` all coincide with `t`.
pub fn equalizing_profile(b: f64, m: usize, t: f64) -> Result<GrowthProfile> {
    if !(b > 1.0) || m == 0 {
        return Err(Error::InvalidParameter("equalizing profile needs B > 1 and m >= 1".into()));
    }
    if !(t > 0.5 && t <= 1.0) {
        return Err(Error::Regime(format!("equalizing profile needs t in (1/2, 1], got {t}")));
    }
    let u = 1.0 - t;
    let total = geometric_sum(m, t, u);
    let log_b = b.ln();
    let a: Vec<f64> = (0..m)
        .map(|i| (log_b * t.powi((m - 1 - i) as i32) * u.powi(i as i32) / total).exp())
        .collect();
    let profile = GrowthProfile::with_unit_constants(a)?;
    let product = profile.log_beta(m as isize - 1);
    if (product - log_b).abs() > 1e-10 * log_b.max(1.0) {
        return Err(Error::NumericFailure { iterations: 0, residual: product - log_b });
    }
    // β_k = A_0^{S_{k+1}(t,1-t) / t^k}
    let log_a0 = profile.a[0].ln();
    for k in 0..m {
        let expected = log_a0 * geometric_sum(k + 1, t, u) / t.powi(k as i32);
        let actual = profile.log_beta(k as isize);
        if (expected - actual).abs() > 1e-10 * actual.abs().max(1.0) {
            return Err(Error::NumericFailure { iterations: k, residual: expected - actual });
        }
    }
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EqualizedProfile {
    pub t: DimensionResult,
    pub profile: GrowthProfile,
}

/// Solves for `t_B^(m)` and builds the matching equalizing profile.
pub fn equalize(b: f64, m: usize, opts: &SolveOptions) -> Result<EqualizedProfile> {
    let t = t_bm(b, m, opts)?;
    let profile = equalizing_profile(b, m, t.value)?;
    Ok(EqualizedProfile { t, profile })
}

/// `s/t1 - (2s-1)/t0`; the weighted formula switches branch at its sign.
pub fn weighted_regime(t0: f64, t1: f64, s: f64) -> f64 {
    s / t1 - (2.0 * s - 1.0) / t0
}

/// `f_{t0,t1}(s) = s f_{t0}(s) / (t1 [f_{t0}(s) + max(0, s/t1 - (2s-1)/t0)])`
/// with `f_{t0}(s) = s/t0`.
pub fn weighted_f(t0: f64, t1: f64, s: f64) -> Result<f64> {
    if !(t0 > 0.0 && t1 > 0.0) {
        return Err(Error::InvalidParameter("weights t0, t1 must be > 0".into()));
    }
    let f_t0 = s / t0;
    let denom = t1 * (f_t0 + weighted_regime(t0, t1, s).max(0.0));
    if denom == 0.0 {
        return Err(Error::Pole("t1 (f_t0 + max(0, s/t1 - (2s-1)/t0))"));
    }
    Ok(s * f_t0 / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedResult {
    pub dimension: DimensionResult,
    /// `s/t1 - (2s-1)/t0` at the root.
    pub regime: f64,
    /// False when the branch of the max changes inside the final bracket.
    pub regime_stable: bool,
}

/// Root of `P(T, -f_{t0,t1}(s) log B - s log|T'|) = 0`.
///
/// The branch of the max is evaluated at the trial `s` itself, which is the
/// fixed point of "solve, re-read the branch, re-solve"; the branch at the
/// root is reported, and a flag is lowered if it flips inside the bracket.
pub fn weighted_dimension(b: f64, t0: f64, t1: f64, opts: &SolveOptions) -> Result<WeightedResult> {
    let dimension = solve_family(&Family::Weighted { b, t0, t1 }, opts)?;
    let (lo, hi) = dimension.bracket;
    let regime = weighted_regime(t0, t1, dimension.value);
    let stable = (weighted_regime(t0, t1, lo) > 0.0) == (weighted_regime(t0, t1, hi) > 0.0);
    Ok(WeightedResult { dimension, regime, regime_stable: stable })
}

/// `1/(1+b)` for `b > 1`.
pub fn doubly_exponential_dim(b: f64) -> Result<f64> {
    if !(b > 1.0) {
        return Err(Error::Regime(format!("doubly exponential growth needs b > 1, got {b}")));
    }
    Ok(1.0 / (1.0 + b))
}

/// `B` for the potential `-(3s-1) log B`; `Infinite` stands for doubly
/// exponential growth with exponent `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TtwBase {
    Finite { b: f64 },
    Infinite { exponent: f64 },
}

pub fn ttw_dimension(base: TtwBase, opts: &SolveOptions) -> Result<DimensionResult> {
    match base {
        TtwBase::Infinite { exponent } => Ok(DimensionResult::exact(doubly_exponential_dim(exponent)?)),
        TtwBase::Finite { b } if b == 1.0 => Ok(DimensionResult::exact(1.0)),
        TtwBase::Finite { b } => solve_family(&Family::TanTianWang { b }, opts),
    }
}

// ---------------------------------------------------------------------------
// the F^m_{B1,B2} classifier

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FmCase {
    Empty,
    GRegime,
    TRegime,
}

/// The subset conditions on the witness set at one block start `n_k`, in logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub n_k: u32,
    /// `c_0⋯c_{m-1} (A_0⋯A_{m-1})^{n_k} >= B1^{n_k}`
    pub lower_product: bool,
    /// `c_0⋯c_{m-2} (A_0⋯A_{m-2})^{n_k} < B2^{n_k - 1}`
    pub head_product: bool,
    /// `c_1⋯c_{m-1} (A_1⋯A_{m-1})^{n_k} < B2^{n_k}`
    pub tail_product: bool,
    /// Head and tail conditions with the digit upper bounds `2 c_i A_i^{n_k}`.
    pub with_digit_ceilings: bool,
}

impl SubsetCheck {
    pub fn holds(&self) -> bool {
        self.lower_product && self.head_product && self.tail_product
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmCaseResult {
    pub case: FmCase,
    pub dimension: Option<f64>,
    /// `t_{B1}^(m)`.
    pub t: f64,
    pub theta: f64,
    /// Set when `log B2` is within the relative tolerance of `θ_m log B1`;
    /// `dimension` then follows `case` and the other regime's value is here.
    pub boundary_alternate: Option<(FmCase, f64)>,
    pub witness: Option<GrowthProfile>,
    pub subset_check: Option<SubsetCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub solve: SolveOptions,
    /// Relative tolerance on `log B2` against `θ_m log B1`.
    pub boundary_rel_tol: f64,
    pub sample_n_k: u32,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { solve: SolveOptions::default(), boundary_rel_tol: 1e-6, sample_n_k: 50 }
    }
}

/// Witness profile with `β_{m-1} = B1`, `β_{m-2} = head`, and `A_k = A_0^{r^k}`,
/// `r = (1-t)/t`, for `k <= m-2`.
fn witness_bases(b1: f64, head: f64, m: usize, t: f64) -> Vec<f64> {
    let r = (1.0 - t) / t;
    let weights: Vec<f64> = (0..m - 1).map(|k| r.powi(k as i32)).collect();
    let log_a0 = head.ln() / weights.iter().sum::<f64>();
    let mut a: Vec<f64> = weights.iter().map(|w| (log_a0 * w).exp()).collect();
    a.push(b1 / head);
    a
}

fn witness_constants(case: FmCase, b2: f64, m: usize) -> Vec<f64> {
    let mut c = vec![1.0; m];
    let two = 2f64.powi(m as i32 - 1);
    if case == FmCase::TRegime && m >= 3 {
        c[0] = two * b2;
        c[1] = 1.0 / (b2.powi(3) * two * two);
        c[m - 1] = b2 * b2 * two;
    } else {
        // with m = 2 the first and last constants coincide, so the t-regime
        // uses the same two constants as the g-regime
        c[m - 2] = 1.0 / (b2 * b2);
        c[m - 1] = b2 * b2;
    }
    c
}

pub fn subset_check(profile: &GrowthProfile, b1: f64, b2: f64, n_k: u32) -> SubsetCheck {
    let m = profile.m();
    let n = n_k as f64;
    let log_digit = |i: usize| profile.c[i].ln() + n * profile.a[i].ln();
    let all: f64 = (0..m).map(log_digit).sum();
    let head: f64 = (0..m - 1).map(log_digit).sum();
    let tail: f64 = (1..m).map(log_digit).sum();
    let ceiling = (m - 1) as f64 * 2f64.ln();
    // tiny slack so that equality cases built from logs are not lost to rounding
    let slack = 1e-9 * n * b1.ln().max(1.0);
    SubsetCheck {
        n_k,
        lower_product: all >= n * b1.ln() - slack,
        head_product: head < (n - 1.0) * b2.ln(),
        tail_product: tail < n * b2.ln(),
        with_digit_ceilings: head + ceiling < (n - 1.0) * b2.ln() && tail + ceiling < n * b2.ln(),
    }
}

/// Three-case classification of `F^m_{B1,B2}` with its dimension.
pub fn classify_fm(b1: f64, b2: f64, m: usize, opts: &ClassifyOptions) -> Result<FmCaseResult> {
    if !(b1 > 1.0 && b2 > 1.0 && b1.is_finite() && b2.is_finite()) {
        return Err(Error::InvalidParameter("B1 and B2 must be finite numbers > 1".into()));
    }
    if m < 2 {
        return Err(Error::InvalidParameter("the classifier needs m >= 2".into()));
    }
    let t = t_bm(b1, m, &opts.solve)?.value;
    let theta = theta_m(t, m)?;
    if b2 * b2 <= b1 {
        return Ok(FmCaseResult {
            case: FmCase::Empty,
            dimension: None,
            t,
            theta,
            boundary_alternate: None,
            witness: None,
            subset_check: None,
        });
    }
    let threshold = theta * b1.ln();
    let gap = b2.ln() - threshold;
    let on_boundary = gap.abs() <= opts.boundary_rel_tol * threshold.abs();
    let case = if gap >= 0.0 { FmCase::TRegime } else { FmCase::GRegime };
    let g_value = || g_b1b2(b1, b2, &opts.solve).map(|r| r.value);
    let dimension = match case {
        FmCase::TRegime => t,
        _ => g_value()?,
    };
    let boundary_alternate = if on_boundary {
        Some(match case {
            FmCase::TRegime => (FmCase::GRegime, g_value()?),
            _ => (FmCase::TRegime, t),
        })
    } else {
        None
    };
    let head = match case {
        FmCase::TRegime => threshold.exp(),
        _ => b2,
    };
    let witness = GrowthProfile::new(witness_bases(b1, head, m, t), witness_constants(case, b2, m))?;
    let check = subset_check(&witness, b1, b2, opts.sample_n_k);
    Ok(FmCaseResult {
        case,
        dimension: Some(dimension),
        t,
        theta,
        boundary_alternate,
        witness: Some(witness),
        subset_check: Some(check),
    })
}

/// Checks one instance of the emptiness argument for `B2 <= √B1`: if the
/// digits `a_n..a_{n+m-1}` meet both upper conditions, their product must stay
/// below `B1^n`. Returns `Some(true)` for a counterexample, `Some(false)` when
/// the chain holds, `None` if the digits miss the hypotheses. Bases are exact
/// rationals and every comparison is done in integers.
pub fn emptiness_chain_counterexample(digits: &[u64], n: u32, b1: Ratio<u64>, b2: Ratio<u64>) -> Option<bool> {
    let m = digits.len();
    if m < 2 || n == 0 || digits.contains(&0) {
        return None;
    }
    let product = |ds: &[u64]| ds.iter().fold(BigUint::one(), |acc, &d| acc * d);
    let pow = |x: u64, k: u32| BigUint::from(x).pow(k);
    // x < (p/q)^k  <=>  x q^k < p^k
    let below = |x: &BigUint, b: Ratio<u64>, k: u32| x * pow(*b.denom(), k) < pow(*b.numer(), k);
    let tail = product(&digits[1..]);
    let head = product(&digits[..m - 1]);
    if !below(&tail, b2, n) || !below(&head, b2, n - 1) {
        return None;
    }
    Some(!below(&product(digits), b1, n))
}
