//! Roots of pressure equations: dimensions of the limsup families and their
//! finite approximants.
//!
//! Every family reduces to `P(T, -s log|T'| + h(s)) = 0` for some offset
//! `h`. Infinite-alphabet values are the root for the alphabet `N` (explicit
//! branches up to a cutoff plus the analytic tail); the finite rungs of the
//! `M`-ladder are reported alongside.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuants::{fold_log_cylinders, Budget};
use crate::error::{Error, Result};
use crate::formulas::{self, GrowthProfile};
use crate::numeric::{bisect_decreasing, LogSum};
use crate::pressure::{
    pressure_direct, pressure_spectral, Alphabet, DepthExtrapolation, DirectOptions, Offset, Potential,
    DEFAULT_GRID,
};

/// Lower end of the infinite-alphabet bracket: the sums diverge at `s <= 1/2`.
pub const INFINITE_LO: f64 = 0.5 + 1e-6;
pub const INFINITE_HI: f64 = 1.5;
pub const FINITE_LO: f64 = 0.0;
pub const FINITE_HI: f64 = 2.0;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_LADDER: [u64; 4] = [50, 100, 200, 400];

/// Potential families whose dimension is a pressure root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `h(s) = -s log B`
    WangWu { b: f64 },
    /// `h(s) = -s log B1 + (1-s) log B2`
    TwoParam { b1: f64, b2: f64 },
    /// `h(s) = -f_m(s) log B`
    Product { b: f64, m: usize },
    /// `h(s) = -f_{t0,t1}(s) log B`
    Weighted { b: f64, t0: f64, t1: f64 },
    /// `h(s) = -(3s-1) log B`
    TanTianWang { b: f64 },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        match *self {
            Family::WangWu { b } if !(b >= 1.0 && b.is_finite()) => bad("B must be a finite number >= 1"),
            Family::TwoParam { b1, b2 } if !(b1 >= 1.0 && b2 >= 1.0 && b1.is_finite() && b2.is_finite()) => {
                bad("B1 and B2 must be finite numbers >= 1")
            }
            Family::Product { b, m } if !(b >= 1.0 && b.is_finite()) || m == 0 => {
                bad("product family needs B >= 1 and m >= 1")
            }
            Family::Weighted { b, t0, t1 } if !(b >= 1.0 && b.is_finite() && t0 > 0.0 && t1 > 0.0) => {
                bad("weighted family needs B >= 1 and t0, t1 > 0")
            }
            Family::TanTianWang { b } if !(b >= 1.0 && b.is_finite()) => bad("B must be a finite number >= 1"),
            _ => Ok(()),
        }
    }

    pub fn offset(&self) -> Offset {
        match *self {
            Family::WangWu { b } => Offset::wang_wu(b),
            Family::TwoParam { b1, b2 } => Offset::two_param(b1, b2),
            Family::Product { b, m } => {
                let log_b = b.ln();
                Offset::custom(format!("-f_{m}(s) log {b}"), move |s| {
                    -formulas::f_m_iter(m, s).unwrap_or(f64::INFINITY) * log_b
                })
            }
            Family::Weighted { b, t0, t1 } => {
                let log_b = b.ln();
                Offset::custom(format!("-f_({t0},{t1})(s) log {b}"), move |s| {
                    -formulas::weighted_f(t0, t1, s).unwrap_or(f64::INFINITY) * log_b
                })
            }
            Family::TanTianWang { b } => Offset::affine(-3.0 * b.ln(), b.ln()),
        }
    }
}

/// Pressure engine used inside the root solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum Engine {
    Spectral { grid: usize },
    Direct { depth: usize, extrapolation: DepthExtrapolation },
}

impl Default for Engine {
    fn default() -> Self {
        Engine::Spectral { grid: DEFAULT_GRID }
    }
}

/// How the reported value is obtained from the `M`-ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LadderValue {
    /// Root for the full alphabet, branches above the last rung summed
    /// analytically (spectral engine only).
    #[default]
    AnalyticTail,
    LastRung,
    /// Richardson step assuming an error `~ M^{1-2s}` between the last two rungs.
    Richardson,
    /// Aitken's delta-squared on the last three rungs (can overshoot).
    Aitken,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub engine: Engine,
    /// Finite alphabet bounds, solved independently and reported as rungs.
    pub ladder: Vec<u64>,
    pub ladder_value: LadderValue,
    pub tol: f64,
    pub max_iter: usize,
    #[serde(skip)]
    pub budget: Budget,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            engine: Engine::default(),
            ladder: DEFAULT_LADDER.to_vec(),
            ladder_value: LadderValue::AnalyticTail,
            tol: DEFAULT_TOL,
            max_iter: 200,
            budget: Budget::from_env(),
        }
    }
}

impl SolveOptions {
    /// Direct sums at one finite alphabet; the reported value is that rung.
    pub fn direct(alphabet_max: u64, depth: usize) -> Self {
        Self {
            engine: Engine::Direct { depth, extrapolation: DepthExtrapolation::Ratio },
            ladder: vec![alphabet_max],
            ladder_value: LadderValue::LastRung,
            ..Self::default()
        }
    }

    /// Spectral engine at one finite alphabet.
    pub fn finite(alphabet_max: u64) -> Self {
        Self { ladder: vec![alphabet_max], ladder_value: LadderValue::LastRung, ..Self::default() }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} must be positive", self.tol)));
        }
        if self.ladder.contains(&0) {
            return Err(Error::InvalidParameter("alphabet bounds must be >= 1".into()));
        }
        let need = match self.ladder_value {
            LadderValue::AnalyticTail => 0,
            LadderValue::LastRung => 1,
            LadderValue::Richardson => 2,
            LadderValue::Aitken => 3,
        };
        if self.ladder.len() < need {
            return Err(Error::InvalidParameter(format!(
                "{:?} needs at least {need} ladder rungs",
                self.ladder_value
            )));
        }
        if self.ladder_value == LadderValue::AnalyticTail {
            if let Engine::Direct { .. } = self.engine {
                return Err(Error::InvalidParameter("the analytic tail needs the spectral engine".into()));
            }
        }
        Ok(())
    }
}

/// Root for one alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    /// `None` for the full alphabet.
    pub alphabet_max: Option<u64>,
    pub value: f64,
    pub bracket: (f64, f64),
    pub residual: f64,
    pub boundary: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionResult {
    pub value: f64,
    pub bracket: (f64, f64),
    /// Pressure at `value`.
    pub residual: f64,
    /// The pressure was already `<= 0` at the lower end of the bracket.
    pub boundary: bool,
    pub rungs: Vec<Rung>,
    pub ladder_value: LadderValue,
}

impl DimensionResult {
    fn from_rung(rung: Rung, rungs: Vec<Rung>, ladder_value: LadderValue) -> Self {
        Self {
            value: rung.value,
            bracket: rung.bracket,
            residual: rung.residual,
            boundary: rung.boundary,
            rungs,
            ladder_value,
        }
    }

    /// A value known in closed form.
    pub fn exact(value: f64) -> Self {
        let rung = Rung {
            alphabet_max: None,
            value,
            bracket: (value, value),
            residual: 0.0,
            boundary: false,
            iterations: 0,
        };
        Self::from_rung(rung.clone(), vec![], LadderValue::AnalyticTail)
    }
}

fn pressure_at(offset: &Offset, alphabet: Alphabet, s: f64, opts: &SolveOptions) -> Result<f64> {
    let potential = Potential::new(s, offset.clone());
    let est = match opts.engine {
        Engine::Spectral { grid } => pressure_spectral(&potential, alphabet, grid)?,
        Engine::Direct { depth, extrapolation } => {
            let m = match alphabet {
                Alphabet::Finite(m) => m,
                Alphabet::Infinite { .. } => {
                    return Err(Error::InvalidParameter("direct sums need a finite alphabet".into()))
                }
            };
            let direct = DirectOptions { extrapolation, budget: opts.budget, ..DirectOptions::default() };
            pressure_direct(&potential, m, depth, &direct)?
        }
    };
    Ok(est.value)
}

/// Bisection for the sign change of a nonincreasing `p` on `[lo, hi]`.
fn solve_monotone<F>(mut p: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<Rung>
where
    F: FnMut(f64) -> Result<f64>,
{
    let p_lo = p(lo)?;
    if p_lo <= 0.0 {
        return Ok(Rung { alphabet_max: None, value: lo, bracket: (lo, lo), residual: p_lo, boundary: true, iterations: 0 });
    }
    let p_hi = p(hi)?;
    if p_hi > 0.0 {
        return Err(Error::Bracket { lo, hi, p_lo, p_hi });
    }
    let b = bisect_decreasing(&mut p, lo, hi, p_lo, p_hi, tol, max_iter)?;
    let value = b.midpoint();
    let residual = p(value)?;
    Ok(Rung {
        alphabet_max: None,
        value,
        bracket: (b.lo, b.hi),
        residual,
        boundary: false,
        iterations: b.iterations,
    })
}

fn solve_alphabet(offset: &Offset, alphabet: Alphabet, opts: &SolveOptions) -> Result<Rung> {
    let (lo, hi) = match alphabet {
        Alphabet::Finite(_) => (FINITE_LO, FINITE_HI),
        Alphabet::Infinite { .. } => (INFINITE_LO, INFINITE_HI),
    };
    let mut rung = solve_monotone(|s| pressure_at(offset, alphabet, s, opts), lo, hi, opts.tol, opts.max_iter)?;
    if let Alphabet::Finite(m) = alphabet {
        rung.alphabet_max = Some(m);
    }
    Ok(rung)
}

/// Root of `P(T, -s log|T'| + h(s)) = 0` for an arbitrary offset.
pub fn solve_root(offset: &Offset, opts: &SolveOptions) -> Result<DimensionResult> {
    opts.validate()?;
    let rungs: Vec<Rung> = opts
        .ladder
        .par_iter()
        .map(|&m| solve_alphabet(offset, Alphabet::Finite(m), opts))
        .collect::<Result<_>>()?;
    match opts.ladder_value {
        LadderValue::AnalyticTail => {
            let cutoff = opts.ladder.iter().copied().max().unwrap_or(DEFAULT_LADDER[0]);
            let full = solve_alphabet(offset, Alphabet::Infinite { cutoff }, opts)?;
            Ok(DimensionResult::from_rung(full, rungs, opts.ladder_value))
        }
        LadderValue::LastRung => {
            let last = rungs.last().cloned().expect("validated ladder");
            Ok(DimensionResult::from_rung(last, rungs, opts.ladder_value))
        }
        LadderValue::Richardson | LadderValue::Aitken => {
            let n = rungs.len();
            let value = if opts.ladder_value == LadderValue::Richardson {
                let (m1, m2) = (opts.ladder[n - 2] as f64, opts.ladder[n - 1] as f64);
                let (v1, v2) = (rungs[n - 2].value, rungs[n - 1].value);
                let r = (m2 / m1).powf(1.0 - 2.0 * v2.max(INFINITE_LO));
                (v2 - r * v1) / (1.0 - r)
            } else {
                let (a, b, c) = (rungs[n - 3].value, rungs[n - 2].value, rungs[n - 1].value);
                let curvature = c - 2.0 * b + a;
                if curvature.abs() < 1e-300 {
                    c
                } else {
                    c - (c - b) * (c - b) / curvature
                }
            };
            let residual = pressure_at(offset, Alphabet::Finite(opts.ladder[n - 1]), value, opts)?;
            let last = &rungs[n - 1];
            Ok(DimensionResult {
                value,
                bracket: last.bracket,
                residual,
                boundary: last.boundary,
                rungs,
                ladder_value: opts.ladder_value,
            })
        }
    }
}

pub fn solve_family(family: &Family, opts: &SolveOptions) -> Result<DimensionResult> {
    family.validate()?;
    solve_root(&family.offset(), opts)
}

/// Wang–Wu dimension `s_B`.
pub fn s_b(b: f64, opts: &SolveOptions) -> Result<DimensionResult> {
    solve_family(&Family::WangWu { b }, opts)
}

/// Two-parameter dimension `g_{B1,B2}`.
pub fn g_b1b2(b1: f64, b2: f64, opts: &SolveOptions) -> Result<DimensionResult> {
    solve_family(&Family::TwoParam { b1, b2 }, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DVector {
    pub d: Vec<DimensionResult>,
    pub min: f64,
    pub argmin: usize,
}

/// `d_i = g_{β_i, β_{i-1}}` (so `d_0 = s_{β_0}`) and their minimum.
pub fn d_vector(profile: &GrowthProfile, opts: &SolveOptions) -> Result<DVector> {
    let d: Vec<DimensionResult> = (0..profile.m())
        .map(|i| g_b1b2(profile.beta(i as isize), profile.beta(i as isize - 1), opts))
        .collect::<Result<_>>()?;
    let (argmin, min) = d
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if r.value < acc.1 { (i, r.value) } else { acc });
    Ok(DVector { d, min, argmin })
}

// ---------------------------------------------------------------------------
// finite approximants

/// Which finite sum `Σ_{|w| = n} ... = 1` is solved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Approximant {
    /// `Σ (B^n q_n^2)^{-s}`
    SNB { b: f64 },
    /// `Σ (B1^n q_n^2)^{-s} B2^{(1-s) n}`
    GNB1B2 { b1: f64, b2: f64 },
    /// `Σ β_{i-1}^N / ((β_i β_{i-1})^N q_N^2)^{d}`, block length `N` = depth.
    BoldD { i: usize, profile: GrowthProfile },
}

impl Approximant {
    /// `(log B1, log B2)` of the equivalent `g`-type sum.
    fn logs(&self) -> Result<(f64, f64)> {
        match self {
            Approximant::SNB { b } if *b >= 1.0 => Ok((b.ln(), 0.0)),
            Approximant::GNB1B2 { b1, b2 } if *b1 >= 1.0 && *b2 >= 1.0 => Ok((b1.ln(), b2.ln())),
            Approximant::BoldD { i, profile } if *i < profile.m() => {
                Ok((profile.log_beta(*i as isize), profile.log_beta(*i as isize - 1)))
            }
            _ => Err(Error::InvalidParameter(format!("invalid approximant parameters {self:?}"))),
        }
    }
}

/// `(log Σ q_n^{-2s}, d/ds log Σ q_n^{-2s})` in one traversal.
pub fn direct_log_sum_with_slope(alphabet_max: u64, depth: usize, s: f64, budget: Budget) -> Result<(f64, f64)> {
    let partial: Vec<(LogSum, LogSum)> = (1..=alphabet_max)
        .into_par_iter()
        .map(|a| {
            fold_log_cylinders(alphabet_max, depth, a..=a, budget, (LogSum::EMPTY, LogSum::EMPTY), |(mut z, mut dz), st| {
                let x = -2.0 * s * st.log_q;
                z.add(x);
                // words with q = 1 contribute nothing to the slope
                if st.log_q > 0.0 {
                    dz.add(x + st.log_q.ln());
                }
                (z, dz)
            })
        })
        .collect::<Result<_>>()?;
    let (z, dz) = partial
        .into_iter()
        .fold((LogSum::EMPTY, LogSum::EMPTY), |(z, dz), (a, b)| (z.merge(a), dz.merge(b)));
    let log_z = z.value();
    Ok((log_z, -2.0 * (dz.value() - log_z).exp()))
}

/// Root of the finite sum `= 1` over `{1..M}^n` in `[0, 2]`.
///
/// The log of the sum is convex and decreasing in `s`, so Newton steps from the
/// left of the root never overshoot; bisection guards every step anyway.
pub fn finite_approximant(
    kind: &Approximant,
    alphabet_max: u64,
    depth: usize,
    tol: f64,
    budget: Budget,
) -> Result<Rung> {
    let (log_b1, log_b2) = kind.logs()?;
    let n = depth as f64;
    let eval = |s: f64| -> Result<(f64, f64)> {
        let (z, dz) = direct_log_sum_with_slope(alphabet_max, depth, s, budget)?;
        Ok((z - n * s * log_b1 + n * (1.0 - s) * log_b2, dz - n * log_b1 - n * log_b2))
    };
    let (mut lo, mut hi) = (FINITE_LO, FINITE_HI);
    let (g_lo, mut slope) = eval(lo)?;
    let mut rung = Rung {
        alphabet_max: Some(alphabet_max),
        value: lo,
        bracket: (lo, lo),
        residual: g_lo,
        boundary: true,
        iterations: 0,
    };
    if g_lo <= 0.0 {
        return Ok(rung);
    }
    let (g_hi, _) = eval(hi)?;
    if g_hi > 0.0 {
        return Err(Error::Bracket { lo, hi, p_lo: g_lo, p_hi: g_hi });
    }
    let mut g = g_lo;
    let mut x = lo;
    for it in 1..=200 {
        rung.iterations = it;
        let newton = x - g / slope;
        let next = if slope < 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let step = (next - x).abs();
        x = next;
        let (gx, sx) = eval(x)?;
        if gx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        g = gx;
        slope = sx;
        if hi - lo <= tol {
            break;
        }
        if gx > 0.0 && step <= 0.5 * tol {
            // converged from the left: confirm the right end of the bracket
            let right = (x + tol).min(hi);
            let (gr, _) = eval(right)?;
            if gr <= 0.0 {
                hi = right;
                break;
            }
        }
    }
    let value = 0.5 * (lo + hi);
    rung.value = value;
    rung.bracket = (lo, hi);
    rung.residual = eval(value)?.0;
    rung.boundary = false;
    Ok(rung)
}
