//! Restricted pressure of the Gauss map for potentials `-s log|T'| + h(s)`.
//!
//! Two independent engines:
//!
//! * **direct** – cylinder sums `Σ q_n^{-2s}` over all words of length `n` in
//!   `{1..M}^n`, folded in the log domain. With `S_n ψ = -s log q_n^2 + n h(s)`
//!   the `n`-th approximant is `(1/n) log Σ q_n^{-2s} + h(s)`. The depth-ladder
//!   estimate uses the ratio `log Z_n - log Z_{n-1}`, which removes the `O(1/n)`
//!   bias of the plain approximant and converges geometrically.
//! * **spectral** – the leading eigenvalue `λ` of the transfer operator
//!   `(L_s f)(x) = Σ_a (a+x)^{-2s} f(1/(a+x))`, discretised by polynomial
//!   collocation at Chebyshev–Lobatto nodes on `[0,1]`; the pressure is
//!   `log λ + h(s)`. For an infinite alphabet the branches `a > M` are summed
//!   analytically through Hurwitz zeta values applied to the Taylor
//!   coefficients of the interpolant at `0`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuants::{Budget, LogContinuant};
use crate::error::{Error, Result};
use crate::numeric::{hurwitz_zeta, LogSum};

/// The `h(s)` part of a potential `-s log|T'| + h(s)`; constant in `x`.
#[derive(Clone)]
pub enum Offset {
    /// `h(s) = slope * s + intercept`
    Affine { slope: f64, intercept: f64 },
    Custom { label: String, map: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl Offset {
    pub fn zero() -> Self {
        Self::Affine { slope: 0.0, intercept: 0.0 }
    }

    pub fn affine(slope: f64, intercept: f64) -> Self {
        Self::Affine { slope, intercept }
    }

    /// `-s log B`
    pub fn wang_wu(b: f64) -> Self {
        Self::affine(-b.ln(), 0.0)
    }

    /// `-s log B1 + (1-s) log B2`
    pub fn two_param(b1: f64, b2: f64) -> Self {
        Self::affine(-b1.ln() - b2.ln(), b2.ln())
    }

    pub fn custom(label: impl Into<String>, map: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::Custom { label: label.into(), map: Arc::new(map) }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Self::Affine { slope, intercept } => slope * s + intercept,
            Self::Custom { map, .. } => map(s),
        }
    }

    /// Same offset plus a constant `c`.
    pub fn shifted(&self, c: f64) -> Self {
        match self {
            Self::Affine { slope, intercept } => Self::affine(*slope, intercept + c),
            Self::Custom { label, map } => {
                let map = Arc::clone(map);
                Self::custom(format!("{label}{c:+}"), move |s| map(s) + c)
            }
        }
    }
}

impl fmt::Debug for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Affine { slope, intercept } => {
                write!(f, "Affine({slope}*s + {intercept})")
            }
            Self::Custom { label, .. } => write!(f, "Custom({label})"),
        }
    }
}

/// Potential `-s log|T'(x)| + h(s)` at a fixed exponent `s`.
#[derive(Debug, Clone)]
pub struct Potential {
    pub s: f64,
    pub offset: Offset,
}

impl Potential {
    pub fn new(s: f64, offset: Offset) -> Self {
        Self { s, offset }
    }

    pub fn h(&self) -> f64 {
        self.offset.eval(self.s)
    }
}

/// Digit set `{1..M}`, or all of `N` with branches above `cutoff` summed analytically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alphabet {
    Finite(u64),
    Infinite { cutoff: u64 },
}

impl Alphabet {
    pub fn max_explicit(&self) -> u64 {
        match *self {
            Alphabet::Finite(m) => m,
            Alphabet::Infinite { cutoff } => cutoff,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Alphabet::Infinite { .. })
    }
}

impl From<u64> for Alphabet {
    fn from(m: u64) -> Self {
        Alphabet::Finite(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    DirectSum,
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureEstimate {
    pub value: f64,
    /// `value - h(s)`: the part that does not depend on the offset.
    pub base: f64,
    pub offset: f64,
    pub method: Method,
    pub alphabet_max: u64,
    pub infinite_alphabet: bool,
    pub depth: Option<usize>,
    pub grid_size: Option<usize>,
    /// Upper bound for the branch weight `Σ_{a>M} a^{-2s}` that the estimate leaves out.
    pub tail_bound: f64,
    /// Heuristic error indication: ladder increment (direct) or eigen-residual (spectral).
    pub error_estimate: f64,
}

/// `Σ_{a>M} a^{-2s} <= M^{1-2s} / (2s-1)` for `s > 1/2`.
pub fn tail_bound(alphabet_max: u64, s: f64) -> f64 {
    if s <= 0.5 {
        f64::INFINITY
    } else {
        (alphabet_max as f64).powf(1.0 - 2.0 * s) / (2.0 * s - 1.0)
    }
}

// ---------------------------------------------------------------------------
// direct cylinder sums

/// Point of the cylinder at which `|(T^n)'|` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// `|(T^n)'| ~ q_n^2`, i.e. `T^n x = 0`.
    #[default]
    Continuant,
    LeftEndpoint,
    Midpoint,
}

impl Anchor {
    #[inline]
    fn log_q(self, state: LogContinuant, depth: usize) -> f64 {
        match self {
            Anchor::Continuant => state.log_q,
            // odd n: left endpoint is (p+p')/(q+q'), i.e. T^n x = 1
            Anchor::LeftEndpoint if depth % 2 == 1 => state.log_q_anchored(1.0),
            Anchor::LeftEndpoint => state.log_q,
            Anchor::Midpoint => state.log_q_anchored(1.0 / (2.0 + state.ratio)),
        }
    }
}

trait Accumulator: Clone + Send {
    fn empty() -> Self;
    fn add_log(&mut self, x: f64);
    fn merge(self, other: Self) -> Self;
    fn log_value(&self) -> f64;
}

#[derive(Clone, Copy)]
struct Plain(f64);

impl Accumulator for Plain {
    fn empty() -> Self {
        Plain(0.0)
    }
    #[inline]
    fn add_log(&mut self, x: f64) {
        self.0 += x.exp();
    }
    fn merge(self, other: Self) -> Self {
        Plain(self.0 + other.0)
    }
    fn log_value(&self) -> f64 {
        self.0.ln()
    }
}

impl Accumulator for LogSum {
    fn empty() -> Self {
        LogSum::EMPTY
    }
    #[inline]
    fn add_log(&mut self, x: f64) {
        self.add(x)
    }
    fn merge(self, other: Self) -> Self {
        LogSum::merge(self, other)
    }
    fn log_value(&self) -> f64 {
        self.value()
    }
}

fn walk_levels<A: Accumulator>(
    m: u64,
    depth: usize,
    max_depth: usize,
    state: LogContinuant,
    minus_two_s: f64,
    anchor: Anchor,
    sums: &mut [A],
) {
    sums[depth - 1].add_log(minus_two_s * anchor.log_q(state, depth));
    if depth == max_depth {
        return;
    }
    for a in 1..=m {
        walk_levels(m, depth + 1, max_depth, state.push(a), minus_two_s, anchor, sums);
    }
}

fn level_sums<A: Accumulator>(m: u64, max_depth: usize, s: f64, anchor: Anchor) -> Vec<f64> {
    (1..=m)
        .into_par_iter()
        .map(|a| {
            let mut sums = vec![A::empty(); max_depth];
            walk_levels(m, 1, max_depth, LogContinuant::ROOT.push(a), -2.0 * s, anchor, &mut sums);
            sums
        })
        .reduce(
            || vec![A::empty(); max_depth],
            |x, y| x.into_iter().zip(y).map(|(p, q)| p.merge(q)).collect(),
        )
        .iter()
        .map(A::log_value)
        .collect()
}

fn check_direct(alphabet_max: u64, depth: usize, s: f64, budget: Budget) -> Result<()> {
    if alphabet_max == 0 || depth == 0 {
        return Err(Error::InvalidParameter("direct sums need M >= 1 and n >= 1".into()));
    }
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("exponent s = {s} must be finite and >= 0")));
    }
    let nodes: f64 = (1..=depth).map(|d| crate::continuants::word_count(alphabet_max, d)).sum();
    budget.check(nodes)
}

/// `log Σ_{|w| = d} q_d(w)^{-2s}` for every `d = 1..=max_depth`, from a single
/// depth-first traversal of `{1..M}^max_depth`.
pub fn direct_log_sums(
    alphabet_max: u64,
    max_depth: usize,
    s: f64,
    anchor: Anchor,
    budget: Budget,
) -> Result<Vec<f64>> {
    check_direct(alphabet_max, max_depth, s, budget)?;
    // plain summation is safe while the smallest term stays far from underflow
    let worst = 2.0 * s * max_depth as f64 * ((alphabet_max + 2) as f64).ln();
    Ok(if worst < 600.0 {
        level_sums::<Plain>(alphabet_max, max_depth, s, anchor)
    } else {
        level_sums::<LogSum>(alphabet_max, max_depth, s, anchor)
    })
}

fn direct_log_sum(alphabet_max: u64, depth: usize, s: f64, budget: Budget) -> Result<f64> {
    Ok(direct_log_sums(alphabet_max, depth, s, Anchor::Continuant, budget)?[depth - 1])
}

/// `log f_n^(1)(s) = log Σ (B^n q_n^2)^{-s}`.
pub fn direct_sum_f1(alphabet_max: u64, depth: usize, s: f64, log_b: f64, budget: Budget) -> Result<f64> {
    let n = depth as f64;
    Ok(direct_log_sum(alphabet_max, depth, s, budget)? - n * s * log_b)
}

/// `log f_n^(2)(s) = log Σ (B1^n q_n^2)^{-s} B2^{(1-s) n}`.
pub fn direct_sum_f2(
    alphabet_max: u64,
    depth: usize,
    s: f64,
    log_b1: f64,
    log_b2: f64,
    budget: Budget,
) -> Result<f64> {
    let n = depth as f64;
    Ok(direct_log_sum(alphabet_max, depth, s, budget)? - n * s * log_b1 + n * (1.0 - s) * log_b2)
}

/// How the depth ladder `log Z_1, ..., log Z_n` is turned into one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthExtrapolation {
    /// `(1/n) log Z_n`
    Plain,
    /// `log Z_n - log Z_{n-1}`
    #[default]
    Ratio,
    /// Aitken's delta-squared on the last three ratio estimates.
    Aitken,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectOptions {
    pub extrapolation: DepthExtrapolation,
    pub anchor: Anchor,
    pub budget: Budget,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            extrapolation: DepthExtrapolation::Ratio,
            anchor: Anchor::Continuant,
            budget: Budget::from_env(),
        }
    }
}

/// Collapses `log Z_d` (index `d - 1`) into an estimate and an error indication.
pub fn extrapolate_ladder(log_sums: &[f64], mode: DepthExtrapolation) -> (f64, f64) {
    let depth = log_sums.len();
    // log Z_0 = 0: the empty word has q_0 = 1
    let log_z = |d: usize| if d == 0 { 0.0 } else { log_sums[d - 1] };
    let ratio = |d: usize| log_z(d) - log_z(d - 1);
    match mode {
        DepthExtrapolation::Plain => {
            let plain = |d: usize| log_z(d) / d as f64;
            let err = if depth >= 2 { (plain(depth) - plain(depth - 1)).abs() } else { f64::INFINITY };
            (plain(depth), err)
        }
        DepthExtrapolation::Ratio => {
            let err = if depth >= 2 { (ratio(depth) - ratio(depth - 1)).abs() } else { f64::INFINITY };
            (ratio(depth), err)
        }
        DepthExtrapolation::Aitken => {
            if depth < 3 {
                return extrapolate_ladder(log_sums, DepthExtrapolation::Ratio);
            }
            let (a, b, c) = (ratio(depth - 2), ratio(depth - 1), ratio(depth));
            let curvature = c - 2.0 * b + a;
            if curvature.abs() < 1e-300 {
                return (c, (c - b).abs());
            }
            let accelerated = c - (c - b) * (c - b) / curvature;
            (accelerated, (accelerated - c).abs())
        }
    }
}

/// Direct-sum pressure estimate at depth `n` over `{1..M}`.
pub fn pressure_direct(
    potential: &Potential,
    alphabet_max: u64,
    depth: usize,
    opts: &DirectOptions,
) -> Result<PressureEstimate> {
    let s = potential.s;
    let logs = direct_log_sums(alphabet_max, depth, s, opts.anchor, opts.budget)?;
    let (base, error_estimate) = extrapolate_ladder(&logs, opts.extrapolation);
    let offset = potential.h();
    Ok(PressureEstimate {
        value: base + offset,
        base,
        offset,
        method: Method::DirectSum,
        alphabet_max,
        infinite_alphabet: false,
        depth: Some(depth),
        grid_size: None,
        tail_bound: tail_bound(alphabet_max, s),
        error_estimate,
    })
}

// ---------------------------------------------------------------------------
// spectral engine

pub const DEFAULT_GRID: usize = 32;
const MAX_POWER_ITERATIONS: usize = 5000;
const POWER_TOL: f64 = 1e-12;
// Taylor terms and circle points used for the analytic tail
const TAIL_TERMS: usize = 16;
const CIRCLE_POINTS: usize = 32;

/// Chebyshev–Lobatto nodes on `[0, 1]` with barycentric weights.
#[derive(Debug, Clone)]
struct Collocation {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Collocation {
    fn new(n: usize) -> Self {
        let last = (n - 1) as f64;
        let nodes = (0..n).map(|j| 0.5 * (1.0 - (PI * j as f64 / last).cos())).collect();
        let weights = (0..n)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == n - 1 {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        Self { nodes, weights }
    }

    /// Values of all Lagrange basis polynomials at `y`, added into `row` with factor `scale`.
    fn accumulate_basis(&self, y: f64, scale: f64, row: &mut [f64]) {
        let mut denom = 0.0;
        for (j, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let d = y - x;
            if d.abs() < 1e-15 {
                row[j] += scale;
                return;
            }
            denom += w / d;
        }
        for (j, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            row[j] += scale * (w / (y - x)) / denom;
        }
    }

    fn basis_complex(&self, y: Complex64) -> Vec<Complex64> {
        let terms: Vec<Complex64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| Complex64::new(w, 0.0) / (y - x))
            .collect();
        let denom: Complex64 = terms.iter().sum();
        terms.into_iter().map(|t| t / denom).collect()
    }

    /// `G[k][j]` such that `Σ_j G[k][j] f(x_j) = c_k r^k` for the interpolant
    /// `f(y) = Σ c_k y^k`, by the trapezoid rule on the circle `|y| = r`.
    fn scaled_taylor_functionals(&self, radius: f64) -> Vec<Vec<f64>> {
        let n = self.nodes.len();
        let mut g = vec![vec![0.0; n]; TAIL_TERMS];
        for p in 0..CIRCLE_POINTS {
            let theta = 2.0 * PI * p as f64 / CIRCLE_POINTS as f64;
            let omega = Complex64::from_polar(1.0, theta);
            let basis = self.basis_complex(omega * radius);
            for (k, row) in g.iter_mut().enumerate() {
                let rot = Complex64::from_polar(1.0, -(k as f64) * theta);
                for (j, b) in basis.iter().enumerate() {
                    row[j] += (b * rot).re / CIRCLE_POINTS as f64;
                }
            }
        }
        g
    }
}

/// Collocation matrix of the transfer operator `L_s`.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    alphabet: Alphabet,
    s: f64,
    matrix: Vec<Vec<f64>>,
}

impl TransferOperator {
    pub fn new(alphabet: Alphabet, s: f64, grid_size: usize) -> Result<Self> {
        if grid_size < 8 {
            return Err(Error::InvalidParameter(format!("grid size {grid_size} < 8")));
        }
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("exponent s = {s} must be finite and >= 0")));
        }
        let explicit = alphabet.max_explicit();
        if explicit == 0 {
            return Err(Error::InvalidParameter("alphabet bound M must be >= 1".into()));
        }
        if alphabet.is_infinite() && s <= 0.5 {
            return Err(Error::Divergence { s });
        }
        let grid = Collocation::new(grid_size);
        let tail = match alphabet {
            Alphabet::Infinite { cutoff } => {
                let shift = (cutoff + 1) as f64;
                Some((shift, grid.scaled_taylor_functionals(1.0 / shift)))
            }
            Alphabet::Finite(_) => None,
        };
        let matrix = grid
            .nodes
            .par_iter()
            .map(|&x| {
                let mut row = vec![0.0; grid_size];
                for a in 1..=explicit {
                    let y = 1.0 / (a as f64 + x);
                    grid.accumulate_basis(y, y.powf(2.0 * s), &mut row);
                }
                if let Some((shift, g)) = &tail {
                    // Σ_{a>M} (a+x)^{-2s} f(1/(a+x)) = Σ_k c_k ζ(2s+k, M+1+x)
                    let mut scale = 1.0;
                    for (k, gk) in g.iter().enumerate() {
                        let factor = hurwitz_zeta(2.0 * s + k as f64, shift + x) * scale;
                        for (r, gv) in row.iter_mut().zip(gk) {
                            *r += factor * gv;
                        }
                        scale *= shift;
                    }
                }
                row
            })
            .collect();
        Ok(Self { alphabet, s, matrix })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn grid_size(&self) -> usize {
        self.matrix.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Leading eigenvalue and eigenvector (sup-normalised) by power iteration.
    pub fn leading_eigenpair(&self) -> Result<(f64, Vec<f64>, f64)> {
        let n = self.matrix.len();
        let mut v = vec![1.0; n];
        let mut lambda = 0.0;
        let mut residual = f64::INFINITY;
        for it in 1..=MAX_POWER_ITERATIONS {
            let w = self.apply(&v);
            let (idx, _) = v
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
            let next = w[idx] / v[idx];
            let norm = w.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if !(norm > 0.0) || !next.is_finite() {
                return Err(Error::NumericFailure { iterations: it, residual });
            }
            residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - next * b).abs())
                .fold(0.0, f64::max)
                / norm;
            let settled = (next - lambda).abs() <= POWER_TOL * next.abs();
            lambda = next;
            v = w.into_iter().map(|x| x / norm).collect();
            if settled && residual <= 1e-10 {
                return Ok((lambda, v, residual));
            }
        }
        Err(Error::NumericFailure { iterations: MAX_POWER_ITERATIONS, residual })
    }
}

/// Leading eigenvalue `λ_M(s)` of the discretised transfer operator.
pub fn transfer_eigenvalue(alphabet: impl Into<Alphabet>, s: f64, grid_size: usize) -> Result<f64> {
    TransferOperator::new(alphabet.into(), s, grid_size)?
        .leading_eigenpair()
        .map(|(lambda, _, _)| lambda)
}

/// Spectral pressure estimate `log λ + h(s)`.
pub fn pressure_spectral(
    potential: &Potential,
    alphabet: impl Into<Alphabet>,
    grid_size: usize,
) -> Result<PressureEstimate> {
    let alphabet = alphabet.into();
    let s = potential.s;
    let op = TransferOperator::new(alphabet, s, grid_size)?;
    let (lambda, _, residual) = op.leading_eigenpair()?;
    if lambda <= 0.0 {
        return Err(Error::NumericFailure { iterations: 0, residual });
    }
    let base = lambda.ln();
    let offset = potential.h();
    let m = alphabet.max_explicit();
    let tail = match alphabet {
        Alphabet::Finite(_) => tail_bound(m, s),
        // remaining error is the Taylor truncation of the analytic tail
        Alphabet::Infinite { .. } => tail_bound(m, s) * ((m + 1) as f64).powi(-(TAIL_TERMS as i32)),
    };
    Ok(PressureEstimate {
        value: base + offset,
        base,
        offset,
        method: Method::Spectral,
        alphabet_max: m,
        infinite_alphabet: alphabet.is_infinite(),
        depth: None,
        grid_size: Some(grid_size),
        tail_bound: tail,
        error_estimate: residual,
    })
}
