//! Desk-scale materialisation of the Cantor subset behind the lower bound:
//! schedules, the levels `D_n`, basic cylinders `J_n`, the `m` mass
//! distributions and mechanical checks of their lemmas.
//!
//! Positions are 1-based. Segment `k` starts at `n_{k-1} + m` (with
//! `n_0 = 1 - m`) and holds `ℓ_k` blocks of `N` free digits, then (padded mode
//! only) a run of digits fixed to `2`, then the growth digits at
//! `n_k .. n_k + m - 1`. Past the last scheduled segment the blocks continue.
//! A node at depth `n` is a word of `D_n`; its kind is the kind of position
//! `n + 1`, which decides the children and hence the shape of `J_n`.

use std::io::Write;

use num_bigint::{BigInt, BigUint};
use serde::{Deserialize, Serialize};

use crate::continuants::{Budget, Convergent, LogContinuant};
use crate::dimension::{finite_approximant, Approximant};
use crate::error::{Error, Result};
use crate::formulas::GrowthProfile;
use crate::numeric::{format_sig, ln_biguint, LogSum};

pub const DEFAULT_THRESHOLD_LOG2: f64 = 4.0;
pub const PAPER_THRESHOLD_LOG2: f64 = 100.0;
pub const DEFAULT_BIT_CAP: u64 = 4096;
/// Relaxed constant in `G_n >= |J_n| / (κ M)`; see [`GapReport`].
pub const DEFAULT_GAP_FACTOR: f64 = 4.0;
const MAX_BLOCK_WORDS: f64 = 4e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorParams {
    pub alphabet_max: u64,
    pub block_len: usize,
    pub profile: GrowthProfile,
    pub eps: f64,
    /// `log2 C` in the block-length threshold `(2^{(N-1)/2})^{ε/2} >= C`.
    pub threshold_log2: f64,
    pub enforce_threshold: bool,
    /// Largest continuant size (bits) for exact geometry.
    pub bit_cap: u64,
}

impl CantorParams {
    pub fn new(alphabet_max: u64, block_len: usize, profile: GrowthProfile, eps: f64) -> Self {
        Self {
            alphabet_max,
            block_len,
            profile,
            eps,
            threshold_log2: DEFAULT_THRESHOLD_LOG2,
            enforce_threshold: false,
            bit_cap: DEFAULT_BIT_CAP,
        }
    }

    pub fn m(&self) -> usize {
        self.profile.m()
    }

    fn validate(&self) -> Result<()> {
        if self.alphabet_max < 2 {
            return Err(Error::InvalidParameter("alphabet bound M must be >= 2".into()));
        }
        if self.block_len == 0 {
            return Err(Error::InvalidParameter("block length N must be >= 1".into()));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("ε = {} must be > 0", self.eps)));
        }
        if (self.alphabet_max as f64).powi(self.block_len as i32) > MAX_BLOCK_WORDS {
            return Err(Error::InvalidParameter(format!(
                "M^N = {}^{} block words exceed the table limit {MAX_BLOCK_WORDS}",
                self.alphabet_max, self.block_len
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `n_k - n_{k-1} = ℓ_k N + m`
    Strict,
    /// Arbitrary `n_k`; the slack is filled with digits fixed to `2`.
    Padded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// First position of the segment.
    pub start: u64,
    pub ell: u64,
    pub padding: u64,
    pub n_k: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub log2_c: f64,
    pub satisfied: bool,
    pub min_block_len: u64,
}

/// Smallest `N` with `(N-1)/2 · ε/2 >= log2 C`.
pub fn threshold_min_block_len(eps: f64, log2_c: f64) -> u64 {
    (1.0 + 4.0 * log2_c.max(0.0) / eps).ceil() as u64
}

/// Minimal `ℓ_k` with `ℓ_k (N-1)/2 · ε/2 · ln 2 >= Σ_{t<k} [ℓ_t N ln(M+1) + (Σ_{i<=t} ℓ_i N + t) ln β_{m-1}]`,
/// `ℓ_1 = 1`.
pub fn minimal_ells(alphabet_max: u64, block_len: usize, log_beta_top: f64, eps: f64, blocks: usize) -> Result<Vec<u64>> {
    let n = block_len as f64;
    let per_ell = (n - 1.0) / 2.0 * eps / 2.0 * std::f64::consts::LN_2;
    let mut ells = Vec::with_capacity(blocks);
    let mut cumulative = 0.0;
    let mut rhs = 0.0;
    for k in 1..=blocks {
        if k == 1 {
            ells.push(1);
            continue;
        }
        let t = (k - 1) as f64;
        let prev = ells[k - 2] as f64;
        cumulative += prev * n;
        rhs += prev * n * ((alphabet_max + 1) as f64).ln() + (cumulative + t) * log_beta_top;
        if per_ell <= 0.0 {
            return Err(Error::InvalidParameter("the sparsity condition needs N >= 2 for more than one block".into()));
        }
        let ell = (rhs / per_ell - 1e-9).ceil().max(1.0);
        if ell > 1e15 {
            return Err(Error::InvalidParameter(format!("ℓ_{k} = {ell} is beyond any desk-scale horizon")));
        }
        ells.push(ell as u64);
    }
    Ok(ells)
}

/// What sits at a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositionKind {
    Block { offset: usize },
    Padding,
    Growth { segment: usize, i: usize },
}

/// Kind of a node, i.e. of the position after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NodeKind {
    BlockInterior,
    Padding,
    Growth { i: usize },
}

impl std::fmt::Display for NodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeKind::BlockInterior => write!(f, "block"),
            NodeKind::Padding => write!(f, "padding"),
            NodeKind::Growth { i } => write!(f, "growth{i}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CantorConfig {
    pub params: CantorParams,
    pub mode: ScheduleMode,
    pub segments: Vec<Segment>,
    /// `𝐝_j` for `j = 0..m-1`.
    pub bold_d: Vec<f64>,
    pub threshold: ThresholdReport,
    /// `[j][block word code]`: `log(β_{j-1}^N / (q_N^{2𝐝_j} (β_j β_{j-1})^{𝐝_j N}))`.
    #[serde(skip)]
    factor: Vec<Vec<f64>>,
    /// `[j][r][prefix code]`: log of the factor summed over completions of a length-`r` prefix.
    #[serde(skip)]
    completion: Vec<Vec<Vec<f64>>>,
    #[serde(skip)]
    corruption: Option<(Vec<u64>, f64)>,
}

fn block_code(digits: &[u64], alphabet_max: u64) -> usize {
    digits.iter().fold(0usize, |acc, &d| acc * alphabet_max as usize + (d - 1) as usize)
}

impl CantorConfig {
    fn assemble(params: CantorParams, mode: ScheduleMode, segments: Vec<Segment>) -> Result<Self> {
        let m = params.m();
        let n_block = params.block_len;
        let big_m = params.alphabet_max;
        let min_n = threshold_min_block_len(params.eps, params.threshold_log2);
        let threshold = ThresholdReport {
            log2_c: params.threshold_log2,
            satisfied: n_block as u64 >= min_n,
            min_block_len: min_n,
        };
        if params.enforce_threshold && !threshold.satisfied {
            return Err(Error::Threshold { n: n_block as u32, min_n });
        }
        let bold_d: Vec<f64> = (0..m)
            .map(|j| {
                let kind = Approximant::BoldD { i: j, profile: params.profile.clone() };
                finite_approximant(&kind, big_m, n_block, 1e-15, Budget::unlimited()).map(|r| r.value)
            })
            .collect::<Result<_>>()?;

        let words = big_m.pow(n_block as u32) as usize;
        let mut log_q = vec![0.0; words];
        let mut digits = vec![1u64; n_block];
        for (code, slot) in log_q.iter_mut().enumerate() {
            let mut rest = code;
            for d in digits.iter_mut().rev() {
                *d = (rest % big_m as usize) as u64 + 1;
                rest /= big_m as usize;
            }
            *slot = digits.iter().fold(LogContinuant::ROOT, |st, &d| st.push(d)).log_q;
        }
        let nf = n_block as f64;
        let mut factor = Vec::with_capacity(m);
        let mut completion = Vec::with_capacity(m);
        for (j, &d) in bold_d.iter().enumerate() {
            let (lb, lb_prev) = (params.profile.log_beta(j as isize), params.profile.log_beta(j as isize - 1));
            let f: Vec<f64> = log_q.iter().map(|lq| nf * lb_prev - d * (2.0 * lq + nf * (lb + lb_prev))).collect();
            let mut per_r = Vec::with_capacity(n_block);
            for r in 0..n_block {
                let stride = big_m.pow((n_block - r) as u32) as usize;
                let mut sums = vec![LogSum::EMPTY; words / stride];
                for (code, &x) in f.iter().enumerate() {
                    sums[code / stride].add(x);
                }
                per_r.push(sums.iter().map(LogSum::value).collect());
            }
            factor.push(f);
            completion.push(per_r);
        }
        Ok(Self { params, mode, segments, bold_d, threshold, factor, completion, corruption: None })
    }

    pub fn m(&self) -> usize {
        self.params.m()
    }

    /// `n_k` for `k = 1..K`.
    pub fn n_k(&self) -> Vec<u64> {
        self.segments.iter().map(|s| s.n_k).collect()
    }

    pub fn ells(&self) -> Vec<u64> {
        self.segments.iter().map(|s| s.ell).collect()
    }

    /// `min_j 𝐝_j / (1 + ε)`.
    pub fn tau(&self) -> f64 {
        self.bold_d.iter().copied().fold(f64::INFINITY, f64::min) / (1.0 + self.params.eps)
    }

    /// `log Σ_w factor_j(w)`, zero up to the accuracy of `𝐝_j`.
    pub fn block_normalisation(&self, j: usize) -> f64 {
        self.completion[j][0][0]
    }

    /// Scales `μ_j` of one word by `1 + delta` (detector self-test).
    pub fn with_corruption(mut self, word: Vec<u64>, delta: f64) -> Self {
        self.corruption = Some((word, delta));
        self
    }

    pub fn position_kind(&self, p: u64) -> PositionKind {
        let n = self.params.block_len as u64;
        let m = self.m() as u64;
        for (idx, seg) in self.segments.iter().enumerate() {
            if p < seg.start + seg.ell * n {
                return PositionKind::Block { offset: ((p - seg.start) % n) as usize };
            }
            if p < seg.n_k {
                return PositionKind::Padding;
            }
            if p < seg.n_k + m {
                return PositionKind::Growth { segment: idx, i: (p - seg.n_k) as usize };
            }
        }
        let tail = self.segments.last().map_or(1, |s| s.n_k + m);
        PositionKind::Block { offset: ((p - tail) % n) as usize }
    }

    pub fn node_kind(&self, depth: usize) -> NodeKind {
        match self.position_kind(depth as u64 + 1) {
            PositionKind::Block { .. } => NodeKind::BlockInterior,
            PositionKind::Padding => NodeKind::Padding,
            PositionKind::Growth { i, .. } => NodeKind::Growth { i },
        }
    }

    /// Integer digit range `[⌈c_i A_i^{n_k}⌉, ⌈2 c_i A_i^{n_k}⌉)` as an inclusive pair.
    pub fn growth_range(&self, segment: usize, i: usize) -> Result<(u64, u64)> {
        let n_k = self.segments[segment].n_k;
        let c = self.params.profile.c[i];
        let a = self.params.profile.a[i];
        let base = c * a.powi(n_k as i32);
        let snap = |x: f64| {
            let r = x.round();
            if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
                r
            } else {
                x.ceil()
            }
        };
        let (lo, hi) = (snap(base), snap(2.0 * base));
        if !(hi < 2f64.powi(53)) {
            let bits = (2.0 * base).log2().ceil() as u64;
            return Err(Error::GeometryTooLarge { bits, cap: 53 });
        }
        if hi <= lo || lo < 1.0 {
            return Err(Error::DegenerateRange { i, k: segment + 1 });
        }
        Ok((lo as u64, hi as u64 - 1))
    }

    /// Inclusive digit range allowed at position `p`.
    pub fn digit_range(&self, p: u64) -> Result<(u64, u64)> {
        match self.position_kind(p) {
            PositionKind::Block { .. } => Ok((1, self.params.alphabet_max)),
            PositionKind::Padding => Ok((2, 2)),
            PositionKind::Growth { segment, i } => self.growth_range(segment, i),
        }
    }

    /// `|D_n|`.
    pub fn level_size(&self, n: usize) -> Result<f64> {
        (1..=n as u64).try_fold(1.0, |acc, p| self.digit_range(p).map(|(v, w)| acc * (w - v + 1) as f64))
    }

    /// `log μ_j(J_n(word))` for every `j`, computed from the word alone.
    pub fn log_measure(&self, word: &[u64]) -> Result<Vec<f64>> {
        let m = self.m();
        let big_m = self.params.alphabet_max;
        let mut log_mu = vec![0.0; m];
        let mut block: Vec<u64> = Vec::with_capacity(self.params.block_len);
        for (idx, &d) in word.iter().enumerate() {
            let p = idx as u64 + 1;
            let (lo, hi) = self.digit_range(p)?;
            if d < lo || d > hi {
                return Err(Error::InvalidDigit { position: idx, digit: d as i64 });
            }
            match self.position_kind(p) {
                PositionKind::Block { .. } => {
                    block.push(d);
                    if block.len() == self.params.block_len {
                        let code = block_code(&block, big_m);
                        for (j, mu) in log_mu.iter_mut().enumerate() {
                            *mu += self.factor[j][code];
                        }
                        block.clear();
                    }
                }
                PositionKind::Padding => {}
                PositionKind::Growth { .. } => {
                    let count = (hi - lo + 1) as f64;
                    for mu in log_mu.iter_mut() {
                        *mu -= count.ln();
                    }
                }
            }
        }
        if !block.is_empty() {
            let code = block_code(&block, big_m);
            for (j, mu) in log_mu.iter_mut().enumerate() {
                *mu += self.completion[j][block.len()][code];
            }
        }
        if let Some((bad, delta)) = &self.corruption {
            if bad.as_slice() == word {
                for mu in log_mu.iter_mut() {
                    *mu += delta.ln_1p();
                }
            }
        }
        Ok(log_mu)
    }
}

/// Schedule with minimal sparse `ℓ_k` and `n_k - n_{k-1} = ℓ_k N + m`.
pub fn build_schedule(params: CantorParams, blocks: usize) -> Result<CantorConfig> {
    params.validate()?;
    if blocks == 0 {
        return Err(Error::InvalidParameter("need at least one block".into()));
    }
    let m = params.m() as u64;
    let top = params.profile.log_beta(params.m() as isize - 1);
    let ells = minimal_ells(params.alphabet_max, params.block_len, top, params.eps, blocks)?;
    build_with_ells(params, &ells).map(|mut c| {
        c.mode = ScheduleMode::Strict;
        debug_assert!(c.segments.windows(2).all(|w| w[1].n_k - w[0].n_k == w[1].ell * c.params.block_len as u64 + m));
        c
    })
}

/// Strict schedule with caller-chosen `ℓ_k`.
pub fn build_with_ells(params: CantorParams, ells: &[u64]) -> Result<CantorConfig> {
    params.validate()?;
    let n = params.block_len as u64;
    let m = params.m() as u64;
    let mut start = 1;
    let mut segments = Vec::with_capacity(ells.len());
    for &ell in ells {
        let n_k = start + ell * n;
        segments.push(Segment { start, ell, padding: 0, n_k });
        start = n_k + m;
    }
    CantorConfig::assemble(params, ScheduleMode::Strict, segments)
}

/// Arbitrary increasing `n_k`: each gap holds `ℓ_k` blocks and `N + r_k`
/// digits fixed to `2` (`0 <= r_k < N`); gaps shorter than `N` are all padding.
pub fn build_padded(params: CantorParams, n_k: &[u64]) -> Result<CantorConfig> {
    params.validate()?;
    if n_k.is_empty() {
        return Err(Error::InvalidParameter("need at least one n_k".into()));
    }
    let n = params.block_len as u64;
    let m = params.m() as u64;
    let mut start = 1;
    let mut segments = Vec::with_capacity(n_k.len());
    for (k, &nk) in n_k.iter().enumerate() {
        if nk < start {
            return Err(Error::InvalidParameter(format!(
                "n_{} = {nk} leaves no room after the previous growth block (needs >= {start})",
                k + 1
            )));
        }
        let free = nk - start;
        let ell = if free >= n { free / n - 1 } else { 0 };
        segments.push(Segment { start, ell, padding: free - ell * n, n_k: nk });
        start = nk + m;
    }
    CantorConfig::assemble(params, ScheduleMode::Padded, segments)
}

// ---------------------------------------------------------------------------
// traversal and checks

/// One basic cylinder as seen by the traversal.
#[derive(Debug, Clone)]
pub struct MeasureNode {
    pub word: Vec<u64>,
    pub kind: NodeKind,
    pub log_len_lo: f64,
    pub log_len_hi: f64,
    pub log_mu: Vec<f64>,
    /// `log |J_n|` from exact rationals.
    pub log_len_exact: f64,
}

impl MeasureNode {
    /// `word<TAB>kind<TAB>log_len_lo<TAB>log_len_hi<TAB>log_mu_0,...`
    pub fn dump_line(&self) -> String {
        let word: Vec<String> = self.word.iter().map(u64::to_string).collect();
        let mu: Vec<String> = self.log_mu.iter().map(|x| format_sig(*x, 12)).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}",
            word.join(","),
            self.kind,
            format_sig(self.log_len_lo, 12),
            format_sig(self.log_len_hi, 12),
            mu.join(",")
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checks {
    pub consistency: bool,
    pub gap: bool,
    pub lengths: bool,
    pub holder: bool,
}

impl Checks {
    pub const ALL: Checks = Checks { consistency: true, gap: true, lengths: true, holder: true };
    pub const NONE: Checks = Checks { consistency: false, gap: false, lengths: false, holder: false };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub depth: usize,
    pub consistency_tol: f64,
    pub mass_tol: f64,
    pub gap_factor: f64,
    /// First depth entering the Hölder statistics.
    pub burn_in: usize,
    pub holder_delta: f64,
    #[serde(skip)]
    pub budget: Budget,
}

impl VerifyOptions {
    pub fn new(depth: usize) -> Self {
        Self {
            depth,
            consistency_tol: 1e-10,
            mass_tol: 1e-10,
            gap_factor: DEFAULT_GAP_FACTOR,
            burn_in: (depth / 2).max(1),
            holder_delta: 0.05,
            budget: Budget::from_env(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `[n][j]`: max over parents at depth `n` of `|log Σ children μ_j - log μ_j|`.
    pub max_violation: Vec<Vec<f64>>,
    /// `[n][j]`: `log Σ_{D_n} μ_j`.
    pub level_log_mass: Vec<Vec<f64>>,
    pub worst_word: Option<Vec<u64>>,
    pub tol: f64,
    pub passed: bool,
    pub mass_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapLevel {
    pub depth: usize,
    /// Adjacent pairs across the whole level.
    pub pairs: u64,
    /// Adjacent pairs sharing a parent.
    pub sibling_pairs: u64,
    /// `min G / |J|` over both members of every adjacent pair, times `M`.
    pub min_scaled_ratio: f64,
    /// Pairs with `G < |J| / M` for one member.
    pub literal_violations: u64,
    /// Pairs with `G < |J| / (κ M)` or `G <= 0`.
    pub violations: u64,
    /// Every parent has a single child (padding); cross-parent pairs are still checked.
    pub skipped: bool,
}

/// Gap lemma check. The hard check uses `G_n >= |J_n| / (κ M)`: with digit `1`
/// allowed next, `J_n` reaches the end of `I_n` shared with the neighbour
/// whose excluded tail is only about `1/((M+1) q'^2)`, and `q' ~ (1+θ) q`
/// makes the literal `1/M` fail by up to a factor `(1+θ)^2 <= 4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub gap_factor: f64,
    pub levels: Vec<GapLevel>,
    pub literal_counterexample: Option<(Vec<u64>, Vec<u64>)>,
    pub counterexample: Option<(Vec<u64>, Vec<u64>)>,
    pub passed: bool,
    pub literal_passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthKindReport {
    pub kind: String,
    pub checked: u64,
    pub below: u64,
    pub above: u64,
    /// Smallest `log|J| - lo` and `hi - log|J|` seen.
    pub min_lower_margin: f64,
    pub min_upper_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthReport {
    pub kinds: Vec<LengthKindReport>,
    pub first_violation: Option<Vec<u64>>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderReport {
    pub j: usize,
    pub bold_d: f64,
    pub tau: f64,
    pub delta: f64,
    pub burn_in: usize,
    pub samples: u64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// Per depth from `burn_in`: `(depth, min r, median r)`.
    pub per_depth: Vec<(usize, f64, f64)>,
    pub median_passed: bool,
    /// The per-depth minima from `burn_in` on all stay above `τ - δ`.
    pub infimum_above: bool,
    pub excludes_padding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub depth: usize,
    pub nodes: u64,
    pub n_k: Vec<u64>,
    pub ells: Vec<u64>,
    pub bold_d: Vec<f64>,
    pub tau: f64,
    pub threshold: ThresholdReport,
    pub consistency: Option<ConsistencyReport>,
    pub gap: Option<GapReport>,
    pub lengths: Option<LengthReport>,
    pub holder: Vec<HolderReport>,
}

impl VerificationReport {
    /// All hard checks that ran passed.
    pub fn passed(&self) -> bool {
        self.consistency.as_ref().map_or(true, |c| c.passed && c.mass_passed)
            && self.gap.as_ref().map_or(true, |g| g.passed)
            && self.lengths.as_ref().map_or(true, |l| l.passed)
    }

    /// Name of the first failing check.
    pub fn failing_lemma(&self) -> Option<&'static str> {
        if let Some(c) = &self.consistency {
            if !c.passed {
                return Some("measure consistency");
            }
            if !c.mass_passed {
                return Some("total level mass");
            }
        }
        if self.gap.as_ref().is_some_and(|g| !g.passed) {
            return Some("gap estimation");
        }
        if self.lengths.as_ref().is_some_and(|l| !l.passed) {
            return Some("length estimation");
        }
        None
    }
}

struct PrevJ {
    word: Vec<u64>,
    left: (BigUint, BigUint),
    right: (BigUint, BigUint),
    count: u64,
    log_len: f64,
}

struct Walker<'a, 'v> {
    config: &'a CantorConfig,
    opts: &'a VerifyOptions,
    checks: Checks,
    word: Vec<u64>,
    log_q_path: Vec<f64>,
    nodes: u64,
    // consistency
    max_violation: Vec<Vec<f64>>,
    worst: (f64, Option<Vec<u64>>),
    level_mass: Vec<Vec<LogSum>>,
    // gap
    prev: Vec<Option<PrevJ>>,
    gap_levels: Vec<GapLevel>,
    literal_cx: Option<(Vec<u64>, Vec<u64>)>,
    cx: Option<(Vec<u64>, Vec<u64>)>,
    // lengths: block, padding, growth i
    lengths: Vec<LengthKindReport>,
    length_violation: Option<Vec<u64>>,
    // holder: [j][depth] ratios
    ratios: Vec<Vec<Vec<f64>>>,
    visitor: Option<&'v mut dyn FnMut(&MeasureNode) -> std::io::Result<()>>,
    io_error: Option<std::io::Error>,
}

fn cross_ge(a: &BigUint, b: &BigUint) -> bool {
    a >= b
}

impl Walker<'_, '_> {
    fn length_slot(&self, kind: NodeKind) -> usize {
        match kind {
            NodeKind::BlockInterior => 0,
            NodeKind::Padding => 1,
            NodeKind::Growth { i } => 2 + i,
        }
    }

    /// `(lo, hi)` bounds on `log |J_n|` from the length lemma for this kind.
    fn length_bounds(&self, kind: NodeKind, log_q: f64, range: (u64, u64)) -> Bounds {
        match kind {
            NodeKind::BlockInterior => Bounds(-(8f64.ln()) - 2.0 * log_q, -2.0 * log_q),
            // J = I_{n+1}(w, 2): (2q+q')(3q+2q') lies in [6q^2, 15q^2]
            NodeKind::Padding => Bounds(-(15f64.ln()) - 2.0 * log_q, -(6f64.ln()) - 2.0 * log_q),
            NodeKind::Growth { i } => {
                let depth = self.word.len();
                let segment = self.segment_of_growth(depth + 1);
                let n_k = self.config.segments[segment].n_k as f64;
                let p = &self.config.params.profile;
                let gamma = |upto: isize| -> f64 {
                    (0..=upto).map(|t| p.c[t as usize].ln() + n_k * p.a[t as usize].ln()).sum()
                };
                let anchor = self.log_q_path[depth - i];
                let lo = -(6f64.ln()) - i as f64 * 4f64.ln() - gamma(i as isize) - gamma(i as isize - 1) - 2.0 * anchor;
                let (v, w) = range;
                let count = (w - v + 1) as f64;
                let hi = count.ln() - (v as f64).ln() - ((w + 1) as f64).ln() - 2.0 * log_q;
                Bounds(lo, hi)
            }
        }
    }

    fn segment_of_growth(&self, p: usize) -> usize {
        match self.config.position_kind(p as u64) {
            PositionKind::Growth { segment, .. } => segment,
            _ => unreachable!("not a growth position"),
        }
    }

    fn visit(&mut self, conv: &Convergent) -> Result<Vec<f64>> {
        let depth = self.word.len();
        self.nodes += 1;
        if conv.bits() > self.config.params.bit_cap {
            return Err(Error::GeometryTooLarge { bits: conv.bits(), cap: self.config.params.bit_cap });
        }
        let log_mu = self.config.log_measure(&self.word)?;
        let kind = self.config.node_kind(depth);
        let range = self.config.digit_range(depth as u64 + 1)?;
        let log_q = ln_biguint(&conv.q);
        self.log_q_path.push(log_q);

        // J_n = between X(v) and X(w+1), X(a) = (a p + p') / (a q + q')
        let (v, w) = range;
        let endpoint = |a: u64| (&conv.p * a + &conv.p_prev, &conv.q * a + &conv.q_prev);
        let (x_v, x_w) = (endpoint(v), endpoint(w + 1));
        let count = w - v + 1;
        let log_len = (count as f64).ln() - ln_biguint(&x_v.1) - ln_biguint(&x_w.1);
        let bounds = self.length_bounds(kind, log_q, range);

        for (j, mu) in log_mu.iter().enumerate() {
            self.level_mass[depth][j].add(*mu);
        }

        if self.checks.lengths {
            let slot = self.length_slot(kind);
            let rep = &mut self.lengths[slot];
            rep.checked += 1;
            let lower = log_len - bounds.0;
            let upper = bounds.1 - log_len;
            rep.min_lower_margin = rep.min_lower_margin.min(lower);
            rep.min_upper_margin = rep.min_upper_margin.min(upper);
            // slack for the float evaluation of the logs
            let slack = 1e-9 * (1.0 + log_len.abs());
            if lower < -slack {
                rep.below += 1;
            }
            if upper < -slack {
                rep.above += 1;
            }
            if (lower < -slack || upper < -slack) && self.length_violation.is_none() {
                self.length_violation = Some(self.word.clone());
            }
        }

        if self.checks.holder && depth >= self.opts.burn_in && depth > 0 {
            let last_is_padding = self.config.position_kind(depth as u64) == PositionKind::Padding;
            if !last_is_padding && bounds.1 < 0.0 {
                for (j, mu) in log_mu.iter().enumerate() {
                    self.ratios[j][depth].push(mu / bounds.1);
                }
            }
        }

        if self.checks.gap && depth > 0 {
            // even depth: X decreasing in a, so X(w+1) is the left end
            let (left, right) = if depth % 2 == 0 { (x_w, x_v) } else { (x_v, x_w) };
            let current = PrevJ { word: self.word.clone(), left, right, count, log_len };
            self.compare_gap(depth, current);
        }

        if let Some(visitor) = self.visitor.as_mut() {
            let node = MeasureNode {
                word: self.word.clone(),
                kind,
                log_len_lo: bounds.0,
                log_len_hi: bounds.1,
                log_mu: log_mu.clone(),
                log_len_exact: log_len,
            };
            if let Err(e) = visitor(&node) {
                self.io_error.get_or_insert(e);
            }
        }

        if depth < self.opts.depth {
            let digits: Vec<u64> = if depth % 2 == 0 { (v..=w).rev().collect() } else { (v..=w).collect() };
            let mut sums = vec![LogSum::EMPTY; log_mu.len()];
            for a in digits {
                self.word.push(a);
                let child = self.visit(&conv.push(a))?;
                self.word.pop();
                for (s, c) in sums.iter_mut().zip(&child) {
                    s.add(*c);
                }
            }
            if self.checks.consistency {
                for (j, (s, mu)) in sums.iter().zip(&log_mu).enumerate() {
                    let diff = (s.value() - mu).abs();
                    let slot = &mut self.max_violation[depth][j];
                    if !(diff <= *slot) {
                        *slot = diff;
                    }
                    if !(diff <= self.worst.0) {
                        self.worst = (diff, Some(self.word.clone()));
                    }
                }
            }
        }
        self.log_q_path.pop();
        Ok(log_mu)
    }

    fn compare_gap(&mut self, depth: usize, current: PrevJ) {
        let big_m = self.config.params.alphabet_max;
        let level = &mut self.gap_levels[depth];
        if let Some(prev) = self.prev[depth].take() {
            level.pairs += 1;
            if prev.word[..depth - 1] == current.word[..depth - 1] {
                level.sibling_pairs += 1;
            }
            // gap = cur.left - prev.right = (a d - c b) / (b d)
            let (a, b) = (&current.left.0, &current.left.1);
            let (c, d) = (&prev.right.0, &prev.right.1);
            let num = BigInt::from(a * d) - BigInt::from(c * b);
            let gap_den = b * d;
            let (ok_pos, num) = match num.to_biguint() {
                Some(n) if n > BigUint::from(0u32) => (true, n),
                _ => (false, BigUint::from(0u32)),
            };
            // |J| = count / (den_left * den_right)
            let mut literal_ok = ok_pos;
            let mut relaxed_ok = ok_pos;
            let mut min_ratio = f64::INFINITY;
            for j in [&prev, &current] {
                let j_den = &j.left.1 * &j.right.1;
                // G * M >= |J|  <=>  num * M * j_den >= count * gap_den
                let lhs = &num * big_m * &j_den;
                let rhs = &gap_den * j.count;
                if !cross_ge(&lhs, &rhs) {
                    literal_ok = false;
                }
                let log_gap = if ok_pos { ln_biguint(&num) - ln_biguint(&gap_den) } else { f64::NEG_INFINITY };
                let ratio = (log_gap - j.log_len).exp() * big_m as f64;
                min_ratio = min_ratio.min(ratio);
                if !(ratio * self.opts.gap_factor >= 1.0 - 1e-12) {
                    relaxed_ok = false;
                }
            }
            level.min_scaled_ratio = level.min_scaled_ratio.min(min_ratio);
            if !literal_ok {
                level.literal_violations += 1;
                self.literal_cx.get_or_insert_with(|| (prev.word.clone(), current.word.clone()));
            }
            if !relaxed_ok {
                level.violations += 1;
                self.cx.get_or_insert_with(|| (prev.word.clone(), current.word.clone()));
            }
        }
        self.prev[depth] = Some(current);
    }
}

/// Lower and upper bound on `log |J|`.
#[derive(Clone, Copy)]
struct Bounds(f64, f64);

/// Walks `D_0..D_depth` in geometric order and runs the selected checks.
/// `visitor` sees every node.
pub fn verify_with(
    config: &CantorConfig,
    opts: &VerifyOptions,
    checks: Checks,
    visitor: Option<&mut dyn FnMut(&MeasureNode) -> std::io::Result<()>>,
) -> Result<VerificationReport> {
    let total: f64 = (0..=opts.depth).map(|n| config.level_size(n)).sum::<Result<f64>>()?;
    opts.budget.check(total)?;
    let m = config.m();
    let levels = opts.depth + 1;
    let mut walker = Walker {
        config,
        opts,
        checks,
        word: Vec::with_capacity(opts.depth),
        log_q_path: Vec::with_capacity(levels),
        nodes: 0,
        max_violation: vec![vec![0.0; m]; levels],
        worst: (0.0, None),
        level_mass: vec![vec![LogSum::EMPTY; m]; levels],
        prev: (0..levels).map(|_| None).collect(),
        gap_levels: (0..levels)
            .map(|depth| GapLevel {
                depth,
                pairs: 0,
                sibling_pairs: 0,
                min_scaled_ratio: f64::INFINITY,
                literal_violations: 0,
                violations: 0,
                skipped: false,
            })
            .collect(),
        literal_cx: None,
        cx: None,
        lengths: (0..2 + m)
            .map(|slot| LengthKindReport {
                kind: match slot {
                    0 => "block".into(),
                    1 => "padding".into(),
                    s => format!("growth{}", s - 2),
                },
                checked: 0,
                below: 0,
                above: 0,
                min_lower_margin: f64::INFINITY,
                min_upper_margin: f64::INFINITY,
            })
            .collect(),
        length_violation: None,
        ratios: vec![vec![Vec::new(); levels]; m],
        visitor,
        io_error: None,
    };
    walker.visit(&Convergent::initial())?;
    if let Some(e) = walker.io_error.take() {
        return Err(Error::InvalidParameter(format!("node dump failed: {e}")));
    }

    let consistency = checks.consistency.then(|| {
        // the deepest level has no children in the walk
        let max_violation: Vec<Vec<f64>> = walker.max_violation[..opts.depth].to_vec();
        let level_log_mass: Vec<Vec<f64>> =
            walker.level_mass.iter().map(|l| l.iter().map(LogSum::value).collect()).collect();
        let passed = max_violation.iter().flatten().all(|v| *v <= opts.consistency_tol);
        let mass_passed = level_log_mass.iter().flatten().all(|v| v.abs() <= opts.mass_tol);
        ConsistencyReport {
            max_violation,
            level_log_mass,
            worst_word: walker.worst.1.clone(),
            tol: opts.consistency_tol,
            passed,
            mass_passed,
        }
    });

    let gap = checks.gap.then(|| {
        let levels: Vec<GapLevel> = walker
            .gap_levels
            .iter()
            .skip(1)
            .cloned()
            .map(|mut l| {
                l.skipped = l.sibling_pairs == 0;
                l
            })
            .collect();
        let passed = levels.iter().all(|l| l.violations == 0);
        let literal_passed = levels.iter().all(|l| l.literal_violations == 0);
        GapReport {
            gap_factor: opts.gap_factor,
            levels,
            literal_counterexample: walker.literal_cx.clone(),
            counterexample: walker.cx.clone(),
            passed,
            literal_passed,
        }
    });

    let lengths = checks.lengths.then(|| {
        let kinds: Vec<LengthKindReport> = walker.lengths.iter().filter(|k| k.checked > 0).cloned().collect();
        let passed = kinds.iter().all(|k| k.below == 0 && k.above == 0);
        LengthReport { kinds, first_violation: walker.length_violation.clone(), passed }
    });

    let tau = config.tau();
    let holder = if checks.holder {
        (0..m)
            .map(|j| holder_statistics(config, j, &mut walker.ratios[j], opts.burn_in, tau, opts.holder_delta))
            .collect()
    } else {
        Vec::new()
    };

    Ok(VerificationReport {
        depth: opts.depth,
        nodes: walker.nodes,
        n_k: config.n_k(),
        ells: config.ells(),
        bold_d: config.bold_d.clone(),
        tau,
        threshold: config.threshold.clone(),
        consistency,
        gap,
        lengths,
        holder,
    })
}

fn median_of(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mid = values.len() / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

fn holder_statistics(
    config: &CantorConfig,
    j: usize,
    by_depth: &mut [Vec<f64>],
    burn_in: usize,
    tau: f64,
    delta: f64,
) -> HolderReport {
    let mut per_depth = Vec::new();
    let mut all = Vec::new();
    for (depth, values) in by_depth.iter_mut().enumerate() {
        if values.is_empty() {
            continue;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        per_depth.push((depth, min, median_of(values)));
        all.extend_from_slice(values);
    }
    let min = all.iter().copied().fold(f64::INFINITY, f64::min);
    let max = all.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let samples = all.len() as u64;
    let median = median_of(&mut all);
    HolderReport {
        j,
        bold_d: config.bold_d[j],
        tau,
        delta,
        burn_in,
        samples,
        min,
        median,
        max,
        infimum_above: per_depth.iter().all(|(_, m, _)| *m >= tau - delta),
        per_depth,
        median_passed: median >= tau - delta,
        excludes_padding: true,
    }
}

/// Every check at once.
pub fn verify(config: &CantorConfig, opts: &VerifyOptions) -> Result<VerificationReport> {
    verify_with(config, opts, Checks::ALL, None)
}

/// Sum-of-children consistency and total level mass up to `depth`.
pub fn verify_consistency(config: &CantorConfig, depth: usize) -> Result<ConsistencyReport> {
    let checks = Checks { consistency: true, ..Checks::NONE };
    let report = verify_with(config, &VerifyOptions::new(depth), checks, None)?;
    Ok(report.consistency.expect("requested"))
}

/// Gap lemma at every level up to `n`, in exact rationals.
pub fn verify_gap(config: &CantorConfig, n: usize) -> Result<GapReport> {
    let checks = Checks { gap: true, ..Checks::NONE };
    let report = verify_with(config, &VerifyOptions::new(n), checks, None)?;
    Ok(report.gap.expect("requested"))
}

/// Hölder ratios `log μ_j / log |J|` for depths `burn_in..=depth`.
pub fn holder_report(config: &CantorConfig, j: usize, burn_in: usize, depth: usize) -> Result<HolderReport> {
    if j >= config.m() {
        return Err(Error::InvalidParameter(format!("measure index {j} >= m = {}", config.m())));
    }
    let opts = VerifyOptions { burn_in, ..VerifyOptions::new(depth) };
    let checks = Checks { holder: true, ..Checks::NONE };
    let mut report = verify_with(config, &opts, checks, None)?;
    Ok(report.holder.swap_remove(j))
}

/// Streams every node of `D_n` (exactly depth `n`) to `visitor`.
pub fn expand_level(config: &CantorConfig, n: usize, visitor: &mut dyn FnMut(&MeasureNode)) -> Result<()> {
    let opts = VerifyOptions::new(n);
    let mut inner = |node: &MeasureNode| {
        if node.word.len() == n {
            visitor(node);
        }
        Ok(())
    };
    verify_with(config, &opts, Checks::NONE, Some(&mut inner)).map(|_| ())
}

/// Writes the node dump of every level up to `depth`.
pub fn write_dump(config: &CantorConfig, depth: usize, out: &mut dyn Write) -> Result<u64> {
    let mut lines = 0;
    let mut inner = |node: &MeasureNode| {
        lines += 1;
        writeln!(out, "{}", node.dump_line())
    };
    verify_with(config, &VerifyOptions::new(depth), Checks::NONE, Some(&mut inner))?;
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(a: &[f64]) -> GrowthProfile {
        GrowthProfile::with_unit_constants(a.to_vec()).unwrap()
    }

    #[test]
    fn sparsity_example() {
        // ℓ_2 (3/2)(1/2) ln 2 >= 4 ln 4 + 5 ln 4
        let ells = minimal_ells(3, 4, 4f64.ln(), 1.0, 2).unwrap();
        assert_eq!(ells, vec![1, 24]);
        assert_eq!(minimal_ells(3, 4, 4f64.ln(), 1.0, 1).unwrap(), vec![1]);
    }

    #[test]
    fn strict_layout() {
        let c = build_schedule(CantorParams::new(3, 4, profile(&[2.0, 2.0]), 1.0), 3).unwrap();
        let n_k = c.n_k();
        assert_eq!(n_k[0], 5);
        for k in 1..3 {
            assert_eq!(n_k[k] - n_k[k - 1], c.segments[k].ell * 4 + 2);
        }
        assert_eq!(c.position_kind(4), PositionKind::Block { offset: 3 });
        assert_eq!(c.position_kind(5), PositionKind::Growth { segment: 0, i: 0 });
        assert_eq!(c.position_kind(6), PositionKind::Growth { segment: 0, i: 1 });
        assert_eq!(c.position_kind(7), PositionKind::Block { offset: 0 });
    }

    #[test]
    fn padded_layout() {
        let c = build_padded(CantorParams::new(3, 2, profile(&[3.0, 2.0]), 1.0), &[5, 11, 23]).unwrap();
        let segs: Vec<(u64, u64)> = c.segments.iter().map(|s| (s.ell, s.padding)).collect();
        assert_eq!(segs, vec![(1, 2), (1, 2), (4, 2)]);
        assert_eq!(c.position_kind(3), PositionKind::Padding);
        assert_eq!(c.position_kind(4), PositionKind::Padding);
        assert_eq!(c.position_kind(5), PositionKind::Growth { segment: 0, i: 0 });
        assert!(build_padded(CantorParams::new(3, 2, profile(&[3.0, 2.0]), 1.0), &[5, 6]).is_err());
    }

    #[test]
    fn threshold_is_advisory_unless_enforced() {
        let mut p = CantorParams::new(3, 2, profile(&[3.0]), 1.0);
        let c = build_schedule(p.clone(), 1).unwrap();
        assert!(!c.threshold.satisfied);
        assert_eq!(c.threshold.min_block_len, 17);
        p.enforce_threshold = true;
        assert_eq!(build_schedule(p, 1).unwrap_err(), Error::Threshold { n: 2, min_n: 17 });
    }

    #[test]
    fn one_block_toy_uniform_split() {
        // M=2, N=1, m=1, A_0=3, n_1=1: digits [3, 6)
        let c = build_with_ells(CantorParams::new(2, 1, profile(&[3.0]), 1.0), &[0]).unwrap();
        assert_eq!(c.n_k(), vec![1]);
        assert_eq!(c.digit_range(1).unwrap(), (3, 5));
        for a in 3..=5 {
            let mu = c.log_measure(&[a]).unwrap();
            assert!((mu[0] + 3f64.ln()).abs() < 1e-15);
        }
        assert_eq!(c.log_measure(&[]).unwrap(), vec![0.0]);
    }

    #[test]
    fn block_factors_normalise() {
        let c = build_schedule(CantorParams::new(3, 3, profile(&[3.0, 2.0]), 1.0), 1).unwrap();
        for j in 0..2 {
            assert!(c.block_normalisation(j).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_growth_range() {
        // c A^n = 0.2: [1, 1) is empty
        let p = GrowthProfile::new(vec![2.0], vec![0.1]).unwrap();
        let c = build_with_ells(CantorParams::new(2, 1, p, 1.0), &[0]).unwrap();
        assert_eq!(c.digit_range(1).unwrap_err(), Error::DegenerateRange { i: 0, k: 1 });
    }

    #[test]
    fn two_letter_first_level_gap() {
        // J_1(1) = (1/2, 3/4), J_1(2) = [1/3, 3/7): gap 1/14 < |J_1(1)|/2 = 1/8
        let c = build_schedule(CantorParams::new(2, 2, profile(&[3.0]), 1.0), 1).unwrap();
        let g = verify_gap(&c, 1).unwrap();
        assert_eq!(g.levels[0].pairs, 1);
        assert!(!g.literal_passed);
        assert!(g.passed);
        assert!((g.levels[0].min_scaled_ratio - 2.0 * (1.0 / 14.0) / 0.25).abs() < 1e-12);
    }

    #[test]
    fn small_config_passes_everything() {
        let c = build_schedule(CantorParams::new(3, 2, profile(&[3.0, 2.0]), 1.0), 2).unwrap();
        let r = verify(&c, &VerifyOptions::new(6)).unwrap();
        assert!(r.passed(), "{:?}", r.failing_lemma());
        assert_eq!(r.nodes as f64, (0..=6).map(|n| c.level_size(n).unwrap()).sum::<f64>());
    }

    #[test]
    fn corrupted_leaf_is_detected() {
        let c = build_schedule(CantorParams::new(3, 2, profile(&[3.0, 2.0]), 1.0), 2)
            .unwrap()
            .with_corruption(vec![1, 2, 30], 1e-6);
        let r = verify_consistency(&c, 3).unwrap();
        assert!(!r.passed);
        assert_eq!(r.worst_word, Some(vec![1, 2]));
    }

    #[test]
    fn dump_format() {
        let c = build_schedule(CantorParams::new(2, 1, profile(&[2.0]), 1.0), 1).unwrap();
        let mut out = Vec::new();
        let lines = write_dump(&c, 1, &mut out).unwrap();
        assert_eq!(lines, 3);
        let text = String::from_utf8(out).unwrap();
        let first = text.lines().next().unwrap();
        assert_eq!(first.split('\t').count(), 5);
        assert!(first.starts_with("\tgrowth0\t") || first.starts_with("\tblock\t"));
    }
}
