//! Small numerical kernels shared by the pressure and dimension modules.

/// Streaming `ln Σ exp(x_i)` that never leaves the log domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    pub const EMPTY: LogSum = LogSum { max: f64::NEG_INFINITY, scaled: 0.0 };

    #[inline]
    pub fn add(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x <= self.max {
            self.scaled += (x - self.max).exp();
        } else if x.is_finite() || x == f64::INFINITY {
            self.scaled = self.scaled * (self.max - x).exp() + 1.0;
            self.max = x;
        }
    }

    /// Commutative merge of two partial sums.
    pub fn merge(self, other: LogSum) -> LogSum {
        if other.max == f64::NEG_INFINITY {
            return self;
        }
        if self.max == f64::NEG_INFINITY {
            return other;
        }
        if self.max >= other.max {
            LogSum { max: self.max, scaled: self.scaled + other.scaled * (other.max - self.max).exp() }
        } else {
            other.merge(self)
        }
    }

    pub fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::EMPTY
    }
}

impl FromIterator<f64> for LogSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = LogSum::EMPTY;
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    xs.iter().copied().collect::<LogSum>().value()
}

// B_{2j} / (2j)!
const BERNOULLI_OVER_FACTORIAL: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
    43867.0 / 5109094217170944000.0,
    -174611.0 / 802857662698291200000.0,
];

/// Hurwitz zeta `Σ_{k>=0} (a+k)^{-σ}` for `σ > 1`, `a > 0`, by Euler–Maclaurin.
pub fn hurwitz_zeta(sigma: f64, a: f64) -> f64 {
    debug_assert!(sigma > 1.0 && a > 0.0);
    const SHIFT: f64 = 16.0;
    let mut head = 0.0;
    let mut base = a;
    while base < SHIFT {
        head += base.powf(-sigma);
        base += 1.0;
    }
    let mut tail = base.powf(1.0 - sigma) / (sigma - 1.0) + 0.5 * base.powf(-sigma);
    // rising factorial σ(σ+1)...(σ+2j-2) times base^{-σ-2j+1}
    let mut term = sigma * base.powf(-sigma - 1.0);
    let inv_sq = 1.0 / (base * base);
    for (j, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        let contribution = coef * term;
        tail += contribution;
        if contribution.abs() < 1e-18 * tail.abs() {
            break;
        }
        let k = 2.0 * j as f64;
        term *= (sigma + k + 1.0) * (sigma + k + 2.0) * inv_sq;
    }
    head + tail
}

/// `ln x` for an arbitrary-size positive integer.
pub fn ln_biguint(x: &num_bigint::BigUint) -> f64 {
    use num_traits::ToPrimitive;
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// Decimal rendering with `digits` significant digits, trailing zeros trimmed;
/// scientific notation outside `[1e-5, 1e12)`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{:.*e}", digits - 1, x);
        match s.split_once('e') {
            Some((mantissa, e)) if mantissa.contains('.') => {
                format!("{}e{e}", mantissa.trim_end_matches('0').trim_end_matches('.'))
            }
            _ => s,
        }
    }
}

/// Outcome of bisecting a nonincreasing function for its sign change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub iterations: usize,
}

impl Bisection {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Bisects a nonincreasing `f` on `[lo, hi]` given `f(lo) > 0 >= f(hi)` until
/// the bracket is narrower than `tol` or `max_iter` halvings were made.
/// Evaluation errors abort the search.
pub fn bisect_decreasing<F, E>(
    mut f: F,
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_hi: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Bisection, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut b = Bisection { lo, hi, f_lo, f_hi, iterations: 0 };
    while b.hi - b.lo > tol && b.iterations < max_iter {
        let mid = b.midpoint();
        if mid <= b.lo || mid >= b.hi {
            break;
        }
        let fm = f(mid)?;
        if fm > 0.0 {
            b.lo = mid;
            b.f_lo = fm;
        } else {
            b.hi = mid;
            b.f_hi = fm;
        }
        b.iterations += 1;
    }
    Ok(b)
}
