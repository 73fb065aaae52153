use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cfdim", version, about = "Hausdorff dimensions of continued-fraction limsup sets")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Plain, global = true)]
    pub format: Format,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Plain,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dimension of a potential family (root of its pressure equation).
    Dim(DimArgs),
    /// Pressure of `-s log|T'| + h(s)` at one `s` or over a sweep.
    Pressure(PressureArgs),
    /// Build and verify the Cantor subset behind the lower bound.
    #[command(subcommand)]
    Cantor(CantorCommand),
}

// ---------------------------------------------------------------------------
// dim

#[derive(Debug, Args)]
pub struct DimArgs {
    #[command(subcommand)]
    pub family: DimFamily,
    #[command(flatten)]
    pub solve: SolveArgs,
}

#[derive(Debug, Subcommand)]
pub enum DimFamily {
    /// `h(s) = -s log B`
    Wangwu {
        #[arg(long = "B", value_parser = at_least_one)]
        b: f64,
    },
    /// `h(s) = -s log B1 + (1-s) log B2`
    Twoparam {
        #[arg(long = "B1", value_parser = at_least_one)]
        b1: f64,
        #[arg(long = "B2", value_parser = at_least_one)]
        b2: f64,
    },
    /// `d_i` for a growth profile and their minimum.
    General {
        /// Growth bases `A_0,...,A_{m-1}`.
        #[arg(long = "A", value_delimiter = ',', required = true, value_parser = above_one)]
        a: Vec<f64>,
        /// Constants `c_i` (do not enter the dimension).
        #[arg(long = "c", value_delimiter = ',', value_parser = positive)]
        c: Option<Vec<f64>>,
    },
    /// `h(s) = -f_m(s) log B`
    Product {
        #[arg(long = "B", value_parser = at_least_one)]
        b: f64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
    },
    /// `h(s) = -f_{t0,t1}(s) log B`
    Weighted {
        #[arg(long = "B", value_parser = at_least_one)]
        b: f64,
        #[arg(long, value_parser = positive)]
        t0: f64,
        #[arg(long, value_parser = positive)]
        t1: f64,
    },
    /// `h(s) = -(3s-1) log B`; `--B inf --b 2` for doubly exponential growth.
    Ttw {
        #[arg(long = "B", value_parser = base_or_inf)]
        b: Base,
        /// Exponent of the doubly exponential growth when `--B inf`.
        #[arg(long = "b", value_parser = above_one)]
        exponent: Option<f64>,
    },
    /// Case and dimension of `F^m_{B1,B2}`.
    Classify {
        #[arg(long = "B1", value_parser = above_one)]
        b1: f64,
        #[arg(long = "B2", value_parser = above_one)]
        b2: f64,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(2..))]
        m: u64,
        /// Relative tolerance on `log B2` against `θ_m log B1`.
        #[arg(long, default_value_t = 1e-6, value_parser = positive)]
        boundary_tol: f64,
        /// Block start used for the witness subset check.
        #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(2..))]
        sample_nk: u32,
    },
    /// Root of a finite sum over `{1..M}^n` equal to one.
    Approx {
        #[arg(long = "B", value_parser = at_least_one)]
        b: f64,
        /// Second base of the `g` sum; omit for the `s` sum.
        #[arg(long = "B2", value_parser = at_least_one)]
        b2: Option<f64>,
        #[arg(long = "M", value_parser = clap::value_parser!(u64).range(1..))]
        alphabet_max: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Spectral,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtrapolationArg {
    Plain,
    Ratio,
    Aitken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LadderValueArg {
    AnalyticTail,
    LastRung,
    Richardson,
    Aitken,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = EngineArg::Spectral, global = true)]
    pub engine: EngineArg,
    /// Collocation grid size (spectral engine).
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(4..), global = true)]
    pub grid: u64,
    /// Depth of the direct sums.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..), global = true)]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = ExtrapolationArg::Ratio, global = true)]
    pub extrapolation: ExtrapolationArg,
    /// Finite alphabet bounds solved as rungs.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200", value_parser = clap::value_parser!(u64).range(1..), global = true)]
    pub ladder: Vec<u64>,
    /// How the reported value comes from the ladder (default: analytic tail
    /// for the spectral engine, last rung for the direct engine).
    #[arg(long, value_enum, global = true)]
    pub ladder_value: Option<LadderValueArg>,
    /// Solve for one finite alphabet `{1..M}` only.
    #[arg(long = "M", value_parser = clap::value_parser!(u64).range(1..), global = true)]
    pub alphabet_max: Option<u64>,
    #[arg(long, default_value_t = 1e-8, value_parser = positive, global = true)]
    pub tol: f64,
}

// ---------------------------------------------------------------------------
// pressure

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnchorArg {
    Continuant,
    Left,
    Midpoint,
}

#[derive(Debug, Args)]
pub struct PressureArgs {
    #[arg(long, value_parser = non_negative, required_unless_present = "sweep", conflicts_with = "sweep")]
    pub s: Option<f64>,
    /// `s:start:end:step`
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Option<Sweep>,
    #[arg(long = "B", default_value_t = 1.0, value_parser = at_least_one)]
    pub b: f64,
    /// Adds `(1-s) log B2`, with `B` playing `B1`.
    #[arg(long = "B2", value_parser = at_least_one)]
    pub b2: Option<f64>,
    #[arg(long, value_enum, default_value_t = EngineArg::Spectral)]
    pub engine: EngineArg,
    /// Alphabet bound, or `inf` for all digits.
    #[arg(long = "M", default_value = "200", value_parser = alphabet)]
    pub alphabet: AlphabetArg,
    /// Branches summed one by one before the analytic tail when `--M inf`.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(1..))]
    pub cutoff: u64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(4..))]
    pub grid: u64,
    #[arg(long, value_enum, default_value_t = ExtrapolationArg::Ratio)]
    pub extrapolation: ExtrapolationArg,
    #[arg(long, value_enum, default_value_t = AnchorArg::Continuant)]
    pub anchor: AnchorArg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphabetArg {
    Finite(u64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Base {
    Finite(f64),
    Infinite,
}

// ---------------------------------------------------------------------------
// cantor

#[derive(Debug, Subcommand)]
pub enum CantorCommand {
    /// Run every lemma check on the tree up to `--depth`.
    Verify(CantorArgs),
    /// Hölder ratios `log μ_j / log |J|` per depth.
    Holder {
        #[command(flatten)]
        config: CantorArgs,
        /// Only this measure.
        #[arg(long)]
        j: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Strict,
    Padded,
}

#[derive(Debug, Args)]
pub struct CantorArgs {
    #[arg(long = "M", value_parser = clap::value_parser!(u64).range(2..))]
    pub alphabet_max: u64,
    #[arg(long = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub block_len: u64,
    /// Number of growth digits; must match the length of `--A`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: Option<u64>,
    #[arg(long = "A", value_delimiter = ',', required = true, value_parser = above_one)]
    pub a: Vec<f64>,
    #[arg(long = "c", value_delimiter = ',', value_parser = positive)]
    pub c: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0, value_parser = positive)]
    pub eps: f64,
    /// Number of growth blocks in strict mode.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub blocks: u64,
    /// Explicit `ℓ_k` in strict mode instead of the minimal sparse choice.
    #[arg(long, value_delimiter = ',')]
    pub ells: Option<Vec<u64>>,
    #[arg(long, value_enum, default_value_t = ModeArg::Strict)]
    pub mode: ModeArg,
    /// Growth positions `n_k` in padded mode.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u64).range(1..))]
    pub nk: Option<Vec<u64>>,
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    /// `log2 C` in the block-length threshold.
    #[arg(long, default_value_t = 4.0, value_parser = non_negative)]
    pub threshold_log2: f64,
    /// Use the proof's `C = 2^100`.
    #[arg(long, conflicts_with = "threshold_log2")]
    pub paper_threshold: bool,
    /// Refuse block lengths below the threshold.
    #[arg(long)]
    pub enforce_threshold: bool,
    /// `κ` in the checked gap bound `G >= |J| / (κ M)`.
    #[arg(long, default_value_t = 4.0, value_parser = at_least_one)]
    pub gap_factor: f64,
    /// First depth in the Hölder statistics (default: depth / 2).
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Allowed shortfall `δ` of the Hölder median below `τ`.
    #[arg(long, default_value_t = 0.05, value_parser = non_negative)]
    pub delta: f64,
    /// Largest continuant size in bits for exact geometry.
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(64..))]
    pub bit_cap: u64,
    /// Corrupt one deepest node by 1e-6; the run must then fail.
    #[arg(long)]
    pub selftest: bool,
    /// Write the node dump here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Deepest level in the dump (default: `--depth`).
    #[arg(long)]
    pub dump_depth: Option<usize>,
}

// ---------------------------------------------------------------------------
// value parsers

fn number(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    number(s).and_then(|x| if x > 0.0 { Ok(x) } else { Err(format!("{x} must be > 0")) })
}

fn non_negative(s: &str) -> Result<f64, String> {
    number(s).and_then(|x| if x >= 0.0 { Ok(x) } else { Err(format!("{x} must be >= 0")) })
}

fn at_least_one(s: &str) -> Result<f64, String> {
    number(s).and_then(|x| if x >= 1.0 { Ok(x) } else { Err(format!("{x} must be >= 1")) })
}

fn above_one(s: &str) -> Result<f64, String> {
    number(s).and_then(|x| if x > 1.0 { Ok(x) } else { Err(format!("{x} must be > 1")) })
}

fn is_inf(s: &str) -> bool {
    matches!(s.trim().to_ascii_lowercase().as_str(), "inf" | "infinity")
}

fn base_or_inf(s: &str) -> Result<Base, String> {
    if is_inf(s) {
        Ok(Base::Infinite)
    } else {
        at_least_one(s).map(Base::Finite)
    }
}

fn alphabet(s: &str) -> Result<AlphabetArg, String> {
    if is_inf(s) {
        return Ok(AlphabetArg::Infinite);
    }
    match s.trim().parse::<u64>() {
        Ok(m) if m >= 1 => Ok(AlphabetArg::Finite(m)),
        _ => Err(format!("`{s}` is neither a positive integer nor `inf`")),
    }
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [var, start, end, step] = parts.as_slice() else {
        return Err(format!("`{s}` is not of the form s:start:end:step"));
    };
    if *var != "s" {
        return Err(format!("only `s` can be swept, got `{var}`"));
    }
    let sweep = Sweep { start: non_negative(start)?, end: non_negative(end)?, step: positive(step)? };
    if sweep.end < sweep.start {
        return Err("sweep end lies below its start".into());
    }
    if (sweep.end - sweep.start) / sweep.step > 1e5 {
        return Err("sweep has more than 1e5 points".into());
    }
    Ok(sweep)
}
