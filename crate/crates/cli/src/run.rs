use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use cfdim_core::cantor::{
    build_padded, build_schedule, build_with_ells, verify_with, write_dump, CantorConfig, CantorParams, Checks,
    HolderReport, ScheduleMode, VerificationReport, VerifyOptions, PAPER_THRESHOLD_LOG2,
};
use cfdim_core::continuants::Budget;
use cfdim_core::dimension::{
    d_vector, finite_approximant, solve_family, Approximant, DimensionResult, Engine, Family, LadderValue, Rung,
    SolveOptions,
};
use cfdim_core::formulas::{classify_fm, ttw_dimension, weighted_dimension, ClassifyOptions, GrowthProfile, TtwBase};
use cfdim_core::pressure::{
    pressure_direct, pressure_spectral, Alphabet, Anchor, DepthExtrapolation, DirectOptions, Offset, Potential,
};

use crate::args::*;
use crate::report::*;
use crate::CliError;

/// Relative size of the corruption planted by `--selftest`.
const SELFTEST_DELTA: f64 = 1e-6;

/// A report and the exit code it implies.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub exit: u8,
    /// Message for the error stream when `exit != 0`.
    pub message: Option<String>,
}

impl Outcome {
    fn ok(report: Report) -> Self {
        Self { report, exit: 0, message: None }
    }
}

pub fn execute(command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Dim(args) => dim(args).map(Outcome::ok),
        Command::Pressure(args) => pressure(args).map(Outcome::ok),
        Command::Cantor(CantorCommand::Verify(args)) => cantor_verify(args),
        Command::Cantor(CantorCommand::Holder { config, j }) => cantor_holder(config, *j),
    }
}

// ---------------------------------------------------------------------------
// dim

fn extrapolation(e: ExtrapolationArg) -> DepthExtrapolation {
    match e {
        ExtrapolationArg::Plain => DepthExtrapolation::Plain,
        ExtrapolationArg::Ratio => DepthExtrapolation::Ratio,
        ExtrapolationArg::Aitken => DepthExtrapolation::Aitken,
    }
}

fn snake<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn solve_options(a: &SolveArgs) -> SolveOptions {
    let engine = match a.engine {
        EngineArg::Spectral => Engine::Spectral { grid: a.grid as usize },
        EngineArg::Direct => Engine::Direct { depth: a.n as usize, extrapolation: extrapolation(a.extrapolation) },
    };
    let (ladder, default_value) = match (a.alphabet_max, a.engine) {
        (Some(m), _) => (vec![m], LadderValue::LastRung),
        (None, EngineArg::Spectral) => (a.ladder.clone(), LadderValue::AnalyticTail),
        (None, EngineArg::Direct) => (a.ladder.clone(), LadderValue::LastRung),
    };
    let ladder_value = match a.ladder_value {
        Some(LadderValueArg::AnalyticTail) => LadderValue::AnalyticTail,
        Some(LadderValueArg::LastRung) => LadderValue::LastRung,
        Some(LadderValueArg::Richardson) => LadderValue::Richardson,
        Some(LadderValueArg::Aitken) => LadderValue::Aitken,
        None => default_value,
    };
    SolveOptions { engine, ladder, ladder_value, tol: a.tol, ..SolveOptions::default() }
}

fn solver_info(opts: &SolveOptions) -> SolverInfo {
    let (engine, grid, depth, extrapolation) = match opts.engine {
        Engine::Spectral { grid } => ("spectral", Some(grid), None, None),
        Engine::Direct { depth, extrapolation } => ("direct", None, Some(depth), Some(snake(&extrapolation))),
    };
    SolverInfo {
        engine: engine.into(),
        grid,
        depth,
        extrapolation,
        ladder: opts.ladder.clone(),
        ladder_value: snake(&opts.ladder_value),
        tol: round(opts.tol),
    }
}

fn rung_row(r: &Rung) -> RungRow {
    RungRow {
        alphabet_max: r.alphabet_max,
        value: round(r.value),
        bracket_lo: round(r.bracket.0),
        bracket_hi: round(r.bracket.1),
        residual: num(r.residual),
        boundary: r.boundary,
        iterations: r.iterations,
    }
}

fn dim_report(family: &str, parameters: &[(&str, f64)], solver: SolverInfo, r: &DimensionResult) -> DimReport {
    let exact = r.rungs.is_empty() && r.bracket.0 == r.bracket.1;
    DimReport {
        family: family.into(),
        parameters: parameters.iter().map(|&(k, v)| (k.to_string(), round(v))).collect::<BTreeMap<_, _>>(),
        solver,
        value: round(r.value),
        bracket_lo: round(r.bracket.0),
        bracket_hi: round(r.bracket.1),
        residual: num(r.residual),
        boundary: r.boundary,
        exact,
        rungs: r.rungs.iter().map(rung_row).collect(),
        weighted: None,
    }
}

fn dim(args: &DimArgs) -> Result<Report, CliError> {
    let opts = solve_options(&args.solve);
    let info = solver_info(&opts);
    let family_report = |name: &str, params: &[(&str, f64)], family: Family| -> Result<Report, CliError> {
        let r = solve_family(&family, &opts)?;
        Ok(Report::Dimension(dim_report(name, params, info.clone(), &r)))
    };
    match &args.family {
        DimFamily::Wangwu { b } => family_report("wangwu", &[("B", *b)], Family::WangWu { b: *b }),
        DimFamily::Twoparam { b1, b2 } => {
            family_report("twoparam", &[("B1", *b1), ("B2", *b2)], Family::TwoParam { b1: *b1, b2: *b2 })
        }
        DimFamily::Product { b, m } => {
            family_report("product", &[("B", *b), ("m", *m as f64)], Family::Product { b: *b, m: *m as usize })
        }
        DimFamily::Weighted { b, t0, t1 } => {
            let w = weighted_dimension(*b, *t0, *t1, &opts)?;
            let mut r = dim_report("weighted", &[("B", *b), ("t0", *t0), ("t1", *t1)], info, &w.dimension);
            r.weighted = Some(WeightedInfo { regime: round(w.regime), regime_stable: w.regime_stable });
            Ok(Report::Dimension(r))
        }
        DimFamily::Ttw { b, exponent } => {
            let (base, params): (TtwBase, Vec<(&str, f64)>) = match (b, exponent) {
                (Base::Finite(b), None) => (TtwBase::Finite { b: *b }, vec![("B", *b)]),
                (Base::Infinite, Some(e)) => (TtwBase::Infinite { exponent: *e }, vec![("b", *e)]),
                (Base::Finite(_), Some(_)) => return Err(CliError::usage("--b only applies with --B inf")),
                (Base::Infinite, None) => return Err(CliError::usage("--B inf needs the growth exponent --b")),
            };
            let r = ttw_dimension(base, &opts)?;
            Ok(Report::Dimension(dim_report("ttw", &params, info, &r)))
        }
        DimFamily::General { a, c } => general(a, c.as_deref(), &opts),
        DimFamily::Classify { b1, b2, m, boundary_tol, sample_nk } => {
            let copts = ClassifyOptions { solve: opts.clone(), boundary_rel_tol: *boundary_tol, sample_n_k: *sample_nk };
            classify(*b1, *b2, *m as usize, &copts)
        }
        DimFamily::Approx { b, b2, alphabet_max, n } => {
            let (kind, name, params) = match b2 {
                None => (Approximant::SNB { b: *b }, "approx_s", vec![("B", *b)]),
                Some(b2) => (Approximant::GNB1B2 { b1: *b, b2: *b2 }, "approx_g", vec![("B1", *b), ("B2", *b2)]),
            };
            let mut params = params;
            params.push(("M", *alphabet_max as f64));
            params.push(("n", *n as f64));
            let rung = finite_approximant(&kind, *alphabet_max, *n as usize, opts.tol, Budget::from_env())?;
            let info = SolverInfo {
                engine: "direct_newton".into(),
                grid: None,
                depth: Some(*n as usize),
                extrapolation: None,
                ladder: vec![*alphabet_max],
                ladder_value: snake(&LadderValue::LastRung),
                tol: round(opts.tol),
            };
            let result = DimensionResult {
                value: rung.value,
                bracket: rung.bracket,
                residual: rung.residual,
                boundary: rung.boundary,
                rungs: vec![rung],
                ladder_value: LadderValue::LastRung,
            };
            Ok(Report::Dimension(dim_report(name, &params, info, &result)))
        }
    }
}

fn general(a: &[f64], c: Option<&[f64]>, opts: &SolveOptions) -> Result<Report, CliError> {
    let c = c.map_or_else(|| vec![1.0; a.len()], <[f64]>::to_vec);
    if c.len() != a.len() {
        return Err(CliError::usage(format!("--c has {} entries but --A has {}", c.len(), a.len())));
    }
    let profile = GrowthProfile::new(a.to_vec(), c.clone())?;
    let dv = d_vector(&profile, opts)?;
    let d = dv
        .d
        .iter()
        .enumerate()
        .map(|(i, r)| DEntry {
            i,
            value: round(r.value),
            bracket_lo: round(r.bracket.0),
            bracket_hi: round(r.bracket.1),
            residual: num(r.residual),
            boundary: r.boundary,
            rungs: r.rungs.iter().map(rung_row).collect(),
        })
        .collect();
    Ok(Report::General(GeneralReport {
        a: a.iter().copied().map(round).collect(),
        c: c.into_iter().map(round).collect(),
        solver: solver_info(opts),
        d,
        min: round(dv.min),
        argmin: dv.argmin,
    }))
}

fn classify(b1: f64, b2: f64, m: usize, opts: &ClassifyOptions) -> Result<Report, CliError> {
    let r = classify_fm(b1, b2, m, opts)?;
    let rounded = |xs: &[f64]| xs.iter().copied().map(round).collect::<Vec<_>>();
    Ok(Report::Classify(ClassifyReport {
        b1: round(b1),
        b2: round(b2),
        m,
        case: snake(&r.case),
        dimension: r.dimension.and_then(num),
        t: round(r.t),
        theta: round(r.theta),
        b2_threshold: round(b1.powf(r.theta)),
        boundary_alternate: r.boundary_alternate.map(|(case, d)| Alternate { case: snake(&case), dimension: round(d) }),
        witness_a: r.witness.as_ref().map(|w| rounded(&w.a)),
        witness_c: r.witness.as_ref().map(|w| rounded(&w.c)),
        subset_check: r.subset_check.map(|s| SubsetRow {
            n_k: s.n_k,
            lower_product: s.lower_product,
            head_product: s.head_product,
            tail_product: s.tail_product,
            with_digit_ceilings: s.with_digit_ceilings,
            holds: s.holds(),
        }),
        solver: solver_info(&opts.solve),
    }))
}

// ---------------------------------------------------------------------------
// pressure

fn pressure(args: &PressureArgs) -> Result<Report, CliError> {
    let offset = match args.b2 {
        None => Offset::wang_wu(args.b),
        Some(b2) => Offset::two_param(args.b, b2),
    };
    let grid: Vec<f64> = match (args.s, args.sweep) {
        (Some(s), _) => vec![s],
        (None, Some(sweep)) => sweep.values(),
        (None, None) => return Err(CliError::usage("give --s or --sweep")),
    };
    let alphabet = match args.alphabet {
        AlphabetArg::Finite(m) => Alphabet::Finite(m),
        AlphabetArg::Infinite => Alphabet::Infinite { cutoff: args.cutoff },
    };
    let anchor = match args.anchor {
        AnchorArg::Continuant => Anchor::Continuant,
        AnchorArg::Left => Anchor::LeftEndpoint,
        AnchorArg::Midpoint => Anchor::Midpoint,
    };
    let direct_opts =
        DirectOptions { extrapolation: extrapolation(args.extrapolation), anchor, budget: Budget::from_env() };
    let mut rows = Vec::with_capacity(grid.len());
    for &s in &grid {
        let potential = Potential::new(s, offset.clone());
        let est = match (args.engine, alphabet) {
            (EngineArg::Spectral, _) => pressure_spectral(&potential, alphabet, args.grid as usize)?,
            (EngineArg::Direct, Alphabet::Finite(m)) => pressure_direct(&potential, m, args.n as usize, &direct_opts)?,
            (EngineArg::Direct, Alphabet::Infinite { .. }) => {
                return Err(CliError::usage("the direct engine needs a finite --M"))
            }
        };
        rows.push(PressureRow {
            s: round(s),
            value: round(est.value),
            base: round(est.base),
            offset: round(est.offset),
            error_estimate: num(est.error_estimate),
            tail_bound: num(est.tail_bound),
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].value < w[0].value);
    let spectral = args.engine == EngineArg::Spectral;
    Ok(Report::Pressure(PressureReport {
        b: round(args.b),
        b2: args.b2.map(round),
        engine: if spectral { "spectral" } else { "direct" }.into(),
        alphabet: match args.alphabet {
            AlphabetArg::Finite(m) => m.to_string(),
            AlphabetArg::Infinite => "inf".into(),
        },
        cutoff: alphabet.is_infinite().then_some(args.cutoff),
        depth: (!spectral).then_some(args.n as usize),
        grid: spectral.then_some(args.grid as usize),
        extrapolation: (!spectral).then(|| snake(&direct_opts.extrapolation)),
        anchor: (!spectral).then(|| snake(&anchor)),
        rows,
        strictly_decreasing,
    }))
}

// ---------------------------------------------------------------------------
// cantor

fn cantor_config(a: &CantorArgs) -> Result<CantorConfig, CliError> {
    if let Some(m) = a.m {
        if m as usize != a.a.len() {
            return Err(CliError::usage(format!("--m {m} but --A lists {} bases", a.a.len())));
        }
    }
    let c = a.c.clone().unwrap_or_else(|| vec![1.0; a.a.len()]);
    if c.len() != a.a.len() {
        return Err(CliError::usage(format!("--c has {} entries but --A has {}", c.len(), a.a.len())));
    }
    let profile = GrowthProfile::new(a.a.clone(), c)?;
    let mut params = CantorParams::new(a.alphabet_max, a.block_len as usize, profile, a.eps);
    params.threshold_log2 = if a.paper_threshold { PAPER_THRESHOLD_LOG2 } else { a.threshold_log2 };
    params.enforce_threshold = a.enforce_threshold;
    params.bit_cap = a.bit_cap;
    let config = match a.mode {
        ModeArg::Strict => {
            if a.nk.is_some() {
                return Err(CliError::usage("--nk needs --mode padded"));
            }
            match &a.ells {
                Some(ells) => build_with_ells(params, ells)?,
                None => build_schedule(params, a.blocks as usize)?,
            }
        }
        ModeArg::Padded => {
            if a.ells.is_some() {
                return Err(CliError::usage("--ells needs --mode strict"));
            }
            let nk = a.nk.as_ref().ok_or_else(|| CliError::usage("--mode padded needs --nk"))?;
            build_padded(params, nk)?
        }
    };
    Ok(config)
}

fn cantor_summary(config: &CantorConfig) -> CantorSummary {
    let p = &config.params;
    CantorSummary {
        alphabet_max: p.alphabet_max,
        block_len: p.block_len,
        m: config.m(),
        a: p.profile.a.iter().copied().map(round).collect(),
        c: p.profile.c.iter().copied().map(round).collect(),
        eps: round(p.eps),
        mode: match config.mode {
            ScheduleMode::Strict => "strict",
            ScheduleMode::Padded => "padded",
        }
        .into(),
        segments: config
            .segments
            .iter()
            .map(|s| SegmentRow { start: s.start, ell: s.ell, padding: s.padding, n_k: s.n_k })
            .collect(),
        bold_d: config.bold_d.iter().copied().map(round).collect(),
        tau: round(config.tau()),
        threshold_log2: round(config.threshold.log2_c),
        threshold_satisfied: config.threshold.satisfied,
        threshold_min_block_len: config.threshold.min_block_len,
    }
}

fn holder_row(h: &HolderReport) -> HolderRow {
    HolderRow {
        j: h.j,
        bold_d: round(h.bold_d),
        tau: round(h.tau),
        delta: round(h.delta),
        burn_in: h.burn_in,
        samples: h.samples,
        min: num(h.min),
        median: num(h.median),
        max: num(h.max),
        median_passed: h.median_passed,
        infimum_above: h.infimum_above,
        per_depth: h.per_depth.iter().map(|&(depth, lo, med)| DepthStat { depth, min: num(lo), median: num(med) }).collect(),
    }
}

fn verify_options(a: &CantorArgs) -> VerifyOptions {
    let mut opts = VerifyOptions::new(a.depth);
    opts.gap_factor = a.gap_factor;
    opts.holder_delta = a.delta;
    if let Some(b) = a.burn_in {
        opts.burn_in = b;
    }
    opts
}

fn level_rows(config: &CantorConfig, r: &VerificationReport) -> Result<Vec<LevelRow>, CliError> {
    let max_of = |xs: &[f64]| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..=r.depth)
        .map(|n| {
            let consistency = r.consistency.as_ref();
            let violation = consistency.and_then(|c| c.max_violation.get(n)).map(|v| max_of(v));
            let mass = consistency
                .and_then(|c| c.level_log_mass.get(n))
                .map(|v| max_of(&v.iter().map(|x| x.abs()).collect::<Vec<_>>()));
            let gap = r.gap.as_ref().and_then(|g| g.levels.iter().find(|l| l.depth == n));
            Ok(LevelRow {
                depth: n,
                kind: config.node_kind(n).to_string(),
                level_size: round(config.level_size(n)?),
                max_violation: violation.and_then(num),
                max_log_mass: mass.and_then(num),
                gap_pairs: gap.map(|g| g.pairs),
                gap_sibling_pairs: gap.map(|g| g.sibling_pairs),
                gap_min_scaled_ratio: gap.and_then(|g| num(g.min_scaled_ratio)),
                gap_violations: gap.map(|g| g.violations),
                gap_literal_violations: gap.map(|g| g.literal_violations),
            })
        })
        .collect()
}

fn cantor_verify(a: &CantorArgs) -> Result<Outcome, CliError> {
    let mut config = cantor_config(a)?;
    if a.selftest {
        // lowest admissible digit at every position: a node that always exists
        let word = (1..=a.depth as u64).map(|p| config.digit_range(p).map(|(lo, _)| lo)).collect::<Result<Vec<_>, _>>()?;
        config = config.with_corruption(word, SELFTEST_DELTA);
    }
    let opts = verify_options(a);
    let r = verify_with(&config, &opts, Checks::ALL, None)?;
    let dump = match &a.dump {
        Some(path) => {
            let depth = a.dump_depth.unwrap_or(a.depth);
            let file = File::create(path).map_err(|e| CliError::io(path, e))?;
            let mut out = BufWriter::new(file);
            let lines = write_dump(&config, depth, &mut out)?;
            out.flush().map_err(|e| CliError::io(path, e))?;
            Some(DumpInfo { path: path.display().to_string(), depth, lines })
        }
        None => None,
    };
    let holder_passed = r.holder.iter().all(|h| h.median_passed);
    let failing = r.failing_lemma().map(String::from).or_else(|| (!holder_passed).then(|| "Hölder exponent".into()));
    let consistency = r.consistency.as_ref();
    let gap = r.gap.as_ref();
    let lengths = r.lengths.as_ref();
    let report = CantorVerifyReport {
        config: cantor_summary(&config),
        depth: r.depth,
        nodes: r.nodes,
        selftest: a.selftest,
        levels: level_rows(&config, &r)?,
        consistency_passed: consistency.map_or(true, |c| c.passed),
        mass_passed: consistency.map_or(true, |c| c.mass_passed),
        gap_factor: round(opts.gap_factor),
        gap_passed: gap.map_or(true, |g| g.passed),
        gap_literal_passed: gap.map_or(true, |g| g.literal_passed),
        gap_counterexample: gap.and_then(|g| g.counterexample.clone()),
        gap_literal_counterexample: gap.and_then(|g| g.literal_counterexample.clone()),
        lengths: lengths.map_or_else(Vec::new, |l| {
            l.kinds
                .iter()
                .map(|k| LengthRow {
                    kind: k.kind.clone(),
                    checked: k.checked,
                    below: k.below,
                    above: k.above,
                    min_lower_margin: num(k.min_lower_margin),
                    min_upper_margin: num(k.min_upper_margin),
                })
                .collect()
        }),
        lengths_passed: lengths.map_or(true, |l| l.passed),
        length_first_violation: lengths.and_then(|l| l.first_violation.clone()),
        holder: r.holder.iter().map(holder_row).collect(),
        holder_passed,
        passed: failing.is_none(),
        failing_lemma: failing.clone(),
        dump,
    };
    Ok(match failing {
        None => Outcome::ok(Report::CantorVerify(report)),
        Some(lemma) => Outcome {
            report: Report::CantorVerify(report),
            exit: 4,
            message: Some(format!("verification failed: {lemma}")),
        },
    })
}

fn cantor_holder(a: &CantorArgs, j: Option<usize>) -> Result<Outcome, CliError> {
    let config = cantor_config(a)?;
    if let Some(j) = j {
        if j >= config.m() {
            return Err(CliError::usage(format!("--j {j} but there are only {} measures", config.m())));
        }
    }
    let opts = verify_options(a);
    let checks = Checks { holder: true, ..Checks::NONE };
    let r = verify_with(&config, &opts, checks, None)?;
    let holder: Vec<HolderRow> = r.holder.iter().filter(|h| j.map_or(true, |j| h.j == j)).map(holder_row).collect();
    let passed = holder.iter().all(|h| h.median_passed);
    let report = Report::CantorHolder(CantorHolderReport { config: cantor_summary(&config), depth: r.depth, holder, passed });
    Ok(if passed {
        Outcome::ok(report)
    } else {
        Outcome { report, exit: 4, message: Some("verification failed: Hölder exponent".into()) }
    })
}
