use std::collections::BTreeMap;

use cfdim_core::numeric::format_sig;
use serde::{Deserialize, Serialize};

use crate::args::Format;

/// Significant digits of every number the CLI prints.
pub const DIGITS: usize = 12;

/// Rounds to `DIGITS` significant digits so that every format shows the same value.
pub fn round(x: f64) -> f64 {
    if x.is_finite() {
        format_sig(x, DIGITS).parse().expect("format_sig emits a float literal")
    } else {
        x
    }
}

/// Rounded value, `None` when not finite (JSON has no infinities).
pub fn num(x: f64) -> Option<f64> {
    x.is_finite().then(|| round(x))
}

fn cell(x: f64) -> String {
    format_sig(x, DIGITS)
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(cell).unwrap_or_default()
}

fn int_cell<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(";")
}

fn float_list(xs: &[f64]) -> String {
    xs.iter().map(|&x| cell(x)).collect::<Vec<_>>().join(";")
}

// ---------------------------------------------------------------------------
// report types

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "report", rename_all = "snake_case")]
pub enum Report {
    Dimension(DimReport),
    General(GeneralReport),
    Classify(ClassifyReport),
    Pressure(PressureReport),
    CantorVerify(CantorVerifyReport),
    CantorHolder(CantorHolderReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub engine: String,
    pub grid: Option<usize>,
    pub depth: Option<usize>,
    pub extrapolation: Option<String>,
    pub ladder: Vec<u64>,
    pub ladder_value: String,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungRow {
    /// `None` for the full alphabet.
    pub alphabet_max: Option<u64>,
    pub value: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub residual: Option<f64>,
    pub boundary: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedInfo {
    /// `s/t1 - (2s-1)/t0` at the root.
    pub regime: f64,
    pub regime_stable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimReport {
    pub family: String,
    pub parameters: BTreeMap<String, f64>,
    pub solver: SolverInfo,
    pub value: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub residual: Option<f64>,
    pub boundary: bool,
    /// Closed form, no solve.
    pub exact: bool,
    pub rungs: Vec<RungRow>,
    pub weighted: Option<WeightedInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEntry {
    pub i: usize,
    pub value: f64,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub residual: Option<f64>,
    pub boundary: bool,
    pub rungs: Vec<RungRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralReport {
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub solver: SolverInfo,
    pub d: Vec<DEntry>,
    pub min: f64,
    pub argmin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternate {
    pub case: String,
    pub dimension: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRow {
    pub n_k: u32,
    pub lower_product: bool,
    pub head_product: bool,
    pub tail_product: bool,
    pub with_digit_ceilings: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub b1: f64,
    pub b2: f64,
    pub m: usize,
    pub case: String,
    pub dimension: Option<f64>,
    pub t: f64,
    pub theta: f64,
    /// `B1^θ`, where the two regimes meet.
    pub b2_threshold: f64,
    pub boundary_alternate: Option<Alternate>,
    pub witness_a: Option<Vec<f64>>,
    pub witness_c: Option<Vec<f64>>,
    pub subset_check: Option<SubsetRow>,
    pub solver: SolverInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureRow {
    pub s: f64,
    pub value: f64,
    pub base: f64,
    pub offset: f64,
    pub error_estimate: Option<f64>,
    /// `None` when the omitted branches do not converge (`s <= 1/2`).
    pub tail_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureReport {
    pub b: f64,
    pub b2: Option<f64>,
    pub engine: String,
    /// Decimal bound or `inf`.
    pub alphabet: String,
    pub cutoff: Option<u64>,
    pub depth: Option<usize>,
    pub grid: Option<usize>,
    pub extrapolation: Option<String>,
    pub anchor: Option<String>,
    pub rows: Vec<PressureRow>,
    pub strictly_decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub start: u64,
    pub ell: u64,
    pub padding: u64,
    pub n_k: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorSummary {
    pub alphabet_max: u64,
    pub block_len: usize,
    pub m: usize,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub eps: f64,
    pub mode: String,
    pub segments: Vec<SegmentRow>,
    pub bold_d: Vec<f64>,
    pub tau: f64,
    pub threshold_log2: f64,
    pub threshold_satisfied: bool,
    pub threshold_min_block_len: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub depth: usize,
    pub kind: String,
    pub level_size: f64,
    /// Max over `j` of the consistency violation at parents of this depth.
    pub max_violation: Option<f64>,
    /// Max over `j` of `|log Σ_{D_n} μ_j|`.
    pub max_log_mass: Option<f64>,
    pub gap_pairs: Option<u64>,
    pub gap_sibling_pairs: Option<u64>,
    pub gap_min_scaled_ratio: Option<f64>,
    pub gap_violations: Option<u64>,
    pub gap_literal_violations: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthRow {
    pub kind: String,
    pub checked: u64,
    pub below: u64,
    pub above: u64,
    pub min_lower_margin: Option<f64>,
    pub min_upper_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthStat {
    pub depth: usize,
    pub min: Option<f64>,
    pub median: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub j: usize,
    pub bold_d: f64,
    pub tau: f64,
    pub delta: f64,
    pub burn_in: usize,
    pub samples: u64,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
    pub median_passed: bool,
    pub infimum_above: bool,
    pub per_depth: Vec<DepthStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpInfo {
    pub path: String,
    pub depth: usize,
    pub lines: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorVerifyReport {
    pub config: CantorSummary,
    pub depth: usize,
    pub nodes: u64,
    pub selftest: bool,
    pub levels: Vec<LevelRow>,
    pub consistency_passed: bool,
    pub mass_passed: bool,
    pub gap_factor: f64,
    pub gap_passed: bool,
    pub gap_literal_passed: bool,
    pub gap_counterexample: Option<(Vec<u64>, Vec<u64>)>,
    pub gap_literal_counterexample: Option<(Vec<u64>, Vec<u64>)>,
    pub lengths: Vec<LengthRow>,
    pub lengths_passed: bool,
    pub length_first_violation: Option<Vec<u64>>,
    pub holder: Vec<HolderRow>,
    pub holder_passed: bool,
    pub passed: bool,
    pub failing_lemma: Option<String>,
    pub dump: Option<DumpInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorHolderReport {
    pub config: CantorSummary,
    pub depth: usize,
    pub holder: Vec<HolderRow>,
    pub passed: bool,
}

// ---------------------------------------------------------------------------
// rendering

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

const RUNG_HEADER: [&str; 9] =
    ["row", "i", "alphabet_max", "value", "bracket_lo", "bracket_hi", "residual", "boundary", "iterations"];

fn rung_cells(row: &str, i: Option<usize>, r: &RungRow) -> Vec<String> {
    vec![
        row.into(),
        int_cell(i),
        r.alphabet_max.map_or("inf".into(), |m| m.to_string()),
        cell(r.value),
        cell(r.bracket_lo),
        cell(r.bracket_hi),
        opt_cell(r.residual),
        r.boundary.to_string(),
        r.iterations.to_string(),
    ]
}

fn solver_summary(s: &SolverInfo) -> Vec<(&'static str, String)> {
    let mut out = vec![("engine", s.engine.clone())];
    if let Some(g) = s.grid {
        out.push(("grid", g.to_string()));
    }
    if let Some(d) = s.depth {
        out.push(("depth", d.to_string()));
    }
    if let Some(e) = &s.extrapolation {
        out.push(("extrapolation", e.clone()));
    }
    out.push(("ladder", list(&s.ladder)));
    out.push(("ladder_value", s.ladder_value.clone()));
    out.push(("tol", cell(s.tol)));
    out
}

fn cantor_summary(c: &CantorSummary) -> Vec<(&'static str, String)> {
    let n_k: Vec<u64> = c.segments.iter().map(|s| s.n_k).collect();
    let ells: Vec<u64> = c.segments.iter().map(|s| s.ell).collect();
    vec![
        ("M", c.alphabet_max.to_string()),
        ("N", c.block_len.to_string()),
        ("m", c.m.to_string()),
        ("A", float_list(&c.a)),
        ("c", float_list(&c.c)),
        ("eps", cell(c.eps)),
        ("mode", c.mode.clone()),
        ("n_k", list(&n_k)),
        ("ells", list(&ells)),
        ("bold_d", float_list(&c.bold_d)),
        ("tau", cell(c.tau)),
        (
            "threshold",
            format!(
                "log2 C = {}, smallest N = {}, {}",
                cell(c.threshold_log2),
                c.threshold_min_block_len,
                if c.threshold_satisfied { "met" } else { "not met (advisory)" }
            ),
        ),
    ]
}

fn holder_rows(holder: &[HolderRow]) -> Vec<Vec<String>> {
    holder
        .iter()
        .flat_map(|h| {
            h.per_depth
                .iter()
                .map(|d| vec![h.j.to_string(), d.depth.to_string(), opt_cell(d.min), opt_cell(d.median)])
        })
        .collect()
}

fn holder_summary(holder: &[HolderRow]) -> Vec<(&'static str, String)> {
    holder
        .iter()
        .map(|h| {
            let line = format!(
                "j={} samples={} min={} median={} max={} tau-delta={} median {}",
                h.j,
                h.samples,
                opt_cell(h.min),
                opt_cell(h.median),
                opt_cell(h.max),
                cell(h.tau - h.delta),
                if h.median_passed { "ok" } else { "FAILED" }
            );
            ("holder", line)
        })
        .collect()
}

fn pass(b: bool) -> String {
    if b { "passed" } else { "FAILED" }.into()
}

fn pair(p: &Option<(Vec<u64>, Vec<u64>)>) -> String {
    p.as_ref().map_or("none".into(), |(a, b)| format!("[{}] / [{}]", list(a), list(b)))
}

impl Report {
    fn summary(&self) -> Vec<(&'static str, String)> {
        match self {
            Report::Dimension(r) => {
                let mut out = vec![("family", r.family.clone())];
                for (k, v) in &r.parameters {
                    out.push(("parameter", format!("{k} = {}", cell(*v))));
                }
                if !r.exact {
                    out.extend(solver_summary(&r.solver));
                }
                out.push(("value", cell(r.value)));
                out.push(("bracket", format!("[{}, {}]", cell(r.bracket_lo), cell(r.bracket_hi))));
                out.push(("residual", opt_cell(r.residual)));
                out.push(("boundary", r.boundary.to_string()));
                if r.exact {
                    out.push(("exact", "closed form".into()));
                }
                if let Some(w) = &r.weighted {
                    out.push(("regime", cell(w.regime)));
                    out.push(("regime_stable", w.regime_stable.to_string()));
                }
                out
            }
            Report::General(r) => {
                let mut out = vec![("A", float_list(&r.a)), ("c", float_list(&r.c))];
                out.extend(solver_summary(&r.solver));
                out.push(("d", float_list(&r.d.iter().map(|d| d.value).collect::<Vec<_>>())));
                out.push(("min", cell(r.min)));
                out.push(("argmin", r.argmin.to_string()));
                out
            }
            Report::Classify(r) => {
                let mut out = vec![
                    ("B1", cell(r.b1)),
                    ("B2", cell(r.b2)),
                    ("m", r.m.to_string()),
                    ("case", r.case.clone()),
                    ("dimension", opt_cell(r.dimension)),
                    ("t", cell(r.t)),
                    ("theta", cell(r.theta)),
                    ("b2_threshold", cell(r.b2_threshold)),
                ];
                if let Some(a) = &r.boundary_alternate {
                    out.push(("boundary_alternate", format!("{} {}", a.case, cell(a.dimension))));
                }
                if let Some(a) = &r.witness_a {
                    out.push(("witness_a", float_list(a)));
                }
                if let Some(s) = &r.subset_check {
                    out.push(("subset_check", format!("n_k = {}: {}", s.n_k, pass(s.holds))));
                }
                out
            }
            Report::Pressure(r) => {
                let mut out = vec![("B", cell(r.b))];
                if let Some(b2) = r.b2 {
                    out.push(("B2", cell(b2)));
                }
                out.push(("engine", r.engine.clone()));
                out.push(("M", r.alphabet.clone()));
                if let Some(c) = r.cutoff {
                    out.push(("cutoff", c.to_string()));
                }
                if let Some(d) = r.depth {
                    out.push(("depth", d.to_string()));
                }
                if let Some(g) = r.grid {
                    out.push(("grid", g.to_string()));
                }
                if let Some(e) = &r.extrapolation {
                    out.push(("extrapolation", e.clone()));
                }
                if let Some(a) = &r.anchor {
                    out.push(("anchor", a.clone()));
                }
                if r.rows.len() > 1 {
                    out.push(("strictly_decreasing", r.strictly_decreasing.to_string()));
                }
                out
            }
            Report::CantorVerify(r) => {
                let mut out = cantor_summary(&r.config);
                out.push(("depth", r.depth.to_string()));
                out.push(("nodes", r.nodes.to_string()));
                if r.selftest {
                    out.push(("selftest", "one deepest node corrupted by 1e-6".into()));
                }
                out.push(("consistency", pass(r.consistency_passed)));
                out.push(("level mass", pass(r.mass_passed)));
                out.push(("gap", format!("{} (factor {})", pass(r.gap_passed), cell(r.gap_factor))));
                out.push(("gap 1/M literal", format!("{} (informational)", pass(r.gap_literal_passed))));
                out.push(("gap literal counterexample", pair(&r.gap_literal_counterexample)));
                out.push(("lengths", pass(r.lengths_passed)));
                out.extend(holder_summary(&r.holder));
                if let Some(d) = &r.dump {
                    out.push(("dump", format!("{} ({} lines to depth {})", d.path, d.lines, d.depth)));
                }
                out.push(("result", pass(r.passed)));
                if let Some(l) = &r.failing_lemma {
                    out.push(("failing", l.clone()));
                }
                out
            }
            Report::CantorHolder(r) => {
                let mut out = cantor_summary(&r.config);
                out.push(("depth", r.depth.to_string()));
                out.extend(holder_summary(&r.holder));
                out.push(("result", pass(r.passed)));
                out
            }
        }
    }

    fn table(&self) -> Table {
        match self {
            Report::Dimension(r) => {
                let mut rows: Vec<Vec<String>> = r.rungs.iter().map(|g| rung_cells("rung", None, g)).collect();
                let fin = RungRow {
                    alphabet_max: None,
                    value: r.value,
                    bracket_lo: r.bracket_lo,
                    bracket_hi: r.bracket_hi,
                    residual: r.residual,
                    boundary: r.boundary,
                    iterations: 0,
                };
                let mut row = rung_cells("final", None, &fin);
                row[8] = String::new();
                if r.solver.ladder_value == "last_rung" {
                    row[2] = int_cell(r.rungs.last().and_then(|g| g.alphabet_max));
                }
                rows.push(row);
                Table { header: RUNG_HEADER.to_vec(), rows }
            }
            Report::General(r) => {
                let mut rows = Vec::new();
                for d in &r.d {
                    rows.extend(d.rungs.iter().map(|g| rung_cells("rung", Some(d.i), g)));
                    let fin = RungRow {
                        alphabet_max: None,
                        value: d.value,
                        bracket_lo: d.bracket_lo,
                        bracket_hi: d.bracket_hi,
                        residual: d.residual,
                        boundary: d.boundary,
                        iterations: 0,
                    };
                    let mut row = rung_cells("d", Some(d.i), &fin);
                    row[8] = String::new();
                    rows.push(row);
                }
                let best = &r.d[r.argmin];
                let mut row = rows
                    .iter()
                    .rev()
                    .find(|c| c[0] == "d" && c[1] == best.i.to_string())
                    .cloned()
                    .expect("argmin row");
                row[0] = "min".into();
                rows.push(row);
                Table { header: RUNG_HEADER.to_vec(), rows }
            }
            Report::Classify(r) => Table {
                header: vec![
                    "b1",
                    "b2",
                    "m",
                    "case",
                    "dimension",
                    "t",
                    "theta",
                    "b2_threshold",
                    "alternate_case",
                    "alternate_dimension",
                    "witness_a",
                    "subset_holds",
                ],
                rows: vec![vec![
                    cell(r.b1),
                    cell(r.b2),
                    r.m.to_string(),
                    r.case.clone(),
                    opt_cell(r.dimension),
                    cell(r.t),
                    cell(r.theta),
                    cell(r.b2_threshold),
                    r.boundary_alternate.as_ref().map_or(String::new(), |a| a.case.clone()),
                    opt_cell(r.boundary_alternate.as_ref().map(|a| a.dimension)),
                    r.witness_a.as_deref().map_or(String::new(), float_list),
                    r.subset_check.as_ref().map_or(String::new(), |s| s.holds.to_string()),
                ]],
            },
            Report::Pressure(r) => Table {
                header: vec!["s", "value", "base", "offset", "error_estimate", "tail_bound"],
                rows: r
                    .rows
                    .iter()
                    .map(|p| {
                        vec![
                            cell(p.s),
                            cell(p.value),
                            cell(p.base),
                            cell(p.offset),
                            opt_cell(p.error_estimate),
                            opt_cell(p.tail_bound),
                        ]
                    })
                    .collect(),
            },
            Report::CantorVerify(r) => Table {
                header: vec![
                    "depth",
                    "kind",
                    "level_size",
                    "max_violation",
                    "max_log_mass",
                    "gap_pairs",
                    "gap_sibling_pairs",
                    "gap_min_scaled_ratio",
                    "gap_violations",
                    "gap_literal_violations",
                ],
                rows: r
                    .levels
                    .iter()
                    .map(|l| {
                        vec![
                            l.depth.to_string(),
                            l.kind.clone(),
                            cell(l.level_size),
                            opt_cell(l.max_violation),
                            opt_cell(l.max_log_mass),
                            int_cell(l.gap_pairs),
                            int_cell(l.gap_sibling_pairs),
                            opt_cell(l.gap_min_scaled_ratio),
                            int_cell(l.gap_violations),
                            int_cell(l.gap_literal_violations),
                        ]
                    })
                    .collect(),
            },
            Report::CantorHolder(r) => {
                Table { header: vec!["j", "depth", "min_ratio", "median_ratio"], rows: holder_rows(&r.holder) }
            }
        }
    }

    /// The report in the requested format, newline terminated.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
                s.push('\n');
                s
            }
            Format::Csv => {
                let table = self.table();
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&table.header).expect("in-memory write");
                for row in &table.rows {
                    w.write_record(row).expect("in-memory write");
                }
                String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
            }
            Format::Plain => {
                let mut out = String::new();
                let summary = self.summary();
                let key_width = summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                for (k, v) in &summary {
                    out.push_str(&format!("{k:<key_width$}  {v}\n"));
                }
                let table = self.table();
                if !table.rows.is_empty() {
                    out.push('\n');
                    out.push_str(&aligned(&table));
                }
                out
            }
        }
    }
}

fn aligned(table: &Table) -> String {
    let mut widths: Vec<usize> = table.header.iter().map(|h| h.len()).collect();
    for row in &table.rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        format!("{}\n", padded.join("  ").trim_end())
    };
    let mut out = line(table.header.clone());
    for row in &table.rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}
