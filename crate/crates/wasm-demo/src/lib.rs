//! Browser bindings for three operations: a pressure curve over `s`, the
//! Wang–Wu dimension against `B`, and the `F^m_{B1,B2}` classifier.
//!
//! The plain functions in [`demo`] carry the logic and are tested natively;
//! the `#[wasm_bindgen]` wrappers only convert errors.

use wasm_bindgen::prelude::*;

pub mod demo {
    use cfdim_core::dimension::{s_b, SolveOptions};
    use cfdim_core::formulas::{classify_fm, ClassifyOptions};
    use cfdim_core::pressure::{pressure_spectral, Alphabet, Offset, Potential, DEFAULT_GRID};
    use serde::Serialize;

    /// Branches summed one by one before the analytic tail.
    const CUTOFF: u64 = 100;
    /// Points a request may ask for.
    const MAX_POINTS: u32 = 400;

    fn grid(lo: f64, hi: f64, points: u32) -> Result<Vec<f64>, String> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("need a finite range with lo < hi, got [{lo}, {hi}]"));
        }
        if !(2..=MAX_POINTS).contains(&points) {
            return Err(format!("points must lie in 2..={MAX_POINTS}"));
        }
        let step = (hi - lo) / (points - 1) as f64;
        Ok((0..points).map(|k| lo + k as f64 * step).collect())
    }

    /// Spectral pressure of `-s log|T'| - s log B` on a grid of `s`.
    /// `alphabet_max = 0` means all digits; points where the sum diverges are NaN.
    pub fn pressure_curve(b: f64, alphabet_max: u32, s_min: f64, s_max: f64, points: u32) -> Result<Vec<f64>, String> {
        if !(b >= 1.0 && b.is_finite()) {
            return Err(format!("B = {b} must be a finite number >= 1"));
        }
        if s_min < 0.0 {
            return Err("s must be >= 0".into());
        }
        let alphabet = match alphabet_max {
            0 => Alphabet::Infinite { cutoff: CUTOFF },
            m => Alphabet::Finite(m as u64),
        };
        grid(s_min, s_max, points)?
            .into_iter()
            .map(|s| {
                if alphabet.is_infinite() && s <= 0.5 {
                    return Ok(f64::NAN);
                }
                pressure_spectral(&Potential::new(s, Offset::wang_wu(b)), alphabet, DEFAULT_GRID)
                    .map(|e| e.value)
                    .map_err(|e| e.to_string())
            })
            .collect()
    }

    /// `[B_0, s_{B_0}, B_1, s_{B_1}, ...]` on a logarithmic grid of `B`.
    pub fn dimension_vs_b(b_min: f64, b_max: f64, points: u32) -> Result<Vec<f64>, String> {
        if !(b_min >= 1.0) {
            return Err(format!("B = {b_min} must be >= 1"));
        }
        let opts = SolveOptions { ladder: vec![CUTOFF], tol: 1e-7, ..SolveOptions::default() };
        let mut out = Vec::with_capacity(2 * points as usize);
        for log_b in grid(b_min.ln(), b_max.ln(), points)? {
            let b = log_b.exp();
            out.push(b);
            out.push(s_b(b, &opts).map_err(|e| e.to_string())?.value);
        }
        Ok(out)
    }

    #[derive(Debug, Serialize)]
    pub struct Classification {
        pub case: String,
        pub dimension: Option<f64>,
        pub t: f64,
        pub theta: f64,
        pub b2_threshold: f64,
        pub on_boundary: bool,
    }

    /// Case and dimension of `F^m_{B1,B2}`.
    pub fn classify(b1: f64, b2: f64, m: u32) -> Result<Classification, String> {
        let opts = ClassifyOptions {
            solve: SolveOptions { ladder: vec![CUTOFF], tol: 1e-8, ..SolveOptions::default() },
            ..ClassifyOptions::default()
        };
        let r = classify_fm(b1, b2, m as usize, &opts).map_err(|e| e.to_string())?;
        let case = serde_json::to_value(r.case).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        Ok(Classification {
            case,
            dimension: r.dimension,
            t: r.t,
            theta: r.theta,
            b2_threshold: b1.powf(r.theta),
            on_boundary: r.boundary_alternate.is_some(),
        })
    }
}

#[wasm_bindgen(js_name = pressureCurve)]
pub fn pressure_curve(b: f64, alphabet_max: u32, s_min: f64, s_max: f64, points: u32) -> Result<Vec<f64>, JsError> {
    demo::pressure_curve(b, alphabet_max, s_min, s_max, points).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = dimensionVsB)]
pub fn dimension_vs_b(b_min: f64, b_max: f64, points: u32) -> Result<Vec<f64>, JsError> {
    demo::dimension_vs_b(b_min, b_max, points).map_err(|e| JsError::new(&e))
}

/// JSON object with `case`, `dimension`, `t`, `theta`, `b2_threshold`, `on_boundary`.
#[wasm_bindgen]
pub fn classify(b1: f64, b2: f64, m: u32) -> Result<String, JsError> {
    let r = demo::classify(b1, b2, m).map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&r).map_err(|e| JsError::new(&e.to_string()))
}
